import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modsum.bounds import (
    BlockData,
    _blocks,
    block_max,
    branch_objective,
    check_theorem2_witness,
    cut_set,
    default_p_grid,
    joint_entropy,
    nw_branch,
    nw_extension,
    sweep,
    theorem1,
    theorem1_L,
    theorem2,
    theorem2_inner,
    theorem2_L,
    w_range,
)
from modsum.model import BinaryMarkovSource, DomainError, binary_entropy, probdist_source
from oracles import envelope_by_hull, nw_probdist_closed_form, theorem2_convex
from sources import (
    constant_x_copy_y,
    constant_x_noisy_y,
    identical,
    independent,
    independent_uniform,
)

H13 = binary_entropy(1 / 3)


# cut-set ------------------------------------------------------------------

def test_cut_set_examples():
    assert cut_set(probdist_source(0.5)).value == pytest.approx(1.0)
    assert cut_set(identical(0.5)).value == pytest.approx(0.0, abs=1e-12)
    r = cut_set(independent_uniform())
    assert r.value == pytest.approx(2.0) and r.witness["active"] == "conditional"


def test_cut_set_xor_branch_can_be_active():
    # X = Z and Y = 1: nothing is uncertain given Z, yet X xor Y is a fair bit
    r = cut_set(BinaryMarkovSource.from_params(0.5, 1.0, 0.0, 0.0, 0.0))
    assert r.witness["active"] == "xor"
    assert r.value == pytest.approx(1.0)


# probdist single-letter bound -----------------------------------------------

def test_theorem1_L_examples():
    assert theorem1_L(0.3, 0.0) == pytest.approx(binary_entropy(0.3))
    assert theorem1_L(0.5, 1 / 3) == pytest.approx(4 / 3 - H13, abs=1e-12)
    assert theorem1_L(0.5, 0.5) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DomainError):
        theorem1_L(0.5, 0.6)
    with pytest.raises(DomainError):
        theorem1_L(0.5, -0.1)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_theorem1_L_symmetric_in_p(p, frac):
    d = frac * 2 * p * (1 - p)
    assert theorem1_L(p, d) == pytest.approx(theorem1_L(1 - p, d), abs=1e-12)


def test_theorem1_anchor_and_edges():
    r = theorem1(0.5)
    assert r.value == pytest.approx(1 + 4 / 3 - H13, abs=1e-9)
    assert r.witness["d"] == pytest.approx(1 / 3, abs=1e-6)
    assert theorem1(0.0).value == pytest.approx(1.0)
    assert theorem1(1.0).value == pytest.approx(1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 0.99))
def test_theorem1_matches_dense_scan(p):
    ds = np.linspace(0.0, 2 * p * (1 - p), 20001)
    scan = min(theorem1_L(p, float(d)) for d in ds)
    val = theorem1(p).value - 1
    assert val <= scan + 1e-12
    assert val == pytest.approx(scan, abs=1e-7)


# NW extension ---------------------------------------------------------------

def test_nw_examples():
    assert nw_extension(independent_uniform()).value == pytest.approx(2.0, abs=1e-9)
    assert nw_extension(identical(0.5)).value == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_nw_probdist_matches_closed_form(p):
    # the grid only offers a subset of posteriors, so it can only sit above the exact value
    val = nw_extension(probdist_source(p)).value
    exact = nw_probdist_closed_form(p)
    assert exact - 1e-9 <= val <= exact + 1e-4


@pytest.mark.parametrize("params", [(0.3, 0.4, 0.7, 0.2, 0.9), (0.6, 0.15, 0.55, 0.8, 0.35)])
def test_nw_branch_matches_hull_oracle(params):
    s = BinaryMarkovSource.from_params(*params)
    for src in (s, s.swapped()):
        f, _, target = branch_objective(src)
        assert nw_branch(src, 32).value == pytest.approx(envelope_by_hull(f, target, 32), abs=1e-8)


def test_nw_witness_decomposition_reproduces_target():
    s = BinaryMarkovSource.from_params(0.3, 0.4, 0.7, 0.2, 0.9)
    r = nw_extension(s, 64)
    for key, src in (("branch_U", s), ("branch_V", s.swapped())):
        f, _, target = branch_objective(src)
        dec = r.witness[key]["decomposition"]
        weights = np.array([w for w, _ in dec])
        pts = np.array([q for _, q in dec])
        assert weights.sum() == pytest.approx(1.0, abs=1e-7)
        assert weights @ pts == pytest.approx(np.array(target), abs=1e-7)
        assert float(weights @ f(pts)) == pytest.approx(r.witness[key]["value"], abs=1e-7)
        assert len(dec) <= len(target)


# general binary-source bound -----------------------------------------------

def test_block_objective_derivatives_match_finite_differences():
    blk = BlockData(0.3, 0.1, 0.12, 0.25, 0.2, 0.18)
    u2, u3, h = 0.04, 0.05, 1e-6
    g = blk.gradient(u2, u3)
    num = ((blk.objective(u2 + h, u3) - blk.objective(u2 - h, u3)) / (2 * h),
           (blk.objective(u2, u3 + h) - blk.objective(u2, u3 - h)) / (2 * h))
    assert g == pytest.approx(num, abs=1e-6)
    H = blk.hessian(u2, u3)
    num_h = (blk.gradient(u2 + h, u3)[0] - blk.gradient(u2 - h, u3)[0]) / (2 * h)
    assert H[0, 0] == pytest.approx(num_h, rel=1e-5)
    assert np.all(np.linalg.eigvalsh(H) < 0)


def test_theorem2_inner_hand_substitution():
    # probdist(0.5), d = 1/3: the inner max is 1 - d, attained at w = d'/2
    s = probdist_source(0.5)
    d = 1 / 3
    dp = d / 2
    inner = theorem2_inner(s, d)
    assert inner.value == pytest.approx(1 - d, abs=1e-6)
    bu, bv = _blocks(s, dp, dp / 2)
    assert block_max(bu)[1] + block_max(bv)[1] == pytest.approx(1 - d, abs=1e-6)
    u = bu.full(0.0, dp / 2)
    assert u == pytest.approx((0.25 - dp / 2, 0.0, dp / 2, 0.0), abs=1e-12)


def test_theorem2_L_constant_x_copy_y_at_zero():
    p = 0.3
    val, inner = theorem2_L(constant_x_copy_y(p), 0.0)
    assert inner.value == pytest.approx(0.0, abs=1e-12)
    assert val == pytest.approx(binary_entropy(p), abs=1e-12)
    assert inner.u == pytest.approx((p, 0, 0, 1 - p))
    assert inner.v == pytest.approx((p, 0, 0, 0))


@pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("frac", [0.0, 0.3, 0.7, 1.0])
def test_theorem2_L_reduces_to_theorem1_L(p, frac):
    d = frac * 2 * p * (1 - p)
    assert theorem2_L(probdist_source(p), d)[0] == pytest.approx(theorem1_L(p, d), abs=1e-6)


def test_w_range_is_within_box():
    s = BinaryMarkovSource.from_params(0.4, 0.3, 0.6, 0.7, 0.2)
    lo, hi = w_range(s, 0.05)
    assert 0.0 <= lo <= hi <= 0.05


ORACLE_SOURCES = [
    probdist_source(0.3),
    independent(0.2, 0.3, 0.6),
    BinaryMarkovSource.from_params(0.45, 0.2, 0.7, 0.65, 0.3),
    BinaryMarkovSource.from_params(0.7, 0.5, 0.1, 0.35, 0.85),
]


@pytest.mark.parametrize("source", ORACLE_SOURCES, ids=lambda s: repr(s.params()))
def test_theorem2_matches_convex_program(source):
    r = theorem2(source)
    assert r.value == pytest.approx(theorem2_convex(source), abs=1e-5)
    w = r.witness
    assert check_theorem2_witness(source, w["d"], w["w"], w["u"], w["v"]) == []
    # the witness reproduces the reported L
    val, _ = theorem2_L(source, w["d"])
    assert val == pytest.approx(w["L"], abs=1e-9)


def test_witness_checker_flags_violations():
    s = probdist_source(0.5)
    assert check_theorem2_witness(s, 0.9, 0.0, (0, 0, 0, 0), (0, 0, 0, 0))
    bad = check_theorem2_witness(s, 1 / 3, 1 / 12, (0.1, 0.0, 1 / 12, 0.0), (0, 0, 0, 1 / 6))
    assert any("u1+u2+u3" in b for b in bad)


@pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
def test_theorem2_tightness_families(p):
    assert theorem2(independent(p, 0.5, 0.5)).value == pytest.approx(2.0, abs=1e-3)
    assert theorem2(independent(p, 0.3, 0.8)).value == pytest.approx(
        binary_entropy(0.3) + binary_entropy(0.8), abs=1e-3)
    assert theorem2(constant_x_copy_y(p)).value == pytest.approx(binary_entropy(p), abs=1e-3)
    s = constant_x_noisy_y(p)
    hy = binary_entropy(p * 0.9 + (1 - p) * 0.2)
    assert theorem2(s).value == pytest.approx(hy, abs=1e-3)
    assert theorem2(identical(p)).value == pytest.approx(0.0, abs=1e-3)


@settings(max_examples=6, deadline=None)
@given(st.lists(st.floats(0.05, 0.95), min_size=5, max_size=5))
def test_bounds_nonnegative_and_capped(params):
    s = BinaryMarkovSource.from_params(*params)
    cap = joint_entropy(s) + 1e-9
    for r in (cut_set(s), theorem2(s)):
        assert -1e-9 <= r.value <= cap
    assert nw_extension(s, 48).value <= cap


# sweep --------------------------------------------------------------------

def test_sweep_rows_sorted_symmetric_and_anchored():
    rows = sweep([0.7, 0.5, 0.3])
    assert [r.p for r in rows] == [0.3, 0.5, 0.7]
    mid = rows[1]
    assert mid.cut_set == pytest.approx(1.0) and mid.theorem1 == pytest.approx(1.415037, abs=1e-6)
    for a, b in (("cut_set",) * 2, ("nw_extension",) * 2, ("theorem1",) * 2):
        assert getattr(rows[0], a) == pytest.approx(getattr(rows[2], b), abs=1e-6)
    assert default_p_grid()[:2] == [0.01, 0.02] and len(default_p_grid()) == 99
    with pytest.raises(DomainError):
        sweep([0.0])
