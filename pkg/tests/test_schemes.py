import itertools
import math

import pytest
from hypothesis import given, settings

from modsum.bounds import theorem1, theorem2
from modsum.model import BinaryMarkovSource, binary_entropy, entropy_of, joint_pmf, probdist_source
from modsum.schemes import (
    Scheme,
    SchemeError,
    _canonical_key,
    _permuted,
    _swap_permutations,
    check_zero_error,
    conditionally_injective,
    constant_scheme,
    coupling_report,
    encoder_points,
    enumerate_schemes,
    huffman_expected_length,
    identity_scheme,
    message_entropy_sum,
    min_sum_message_entropy,
)
from sources import identical, independent_uniform, sources


def set_partitions(items):
    """Every set partition of ``items``, as label tuples (independent of the package)."""
    items = list(items)
    if not items:
        yield ()
        return
    for rest in set_partitions(items[1:]):
        used = max(rest, default=-1) + 1
        for b in range(used + 1):
            yield (b,) + rest


def brute_force_valid(source, n):
    """All zero-error partition pairs, checked straight from the definition."""
    pmf = joint_pmf(source, n)
    pts1, pts2 = encoder_points(pmf)
    support = pmf.support()
    out = []
    for lab1 in set(map(tuple, set_partitions(pts1))):
        e1 = dict(zip(pts1, lab1))
        for lab2 in set(map(tuple, set_partitions(pts2))):
            e2 = dict(zip(pts2, lab2))
            ok = all(
                (x ^ y) == (x2 ^ y2)
                for (x, y, z), (x2, y2, z2) in itertools.combinations(support, 2)
                if e1[(x, z)] == e1[(x2, z2)] and e2[(y, z)] == e2[(y2, z2)]
            )
            if ok:
                out.append(Scheme(n, pts1, lab1, pts2, lab2))
    return out


def _keys(schemes):
    return sorted((s.labels1, s.labels2) for s in schemes)


MERGED = Scheme.from_maps(1, {(0, 0): 0, (1, 0): 1, (1, 1): 1}, {(1, 0): 0, (1, 1): 0, (0, 1): 1})


def test_check_zero_error_examples():
    pmf = joint_pmf(probdist_source(0.5))
    assert check_zero_error(identity_scheme(pmf, 1), pmf)
    assert check_zero_error(MERGED, pmf)
    broken = Scheme.from_maps(1, {(0, 0): 0, (1, 0): 1, (1, 1): 1}, {(1, 0): 0, (0, 1): 0, (1, 1): 1})
    assert not check_zero_error(broken, pmf)
    partial = Scheme.from_maps(1, {(0, 0): 0, (1, 0): 1}, {(1, 0): 0, (0, 1): 0, (1, 1): 1})
    with pytest.raises(SchemeError):
        check_zero_error(partial, pmf)


def test_scheme_labels_are_canonical():
    a = Scheme.from_maps(1, {(0, 0): 5, (1, 0): 2}, {(0, 0): 1})
    b = Scheme.from_maps(1, {(0, 0): 0, (1, 0): 1}, {(0, 0): 0})
    assert a == b and a.sizes == (2, 1)
    assert a.blocks() == ([[(0, 0)], [(1, 0)]], [[(0, 0)]])


def test_probdist_count_matches_brute_force():
    s = probdist_source(0.5)
    found = list(enumerate_schemes(s, 1))
    oracle = brute_force_valid(s, 1)
    assert len(oracle) == 7
    assert _keys(found) == _keys(oracle)


@settings(max_examples=20, deadline=None)
@given(sources())
def test_enumeration_equals_brute_force_n1(s):
    en = enumerate_schemes(s, 1)
    found = list(en)
    assert en.exhaustive
    assert _keys(found) == _keys(brute_force_valid(s, 1))
    assert all(conditionally_injective(x) for x in found)


def test_enumeration_n2_identical_source_matches_brute_force():
    s = identical(0.4)
    oracle = brute_force_valid(s, 2)
    assert len(oracle) == 15 * 15  # x xor y vanishes, so every partition pair works
    full = list(enumerate_schemes(s, 2, symmetry=False))
    assert _keys(full) == _keys(oracle)


@pytest.mark.parametrize("source", [identical(0.4), BinaryMarkovSource.from_params(0.5, 1.0, 1.0, 1.0, 0.0)])
def test_symmetry_reduction_keeps_one_scheme_per_orbit(source):
    perms = _swap_permutations(2)
    full = list(enumerate_schemes(source, 2, symmetry=False))
    orbits = {min([_canonical_key(s)] + [_canonical_key(_permuted(s, pm)) for pm in perms]) for s in full}
    reduced = list(enumerate_schemes(source, 2, symmetry=True))
    assert len(reduced) == len(orbits)
    assert {_canonical_key(s) for s in reduced} == orbits


def test_enumeration_special_cases():
    assert len(list(enumerate_schemes(independent_uniform(), 1))) == 1
    same = list(enumerate_schemes(identical(0.5), 1))
    pmf = joint_pmf(identical(0.5))
    assert constant_scheme(pmf, 1) in same
    with pytest.raises(ValueError):
        enumerate_schemes(probdist_source(0.5), 3)


def test_budget_exhaustion_is_reported():
    en = enumerate_schemes(probdist_source(0.5), 2, max_nodes=50)
    list(en)
    assert en.exhaustive is False


def test_coupling_report_merged_scheme():
    s = probdist_source(0.5)
    rep = coupling_report(MERGED, joint_pmf(s), s)
    assert rep.d_avg == pytest.approx(0.25, abs=1e-15)
    assert rep.g_table[(0, 1)] == 0 and rep.g_table[(1, 0)] == 0
    assert rep.lemma1_lhs == pytest.approx(1.0, abs=1e-12) and rep.lemma1_rhs == pytest.approx(1.0)
    assert rep.all_hold
    assert rep.message_entropy_sum == pytest.approx(2 * binary_entropy(0.25), abs=1e-12)


@pytest.mark.parametrize("p", [0.1, 0.5, 0.77])
def test_constant_scheme_attains_coupling_bound(p):
    s = identical(p)
    pmf = joint_pmf(s)
    rep = coupling_report(constant_scheme(pmf, 1), pmf, s)
    assert abs(rep.d_avg - 2 * p * (1 - p)) <= 1e-12
    assert rep.lemma3_holds


def test_identity_scheme_has_zero_distance():
    s = BinaryMarkovSource.from_params(0.3, 0.2, 0.6, 0.7, 0.4)
    pmf = joint_pmf(s, 2)
    rep = coupling_report(identity_scheme(pmf, 2), pmf, s)
    assert rep.d_avg == 0.0 and rep.all_hold


def test_coupling_report_rejects_invalid_scheme():
    s = probdist_source(0.5)
    pmf = joint_pmf(s)
    with pytest.raises(SchemeError):
        coupling_report(constant_scheme(pmf, 1), pmf, s)


@settings(max_examples=20, deadline=None)
@given(sources())
def test_lemmas_hold_on_every_scheme_n1(s):
    pmf = joint_pmf(s)
    for scheme in enumerate_schemes(s, 1):
        rep = coupling_report(scheme, pmf, s)
        assert abs(rep.lemma1_lhs - rep.lemma1_rhs) <= 1e-9
        assert rep.lemma2_holds
        assert rep.d_avg <= 2 * s.p * (1 - s.p) + 1e-12
        assert 0.0 <= rep.d_avg <= 1.0


def test_lemmas_hold_at_n2_small_budget():
    s = BinaryMarkovSource.from_params(0.35, 0.5, 0.0, 0.0, 0.5)
    pmf = joint_pmf(s, 2)
    count = 0
    for scheme in enumerate_schemes(s, 2, max_nodes=20000):
        assert coupling_report(scheme, pmf, s).all_hold
        count += 1
    assert count > 0


def test_coarsening_never_raises_entropy():
    s = probdist_source(0.3)
    pmf = joint_pmf(s)
    schemes = list(enumerate_schemes(s, 1))
    for a, b in itertools.permutations(schemes, 2):
        if b.refines(a):
            assert message_entropy_sum(b, pmf) >= message_entropy_sum(a, pmf) - 1e-12
    # every refinement of a valid scheme is valid
    for a in schemes:
        for lab1 in set_partitions(a.points1):
            cand = Scheme(1, a.points1, lab1, a.points2, a.labels2)
            if cand.refines(a):
                assert check_zero_error(cand, pmf)


def test_min_sum_message_entropy_examples():
    r = min_sum_message_entropy(probdist_source(0.5), 1)
    assert r.exhaustive and r.schemes_enumerated == 7
    assert r.min_entropy_sum == pytest.approx(2 * binary_entropy(0.25), abs=1e-12)
    assert r.argmin == MERGED or message_entropy_sum(r.argmin, joint_pmf(probdist_source(0.5))) == pytest.approx(
        r.min_entropy_sum)
    assert min_sum_message_entropy(identical(0.5), 1).min_entropy_sum == pytest.approx(0.0, abs=1e-15)
    assert min_sum_message_entropy(independent_uniform(), 1).min_entropy_sum == pytest.approx(2.0)


def test_min_sum_matches_brute_force_minimum():
    s = probdist_source(0.5)
    pmf = joint_pmf(s)
    oracle = min(message_entropy_sum(x, pmf) for x in brute_force_valid(s, 1))
    assert min_sum_message_entropy(s, 1).min_entropy_sum == pytest.approx(oracle, abs=1e-15)


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
def test_one_shot_optimum_dominates_converse(p):
    s = probdist_source(p)
    one_shot = min_sum_message_entropy(s, 1).min_entropy_sum
    assert one_shot >= theorem1(p).value - 1e-3
    assert one_shot >= theorem2(s).value - 1e-3


def test_huffman_examples():
    assert huffman_expected_length([0.5, 0.5]) == pytest.approx(1.0)
    assert huffman_expected_length([0.75, 0.25]) == pytest.approx(1.0)
    assert huffman_expected_length([0.25] * 4) == pytest.approx(2.0)
    assert huffman_expected_length([1.0]) == 0.0
    assert huffman_expected_length([0.5, 0.25, 0.25]) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        huffman_expected_length([])


@settings(max_examples=50)
@given(sources())
def test_huffman_within_one_bit_of_entropy(s):
    masses = joint_pmf(s).table.ravel()
    masses = masses[masses > 1e-12]
    h = entropy_of(masses)
    length = huffman_expected_length(masses)
    assert h - 1e-12 <= length < h + 1 + 1e-12
