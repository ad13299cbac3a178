"""Sum-rate lower bounds for computing X xor Y with common observation Z.

Four converse bounds are evaluated for a :class:`BinaryMarkovSource`:

``cut_set``
    max(H(X|Z) + H(Y|Z), H(X xor Y)).
``nw_extension``
    H(X|Z) + H(Y|Z) + H(Z) plus the larger of two auxiliary-variable
    minimizations, each evaluated as a lower convex envelope.
``theorem1``
    1 + min_d L(p, d) for the special source :func:`probdist_source`.
``theorem2``
    H(X|Z) + H(Y|Z) + min_d L(p, d) for any binary source, where L contains
    an inner maximization over (w, u, v).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .model import (
    MASS_TOL,
    BinaryMarkovSource,
    DomainError,
    binary_entropy,
    probdist_source,
    scaled_entropy,
    xor_entropy,
)
from .optim import (
    DEFAULT_ENVELOPE_RESOLUTION,
    DEFAULT_GRID_1D,
    EnvelopeProblem,
    EnvelopeResult,
    InfeasibleRegion,
    Interval,
    Polytope2D,
    envelope_by_channels,
    lower_convex_envelope,
    maximize_concave_2d,
    minimize_1d,
)

LN2 = math.log(2.0)
WITNESS_TOL = 1e-7
SNAP_TOL = 1e-8

# theorem2 solver defaults; L is convex in d and the inner value concave in w
THEOREM2_D_GRID = 64
THEOREM2_W_GRID = 8


@dataclass(frozen=True)
class BoundValue:
    kind: str
    value: float
    witness: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class SweepRow:
    p: float
    cut_set: float
    nw_extension: float
    theorem1: float
    theorem2: Optional[float] = None


class BoundConfigurationError(RuntimeError):
    """A bound evaluator found no feasible point where one must exist."""


def joint_entropy(source: BinaryMarkovSource) -> float:
    """H(X, Y, Z)."""
    return binary_entropy(source.p) + source.cond_entropy_x() + source.cond_entropy_y()


# ---------------------------------------------------------------------------
# cut-set


def cut_set(source: BinaryMarkovSource) -> BoundValue:
    cond = source.cond_entropy_x() + source.cond_entropy_y()
    xor = xor_entropy(source)
    active = "conditional" if cond >= xor else "xor"
    return BoundValue("cut_set", max(cond, xor), {"active": active, "conditional": cond, "xor": xor})


# ---------------------------------------------------------------------------
# single-letter bound for the probdist family


def _check_d(p: float, d: float) -> float:
    dmax = 2.0 * p * (1.0 - p)
    if not (-MASS_TOL <= d <= dmax + MASS_TOL):
        raise DomainError(f"d={d!r} outside [0, 2p(1-p)] = [0, {dmax!r}]")
    return min(max(d, 0.0), dmax)


def theorem1_L(p: float, d: float) -> float:
    """L(p, d) = h(p) + d - p h(d/2p) - (1-p) h(d/2(1-p))."""
    d = _check_d(p, d)
    return binary_entropy(p) + d - scaled_entropy(p, d / 2) - scaled_entropy(1.0 - p, d / 2)


def theorem1(p: float, grid: int = DEFAULT_GRID_1D, tol: float = 1e-10) -> BoundValue:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p={p!r} is not a probability")
    d, val = minimize_1d(lambda d: theorem1_L(p, d), Interval(0.0, 2.0 * p * (1.0 - p)), tol=tol, grid=grid)
    return BoundValue("theorem1", 1.0 + val, {"d": d, "L": val})


# ---------------------------------------------------------------------------
# auxiliary-variable envelope bound


def _row_entropy(m: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(m > 0, -m * np.log2(np.where(m > 0, m, 1.0)), 0.0)
    return t.sum(axis=1)


def _branch_atoms(source: BinaryMarkovSource) -> tuple[list[tuple[int, int]], np.ndarray]:
    atoms, mass = [], []
    for x in (0, 1):
        for z in (0, 1):
            m = source.pz(z) * source.px_given_z(x, z)
            if m > MASS_TOL:
                atoms.append((x, z))
                mass.append(m)
    mass = np.array(mass)
    return atoms, mass / mass.sum()


def branch_objective(source: BinaryMarkovSource):
    """f(q) = H_q(X xor Y) - H_q(Y, Z) for q on the support of (X, Z).

    Y is drawn from the source's P(Y|Z). Returns ``(f, atoms, target)`` with
    f vectorized over rows of q.
    """
    atoms, target = _branch_atoms(source)
    same = np.array([source.py_given_z(x, z) for x, z in atoms])  # P(Y = x | z): xor = 0
    # P(Y=y, Z=z) = sum over atoms with that z of q * P(y|z)
    yz = np.zeros((len(atoms), 4))
    for j, (x, z) in enumerate(atoms):
        for y in (0, 1):
            yz[j, 2 * y + z] = source.py_given_z(y, z)

    def f(q: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(q)
        p0 = np.clip(q @ same, 0.0, 1.0)
        hx = _row_entropy(np.stack([p0, 1.0 - p0], axis=1))
        return hx - _row_entropy(q @ yz)

    return f, atoms, tuple(target)


def nw_branch(source: BinaryMarkovSource, resolution: int = DEFAULT_ENVELOPE_RESOLUTION,
              method: str = "lp", **kwargs) -> EnvelopeResult:
    """min over U - (X,Z) - Y of H(X xor Y | U) - H(Y, Z | U)."""
    f, atoms, target = branch_objective(source)
    if method == "lp":
        return lower_convex_envelope(EnvelopeProblem(f, target, resolution, tuple(map(str, atoms))))
    if method == "channels":
        return envelope_by_channels(f, target, **kwargs)
    raise ValueError(f"unknown envelope method {method!r}")


def nw_extension(source: BinaryMarkovSource, resolution: int = DEFAULT_ENVELOPE_RESOLUTION,
                 method: str = "lp") -> BoundValue:
    base = source.cond_entropy_x() + source.cond_entropy_y() + binary_entropy(source.p)
    bu = nw_branch(source, resolution, method)
    bv = nw_branch(source.swapped(), resolution, method)
    active = "U" if bu.value >= bv.value else "V"
    witness = {
        "active": active,
        "branch_U": {"value": bu.value, "atoms": [list(a) for a in _branch_atoms(source)[0]],
                     "decomposition": [[w, list(q)] for w, q in bu.witness]},
        "branch_V": {"value": bv.value, "atoms": [list(a) for a in _branch_atoms(source.swapped())[0]],
                     "decomposition": [[w, list(q)] for w, q in bv.witness]},
    }
    return BoundValue("nw_extension", base + max(bu.value, bv.value), witness)


# ---------------------------------------------------------------------------
# general binary-source bound


def _persp(c: float, x: float) -> float:
    # polygon vertices carry FEAS_TOL slack; snap masses back into [0, c]
    if -SNAP_TOL <= x <= c + SNAP_TOL:
        x = min(max(x, 0.0), max(c, 0.0))
    return scaled_entropy(max(c, 0.0), x)


@dataclass(frozen=True)
class BlockData:
    """One of the u / v blocks for fixed (d', w).

    Masses of the four cells: c1 = p - d', c2 = w, c3 = d' - w, c4 = 1-p-d'.
    Equalities: u1 + u2 + u3 = a and u2 - u3 + u4 = b.
    """

    c1: float
    c2: float
    c3: float
    c4: float
    a: float
    b: float

    def full(self, u2: float, u3: float) -> tuple[float, float, float, float]:
        return (self.a - u2 - u3, u2, u3, self.b - u2 + u3)

    def region(self) -> Polytope2D:
        return Polytope2D((
            (-1, 0, 0), (1, 0, self.c2),
            (0, -1, 0), (0, 1, self.c3),
            (1, 1, self.a), (-1, -1, self.c1 - self.a),
            (1, -1, self.b), (-1, 1, self.c4 - self.b),
        ))

    def objective(self, u2: float, u3: float) -> float:
        u1, _, _, u4 = self.full(u2, u3)
        return (_persp(self.c1, u1) + _persp(self.c4, u4)
                + 2 * _persp(self.c2, u2) + 2 * _persp(self.c3, u3))

    def _terms(self, u2, u3):
        # (coefficient, mass, d mass/du2, d mass/du3, weight)
        u1, _, _, u4 = self.full(u2, u3)
        return ((self.c1, u1, -1, -1, 1), (self.c2, u2, 1, 0, 2), (self.c3, u3, 0, 1, 2), (self.c4, u4, -1, 1, 1))

    def gradient(self, u2: float, u3: float) -> tuple[float, float]:
        g2 = g3 = 0.0
        for c, x, a2, a3, k in self._terms(u2, u3):
            if c <= 0:
                continue
            s = k * math.log2((c - x) / x)
            g2 += a2 * s
            g3 += a3 * s
        return g2, g3

    def hessian(self, u2: float, u3: float) -> np.ndarray:
        H = np.zeros((2, 2))
        for c, x, a2, a3, k in self._terms(u2, u3):
            if c <= 0:
                continue
            curv = k * c / (x * (c - x) * LN2)
            H -= curv * np.array([[a2 * a2, a2 * a3], [a2 * a3, a3 * a3]])
        return H


def _blocks(source: BinaryMarkovSource, dp: float, w: float) -> tuple[BlockData, BlockData]:
    p, pb = source.p, 1.0 - source.p
    blocks = []
    for cond in (source.x_given_z, source.y_given_z):
        blocks.append(BlockData(p - dp, w, dp - w, pb - dp, p * cond[0], pb * cond[1] + w - dp))
    return blocks[0], blocks[1]


def block_max(block: BlockData, tol: float = 1e-12) -> tuple[tuple[float, float, float, float], float]:
    """Maximize a block objective; raises InfeasibleRegion if the block is empty.

    The objective has infinite slope into every facet of the region, so the
    maximizer of a full-dimensional region is interior and Newton applies.
    """
    (u2, u3), val = maximize_concave_2d(block.objective, block.region(), tol=tol,
                                        grad=block.gradient, hess=block.hessian)
    return block.full(u2, u3), val


def w_range(source: BinaryMarkovSource, dp: float) -> Optional[tuple[float, float]]:
    """Interval of w in [0, d'] for which both blocks are feasible, or None."""
    p, pb = source.p, 1.0 - source.p
    # variables (w, u2, u3, v2, v3)
    rows, rhs = [], []
    for k, cond in enumerate((source.x_given_z, source.y_given_z)):
        i2, i3 = 1 + 2 * k, 2 + 2 * k
        a = p * cond[0]
        b0 = pb * cond[1] - dp  # b = b0 + w

        def row(cw, c2, c3):
            r = [0.0] * 5
            r[0], r[i2], r[i3] = cw, c2, c3
            return r

        cons = [
            (row(-1, 1, 0), 0.0),           # u2 <= w
            (row(1, 0, 1), dp),             # u3 <= d' - w
            (row(0, 1, 1), a),              # u1 >= 0
            (row(0, -1, -1), p - dp - a),   # u1 <= p - d'
            (row(-1, 1, -1), b0),           # u4 >= 0
            (row(1, -1, 1), pb - dp - b0),  # u4 <= 1-p-d'
        ]
        for r, c in cons:
            rows.append(r)
            rhs.append(c)
    bounds = [(0.0, dp)] + [(0.0, None)] * 4
    lo = linprog([1, 0, 0, 0, 0], A_ub=rows, b_ub=rhs, bounds=bounds, method="highs")
    if lo.status != 0:
        return None
    hi = linprog([-1, 0, 0, 0, 0], A_ub=rows, b_ub=rhs, bounds=bounds, method="highs")
    wlo, whi = float(lo.x[0]), float(hi.x[0])
    return max(0.0, min(wlo, whi)), min(dp, max(wlo, whi))


@dataclass(frozen=True)
class InnerMax:
    value: float
    w: float
    u: tuple[float, float, float, float]
    v: tuple[float, float, float, float]


def theorem2_inner(source: BinaryMarkovSource, d: float, w_grid: int = THEOREM2_W_GRID,
                   tol: float = 1e-10) -> InnerMax:
    """max over (w, u, v) of the bracketed term in L; raises InfeasibleRegion."""
    d = _check_d(source.p, d)
    dp = d / 2
    rng = w_range(source, dp)
    if rng is None:
        raise InfeasibleRegion(f"no feasible (w, u, v) at d={d!r}")

    def neg_total(w: float) -> float:
        try:
            bu, bv = _blocks(source, dp, w)
            return -(block_max(bu)[1] + block_max(bv)[1])
        except InfeasibleRegion:
            return math.inf

    w, neg = minimize_1d(neg_total, Interval(*rng), tol=tol, grid=w_grid, refine=1)
    if not math.isfinite(neg):
        raise InfeasibleRegion(f"no feasible (w, u, v) at d={d!r}")
    bu, bv = _blocks(source, dp, w)
    (u, fu), (v, fv) = block_max(bu), block_max(bv)
    return InnerMax(fu + fv, w, u, v)


def theorem2_L(source: BinaryMarkovSource, d: float, w_grid: int = THEOREM2_W_GRID,
               tol: float = 1e-10) -> tuple[float, InnerMax]:
    """L(p, d) for a general source together with the inner maximizer."""
    d = _check_d(source.p, d)
    inner = theorem2_inner(source, d, w_grid, tol)
    dp = d / 2
    val = (joint_entropy(source) - scaled_entropy(source.p, dp)
           - scaled_entropy(1.0 - source.p, dp) - inner.value)
    return val, inner


def check_theorem2_witness(source: BinaryMarkovSource, d: float, w: float, u: Sequence[float],
                           v: Sequence[float], tol: float = WITNESS_TOL) -> list[str]:
    """Constraint violations of a theorem2 witness (empty list when feasible)."""
    p, pb = source.p, 1.0 - source.p
    bad = []
    if not -tol <= d <= 2 * p * pb + tol:
        bad.append(f"d={d} outside [0, 2p(1-p)]")
    dp = d / 2
    if not -tol <= w <= dp + tol:
        bad.append(f"w={w} outside [0, d']")
    caps = (p - dp, w, dp - w, pb - dp)
    for name, vec, cond in (("u", u, source.x_given_z), ("v", v, source.y_given_z)):
        for i, (val, cap) in enumerate(zip(vec, caps), 1):
            if val < -tol or val > cap + tol:
                bad.append(f"{name}{i}={val} outside [0, {cap}]")
        if abs(vec[0] + vec[1] + vec[2] - p * cond[0]) > tol:
            bad.append(f"{name}1+{name}2+{name}3 != p*P(.=0|Z=0)")
        if abs(vec[1] - vec[2] + vec[3] - (pb * cond[1] + w - dp)) > tol:
            bad.append(f"{name}2-{name}3+{name}4 != (1-p)*P(.=0|Z=1)+w-d'")
    return bad


def theorem2(source: BinaryMarkovSource, d_grid: int = THEOREM2_D_GRID, w_grid: int = THEOREM2_W_GRID,
             tol: float = 1e-10) -> BoundValue:
    p = source.p
    cache: dict[float, float] = {}

    def L(d: float) -> float:
        if d not in cache:
            try:
                cache[d] = theorem2_L(source, d, w_grid, tol)[0]
            except InfeasibleRegion:
                cache[d] = math.inf
        return cache[d]

    try:
        d, val = minimize_1d(L, Interval(0.0, 2.0 * p * (1.0 - p)), tol=tol, grid=d_grid)
    except InfeasibleRegion as exc:
        raise BoundConfigurationError(f"theorem2: every d infeasible for {source!r}") from exc
    _, inner = theorem2_L(source, d, w_grid, tol)
    base = source.cond_entropy_x() + source.cond_entropy_y()
    witness = {"d": d, "w": inner.w, "u": list(inner.u), "v": list(inner.v), "L": val}
    return BoundValue("theorem2", base + val, witness)


# ---------------------------------------------------------------------------
# Sweep


def default_p_grid(points: int = 99) -> list[float]:
    return [round((i + 1) / (points + 1), 12) for i in range(points)]


def sweep_row(p: float, include_theorem2: bool = False,
              resolution: int = DEFAULT_ENVELOPE_RESOLUTION) -> SweepRow:
    if not 0.0 < p < 1.0:
        raise DomainError(f"sweep needs p in (0, 1), got {p!r}")
    src = probdist_source(p)
    t2 = theorem2(src).value if include_theorem2 else None
    return SweepRow(p, cut_set(src).value, nw_extension(src, resolution).value, theorem1(p).value, t2)


def sweep(p_grid: Sequence[float], include_theorem2: bool = False,
          resolution: int = DEFAULT_ENVELOPE_RESOLUTION, workers: int = 1) -> list[SweepRow]:
    """Evaluate the bounds at probdist_source(p) for each p, sorted by p."""
    ps = sorted(float(p) for p in p_grid)
    if workers <= 1:
        return [sweep_row(p, include_theorem2, resolution) for p in ps]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(sweep_row, ps, [include_theorem2] * len(ps), [resolution] * len(ps)))
