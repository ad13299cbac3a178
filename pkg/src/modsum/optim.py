"""Deterministic optimizers used by the bound evaluators.

* :func:`minimize_1d`: global 1-D minimization (dense grid + golden section).
* :func:`maximize_concave_2d`: concave maximization over a bounded polygon.
* :func:`lower_convex_envelope`: lower convex envelope on a probability
  simplex, solved as a linear program over a lattice grid.
* :func:`envelope_by_channels`: parametric multi-start cross-check for the
  envelope.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
FEAS_TOL = 1e-9

DEFAULT_GRID_1D = 512
DEFAULT_ENVELOPE_RESOLUTION = 128
DEFAULT_GRID_2D = 128


class InfeasibleRegion(ValueError):
    """The feasible region of an optimization problem is empty."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


# ---------------------------------------------------------------------------
# 1-D


def golden_section_min(f: Callable[[float], float], lo: float, hi: float, xtol: float,
                       max_iter: int = 200) -> tuple[float, float]:
    """Golden-section search for a minimum of f on [lo, hi].

    Assumes f unimodal on the bracket; endpoints are also checked so that a
    monotone f returns the right boundary point.
    """
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > xtol and it < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        it += 1
    best = min(((fc, c), (fd, d), (f(lo), lo), (f(hi), hi)), key=lambda t: t[0])
    return best[1], best[0]


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, xtol: float,
                       max_iter: int = 200) -> tuple[float, float]:
    x, v = golden_section_min(lambda t: -f(t), lo, hi, xtol, max_iter)
    return x, -v


def minimize_1d(f: Callable[[float], float], domain: Interval, tol: float = 1e-10,
                grid: int = DEFAULT_GRID_1D, refine: int = 3) -> tuple[float, float]:
    """Global minimum of a continuous f on ``domain``.

    f is evaluated on ``grid`` equally spaced points; golden-section search
    then runs on the two cells adjacent to each of the ``refine`` best grid
    points. Points where f is not finite are treated as excluded from the
    domain. Returns ``(argmin, min)``; raises :class:`InfeasibleRegion` if f
    is nowhere finite on the grid.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if domain.width == 0.0:
        v = f(domain.lo)
        if not math.isfinite(v):
            raise InfeasibleRegion("objective not finite at the only point of the domain")
        return domain.lo, v
    xs = np.linspace(domain.lo, domain.hi, max(grid, 2))
    vals = np.array([f(float(x)) for x in xs])
    finite = np.isfinite(vals)
    if not finite.any():
        raise InfeasibleRegion("objective not finite anywhere on the grid")
    order = np.argsort(np.where(finite, vals, np.inf), kind="stable")
    best_x, best_v = float(xs[order[0]]), float(vals[order[0]])
    last = len(xs) - 1
    for i in order[:refine]:
        if not finite[i]:
            break
        lo, hi = float(xs[max(i - 1, 0)]), float(xs[min(i + 1, last)])
        x, v = golden_section_min(f, lo, hi, tol)
        if v < best_v:
            best_x, best_v = x, v
    return best_x, best_v


# ---------------------------------------------------------------------------
# 2-D


@dataclass(frozen=True)
class Polytope2D:
    """Bounded polygon {(x, y) : a x + b y <= c for every (a, b, c)}."""

    halfplanes: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "halfplanes", tuple(tuple(map(float, h)) for h in self.halfplanes))

    @classmethod
    def box(cls, xlo: float, xhi: float, ylo: float, yhi: float) -> "Polytope2D":
        return cls(((-1, 0, -xlo), (1, 0, xhi), (0, -1, -ylo), (0, 1, yhi)))

    def slack(self, x: float, y: float) -> float:
        """Largest constraint violation at (x, y); <= 0 inside."""
        return max(a * x + b * y - c for a, b, c in self.halfplanes)

    def contains(self, x: float, y: float, tol: float = FEAS_TOL) -> bool:
        return self.slack(x, y) <= tol

    def vertices(self, tol: float = FEAS_TOL) -> list[tuple[float, float]]:
        """Vertices in counter-clockwise order (deduplicated).

        A degenerate polygon yields one point or the two endpoints of a
        segment; an empty one yields [].
        """
        hp = self.halfplanes
        pts: list[tuple[float, float]] = []
        for (a1, b1, c1), (a2, b2, c2) in itertools.combinations(hp, 2):
            det = a1 * b2 - a2 * b1
            if abs(det) < 1e-14:
                continue
            x = (c1 * b2 - c2 * b1) / det
            y = (a1 * c2 - a2 * c1) / det
            if self.slack(x, y) <= tol:
                pts.append((x, y))
        uniq: list[tuple[float, float]] = []
        for pt in pts:
            if all(abs(pt[0] - q[0]) > 1e-12 or abs(pt[1] - q[1]) > 1e-12 for q in uniq):
                uniq.append(pt)
        if len(uniq) <= 2:
            return uniq
        cx = sum(p[0] for p in uniq) / len(uniq)
        cy = sum(p[1] for p in uniq) / len(uniq)
        uniq.sort(key=lambda p: math.atan2(p[1] - cy, p[0] - cx))
        return uniq

    def y_slice(self, x: float) -> tuple[float, float]:
        """Range of y over the polygon at abscissa x (may be empty: lo > hi)."""
        lo, hi = -math.inf, math.inf
        for a, b, c in self.halfplanes:
            if b > 0:
                hi = min(hi, (c - a * x) / b)
            elif b < 0:
                lo = max(lo, (c - a * x) / b)
        return lo, hi


def _shape(verts: Sequence[tuple[float, float]], eps: float = 10 * FEAS_TOL) -> str:
    if not verts:
        return "empty"
    diam = max(math.dist(p, q) for p in verts for q in verts)
    if diam <= eps:
        return "point"
    p, q = max(((p, q) for p in verts for q in verts), key=lambda pq: math.dist(*pq))
    ux, uy = (q[0] - p[0]) / diam, (q[1] - p[1]) / diam
    off = max(abs((r[0] - p[0]) * uy - (r[1] - p[1]) * ux) for r in verts)
    return "segment" if off <= eps else "polygon"


def _segment_ends(verts):
    return max(((p, q) for p in verts for q in verts), key=lambda pq: math.dist(*pq))


def _newton_interior(f, grad, hess, region: Polytope2D, start, tol: float, max_iter: int = 100):
    """Damped Newton ascent kept strictly inside the polygon."""
    x = np.array(start, dtype=float)
    fx = f(x[0], x[1])
    A = np.array([h[:2] for h in region.halfplanes])
    c = np.array([h[2] for h in region.halfplanes])
    for _ in range(max_iter):
        g = np.asarray(grad(x[0], x[1]), dtype=float)
        H = np.asarray(hess(x[0], x[1]), dtype=float)
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = g
        decrement = float(g @ step)
        if not (decrement > 0):
            step, decrement = g, float(g @ g)
        if decrement < 2 * tol:
            break
        rate = A @ step
        room = c - A @ x
        moving = rate > 0
        t_max = float(np.min(room[moving] / rate[moving])) if moving.any() else math.inf
        t = min(1.0, 0.99 * t_max)
        while t > 1e-16:
            cand = x + t * step
            fc = f(cand[0], cand[1])
            if fc >= fx + 1e-4 * t * decrement:
                break
            t *= 0.5
        else:
            break
        x, fx = cand, fc
    return (float(x[0]), float(x[1])), fx


def maximize_concave_2d(f: Callable[[float, float], float], region: Polytope2D, tol: float = 1e-10,
                        grid: int = 33, grad: Optional[Callable] = None,
                        hess: Optional[Callable] = None) -> tuple[tuple[float, float], float]:
    """Maximize a concave f over a bounded polygon.

    Degenerate regions (a point or a segment) are detected from the vertex
    set and handled exactly. For a proper polygon, either a damped interior
    Newton ascent is used (when ``grad`` and ``hess`` are supplied and the
    maximizer is known to be interior) or a feasibility-filtered grid scan
    followed by nested golden-section search on x and on each y-slice.

    Raises :class:`InfeasibleRegion` if the polygon is empty.
    """
    verts = region.vertices()
    shape = _shape(verts)
    if shape == "empty":
        raise InfeasibleRegion("empty polygon")
    if shape == "point":
        x, y = verts[0]
        return (x, y), f(x, y)
    if shape == "segment":
        (x0, y0), (x1, y1) = _segment_ends(verts)

        def along(t):
            return f(x0 + t * (x1 - x0), y0 + t * (y1 - y0))

        t, v = golden_section_max(along, 0.0, 1.0, tol)
        return (x0 + t * (x1 - x0), y0 + t * (y1 - y0)), v

    cx = sum(p[0] for p in verts) / len(verts)
    cy = sum(p[1] for p in verts) / len(verts)
    if grad is not None and hess is not None and region.slack(cx, cy) < -FEAS_TOL:
        return _newton_interior(f, grad, hess, region, (cx, cy), tol)

    xlo = min(p[0] for p in verts)
    xhi = max(p[0] for p in verts)
    best_pt, best_v = None, -math.inf
    for x in np.linspace(xlo, xhi, grid):
        ylo, yhi = region.y_slice(float(x))
        if ylo > yhi + FEAS_TOL:
            continue
        for y in np.linspace(ylo, max(ylo, yhi), grid):
            v = f(float(x), float(y))
            if v > best_v:
                best_pt, best_v = (float(x), float(y)), v

    def slice_max(x):
        ylo, yhi = region.y_slice(x)
        if ylo > yhi:
            ylo = yhi = 0.5 * (ylo + yhi)
        return golden_section_max(lambda y: f(x, y), ylo, yhi, tol)

    x, _ = golden_section_max(lambda x: slice_max(x)[1], xlo, xhi, tol)
    y, v = slice_max(x)
    if v >= best_v:
        return (x, y), v
    return best_pt, best_v


# ---------------------------------------------------------------------------
# Lower convex envelope on a simplex


def simplex_grid(dim: int, resolution: int) -> np.ndarray:
    """All points of the simplex in R^dim whose coordinates are multiples of 1/resolution."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if dim == 1:
        return np.ones((1, 1))
    # stars and bars: choose dim-1 bar positions among resolution+dim-1 slots
    bars = np.array(list(itertools.combinations(range(resolution + dim - 1), dim - 1)))
    edges = np.hstack([np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), resolution + dim - 1)])
    counts = np.diff(edges, axis=1) - 1
    return counts / resolution


@dataclass(frozen=True)
class EnvelopeProblem:
    """Evaluate the lower convex envelope of ``objective`` at ``target``.

    ``objective`` maps an (N, dim) array of simplex points to N values.
    """

    objective: Callable[[np.ndarray], np.ndarray]
    target: tuple[float, ...]
    resolution: int = DEFAULT_ENVELOPE_RESOLUTION
    atoms: tuple[str, ...] = field(default=())

    @property
    def dim(self) -> int:
        return len(self.target)


@dataclass(frozen=True)
class EnvelopeResult:
    value: float
    witness: tuple[tuple[float, tuple[float, ...]], ...]


def lower_convex_envelope(problem: EnvelopeProblem) -> EnvelopeResult:
    """min sum_j w_j f(q_j) s.t. sum_j w_j q_j = target over grid points q_j.

    Solved as a linear program with HiGHS; a basic optimal solution has at
    most ``dim`` atoms (the affine hull of the simplex has dimension dim-1).
    """
    q = np.asarray(problem.target, dtype=float)
    if q.ndim != 1 or np.any(q < -FEAS_TOL) or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError(f"target {problem.target!r} is not a point of the simplex")
    if problem.resolution < 32:
        raise ValueError("envelope grid resolution must be at least 32")
    q = np.clip(q, 0.0, None)
    q = q / q.sum()
    if q.size == 1:
        v = float(problem.objective(q[None, :])[0])
        return EnvelopeResult(v, ((1.0, (1.0,)),))
    pts = simplex_grid(q.size, problem.resolution)
    vals = np.asarray(problem.objective(pts), dtype=float)
    # the last coordinate's equality is implied by the others plus total weight
    A_eq = np.vstack([pts[:, :-1].T, np.ones(len(pts))])
    b_eq = np.append(q[:-1], 1.0)
    res = linprog(vals, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs-ipm")
    if res.status != 0:
        raise RuntimeError(f"envelope LP failed: {res.message}")
    weights = res.x
    active = np.flatnonzero(weights > 1e-9)
    witness = tuple((float(weights[j]), tuple(float(t) for t in pts[j])) for j in active)
    return EnvelopeResult(float(res.fun), witness)


def envelope_by_channels(objective: Callable[[np.ndarray], np.ndarray], target: Sequence[float],
                         n_outputs: Optional[int] = None, starts: int = 24, seed: int = 0) -> EnvelopeResult:
    """Envelope value by direct search over channels target -> U.

    The channel P(u | atom) is softmax-parametrized and the objective
    sum_u P(u) f(P(atom | u)) is minimized by L-BFGS-B from ``starts``
    random initial points; this upper-bounds the true envelope and is an
    independent check of :func:`lower_convex_envelope`.
    """
    q = np.asarray(target, dtype=float)
    m = q.size
    k = n_outputs or m + 1
    rng = np.random.default_rng(seed)

    def unpack(theta):
        logits = theta.reshape(m, k)
        logits = logits - logits.max(axis=1, keepdims=True)
        ch = np.exp(logits)
        ch /= ch.sum(axis=1, keepdims=True)
        joint = q[:, None] * ch  # P(atom, u)
        pu = joint.sum(axis=0)
        post = (joint / np.where(pu > 0, pu, 1.0)).T  # rows: P(atom | u)
        return pu, post

    def value(theta):
        pu, post = unpack(theta)
        return float(pu @ np.asarray(objective(post), dtype=float))

    best = None
    for _ in range(starts):
        theta0 = rng.normal(scale=3.0, size=m * k)
        res = minimize(value, theta0, method="L-BFGS-B")
        if best is None or res.fun < best.fun:
            best = res
    pu, post = unpack(best.x)
    witness = tuple((float(w), tuple(float(t) for t in row)) for w, row in zip(pu, post) if w > 1e-9)
    return EnvelopeResult(float(best.fun), witness)
