"""Binary Markov sources X - Z - Y, finite joint tables and entropy primitives.

All entropies are in bits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MASS_TOL = 1e-12
MAX_BLOCKLENGTH = 3


class DomainError(ValueError):
    """Argument outside the domain of an information measure."""


def _check_prob(name: str, t: float) -> float:
    t = float(t)
    if not (-MASS_TOL <= t <= 1.0 + MASS_TOL) or math.isnan(t):
        raise DomainError(f"{name}={t!r} is not a probability in [0, 1]")
    return min(max(t, 0.0), 1.0)


def binary_entropy(t: float) -> float:
    """h_b(t) = -t log2 t - (1-t) log2 (1-t), with 0 log 0 = 0."""
    t = _check_prob("t", t)
    if t == 0.0 or t == 1.0:
        return 0.0
    return -t * math.log2(t) - (1.0 - t) * math.log2(1.0 - t)


def scaled_entropy(c: float, x: float) -> float:
    """Perspective c * h_b(x / c) of the binary entropy.

    Defined for 0 <= x <= c; the value at c = 0 is 0.
    """
    c = float(c)
    x = float(x)
    if c < -MASS_TOL or x < -MASS_TOL:
        raise DomainError(f"scaled_entropy needs c, x >= 0, got c={c!r}, x={x!r}")
    if x > c + MASS_TOL:
        raise DomainError(f"scaled_entropy needs x <= c, got c={c!r}, x={x!r}")
    if c <= 0.0:
        return 0.0
    x = min(max(x, 0.0), c)
    return c * binary_entropy(x / c)


def entropy_of(masses: Iterable[float]) -> float:
    """Shannon entropy of a (not necessarily normalized) list of masses."""
    h = 0.0
    for m in masses:
        if m > 0.0:
            h -= m * math.log2(m)
    return h


@dataclass(frozen=True)
class BinaryMarkovSource:
    """Source (X, Y, Z) on {0,1}^3 with p(x,y,z) = p(z) p(x|z) p(y|z).

    ``p`` is P(Z=0); ``x_given_z`` is (P(X=0|Z=0), P(X=0|Z=1)) and
    ``y_given_z`` likewise for Y.
    """

    p: float
    x_given_z: tuple[float, float]
    y_given_z: tuple[float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", _check_prob("p", self.p))
        for name in ("x_given_z", "y_given_z"):
            pair = tuple(getattr(self, name))
            if len(pair) != 2:
                raise DomainError(f"{name} must be a pair, got {pair!r}")
            pair = tuple(_check_prob(f"{name}[{i}]", v) for i, v in enumerate(pair))
            object.__setattr__(self, name, pair)

    @classmethod
    def from_params(cls, p: float, x0: float, x1: float, y0: float, y1: float) -> "BinaryMarkovSource":
        return cls(p, (x0, x1), (y0, y1))

    @property
    def pbar(self) -> float:
        return 1.0 - self.p

    def params(self) -> dict[str, float]:
        return {
            "p": self.p,
            "x0": self.x_given_z[0],
            "x1": self.x_given_z[1],
            "y0": self.y_given_z[0],
            "y1": self.y_given_z[1],
        }

    def pz(self, z: int) -> float:
        return self.p if z == 0 else 1.0 - self.p

    def px_given_z(self, x: int, z: int) -> float:
        q = self.x_given_z[z]
        return q if x == 0 else 1.0 - q

    def py_given_z(self, y: int, z: int) -> float:
        q = self.y_given_z[z]
        return q if y == 0 else 1.0 - q

    def prob(self, x: int, y: int, z: int) -> float:
        return self.pz(z) * self.px_given_z(x, z) * self.py_given_z(y, z)

    def swapped(self) -> "BinaryMarkovSource":
        """The source with the roles of X and Y exchanged."""
        return BinaryMarkovSource(self.p, self.y_given_z, self.x_given_z)

    def cond_entropy_x(self) -> float:
        """H(X|Z)."""
        return self.p * binary_entropy(self.x_given_z[0]) + self.pbar * binary_entropy(self.x_given_z[1])

    def cond_entropy_y(self) -> float:
        """H(Y|Z)."""
        return self.p * binary_entropy(self.y_given_z[0]) + self.pbar * binary_entropy(self.y_given_z[1])


def probdist_source(p: float) -> BinaryMarkovSource:
    """The source with X|Z=0 and Y|Z=1 uniform, X=1 given Z=1 and Y=1 given Z=0."""
    return BinaryMarkovSource(_check_prob("p", p), (0.5, 0.0), (0.0, 0.5))


@dataclass(frozen=True, eq=False)
class JointPMF:
    """Probability table over named discrete coordinates.

    ``table`` has one axis per name in ``names``; the axis length is the
    alphabet size of that coordinate.
    """

    names: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=float)
        names = tuple(self.names)
        if table.ndim != len(names):
            raise ValueError(f"table has {table.ndim} axes but {len(names)} names were given")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate coordinate names in {names!r}")
        if np.any(table < 0):
            raise ValueError("probability table has negative entries")
        total = float(table.sum())
        if abs(total - 1.0) > MASS_TOL * max(1, table.size):
            raise ValueError(f"probability table sums to {total!r}, not 1")
        table = table.copy()
        table.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "table", table)

    @property
    def alphabet_sizes(self) -> tuple[int, ...]:
        return tuple(self.table.shape)

    def _axes(self, coords: Iterable[str]) -> list[int]:
        axes = []
        for c in coords:
            if c not in self.names:
                raise KeyError(f"unknown coordinate {c!r}; have {self.names!r}")
            axes.append(self.names.index(c))
        return axes

    def marginal(self, coords: Sequence[str]) -> "JointPMF":
        keep = self._axes(coords)
        drop = tuple(i for i in range(len(self.names)) if i not in keep)
        m = self.table.sum(axis=drop) if drop else self.table
        # sum() keeps remaining axes in original order; reorder to requested order
        remaining = [i for i in range(len(self.names)) if i in keep]
        m = np.transpose(m, [remaining.index(i) for i in keep])
        return JointPMF(tuple(coords), m)

    def support(self) -> list[tuple[int, ...]]:
        """Outcomes with mass above the support threshold, in lexicographic order."""
        return [tuple(int(i) for i in idx) for idx in np.argwhere(self.table > MASS_TOL)]

    def prob(self, outcome: Sequence[int]) -> float:
        return float(self.table[tuple(outcome)])


def _joint_entropy(pmf: JointPMF, coords: Sequence[str]) -> float:
    if not coords:
        return 0.0
    return entropy_of(pmf.marginal(coords).table.ravel())


def entropy(pmf: JointPMF, targets: Iterable[str], given: Iterable[str] = ()) -> float:
    """Conditional entropy H(targets | given) in bits."""
    targets = list(dict.fromkeys(targets))
    given = list(dict.fromkeys(given))
    pmf._axes(targets + given)
    if not targets:
        raise ValueError("targets must be nonempty")
    targets = [t for t in targets if t not in given]
    if not targets:
        return 0.0
    return _joint_entropy(pmf, targets + given) - _joint_entropy(pmf, given)


def mutual_information(pmf: JointPMF, a: Iterable[str], b: Iterable[str], given: Iterable[str] = ()) -> float:
    """I(a; b | given) in bits."""
    a, b, given = list(a), list(b), list(given)
    return entropy(pmf, a, given) - entropy(pmf, a, list(b) + given)


def sequences(n: int) -> list[tuple[int, ...]]:
    """All binary sequences of length n in lexicographic order."""
    return list(itertools.product((0, 1), repeat=n))


def seq_index(seq: Sequence[int]) -> int:
    """Lexicographic index of a binary sequence (first symbol most significant)."""
    i = 0
    for s in seq:
        i = 2 * i + int(s)
    return i


def joint_pmf(source: BinaryMarkovSource, n: int = 1) -> JointPMF:
    """I.i.d. distribution of (X^n, Y^n, Z^n) on coordinates ("X", "Y", "Z").

    Each coordinate takes 2**n values; a sequence is stored at its
    lexicographic index (see :func:`seq_index`).
    """
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_BLOCKLENGTH:
        raise DomainError(f"blocklength n={n!r} outside supported range 1..{MAX_BLOCKLENGTH}")
    single = np.zeros((2, 2, 2))
    for x, y, z in itertools.product((0, 1), repeat=3):
        single[x, y, z] = source.prob(x, y, z)
    # letters of the i-th symbol along axes (x_i, y_i, z_i); build the product then regroup
    table = single
    for _ in range(n - 1):
        table = np.multiply.outer(table, single)
    # axes are now (x1,y1,z1,x2,y2,z2,...); move to (x1..xn, y1..yn, z1..zn)
    order = [3 * i + k for k in range(3) for i in range(n)]
    table = np.transpose(table, order).reshape(2**n, 2**n, 2**n)
    return JointPMF(("X", "Y", "Z"), table)


def xor_entropy(source: BinaryMarkovSource) -> float:
    """H(X xor Y)."""
    p0 = sum(source.prob(x, x, z) for x in (0, 1) for z in (0, 1))
    return binary_entropy(min(max(p0, 0.0), 1.0))
