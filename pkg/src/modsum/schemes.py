"""Finite-blocklength zero-error schemes: enumeration and coupling analysis.

A scheme is a pair of partitions: transmitter 1 partitions the
positive-probability (x^n, z^n) pairs, transmitter 2 the (y^n, z^n) pairs,
and each block is one message index. The receiver can recover x^n xor y^n
without error iff no two positive-probability triples that produce the same
message pair have different xor patterns.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
import weakref
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .model import MASS_TOL, BinaryMarkovSource, JointPMF, entropy_of, joint_pmf

Point = tuple[int, int]  # (sequence index of x or y, sequence index of z)

LEMMA1_TOL = 1e-9
LEMMA3_TOL = 1e-12

DEFAULT_MAX_NODES = 10**7
DEFAULT_MAX_SECONDS = 300.0


class SchemeError(ValueError):
    """A scheme is malformed or not zero-error where that is required."""


def _relabel(labels: Sequence[int]) -> tuple[int, ...]:
    """Canonical block labels: blocks numbered by first occurrence."""
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(b, len(seen)) for b in labels)


@dataclass(frozen=True)
class Scheme:
    """Encoder pair at blocklength n.

    ``points1`` / ``points2`` list the positive-probability (x, z) and (y, z)
    pairs (sequence indices) in lexicographic order; ``labels1`` /
    ``labels2`` give each point's block, canonically numbered from 0.
    """

    n: int
    points1: tuple[Point, ...]
    labels1: tuple[int, ...]
    points2: tuple[Point, ...]
    labels2: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.points1) != len(self.labels1) or len(self.points2) != len(self.labels2):
            raise SchemeError("every point needs exactly one label")
        object.__setattr__(self, "labels1", _relabel(self.labels1))
        object.__setattr__(self, "labels2", _relabel(self.labels2))

    @classmethod
    def from_maps(cls, n: int, enc1: dict[Point, int], enc2: dict[Point, int]) -> "Scheme":
        p1, p2 = tuple(sorted(enc1)), tuple(sorted(enc2))
        return cls(n, p1, tuple(enc1[k] for k in p1), p2, tuple(enc2[k] for k in p2))

    @property
    def enc1(self) -> dict[Point, int]:
        return dict(zip(self.points1, self.labels1))

    @property
    def enc2(self) -> dict[Point, int]:
        return dict(zip(self.points2, self.labels2))

    @property
    def sizes(self) -> tuple[int, int]:
        return max(self.labels1, default=-1) + 1, max(self.labels2, default=-1) + 1

    def blocks(self) -> tuple[list[list[Point]], list[list[Point]]]:
        out = []
        for pts, labels in ((self.points1, self.labels1), (self.points2, self.labels2)):
            bl: list[list[Point]] = [[] for _ in range(max(labels, default=-1) + 1)]
            for pt, b in zip(pts, labels):
                bl[b].append(pt)
            out.append(bl)
        return out[0], out[1]

    def refines(self, other: "Scheme") -> bool:
        """True if each block of self lies inside a block of ``other`` (both encoders)."""
        if self.points1 != other.points1 or self.points2 != other.points2:
            return False
        for mine, theirs in ((self.labels1, other.labels1), (self.labels2, other.labels2)):
            image: dict[int, int] = {}
            for a, b in zip(mine, theirs):
                if image.setdefault(a, b) != b:
                    return False
        return True


# ---------------------------------------------------------------------------
# supports


def encoder_points(pmf: JointPMF) -> tuple[tuple[Point, ...], tuple[Point, ...]]:
    """Positive-probability (x, z) and (y, z) pairs of an ("X", "Y", "Z") table."""
    xz = pmf.marginal(("X", "Z"))
    yz = pmf.marginal(("Y", "Z"))
    return tuple(xz.support()), tuple(yz.support())


@dataclass(frozen=True)
class _SupportData:
    triples: tuple[tuple[int, int, int, float], ...]
    mass1: dict[Point, float]
    mass2: dict[Point, float]
    h_z: float


_support_cache: "weakref.WeakKeyDictionary[JointPMF, _SupportData]" = weakref.WeakKeyDictionary()


def _support_data(pmf: JointPMF) -> _SupportData:
    data = _support_cache.get(pmf)
    if data is None:
        xz, yz = pmf.marginal(("X", "Z")), pmf.marginal(("Y", "Z"))
        data = _SupportData(
            triples=tuple((x, y, z, pmf.prob((x, y, z))) for x, y, z in pmf.support()),
            mass1={pt: xz.prob(pt) for pt in xz.support()},
            mass2={pt: yz.prob(pt) for pt in yz.support()},
            h_z=entropy_of(pmf.marginal(("Z",)).table),
        )
        _support_cache[pmf] = data
    return data


def _triples(pmf: JointPMF) -> tuple[tuple[int, int, int, float], ...]:
    return _support_data(pmf).triples


def identity_scheme(pmf: JointPMF, n: int) -> Scheme:
    p1, p2 = encoder_points(pmf)
    return Scheme(n, p1, tuple(range(len(p1))), p2, tuple(range(len(p2))))


def constant_scheme(pmf: JointPMF, n: int) -> Scheme:
    p1, p2 = encoder_points(pmf)
    return Scheme(n, p1, (0,) * len(p1), p2, (0,) * len(p2))


def _messages(scheme: Scheme, pmf: JointPMF):
    enc1, enc2 = scheme.enc1, scheme.enc2
    out = []
    for x, y, z, m in _triples(pmf):
        try:
            msg = (enc1[(x, z)], enc2[(y, z)])
        except KeyError as exc:
            raise SchemeError(f"scheme undefined on support point {exc.args[0]!r}") from None
        out.append((msg, x, y, z, m))
    return out


def check_zero_error(scheme: Scheme, pmf: JointPMF) -> bool:
    """True iff x xor y is a function of the message pair on the support."""
    decoded: dict[tuple[int, int], int] = {}
    for msg, x, y, _, _ in _messages(scheme, pmf):
        if decoded.setdefault(msg, x ^ y) != x ^ y:
            return False
    return True


def conditionally_injective(scheme: Scheme) -> bool:
    """Distinct x (resp. y) sequences sharing a z sequence get distinct indices."""
    for pts, labels in ((scheme.points1, scheme.labels1), (scheme.points2, scheme.labels2)):
        seen = set()
        for (_, z), b in zip(pts, labels):
            if (z, b) in seen:
                return False
            seen.add((z, b))
    return True


# ---------------------------------------------------------------------------
# enumeration


def _partitions(points: Sequence[Point], compatible, budget: "_Budget") -> Iterator[tuple[int, ...]]:
    """Set partitions of ``points`` (restricted-growth strings) whose blocks are
    pairwise compatible, depth-first in point order."""
    k = len(points)
    labels = [0] * k
    blocks: list[list[int]] = []

    def rec(i: int) -> Iterator[tuple[int, ...]]:
        if not budget.tick():
            return
        if i == k:
            yield tuple(labels)
            return
        for b, members in enumerate(blocks):
            if all(compatible(i, j) for j in members):
                labels[i] = b
                members.append(i)
                yield from rec(i + 1)
                members.pop()
                if budget.exhausted:
                    return
        labels[i] = len(blocks)
        blocks.append([i])
        yield from rec(i + 1)
        blocks.pop()

    yield from rec(0)


@dataclass
class _Budget:
    max_nodes: int
    max_seconds: float
    nodes: int = 0
    exhausted: bool = False
    start: float = field(default_factory=time.monotonic)

    def tick(self) -> bool:
        self.nodes += 1
        if self.nodes > self.max_nodes or (self.nodes % 4096 == 0
                                           and time.monotonic() - self.start > self.max_seconds):
            self.exhausted = True
        return not self.exhausted


def _swap_permutations(n: int) -> list[tuple[int, ...]]:
    return [perm for perm in itertools.permutations(range(n)) if perm != tuple(range(n))]


def _permute_index(idx: int, perm: tuple[int, ...], n: int) -> int:
    bits = [(idx >> (n - 1 - i)) & 1 for i in range(n)]
    out = 0
    for i in range(n):
        out = 2 * out + bits[perm[i]]
    return out


def _canonical_key(scheme: Scheme) -> tuple:
    return scheme.labels1, scheme.labels2


def _permuted(scheme: Scheme, perm: tuple[int, ...]) -> Scheme:
    n = scheme.n
    enc1 = {(_permute_index(a, perm, n), _permute_index(z, perm, n)): b for (a, z), b in scheme.enc1.items()}
    enc2 = {(_permute_index(a, perm, n), _permute_index(z, perm, n)): b for (a, z), b in scheme.enc2.items()}
    return Scheme.from_maps(n, enc1, enc2)


class SchemeEnumeration:
    """Iterable over the zero-error schemes of a source at blocklength n.

    Schemes are partition pairs (labels canonical). Transmitter 1's
    partition respects conditional injectivity; for each such partition,
    transmitter 2's blocks are the independent sets of the induced conflict
    graph, so every yielded pair is zero-error and every zero-error pair is
    yielded. After iteration, ``exhaustive`` tells whether the budget
    allowed the full space to be covered and ``nodes`` counts search nodes.

    With ``symmetry=True`` (default for n >= 2) only one scheme per orbit of
    the coordinate permutation group is yielded.
    """

    def __init__(self, source: BinaryMarkovSource, n: int, max_nodes: int = DEFAULT_MAX_NODES,
                 max_seconds: float = DEFAULT_MAX_SECONDS, symmetry: Optional[bool] = None):
        if n not in (1, 2):
            raise ValueError(f"scheme enumeration supports n in {{1, 2}}, got {n!r}")
        self.source = source
        self.n = n
        self.pmf = joint_pmf(source, n)
        self.max_nodes = max_nodes
        self.max_seconds = max_seconds
        self.symmetry = (n >= 2) if symmetry is None else symmetry
        self.nodes = 0
        self.exhaustive: Optional[bool] = None
        self.points1, self.points2 = encoder_points(self.pmf)

    def __iter__(self) -> Iterator[Scheme]:
        budget = _Budget(self.max_nodes, self.max_seconds)
        pts1, pts2 = self.points1, self.points2
        # x values compatible with each z, and y values compatible with each z
        xs_of_z: dict[int, list[int]] = defaultdict(list)
        for x, z in pts1:
            xs_of_z[z].append(x)

        def inj1(i: int, j: int) -> bool:
            return pts1[i][1] != pts1[j][1]

        perms = _swap_permutations(self.n) if self.symmetry else []
        try:
            for lab1 in _partitions(pts1, inj1, budget):
                block_of = dict(zip(pts1, lab1))

                def compat2(i: int, j: int) -> bool:
                    (y, z), (y2, z2) = pts2[i], pts2[j]
                    for x in xs_of_z[z]:
                        b = block_of[(x, z)]
                        for x2 in xs_of_z[z2]:
                            if block_of[(x2, z2)] == b and (x ^ y) != (x2 ^ y2):
                                return False
                    return True

                for lab2 in _partitions(pts2, compat2, budget):
                    scheme = Scheme(self.n, pts1, lab1, pts2, lab2)
                    if perms:
                        key = _canonical_key(scheme)
                        if any(_canonical_key(_permuted(scheme, pm)) < key for pm in perms):
                            continue
                    yield scheme
                if budget.exhausted:
                    break
        finally:
            self.nodes = budget.nodes
            self.exhaustive = not budget.exhausted


def enumerate_schemes(source: BinaryMarkovSource, n: int, max_nodes: int = DEFAULT_MAX_NODES,
                      max_seconds: float = DEFAULT_MAX_SECONDS,
                      symmetry: Optional[bool] = None) -> SchemeEnumeration:
    return SchemeEnumeration(source, n, max_nodes, max_seconds, symmetry)


# ---------------------------------------------------------------------------
# entropies and coupling


def message_masses(scheme: Scheme, pmf: JointPMF) -> tuple[list[float], list[float]]:
    data = _support_data(pmf)
    m1 = [0.0] * scheme.sizes[0]
    m2 = [0.0] * scheme.sizes[1]
    try:
        for pt, b in zip(scheme.points1, scheme.labels1):
            m1[b] += data.mass1[pt]
        for pt, b in zip(scheme.points2, scheme.labels2):
            m2[b] += data.mass2[pt]
    except KeyError as exc:
        raise SchemeError(f"scheme point {exc.args[0]!r} has zero probability") from None
    return m1, m2


def message_entropy_sum(scheme: Scheme, pmf: JointPMF) -> float:
    """H(M1) + H(M2)."""
    m1, m2 = message_masses(scheme, pmf)
    return entropy_of(m1) + entropy_of(m2)


@dataclass(frozen=True)
class CouplingReport:
    d_avg: float
    g_table: dict[tuple[int, int], int]
    lemma1_lhs: float
    lemma1_rhs: float
    lemma1_holds: bool
    lemma2_holds: bool
    lemma3_bound: float
    lemma3_holds: bool
    message_entropy_sum: float

    @property
    def all_hold(self) -> bool:
        return self.lemma1_holds and self.lemma2_holds and self.lemma3_holds


def coupling_report(scheme: Scheme, pmf: JointPMF, source: BinaryMarkovSource) -> CouplingReport:
    """Exact coupling quantities of a zero-error scheme.

    The coupled copy is drawn independently given the message pair, so all
    quantities are sums over pairs of triples sharing a message pair.
    """
    if not check_zero_error(scheme, pmf):
        raise SchemeError("coupling report requires a zero-error scheme")
    n = scheme.n
    by_msg: dict[tuple[int, int], list[tuple[int, int, int, float]]] = defaultdict(list)
    for msg, x, y, z, m in _messages(scheme, pmf):
        by_msg[msg].append((x, y, z, m))

    d_avg = 0.0
    g_table: dict[tuple[int, int], int] = {}
    lemma2 = True
    h_mz = 0.0  # H(M1, M2, Z)
    for triples in by_msg.values():
        pm = sum(t[3] for t in triples)
        pz: dict[int, float] = defaultdict(float)
        for _, _, z, m in triples:
            pz[z] += m
        h_mz += entropy_of(pz.values())
        for z, a in pz.items():
            for z2, b in pz.items():
                d_avg += bin(z ^ z2).count("1") / n * a * b / pm
        for x, y, z, _ in triples:
            for x2, y2, z2, _ in triples:
                pattern = x ^ x2
                if pattern != y ^ y2 or g_table.setdefault((z, z2), pattern) != pattern:
                    lemma2 = False

    lhs = h_mz - _support_data(pmf).h_z
    rhs = n * (source.cond_entropy_x() + source.cond_entropy_y())
    bound = 2 * source.p * (1 - source.p)
    return CouplingReport(
        d_avg=d_avg,
        g_table=g_table,
        lemma1_lhs=lhs,
        lemma1_rhs=rhs,
        lemma1_holds=abs(lhs - rhs) <= LEMMA1_TOL,
        lemma2_holds=lemma2,
        lemma3_bound=bound,
        lemma3_holds=d_avg <= bound + LEMMA3_TOL,
        message_entropy_sum=message_entropy_sum(scheme, pmf),
    )


# ---------------------------------------------------------------------------
# search


@dataclass(frozen=True)
class SearchResult:
    n: int
    min_entropy_sum: float
    argmin: Optional[Scheme]
    schemes_enumerated: int
    exhaustive: bool
    nodes: int = 0


def min_sum_message_entropy(source: BinaryMarkovSource, n: int, max_nodes: int = DEFAULT_MAX_NODES,
                            max_seconds: float = DEFAULT_MAX_SECONDS) -> SearchResult:
    """Minimum of H(M1) + H(M2) over the zero-error schemes visited.

    Merging blocks never increases entropy, so a scheme strictly refined by
    an already-scored valid scheme cannot improve on it; every visited
    scheme is still scored since that is no more expensive than checking.
    """
    en = enumerate_schemes(source, n, max_nodes, max_seconds)
    best, best_val, count = None, math.inf, 0
    for scheme in en:
        count += 1
        val = message_entropy_sum(scheme, en.pmf)
        if val < best_val - 1e-15:
            best, best_val = scheme, val
    return SearchResult(n, best_val, best, count, bool(en.exhaustive), en.nodes)


def huffman_expected_length(masses: Iterable[float]) -> float:
    """Expected codeword length of a binary Huffman code for the given masses."""
    ms = [float(m) for m in masses if m > MASS_TOL]
    if not ms:
        raise ValueError("empty distribution")
    total = sum(ms)
    if len(ms) == 1:
        return 0.0
    heap = [m / total for m in ms]
    heapq.heapify(heap)
    length = 0.0
    while len(heap) > 1:
        merged = heapq.heappop(heap) + heapq.heappop(heap)
        length += merged  # every symbol below this node gains one bit
        heapq.heappush(heap, merged)
    return length
