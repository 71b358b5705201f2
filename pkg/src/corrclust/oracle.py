"""Same-cluster query oracles (perfect and faulty), query accounting, and
query-based partitioning of a vertex sample."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .instance import Clustering

YES = True
NO = False

_M64 = (1 << 64) - 1


class QueryError(ValueError):
    pass


@dataclass
class QueryLedger:
    """Counts oracle calls for one run; optionally keeps ``(u, v, answer)`` triples."""

    count: int = 0
    keep_log: bool = False
    log: list = field(default_factory=list)

    def record(self, u: int, v: int, answer: bool) -> None:
        self.count += 1
        if self.keep_log:
            self.log.append((u, v, answer))

    def reset(self) -> None:
        self.count = 0
        self.log.clear()


def _check_pair(n: int, u: int, v: int) -> tuple[int, int]:
    u, v = int(u), int(v)
    if u == v:
        raise QueryError(f"query on identical vertices {u}")
    if not (0 <= u < n and 0 <= v < n):
        raise QueryError(f"query ({u}, {v}) out of range for n={n}")
    return (u, v) if u < v else (v, u)


class PerfectOracle:
    """Answers Yes exactly when ``truth`` puts both vertices in one cluster."""

    def __init__(self, truth: Clustering):
        self.truth = truth

    @property
    def n(self) -> int:
        return self.truth.n

    def query(self, u: int, v: int, ledger: QueryLedger | None = None) -> bool:
        u, v = _check_pair(self.n, u, v)
        answer = self.truth.same(u, v)
        if ledger is not None:
            ledger.record(u, v, answer)
        return answer


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer on uint64 arrays
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def flip_uniforms(seed: int, u, v) -> np.ndarray:
    """Uniform [0,1) value per unordered pair, a pure function of (seed, u, v)."""
    u = np.asarray(u, dtype=np.uint64)
    v = np.asarray(v, dtype=np.uint64)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    with np.errstate(over="ignore"):
        h = _mix64(np.full(lo.shape, np.uint64(seed & _M64)) + np.uint64(0x9E3779B97F4A7C15))
        h = _mix64(h ^ (lo + np.uint64(0x632BE59BD9B4E019)))
        h = _mix64(h ^ (hi + np.uint64(0x85157AF5D3B5E1A9)))
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def _mix64_int(x: int) -> int:
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


def _flip_uniform(seed: int, u: int, v: int) -> float:
    """Scalar twin of ``flip_uniforms`` (same bits, no numpy overhead)."""
    lo, hi = (u, v) if u < v else (v, u)
    h = _mix64_int(((seed & _M64) + 0x9E3779B97F4A7C15) & _M64)
    h = _mix64_int(h ^ ((lo + 0x632BE59BD9B4E019) & _M64))
    h = _mix64_int(h ^ ((hi + 0x85157AF5D3B5E1A9) & _M64))
    return (h >> 11) / float(1 << 53)


class FaultyOracle:
    """Each pair's answer is the truth flipped with probability ``q``, fixed forever.

    The flip for a pair depends only on ``(seed, u, v)``, so answers do not depend on
    the order of queries.  ``prematerialize=True`` computes every pair up front.
    """

    def __init__(self, truth: Clustering, q: float, seed: int = 0, prematerialize: bool = False):
        if not 0.0 <= q <= 1.0 / 3.0:
            raise QueryError("q must lie in [0, 1/3]")
        self.truth = truth
        self.q = float(q)
        self.seed = int(seed)
        self.memo: dict[tuple[int, int], bool] = {}
        self._lock = threading.Lock()
        if prematerialize:
            self._materialize()

    @property
    def n(self) -> int:
        return self.truth.n

    def _materialize(self) -> None:
        iu, iv = np.triu_indices(self.n, 1)
        flips = flip_uniforms(self.seed, iu, iv) < self.q
        a = self.truth.assignment
        answers = (a[iu] == a[iv]) ^ flips
        self.memo.update(zip(zip(iu.tolist(), iv.tolist()), answers.tolist()))

    def _draw(self, u: int, v: int) -> bool:
        flip = _flip_uniform(self.seed, u, v) < self.q
        return self.truth.same(u, v) ^ flip

    def query(self, u: int, v: int, ledger: QueryLedger | None = None) -> bool:
        key = _check_pair(self.n, u, v)
        answer = self.memo.get(key)
        if answer is None:
            answer = self._draw(*key)
            with self._lock:
                answer = self.memo.setdefault(key, answer)
        if ledger is not None:
            ledger.record(key[0], key[1], answer)
        return answer

    def answer_matrix(self, vertices, ledger: QueryLedger | None = None) -> np.ndarray:
        """Query every pair among ``vertices``; returns the symmetric Yes matrix."""
        vs = list(vertices)
        out = np.zeros((len(vs), len(vs)), dtype=bool)
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                out[i, j] = out[j, i] = self.query(vs[i], vs[j], ledger)
        return out


@dataclass
class SamplePartition:
    """Ordered, disjoint, nonempty groups of sample vertices."""

    groups: list[list[int]]

    def __post_init__(self):
        seen: set[int] = set()
        for g in self.groups:
            if not g:
                raise ValueError("empty group in sample partition")
            for v in g:
                if v in seen:
                    raise ValueError(f"vertex {v} in two groups")
                seen.add(v)

    @property
    def k(self) -> int:
        return len(self.groups)

    def vertices(self) -> list[int]:
        return [v for g in self.groups for v in g]

    def as_sets(self) -> set[frozenset[int]]:
        return {frozenset(g) for g in self.groups}


def partition_sample(S, oracle, k_max: int, ledger: QueryLedger | None = None) -> SamplePartition:
    """Group ``S`` by querying each vertex against one representative per group.

    Uses at most ``k_max * |S|`` queries.  If every representative says No and
    ``k_max`` groups already exist, the vertex joins the last group queried.
    """
    S = [int(v) for v in S]
    if not S:
        raise QueryError("cannot partition an empty sample")
    if len(set(S)) != len(S):
        raise QueryError("sample vertices must be distinct")
    if k_max < 1:
        raise QueryError("k_max must be at least 1")
    groups: list[list[int]] = [[S[0]]]
    for v in S[1:]:
        for g in groups:
            if oracle.query(g[0], v, ledger):
                g.append(v)
                break
        else:
            if len(groups) < k_max:
                groups.append([v])
            else:
                groups[-1].append(v)
    return SamplePartition(groups)
