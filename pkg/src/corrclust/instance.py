"""Correlation-clustering instances, clusterings, costs and text I/O.

An instance is a complete graph on ``n`` vertices whose edges carry a ``+`` or
``-`` label.  Only the ``+`` pairs are stored; every unlisted pair is ``-``.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np


class InstanceError(ValueError):
    """Raised for malformed instances or clusterings, or size mismatches."""


class ParseError(InstanceError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _normalize_pairs(n: int, pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    arr = arr.reshape(-1, 2)
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    if np.any(lo == hi):
        raise InstanceError("self-pair in positive edge set")
    if np.any(lo < 0) or np.any(hi >= n):
        raise InstanceError(f"vertex out of range for n={n}")
    keys = np.unique(lo * n + hi)
    return np.stack([keys // n, keys % n], axis=1)


@dataclass(frozen=True, eq=False)
class EdgeLabeling:
    """A +/- labeled complete graph; ``pairs`` holds the sorted ``+`` pairs (u < v)."""

    n: int
    pairs: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __init__(self, n: int, positives: Iterable = ()):
        if n < 1:
            raise InstanceError("n must be positive")
        object.__setattr__(self, "n", int(n))
        pairs = positives if isinstance(positives, np.ndarray) else list(positives)
        arr = _normalize_pairs(self.n, pairs)
        arr.setflags(write=False)
        object.__setattr__(self, "pairs", arr)
        object.__setattr__(self, "_cache", {})

    @property
    def positives(self) -> frozenset[tuple[int, int]]:
        if "positives" not in self._cache:
            self._cache["positives"] = frozenset(map(tuple, self.pairs.tolist()))
        return self._cache["positives"]

    @property
    def num_positive(self) -> int:
        return int(self.pairs.shape[0])

    @property
    def num_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    def adjacency(self) -> np.ndarray:
        """Dense boolean ``+`` adjacency matrix (read-only, cached)."""
        if "adj" not in self._cache:
            adj = np.zeros((self.n, self.n), dtype=bool)
            if self.num_positive:
                adj[self.pairs[:, 0], self.pairs[:, 1]] = True
                adj[self.pairs[:, 1], self.pairs[:, 0]] = True
            adj.setflags(write=False)
            self._cache["adj"] = adj
        return self._cache["adj"]

    def neighbors(self) -> list[list[int]]:
        """``+`` neighbourhoods as sorted lists (works without a dense matrix)."""
        if "nbrs" not in self._cache:
            nbrs: list[list[int]] = [[] for _ in range(self.n)]
            for u, v in self.pairs.tolist():
                nbrs[u].append(v)
                nbrs[v].append(u)
            for lst in nbrs:
                lst.sort()
            self._cache["nbrs"] = nbrs
        return self._cache["nbrs"]

    def is_positive(self, u: int, v: int) -> bool:
        if u > v:
            u, v = v, u
        return (u, v) in self.positives

    def induced(self, vertices) -> "EdgeLabeling":
        """Sub-instance on ``vertices``, relabeled 0..len-1 in the given order."""
        vertices = np.asarray(vertices, dtype=np.int64)
        sub = self.adjacency()[np.ix_(vertices, vertices)]
        iu, iv = np.nonzero(np.triu(sub, 1))
        return EdgeLabeling(len(vertices), np.stack([iu, iv], axis=1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EdgeLabeling):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.pairs, other.pairs)

    def __hash__(self) -> int:
        return hash((self.n, self.pairs.tobytes()))

    def __repr__(self) -> str:
        return f"EdgeLabeling(n={self.n}, positives={self.num_positive})"


def canonical_labels(assignment) -> np.ndarray:
    """Renumber cluster ids by first occurrence, so equal partitions compare equal."""
    arr = np.asarray(assignment, dtype=np.int64)
    _, first, inverse = np.unique(arr, return_index=True, return_inverse=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return rank[inverse.reshape(-1)]


@dataclass(frozen=True, eq=False)
class Clustering:
    """Assignment of every vertex to one of ``k`` nonempty clusters (ids canonical)."""

    assignment: np.ndarray
    k: int

    def __init__(self, assignment):
        arr = np.asarray(assignment, dtype=np.int64).reshape(-1)
        if arr.size == 0:
            raise InstanceError("empty clustering")
        if np.any(arr < 0):
            raise InstanceError("negative cluster id")
        arr = canonical_labels(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "assignment", arr)
        object.__setattr__(self, "k", int(arr.max()) + 1)

    @classmethod
    def from_groups(cls, groups, n: int | None = None) -> "Clustering":
        groups = [list(g) for g in groups if len(g)]
        size = n if n is not None else sum(len(g) for g in groups)
        assignment = np.full(size, -1, dtype=np.int64)
        for cid, group in enumerate(groups):
            for v in group:
                if not 0 <= v < size:
                    raise InstanceError(f"vertex {v} out of range")
                if assignment[v] != -1:
                    raise InstanceError(f"vertex {v} listed twice")
                assignment[v] = cid
        missing = np.nonzero(assignment < 0)[0]
        if missing.size:
            raise InstanceError(f"vertex {int(missing[0])} missing from clustering")
        return cls(assignment)

    @property
    def n(self) -> int:
        return int(self.assignment.shape[0])

    def groups(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for v, c in enumerate(self.assignment.tolist()):
            out[c].append(v)
        return out

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def same(self, u: int, v: int) -> bool:
        return bool(self.assignment[u] == self.assignment[v])

    def restrict(self, vertices) -> "Clustering":
        return Clustering(self.assignment[np.asarray(vertices, dtype=np.int64)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Clustering):
            return NotImplemented
        return np.array_equal(self.assignment, other.assignment)

    def __hash__(self) -> int:
        return hash(self.assignment.tobytes())

    def __repr__(self) -> str:
        return f"Clustering(n={self.n}, k={self.k}, groups={self.groups()})"


def _check_sizes(labeling: EdgeLabeling, clustering: Clustering) -> None:
    if clustering.n != labeling.n:
        raise InstanceError(
            f"clustering has {clustering.n} vertices, instance has {labeling.n}"
        )


def disagreement_cost(labeling: EdgeLabeling, clustering: Clustering) -> int:
    """Number of ``-`` pairs inside clusters plus ``+`` pairs across clusters."""
    _check_sizes(labeling, clustering)
    a = clustering.assignment
    pos_inside = int(np.count_nonzero(a[labeling.pairs[:, 0]] == a[labeling.pairs[:, 1]]))
    sizes = clustering.sizes()
    pairs_inside = int((sizes * (sizes - 1) // 2).sum())
    neg_inside = pairs_inside - pos_inside
    pos_across = labeling.num_positive - pos_inside
    return neg_inside + pos_across


def agreement_cost(labeling: EdgeLabeling, clustering: Clustering) -> int:
    """Number of ``+`` pairs inside clusters plus ``-`` pairs across clusters."""
    _check_sizes(labeling, clustering)
    a = clustering.assignment
    pos_inside = int(np.count_nonzero(a[labeling.pairs[:, 0]] == a[labeling.pairs[:, 1]]))
    sizes = clustering.sizes()
    pairs_across = (labeling.n * labeling.n - int((sizes * sizes).sum())) // 2
    neg_across = pairs_across - (labeling.num_positive - pos_inside)
    return pos_inside + neg_across


def _pair_agreement(labeling: EdgeLabeling, assignments) -> np.ndarray:
    a = np.atleast_2d(np.asarray(assignments))
    if a.shape[1] != labeling.n:
        raise InstanceError(f"assignments have {a.shape[1]} vertices, instance has {labeling.n}")
    iu, iv = np.triu_indices(labeling.n, 1)
    positive = labeling.adjacency()[iu, iv]
    return (a[:, iu] == a[:, iv]) == positive


def disagreement_costs(labeling: EdgeLabeling, assignments) -> np.ndarray:
    """Disagreements of many clusterings at once, one row of cluster ids each."""
    return np.count_nonzero(~_pair_agreement(labeling, assignments), axis=1)


def agreement_costs(labeling: EdgeLabeling, assignments) -> np.ndarray:
    """Agreements of many clusterings at once, one row of cluster ids each."""
    return np.count_nonzero(_pair_agreement(labeling, assignments), axis=1)


@dataclass(frozen=True)
class PlantedSpec:
    n: int
    k: int
    noise: float = 0.0
    seed: int = 0
    min_cluster_fraction: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise InstanceError("n and k must be positive")
        if self.k > self.n:
            raise InstanceError("k must not exceed n")
        if not 0.0 <= self.noise <= 1.0:
            raise InstanceError("noise must lie in [0, 1]")
        if self.min_cluster_fraction < 0 or self.min_cluster_fraction * self.n * self.k > self.n:
            raise InstanceError("min_cluster_fraction * n * k must not exceed n")


def planted_instance(spec: PlantedSpec) -> tuple[EdgeLabeling, Clustering]:
    """Labels agree with a hidden clustering except for independent flips."""
    rng = np.random.default_rng(spec.seed)
    floor = max(1, int(np.ceil(spec.min_cluster_fraction * spec.n - 1e-9)))
    if floor * spec.k > spec.n:
        raise InstanceError("cluster-size floor is infeasible for n and k")
    sizes = np.full(spec.k, floor, dtype=np.int64)
    extra = spec.n - int(sizes.sum())
    if extra:
        sizes += rng.multinomial(extra, np.full(spec.k, 1.0 / spec.k))
    labels = np.repeat(np.arange(spec.k), sizes)
    assignment = labels[rng.permutation(spec.n)]
    truth = Clustering(assignment)

    iu, iv = np.triu_indices(spec.n, 1)
    same = truth.assignment[iu] == truth.assignment[iv]
    flips = rng.random(iu.shape[0]) < spec.noise
    plus = same ^ flips
    labeling = EdgeLabeling(spec.n, np.stack([iu[plus], iv[plus]], axis=1))
    return labeling, truth


# -- text formats ---------------------------------------------------------------


def _open_text(target, mode):
    if isinstance(target, (str, os.PathLike)):
        return open(target, mode, encoding="ascii", newline="\n"), True
    return target, False


def _content_lines(stream: TextIO):
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def read_instance(source) -> EdgeLabeling:
    stream, close = _open_text(source, "r")
    try:
        n = expected = None
        pairs: list[tuple[int, int]] = []
        seen: set[tuple[int, int]] = set()
        for lineno, line in _content_lines(stream):
            tok = line.split()
            if n is None:
                if len(tok) != 4 or tok[0] != "p" or tok[1] != "cc":
                    raise ParseError("expected header 'p cc <n> <num_positives>'", lineno)
                try:
                    n, expected = int(tok[2]), int(tok[3])
                except ValueError:
                    raise ParseError("non-integer header field", lineno) from None
                if n < 1 or expected < 0:
                    raise ParseError("header values out of range", lineno)
                continue
            if len(tok) != 3 or tok[0] != "+":
                raise ParseError("expected '+ <u> <v>'", lineno)
            try:
                u, v = int(tok[1]), int(tok[2])
            except ValueError:
                raise ParseError("non-integer vertex id", lineno) from None
            if not (0 <= u < n and 0 <= v < n):
                raise ParseError(f"vertex out of range for n={n}", lineno)
            if u >= v:
                raise ParseError("pairs must satisfy u < v", lineno)
            if (u, v) in seen:
                raise ParseError(f"duplicate pair {u} {v}", lineno)
            seen.add((u, v))
            pairs.append((u, v))
        if n is None:
            raise ParseError("missing header")
        if len(pairs) != expected:
            raise ParseError(f"header declares {expected} positives, found {len(pairs)}")
        return EdgeLabeling(n, pairs)
    finally:
        if close:
            stream.close()


def write_instance(labeling: EdgeLabeling, target) -> None:
    stream, close = _open_text(target, "w")
    try:
        buf = io.StringIO()
        buf.write(f"p cc {labeling.n} {labeling.num_positive}\n")
        for u, v in labeling.pairs.tolist():
            buf.write(f"+ {u} {v}\n")
        stream.write(buf.getvalue())
    finally:
        if close:
            stream.close()


def read_clustering(source, n: int | None = None) -> Clustering:
    stream, close = _open_text(source, "r")
    try:
        groups: list[list[int]] = []
        where: dict[int, int] = {}
        for lineno, line in _content_lines(stream):
            try:
                group = [int(t) for t in line.split()]
            except ValueError:
                raise ParseError("non-integer vertex id", lineno) from None
            for v in group:
                if v < 0:
                    raise ParseError(f"negative vertex {v}", lineno)
                if v in where:
                    raise ParseError(f"vertex {v} listed twice", lineno)
                where[v] = lineno
            groups.append(group)
        if not groups:
            raise ParseError("empty clustering file")
        size = n if n is not None else max(where) + 1
        for v in range(size):
            if v not in where:
                raise ParseError(f"vertex {v} missing")
        if max(where) >= size:
            raise ParseError(f"vertex {max(where)} out of range for n={size}")
        return Clustering.from_groups(groups, size)
    finally:
        if close:
            stream.close()


def write_clustering(clustering: Clustering, target) -> None:
    stream, close = _open_text(target, "w")
    try:
        stream.write("".join(" ".join(map(str, g)) + "\n" for g in clustering.groups()))
    finally:
        if close:
            stream.close()
