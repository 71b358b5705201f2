"""Query-based approximation for MaxAgree[k] and MinDisAgree[k] with a perfect
same-cluster oracle.

Sample sizes carry explicit constants (all 1 unless noted) times
``sample_scale``; any sample larger than the available pool is clamped to the
whole pool.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exact import PARTITION_LIMIT, opt_max_agree
from .instance import Clustering, EdgeLabeling
from .oracle import PerfectOracle, QueryLedger, SamplePartition, partition_sample

C1 = 1.0 / 20.0


@dataclass(frozen=True)
class AlgorithmParams:
    k: int
    epsilon: float
    delta: float = 0.1
    sample_scale: float = 1.0
    seed: int = 0
    literal_step7: bool = False
    exact_limit: int = PARTITION_LIMIT

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0.0 < self.epsilon <= 0.5:
            raise ValueError("epsilon must lie in (0, 1/2]")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.sample_scale <= 0:
            raise ValueError("sample_scale must be positive")


# -- sizes ----------------------------------------------------------------------


def num_parts(eps: float) -> int:
    return math.ceil(4.0 / eps - 1e-12)


def max_agree_sample_size(k: int, eps: float, delta: float, scale: float = 1.0) -> int:
    """Per-iteration sample for the perfect-oracle MaxAgree: (1/eps^2) ln(k m / delta)."""
    m = num_parts(eps)
    return max(1, math.ceil(scale * math.log(k * m / delta) / eps**2))


def max_agree_accuracy(k: int, alpha: float) -> float:
    return alpha**2 * C1**2 / (32.0 * k**4)


def min_disagree_sample_size(n: int, k: int, alpha: float, scale: float = 1.0) -> int:
    beta = C1 * alpha / (16.0 * k**2)
    return max(1, math.ceil(scale * 5.0 * math.log(max(n, 2)) / beta**2))


def max_agree_query_bound(n: int, k: int, eps: float, delta: float, scale: float = 1.0) -> int:
    """Closed-form cap on queries of one MaxAgree run: iterations * k * sample."""
    if k <= 1:
        return 0
    iterations = min(num_parts(eps), n)
    return iterations * k * min(max_agree_sample_size(k, eps, delta, scale), n)


def min_disagree_query_bound(n: int, k: int, eps: float, delta: float, scale: float = 1.0) -> int:
    """Closed-form cap for the recursive MinDisAgree at top-level alpha = eps/4.

    Level j (j = k, k-1, ..., 2) costs one MaxAgree run plus k|S| for the
    sample partition; sizes only shrink down the recursion, so n bounds them.
    """
    alpha = eps / 4.0
    total = 0
    for j in range(2, k + 1):
        total += max_agree_query_bound(n, j, max_agree_accuracy(j, alpha), delta, scale)
        total += j * min(min_disagree_sample_size(n, j, alpha, scale), n)
    return total


def asymptotic_query_formula(n: int, k: int, eps: float, delta: float) -> float:
    """The same level sum without clamping samples or iteration counts to n."""
    alpha = eps / 4.0
    total = 0.0
    for j in range(2, k + 1):
        acc = max_agree_accuracy(j, alpha)
        total += num_parts(acc) * j * max_agree_sample_size(j, acc, delta)
        total += j * min_disagree_sample_size(n, j, alpha)
    return total


# -- helpers --------------------------------------------------------------------


def draw_sample(pool: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` draws with replacement, deduplicated; the whole pool if size >= |pool|."""
    if size >= len(pool):
        return np.asarray(pool, dtype=np.int64).copy()
    picks = rng.integers(0, len(pool), size=size)
    return np.asarray(pool, dtype=np.int64)[np.unique(picks)]


def _perfect_partition(S, oracle: PerfectOracle, k_max: int, ledger) -> SamplePartition:
    # Same groups and query count as partition_sample, computed in bulk.
    S = np.asarray(S, dtype=np.int64)
    labels = oracle.truth.assignment[S]
    _, first = np.unique(labels, return_index=True)
    opened = np.sort(first)[:k_max]
    group_of = {int(labels[i]): g for g, i in enumerate(opened)}
    queries = 0
    members: list[list[int]] = [[] for _ in opened]
    for pos, (v, lab) in enumerate(zip(S.tolist(), labels.tolist())):
        g = group_of.get(lab)
        if g is None:
            queries += k_max
            members[-1].append(v)
        else:
            queries += g if opened[g] == pos else g + 1
            members[g].append(v)
    if ledger is not None:
        ledger.count += queries
    return SamplePartition(members)


def sample_partition(S, oracle, k_max: int, ledger) -> SamplePartition:
    if isinstance(oracle, PerfectOracle) and (ledger is None or not ledger.keep_log):
        return _perfect_partition(S, oracle, k_max, ledger)
    return partition_sample(S, oracle, k_max, ledger)


def greedy_scores(adj: np.ndarray, rows, groups) -> np.ndarray:
    """beta_j(v) for each v in ``rows`` (none of them in a group), shape (len(rows), k)."""
    rows = np.asarray(rows, dtype=np.int64)
    sizes = np.array([len(g) for g in groups], dtype=np.int64)
    pos = np.stack([adj[np.ix_(rows, np.asarray(g))].sum(axis=1) for g in groups], axis=1)
    neg = sizes[None, :] - pos
    return pos + (neg.sum(axis=1, keepdims=True) - neg)


def greedy_assign(v: int, parts: SamplePartition, labeling: EdgeLabeling) -> int:
    """Index j maximizing |G+(v) & S_j| + sum over l != j of |G-(v) & S_l|; lowest j on ties."""
    if not parts.groups:
        raise ValueError("no parts to assign to")
    if any(v in g for g in parts.groups):
        raise ValueError(f"vertex {v} already belongs to a part")
    scores = greedy_scores(labeling.adjacency(), [v], parts.groups)
    return int(np.argmax(scores[0]))


def _complete(sub: "_Sub", parts: SamplePartition) -> np.ndarray:
    """Local labels for ``sub``: sample members keep their group, the rest go greedy."""
    local = np.full(sub.n, -1, dtype=np.int64)
    for j, g in enumerate(parts.groups):
        local[sub.position[np.asarray(g)]] = j
    rest = np.nonzero(local < 0)[0]
    if rest.size:
        scores = greedy_scores(sub.adj, sub.vertices[rest], parts.groups)
        local[rest] = np.argmax(scores, axis=1)
    return local


class _Sub:
    """Labeling restricted to a vertex subset, addressed by global ids."""

    def __init__(self, labeling: EdgeLabeling, vertices):
        self.labeling = labeling
        self.vertices = np.asarray(vertices, dtype=np.int64)
        self.adj = labeling.adjacency()
        self.n = len(self.vertices)
        self.position = np.full(labeling.n, -1, dtype=np.int64)
        self.position[self.vertices] = np.arange(self.n)
        if self.n == labeling.n and np.array_equal(self.vertices, np.arange(labeling.n)):
            self.local = labeling
        else:
            self.local = labeling.induced(self.vertices)

        self._dense = None

    def disagreements(self, local_labels) -> int:
        # same value as disagreement_cost, via one dense product
        labels = np.asarray(local_labels, dtype=np.int64)
        if self._dense is None:
            # float32 products stay exact while counts are below 2**24
            dtype = np.float32 if self.n <= 4096 else np.float64
            self._dense = self.local.adjacency().astype(dtype)
        onehot = np.zeros((self.n, int(labels.max()) + 1), dtype=self._dense.dtype)
        onehot[np.arange(self.n), labels] = 1.0
        pos_inside = int(round(float((onehot * (self._dense @ onehot)).sum()) / 2))
        sizes = onehot.sum(axis=0).astype(np.int64)
        pairs_inside = int((sizes * (sizes - 1) // 2).sum())
        return self.local.num_positive - 2 * pos_inside + pairs_inside

    def agreements(self, local_labels) -> int:
        return self.local.num_pairs - self.disagreements(local_labels)


# -- MaxAgree -------------------------------------------------------------------


def run_max_agree(sub: _Sub, k, eps, sample_size, partitioner, rng, exact_limit, info=None):
    """Shared MaxAgree skeleton: m = ceil(4/eps) random parts; for each part draw a
    sample from the other vertices, partition it, extend greedily to every vertex,
    and keep the clustering with the most agreements (earliest on ties)."""
    n = sub.n
    if k <= 1 or n == 1:
        return np.zeros(n, dtype=np.int64)
    m = num_parts(eps)
    if m > n:
        if n <= exact_limit:
            if info is not None:
                info["exact_fallbacks"] = info.get("exact_fallbacks", 0) + 1
            _, best = opt_max_agree(sub.local, k, exact_limit)
            return best.assignment.copy()
        m = n
    samples = iteration_samples(sub.vertices, m, sample_size, rng)
    best_labels, best_score = None, -1
    for S in samples:
        parts = partitioner(S, k)
        labels = _complete(sub, parts)
        score = sub.agreements(labels)
        if score > best_score:
            best_labels, best_score = labels, score
    return best_labels


def iteration_samples(vertices, m: int, size: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Split ``vertices`` into ``m`` random near-equal parts; sample from the complement of each."""
    vertices = np.asarray(vertices, dtype=np.int64)
    n = len(vertices)
    order = rng.permutation(n)
    out = []
    for piece in np.array_split(order, m):
        mask = np.ones(n, dtype=bool)
        mask[piece] = False
        out.append(draw_sample(vertices[mask], size, rng))
    return out


def _max_agree(sub: _Sub, k, eps, delta, scale, oracle, ledger, rng, exact_limit, info=None):
    def partitioner(S, kk):
        return sample_partition(S, oracle, kk, ledger)

    r = max_agree_sample_size(k, eps, delta, scale)
    return run_max_agree(sub, k, eps, r, partitioner, rng, exact_limit, info)


def query_max_agree(labeling: EdgeLabeling, params: AlgorithmParams, oracle, ledger: QueryLedger | None = None, info: dict | None = None) -> Clustering:
    """k-clustering with at least OPT - eps n^2 / 2 agreements (with high probability)."""
    rng = np.random.default_rng(params.seed)
    sub = _Sub(labeling, np.arange(labeling.n))
    labels = _max_agree(sub, params.k, params.epsilon, params.delta, params.sample_scale,
                        oracle, ledger, rng, params.exact_limit, info)
    return Clustering(labels)


# -- MinDisAgree ----------------------------------------------------------------


def _min_disagree(sub: _Sub, k, alpha, params, oracle, ledger, rng, info, partitioner, max_agree,
                  sample_size=min_disagree_sample_size):
    n = sub.n
    if k == 1 or n == 1:
        return np.zeros(n, dtype=np.int64)
    if info is not None:
        info["levels"] = info.get("levels", 0) + 1

    clus_max = max_agree(sub, k, alpha, rng)
    cost_max = sub.disagreements(clus_max)

    size = sample_size(n, k, alpha, params.sample_scale)
    S = draw_sample(sub.vertices, size, rng)
    parts = partitioner(S, k)
    labels = _complete(sub, parts)

    sizes = np.bincount(labels, minlength=parts.k)
    measure = np.array([len(g) for g in parts.groups]) if params.literal_step7 else sizes
    large = [j for j in range(parts.k) if measure[j] >= n / (2.0 * k)]
    small = [j for j in range(parts.k) if measure[j] < n / (2.0 * k) and sizes[j] > 0]

    if not large:
        cost_min = sub.disagreements(labels)
        return labels if cost_min <= cost_max else clus_max

    clus_min = labels.copy()
    if small:
        in_small = np.isin(labels, small)
        W = np.nonzero(in_small)[0]
        inner = _min_disagree(_Sub(sub.labeling, sub.vertices[W]), len(small), alpha, params,
                              oracle, ledger, rng, info, partitioner, max_agree, sample_size)
        clus_min[W] = parts.k + inner
    cost_min = sub.disagreements(clus_min)
    return clus_min if cost_min <= cost_max else clus_max


def query_min_disagree(labeling: EdgeLabeling, params: AlgorithmParams, oracle, ledger: QueryLedger | None = None, info: dict | None = None) -> Clustering:
    """Recursive MinDisAgree[k] at precision alpha = eps/4, returning the better of
    the recursive clustering and a high-accuracy MaxAgree clustering."""
    rng = np.random.default_rng(params.seed)
    alpha = params.epsilon / 4.0

    def partitioner(S, k):
        return sample_partition(S, oracle, k, ledger)

    def max_agree(sub, k, alpha, rng):
        return _max_agree(sub, k, max_agree_accuracy(k, alpha), params.delta, params.sample_scale,
                          oracle, ledger, rng, params.exact_limit, info)

    sub = _Sub(labeling, np.arange(labeling.n))
    labels = _min_disagree(sub, params.k, alpha, params, oracle, ledger, rng, info, partitioner, max_agree)
    return Clustering(labels)
