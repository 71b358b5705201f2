"""MaxAgree / MinDisAgree with a faulty same-cluster oracle.

Instead of grouping a sample through representative queries, every pair in
the sample is queried and the resulting noisy +/- instance is clustered
(``recover_sample_partition``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exact import TooLarge, opt_min_disagree
from .instance import Clustering, EdgeLabeling
from .oracle import QueryLedger, SamplePartition
from .query_cluster import (
    AlgorithmParams,
    _min_disagree,
    _Sub,
    max_agree_accuracy,
    num_parts,
    run_max_agree,
)

EXACT_RECOVERY_LIMIT = 12


class RecoveryError(ValueError):
    pass


class PreconditionWarning(UserWarning):
    """A planted cluster is smaller than n^(3/4); the guarantee does not apply."""


@dataclass(frozen=True)
class RecoveryConfig:
    method: str = "local-search"
    size_floor_check: bool = False
    max_iters: int = 100
    seed: int = 0
    exact_limit: int = EXACT_RECOVERY_LIMIT
    strict: bool = False

    def __post_init__(self):
        if self.method not in ("exact-ml", "local-search"):
            raise ValueError(f"unknown recovery method {self.method!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


# -- sizes ----------------------------------------------------------------------


def faulty_sample_size(n: int, k: int, eps: float, delta: float, scale: float = 1.0, c: float = 1.0) -> int:
    """r = c * sqrt(n) / (k eps^2) * ln(m / (eps delta)), with m = ceil(4/eps)."""
    m = num_parts(eps)
    return max(2, math.ceil(scale * c * math.sqrt(n) / (k * eps**2) * math.log(m / (eps * delta))))


def overlap_bound(k: int, eps: float, delta: float, c: float = 16.0) -> int:
    """Constant cap on |S^i & S^j| used by the overlap check."""
    m = num_parts(eps)
    return math.ceil(c * math.log(m / (eps * delta)) ** 2 / (k**2 * eps**6))


def faulty_max_agree_query_bound(n: int, k: int, eps: float, delta: float, scale: float = 1.0) -> int:
    if k <= 1:
        return 0
    r = min(faulty_sample_size(n, k, eps, delta, scale), n)
    return min(num_parts(eps), n) * (r * (r - 1) // 2)


def faulty_min_disagree_query_bound(n: int, k: int, eps: float, delta: float, scale: float = 1.0) -> int:
    alpha = eps / 4.0
    total = 0
    for j in range(2, k + 1):
        total += faulty_max_agree_query_bound(n, j, max_agree_accuracy(j, alpha), delta, scale)
        r = min(faulty_sample_size(n, j, alpha, delta, scale), n)
        total += r * (r - 1) // 2
    return total


def check_size_precondition(truth: Clustering | None, strict: bool = False) -> bool:
    """True when every truth cluster has at least n^(3/4) vertices."""
    if truth is None:
        warnings.warn("no planted truth available; cluster-size precondition not checked",
                      PreconditionWarning, stacklevel=3)
        return False
    floor = truth.n ** 0.75
    smallest = int(truth.sizes().min())
    if smallest >= floor:
        return True
    msg = f"smallest truth cluster has {smallest} vertices, below n^(3/4) = {floor:.1f}"
    if strict:
        raise RecoveryError(msg)
    warnings.warn(msg, PreconditionWarning, stacklevel=3)
    return False


# -- recovery -------------------------------------------------------------------


def _local_search(W: np.ndarray, max_iters: int) -> np.ndarray:
    """Majority-greedy start, then single-vertex moves while disagreements drop."""
    s = W.shape[0]
    labels = np.zeros(s, dtype=np.int64)
    sums = [W[:, 0].copy()]  # sums[c][v] = sum of W[v, u] over u in cluster c
    for v in range(1, s):
        scores = np.array([col[v] for col in sums])
        c = int(np.argmax(scores))
        if scores[c] > 0:
            labels[v] = c
            sums[c] += W[:, v]
        else:
            labels[v] = len(sums)
            sums.append(W[:, v].copy())
    sums = np.stack(sums, axis=1)
    for _ in range(max_iters):
        moved = False
        for v in range(s):
            a = labels[v]
            here = sums[v, a]
            scores = sums[v].copy()
            scores[a] = here
            b = int(np.argmax(scores))
            gain_join = scores[b] - here
            gain_alone = -here
            if gain_join > 0 and gain_join >= gain_alone and b != a:
                target = b
            elif gain_alone > 0 and np.count_nonzero(labels == a) > 1:
                target = sums.shape[1]
                sums = np.concatenate([sums, np.zeros((s, 1), dtype=sums.dtype)], axis=1)
            else:
                continue
            sums[:, a] -= W[:, v]
            sums[:, target] += W[:, v]
            labels[v] = target
            moved = True
        if not moved:
            break
    return labels


def _polish(W: np.ndarray, labels: np.ndarray, max_iters: int) -> np.ndarray:
    """Single-vertex moves between the existing groups only (the group count stays fixed)."""
    labels = labels.copy()
    k = int(labels.max()) + 1
    if k == 1:
        return labels
    onehot = np.zeros((len(labels), k), dtype=np.int64)
    onehot[np.arange(len(labels)), labels] = 1
    sums = W @ onehot
    counts = onehot.sum(axis=0)
    for _ in range(max_iters):
        moved = False
        for v in range(len(labels)):
            a = labels[v]
            b = int(np.argmax(sums[v]))
            if sums[v, b] > sums[v, a] and counts[a] > 1:
                sums[:, a] -= W[:, v]
                sums[:, b] += W[:, v]
                counts[a] -= 1
                counts[b] += 1
                labels[v] = b
                moved = True
        if not moved:
            break
    return labels


def _merge_down(labels: np.ndarray, yes: np.ndarray, k: int) -> np.ndarray:
    """Merge the smallest group into its highest-affinity partner until k remain."""
    labels = np.unique(labels, return_inverse=True)[1]
    while labels.max() + 1 > k:
        sizes = np.bincount(labels)
        small = int(np.argmin(sizes))
        members = labels == small
        affinity = np.array([yes[np.ix_(members, labels == c)].sum() for c in range(len(sizes))])
        affinity[small] = -1
        partner = int(np.argmax(affinity))
        labels[members] = partner
        labels = np.unique(labels, return_inverse=True)[1]
    return labels


def recover_sample_partition(S, oracle, k: int, config: RecoveryConfig = RecoveryConfig(),
                             ledger: QueryLedger | None = None) -> SamplePartition:
    """Query every pair of ``S`` and cluster the induced noisy instance into at most k groups."""
    S = [int(v) for v in S]
    if len(set(S)) != len(S):
        raise RecoveryError("sample vertices must be distinct")
    if not S:
        raise RecoveryError("empty sample")
    if len(S) == 1:
        return SamplePartition([S])
    if config.method == "exact-ml" and len(S) > config.exact_limit:
        raise TooLarge(f"exact-ml recovery limited to {config.exact_limit} vertices, got {len(S)}")

    yes = np.zeros((len(S), len(S)), dtype=bool)
    for i in range(len(S)):
        for j in range(i + 1, len(S)):
            yes[i, j] = yes[j, i] = oracle.query(S[i], S[j], ledger)

    if config.method == "exact-ml":
        iu, iv = np.nonzero(np.triu(yes, 1))
        induced = EdgeLabeling(len(S), np.stack([iu, iv], axis=1))
        _, best = opt_min_disagree(induced, k, config.exact_limit)
        labels = best.assignment
    else:
        W = np.where(yes, 1, -1).astype(np.int64)
        np.fill_diagonal(W, 0)
        labels = _merge_down(_local_search(W, config.max_iters), yes, k)
        labels = _polish(W, labels, config.max_iters)

    labels = Clustering(labels).assignment
    groups = [[] for _ in range(int(labels.max()) + 1)]
    for v, c in zip(S, labels.tolist()):
        groups[c].append(v)
    if config.size_floor_check:
        floor = math.sqrt(len(S))
        if min(len(g) for g in groups) < floor:
            raise RecoveryError(f"recovered group smaller than sqrt(|S|) = {floor:.2f}")
    return SamplePartition(groups)


# -- algorithms -----------------------------------------------------------------


def _faulty_max_agree(sub, k, eps, params, oracle, ledger, config, rng, info):
    def partitioner(S, kk):
        return recover_sample_partition(S, oracle, kk, config, ledger)

    r = faulty_sample_size(sub.n, k, eps, params.delta, params.sample_scale)
    return run_max_agree(sub, k, eps, r, partitioner, rng, params.exact_limit, info)


def faulty_query_max_agree(labeling: EdgeLabeling, params: AlgorithmParams, oracle,
                           ledger: QueryLedger | None = None,
                           config: RecoveryConfig = RecoveryConfig(), info: dict | None = None) -> Clustering:
    """MaxAgree[k] through sample recovery; m = ceil(4/eps) iterations of C(r,2) queries."""
    check_size_precondition(getattr(oracle, "truth", None), config.strict)
    rng = np.random.default_rng(params.seed)
    sub = _Sub(labeling, np.arange(labeling.n))
    labels = _faulty_max_agree(sub, params.k, params.epsilon, params, oracle, ledger, config, rng, info)
    return Clustering(labels)


def faulty_query_min_disagree(labeling: EdgeLabeling, params: AlgorithmParams, oracle,
                              ledger: QueryLedger | None = None,
                              config: RecoveryConfig = RecoveryConfig(), info: dict | None = None) -> Clustering:
    """The recursive MinDisAgree scheme with faulty MaxAgree and sample recovery."""
    check_size_precondition(getattr(oracle, "truth", None), config.strict)
    rng = np.random.default_rng(params.seed)
    alpha = params.epsilon / 4.0
    n = labeling.n

    def partitioner(S, k):
        return recover_sample_partition(S, oracle, k, config, ledger)

    def max_agree(sub, k, alpha, rng):
        return _faulty_max_agree(sub, k, max_agree_accuracy(k, alpha), params, oracle, ledger, config, rng, info)

    def sample_size(m, k, alpha, scale):
        return faulty_sample_size(m, k, alpha, params.delta, scale)

    sub = _Sub(labeling, np.arange(n))
    labels = _min_disagree(sub, params.k, alpha, params, oracle, ledger, rng, info,
                           partitioner, max_agree, sample_size)
    return Clustering(labels)


__all__ = [
    "RecoveryConfig", "RecoveryError", "PreconditionWarning", "recover_sample_partition",
    "faulty_query_max_agree", "faulty_query_min_disagree", "faulty_sample_size",
    "overlap_bound", "faulty_max_agree_query_bound", "faulty_min_disagree_query_bound",
    "check_size_precondition",
]
