"""Exact reference solvers used to validate everything else.

Brute force by default: set-partition enumeration for clustering, assignment
enumeration for formulas and colorings.  Each has a configurable size limit
and refuses (raises ``TooLarge``) above it instead of guessing.  Beyond the
limits, a few decisions are delegated to a SAT / MaxSAT solver and one exact
branch-and-bound handles sparse instances with an unbounded cluster count.
"""

from __future__ import annotations

import math
import sys
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .formulas import CnfFormula, Hypergraph3, NaeFormula
from .instance import Clustering, EdgeLabeling

PARTITION_LIMIT = 14
ASSIGNMENT_LIMIT = 24


class TooLarge(ValueError):
    """Instance exceeds the configured exhaustive limit."""


# -- set partitions -------------------------------------------------------------


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    if n == k:
        return 1
    if n == 0 or k == 0:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def count_partitions(n: int, k_max: int) -> int:
    return sum(stirling2(n, j) for j in range(1, min(n, k_max) + 1))


class PartitionIterator:
    """Set partitions of ``{0..n-1}`` into at most ``k_max`` blocks, as
    restricted-growth strings in lexicographic order."""

    def __init__(self, n: int, k_max: int | None = None):
        if n < 1:
            raise ValueError("n must be positive")
        self.n = n
        self.k_max = n if k_max is None else max(1, min(k_max, n))

    def __len__(self) -> int:
        return count_partitions(self.n, self.k_max)

    def __iter__(self):
        n, k = self.n, self.k_max
        a = [0] * n
        mx = [0] * n  # mx[i] = max(a[0..i])
        while True:
            yield tuple(a)
            i = n - 1
            while i > 0 and (a[i] > mx[i - 1] or a[i] + 1 >= k):
                i -= 1
            if i == 0:
                return
            a[i] += 1
            mx[i] = max(mx[i - 1], a[i])
            for j in range(i + 1, n):
                a[j] = 0
                mx[j] = mx[i]


def _extend(rows: np.ndarray, mx: np.ndarray, steps: int, k: int):
    for _ in range(steps):
        counts = np.minimum(mx + 1, k - 1) + 1
        idx = np.repeat(np.arange(len(rows)), counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        val = (np.arange(len(idx)) - starts).astype(np.int8)
        rows = np.concatenate([rows[idx], val[:, None]], axis=1)
        mx = np.maximum(mx[idx], val)
    return rows, mx


def rgs_blocks(n: int, k_max: int, tail: int = 9):
    """Yield 2-D int8 arrays of restricted-growth strings, lexicographic overall."""
    k = max(1, min(k_max, n))
    head = max(1, n - tail)
    prefix, pmx = _extend(np.zeros((1, 1), dtype=np.int8), np.zeros(1, dtype=np.int8), head - 1, k)
    for r in range(len(prefix)):
        rows, _ = _extend(prefix[r : r + 1], pmx[r : r + 1], n - head, k)
        yield rows


def _pair_weights(labeling: EdgeLabeling):
    iu, iv = np.triu_indices(labeling.n, 1)
    adj = labeling.adjacency()
    # putting a pair together changes disagreements by +1 (negative) or -1 (positive)
    w = np.where(adj[iu, iv], -1, 1).astype(np.int64)
    return iu, iv, w


def opt_min_disagree(labeling: EdgeLabeling, k: int, limit: int = PARTITION_LIMIT):
    """Minimum disagreement cost over partitions into at most ``k`` blocks.

    Returns ``(cost, clustering)``; ties go to the first partition in
    lexicographic restricted-growth order.
    """
    n = labeling.n
    if n > limit:
        raise TooLarge(f"n={n} exceeds the exhaustive partition limit {limit}")
    if k < 1:
        raise ValueError("k must be at least 1")
    if n == 1:
        return 0, Clustering([0])
    iu, iv, w = _pair_weights(labeling)
    base = labeling.num_positive
    best_cost, best_row = None, None
    for rows in rgs_blocks(n, k):
        same = rows[:, iu] == rows[:, iv]
        costs = base + same.astype(np.int64) @ w
        i = int(np.argmin(costs))
        if best_cost is None or costs[i] < best_cost:
            best_cost, best_row = int(costs[i]), rows[i].copy()
    return best_cost, Clustering(best_row)


def opt_max_agree(labeling: EdgeLabeling, k: int, limit: int = PARTITION_LIMIT):
    """Maximum agreements over partitions into at most ``k`` blocks."""
    cost, clustering = opt_min_disagree(labeling, k, limit)
    return labeling.num_pairs - cost, clustering


# -- sparse exact solver (unbounded k) ----------------------------------------------


class SearchLimit(RuntimeError):
    """Branch-and-bound exceeded its node budget."""


def _cluster_gain(C, nbrs) -> int:
    e = sum(1 for w in C for u in nbrs[w] if u in C) // 2
    return 2 * e - len(C) * (len(C) - 1) // 2


def _candidate_clusters(n: int, nbrs, cap: int, budget: list) -> list[frozenset]:
    # Some optimal clustering uses only connected clusters in which every member
    # has at least ceil((s-1)/2) positive neighbours inside (else moving it out
    # helps strictly).  Enumerate exactly those sets, by size.
    out = []
    for s in range(2, cap + 1):
        r = s // 2
        alive = [len(nbrs[v]) >= r for v in range(n)]
        deg = [sum(alive[u] for u in nbrs[v]) if alive[v] else 0 for v in range(n)]
        stack = [v for v in range(n) if alive[v] and deg[v] < r]
        while stack:
            v = stack.pop()
            if not alive[v]:
                continue
            alive[v] = False
            for u in nbrs[v]:
                if alive[u]:
                    deg[u] -= 1
                    if deg[u] < r:
                        stack.append(u)
        for v in range(n):
            if alive[v]:
                _grow(v, {v}, frozenset(), s, r, nbrs, alive, out, budget)
    return out


def _grow(root, C, excl, s, r, nbrs, alive, out, budget):
    budget[0] -= 1
    if budget[0] < 0:
        raise SearchLimit("candidate enumeration exceeded the node limit")
    need = s - len(C)
    inside = {w: sum(1 for u in nbrs[w] if u in C) for w in C}
    if need == 0:
        if all(d >= r for d in inside.values()):
            out.append(frozenset(C))
        return
    worst = None
    for w, d in inside.items():
        deficit = r - d
        if deficit > need:
            return
        if deficit > 0 and (worst is None or deficit > worst[0]):
            worst = (deficit, w)
    if worst is not None:
        pool = [u for u in nbrs[worst[1]] if u not in C]
    else:
        pool = sorted({u for w in C for u in nbrs[w] if u not in C})
    pool = [u for u in pool if u > root and alive[u] and u not in excl]
    for u in pool:
        _grow(root, C | {u}, excl, s, r, nbrs, alive, out, budget)
        excl = excl | {u}


def sparse_min_disagree(
    labeling: EdgeLabeling,
    max_cost: int | None = None,
    node_limit: int = 2_000_000,
    vertex_limit: int = 4000,
):
    """Exact MinDisAgree with no bound on the number of clusters.

    Suited to sparse positive graphs.  Every clustering costs ``M - sum(gain)``
    where ``gain(C) = 2 e_in(C) - C(|C|,2)``; branch-and-bound maximizes total
    gain over candidate clusters.  With ``max_cost`` set, answers the decision
    question instead and returns ``(None, None)`` when no clustering is that
    cheap.  Raises ``SearchLimit`` rather than returning an unproven answer.
    """
    n = labeling.n
    if n > vertex_limit:
        raise TooLarge(f"n={n} exceeds the sparse solver limit {vertex_limit}")
    nbrs = labeling.neighbors()
    M = labeling.num_positive
    cap = 2 * max((len(a) for a in nbrs), default=0) + 1
    cands = []
    budget = [node_limit]
    for C in _candidate_clusters(n, nbrs, cap, budget):
        g = _cluster_gain(C, nbrs)
        if g > 0:
            cands.append((C, g))
    by_vertex: list[list[int]] = [[] for _ in range(n)]
    for i, (C, g) in enumerate(cands):
        for v in C:
            by_vertex[v].append(i)
    ratio = [g / len(C) for C, g in cands]
    b = [max((ratio[i] for i in by_vertex[v]), default=0.0) for v in range(n)]
    for lst in by_vertex:
        lst.sort(key=lambda i: (-ratio[i], i))

    target = None if max_cost is None else M - max_cost
    best = {"gain": -1, "chosen": None}
    nodes = node_limit - budget[0]

    def rec(covered, gain, bound, chosen):
        nonlocal nodes
        nodes += 1
        if nodes > node_limit:
            raise SearchLimit(f"more than {node_limit} search nodes")
        if math.floor(bound + 1e-9) <= best["gain"]:
            return
        if target is not None and bound < target - 1e-9:
            return
        pick, opts = None, None
        for v in range(n):
            if v in covered:
                continue
            o = [i for i in by_vertex[v] if not (cands[i][0] & covered)]
            if pick is None or len(o) < len(opts):
                pick, opts = v, o
                if not o:
                    break
        if pick is None:
            best["gain"], best["chosen"] = gain, list(chosen)
            return
        for i in opts:
            C, g = cands[i]
            chosen.append(i)
            rec(covered | C, gain + g, bound - sum(b[w] for w in C) + g, chosen)
            chosen.pop()
            if target is not None and best["gain"] >= target:
                return
        rec(covered | {pick}, gain, bound - b[pick], chosen)

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * n + 1000))
    try:
        rec(frozenset(), 0, sum(b), [])
    finally:
        sys.setrecursionlimit(old)

    if best["chosen"] is None:
        return None, None
    assignment = np.arange(n)
    for i in best["chosen"]:
        members = sorted(cands[i][0])
        assignment[members] = members[0]
    return M - best["gain"], Clustering(assignment)


# -- formulas -------------------------------------------------------------------


def _literal_table(clauses, arity):
    lits = np.array(clauses, dtype=np.int64).reshape(-1, arity)
    return np.abs(lits) - 1, lits < 0


def _assignment_blocks(num_vars: int, block: int = 1 << 16):
    total = 1 << num_vars
    bits = np.arange(num_vars, dtype=np.int64)
    for start in range(0, total, block):
        x = np.arange(start, min(total, start + block), dtype=np.int64)
        yield ((x[:, None] >> bits) & 1).astype(bool)


def _clause_truth(assign: np.ndarray, var, neg) -> np.ndarray:
    """Literal values, shape (rows, clauses, arity)."""
    return assign[:, var] ^ neg


def _as_bool_array(assignment, num_vars: int) -> np.ndarray:
    a = np.asarray(assignment, dtype=bool).reshape(-1)
    if a.shape[0] != num_vars:
        raise ValueError(f"assignment has {a.shape[0]} values, formula has {num_vars} variables")
    return a


def val(formula: CnfFormula, assignment) -> Fraction:
    """Fraction of clauses with at least one true literal (1 for an empty formula)."""
    if formula.m == 0:
        return Fraction(1)
    a = _as_bool_array(assignment, formula.num_vars)
    var, neg = _literal_table(formula.clauses, formula.arity)
    sat = _clause_truth(a[None, :], var, neg).any(axis=2)
    return Fraction(int(sat.sum()), formula.m)


def val_nae(formula: NaeFormula, assignment) -> Fraction:
    """Fraction of clauses whose literals are not all equal."""
    if formula.m == 0:
        return Fraction(1)
    a = _as_bool_array(assignment, formula.num_vars)
    var, neg = _literal_table(formula.clauses, formula.arity)
    t = _clause_truth(a[None, :], var, neg)
    sat = t.any(axis=2) & ~t.all(axis=2)
    return Fraction(int(sat.sum()), formula.m)


def _max_fraction(num_vars, clauses, arity, nae, limit):
    if not clauses:
        return Fraction(1), np.zeros(num_vars, dtype=bool)
    if num_vars > limit:
        raise TooLarge(f"{num_vars} variables exceed the enumeration limit {limit}")
    var, neg = _literal_table(clauses, arity)
    best, arg = -1, None
    for block in _assignment_blocks(num_vars):
        t = _clause_truth(block, var, neg)
        sat = t.any(axis=2)
        if nae:
            sat &= ~t.all(axis=2)
        counts = sat.sum(axis=1)
        i = int(np.argmax(counts))
        if counts[i] > best:
            best, arg = int(counts[i]), block[i].copy()
            if best == len(clauses):
                break
    return Fraction(best, len(clauses)), arg


def max_val(formula: CnfFormula, limit: int = ASSIGNMENT_LIMIT) -> Fraction:
    return _max_fraction(formula.num_vars, formula.clauses, formula.arity, False, limit)[0]


def max_val_nae(formula: NaeFormula, limit: int = ASSIGNMENT_LIMIT) -> Fraction:
    return _max_fraction(formula.num_vars, formula.clauses, formula.arity, True, limit)[0]


def best_nae_assignment(formula: NaeFormula, limit: int = ASSIGNMENT_LIMIT) -> np.ndarray:
    return _max_fraction(formula.num_vars, formula.clauses, formula.arity, True, limit)[1]


def _edges_as_clauses(h: Hypergraph3):
    return [tuple(v + 1 for v in e) for e in h.edges]


def max_bichromatic_fraction(h: Hypergraph3, limit: int = ASSIGNMENT_LIMIT) -> Fraction:
    """Largest fraction of non-monochromatic edges over all 2-colorings."""
    return _max_fraction(h.num_vertices, _edges_as_clauses(h), 3, True, limit)[0]


def is_2_colorable(h: Hypergraph3, limit: int = ASSIGNMENT_LIMIT) -> bool:
    return max_bichromatic_fraction(h, limit) == 1


# -- solver-backed decisions beyond the enumeration limits ------------------------------


def _nae_cnf(clauses):
    cnf = []
    for c in clauses:
        cnf.append(list(c))
        cnf.append([-l for l in c])
    return cnf


def sat_solve(num_vars: int, clauses, nae: bool):
    """Return a satisfying assignment (bool array) or None, using a CDCL solver."""
    from pysat.solvers import Solver

    cnf = _nae_cnf(clauses) if nae else [list(c) for c in clauses]
    with Solver(name="cadical153", bootstrap_with=cnf) as s:
        if not s.solve():
            return None
        model = s.get_model() or []
    out = np.zeros(num_vars, dtype=bool)
    for lit in model:
        if 0 < abs(lit) <= num_vars:
            out[abs(lit) - 1] = lit > 0
    return out


def maxsat_value(num_vars: int, clauses, nae: bool) -> Fraction:
    """Exact maximum satisfied fraction via core-guided MaxSAT (RC2)."""
    from pysat.examples.rc2 import RC2
    from pysat.formula import WCNF

    if not clauses:
        return Fraction(1)
    if sat_solve(num_vars, clauses, nae) is not None:
        return Fraction(1)
    wcnf = WCNF()
    top = num_vars
    for c in clauses:
        if nae:
            # relax both halves of a NAE clause with one selector
            top += 1
            wcnf.append(list(c) + [top])
            wcnf.append([-l for l in c] + [top])
            wcnf.append([-top], weight=1)
        else:
            wcnf.append(list(c), weight=1)
    with RC2(wcnf) as rc2:
        rc2.compute()
        cost = rc2.cost
    return Fraction(len(clauses) - cost, len(clauses))


def is_satisfiable(formula, limit: int = ASSIGNMENT_LIMIT) -> bool:
    """Satisfiability (NAE semantics for NaeFormula, 2-colorability for Hypergraph3):
    enumeration within the limit, CDCL above it."""
    if isinstance(formula, Hypergraph3):
        nv, clauses, arity, nae = formula.num_vertices, _edges_as_clauses(formula), 3, True
    else:
        nv, clauses, arity = formula.num_vars, formula.clauses, formula.arity
        nae = isinstance(formula, NaeFormula)
    if nv <= limit:
        return _max_fraction(nv, clauses, arity, nae, limit)[0] == 1
    return sat_solve(nv, clauses, nae) is not None


def optimum_value(formula, limit: int = ASSIGNMENT_LIMIT) -> tuple[Fraction, str]:
    """Maximum satisfied fraction and the method used ("enumeration" or "maxsat")."""
    if isinstance(formula, Hypergraph3):
        nv, clauses, arity, nae = formula.num_vertices, _edges_as_clauses(formula), 3, True
    else:
        nv, clauses, arity = formula.num_vars, formula.clauses, formula.arity
        nae = isinstance(formula, NaeFormula)
    if nv <= limit:
        return _max_fraction(nv, clauses, arity, nae, limit)[0], "enumeration"
    return maxsat_value(nv, clauses, nae), "maxsat"
