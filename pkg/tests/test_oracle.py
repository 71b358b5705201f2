import numpy as np
import pytest

from corrclust.instance import Clustering, PlantedSpec, planted_instance
from corrclust.oracle import (
    FaultyOracle,
    PerfectOracle,
    QueryError,
    QueryLedger,
    _flip_uniform,
    flip_uniforms,
    partition_sample,
)

TRUTH = Clustering([0, 0, 0, 1, 1, 2])


def test_perfect_answers_and_ledger():
    oracle = PerfectOracle(TRUTH)
    ledger = QueryLedger(keep_log=True)
    assert oracle.query(0, 2, ledger)
    assert not oracle.query(2, 3, ledger)
    assert oracle.query(4, 3, ledger)
    assert ledger.count == 3
    assert ledger.log == [(0, 2, True), (2, 3, False), (3, 4, True)]
    ledger.reset()
    assert ledger.count == 0 and ledger.log == []


@pytest.mark.parametrize("u,v", [(1, 1), (-1, 2), (0, 6)])
def test_bad_queries(u, v):
    with pytest.raises(QueryError):
        PerfectOracle(TRUTH).query(u, v)
    with pytest.raises(QueryError):
        FaultyOracle(TRUTH, 0.2).query(u, v)


def test_q_range():
    with pytest.raises(QueryError):
        FaultyOracle(TRUTH, 0.4)
    FaultyOracle(TRUTH, 1.0 / 3.0)


def test_faulty_answers_are_persistent():
    oracle = FaultyOracle(TRUTH, 0.3, seed=5)
    first = oracle.query(0, 3)
    assert all(oracle.query(0, 3) == first for _ in range(99))
    assert all(oracle.query(3, 0) == first for _ in range(10))


def test_faulty_order_independent():
    _, truth = planted_instance(PlantedSpec(30, 3, 0.0, seed=4))
    pairs = [(u, v) for u in range(30) for v in range(u + 1, 30)]
    a = FaultyOracle(truth, 0.25, seed=8)
    b = FaultyOracle(truth, 0.25, seed=8)
    fwd = [a.query(u, v) for u, v in pairs]
    rev = [b.query(u, v) for u, v in reversed(pairs)][::-1]
    assert fwd == rev


def test_prematerialize_matches_lazy():
    _, truth = planted_instance(PlantedSpec(25, 2, 0.0, seed=6))
    lazy = FaultyOracle(truth, 0.3, seed=2)
    eager = FaultyOracle(truth, 0.3, seed=2, prematerialize=True)
    for u in range(25):
        for v in range(u + 1, 25):
            assert lazy.query(u, v) == eager.query(u, v)


def test_scalar_and_vector_hash_agree():
    rng = np.random.default_rng(0)
    u = rng.integers(0, 10**6, 500)
    v = rng.integers(0, 10**6, 500)
    vec = flip_uniforms(12345, u, v)
    for i in range(500):
        assert _flip_uniform(12345, int(u[i]), int(v[i])) == vec[i]


def test_flip_rate():
    _, truth = planted_instance(PlantedSpec(120, 2, 0.0, seed=1))
    oracle = FaultyOracle(truth, 0.25, seed=3, prematerialize=True)
    wrong = sum(ans != truth.same(u, v) for (u, v), ans in oracle.memo.items())
    pairs = len(oracle.memo)
    sd = np.sqrt(pairs * 0.25 * 0.75)
    assert abs(wrong - 0.25 * pairs) <= 3 * sd


def test_q_zero_matches_perfect():
    _, truth = planted_instance(PlantedSpec(20, 3, 0.0, seed=5))
    perfect, faulty = PerfectOracle(truth), FaultyOracle(truth, 0.0, seed=9)
    for u in range(20):
        for v in range(u + 1, 20):
            assert perfect.query(u, v) == faulty.query(u, v)


def test_answer_matrix_counts_pairs():
    ledger = QueryLedger()
    m = FaultyOracle(TRUTH, 0.0).answer_matrix([0, 1, 3, 5], ledger)
    assert ledger.count == 6
    assert m[0, 1] and not m[0, 2] and (m == m.T).all()


def test_partition_single_vertex():
    ledger = QueryLedger()
    parts = partition_sample([4], PerfectOracle(TRUTH), 3, ledger)
    assert parts.groups == [[4]] and ledger.count == 0


def test_partition_recovers_planted_split():
    truth = Clustering([0, 0, 0, 1, 1, 1])
    ledger = QueryLedger()
    parts = partition_sample([0, 3, 1, 4, 2], PerfectOracle(truth), 2, ledger)
    assert parts.as_sets() == {frozenset({0, 1, 2}), frozenset({3, 4})}
    assert ledger.count <= 10


def test_partition_one_cluster():
    parts = partition_sample([0, 1, 2], PerfectOracle(TRUTH), 3)
    assert parts.k == 1


def test_partition_query_budget():
    _, truth = planted_instance(PlantedSpec(60, 4, 0.0, seed=7))
    ledger = QueryLedger()
    S = list(range(0, 60, 2))
    parts = partition_sample(S, PerfectOracle(truth), 4, ledger)
    assert ledger.count <= 4 * len(S)
    expected = {frozenset(v for v in S if truth.assignment[v] == c) for c in set(truth.assignment[S])}
    assert parts.as_sets() == expected


def test_partition_overflow_joins_last_group():
    parts = partition_sample([0, 3, 5], PerfectOracle(TRUTH), 2)
    assert parts.groups == [[0], [3, 5]]


def test_partition_errors():
    with pytest.raises(QueryError):
        partition_sample([], PerfectOracle(TRUTH), 2)
    with pytest.raises(QueryError):
        partition_sample([1, 1], PerfectOracle(TRUTH), 2)
