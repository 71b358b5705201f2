import json
from fractions import Fraction

import numpy as np
import pytest

from corrclust.exact import (
    best_nae_assignment,
    is_2_colorable,
    is_satisfiable,
    max_bichromatic_fraction,
    max_val_nae,
    sparse_min_disagree,
)
from corrclust.formulas import (
    CnfFormula,
    Hypergraph3,
    NaeFormula,
    fano_plane,
    random_e3sat,
    random_nae,
    unsatisfiable_e3sat,
)
from corrclust.instance import disagreement_cost
from corrclust.reductions import (
    ReductionError,
    check_nae3_four_sets,
    check_nae6_four_sets,
    coloring_to_clustering,
    correlation_with_layout,
    e3sat_to_nae6sat,
    hypergraph_to_correlation,
    monotone_to_hypergraph,
    nae3sat_to_monotone,
    nae6sat_to_nae3sat,
    run_chain,
    size_checks,
    verify_reduction_gap,
)


def test_e3sat_clause_expansion():
    phi, trace = e3sat_to_nae6sat(CnfFormula(9, [(2, -7, 9)]))
    y = lambda i: 2 * i - 1
    z = lambda i: 2 * i
    assert phi.clauses == (
        (y(2), z(2), y(7), -z(7), y(9), z(9)),
        (y(2), z(2), y(7), -z(7), -y(9), -z(9)),
        (y(2), z(2), -y(7), z(7), y(9), z(9)),
        (y(2), z(2), -y(7), z(7), -y(9), -z(9)),
    )
    assert trace.stages[0].mapping["names"]["x7"] == ["y7", "z7"]


def test_e3sat_clause_count():
    psi = random_e3sat(6, 5, np.random.default_rng(0))
    assert e3sat_to_nae6sat(psi)[0].m == 20


def test_nae6_to_nae3_counts():
    phi, _ = nae6sat_to_nae3sat(NaeFormula(6, [(1, 2, 3, 4, 5, 6)], 6))
    assert phi.m == 4 and phi.num_vars == 9
    three = random_nae(8, 3, 6, np.random.default_rng(1))
    assert nae6sat_to_nae3sat(three)[0].m == 12


def test_monotone_example():
    phi, _ = nae3sat_to_monotone(NaeFormula(3, [(1, -2, 3)]))
    assert phi.m == 13 and phi.monotone
    assert phi.clauses[0] == (1, 4, 5)


def test_monotone_covers_unused_variables():
    phi, _ = nae3sat_to_monotone(NaeFormula(5, [(1, 2, 3)]))
    assert phi.m == 1 + 4 * 1 * 5


def test_monotone_preserves_satisfiability():
    rng = np.random.default_rng(2)
    for _ in range(60):
        psi = random_nae(5, int(rng.integers(1, 5)), 3, rng)
        phi, _ = nae3sat_to_monotone(psi)
        # the output is too wide to enumerate; the SAT solver decides it
        assert (max_val_nae(psi) == 1) == is_satisfiable(phi)


def test_hypergraph_single_edge():
    h, _ = monotone_to_hypergraph(NaeFormula(3, [(1, 2, 3)]))
    assert h.edges == ((0, 1, 2),)


def test_hypergraph_rejects_repeats():
    with pytest.raises(ReductionError):
        monotone_to_hypergraph(NaeFormula(3, [(1, 1, 2)]))
    with pytest.raises(ReductionError):
        monotone_to_hypergraph(NaeFormula(3, [(1, -2, 3)]))


def test_hypergraph_fraction_equals_nae_value():
    rng = np.random.default_rng(3)
    for _ in range(60):
        psi = random_nae(int(rng.integers(3, 11)), int(rng.integers(1, 12)), 3, rng, monotone=True)
        h, _ = monotone_to_hypergraph(psi)
        assert max_val_nae(psi) == max_bichromatic_fraction(h)
        assert h.max_degree() <= psi.max_occurrence()


def test_correlation_single_edge_optimum():
    h = Hypergraph3(3, [(0, 1, 2)])
    lab, k, trace = hypergraph_to_correlation(h)
    assert lab.num_positive == 2 * lab.n
    assert k == lab.n
    cost, _ = sparse_min_disagree(lab)
    assert cost == lab.num_positive - lab.n


def test_correlation_fano_is_strictly_above():
    lab, _, _, _ = correlation_with_layout(fano_plane())
    M, N = lab.num_positive, lab.n
    assert M == 2 * N
    # decision query: no clustering reaches cost M - N
    assert sparse_min_disagree(lab, max_cost=M - N) == (None, None)


def test_correlation_rejects_empty():
    with pytest.raises(ReductionError):
        hypergraph_to_correlation(Hypergraph3(3, []))


def test_certificate_cost_and_optimum_on_small_colorable():
    rng = np.random.default_rng(4)
    for _ in range(8):
        nv = int(rng.integers(3, 7))
        edges = [tuple(rng.choice(nv, 3, replace=False)) for _ in range(int(rng.integers(1, 4)))]
        h = Hypergraph3(nv, edges)
        if not is_2_colorable(h):
            continue
        lab, _, _, layout = correlation_with_layout(h)
        coloring = best_nae_assignment(NaeFormula(nv, [tuple(v + 1 for v in e) for e in h.edges]))
        M, N = lab.num_positive, lab.n
        assert disagreement_cost(lab, coloring_to_clustering(h, coloring, layout)) == M - N
        assert sparse_min_disagree(lab, max_cost=M - N - 1) == (None, None)


def test_four_set_claims():
    rng = np.random.default_rng(5)
    for _ in range(20):
        psi = random_e3sat(6, int(rng.integers(1, 3)), rng)
        phi6, _ = e3sat_to_nae6sat(psi)
        assert check_nae6_four_sets(phi6) == 0
        phi3, _ = nae6sat_to_nae3sat(phi6)
        assert check_nae3_four_sets(phi6, phi3) == 0


def test_chain_size_checks_and_trace():
    psi = random_e3sat(7, 5, np.random.default_rng(6))
    result = run_chain(psi)
    checks = size_checks(result)
    assert checks and all(checks.values())
    doc = json.loads(result.trace.to_json())
    assert [s["name"] for s in doc["stages"]] == [
        "e3sat_to_nae6sat", "nae6sat_to_nae3sat", "nae3sat_to_monotone",
        "monotone_to_hypergraph", "hypergraph_to_correlation"]


def test_sub_chain_and_kind_errors():
    psi = random_e3sat(5, 3, np.random.default_rng(7))
    result = run_chain(psi, "e3sat", "nae6sat")
    assert set(result.artifacts) == {"e3sat", "nae6sat"}
    with pytest.raises(ReductionError):
        run_chain(result.artifacts["nae6sat"], "e3sat", "nae3sat")
    with pytest.raises(ReductionError):
        run_chain(psi, "nae3sat", "e3sat")


def test_verify_satisfiable():
    psi = CnfFormula(4, [(1, 2, 3), (-1, 2, 4)])
    report = verify_reduction_gap(psi)
    assert report["ok"]
    assert all(report["stages"][s]["value"] == "1" for s in ("e3sat", "nae6sat", "nae3sat", "monotone", "hypergraph"))
    corr = report["stages"]["correlation"]
    assert corr["certificate_cost"] == corr["M"] - corr["N"]


def test_verify_unsatisfiable_values():
    report = verify_reduction_gap(unsatisfiable_e3sat())
    assert report["ok"]
    assert Fraction(report["stages"]["e3sat"]["value"]) == Fraction(7, 8)
    assert all(Fraction(report["stages"][s]["value"]) < 1 for s in ("nae6sat", "nae3sat", "monotone", "hypergraph"))
