"""Correlation clustering with same-cluster queries, exact reference solvers,
and a SAT-to-clustering reduction chain."""

from .exact import opt_max_agree, opt_min_disagree
from .faulty_cluster import (
    RecoveryConfig,
    faulty_query_max_agree,
    faulty_query_min_disagree,
    recover_sample_partition,
)
from .instance import (
    Clustering,
    EdgeLabeling,
    PlantedSpec,
    agreement_cost,
    disagreement_cost,
    planted_instance,
    read_clustering,
    read_instance,
    write_clustering,
    write_instance,
)
from .oracle import FaultyOracle, PerfectOracle, QueryLedger, partition_sample
from .query_cluster import AlgorithmParams, query_max_agree, query_min_disagree
from .reductions import run_chain, verify_reduction_gap

__all__ = [
    "AlgorithmParams", "Clustering", "EdgeLabeling", "FaultyOracle", "PerfectOracle", "PlantedSpec",
    "QueryLedger", "RecoveryConfig", "agreement_cost", "disagreement_cost", "faulty_query_max_agree",
    "faulty_query_min_disagree", "opt_max_agree", "opt_min_disagree", "partition_sample",
    "planted_instance", "query_max_agree", "query_min_disagree", "read_clustering", "read_instance",
    "recover_sample_partition", "run_chain", "verify_reduction_gap", "write_clustering", "write_instance",
]
