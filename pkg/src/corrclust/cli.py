"""Command-line front end: generate, solve, reduce, verify, bench.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from . import exact
from .faulty_cluster import (
    PreconditionWarning,
    RecoveryConfig,
    RecoveryError,
    faulty_max_agree_query_bound,
    faulty_min_disagree_query_bound,
    faulty_query_max_agree,
    faulty_query_min_disagree,
)
from .formulas import FormulaError, read_formula, write_formula
from .instance import (
    InstanceError,
    PlantedSpec,
    agreement_cost,
    disagreement_cost,
    planted_instance,
    read_clustering,
    read_instance,
    write_clustering,
    write_instance,
)
from .oracle import FaultyOracle, PerfectOracle, QueryError, QueryLedger
from .query_cluster import (
    AlgorithmParams,
    max_agree_query_bound,
    min_disagree_query_bound,
    query_max_agree,
    query_min_disagree,
)
from .reductions import (
    STAGES,
    ChainResult,
    ReductionError,
    ReductionTrace,
    VerifyBudget,
    _check_kind,
    run_chain,
    verify_reduction_gap,
)
from .report import RunReport, provenance

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

METHODS = ("exact", "query-min-disagree", "query-max-agree", "faulty-max-agree", "faulty-min-disagree")
PERFECT_METHODS = ("query-min-disagree", "query-max-agree")
FAULTY_METHODS = ("faulty-max-agree", "faulty-min-disagree")
MAX_AGREE_METHODS = ("query-max-agree", "faulty-max-agree")

STAGE_FILES = {
    "e3sat": "e3sat.cnf",
    "nae6sat": "nae6sat.nae6",
    "nae3sat": "nae3sat.nae3",
    "monotone": "monotone.nae3",
    "hypergraph": "hypergraph.h3",
    "correlation": "correlation.cc",
}


class UsageError(Exception):
    pass


# -- output helpers -------------------------------------------------------------


def _emit(text: str, out: str | None, quiet: bool) -> None:
    """Write to ``out`` when given, else to stdout unless quiet."""
    if out and out != "-":
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    elif not quiet:
        sys.stdout.write(text)


def _note(msg: str, quiet: bool) -> None:
    if not quiet:
        print(msg, file=sys.stderr)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- parser ---------------------------------------------------------------------


def _probability(text: str) -> float:
    x = float(text)
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not a probability in [0, 1]")
    return x


def _positive_int(text: str) -> int:
    x = int(text)
    if x < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return x


def _int_list(text: str) -> list[int]:
    return [_positive_int(t) for t in text.split(",") if t]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--quiet", action="store_true", help="suppress notes and stdout output")

    p = argparse.ArgumentParser(prog="corrclust", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a planted instance, its truth and provenance")
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--k", type=_positive_int, required=True)
    g.add_argument("--noise", type=_probability, default=0.0)
    g.add_argument("--min-cluster-fraction", type=float, default=0.0)

    s = sub.add_parser("solve", parents=[common], help="cluster an instance and print a run report")
    s.add_argument("--instance", required=True)
    s.add_argument("--method", choices=METHODS, required=True)
    s.add_argument("--k", type=_positive_int, required=True)
    s.add_argument("--epsilon", type=float, default=0.5)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--sample-scale", type=float, default=1.0)
    s.add_argument("--oracle", choices=("perfect", "faulty"), default=None)
    s.add_argument("--truth", default=None, help="clustering file the oracle answers from")
    s.add_argument("--q", type=float, default=None, help="faulty oracle flip probability")
    s.add_argument("--recovery", choices=("local-search", "exact-ml"), default=None)
    s.add_argument("--strict", action="store_true", help="fail when a truth cluster is below n^(3/4)")
    s.add_argument("--literal-step7", action="store_true", help="size Large groups by sample counts")
    s.add_argument("--trials", type=_positive_int, default=1)
    s.add_argument("--compare-exact", action="store_true")
    s.add_argument("--exact-limit", type=_positive_int, default=exact.PARTITION_LIMIT)
    s.add_argument("--clustering", default=None, help="also write the clustering here")
    s.add_argument("--timing", action="store_true", help="record wall time (breaks byte-identical reruns)")

    r = sub.add_parser("reduce", parents=[common], help="run a contiguous part of the reduction chain")
    r.add_argument("--input", required=True)
    r.add_argument("--from", dest="start", choices=STAGES, required=True)
    r.add_argument("--to", dest="stop", choices=STAGES, required=True)
    r.add_argument("--out-dir", required=True)
    r.add_argument("--trace", default=None, help="write the reduction trace JSON here")

    v = sub.add_parser("verify", parents=[common], help="check every reduction property")
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--cnf", default=None, help="E3-SAT formula to chain and verify")
    src.add_argument("--dir", default=None, help="directory of stage files written by reduce")
    v.add_argument("--assignment-limit", type=int, default=24)
    v.add_argument("--partition-limit", type=int, default=14)
    v.add_argument("--sparse-limit", type=int, default=600)
    v.add_argument("--no-solver", action="store_true")

    b = sub.add_parser("bench", parents=[common], help="sweep a grid of planted instances")
    b.add_argument("--method", choices=METHODS[1:], default="query-min-disagree")
    b.add_argument("--n", type=_int_list, default=[100])
    b.add_argument("--k", type=_int_list, default=[2])
    b.add_argument("--epsilon", type=_float_list, default=[0.5])
    b.add_argument("--q", type=_float_list, default=None)
    b.add_argument("--seeds", type=_positive_int, default=5, help="runs per cell (seeds seed..seed+N-1)")
    b.add_argument("--noise", type=_probability, default=0.0)
    b.add_argument("--min-cluster-fraction", type=float, default=None,
                   help="planted cluster floor as a fraction of n (default 1/(2k) + 1/n)")
    b.add_argument("--delta", type=float, default=0.1)
    b.add_argument("--sample-scale", type=float, default=1.0)
    b.add_argument("--recovery", choices=("local-search", "exact-ml"), default="local-search")
    b.add_argument("--compare-exact", action="store_true")
    b.add_argument("--budget", type=_positive_int, default=1000, help="maximum number of runs")
    b.add_argument("--jobs", type=_positive_int, default=1)
    b.add_argument("--timing", action="store_true")
    return p


# -- generate -------------------------------------------------------------------


def cmd_generate(args, argv) -> int:
    if args.format != "json":
        raise UsageError("generate writes JSON provenance only")
    try:
        spec = PlantedSpec(args.n, args.k, args.noise, args.seed, args.min_cluster_fraction)
        lab, truth = planted_instance(spec)
    except InstanceError as exc:
        raise UsageError(str(exc)) from None
    prefix = args.out or "planted"
    paths = {"instance": prefix + ".cc", "truth": prefix + ".truth", "provenance": prefix + ".provenance.json"}
    write_instance(lab, paths["instance"])
    write_clustering(truth, paths["truth"])
    doc = {"spec": asdict(spec), "files": {k: os.path.basename(v) for k, v in paths.items()},
           "num_positive": lab.num_positive, "truth_sizes": truth.sizes().tolist(),
           "provenance": provenance(argv)}
    with open(paths["provenance"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps(doc))
    _note(f"wrote {paths['instance']}, {paths['truth']}, {paths['provenance']}", args.quiet)
    return EXIT_OK


# -- solve ----------------------------------------------------------------------


def _check_solve_flags(args) -> str:
    """Return the oracle kind implied by the method, rejecting mismatched flags."""
    if args.format != "json":
        raise UsageError("solve reports are JSON")
    if args.method == "exact":
        implied = None
    elif args.method in PERFECT_METHODS:
        implied = "perfect"
    else:
        implied = "faulty"
    if args.oracle is not None and args.oracle != implied:
        raise UsageError(f"--oracle {args.oracle} does not match --method {args.method}")
    if implied != "faulty":
        for flag, value in (("--q", args.q), ("--recovery", args.recovery), ("--strict", args.strict or None)):
            if value is not None:
                raise UsageError(f"{flag} only applies to faulty-oracle methods")
    else:
        if args.q is None:
            raise UsageError(f"--method {args.method} needs --q")
        if not 0.0 <= args.q <= 1.0 / 3.0:
            raise UsageError("--q must lie in [0, 1/3]")
    if args.literal_step7 and args.method not in ("query-min-disagree", "faulty-min-disagree"):
        raise UsageError("--literal-step7 only applies to min-disagree methods")
    if implied is None and args.truth is not None:
        raise UsageError("--truth is not used by --method exact")
    if implied is not None:
        if not 0.0 < args.epsilon <= 0.5:
            raise UsageError("--epsilon must lie in (0, 0.5]")
        if not 0.0 < args.delta < 1.0:
            raise UsageError("--delta must lie in (0, 1)")
        if args.sample_scale <= 0:
            raise UsageError("--sample-scale must be positive")
    return implied


def _run_method(method, lab, k, truth, seed, args_like, ledger):
    """One run of a query method; returns the clustering."""
    params = AlgorithmParams(k, args_like["epsilon"], args_like["delta"], args_like["sample_scale"], seed,
                             args_like.get("literal_step7", False), args_like.get("exact_limit", exact.PARTITION_LIMIT))
    if method in PERFECT_METHODS:
        oracle = PerfectOracle(truth)
        fn = query_min_disagree if method == "query-min-disagree" else query_max_agree
        return fn(lab, params, oracle, ledger)
    oracle = FaultyOracle(truth, args_like["q"], seed)
    config = RecoveryConfig(method=args_like.get("recovery") or "local-search", strict=args_like.get("strict", False))
    fn = faulty_query_min_disagree if method == "faulty-min-disagree" else faulty_query_max_agree
    return fn(lab, params, oracle, ledger, config)


def _query_bound(method, n, k, eps, delta, scale):
    if method == "query-min-disagree":
        return min_disagree_query_bound(n, k, eps, delta, scale)
    if method == "query-max-agree":
        return max_agree_query_bound(n, k, eps, delta, scale)
    if method == "faulty-min-disagree":
        return faulty_min_disagree_query_bound(n, k, eps, delta, scale)
    return faulty_max_agree_query_bound(n, k, eps, delta, scale)


def _success(method, clustering, lab, opt, eps) -> bool:
    if method in MAX_AGREE_METHODS:
        return agreement_cost(lab, clustering) >= opt["opt_agreements"] - eps * lab.n**2 / 2
    return disagreement_cost(lab, clustering) <= (1 + eps) * opt["opt_disagreements"]


def _ratio(method, clustering, lab, opt):
    if method in MAX_AGREE_METHODS:
        num, den = agreement_cost(lab, clustering), opt["opt_agreements"]
    else:
        num, den = disagreement_cost(lab, clustering), opt["opt_disagreements"]
    if den == 0:
        return 1.0 if num == 0 else None
    return num / den


def _exact_optimum(lab, k, limit) -> dict:
    d_cost, _ = exact.opt_min_disagree(lab, k, limit)
    a_cost, _ = exact.opt_max_agree(lab, k, limit)
    return {"opt_disagreements": int(d_cost), "opt_agreements": int(a_cost)}


def cmd_solve(args, argv) -> int:
    implied = _check_solve_flags(args)
    lab = read_instance(args.instance)
    n, k = lab.n, args.k
    if k > n:
        raise UsageError(f"--k {k} exceeds n = {n}")
    start = time.perf_counter()

    if args.method == "exact":
        if n > args.exact_limit:
            raise UsageError(f"exact method is limited to n <= {args.exact_limit}, got n = {n}")
        _, clustering = exact.opt_min_disagree(lab, k, args.exact_limit)
        runs = [(clustering, 0)]
        source = "exact"
    else:
        if args.truth is not None:
            truth = read_clustering(args.truth, n)
            source = "truth-file"
        elif n <= args.exact_limit:
            # no truth given: the oracle answers from an optimal clustering
            _, truth = exact.opt_min_disagree(lab, k, args.exact_limit)
            source = "exact-optimum"
        else:
            raise UsageError("--truth is required when n exceeds the exact limit")
        settings = vars(args)
        runs = []
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", PreconditionWarning)
            for t in range(args.trials):
                ledger = QueryLedger()
                clustering = _run_method(args.method, lab, k, truth, args.seed + t, settings, ledger)
                runs.append((clustering, ledger.count))
        for w in caught[:1]:
            _note(f"warning: {w.message}", args.quiet)
    elapsed = (time.perf_counter() - start) * 1000.0

    opt = None
    if args.compare_exact or args.method == "exact":
        if n <= args.exact_limit:
            opt = _exact_optimum(lab, k, args.exact_limit)
        else:
            _note(f"note: n = {n} exceeds the exact limit; no ratio computed", args.quiet)

    clustering, count = runs[0]
    trials = None
    if args.trials > 1:
        costs = [agreement_cost(lab, c) if args.method in MAX_AGREE_METHODS else disagreement_cost(lab, c)
                 for c, _ in runs]
        rate = None if opt is None else sum(_success(args.method, c, lab, opt, args.epsilon) for c, _ in runs) / len(runs)
        trials = {"count": len(runs), "success_rate": rate, "mean_cost": float(np.mean(costs)),
                  "mean_queries": float(np.mean([q for _, q in runs]))}

    params = {"seeds": [args.seed + t for t in range(len(runs))]}
    if implied is not None:
        params.update(epsilon=args.epsilon, delta=args.delta, sample_scale=args.sample_scale,
                      q=args.q, literal_step7=args.literal_step7,
                      recovery=(args.recovery or "local-search") if implied == "faulty" else None)
    report = RunReport(
        method=args.method,
        instance={"n": n, "k": k, "source": os.path.basename(args.instance), "num_positive": lab.num_positive},
        params=params,
        result={"disagreements": disagreement_cost(lab, clustering), "agreements": agreement_cost(lab, clustering),
                "clusters": clustering.k},
        query_count=count,
        provenance=provenance(argv),
        wall_time_ms=round(elapsed, 3) if args.timing else None,
        query_bound=None if implied is None else _query_bound(args.method, n, k, args.epsilon, args.delta,
                                                               args.sample_scale),
        exact=opt,
        approximation_ratio=None if opt is None else _ratio(args.method, clustering, lab, opt),
        trials=trials,
    )
    if implied is not None:
        report.instance["truth"] = source
    _emit(report.to_json(), args.out, args.quiet)
    if args.clustering:
        write_clustering(clustering, args.clustering)
    return EXIT_OK


# -- reduce / verify ------------------------------------------------------------


def _read_stage(path: str, stage: str):
    if stage == "correlation":
        return read_instance(path)
    obj = read_formula(path)
    try:
        _check_kind(obj, stage)
    except ReductionError as exc:
        raise UsageError(f"{path}: {exc}") from None
    return obj


def _write_stage(obj, stage: str, directory: str) -> str:
    path = os.path.join(directory, STAGE_FILES[stage])
    if stage == "correlation":
        write_instance(obj, path)
    else:
        write_formula(obj, path)
    return path


def cmd_reduce(args, argv) -> int:
    if args.format != "json":
        raise UsageError("reduce writes JSON traces only")
    if STAGES.index(args.stop) < STAGES.index(args.start):
        raise UsageError(f"cannot reduce from {args.start} back to {args.stop}")
    if args.start == "correlation":
        raise UsageError("correlation is the last stage; nothing to reduce")
    source = _read_stage(args.input, args.start)
    try:
        result = run_chain(source, args.start, args.stop)
    except (ReductionError, FormulaError) as exc:
        raise UsageError(str(exc)) from None
    os.makedirs(args.out_dir, exist_ok=True)
    written = [_write_stage(obj, stage, args.out_dir) for stage, obj in result.artifacts.items()]
    doc = result.trace.to_dict()
    doc["correlation_k"] = result.k
    doc["files"] = [os.path.basename(p) for p in written]
    doc["provenance"] = provenance(argv)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_dumps(doc))
    _emit(_dumps({"files": doc["files"], "stages": [s["name"] for s in doc["stages"]]}), args.out, args.quiet)
    return EXIT_OK


def _load_stage_dir(directory: str) -> ChainResult:
    missing = [f for f in STAGE_FILES.values() if not os.path.exists(os.path.join(directory, f))]
    if missing:
        raise UsageError(f"{directory} lacks stage files: {', '.join(missing)}")
    artifacts = {}
    for stage, name in STAGE_FILES.items():
        path = os.path.join(directory, name)
        artifacts[stage] = read_instance(path) if stage == "correlation" else read_formula(path)
    return ChainResult(artifacts, ReductionTrace())


def cmd_verify(args, argv) -> int:
    if args.format != "json":
        raise UsageError("verify reports are JSON")
    budget = VerifyBudget(args.assignment_limit, args.partition_limit, args.sparse_limit, not args.no_solver)
    if args.cnf is not None:
        source = _read_stage(args.cnf, "e3sat")
        report = verify_reduction_gap(source, budget)
    else:
        result = _load_stage_dir(args.dir)
        kinds = {}
        for stage in STAGES[:-1]:
            try:
                _check_kind(result.artifacts[stage], stage)
                kinds[f"{stage}_file_kind"] = True
            except ReductionError:
                kinds[f"{stage}_file_kind"] = False
        if all(kinds.values()):
            report = verify_reduction_gap(result.artifacts["e3sat"], budget, result)
            report["checks"].update(kinds)
        else:
            report = {"stages": {}, "checks": kinds, "skipped": [], "ok": False}
    report["provenance"] = provenance(argv)
    _emit(_dumps(report), args.out, args.quiet)
    if not report["ok"]:
        failed = sorted(name for name, ok in report["checks"].items() if not ok)
        print("verification failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# -- bench ----------------------------------------------------------------------


def _bench_cell(cell: dict) -> dict:
    """All seeds of one grid cell; a pure function of ``cell``."""
    n, k, eps, q = cell["n"], cell["k"], cell["epsilon"], cell["q"]
    method = cell["method"]
    mcf = cell["min_cluster_fraction"]
    if mcf is None:
        mcf = (n / (2.0 * k) + 1) / n
    counts, costs, ratios, successes, times = [], [], [], [], []
    for seed in cell["seeds"]:
        lab, truth = planted_instance(PlantedSpec(n, k, cell["noise"], seed, mcf))
        ledger = QueryLedger()
        start = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PreconditionWarning)
            clustering = _run_method(method, lab, k, truth, seed, cell, ledger)
        times.append((time.perf_counter() - start) * 1000.0)
        counts.append(ledger.count)
        costs.append(agreement_cost(lab, clustering) if method in MAX_AGREE_METHODS
                     else disagreement_cost(lab, clustering))
        if cell["compare_exact"] and n <= exact.PARTITION_LIMIT:
            opt = _exact_optimum(lab, k, exact.PARTITION_LIMIT)
            ratios.append(_ratio(method, clustering, lab, opt))
            successes.append(_success(method, clustering, lab, opt, eps))
    ratios = [r for r in ratios if r is not None]
    row = {
        "method": method, "n": n, "k": k, "epsilon": eps, "q": q, "noise": cell["noise"],
        "runs": len(cell["seeds"]), "first_seed": cell["seeds"][0],
        "query_count_mean": float(np.mean(counts)), "query_count_std": float(np.std(counts)),
        "query_bound": _query_bound(method, n, k, eps, cell["delta"], cell["sample_scale"]),
        "cost_mean": float(np.mean(costs)), "cost_std": float(np.std(costs)),
        "ratio_mean": float(np.mean(ratios)) if ratios else None,
        "success_rate": float(np.mean(successes)) if successes else None,
        "time_ms_mean": round(float(np.mean(times)), 3) if cell["timing"] else None,
    }
    return row


def bench_cells(args) -> list[dict]:
    qs = args.q if args.q is not None else ([0.0] if args.method in FAULTY_METHODS else [None])
    if args.method in PERFECT_METHODS and args.q is not None:
        raise UsageError("--q only applies to faulty-oracle methods")
    for eps in args.epsilon:
        if not 0.0 < eps <= 0.5:
            raise UsageError("every --epsilon must lie in (0, 0.5]")
    for q in qs:
        if q is not None and not 0.0 <= q <= 1.0 / 3.0:
            raise UsageError("every --q must lie in [0, 1/3]")
    cells = []
    for n in args.n:
        for k in args.k:
            if k > n:
                raise UsageError(f"k = {k} exceeds n = {n}")
            for eps in args.epsilon:
                for q in qs:
                    cells.append({
                        "method": args.method, "n": n, "k": k, "epsilon": eps, "q": q, "noise": args.noise,
                        "delta": args.delta, "sample_scale": args.sample_scale, "recovery": args.recovery,
                        "min_cluster_fraction": args.min_cluster_fraction, "compare_exact": args.compare_exact,
                        "timing": args.timing, "seeds": [args.seed + s for s in range(args.seeds)],
                    })
    return cells


def _format_csv(rows: list[dict], prov: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# {prov['tool']} {prov['version']} python {prov['python']} numpy {prov['numpy']}\n")
    buf.write("# argv: " + " ".join(prov["argv"]) + "\n")
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: "" if v is None else v for k, v in row.items()})
    return buf.getvalue()


def cmd_bench(args, argv) -> int:
    cells = bench_cells(args)
    total = len(cells) * args.seeds
    if total > args.budget:
        raise UsageError(f"grid needs {total} runs, more than --budget {args.budget}")
    if args.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_cell, cells))
    else:
        rows = [_bench_cell(c) for c in cells]
    prov = provenance(argv)
    if args.format == "csv":
        text = _format_csv(rows, prov)
    else:
        text = _dumps({"rows": rows, "provenance": prov})
    _emit(text, args.out, args.quiet)
    return EXIT_OK


# -- entry point ----------------------------------------------------------------

COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "reduce": cmd_reduce, "verify": cmd_verify,
            "bench": cmd_bench}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"corrclust {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RecoveryError as exc:
        print(f"corrclust {args.command}: precondition failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InstanceError, FormulaError, QueryError, exact.TooLarge, OSError) as exc:
        print(f"corrclust {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
