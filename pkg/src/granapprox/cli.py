"""Command-line frontend.

Subcommands::

    granapprox solve    --dataset data.csv --config run.json --out OUTDIR
    granapprox verify   RESULT.csv --dataset data.csv --config run.json
    granapprox geometry RESULT.csv --dataset data.csv --config run.json --out FILE
    granapprox laws     [--tnorm KIND] [--isomorphism NAME] [--grid-step F]

Exit codes: 0 success; 1 verification failure; 2 malformed dataset/result
input; 3 config validation failure; 4 internal solver failure.  Outputs are
deterministic byte-for-byte for identical inputs and seed; the measured
runtime is printed to stdout and deliberately kept out of the summary file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .connectives import ResidualTriplet, TNormKind, verify_laws
from .dataset import DatasetError, LabeledDataset
from .geometry import export_geometry as _geometry_records
from .geometry import write_geometry
from .pipeline import (ConfigError, RunConfig, read_result_csv,
                       run_approximation, suggest_relabels, write_result_csv)
from .solver import (ApproximationResult, SolverError, build_bounds,
                     verify_constraints, verify_tightness)
from .tolerances import EPS_LAW

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_BAD_CONFIG = 3
EXIT_SOLVER = 4


def _load_inputs(args, need_seed=False):
    config = RunConfig.from_json_file(args.config)
    if need_seed and args.seed is not None:
        config.seed = int(args.seed)
    dataset = LabeledDataset.from_csv(
        args.dataset, label_column=config.label_column,
        id_column=config.id_column,
        ranges=config.attribute_ranges)
    return dataset, config


def _json_dump(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    dataset, config = _load_inputs(args, need_seed=True)
    run = run_approximation(dataset, config)
    relabels = suggest_relabels(run, threshold=args.threshold)
    runtime = time.perf_counter() - t0

    os.makedirs(args.out, exist_ok=True)
    result_path = os.path.join(args.out, "result.csv")
    summary_path = os.path.join(args.out, "summary.json")
    write_result_csv(result_path, run)
    summary = {
        "objective": run.result.objective,
        "loss": run.result.loss,
        "solver": run.result.solver,
        "mode": run.result.mode,
        "n_instances": dataset.n,
        "n_classes": dataset.n_classes,
        "max_violation": run.feasibility.max_violation,
        "feasible": run.feasibility.feasible,
        "tightness_max_gap": run.tightness.max_gap,
        "tightness_ok": run.tightness.ok,
        "kkt_residual": run.result.kkt_residual,
        "relabel_threshold": relabels.threshold,
        "relabel_count": len(relabels.relabels),
        "ambiguous_count": len(relabels.ambiguous),
        "relabel_ids": [s.instance_id for s in relabels.relabels],
        "seed": config.seed,
        "alpha_level": config.alpha_level,
    }
    _json_dump(summary_path, summary)
    print(f"solved {dataset.n} instances / {dataset.n_classes} classes: "
          f"objective {run.result.objective!r}, "
          f"max violation {run.feasibility.max_violation:.3e}, "
          f"{len(relabels.relabels)} relabel suggestions")
    print(f"wrote {result_path} and {summary_path} "
          f"(runtime {runtime:.3f}s, not recorded in outputs)")
    return EXIT_OK


def _result_from_file(path, dataset, config) -> ApproximationResult:
    try:
        rows = read_result_csv(path)
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot read result file: {exc}")
    missing = [i for i in dataset.ids if i not in rows]
    extra = set(rows) - set(dataset.ids)
    if missing or extra:
        raise DatasetError(
            f"result file ids do not match the dataset (missing {missing[:5]}, "
            f"unexpected {sorted(extra)[:5]})")
    trip = config.triplet()
    beta = np.asarray([rows[i][1] for i in dataset.ids], dtype=float)
    if beta.min() < 0.0 or beta.max() > 1.0:
        raise DatasetError("result memberships outside [0, 1]")
    alpha = np.clip(np.asarray(trip.iso.forward(beta), dtype=float), 0.0, 1.0)
    return ApproximationResult(
        beta=beta, alpha=alpha, objective=float("nan"), loss=config.loss,
        mode="multiclass", partition=tuple(rows[i][3] for i in dataset.ids),
        tight_partner=np.full(dataset.n, -1), max_violation=float("nan"))


def cmd_verify(args) -> int:
    dataset, config = _load_inputs(args)
    result = _result_from_file(args.result, dataset, config)
    trip = config.triplet()
    relation = config.build_relation(dataset.table)
    bounds = build_bounds(relation, dataset.labels, trip,
                          eps=config.tolerances.rel)
    feas = verify_constraints(result, bounds, eps=config.tolerances.feas)
    tight = verify_tightness(result, bounds, relation=relation,
                             eps=config.tolerances.feas)
    u, v = feas.worst_pair
    pair_txt = (f" (worst pair {dataset.ids[u]},{dataset.ids[v]})"
                if u >= 0 else "")
    print(f"feasibility: max violation {feas.max_violation:.6e} "
          f"<= {feas.eps:.1e}{pair_txt}: "
          f"{'ok' if feas.feasible else 'FAILED'}")
    print(f"tightness:   max certificate gap {tight.max_gap:.6e} "
          f"<= {tight.eps:.1e}: {'ok' if tight.ok else 'FAILED'}")
    if feas.feasible and tight.ok:
        return EXIT_OK
    return EXIT_VERIFY_FAILED


def cmd_geometry(args) -> int:
    dataset, config = _load_inputs(args)
    result = _result_from_file(args.result, dataset, config)
    geoms = _geometry_records(result, dataset, config,
                              alpha_level=args.alpha_level)
    write_geometry(args.out, geoms)
    drawable = sum(1 for g in geoms if g.drawable)
    print(f"wrote {len(geoms)} geometry records ({drawable} drawable) "
          f"to {args.out}")
    return EXIT_OK


def cmd_laws(args) -> int:
    kinds = ([TNormKind.from_name(args.tnorm)] if args.tnorm != "all"
             else list(TNormKind))
    all_ok = True
    for kind in kinds:
        trip = ResidualTriplet.from_names(kind.value, args.isomorphism)
        report = verify_laws(trip, grid_step=args.grid_step)
        for line in report.lines(EPS_LAW):
            print(line)
        all_ok &= report.passes(EPS_LAW)
    return EXIT_OK if all_ok else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="granapprox",
        description="multi-class granular approximation of labeled data")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve and write result files")
    p_solve.add_argument("--dataset", required=True)
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out", required=True,
                         help="output directory for result.csv / summary.json")
    p_solve.add_argument("--seed", type=int, default=None)
    p_solve.add_argument("--threshold", type=float, default=None,
                         help="relabel threshold override")
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="re-verify a result file")
    p_verify.add_argument("result")
    p_verify.add_argument("--dataset", required=True)
    p_verify.add_argument("--config", required=True)
    p_verify.set_defaults(func=cmd_verify)

    p_geom = sub.add_parser("geometry", help="export granule geometry")
    p_geom.add_argument("result")
    p_geom.add_argument("--dataset", required=True)
    p_geom.add_argument("--config", required=True)
    p_geom.add_argument("--out", required=True)
    p_geom.add_argument("--alpha-level", type=float, default=None)
    p_geom.set_defaults(func=cmd_geometry)

    p_laws = sub.add_parser("laws", help="run the connective law grids")
    p_laws.add_argument("--tnorm", default="all")
    p_laws.add_argument("--isomorphism", default="identity")
    p_laws.add_argument("--grid-step", type=float, default=0.05)
    p_laws.set_defaults(func=cmd_laws)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
