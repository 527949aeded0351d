from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .net.artifacts import manifest_path, write_csv, write_json
from .net.errors import DataError, ExperimentError, GraphError, ParamsError
from .net.experiment import (
    DEFAULT_BUDGET,
    DEFAULT_INSTANCES,
    DEFAULT_N,
    ExperimentPlan,
    build_manifest,
    reference_model,
    run_case_study,
    run_plan,
    summarize,
    write_case_study,
    write_outputs,
)
from .net.generator import MODEL_KINDS, ModelParams, generate
from .net.graph import is_connected, largest_connected_component
from .net.io_formats import (
    ingest_openflights,
    load_edge_list,
    write_coordinates,
    write_edge_list,
    write_labels,
)
from .net.measures import DEFAULT_WALK_LENGTH, degree_stats, measure_table
from .net.strategies import StrategyConfig, StrategyKind, parse_strategy, run_strategy

OUTPUT_DIR_ENV = "ASPL_LAB_OUTPUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; route it to our usage exit code instead

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def nice_path(path: Path, base: Path) -> str:
    try:
        return str(path.resolve().relative_to(base.resolve()))
    except Exception:
        return str(path)


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV) or "artifacts")


def _print_block(title: str, items: Dict[str, Any]) -> None:
    print(f"=== {title} ===")
    for k, v in items.items():
        print(f"{k + ':':<20}{v}")


def _csv_list(raw: str) -> List[str]:
    return [s.strip() for s in raw.split(",") if s.strip()]


# -------------------------
# Subcommands
# -------------------------

def _model_overrides(kind: str, args: argparse.Namespace, prefix: str = "") -> Dict[str, Any]:
    # Only the flags the model reads; unset flags stay None and fall back to the reference value
    names = {
        "er": ("p",),
        "ba": ("m",),
        "ws": ("p", "k_ring"),
        "wax": ("alpha", "beta", "side"),
    }[kind]
    return {name: getattr(args, prefix + name, None) for name in names}


def _cmd_generate(args: argparse.Namespace) -> int:
    if args.coords is not None and args.model != "wax":
        raise UsageError("--coords is only available for --model wax")
    params = reference_model(args.model, args.n, seed=args.seed, **_model_overrides(args.model, args))
    _print_block("Configuration", {"Subcommand": "generate", **params.to_dict(), "LCC only": args.lcc, "Out": args.out})

    start = time.perf_counter()
    net = generate(params)
    graph, coords = net.graph, net.coordinates
    retained = 1.0
    if args.lcc:
        graph, mapping = largest_connected_component(graph)
        retained = graph.n / net.graph.n
        if coords is not None:
            coords = coords.restrict(mapping)

    header = [f"aspl-lab {__version__} generate " + " ".join(f"{k}={v}" for k, v in params.to_dict().items())]
    write_edge_list(args.out, graph, header)
    if args.coords is not None and coords is not None:
        write_coordinates(args.coords, coords)

    mean_k, std_k = degree_stats(graph)
    write_json(
        manifest_path(args.out),
        build_manifest(
            "generate",
            {**params.to_dict(), "lcc": args.lcc},
            {"nodes": graph.n, "edges": graph.edge_count, "retained_fraction": retained, "mean_degree": mean_k},
        ),
    )

    _print_block(
        "generate complete",
        {
            "Nodes": graph.n,
            "Edges": graph.edge_count,
            "Mean degree": f"{mean_k:.3f} (std {std_k:.3f})",
            "Connected": is_connected(graph),
            "Edge list": args.out,
            "Elapsed time": f"{time.perf_counter() - start:.3f} s",
        },
    )
    return EXIT_OK


def _cmd_measure(args: argparse.Namespace) -> int:
    _print_block("Configuration", {"Subcommand": "measure", "In": args.input, "h": args.h, "Out": args.out})
    start = time.perf_counter()
    graph = load_edge_list(args.input)
    rows = measure_table(graph, args.h)
    write_csv(args.out, ("node_id", "degree", "betweenness", "accessibility_h"), rows)
    write_json(
        manifest_path(args.out),
        build_manifest("measure", {"input": Path(args.input).name, "h": args.h}, {"nodes": graph.n}),
    )
    _print_block(
        "measure complete",
        {"Nodes": graph.n, "Rows": len(rows), "Out": args.out, "Elapsed time": f"{time.perf_counter() - start:.3f} s"},
    )
    return EXIT_OK


def _cmd_optimize(args: argparse.Namespace) -> int:
    cfg = StrategyConfig(
        kind=parse_strategy(args.strategy),
        n_a=args.budget,
        h=args.h,
        recompute_every=args.recompute_every,
        seed=args.seed,
    )
    _print_block("Configuration", {"Subcommand": "optimize", "In": args.input, **cfg.to_dict(), "Out": args.out})

    start = time.perf_counter()
    loaded = load_edge_list(args.input)
    graph, to_original = loaded, list(range(loaded.n))
    retained = 1.0
    if not is_connected(loaded):
        graph, mapping = largest_connected_component(loaded)
        to_original = [0] * graph.n
        for old, new in mapping.items():
            to_original[new] = old
        retained = graph.n / loaded.n
        print(f"note: input is disconnected; optimizing its largest component ({graph.n}/{loaded.n} nodes)")

    run = run_strategy(graph, cfg)

    rows: List[Sequence[Any]] = [(0, None, None, run.aspl[0])]
    for i, ((u, v), a) in enumerate(zip(run.added, run.aspl[1:]), start=1):
        rows.append((i, to_original[u], to_original[v], a))
    write_csv(args.out, ("iteration", "u", "v", "aspl_after"), rows)

    initial, final = run.aspl[0], run.aspl[-1]
    variation = 100.0 * (final - initial) / initial
    write_json(
        manifest_path(args.out),
        build_manifest(
            "optimize",
            {"input": Path(args.input).name, **cfg.to_dict()},
            {"nodes": graph.n, "retained_fraction": retained, "initial_aspl": initial, "final_aspl": final},
        ),
    )
    _print_block(
        "optimize complete",
        {
            "Strategy": cfg.kind.label,
            "Edges added": len(run.added),
            "Initial ASPL": f"{initial:.6f}",
            "Final ASPL": f"{final:.6f}",
            "Variation": f"{variation:.3f} %",
            "Out": args.out,
            "Elapsed time": f"{time.perf_counter() - start:.3f} s",
        },
    )
    return EXIT_OK


def _resolve_models(args: argparse.Namespace) -> List[ModelParams]:
    models: List[ModelParams] = []
    for kind in _csv_list(args.models):
        if kind not in MODEL_KINDS:
            raise UsageError(f"unknown model {kind!r} (expected ba, er, ws, wax)")
        models.append(reference_model(kind, args.n, **_model_overrides(kind, args, prefix=f"{kind}_")))
    return models


def _check_reference_protocol(args: argparse.Namespace) -> None:
    # --paper-defaults pins the protocol; any flag that moves away from it is rejected
    expected = {
        "--n": (args.n, DEFAULT_N),
        "--instances": (args.instances, DEFAULT_INSTANCES),
        "--budget": (args.budget, DEFAULT_BUDGET),
        "--h": (args.h, DEFAULT_WALK_LENGTH),
        "--recompute-every": (args.recompute_every, 1),
        "--models": (sorted(_csv_list(args.models)), sorted(MODEL_KINDS)),
        "--strategies": (
            sorted(parse_strategy(s).value for s in _csv_list(args.strategies)),
            sorted(k.value for k in StrategyKind),
        ),
    }
    conflicts = [flag for flag, (got, want) in expected.items() if got != want]
    for kind in MODEL_KINDS:
        for name, value in _model_overrides(kind, args, prefix=f"{kind}_").items():
            if value is not None:
                conflicts.append(f"--{kind}-{name.replace('_', '-')}")
    if conflicts:
        raise UsageError(f"--paper-defaults cannot be combined with {', '.join(conflicts)}")


def _progress_printer(start: float):
    def _report(done: int, total: int, label: str) -> None:
        print(f"[running] done={done}/{total} cell={label} uptime={time.perf_counter() - start:.1f}s", flush=True)
    return _report


def _cmd_experiment(args: argparse.Namespace) -> int:
    if args.paper_defaults:
        _check_reference_protocol(args)
    models = _resolve_models(args)
    strategies = [
        StrategyConfig(kind=parse_strategy(s), n_a=args.budget, h=args.h, recompute_every=args.recompute_every)
        for s in _csv_list(args.strategies)
    ]
    plan = ExperimentPlan(models=models, strategies=strategies, instances=args.instances, master_seed=args.master_seed)
    outdir = Path(args.out) if args.out is not None else default_output_dir()

    _print_block(
        "Configuration",
        {
            "Subcommand": "experiment",
            "Reference defaults": args.paper_defaults,
            "Models": ", ".join(" ".join(f"{k}={v}" for k, v in m.to_dict().items() if k != "seed") for m in models),
            "Strategies": ", ".join(s.kind.value for s in strategies),
            "Instances": plan.instances,
            "Budget (N_a)": plan.budget,
            "h": args.h,
            "Recompute every": args.recompute_every,
            "Master seed": plan.master_seed,
            "Jobs": args.jobs,
            "Cells": plan.cell_count,
            "Out": outdir,
        },
    )

    start = time.perf_counter()
    trajectories = run_plan(plan, jobs=args.jobs, progress=_progress_printer(start) if args.progress else None)
    paths = write_outputs(outdir, plan, trajectories)

    table = summarize(trajectories)
    print("=== Summary (variation %, mean ± std) ===")
    for r in table.rows:
        mark = " *" if r.best else ""
        print(
            f"{r.model:<5}{StrategyKind(r.strategy).label:<20}"
            f"initial {r.initial_mean:.3f} ± {r.initial_std:.3f}   "
            f"variation {r.variation_pct_mean:+.3f} ± {r.variation_pct_std:.3f}{mark}"
        )

    root = Path.cwd()
    _print_block(
        "experiment complete",
        {
            "Trajectories": len(trajectories),
            **{name.replace("_", " ").capitalize(): nice_path(p, root) for name, p in paths.items()},
            "Elapsed time": f"{time.perf_counter() - start:.3f} s",
        },
    )
    return EXIT_OK


def _cmd_ingest_airports(args: argparse.Namespace) -> int:
    outdir = Path(args.out) if args.out is not None else default_output_dir()
    _print_block(
        "Configuration",
        {
            "Subcommand": "ingest-airports",
            "Routes": args.routes,
            "Airports": args.airports,
            "Strict": args.strict,
            "Study": args.study,
            "Budget (N_a)": args.budget if args.study else "-",
            "h": args.h,
            "Recompute every": args.recompute_every,
            "Seed": args.seed,
            "Out": outdir,
        },
    )

    start = time.perf_counter()
    net = ingest_openflights(args.routes, args.airports, strict=args.strict)
    edges_path = outdir / "airports.txt"
    labels_path = outdir / "airport_labels.csv"
    write_edge_list(edges_path, net.graph, [f"aspl-lab {__version__} ingest-airports {net.provenance['routes_file']}"])
    write_labels(labels_path, net.labels, net.names)

    notes: Dict[str, Any] = {"provenance": net.provenance}
    summary: Dict[str, Any] = {
        "Rows total": net.provenance["rows_total"],
        "Rows dropped": net.provenance["rows_dropped"],
        "Airports (LCC)": net.graph.n,
        "Routes (LCC)": net.graph.edge_count,
        "Edge list": nice_path(edges_path, Path.cwd()),
        "Labels": nice_path(labels_path, Path.cwd()),
    }

    params: Dict[str, Any] = {"strict": args.strict}
    if args.study:
        checkpoints = tuple(sorted({c for c in (DEFAULT_BUDGET, args.budget) if c <= args.budget}))
        strategies = [
            StrategyConfig(kind=k, n_a=args.budget, h=args.h, recompute_every=args.recompute_every)
            for k in StrategyKind
        ]
        result = run_case_study(
            net.graph,
            strategies,
            checkpoints=checkpoints,
            master_seed=args.seed,
            jobs=args.jobs,
            progress=_progress_printer(start) if args.progress else None,
        )
        study_path = outdir / "case_study.csv"
        write_case_study(study_path, result)
        params.update({"budget": args.budget, "h": args.h, "recompute_every": args.recompute_every, "seed": args.seed})
        notes["initial_aspl"] = result.initial_aspl
        summary["Initial ASPL"] = f"{result.initial_aspl:.6f}"
        for cp in result.checkpoints:
            best = result.best_at(cp)
            summary[f"Best @ {cp}"] = f"{StrategyKind(best).label} ({result.variation_at(best, cp):+.3f} %)"
        summary["Case study"] = nice_path(study_path, Path.cwd())

    write_json(outdir / "manifest.json", build_manifest("ingest-airports", params, notes))
    summary["Elapsed time"] = f"{time.perf_counter() - start:.3f} s"
    _print_block("ingest-airports complete", summary)
    return EXIT_OK


# -------------------------
# Parser / entry point
# -------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="aspl-lab",
        description="Edge-addition strategies for reducing the average shortest path length of networks.",
        allow_abbrev=False,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="Generate one network instance as an edge list.", allow_abbrev=False)
    p.add_argument("--model", choices=("er", "ba", "ws", "wax"), required=True, help="Network model.")
    p.add_argument("--n", type=int, default=DEFAULT_N, help=f"Node count (default: {DEFAULT_N}).")
    p.add_argument("--p", type=float, default=None, help="ER connection / WS rewiring probability (default: 0.006 / 0.4).")
    p.add_argument("--m", type=int, default=None, help="BA edges per new node (default: 3).")
    p.add_argument("--k-ring", type=int, default=None, help="WS ring lattice degree, even (default: 6).")
    p.add_argument("--alpha", type=float, default=None, help="Waxman alpha (default: 0.014).")
    p.add_argument("--beta", type=float, default=None, help="Waxman beta (default: 0.2).")
    p.add_argument("--side", type=float, default=None, help="Waxman distance scale (default: calibrated to mean degree 6).")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0).")
    p.add_argument("--out", type=Path, required=True, help="Edge list output path.")
    p.add_argument("--coords", type=Path, default=None, help="Waxman only: write node_id,x,y CSV here.")
    p.add_argument("--lcc", action="store_true", help="Keep only the largest connected component.")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("measure", help="Per-node degree, betweenness and accessibility.", allow_abbrev=False)
    p.add_argument("--in", dest="input", type=Path, required=True, help="Edge list input path.")
    p.add_argument("--h", type=int, default=DEFAULT_WALK_LENGTH, help=f"Walk length for accessibility (default: {DEFAULT_WALK_LENGTH}).")
    p.add_argument("--out", type=Path, required=True, help="CSV output path.")
    p.set_defaults(func=_cmd_measure)

    p = sub.add_parser("optimize", help="Apply one strategy to one graph.", allow_abbrev=False)
    p.add_argument("--in", dest="input", type=Path, required=True, help="Edge list input path.")
    p.add_argument("--strategy", required=True, help="One of: " + ", ".join(k.value for k in StrategyKind))
    p.add_argument("--h", type=int, default=DEFAULT_WALK_LENGTH, help=f"Walk length for accessibility (default: {DEFAULT_WALK_LENGTH}).")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help=f"Edges to add, N_a (default: {DEFAULT_BUDGET}).")
    p.add_argument("--recompute-every", type=int, default=1, help="Measure refresh interval in iterations (default: 1).")
    p.add_argument("--seed", type=int, default=0, help="Tie-break RNG seed (default: 0).")
    p.add_argument("--out", type=Path, required=True, help="Trajectory CSV output path.")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("experiment", help="Run the models x strategies x instances protocol.", allow_abbrev=False)
    p.add_argument("--paper-defaults", action="store_true", help="Use the reference protocol (the default values below).")
    p.add_argument("--models", default="ba,er,ws,wax", help="Comma-separated models (default: ba,er,ws,wax).")
    p.add_argument("--strategies", default=",".join(k.value for k in StrategyKind), help="Comma-separated strategies (default: all seven).")
    p.add_argument("--n", type=int, default=DEFAULT_N, help=f"Node count per instance (default: {DEFAULT_N}).")
    p.add_argument("--instances", type=int, default=DEFAULT_INSTANCES, help=f"Instances per model (default: {DEFAULT_INSTANCES}).")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help=f"Edges to add, N_a (default: {DEFAULT_BUDGET}).")
    p.add_argument("--h", type=int, default=DEFAULT_WALK_LENGTH, help=f"Walk length for accessibility (default: {DEFAULT_WALK_LENGTH}).")
    p.add_argument("--recompute-every", type=int, default=1, help="Measure refresh interval in iterations (default: 1).")
    p.add_argument("--master-seed", type=int, default=0, help="Master seed for instance/tie-break streams (default: 0).")
    p.add_argument("--er-p", type=float, default=None, help="Override ER p (reference: 0.006).")
    p.add_argument("--ba-m", type=int, default=None, help="Override BA m (default: 3).")
    p.add_argument("--ws-p", type=float, default=None, help="Override WS rewiring p (reference: 0.4).")
    p.add_argument("--ws-k-ring", type=int, default=None, help="Override WS k_ring (default: 6).")
    p.add_argument("--wax-alpha", type=float, default=None, help="Override Waxman alpha (reference: 0.014).")
    p.add_argument("--wax-beta", type=float, default=None, help="Override Waxman beta (reference: 0.2).")
    p.add_argument("--wax-side", type=float, default=None, help="Override Waxman distance scale (default: calibrated to mean degree 6).")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="Worker processes (default: available CPUs).")
    p.add_argument("--progress", action="store_true", help="Print one line per finished cell.")
    p.add_argument("--out", type=Path, default=None, help=f"Output directory (default: ${OUTPUT_DIR_ENV} or ./artifacts).")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("ingest-airports", help="Build the airport network from OpenFlights routes.", allow_abbrev=False)
    p.add_argument("--routes", type=Path, required=True, help="OpenFlights routes.dat path.")
    p.add_argument("--airports", type=Path, default=None, help="Optional OpenFlights airports.dat path (names).")
    p.add_argument("--strict", action="store_true", help="Fail on malformed rows instead of skipping them.")
    p.add_argument("--study", action="store_true", help="Run every strategy on the ingested network.")
    p.add_argument("--budget", type=int, default=100, help="Study budget, N_a (default: 100).")
    p.add_argument("--h", type=int, default=DEFAULT_WALK_LENGTH, help=f"Walk length for accessibility (default: {DEFAULT_WALK_LENGTH}).")
    p.add_argument("--recompute-every", type=int, default=1, help="Measure refresh interval in iterations (default: 1).")
    p.add_argument("--seed", type=int, default=0, help="Tie-break master seed (default: 0).")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="Worker processes (default: available CPUs).")
    p.add_argument("--progress", action="store_true", help="Print one line per finished strategy.")
    p.add_argument("--out", type=Path, default=None, help=f"Output directory (default: ${OUTPUT_DIR_ENV} or ./artifacts).")
    p.set_defaults(func=_cmd_ingest_airports)

    return parser


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (DataError, UnicodeError, FileNotFoundError, IsADirectoryError)):
        return EXIT_DATA
    if getattr(exc, "line", None) is not None:
        return EXIT_DATA
    if isinstance(exc, (GraphError, ExperimentError)):
        return EXIT_RUNTIME
    if isinstance(exc, (UsageError, ParamsError, ValueError)):
        return EXIT_USAGE
    return EXIT_RUNTIME


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help / --version
        return int(e.code or 0)

    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("\nInterrupted; nothing further written.", file=sys.stderr)
        return EXIT_RUNTIME
    except (UsageError, ValueError, OSError, ExperimentError) as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    raise SystemExit(main())
