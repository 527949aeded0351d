from __future__ import annotations

import argparse
import os
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import List

from aspl_lab.cli import nice_path
from aspl_lab.net.experiment import (
    DEFAULT_INSTANCES,
    ExperimentPlan,
    reference_models,
    reference_strategies,
    run_case_study,
    run_plan,
    scatter_data,
    summarize,
    write_case_study,
    write_outputs,
)
from aspl_lab.net.io_formats import ingest_openflights
from aspl_lab.net.reference import (
    ReferenceCheck,
    check_airport,
    check_correlation,
    check_initial,
    check_ordering,
    check_variation,
    hard_failures,
)
from aspl_lab.net.strategies import StrategyConfig, StrategyKind


def _print_checks(title: str, checks: List[ReferenceCheck]) -> int:
    print(f"=== {title} ===")
    for c in checks:
        status = "PASS" if c.passed else ("WARN" if c.soft else "FAIL")
        if c.expected is None:
            print(f"  [{status}] {c.name:<44} observed {c.observed:+.3f}")
        else:
            tol = f" (tol {c.tolerance:.2f})" if c.tolerance is not None else ""
            print(
                f"  [{status}] {c.name:<44} observed {c.observed:+.3f}  "
                f"expected {c.expected:+.3f}  delta {c.delta:+.3f}{tol}"
            )
    return len(hard_failures(checks))


def main() -> None:
    parser = argparse.ArgumentParser(description="Run the full reference protocol and compare against published values.")
    parser.add_argument("--instances", type=int, default=DEFAULT_INSTANCES, help="Instances per model (default: 30).")
    parser.add_argument("--h", type=int, default=2, help="Walk length for accessibility (default: 2).")
    parser.add_argument("--recompute-every", type=int, default=1, help="Measure refresh interval (default: 1).")
    parser.add_argument("--master-seed", type=int, default=0, help="Master seed (default: 0).")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="Worker processes.")
    parser.add_argument("--routes", type=Path, default=None, help="OpenFlights routes.dat; enables the airport study.")
    parser.add_argument("--airports", type=Path, default=None, help="Optional OpenFlights airports.dat.")
    args = parser.parse_args()

    start = time.perf_counter()
    root = Path(__file__).resolve().parents[1]
    run_stamp = datetime.now(timezone.utc).strftime("%Y%m%d_%H%M%S")

    # One directory per run; earlier runs are never overwritten
    artifacts_dir = root / "artifacts" / "reference" / run_stamp
    artifacts_dir.mkdir(parents=True, exist_ok=False)

    plan = ExperimentPlan(
        models=reference_models(),
        strategies=reference_strategies(h=args.h, recompute_every=args.recompute_every),
        instances=args.instances,
        master_seed=args.master_seed,
    )

    def _progress(done: int, total: int, label: str) -> None:
        print(f"[running] done={done}/{total} cell={label} uptime={time.perf_counter() - start:.1f}s", flush=True)

    trajectories = run_plan(plan, jobs=args.jobs, progress=_progress)
    paths = write_outputs(artifacts_dir, plan, trajectories)
    table = summarize(trajectories)

    failures = 0
    failures += _print_checks("Initial ASPL", check_initial(table))
    failures += _print_checks("Strategy ordering", check_ordering(table))
    failures += _print_checks("Variation after 50 additions", check_variation(table))
    if plan.instances >= 2:
        failures += _print_checks("Correlation sign", [check_correlation(scatter_data(trajectories))])

    if args.routes is not None:
        net = ingest_openflights(args.routes, args.airports)
        strategies = [
            StrategyConfig(kind=k, n_a=100, h=args.h, recompute_every=args.recompute_every) for k in StrategyKind
        ]
        result = run_case_study(
            net.graph, strategies, checkpoints=(50, 100), master_seed=args.master_seed,
            jobs=args.jobs, progress=_progress,
        )
        paths["case_study"] = artifacts_dir / "case_study.csv"
        write_case_study(paths["case_study"], result)
        failures += _print_checks("Airport study", check_airport(result))

    elapsed = time.perf_counter() - start

    print("=== Reproduction complete ===")
    print(f"Cells:            {plan.cell_count}")
    print(f"Instances:        {plan.instances}")
    print(f"Failed checks:    {failures}")
    print(f"Elapsed time:     {elapsed:.1f} s")
    print()
    print("Artifacts:")
    for name, path in paths.items():
        print(f"  {name + ':':<19}{nice_path(path, root)}")

    if failures:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
