"""
Experiment protocol
===================

Every (model, strategy, instance) cell is an independent job:

1. instance seed = derive_seed(master_seed, model tag, instance index)
   The strategy is not part of the seed, so all strategies of one model start
   from the same generated graph (checked through the graph fingerprint).
2. The generated graph is reduced to its largest connected component.
3. The strategy adds its edge budget one edge at a time; ASPL is recorded
   before the first addition and after each one.

Aggregates use sample (n - 1) standard deviations across instances. The
scatter data pairs the initial ASPL with the variation; its correlation is
taken against |variation| (the improvement).
"""

from __future__ import annotations

import math
from concurrent.futures import FIRST_EXCEPTION, Future, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .. import __version__
from .artifacts import write_csv, write_json
from .errors import AsplLabError, DataError, EmptyInput, ExperimentError, InsufficientData
from .generator import MODEL_KINDS, ModelParams, derive_seed, prepare_instance, waxman_side
from .measures import DEFAULT_WALK_LENGTH
from .strategies import StrategyConfig, StrategyKind, run_strategy
from .types import Graph

SCHEMA_VERSION = 1
DEFAULT_N = 1000
DEFAULT_INSTANCES = 30
DEFAULT_BUDGET = 50

# Monotonicity is exact in integer arithmetic; allow float summation noise
_MONOTONE_TOL = 1e-12

ProgressFn = Callable[[int, int, str], None]


# -------------------------
# Plan
# -------------------------

# Reference parameter values per model. BA m=3 and WS k_ring=6 are inferred from
# "average degree around 6"; the Waxman side is calibrated to the same degree.
REFERENCE_PARAMS: Dict[str, Dict[str, Any]] = {
    "ba": {"m": 3},
    "er": {"p": 0.006},
    "ws": {"k_ring": 6, "p": 0.4},
    "wax": {"alpha": 0.014, "beta": 0.2},
}


def reference_model(kind: str, n: int = DEFAULT_N, **overrides: Any) -> ModelParams:
    if kind not in REFERENCE_PARAMS:
        raise ValueError(f"unknown model {kind!r} (expected one of: {', '.join(MODEL_KINDS)})")
    params = {**REFERENCE_PARAMS[kind], **{k: v for k, v in overrides.items() if v is not None}}
    if kind == "wax" and params.get("side") is None:
        params["side"] = waxman_side(n, params["alpha"], params["beta"])
    return ModelParams(kind=kind, n=n, **params)  # type: ignore[arg-type]


def reference_models(n: int = DEFAULT_N) -> List[ModelParams]:
    return [reference_model(kind, n) for kind in MODEL_KINDS]


def reference_strategies(
    n_a: int = DEFAULT_BUDGET, h: int = DEFAULT_WALK_LENGTH, recompute_every: int = 1
) -> List[StrategyConfig]:
    return [StrategyConfig(kind=k, n_a=n_a, h=h, recompute_every=recompute_every) for k in StrategyKind]


@dataclass(frozen=True, slots=True)
class ExperimentPlan:
    models: Tuple[ModelParams, ...]
    strategies: Tuple[StrategyConfig, ...]
    instances: int = DEFAULT_INSTANCES
    master_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if self.instances < 1:
            raise ValueError(f"instances must be >= 1, got {self.instances}")
        if not self.models or not self.strategies:
            raise ValueError("a plan needs at least one model and one strategy")
        tags = [m.tag for m in self.models]
        if len(set(tags)) != len(tags):
            raise ValueError(f"model tags must be unique within a plan: {tags}")
        kinds = [s.kind for s in self.strategies]
        if len(set(kinds)) != len(kinds):
            raise ValueError("each strategy may appear once per plan")
        budgets = {s.n_a for s in self.strategies}
        if len(budgets) != 1:
            raise ValueError(f"all strategies in a plan need the same budget, got {sorted(budgets)}")

    @property
    def budget(self) -> int:
        return self.strategies[0].n_a

    @property
    def cell_count(self) -> int:
        return len(self.models) * len(self.strategies) * self.instances

    def instance_seed(self, model: ModelParams, instance: int) -> int:
        return derive_seed(self.master_seed, model.tag, instance)

    def strategy_seed(self, model: ModelParams, instance: int, strategy: StrategyConfig) -> int:
        # Tie-break stream; separate from the instance stream
        return derive_seed(self.master_seed, model.tag, instance, strategy.kind.value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "models": [m.to_dict() for m in self.models],
            "strategies": [s.to_dict() for s in self.strategies],
            "instances": self.instances,
            "master_seed": self.master_seed,
        }

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> "ExperimentPlan":
        return ExperimentPlan(
            models=tuple(ModelParams.from_dict(m) for m in d["models"]),
            strategies=tuple(StrategyConfig.from_dict(s) for s in d["strategies"]),
            instances=int(d.get("instances", DEFAULT_INSTANCES)),
            master_seed=int(d.get("master_seed", 0)),
        )


# -------------------------
# Results
# -------------------------

@dataclass(frozen=True, slots=True)
class Trajectory:

    # ASPL after each addition for one (model, strategy, instance) cell.

    model: str
    strategy: str
    instance: int
    aspl: Tuple[float, ...]
    fingerprint: str = ""
    instance_seed: int = 0
    original_n: int = 0
    lcc_n: int = 0
    added: Tuple[Tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if len(self.aspl) < 1:
            raise ValueError("trajectory needs at least the initial ASPL")
        if not self.aspl[0] > 0:
            raise ValueError(f"initial ASPL must be positive, got {self.aspl[0]}")
        for i in range(1, len(self.aspl)):
            if self.aspl[i] > self.aspl[i - 1] + _MONOTONE_TOL:
                raise ValueError(f"ASPL increased at iteration {i}: {self.aspl[i - 1]} -> {self.aspl[i]}")

    @property
    def budget(self) -> int:
        return len(self.aspl) - 1

    @property
    def initial(self) -> float:
        return self.aspl[0]

    @property
    def variation_pct(self) -> float:
        return 100.0 * (self.aspl[-1] - self.aspl[0]) / self.aspl[0]

    @property
    def key(self) -> Tuple[str, int, int]:
        return (self.model, _strategy_rank(self.strategy), self.instance)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "strategy": self.strategy,
            "instance": self.instance,
            "aspl": list(self.aspl),
            "fingerprint": self.fingerprint,
            "instance_seed": self.instance_seed,
            "original_n": self.original_n,
            "lcc_n": self.lcc_n,
            "added": [list(e) for e in self.added],
        }

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> "Trajectory":
        return Trajectory(
            model=str(d["model"]),
            strategy=str(d["strategy"]),
            instance=int(d["instance"]),
            aspl=tuple(float(x) for x in d["aspl"]),
            fingerprint=str(d.get("fingerprint", "")),
            instance_seed=int(d.get("instance_seed", 0)),
            original_n=int(d.get("original_n", 0)),
            lcc_n=int(d.get("lcc_n", 0)),
            added=tuple((int(u), int(v)) for u, v in d.get("added", [])),
        )


def _strategy_rank(slug: str) -> int:
    for i, kind in enumerate(StrategyKind):
        if kind.value == slug:
            return i
    return len(StrategyKind)


@dataclass(frozen=True, slots=True)
class SummaryRow:
    model: str
    strategy: str
    instances: int
    initial_mean: float
    initial_std: float
    variation_pct_mean: float
    variation_pct_std: float
    best: bool = False


@dataclass(frozen=True, slots=True)
class SummaryTable:
    rows: Tuple[SummaryRow, ...]

    def row(self, model: str, strategy: str) -> SummaryRow:
        for r in self.rows:
            if r.model == model and r.strategy == strategy:
                return r
        raise KeyError((model, strategy))

    def best_by_model(self) -> Dict[str, str]:
        return {r.model: r.strategy for r in self.rows if r.best}


@dataclass(frozen=True, slots=True)
class ScatterCell:
    model: str
    strategy: str
    # (instance, initial ASPL, variation %)
    points: Tuple[Tuple[int, float, float], ...]
    pearson_r: float


# -------------------------
# Cell execution
# -------------------------

def _run_cell(model_d: Dict[str, Any], strategy_d: Dict[str, Any], instance: int) -> Dict[str, Any]:
    # Worker entry point; dict in, dict out so it pickles cleanly
    model = ModelParams.from_dict(model_d)
    cfg = StrategyConfig.from_dict(strategy_d)
    prepared = prepare_instance(model)
    run = run_strategy(prepared.graph, cfg)
    return Trajectory(
        model=model.tag,
        strategy=cfg.kind.value,
        instance=instance,
        aspl=run.aspl,
        fingerprint=prepared.fingerprint,
        instance_seed=model.seed,
        original_n=prepared.original_n,
        lcc_n=prepared.graph.n,
        added=run.added,
    ).to_dict()


@dataclass(frozen=True, slots=True)
class _Job:
    label: str
    context: Tuple[str, str, int]
    fn: Callable[..., Dict[str, Any]]
    args: Tuple[Any, ...]


def _execute(jobs: Sequence[_Job], width: int, progress: Optional[ProgressFn]) -> List[Dict[str, Any]]:
    # Order-independent collection; any failure aborts the whole batch
    results: List[Dict[str, Any]] = []
    total = len(jobs)

    def _fail(job: _Job, exc: BaseException) -> ExperimentError:
        model, strategy, instance = job.context
        return ExperimentError(str(exc), model=model, strategy=strategy, instance=instance)

    if width <= 1:
        for job in jobs:
            try:
                results.append(job.fn(*job.args))
            except (AsplLabError, ValueError) as e:
                raise _fail(job, e) from e
            if progress is not None:
                progress(len(results), total, job.label)
        return results

    with ProcessPoolExecutor(max_workers=width) as pool:
        pending: Dict[Future, _Job] = {pool.submit(job.fn, *job.args): job for job in jobs}
        while pending:
            done, _ = wait(pending, return_when=FIRST_EXCEPTION)
            for fut in done:
                job = pending.pop(fut)
                exc = fut.exception()
                if exc is not None:
                    for other in pending:
                        other.cancel()
                    raise _fail(job, exc) from exc
                results.append(fut.result())
                if progress is not None:
                    progress(len(results), total, job.label)
    return results


def check_instance_reuse(trajectories: Iterable[Trajectory]) -> None:
    seen: Dict[Tuple[str, int], Tuple[str, str]] = {}
    for t in trajectories:
        key = (t.model, t.instance)
        if key not in seen:
            seen[key] = (t.fingerprint, t.strategy)
            continue
        fp, first = seen[key]
        if fp != t.fingerprint:
            raise ExperimentError(
                f"instance graph differs from the one used by {first}",
                model=t.model, strategy=t.strategy, instance=t.instance,
            )


def run_plan(plan: ExperimentPlan, *, jobs: int = 1, progress: Optional[ProgressFn] = None) -> List[Trajectory]:
    work: List[_Job] = []
    for model in plan.models:
        for instance in range(plan.instances):
            seeded = model.with_seed(plan.instance_seed(model, instance))
            for cfg in plan.strategies:
                cfg_seeded = cfg.with_seed(plan.strategy_seed(model, instance, cfg))
                work.append(
                    _Job(
                        label=f"{model.tag}/{cfg.kind.value}/#{instance}",
                        context=(model.tag, cfg.kind.value, instance),
                        fn=_run_cell,
                        args=(seeded.to_dict(), cfg_seeded.to_dict(), instance),
                    )
                )

    raw = _execute(work, jobs, progress)
    trajectories = sorted((Trajectory.from_dict(d) for d in raw), key=lambda t: t.key)
    check_instance_reuse(trajectories)
    return trajectories


# -------------------------
# Aggregation
# -------------------------

def _sample_std(xs: np.ndarray) -> float:
    if len(xs) < 2:
        return float("nan")
    return float(np.std(xs, ddof=1))


def _grouped(trajectories: Iterable[Trajectory]) -> Dict[Tuple[str, str], List[Trajectory]]:
    groups: Dict[Tuple[str, str], List[Trajectory]] = {}
    for t in sorted(trajectories, key=lambda t: t.key):
        groups.setdefault((t.model, t.strategy), []).append(t)
    return groups


def _check_budgets(trajectories: Sequence[Trajectory]) -> None:
    budgets = {t.budget for t in trajectories}
    if len(budgets) > 1:
        raise DataError(f"trajectories mix budgets {sorted(budgets)}")


def summarize(trajectories: Iterable[Trajectory]) -> SummaryTable:
    trajectories = list(trajectories)
    if not trajectories:
        raise EmptyInput("no trajectories to summarize")
    _check_budgets(trajectories)

    stats: List[Tuple[str, str, int, float, float, float, float]] = []
    for (model, strategy), ts in _grouped(trajectories).items():
        init = np.asarray([t.initial for t in ts], dtype=np.float64)
        var = np.asarray([t.variation_pct for t in ts], dtype=np.float64)
        stats.append(
            (model, strategy, len(ts), float(init.mean()), _sample_std(init), float(var.mean()), _sample_std(var))
        )

    # Highlight the most negative mean variation per model
    best: Dict[str, Tuple[float, str]] = {}
    for model, strategy, _, _, _, vmean, _ in stats:
        if model not in best or vmean < best[model][0]:
            best[model] = (vmean, strategy)

    rows = tuple(
        SummaryRow(
            model=model,
            strategy=strategy,
            instances=count,
            initial_mean=imean,
            initial_std=istd,
            variation_pct_mean=vmean,
            variation_pct_std=vstd,
            best=best[model][1] == strategy,
        )
        for model, strategy, count, imean, istd, vmean, vstd in stats
    )
    return SummaryTable(rows=rows)


def pearson_r(xs: Sequence[float], ys: Sequence[float]) -> float:
    # NaN when either side has zero variance
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return float("nan")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def scatter_data(trajectories: Iterable[Trajectory]) -> List[ScatterCell]:
    trajectories = list(trajectories)
    if not trajectories:
        raise EmptyInput("no trajectories for scatter data")
    cells: List[ScatterCell] = []
    for (model, strategy), ts in _grouped(trajectories).items():
        if len(ts) < 2:
            raise InsufficientData(f"{model}/{strategy}: correlation needs >= 2 instances, got {len(ts)}")
        points = tuple((t.instance, t.initial, t.variation_pct) for t in ts)
        r = pearson_r([p[1] for p in points], [abs(p[2]) for p in points])
        cells.append(ScatterCell(model=model, strategy=strategy, points=points, pearson_r=r))
    return cells


def mean_trajectories(trajectories: Iterable[Trajectory]) -> List[Tuple[str, str, int, float, float]]:
    # (model, strategy, iteration, mean ASPL, sample std)
    trajectories = list(trajectories)
    if not trajectories:
        raise EmptyInput("no trajectories to average")
    _check_budgets(trajectories)
    out: List[Tuple[str, str, int, float, float]] = []
    for (model, strategy), ts in _grouped(trajectories).items():
        mat = np.asarray([t.aspl for t in ts], dtype=np.float64)
        for it in range(mat.shape[1]):
            col = mat[:, it]
            out.append((model, strategy, it, float(col.mean()), _sample_std(col)))
    return out


# -------------------------
# Case study (one real network, every strategy)
# -------------------------

@dataclass(frozen=True, slots=True)
class CaseStudyResult:
    initial_aspl: float
    checkpoints: Tuple[int, ...]
    trajectories: Tuple[Trajectory, ...]

    def variation_at(self, strategy: str, checkpoint: int) -> float:
        for t in self.trajectories:
            if t.strategy == strategy:
                return 100.0 * (t.aspl[checkpoint] - t.aspl[0]) / t.aspl[0]
        raise KeyError(strategy)

    def best_at(self, checkpoint: int) -> str:
        return min(self.trajectories, key=lambda t: (t.aspl[checkpoint], t.key)).strategy

    def rows(self) -> List[Tuple[str, int, float, float, bool]]:
        # (strategy, checkpoint, aspl, variation %, best)
        out = []
        for cp in self.checkpoints:
            best = self.best_at(cp)
            for t in self.trajectories:
                out.append((t.strategy, cp, t.aspl[cp], self.variation_at(t.strategy, cp), t.strategy == best))
        return out


def _run_case_cell(graph_d: Dict[str, Any], strategy_d: Dict[str, Any], label: str) -> Dict[str, Any]:
    graph = Graph.from_dict(graph_d)
    cfg = StrategyConfig.from_dict(strategy_d)
    run = run_strategy(graph, cfg)
    return Trajectory(
        model=label,
        strategy=cfg.kind.value,
        instance=0,
        aspl=run.aspl,
        fingerprint=graph.fingerprint(),
        original_n=graph.n,
        lcc_n=graph.n,
        added=run.added,
    ).to_dict()


def run_case_study(
    graph: Graph,
    strategies: Sequence[StrategyConfig],
    *,
    checkpoints: Sequence[int] = (50, 100),
    label: str = "AIRPORT",
    master_seed: int = 0,
    jobs: int = 1,
    progress: Optional[ProgressFn] = None,
) -> CaseStudyResult:
    if not strategies:
        raise ValueError("case study needs at least one strategy")
    budget = max(s.n_a for s in strategies)
    cps = tuple(sorted(set(checkpoints)))
    if not cps or cps[0] < 1 or cps[-1] > budget:
        raise ValueError(f"checkpoints must lie in 1..{budget}, got {list(checkpoints)}")
    if any(s.n_a != budget for s in strategies):
        raise ValueError("all case-study strategies need the same budget")

    graph_d = graph.to_dict()
    work = [
        _Job(
            label=f"{label}/{cfg.kind.value}",
            context=(label, cfg.kind.value, 0),
            fn=_run_case_cell,
            args=(graph_d, cfg.with_seed(derive_seed(master_seed, label, cfg.kind.value)).to_dict(), label),
        )
        for cfg in strategies
    ]
    raw = _execute(work, jobs, progress)
    trajectories = tuple(sorted((Trajectory.from_dict(d) for d in raw), key=lambda t: t.key))
    return CaseStudyResult(initial_aspl=trajectories[0].aspl[0], checkpoints=cps, trajectories=trajectories)


# -------------------------
# Output
# -------------------------

def build_manifest(tool: str, params: Dict[str, Any], notes: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    # No timestamps: identical configurations give identical manifests
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": tool,
        "version": __version__,
        "params": params,
        "notes": notes or {},
    }


PLAN_NOTES = {
    "connectivity": "each generated instance is reduced to its largest connected component",
    "instances": "instances are shared across strategies (seed excludes the strategy)",
    "inferred_params": "BA m=3 and WS k_ring=6 follow from an average degree around 6",
    "waxman_space": (
        "positions uniform in the unit square; Euclidean distances scaled by `side`, which is "
        "calibrated so the expected mean degree is 6 for the given n, alpha and beta unless set "
        "explicitly; probability clamped at 1"
    ),
    "measures": "betweenness/accessibility refreshed every recompute_every iterations",
    "improvement_axis": "correlation uses |variation_pct|",
    "std": "sample standard deviation (n - 1) across instances",
}


def write_outputs(outdir: Path, plan: ExperimentPlan, trajectories: Sequence[Trajectory]) -> Dict[str, Path]:
    outdir = Path(outdir)
    paths = {
        "trajectories": outdir / "trajectories.csv",
        "summary": outdir / "summary.csv",
        "scatter": outdir / "scatter.csv",
        "mean_trajectories": outdir / "mean_trajectories.csv",
        "instances": outdir / "instances.csv",
        "manifest": outdir / "manifest.json",
    }
    trajectories = sorted(trajectories, key=lambda t: t.key)

    write_csv(
        paths["trajectories"],
        ("model", "strategy", "instance", "iteration", "aspl"),
        ((t.model, t.strategy, t.instance, i, a) for t in trajectories for i, a in enumerate(t.aspl)),
    )

    table = summarize(trajectories)
    write_csv(
        paths["summary"],
        ("model", "strategy", "label", "instances", "initial_mean", "initial_std",
         "variation_pct_mean", "variation_pct_std", "best"),
        (
            (r.model, r.strategy, StrategyKind(r.strategy).label, r.instances, r.initial_mean, r.initial_std,
             r.variation_pct_mean, r.variation_pct_std, int(r.best))
            for r in table.rows
        ),
    )

    write_csv(
        paths["scatter"],
        ("model", "strategy", "instance", "initial", "variation_pct"),
        ((t.model, t.strategy, t.instance, t.initial, t.variation_pct) for t in trajectories),
    )

    if plan.instances >= 2:
        paths["correlation"] = outdir / "correlation.csv"
        write_csv(
            paths["correlation"],
            ("model", "strategy", "instances", "pearson_r"),
            ((c.model, c.strategy, len(c.points), c.pearson_r) for c in scatter_data(trajectories)),
        )

    write_csv(
        paths["mean_trajectories"],
        ("model", "strategy", "iteration", "aspl_mean", "aspl_std"),
        mean_trajectories(trajectories),
    )

    instances: Dict[Tuple[str, int], Trajectory] = {}
    for t in trajectories:
        instances.setdefault((t.model, t.instance), t)
    write_csv(
        paths["instances"],
        ("model", "instance", "seed", "original_n", "lcc_n", "retained_fraction", "fingerprint"),
        (
            (t.model, t.instance, t.instance_seed, t.original_n, t.lcc_n, t.lcc_n / t.original_n, t.fingerprint)
            for (_, _), t in sorted(instances.items())
        ),
    )

    write_json(
        paths["manifest"],
        build_manifest(
            "experiment",
            {
                **plan.to_dict(),
                "budget": plan.budget,
                "instance_seeds": {
                    m.tag: [plan.instance_seed(m, i) for i in range(plan.instances)] for m in plan.models
                },
            },
            PLAN_NOTES,
        ),
    )
    return paths


def write_case_study(path: Path, result: CaseStudyResult) -> int:
    return write_csv(
        path,
        ("strategy", "checkpoint", "aspl", "variation_pct", "best"),
        ((s, cp, a, v, int(b)) for s, cp, a, v, b in result.rows()),
    )
