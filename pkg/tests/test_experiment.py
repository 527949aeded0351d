from __future__ import annotations

import json
import math
import random
from pathlib import Path

import numpy as np
import pytest

from aspl_lab.net.errors import DataError, EmptyInput, ExperimentError, InsufficientData
from aspl_lab.net.experiment import (
    ExperimentPlan,
    Trajectory,
    check_instance_reuse,
    mean_trajectories,
    pearson_r,
    reference_models,
    reference_strategies,
    run_case_study,
    run_plan,
    scatter_data,
    summarize,
    write_case_study,
    write_outputs,
)
from aspl_lab.net.generator import ModelParams, gen_er
from aspl_lab.net.graph import is_connected
from aspl_lab.net.strategies import StrategyConfig, StrategyKind


def _small_plan(instances: int = 3, budget: int = 3) -> ExperimentPlan:
    return ExperimentPlan(
        models=(ModelParams(kind="er", n=40, p=0.15), ModelParams(kind="ba", n=40, m=2)),
        strategies=(
            StrategyConfig(kind=StrategyKind.DEGREE, n_a=budget),
            StrategyConfig(kind=StrategyKind.ACCESSIBILITY1, n_a=budget),
        ),
        instances=instances,
        master_seed=11,
    )


def _traj(model: str, strategy: str, instance: int, aspl: tuple[float, ...], fp: str = "") -> Trajectory:
    return Trajectory(model=model, strategy=strategy, instance=instance, aspl=aspl, fingerprint=fp or f"{model}{instance}")


def _with_variation(model: str, strategy: str, instance: int, initial: float, variation_pct: float) -> Trajectory:
    return _traj(model, strategy, instance, (initial, initial * (1 + variation_pct / 100.0)))


# -------------------------
# Plan
# -------------------------

def test_reference_plan_shape() -> None:
    plan = ExperimentPlan(models=reference_models(), strategies=reference_strategies())

    assert plan.cell_count == 4 * 7 * 30
    assert plan.budget == 50
    assert [m.tag for m in plan.models] == ["BA", "ER", "WS", "WAX"]
    assert ExperimentPlan.from_dict(plan.to_dict()) == plan


def test_plan_validation() -> None:
    degree = StrategyConfig(kind=StrategyKind.DEGREE, n_a=5)
    er = ModelParams(kind="er", n=50, p=0.1)

    with pytest.raises(ValueError):
        ExperimentPlan(models=(er,), strategies=(degree,), instances=0)
    with pytest.raises(ValueError):
        ExperimentPlan(models=(er, er), strategies=(degree,))
    with pytest.raises(ValueError):
        ExperimentPlan(
            models=(er,),
            strategies=(degree, StrategyConfig(kind=StrategyKind.BETWEENNESS, n_a=6)),
        )


def test_instance_seeds_ignore_the_strategy() -> None:
    plan = _small_plan()
    er = plan.models[0]
    a, b = plan.strategies

    assert plan.instance_seed(er, 0) != plan.instance_seed(er, 1)
    assert plan.strategy_seed(er, 0, a) != plan.strategy_seed(er, 0, b)


# -------------------------
# Runs
# -------------------------

def test_run_plan_shape_and_instance_sharing() -> None:
    plan = _small_plan()
    trajectories = run_plan(plan)

    assert len(trajectories) == plan.cell_count
    assert all(len(t.aspl) == plan.budget + 1 for t in trajectories)
    assert [t.key for t in trajectories] == sorted(t.key for t in trajectories)

    by_instance: dict[tuple[str, int], set[str]] = {}
    for t in trajectories:
        by_instance.setdefault((t.model, t.instance), set()).add(t.fingerprint)
        assert t.lcc_n <= t.original_n == 40
    assert all(len(fps) == 1 for fps in by_instance.values())


def test_run_plan_is_deterministic() -> None:
    plan = _small_plan(instances=2)
    assert run_plan(plan) == run_plan(plan)


def test_parallel_and_sequential_runs_agree(tmp_path: Path) -> None:
    plan = _small_plan(instances=2)
    seq = run_plan(plan, jobs=1)
    par = run_plan(plan, jobs=2)
    assert seq == par

    a = write_outputs(tmp_path / "seq", plan, seq)
    b = write_outputs(tmp_path / "par", plan, par)
    assert a.keys() == b.keys()
    for name in a:
        assert a[name].read_bytes() == b[name].read_bytes(), name


def test_run_plan_reports_progress() -> None:
    plan = _small_plan(instances=1, budget=1)
    seen: list[tuple[int, int, str]] = []
    run_plan(plan, progress=lambda done, total, label: seen.append((done, total, label)))

    assert [d for d, _, _ in seen] == list(range(1, plan.cell_count + 1))
    assert all(total == plan.cell_count for _, total, _ in seen)
    assert seen[0][2] == "ER/degree/#0"


def test_failing_cell_is_wrapped_with_its_context() -> None:
    # K5 has no absent edge to add
    plan = ExperimentPlan(
        models=(ModelParams(kind="er", n=5, p=1.0),),
        strategies=(StrategyConfig(kind=StrategyKind.DEGREE, n_a=1),),
        instances=1,
    )
    with pytest.raises(ExperimentError) as e:
        run_plan(plan)

    assert (e.value.model, e.value.strategy, e.value.instance) == ("ER", "degree", 0)
    assert "[ER/degree/#0]" in str(e.value)
    assert e.value.__cause__ is not None


def test_instance_reuse_check_catches_mismatched_graphs() -> None:
    ok = [_traj("ER", "degree", 0, (2.0, 1.9), "aa"), _traj("ER", "betweenness", 0, (2.0, 1.8), "aa")]
    check_instance_reuse(ok)

    bad = ok + [_traj("ER", "accessibility1", 0, (2.0, 1.7), "bb")]
    with pytest.raises(ExperimentError):
        check_instance_reuse(bad)


# -------------------------
# Trajectories / aggregation
# -------------------------

def test_trajectory_validation() -> None:
    with pytest.raises(ValueError):
        _traj("ER", "degree", 0, (2.0, 2.1))
    with pytest.raises(ValueError):
        _traj("ER", "degree", 0, (0.0,))

    t = _traj("ER", "degree", 0, (4.0, 3.95, 3.9))
    assert t.budget == 2
    assert t.variation_pct == pytest.approx(-2.5)
    assert Trajectory.from_dict(t.to_dict()) == t


def test_summarize_arithmetic() -> None:
    trajectories = [
        _with_variation("ER", "degree", 0, 4.0, -1.0),
        _with_variation("ER", "degree", 1, 4.2, -2.0),
        _with_variation("ER", "degree", 2, 4.4, -3.0),
        _with_variation("ER", "betweenness", 0, 4.0, -4.0),
        _with_variation("ER", "betweenness", 1, 4.2, -5.0),
        _with_variation("ER", "betweenness", 2, 4.4, -6.0),
    ]
    table = summarize(trajectories)

    degree = table.row("ER", "degree")
    assert degree.instances == 3
    assert degree.initial_mean == pytest.approx(4.2)
    assert degree.initial_std == pytest.approx(0.2)
    assert degree.variation_pct_mean == pytest.approx(-2.0)
    assert degree.variation_pct_std == pytest.approx(1.0)

    assert table.best_by_model() == {"ER": "betweenness"}
    assert table.row("ER", "betweenness").best
    assert not degree.best


def test_summary_means_match_the_trajectories() -> None:
    trajectories = run_plan(_small_plan())
    for r in summarize(trajectories).rows:
        cell = [t for t in trajectories if (t.model, t.strategy) == (r.model, r.strategy)]
        expected = float(np.mean([t.variation_pct for t in cell]))
        assert abs(r.variation_pct_mean - expected) < 1e-12


def test_summarize_ignores_input_order() -> None:
    trajectories = [
        _with_variation(m, s, i, 3.0 + 0.1 * i, -1.0 - i)
        for m in ("BA", "ER")
        for s in ("degree", "accessibility3")
        for i in range(4)
    ]
    shuffled = list(trajectories)
    random.Random(7).shuffle(shuffled)
    assert summarize(shuffled) == summarize(trajectories)


def test_summarize_edge_cases() -> None:
    with pytest.raises(EmptyInput):
        summarize([])
    with pytest.raises(DataError):
        summarize([_traj("ER", "degree", 0, (2.0, 1.9)), _traj("ER", "degree", 1, (2.0, 1.9, 1.8))])

    single = summarize([_traj("ER", "degree", 0, (2.0, 1.9))]).row("ER", "degree")
    assert math.isnan(single.variation_pct_std)


def test_pearson_r_cases() -> None:
    assert pearson_r([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson_r([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert math.isnan(pearson_r([1, 1, 1], [1, 2, 3]))
    assert math.isnan(pearson_r([1, 2, 3], [5, 5, 5]))


def test_scatter_uses_the_size_of_the_improvement() -> None:
    trajectories = [_with_variation("ER", "degree", i, 3.0 + i, -(1.0 + i)) for i in range(3)]
    (cell,) = scatter_data(trajectories)

    assert [p[0] for p in cell.points] == [0, 1, 2]
    assert cell.pearson_r == pytest.approx(1.0)

    with pytest.raises(InsufficientData):
        scatter_data(trajectories[:1])


def test_mean_trajectories_rows() -> None:
    trajectories = [_traj("ER", "degree", 0, (3.0, 2.0)), _traj("ER", "degree", 1, (5.0, 4.0))]
    rows = mean_trajectories(trajectories)

    assert [r[:3] for r in rows] == [("ER", "degree", 0), ("ER", "degree", 1)]
    assert rows[0][3] == pytest.approx(4.0)
    assert rows[1][3] == pytest.approx(3.0)
    assert rows[0][4] == pytest.approx(math.sqrt(2.0))


# -------------------------
# Output files
# -------------------------

def test_write_outputs(tmp_path: Path) -> None:
    plan = _small_plan()
    trajectories = run_plan(plan)
    paths = write_outputs(tmp_path, plan, trajectories)

    assert set(paths) == {
        "trajectories", "summary", "scatter", "correlation", "mean_trajectories", "instances", "manifest",
    }
    summary = paths["summary"].read_text(encoding="utf-8").splitlines()
    assert summary[0].startswith("model,strategy,label,instances")
    assert len(summary) == 1 + 4

    traj_rows = paths["trajectories"].read_text(encoding="utf-8").splitlines()
    assert len(traj_rows) == 1 + plan.cell_count * (plan.budget + 1)

    instances = paths["instances"].read_text(encoding="utf-8").splitlines()
    assert len(instances) == 1 + 2 * plan.instances

    manifest = json.loads(paths["manifest"].read_text(encoding="utf-8"))
    assert manifest["tool"] == "experiment"
    assert manifest["params"]["master_seed"] == 11
    assert len(manifest["params"]["instance_seeds"]["ER"]) == plan.instances


def test_single_instance_plan_skips_correlation(tmp_path: Path) -> None:
    plan = _small_plan(instances=1, budget=1)
    paths = write_outputs(tmp_path, plan, run_plan(plan))
    assert "correlation" not in paths
    assert not (tmp_path / "correlation.csv").exists()


# -------------------------
# Case study
# -------------------------

def _connected_er(n: int, p: float, seed: int):
    while True:
        g = gen_er(n, p, seed)
        if is_connected(g):
            return g
        seed += 1


def test_case_study(tmp_path: Path) -> None:
    g = _connected_er(30, 0.2, seed=5)
    result = run_case_study(g, reference_strategies(n_a=6), checkpoints=(3, 6), master_seed=1)

    assert result.checkpoints == (3, 6)
    assert len(result.trajectories) == 7
    assert all(t.aspl[0] == result.initial_aspl for t in result.trajectories)

    rows = result.rows()
    assert len(rows) == 14
    for cp in (3, 6):
        best = result.best_at(cp)
        best_aspl = min(t.aspl[cp] for t in result.trajectories)
        assert [r for r in rows if r[1] == cp and r[4]] == [
            (best, cp, best_aspl, result.variation_at(best, cp), True)
        ]

    n = write_case_study(tmp_path / "case.csv", result)
    assert n == 14


def test_case_study_rejects_bad_checkpoints() -> None:
    g = _connected_er(20, 0.25, seed=1)
    with pytest.raises(ValueError):
        run_case_study(g, reference_strategies(n_a=4), checkpoints=(2, 5))
    with pytest.raises(ValueError):
        run_case_study(g, [], checkpoints=(1,))


def test_case_study_is_deterministic() -> None:
    g = _connected_er(25, 0.2, seed=3)
    strategies = [StrategyConfig(kind=k, n_a=4) for k in (StrategyKind.DEGREE, StrategyKind.PREFERENTIAL_ATTACHMENT)]
    a = run_case_study(g, strategies, checkpoints=(4,), master_seed=9)
    b = run_case_study(g, strategies, checkpoints=(4,), master_seed=9, jobs=2)
    assert a == b
