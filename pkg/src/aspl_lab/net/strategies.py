from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BudgetExceedsCapacity, CompleteGraph, StaleMeasures, TooSmall
from .generator import make_rng
from .graph import aspl, second_neighborhood
from .measures import DEFAULT_WALK_LENGTH, accessibility, betweenness, degree_stats
from .types import Edge, Graph, MeasureVector


class StrategyKind(str, Enum):
    DEGREE = "degree"
    REGULAR_TOPOLOGY = "regular-topology"
    PREFERENTIAL_ATTACHMENT = "preferential-attachment"
    BETWEENNESS = "betweenness"
    ACCESSIBILITY1 = "accessibility1"
    ACCESSIBILITY2 = "accessibility2"
    ACCESSIBILITY3 = "accessibility3"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def measure(self) -> Optional[str]:
        # Cached measure the strategy ranks by; None for degree-driven kinds
        if self is StrategyKind.BETWEENNESS:
            return "betweenness"
        if self in _ACCESSIBILITY_KINDS:
            return "accessibility"
        return None


_LABELS = {
    StrategyKind.DEGREE: "Degree",
    StrategyKind.REGULAR_TOPOLOGY: "Regular topology",
    StrategyKind.PREFERENTIAL_ATTACHMENT: "Pref. attachment",
    StrategyKind.BETWEENNESS: "Btw. centrality",
    StrategyKind.ACCESSIBILITY1: "Accessibility (1)",
    StrategyKind.ACCESSIBILITY2: "Accessibility (2)",
    StrategyKind.ACCESSIBILITY3: "Accessibility (3)",
}

_ACCESSIBILITY_KINDS = (
    StrategyKind.ACCESSIBILITY1,
    StrategyKind.ACCESSIBILITY2,
    StrategyKind.ACCESSIBILITY3,
)

# Extremal-pair rules: (u taken from the high end?, v taken from the high end?)
#  - degree / betweenness / accessibility1: low <-> high
#  - accessibility2: low <-> low (peripheral nodes)
#  - accessibility3: high <-> high (central nodes)
_EXTREMAL_RULES: Dict[StrategyKind, Tuple[bool, bool]] = {
    StrategyKind.DEGREE: (False, True),
    StrategyKind.BETWEENNESS: (False, True),
    StrategyKind.ACCESSIBILITY1: (False, True),
    StrategyKind.ACCESSIBILITY2: (False, False),
    StrategyKind.ACCESSIBILITY3: (True, True),
}


def parse_strategy(name: str) -> StrategyKind:
    key = name.strip().lower().replace("_", "-").replace(" ", "-")
    for kind in StrategyKind:
        if key in (kind.value, kind.name.lower().replace("_", "-")):
            return kind
    valid = ", ".join(k.value for k in StrategyKind)
    raise ValueError(f"unknown strategy {name!r} (expected one of: {valid})")


@dataclass(frozen=True, slots=True)
class StrategyConfig:
    kind: StrategyKind
    n_a: int = 50
    h: int = DEFAULT_WALK_LENGTH
    recompute_every: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.kind, StrategyKind):
            object.__setattr__(self, "kind", parse_strategy(str(self.kind)))
        if self.n_a < 1:
            raise ValueError(f"n_a must be >= 1, got {self.n_a}")
        if self.h < 1:
            raise ValueError(f"h must be >= 1, got {self.h}")
        if self.recompute_every < 1:
            raise ValueError(f"recompute_every must be >= 1, got {self.recompute_every}")

    def with_seed(self, seed: int) -> "StrategyConfig":
        return StrategyConfig(
            kind=self.kind, n_a=self.n_a, h=self.h, recompute_every=self.recompute_every, seed=seed
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "n_a": self.n_a,
            "h": self.h,
            "recompute_every": self.recompute_every,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> "StrategyConfig":
        return StrategyConfig(
            kind=parse_strategy(str(d["kind"])),
            n_a=int(d.get("n_a", 50)),
            h=int(d.get("h", DEFAULT_WALK_LENGTH)),
            recompute_every=int(d.get("recompute_every", 1)),
            seed=int(d.get("seed", 0)),
        )


# -------------------------
# Edge proposal
# -------------------------

def _ranked(values: Sequence[float], rng: np.random.Generator, *, high_first: bool) -> List[int]:
    # Order nodes by value; a random permutation breaks ties uniformly
    perm = rng.permutation(len(values))
    sign = -1.0 if high_first else 1.0
    return sorted(range(len(values)), key=lambda i: (sign * values[i], perm[i]))


def _extremal_pair(
    g: Graph, values: Sequence[float], rng: np.random.Generator, *, u_high: bool, v_high: bool
) -> Edge:
    u_order = _ranked(values, rng, high_first=u_high)
    v_order = u_order if v_high == u_high else u_order[::-1]
    for u in u_order:
        # u adjacent to everything: advance to the next-ranked node
        if g.degree(u) >= g.n - 1:
            continue
        for v in v_order:
            if v != u and not g.has_edge(u, v):
                return (u, v)
    raise CompleteGraph("no non-adjacent pair left")


def _preferential_pair(g: Graph, rng: np.random.Generator) -> Edge:
    degrees = np.asarray(g.degrees(), dtype=np.float64)
    for u in rng.permutation(g.n).tolist():
        if g.degree(u) >= g.n - 1:
            continue
        mask = np.ones(g.n, dtype=bool)
        mask[u] = False
        mask[g.adjacency[u]] = False
        candidates = np.flatnonzero(mask)
        weights = degrees[candidates]
        total = weights.sum()
        if total > 0:
            v = rng.choice(candidates, p=weights / total)
        else:
            v = rng.choice(candidates)
        return (u, int(v))
    raise CompleteGraph("no non-adjacent pair left")


def _regular_topology_pair(g: Graph, rng: np.random.Generator) -> Edge:
    degrees = g.degrees()
    mean_k, _ = degree_stats(g)
    low = sorted((v for v in range(g.n) if degrees[v] < mean_k), key=lambda v: (degrees[v], v))
    for u in low:
        partners = [w for w in second_neighborhood(g, u) if degrees[w] < mean_k]
        if not partners:
            continue
        k_min = min(degrees[w] for w in partners)
        tied = sorted(w for w in partners if degrees[w] == k_min)
        return (u, tied[int(rng.integers(len(tied)))])

    # No low-degree pair at distance 2: join the two lowest-degree non-adjacent nodes
    order = sorted(range(g.n), key=lambda v: (degrees[v], v))
    for i, u in enumerate(order):
        for v in order[i + 1:]:
            if not g.has_edge(u, v):
                return (u, v)
    raise CompleteGraph("no non-adjacent pair left")


def propose_edge(
    g: Graph,
    kind: StrategyKind,
    measures: Optional[MeasureVector],
    rng: np.random.Generator,
) -> Edge:
    if g.is_complete():
        raise CompleteGraph(f"graph on {g.n} nodes is complete; nothing to add")

    if kind is StrategyKind.REGULAR_TOPOLOGY:
        return _regular_topology_pair(g, rng)
    if kind is StrategyKind.PREFERENTIAL_ATTACHMENT:
        return _preferential_pair(g, rng)

    if kind is StrategyKind.DEGREE:
        values: Sequence[float] = g.degrees()
    else:
        if measures is None or measures.kind != kind.measure:
            raise StaleMeasures(f"{kind.value} needs cached {kind.measure} values")
        if len(measures) != g.n:
            raise StaleMeasures(f"cached {measures.kind} has {len(measures)} values for n={g.n}")
        values = measures.values

    u_high, v_high = _EXTREMAL_RULES[kind]
    return _extremal_pair(g, values, rng, u_high=u_high, v_high=v_high)


def compute_measures(g: Graph, cfg: StrategyConfig) -> Optional[MeasureVector]:
    if cfg.kind.measure == "betweenness":
        return betweenness(g)
    if cfg.kind.measure == "accessibility":
        return accessibility(g, cfg.h)
    return None


# -------------------------
# Runs
# -------------------------

@dataclass(frozen=True, slots=True)
class StrategyRun:

    # Result of one strategy applied to one graph.
    #  - aspl has n_a + 1 entries: before any addition, then after each one

    graph: Graph
    aspl: Tuple[float, ...]
    added: Tuple[Edge, ...] = field(default_factory=tuple)

    def __iter__(self):
        # Allows `final, trajectory, added = run_strategy(...)`
        return iter((self.graph, self.aspl, self.added))


def run_strategy(g: Graph, cfg: StrategyConfig) -> StrategyRun:
    if g.n < 3:
        raise TooSmall(f"strategies need at least 3 nodes, got {g.n}")
    if g.missing_edge_count() < cfg.n_a:
        raise BudgetExceedsCapacity(
            f"budget {cfg.n_a} exceeds the {g.missing_edge_count()} absent edges"
        )

    work = g.copy()
    rng = make_rng(cfg.seed)
    trajectory = [aspl(work)]
    added: List[Edge] = []
    measures: Optional[MeasureVector] = None

    for i in range(cfg.n_a):
        if i % cfg.recompute_every == 0:
            measures = compute_measures(work, cfg)
        u, v = propose_edge(work, cfg.kind, measures, rng)
        work.add_edge(u, v)
        added.append((u, v))
        trajectory.append(aspl(work))

    return StrategyRun(graph=work, aspl=tuple(trajectory), added=tuple(added))


def replay_edges(g: Graph, edges: Iterable[Edge]) -> Graph:
    out = g.copy()
    for u, v in edges:
        out.add_edge(u, v)
    return out
