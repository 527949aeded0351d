from __future__ import annotations

import hashlib
import math
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, Literal, Optional, Tuple

import numpy as np
from scipy import sparse

from .errors import DuplicateEdge, NodeOutOfRange, SelfLoop

# Marker for "no path" in a DistanceRow
UNREACHABLE = -1

Edge = Tuple[int, int]


# Core Data Types

@dataclass(eq=False, slots=True)
class Graph:

    # Undirected simple graph over nodes 0..n-1.
    # Notes:
    #  - adjacency lists are kept sorted, so has_edge is a bisect
    #  - mutation goes through add_edge only (no removal)

    n: int
    adjacency: List[List[int]] = field(default_factory=list)
    edge_count: int = 0

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if not self.adjacency:
            self.adjacency = [[] for _ in range(self.n)]
        if len(self.adjacency) != self.n:
            raise ValueError(f"adjacency has {len(self.adjacency)} rows, expected {self.n}")

    @staticmethod
    def empty(n: int) -> "Graph":
        return Graph(n=n)

    @staticmethod
    def from_edges(n: int, edges: Iterable[Edge]) -> "Graph":
        g = Graph(n=n)
        for u, v in edges:
            g.add_edge(u, v)
        return g

    def _check_node(self, v: int) -> None:
        if not (0 <= v < self.n):
            raise NodeOutOfRange(f"node {v} out of range for n={self.n}")

    def has_edge(self, u: int, v: int) -> bool:
        row = self.adjacency[u]
        i = bisect_left(row, v)
        return i < len(row) and row[i] == v

    def add_edge(self, u: int, v: int) -> "Graph":
        self._check_node(u)
        self._check_node(v)
        if u == v:
            raise SelfLoop(f"self-loop on node {u}")
        if self.has_edge(u, v):
            raise DuplicateEdge(f"edge ({u}, {v}) already present")
        insort(self.adjacency[u], v)
        insort(self.adjacency[v], u)
        self.edge_count += 1
        return self

    def neighbors(self, v: int) -> List[int]:
        self._check_node(v)
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> List[int]:
        return [len(row) for row in self.adjacency]

    def edges(self) -> Iterator[Edge]:
        # Each undirected edge once, as (u, v) with u < v, in ascending order
        for u, row in enumerate(self.adjacency):
            for v in row:
                if u < v:
                    yield (u, v)

    def is_complete(self) -> bool:
        return self.edge_count == self.n * (self.n - 1) // 2

    def missing_edge_count(self) -> int:
        return self.n * (self.n - 1) // 2 - self.edge_count

    def copy(self) -> "Graph":
        return Graph(
            n=self.n,
            adjacency=[list(row) for row in self.adjacency],
            edge_count=self.edge_count,
        )

    def to_csr(self) -> sparse.csr_matrix:
        # Symmetric 0/1 adjacency matrix
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(row) for row in self.adjacency])
        indices = np.fromiter(
            (v for row in self.adjacency for v in row), dtype=np.int64, count=int(indptr[-1])
        )
        data = np.ones(len(indices), dtype=np.float64)
        return sparse.csr_matrix((data, indices, indptr), shape=(self.n, self.n))

    def fingerprint(self) -> str:
        h = hashlib.sha256(f"n={self.n};".encode("ascii"))
        for u, v in self.edges():
            h.update(f"{u},{v};".encode("ascii"))
        return h.hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.adjacency == other.adjacency

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "edges": [list(e) for e in self.edges()]}

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> "Graph":
        return Graph.from_edges(int(d["n"]), (tuple(e) for e in d["edges"]))


@dataclass(frozen=True, slots=True)
class Coordinates:

    # Per-node positions in the unit square (Waxman embedding space).

    xy: Tuple[Tuple[float, float], ...]

    def __post_init__(self) -> None:
        for i, (x, y) in enumerate(self.xy):
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise ValueError(f"node {i} position ({x}, {y}) outside the unit square")

    def __len__(self) -> int:
        return len(self.xy)

    @staticmethod
    def from_array(arr: np.ndarray) -> "Coordinates":
        return Coordinates(xy=tuple((float(x), float(y)) for x, y in arr))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.xy, dtype=np.float64).reshape(len(self.xy), 2)

    def restrict(self, mapping: Dict[int, int]) -> "Coordinates":
        # Keep only mapped nodes, placed at their new ids
        out: List[Tuple[float, float]] = [(0.0, 0.0)] * len(mapping)
        for old, new in mapping.items():
            out[new] = self.xy[old]
        return Coordinates(xy=tuple(out))


@dataclass(frozen=True, slots=True)
class DistanceRow:

    # Hop counts from one source; UNREACHABLE (-1) where no path exists.

    source: int
    dist: Tuple[int, ...]

    def __post_init__(self) -> None:
        if self.dist[self.source] != 0:
            raise ValueError("dist[source] must be 0")

    def reachable(self) -> List[int]:
        return [j for j, d in enumerate(self.dist) if d != UNREACHABLE]


MeasureKind = Literal["degree", "betweenness", "accessibility"]


@dataclass(frozen=True, slots=True)
class MeasureVector:

    # Per-node values used to rank strategy endpoints.

    values: Tuple[float, ...]
    kind: MeasureKind
    h: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in ("degree", "betweenness", "accessibility"):
            raise ValueError(f"unknown measure kind: {self.kind!r}")
        if self.kind == "accessibility" and (self.h is None or self.h < 1):
            raise ValueError("accessibility measures need a walk length h >= 1")
        if any(not math.isfinite(v) or v < 0 for v in self.values):
            raise ValueError(f"{self.kind} values must be finite and non-negative")

    def __len__(self) -> int:
        return len(self.values)

    def scaled(self, factor: float) -> "MeasureVector":
        return MeasureVector(values=tuple(v * factor for v in self.values), kind=self.kind, h=self.h)


@dataclass(frozen=True, slots=True)
class WalkDistribution:

    # Position distribution of an unbiased h-step random walk started at `source`.

    source: int
    h: int
    probs: Tuple[float, ...]

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be non-negative")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {total!r}")

    def support(self) -> List[int]:
        return [j for j, p in enumerate(self.probs) if p > 0.0]
