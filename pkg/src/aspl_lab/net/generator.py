from __future__ import annotations

import hashlib
import math
from functools import lru_cache
from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Optional, Set

import numpy as np
from scipy import integrate, optimize
from scipy.spatial.distance import pdist

from .errors import BadParams
from .graph import largest_connected_component
from .types import Coordinates, Graph


ModelKind = Literal["er", "ba", "ws", "wax"]
MODEL_KINDS: tuple[ModelKind, ...] = ("ba", "er", "ws", "wax")

SEED_MAX = 2**64 - 1

# Mean degree the Waxman embedding is calibrated to
WAXMAN_MEAN_DEGREE = 6.0


# -------------------------
# Seeding
# -------------------------

def derive_seed(master_seed: int, *parts: object) -> int:
    # Stream-splitting rule: child seed = BLAKE2b-64(master_seed, parts...).
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master_seed)).encode("ascii"))
    for p in parts:
        h.update(b"\x1f")
        h.update(str(p).encode("utf-8"))
    return int.from_bytes(h.digest(), byteorder="little", signed=False)


def make_rng(seed: int) -> np.random.Generator:
    if not (0 <= seed <= SEED_MAX):
        raise BadParams(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.default_rng(seed)


# -------------------------
# Parameters
# -------------------------

@dataclass(frozen=True, slots=True)
class ModelParams:

    # One network model plus its parameters.
    #  - p is the ER connection probability or the WS rewiring probability
    #  - Waxman positions live in the unit square; distances are scaled by `side`

    kind: ModelKind
    n: int
    seed: int = 0
    p: float = 0.0
    m: int = 3
    k_ring: int = 6
    alpha: float = 0.014
    beta: float = 0.2
    side: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise BadParams(f"unknown model kind: {self.kind!r}")
        if self.n < 2:
            raise BadParams(f"n must be >= 2, got {self.n}")
        if not (0 <= self.seed <= SEED_MAX):
            raise BadParams(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (0.0 <= self.p <= 1.0):
            raise BadParams(f"p must be in [0, 1], got {self.p}")
        if self.kind == "ba" and not (1 <= self.m < self.n):
            raise BadParams(f"BA needs n > m >= 1, got n={self.n}, m={self.m}")
        if self.kind == "ws":
            if self.k_ring % 2 != 0 or not (2 <= self.k_ring < self.n):
                raise BadParams(f"WS needs an even k_ring with 2 <= k_ring < n, got {self.k_ring}")
        if self.kind == "wax" and not (self.alpha > 0 and self.beta > 0):
            raise BadParams(f"Waxman needs alpha, beta > 0, got alpha={self.alpha}, beta={self.beta}")
        if self.kind == "wax" and not self.side > 0:
            raise BadParams(f"Waxman needs side > 0, got {self.side}")

    @property
    def tag(self) -> str:
        return self.kind.upper()

    def with_seed(self, seed: int) -> "ModelParams":
        return ModelParams(
            kind=self.kind, n=self.n, seed=seed, p=self.p, m=self.m,
            k_ring=self.k_ring, alpha=self.alpha, beta=self.beta, side=self.side,
        )

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {"kind": self.kind, "n": self.n, "seed": self.seed}
        # Only the parameters the model actually reads
        if self.kind == "er":
            d["p"] = self.p
        elif self.kind == "ba":
            d["m"] = self.m
        elif self.kind == "ws":
            d["k_ring"] = self.k_ring
            d["p"] = self.p
        else:
            d["alpha"] = self.alpha
            d["beta"] = self.beta
            d["side"] = self.side
        return d

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> "ModelParams":
        return ModelParams(
            kind=d["kind"],
            n=int(d["n"]),
            seed=int(d.get("seed", 0)),
            p=float(d.get("p", 0.0)),
            m=int(d.get("m", 3)),
            k_ring=int(d.get("k_ring", 6)),
            alpha=float(d.get("alpha", 0.014)),
            beta=float(d.get("beta", 0.2)),
            side=float(d.get("side", 1.0)),
        )


# -------------------------
# Models
# -------------------------

def _graph_from_pairs(n: int, rows: np.ndarray, cols: np.ndarray) -> Graph:
    # rows/cols come from triu indices, so every pair is distinct and u < v
    g = Graph(n=n)
    adj = g.adjacency
    for u, v in zip(rows.tolist(), cols.tolist()):
        adj[u].append(v)
        adj[v].append(u)
    for row in adj:
        row.sort()
    g.edge_count = len(rows)
    return g


def _graph_from_sets(n: int, adj: List[Set[int]]) -> Graph:
    g = Graph(n=n, adjacency=[sorted(s) for s in adj])
    g.edge_count = sum(len(s) for s in adj) // 2
    return g


def gen_er(n: int, p: float, seed: int) -> Graph:
    if n < 2 or not (0.0 <= p <= 1.0):
        raise BadParams(f"ER needs n >= 2 and 0 <= p <= 1, got n={n}, p={p}")
    rng = make_rng(seed)
    rows, cols = np.triu_indices(n, k=1)
    keep = rng.random(len(rows)) < p
    return _graph_from_pairs(n, rows[keep], cols[keep])


def gen_ba(n: int, m: int, seed: int) -> Graph:
    """
    Preferential attachment growth from a clique of m+1 nodes.

    Each new node attaches m distinct edges; targets are drawn without
    replacement with probability proportional to their current degree.
    """
    if not (1 <= m < n):
        raise BadParams(f"BA needs n > m >= 1, got n={n}, m={m}")
    rng = make_rng(seed)
    core = m + 1
    adj: List[Set[int]] = [set() for _ in range(n)]
    for u in range(core):
        for v in range(u + 1, core):
            adj[u].add(v)
            adj[v].add(u)

    degree = np.zeros(n, dtype=np.float64)
    degree[:core] = m
    for new in range(core, n):
        weights = degree[:new]
        targets = rng.choice(new, size=m, replace=False, p=weights / weights.sum())
        for t in targets.tolist():
            adj[new].add(t)
            adj[t].add(new)
            degree[t] += 1
        degree[new] = m
    return _graph_from_sets(n, adj)


def gen_ws(n: int, k_ring: int, p: float, seed: int) -> Graph:
    if k_ring % 2 != 0 or not (2 <= k_ring < n) or not (0.0 <= p <= 1.0):
        raise BadParams(f"WS needs even 2 <= k_ring < n and 0 <= p <= 1, got k_ring={k_ring}, p={p}")
    rng = make_rng(seed)
    adj: List[Set[int]] = [set() for _ in range(n)]
    half = k_ring // 2
    for u in range(n):
        for j in range(1, half + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)

    # Rewire lattice edges (u, u+j) one offset ring at a time; u stays fixed
    for j in range(1, half + 1):
        for u in range(n):
            if rng.random() >= p:
                continue
            v = (u + j) % n
            if v not in adj[u]:
                continue
            if len(adj[u]) >= n - 1:
                # No valid target left; keep the original edge
                continue
            w = int(rng.integers(n))
            while w == u or w in adj[u]:
                w = int(rng.integers(n))
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    return _graph_from_sets(n, adj)


def waxman_probability(d: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    # Link probability for points at Euclidean distance d
    return np.minimum(1.0, alpha * np.exp(-np.asarray(d, dtype=np.float64) / beta))


def gen_wax(n: int, alpha: float, beta: float, seed: int, side: float = 1.0) -> tuple[Graph, Coordinates]:
    if n < 2 or not (alpha > 0 and beta > 0 and side > 0):
        raise BadParams(
            f"Waxman needs n >= 2 and alpha, beta, side > 0, got alpha={alpha}, beta={beta}, side={side}"
        )
    rng = make_rng(seed)
    xy = rng.random((n, 2))
    # pdist's condensed order matches np.triu_indices(n, k=1)
    d = side * pdist(xy)
    prob = waxman_probability(d, alpha, beta)
    keep = rng.random(len(d)) < prob
    rows, cols = np.triu_indices(n, k=1)
    return _graph_from_pairs(n, rows[keep], cols[keep]), Coordinates.from_array(xy)


def waxman_expected_degree(n: int, alpha: float, beta: float, side: float = 1.0) -> float:
    # (n - 1) * E[p(side * |X - Y|)] for X, Y uniform in the unit square.
    # Per-axis gaps |x1 - x2| have density 2(1 - t) on [0, 1].
    def _integrand(y: float, x: float) -> float:
        d = side * math.hypot(x, y)
        return 4.0 * (1.0 - x) * (1.0 - y) * min(1.0, alpha * math.exp(-d / beta))

    value, _ = integrate.dblquad(_integrand, 0.0, 1.0, 0.0, 1.0, epsabs=1e-10, epsrel=1e-10)
    return (n - 1) * value


@lru_cache(maxsize=64)
def waxman_side(n: int, alpha: float, beta: float, mean_degree: float = WAXMAN_MEAN_DEGREE) -> float:
    """
    Side of the embedding square that gives `mean_degree` in expectation.

    Positions stay in the unit square and pair distances are multiplied by
    the returned value. The expected degree falls monotonically from
    (n - 1) * min(1, alpha) at side 0, so targets at or above that are rejected.
    """
    ceiling = (n - 1) * min(1.0, alpha)
    if not (0 < mean_degree < ceiling):
        raise BadParams(
            f"Waxman with n={n}, alpha={alpha} cannot reach mean degree {mean_degree} "
            f"(ceiling {ceiling:.3f}); pass an explicit side"
        )

    def _gap(side: float) -> float:
        return waxman_expected_degree(n, alpha, beta, side) - mean_degree

    hi = 1.0
    while _gap(hi) > 0:
        hi *= 2.0
    return float(optimize.brentq(_gap, 0.0, hi, xtol=1e-12, rtol=1e-12))


# -------------------------
# Dispatch / preparation
# -------------------------

@dataclass(frozen=True, slots=True)
class GeneratedNetwork:
    graph: Graph
    params: ModelParams
    coordinates: Optional[Coordinates] = None


@dataclass(frozen=True, slots=True)
class PreparedInstance:

    # LCC of a generated network, ready for strategies.

    graph: Graph
    params: ModelParams
    original_n: int
    retained_fraction: float
    fingerprint: str
    coordinates: Optional[Coordinates] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "original_n": self.original_n,
            "lcc_n": self.graph.n,
            "lcc_edges": self.graph.edge_count,
            "retained_fraction": self.retained_fraction,
            "fingerprint": self.fingerprint,
        }


def generate(params: ModelParams) -> GeneratedNetwork:
    if params.kind == "er":
        return GeneratedNetwork(gen_er(params.n, params.p, params.seed), params)
    if params.kind == "ba":
        return GeneratedNetwork(gen_ba(params.n, params.m, params.seed), params)
    if params.kind == "ws":
        return GeneratedNetwork(gen_ws(params.n, params.k_ring, params.p, params.seed), params)
    graph, coords = gen_wax(params.n, params.alpha, params.beta, params.seed, params.side)
    return GeneratedNetwork(graph, params, coords)


def prepare_instance(params: ModelParams) -> PreparedInstance:
    net = generate(params)
    lcc, mapping = largest_connected_component(net.graph)
    coords = net.coordinates.restrict(mapping) if net.coordinates is not None else None
    return PreparedInstance(
        graph=lcc,
        params=params,
        original_n=net.graph.n,
        retained_fraction=lcc.n / net.graph.n,
        fingerprint=lcc.fingerprint(),
        coordinates=coords,
    )
