from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Set, Tuple

import pandas as pd

from .artifacts import write_csv, write_text
from .errors import DuplicateEdge, EmptyNetwork, ParseError, SelfLoop
from .graph import largest_connected_component
from .types import Coordinates, Graph


# -------------------------
# Edge lists
# -------------------------

def parse_edge_list(lines: Iterable[str]) -> Graph:
    # One "u v" pair per line; '#' comments and blank lines ignored
    edges: List[Tuple[int, int]] = []
    seen: Dict[Tuple[int, int], int] = {}
    max_id = -1
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected two node ids, got {len(parts)} fields", line=lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"node ids must be integers: {line!r}", line=lineno) from None
        if u < 0 or v < 0:
            raise ParseError(f"node ids must be non-negative: {line!r}", line=lineno)
        if u == v:
            raise SelfLoop(f"self-loop on node {u}", line=lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DuplicateEdge(f"edge {key} already listed on line {seen[key]}", line=lineno)
        seen[key] = lineno
        edges.append(key)
        max_id = max(max_id, u, v)
    return Graph.from_edges(max_id + 1, edges)


def _decoded(lines: Iterable[bytes], path: Path) -> Iterator[str]:
    for lineno, raw in enumerate(lines, start=1):
        try:
            yield raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"{path}: not valid UTF-8 ({e.reason} at byte {e.start})", line=lineno) from None


def load_edge_list(path: Path) -> Graph:
    path = Path(path)
    with path.open("rb") as f:
        return parse_edge_list(_decoded(f, path))


def write_edge_list(path: Path, g: Graph, header: Iterable[str] = ()) -> int:
    lines = [f"# {h}" for h in header]
    lines.extend(f"{u} {v}" for u, v in g.edges())
    write_text(path, lines)
    return g.edge_count


def write_coordinates(path: Path, coords: Coordinates) -> int:
    return write_csv(
        path,
        ("node_id", "x", "y"),
        ((i, x, y) for i, (x, y) in enumerate(coords.xy)),
    )


def write_labels(path: Path, labels: Dict[int, str], names: Optional[Dict[str, str]] = None) -> int:
    names = names or {}
    return write_csv(
        path,
        ("node_id", "airport", "name"),
        ((i, labels[i], names.get(labels[i], "")) for i in sorted(labels)),
    )


def load_coordinates(path: Path) -> Coordinates:
    df = pd.read_csv(path)
    df = df.sort_values("node_id")
    return Coordinates(xy=tuple((float(x), float(y)) for x, y in zip(df["x"], df["y"])))


# -------------------------
# OpenFlights
# -------------------------

ROUTE_COLUMNS = [
    "airline",
    "airline_id",
    "source_airport",
    "source_airport_id",
    "dest_airport",
    "dest_airport_id",
    "codeshare",
    "stops",
    "equipment",
]

# Older dumps stop after tz_database; missing trailing fields read as NaN
AIRPORT_COLUMNS = [
    "airport_id",
    "name",
    "city",
    "country",
    "iata",
    "icao",
    "latitude",
    "longitude",
    "altitude",
    "timezone",
    "dst",
    "tz_database",
    "type",
    "source",
]

MISSING = r"\N"

_PANDAS_LINE = re.compile(r"line (\d+)")


@dataclass(frozen=True, slots=True)
class AirportNetwork:

    # LCC of the flight graph; labels map node id -> airport code.

    graph: Graph
    labels: Dict[int, str]
    provenance: Dict[str, Any] = field(default_factory=dict)
    names: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.labels.values())) != len(self.labels):
            raise ValueError("airport labels must be unique")
        if len(self.labels) != self.graph.n:
            raise ValueError("every node needs exactly one label")

    def node_of(self, code: str) -> int:
        for node, label in self.labels.items():
            if label == code:
                return node
        raise KeyError(code)


def _read_routes(path: Path, *, strict: bool) -> Tuple[pd.DataFrame, int]:
    malformed: List[List[str]] = []

    def _skip(bad_line: List[str]) -> None:
        malformed.append(bad_line)
        return None

    try:
        df = pd.read_csv(
            path,
            header=None,
            names=ROUTE_COLUMNS,
            dtype=str,
            keep_default_na=False,
            na_values=[MISSING],
            quotechar='"',
            skip_blank_lines=True,
            engine="python",
            on_bad_lines="error" if strict else _skip,
        )
    except pd.errors.EmptyDataError:
        raise EmptyNetwork(f"{path}: no route rows") from None
    except UnicodeDecodeError as e:
        raise ParseError(f"{path}: not valid UTF-8 ({e.reason} at byte {e.start})") from None
    except pd.errors.ParserError as e:
        m = _PANDAS_LINE.search(str(e))
        raise ParseError(f"{path}: malformed route row ({e})", line=int(m.group(1)) if m else None) from None
    return df, len(malformed)


def _read_airport_names(path: Path) -> Dict[str, str]:
    df = pd.read_csv(
        path,
        header=None,
        names=AIRPORT_COLUMNS,
        dtype=str,
        keep_default_na=False,
        na_values=[MISSING],
        quotechar='"',
        engine="python",
        on_bad_lines="skip",
    )
    names: Dict[str, str] = {}
    for col in ("iata", "icao"):
        for code, name in zip(df[col], df["name"]):
            if isinstance(code, str) and code and isinstance(name, str):
                names.setdefault(code, name)
    return names


def _code(value: Any) -> Optional[str]:
    if not isinstance(value, str):
        return None
    value = value.strip()
    if not value or value == MISSING:
        return None
    return value


def ingest_openflights(
    routes_path: Path,
    airports_path: Optional[Path] = None,
    *,
    strict: bool = False,
) -> AirportNetwork:
    """
    Build the undirected airport graph from an OpenFlights routes file.

    Airports are keyed by their source/destination code fields. A route in
    either direction yields one unweighted edge. Rows with a missing code or
    identical endpoints are skipped and counted; malformed rows are skipped
    too unless `strict` is set, in which case they raise ParseError.
    """
    routes_path = Path(routes_path)
    df, malformed = _read_routes(routes_path, strict=strict)

    missing = 0
    self_loops = 0
    pairs: Set[Tuple[str, str]] = set()
    for src_raw, dst_raw in zip(df["source_airport"], df["dest_airport"]):
        src, dst = _code(src_raw), _code(dst_raw)
        if src is None or dst is None:
            missing += 1
            continue
        if src == dst:
            self_loops += 1
            continue
        pairs.add((src, dst) if src < dst else (dst, src))

    accepted = len(df) - missing - self_loops
    if not pairs:
        raise EmptyNetwork(f"{routes_path}: no valid route rows")

    codes = sorted({c for pair in pairs for c in pair})
    index = {c: i for i, c in enumerate(codes)}
    full = Graph.from_edges(len(codes), sorted((index[a], index[b]) for a, b in pairs))
    lcc, mapping = largest_connected_component(full)
    labels = {new: codes[old] for old, new in mapping.items()}

    names: Dict[str, str] = {}
    unknown = None
    if airports_path is not None:
        try:
            names = _read_airport_names(Path(airports_path))
        except UnicodeDecodeError as e:
            raise ParseError(f"{airports_path}: not valid UTF-8 ({e.reason} at byte {e.start})") from None
        unknown = sum(1 for c in codes if c not in names)

    provenance: Dict[str, Any] = {
        "routes_file": routes_path.name,
        "airports_file": Path(airports_path).name if airports_path is not None else None,
        "rows_total": len(df) + malformed,
        "rows_accepted": accepted,
        "rows_dropped": missing + self_loops + malformed,
        "dropped_missing_code": missing,
        "dropped_self_loop": self_loops,
        "dropped_malformed": malformed,
        "airports_seen": len(codes),
        "edges_seen": len(pairs),
        "lcc_nodes": lcc.n,
        "lcc_edges": lcc.edge_count,
        "retained_fraction": lcc.n / len(codes),
        "unknown_airport_codes": unknown,
    }
    return AirportNetwork(graph=lcc, labels=labels, provenance=provenance, names=names)
