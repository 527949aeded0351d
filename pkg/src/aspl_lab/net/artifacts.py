from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence


def format_float(x: float) -> str:
    # repr round-trips exactly, so equal values always print identically
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def _cell(v: Any) -> Any:
    if isinstance(v, float):
        return format_float(v)
    if v is None:
        return ""
    return v


class AtomicWriter:

    # Text writer that only becomes visible at `path` on a clean close.
    # Writes go to a temp file in the same directory, then os.replace().

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{self.path.name}.", suffix=".tmp", dir=self.path.parent)
        self._tmp = Path(tmp)
        self._f = os.fdopen(fd, "w", encoding="utf-8", newline="")

    @property
    def stream(self):
        return self._f

    def write(self, text: str) -> None:
        self._f.write(text)

    def close(self) -> None:
        if not self._f.closed:
            self._f.flush()
            os.fsync(self._f.fileno())
            self._f.close()
            os.replace(self._tmp, self.path)

    def abort(self) -> None:
        if not self._f.closed:
            self._f.close()
        self._tmp.unlink(missing_ok=True)

    def __enter__(self) -> "AtomicWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.close()
        else:
            self.abort()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    n = 0
    with AtomicWriter(path) as w:
        writer = csv.writer(w.stream, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
            n += 1
    return n


def write_json(path: Path, obj: Any) -> None:
    with AtomicWriter(path) as w:
        w.write(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_text(path: Path, lines: Iterable[str]) -> int:
    n = 0
    with AtomicWriter(path) as w:
        for line in lines:
            w.write(line + "\n")
            n += 1
    return n


def manifest_path(out: Path) -> Path:
    # Sidecar manifest for a single-file output: g.txt -> g.txt.manifest.json
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")
