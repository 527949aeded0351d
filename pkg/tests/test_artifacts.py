from __future__ import annotations

import json
from pathlib import Path

import pytest

from aspl_lab.net.artifacts import AtomicWriter, format_float, manifest_path, write_csv, write_json


def test_format_float_is_exact_and_stable() -> None:
    assert format_float(0.1) == "0.1"
    assert format_float(2.0) == "2.0"
    assert format_float(float("nan")) == "nan"
    assert float(format_float(1 / 3)) == 1 / 3


def test_atomic_writer_publishes_on_close(tmp_path: Path) -> None:
    target = tmp_path / "out" / "a.txt"
    with AtomicWriter(target) as w:
        w.write("hello\n")
        assert not target.exists()

    assert target.read_text(encoding="utf-8") == "hello\n"
    assert [p.name for p in target.parent.iterdir()] == ["a.txt"]


def test_atomic_writer_keeps_the_old_file_on_failure(tmp_path: Path) -> None:
    target = tmp_path / "a.txt"
    target.write_text("old\n", encoding="utf-8")

    with pytest.raises(RuntimeError):
        with AtomicWriter(target) as w:
            w.write("partial")
            raise RuntimeError("boom")

    assert target.read_text(encoding="utf-8") == "old\n"
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]


def test_write_csv_formats_cells(tmp_path: Path) -> None:
    path = tmp_path / "t.csv"
    n = write_csv(path, ("i", "x", "note"), [(0, 1.5, None), (1, float("nan"), "a,b")])

    assert n == 2
    assert path.read_text(encoding="utf-8") == 'i,x,note\n0,1.5,\n1,nan,"a,b"\n'


def test_write_json_is_sorted_and_indented(tmp_path: Path) -> None:
    path = tmp_path / "m.json"
    write_json(path, {"b": 1, "a": [1, 2]})

    text = path.read_text(encoding="utf-8")
    assert text.startswith('{\n  "a"')
    assert json.loads(text) == {"a": [1, 2], "b": 1}


def test_manifest_path_is_a_sidecar() -> None:
    assert manifest_path(Path("runs/g.txt")) == Path("runs/g.txt.manifest.json")
