import json

import numpy as np
import pytest

from corrmanifold import __version__
from corrmanifold import io
from corrmanifold.benchmark import COLUMNS, benchmark_distances, write_table
from corrmanifold.errors import DataError, ParseError, ValidationError
from corrmanifold.samples import SampleSet
from oracles import random_corr


@pytest.fixture
def rng():
    return np.random.default_rng(8)


def test_matrix_roundtrip_bit_exact(tmp_path, rng):
    C = random_corr(7, rng)
    C[0, 1] = C[1, 0] = 1 / 3
    path = io.write_matrix(tmp_path / "c.csv", C)
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert np.array_equal(io.read_matrix(path), C)


def test_dataset_roundtrip(tmp_path, rng):
    S = SampleSet(np.stack([random_corr(4, rng) for _ in range(5)]),
                  ids=["a", "b/c", "d", "e", "f"], labels=[0.1, 0.2, 0.3, 0.4, 0.5],
                  groups=["x", "x", "y", "y", "y"], metadata={"note": "t"})
    manifest = io.write_dataset(S, tmp_path / "ds")
    back = io.read_dataset(manifest)
    assert np.array_equal(back.items, S.items)
    assert back.ids == S.ids and back.groups == S.groups
    assert np.array_equal(back.labels, S.labels)
    doc = json.loads(manifest.read_text())
    assert doc["schema_version"] == io.SCHEMA_VERSION and doc["n"] == 4
    assert doc["library_version"] == __version__


def _manifest(tmp_path, mats):
    entries = []
    for k, M in enumerate(mats):
        name = f"m{k}.csv"
        (tmp_path / name).write_text(M if isinstance(M, str) else io.format_matrix(M))
        entries.append({"id": f"e{k}", "path": name})
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"schema": io.MANIFEST_SCHEMA, "schema_version": 1,
                                "entries": entries}))
    return path


def test_non_square_is_parse_error(tmp_path):
    path = _manifest(tmp_path, [np.eye(3), np.ones((3, 4))])
    with pytest.raises(ParseError, match="m1.csv"):
        io.read_dataset(path)


def test_ragged_and_non_numeric(tmp_path):
    with pytest.raises(ParseError, match="differing"):
        io.read_dataset(_manifest(tmp_path, ["1,0\n0\n"]))
    with pytest.raises(ParseError, match="non-numeric"):
        io.read_dataset(_manifest(tmp_path, ["1,x\n0,1\n"]))


def test_mixed_dimensions_validation_error(tmp_path):
    path = _manifest(tmp_path, [np.eye(3), np.eye(4)])
    with pytest.raises(ValidationError) as info:
        io.read_dataset(path)
    assert info.value.entry_id == "e1"


def test_invalid_matrix_carries_id(tmp_path):
    bad = np.array([[1.0, 0.5], [0.4, 1.0]])
    with pytest.raises(ValidationError) as info:
        io.read_dataset(_manifest(tmp_path, [np.eye(2), bad]))
    assert info.value.entry_id == "e1"
    assert io.read_dataset(tmp_path / "manifest.json", validate=False).m == 2


def test_report_and_json(tmp_path):
    doc = io.report("corrmanifold.test", {"seed": 3}, value=np.float64(1.5), arr=np.arange(3),
                    bad=float("nan"))
    assert doc["library_version"] == __version__ and doc["parameters"] == {"seed": 3}
    io.write_json(tmp_path / "r.json", doc)
    back = io.read_json(tmp_path / "r.json")
    assert back["value"] == 1.5 and back["arr"] == [0, 1, 2] and back["bad"] is None
    (tmp_path / "x.json").write_text("{")
    with pytest.raises(ParseError):
        io.read_json(tmp_path / "x.json")


def test_benchmark_rows_and_table(tmp_path):
    rows = benchmark_distances([3, 5], trials=3, geometries=["ecm", "lec", "airm"])
    assert len(rows) == 2 * 3
    assert all(r["mean_seconds"] > 0 for r in rows)
    write_table(tmp_path / "b.csv", rows)
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == ",".join(COLUMNS) and len(lines) == 7
    with pytest.raises(DataError):
        benchmark_distances([200], trials=1, geometries=["qam"])
