"""CSV matrix files, JSON dataset manifests and JSON reports.

Matrices are plain CSV (UTF-8, LF line endings, comma separated, no header)
written with 17 significant digits so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from ._version import __version__
from .errors import DataError, ParseError, ValidationError
from .geometry import validate_correlation
from .samples import SampleSet

SCHEMA_VERSION = 1
MANIFEST_SCHEMA = "corrmanifold.dataset"


def format_matrix(M) -> str:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return "".join(",".join("%.17g" % v for v in row) + "\n" for row in M)


def write_matrix(path, M) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_matrix(M))
    return path


def read_matrix(path, square: bool = True) -> np.ndarray:
    """Read a headerless numeric CSV; raises :class:`ParseError` naming the file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: cannot read ({exc})") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError:
            raise ParseError(f"{path}: non-numeric value on line {lineno}") from None
    if not rows:
        raise ParseError(f"{path}: empty matrix file")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError(f"{path}: rows have differing column counts {sorted(widths)}")
    M = np.array(rows)
    if square and M.shape[0] != M.shape[1]:
        raise ParseError(f"{path}: expected a square matrix, got {M.shape[0]}x{M.shape[1]}")
    if not np.all(np.isfinite(M)):
        raise ParseError(f"{path}: non-finite value")
    return M


# ---------------------------------------------------------------------------
# JSON


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def report(schema: str, parameters: dict, **payload) -> dict:
    """Wrap a result payload with schema, library version and parameters."""
    out = {"schema": schema, "schema_version": SCHEMA_VERSION, "library_version": __version__,
           "parameters": parameters}
    out.update(payload)
    return out


def write_json(path, obj) -> Path:
    path = Path(path)
    text = json.dumps(_clean(json.loads(json.dumps(obj, default=_default))), indent=2,
                      allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")
    return path


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


# ---------------------------------------------------------------------------
# datasets


def write_dataset(samples: SampleSet, directory, matrix_dir: str = "matrices") -> Path:
    """Write one CSV per matrix plus ``manifest.json``; returns the manifest path."""
    directory = Path(directory)
    (directory / matrix_dir).mkdir(parents=True, exist_ok=True)
    ids = samples.ids or tuple(f"c{i:04d}" for i in range(samples.m))
    entries = []
    for k, (cid, C) in enumerate(zip(ids, samples.items)):
        rel = f"{matrix_dir}/{k:04d}_{_safe_name(cid, k)}.csv"
        write_matrix(directory / rel, C)
        entry = {"id": cid, "path": rel}
        if samples.labels is not None:
            entry["label"] = float(samples.labels[k])
        if samples.groups is not None:
            entry["group"] = samples.groups[k]
        entries.append(entry)
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "n": samples.n,
        "entries": entries,
        "metadata": samples.metadata,
    }
    return write_json(directory / "manifest.json", manifest)


def _safe_name(cid, k):
    keep = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in str(cid))
    return keep or f"c{k:04d}"


def read_dataset(manifest_path, validate: bool = True) -> SampleSet:
    """Load a manifest and its matrices.

    Matrix paths are resolved relative to the manifest. Malformed files raise
    :class:`ParseError`; entries that fail validation (including a dimension
    different from the manifest's ``n``) raise :class:`ValidationError`
    carrying the entry id.
    """
    manifest_path = Path(manifest_path)
    doc = read_json(manifest_path)
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise ParseError(f"{manifest_path}: manifest needs an 'entries' list")
    version = doc.get("schema_version")
    if version is not None and version > SCHEMA_VERSION:
        raise ParseError(f"{manifest_path}: unsupported schema version {version}")
    base = manifest_path.parent
    n = doc.get("n")
    ids, mats, labels, groups = [], [], [], []
    for k, entry in enumerate(doc["entries"]):
        if not isinstance(entry, dict) or "path" not in entry:
            raise ParseError(f"{manifest_path}: entry {k} has no 'path'")
        cid = str(entry.get("id", f"c{k:04d}"))
        path = Path(entry["path"])
        M = read_matrix(path if path.is_absolute() else base / path)
        if n is None:
            n = M.shape[0]
        if M.shape[0] != n:
            raise ValidationError(f"entry {cid}: dimension {M.shape[0]} differs from n={n}",
                                  entry_id=cid)
        if validate:
            try:
                M = validate_correlation(M)
            except DataError as exc:
                raise ValidationError(f"entry {cid}: {exc}", entry_id=cid) from exc
        ids.append(cid)
        mats.append(M)
        labels.append(entry.get("label"))
        groups.append(entry.get("group"))
    if not mats:
        raise ParseError(f"{manifest_path}: manifest lists no entries")
    if len(set(ids)) != len(ids):
        raise ValidationError(f"{manifest_path}: duplicate ids")
    lab = None
    if any(v is not None for v in labels):
        if any(v is None for v in labels):
            raise ValidationError("labels must be given for every entry or none")
        lab = np.array(labels, dtype=float)
    grp = tuple(groups) if any(g is not None for g in groups) else None
    meta = dict(doc.get("metadata") or {})
    meta["manifest"] = os.fspath(manifest_path)
    return SampleSet(np.stack(mats), ids=tuple(ids), labels=lab, groups=grp, metadata=meta)
