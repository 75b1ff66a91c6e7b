"""CSV readers/writers and the JSON report envelope.

All CSV files are UTF-8, comma-separated, '.' decimal, with a header row.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import secrets
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidArgument, ParseError
from .metrics import PredictionSet
from .splitting import SplitPlan

SCHEMA_VERSION = 1
SEED_ENV = "BENCHGATE_SEED"

PREDICTION_COLUMNS = ("assay_id", "method", "fold", "compound_id", "label", "score")
FOLD_METRIC_COLUMNS = ("assay_id", "method", "fold", "auc_roc", "n_pos", "n_neg")
CURVE_COLUMNS = ("kind", "run", "x", "y")
SCATTER_COLUMNS = ("unit_id", "x", "y", "size")


def _open_rows(path, required):
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot open: {exc.strerror}", path) from None
    reader = csv.DictReader(fh)
    if reader.fieldnames is None:
        fh.close()
        raise ParseError("missing header row", path, 1)
    fields = [f.strip() for f in reader.fieldnames]
    missing = [c for c in required if c not in fields]
    if missing:
        fh.close()
        raise ParseError(f"header lacks columns {missing}", path, 1)
    reader.fieldnames = fields
    return fh, reader


def _float(text, path, line, column, allow_missing=False):
    text = (text or "").strip()
    if allow_missing and text.lower() in ("", "nan", "na"):
        return None
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: {text!r} is not a number", path, line) from None
    if not math.isfinite(value):
        if allow_missing:
            return None
        raise ParseError(f"column {column!r}: {text!r} is not finite", path, line)
    return value


def _int(text, path, line, column):
    text = (text or "").strip()
    try:
        value = int(float(text))
    except ValueError:
        raise ParseError(f"column {column!r}: {text!r} is not an integer", path, line) from None
    if value < 0 or float(text) != value:
        raise ParseError(f"column {column!r}: {text!r} must be a nonnegative integer", path, line)
    return value


def read_predictions(path) -> dict[tuple[str, str, str], PredictionSet]:
    """Group a predictions CSV into one PredictionSet per (assay, method, fold)."""
    fh, reader = _open_rows(path, PREDICTION_COLUMNS)
    groups: dict[tuple[str, str, str], tuple[list, list, list]] = {}
    seen = set()
    with fh:
        for line, row in enumerate(reader, start=2):
            key = (row["assay_id"].strip(), row["method"].strip(), row["fold"].strip())
            cid = row["compound_id"].strip()
            if (key, cid) in seen:
                raise ParseError(f"duplicate row for {key + (cid,)}", path, line)
            seen.add((key, cid))
            label = row["label"].strip()
            if label not in ("0", "1"):
                raise ParseError(f"label must be 0 or 1, got {label!r}", path, line)
            score = _float(row["score"], path, line, "score")
            ids, labels, scores = groups.setdefault(key, ([], [], []))
            ids.append(cid)
            labels.append(label == "1")
            scores.append(score)
    if not groups:
        raise ParseError("no data rows", path)
    return {
        key: PredictionSet(np.array(lab, bool), np.array(sc), tuple(ids))
        for key, (ids, lab, sc) in sorted(groups.items())
    }


@dataclass(frozen=True)
class FoldMetric:
    assay_id: str
    method: str
    fold: str
    auc_roc: float | None
    auc_prc: float | None
    n_pos: int
    n_neg: int

    @property
    def size(self) -> int:
        return self.n_pos + self.n_neg


def read_fold_metrics(path) -> list[FoldMetric]:
    """Rows of a fold-metrics CSV; blank or NaN AUC cells become None."""
    fh, reader = _open_rows(path, FOLD_METRIC_COLUMNS)
    rows = []
    seen = set()
    with fh:
        has_prc = "auc_prc" in reader.fieldnames
        for line, row in enumerate(reader, start=2):
            key = (row["assay_id"].strip(), row["method"].strip(), row["fold"].strip())
            if key in seen:
                raise ParseError(f"duplicate row for {key}", path, line)
            seen.add(key)
            auc = _float(row["auc_roc"], path, line, "auc_roc", allow_missing=True)
            prc = _float(row["auc_prc"], path, line, "auc_prc", allow_missing=True) if has_prc else None
            for name, v in (("auc_roc", auc), ("auc_prc", prc)):
                if v is not None and not 0.0 <= v <= 1.0:
                    raise ParseError(f"{name} {v} outside [0, 1]", path, line)
            rows.append(
                FoldMetric(
                    *key,
                    auc_roc=auc,
                    auc_prc=prc,
                    n_pos=_int(row["n_pos"], path, line, "n_pos"),
                    n_neg=_int(row["n_neg"], path, line, "n_neg"),
                )
            )
    if not rows:
        raise ParseError("no data rows", path)
    return rows


def read_groups(path) -> tuple[list[str], list[str]]:
    """(item_ids, group_ids) from a ``item_id,group_id`` CSV."""
    fh, reader = _open_rows(path, ("item_id", "group_id"))
    items, groups = [], []
    with fh:
        for line, row in enumerate(reader, start=2):
            item, group = row["item_id"].strip(), row["group_id"].strip()
            if not item or not group:
                raise ParseError("item_id and group_id must be non-empty", path, line)
            items.append(item)
            groups.append(group)
    if len(set(items)) != len(items):
        raise ParseError("item_id values must be unique", path)
    return items, groups


def read_items(path) -> tuple[list[str], list[int] | None]:
    """(item_ids, labels or None) from an items CSV with optional ``label``."""
    fh, reader = _open_rows(path, ("item_id",))
    items, labels = [], []
    with fh:
        has_label = "label" in reader.fieldnames
        for line, row in enumerate(reader, start=2):
            items.append(row["item_id"].strip())
            if has_label:
                lab = row["label"].strip()
                if lab not in ("0", "1"):
                    raise ParseError(f"label must be 0 or 1, got {lab!r}", path, line)
                labels.append(int(lab))
    if len(set(items)) != len(items):
        raise ParseError("item_id values must be unique", path)
    return items, (labels if has_label else None)


def write_curves_csv(path, rows) -> None:
    """rows: iterable of (kind, run, Curve)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for kind, run, curve in rows:
            for x, y in curve.points:
                w.writerow((kind, run, repr(x), repr(y)))


def read_curves_csv(path) -> dict[tuple[str, str], tuple[np.ndarray, np.ndarray]]:
    fh, reader = _open_rows(path, CURVE_COLUMNS)
    out: dict[tuple[str, str], tuple[list, list]] = {}
    with fh:
        for line, row in enumerate(reader, start=2):
            xs, ys = out.setdefault((row["kind"], row["run"]), ([], []))
            xs.append(_float(row["x"], path, line, "x"))
            ys.append(_float(row["y"], path, line, "y"))
    return {k: (np.array(x), np.array(y)) for k, (x, y) in out.items()}


def write_scatter_csv(path, unit_ids, triples) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCATTER_COLUMNS)
        for uid, (x, y, size) in zip(unit_ids, triples):
            w.writerow((uid, repr(x), repr(y), repr(size)))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def write_json(path, doc) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read JSON: {exc}", path) from None


def read_plan(path) -> SplitPlan:
    return SplitPlan.from_dict(read_json(path))


def make_report(command: str, config: dict, results: dict, seed=None, inputs=None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "benchgate",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {
            name: {"path": str(p), "sha256": file_digest(p)} for name, p in (inputs or {}).items()
        },
        "results": results,
    }


def resolve_seed(flag_value: int | None) -> int:
    """--seed flag, else $BENCHGATE_SEED, else a fresh seed announced on stderr."""
    if flag_value is not None:
        return int(flag_value)
    env = os.environ.get(SEED_ENV, "").strip()
    if env:
        try:
            return int(env)
        except ValueError:
            raise InvalidArgument(f"{SEED_ENV}={env!r} is not an integer") from None
    seed = secrets.randbelow(2**31)
    print(f"benchgate: no seed given, using generated seed {seed}", file=sys.stderr)
    return seed
