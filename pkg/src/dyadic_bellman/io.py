"""Readers and writers for weights, reports and tables."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .dyadic_core import DyadicWeight
from .exceptions import InvalidWeightError


def weight_to_dict(w: DyadicWeight) -> dict:
    return {"depth": w.depth, "values": [float(v) for v in w.values]}


def weight_from_dict(data: Any) -> DyadicWeight:
    if not isinstance(data, dict) or set(data) - {"depth", "values"} or "values" not in data:
        raise InvalidWeightError("weight JSON must be an object with 'depth' and 'values'")
    vals = data["values"]
    if not isinstance(vals, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
        raise InvalidWeightError("'values' must be a list of numbers")
    depth = data.get("depth")
    if not isinstance(depth, int) or isinstance(depth, bool):
        raise InvalidWeightError("'depth' must be an integer")
    return DyadicWeight(depth, np.asarray(vals, dtype=float))


def write_weight(w: DyadicWeight, path: str | Path) -> None:
    Path(path).write_text(json.dumps(weight_to_dict(w)))


def read_weight(path: str | Path) -> DyadicWeight:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidWeightError(f"{path}: not valid JSON ({exc})") from exc
    return weight_from_dict(data)


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def dumps_json(obj: Any) -> str:
    return json.dumps(_plain(obj), indent=2)


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def dumps_csv(rows: Iterable[dict], fields: Sequence[str]) -> str:
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(v) for k, v in row.items()})
    return buf.getvalue()
