"""CSV datasets, JSON model files and report serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from ..core import (
    INF,
    CenterModel,
    Dataset,
    DomainError,
    KernelComponent,
    KernelModel,
    KernelSpec,
    SubspaceModel,
)


class DataError(ValueError):
    """Malformed or out-of-domain input file."""


def _num(v: float) -> str:
    return format(float(v), ".17g")


# -- datasets ----------------------------------------------------------------


def dataset_to_csv(data: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = [f"x_{j + 1}" for j in range(data.d)]
    if data.has_outputs:
        header.append("y")
    w.writerow(header)
    for i in range(data.n):
        row = [_num(v) for v in data.points[i]]
        if data.has_outputs:
            row.append(_num(data.outputs[i]))
        w.writerow(row)
    return buf.getvalue()


def write_dataset_csv(data: Dataset, path) -> None:
    Path(path).write_text(dataset_to_csv(data))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def parse_dataset_csv(
    text: str, lambda_x: Optional[float] = None, has_outputs: Optional[bool] = None
) -> Dataset:
    """One row per point: x_1..x_d then an optional y.

    A header is detected by a non-numeric first row; a last header column named
    ``y`` marks outputs.  Without a header, ``has_outputs`` decides (default
    no outputs).  ``lambda_x`` defaults to the largest point norm.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError("empty CSV")
    first = 1
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip().lower() for c in rows[0]]
        rows = rows[1:]
        first = 2
        header_outputs = header[-1] == "y"
        if has_outputs is not None and has_outputs != header_outputs:
            raise DataError("header disagrees with the requested outputs column")
        has_outputs = header_outputs
        width = len(header)
    else:
        width = len(rows[0])
    has_outputs = bool(has_outputs)
    if not rows:
        raise DataError("CSV has a header but no data rows")
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        line = i + first
        if len(row) != width:
            raise DataError(f"row {line}: expected {width} columns, found {len(row)}")
        try:
            values[i] = [float(c) for c in row]
        except ValueError:
            raise DataError(f"row {line}: non-numeric value") from None
        if not np.all(np.isfinite(values[i])):
            raise DataError(f"row {line}: non-finite value")
        if has_outputs and abs(values[i, -1]) > 0.5:
            raise DataError(f"row {line}: y = {values[i, -1]!r} outside [-1/2, 1/2]")
    X = values[:, :-1] if has_outputs else values
    if X.shape[1] == 0:
        raise DataError("no input columns")
    y = values[:, -1] if has_outputs else None
    try:
        return Dataset(X, y, lambda_x)
    except DomainError as exc:
        raise DataError(str(exc)) from None


def ingest_csv(path, lambda_x: Optional[float] = None, has_outputs: Optional[bool] = None) -> Dataset:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    return parse_dataset_csv(text, lambda_x, has_outputs)


# -- models ------------------------------------------------------------------


def model_to_dict(model) -> dict:
    if isinstance(model, CenterModel):
        return {"type": "centers", "centers": model.centers.tolist()}
    if isinstance(model, SubspaceModel):
        return {"type": "subspaces", "bases": [B.tolist() for B in model.bases]}
    if isinstance(model, KernelModel):
        k = model.kernel
        return {
            "type": "kernel",
            "kernel": {"family": k.family, "gamma": k.gamma, "degree": k.degree, "offset": k.offset},
            "components": [
                {"anchors": c.anchors.tolist(), "coef": c.coef.tolist(), "norm": c.norm}
                for c in model.components
            ],
        }
    raise TypeError(f"not a multi-component model: {type(model).__name__}")


def model_from_dict(obj: dict):
    try:
        kind = obj["type"]
        if kind == "centers":
            return CenterModel(np.asarray(obj["centers"], dtype=float))
        if kind == "subspaces":
            return SubspaceModel(tuple(np.asarray(B, dtype=float) for B in obj["bases"]))
        if kind == "kernel":
            kernel = KernelSpec(**obj["kernel"])
            comps = tuple(
                KernelComponent(np.asarray(c["anchors"]), np.asarray(c["coef"]), c.get("norm"))
                for c in obj["components"]
            )
            return KernelModel(kernel, comps)
    except (KeyError, TypeError, DomainError) as exc:
        raise DataError(f"malformed model file: {exc}") from None
    raise DataError(f"unknown model type {obj.get('type')!r}")


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path):
    try:
        return model_from_dict(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


# -- reports -----------------------------------------------------------------


def jsonable(obj):
    """Recursively convert numpy scalars / arrays and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return obj


def canonical_json(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=1) + "\n"


def rows_to_csv(rows) -> str:
    rows = list(rows)
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _num(v) if isinstance(v, float) else v for k, v in jsonable(r).items()})
    return buf.getvalue()


def emit_report(report, path, fmt: str = "json") -> None:
    """Write a report as canonical JSON or as a flat per-trial CSV."""
    if fmt == "json":
        Path(path).write_text(canonical_json(report.to_dict()))
    elif fmt == "csv":
        Path(path).write_text(rows_to_csv(report.flat_rows()))
    else:
        raise DomainError(f"unknown report format {fmt!r}")


__all__ = [
    "DataError",
    "INF",
    "canonical_json",
    "dataset_to_csv",
    "emit_report",
    "ingest_csv",
    "jsonable",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "parse_dataset_csv",
    "rows_to_csv",
    "save_model",
    "write_dataset_csv",
]
