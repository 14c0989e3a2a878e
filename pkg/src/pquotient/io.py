"""Reading inputs and writing reproducible JSON/CSV artifacts."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .metric import MalformedInputError, MetricSpace, Partition, as_subset
from .report import Report

INLINE_MATRIX_MAX = 64


def load_space(path: str | Path) -> tuple[MetricSpace, np.ndarray | None, dict[str, Any]]:
    """Load a point-cloud JSON or a distance-matrix CSV.

    Returns ``(space, truth, meta)``; ``truth`` is ``None`` unless the file
    carries ground-truth labels.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        return load_point_cloud(path)
    return load_matrix_csv(path), None, {}


def load_point_cloud(path: str | Path) -> tuple[MetricSpace, np.ndarray | None, dict[str, Any]]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict) or "points" not in doc:
        raise MalformedInputError(f"{path}: expected an object with a 'points' array")
    space = MetricSpace.from_points(doc["points"], labels=doc.get("labels"))
    truth = doc.get("truth")
    if truth is not None:
        truth = as_subset(truth, space.n)
    meta = {k: doc[k] for k in ("name", "params") if k in doc}
    return space, truth, meta


def load_matrix_csv(path: str | Path) -> MetricSpace:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            cells = [c.strip() for c in row if c.strip() != ""]
            if cells:
                rows.append(cells)
    if not rows:
        raise MalformedInputError(f"{path}: empty matrix file")
    if not _is_number(rows[0][0]):
        rows = rows[1:]
    try:
        data = [[float(c) for c in r] for r in rows]
    except ValueError as exc:
        raise MalformedInputError(f"{path}: non-numeric entry ({exc})") from None
    if len({len(r) for r in data}) != 1:
        raise MalformedInputError(f"{path}: rows have differing lengths")
    return MetricSpace(np.array(data))


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_index_array(path: str | Path) -> list[int]:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in doc):
        raise MalformedInputError(f"{path}: expected a JSON array of integers")
    return doc


def load_partition(path: str | Path, n: int) -> Partition:
    labels = load_index_array(path)
    if len(labels) != n:
        raise MalformedInputError(f"{path}: partition has {len(labels)} entries, space has {n} points")
    return Partition.from_labels(labels)


def load_subset(path: str | Path, n: int) -> np.ndarray:
    return as_subset(load_index_array(path), n)


def format_matrix(M: np.ndarray) -> str:
    return "".join(",".join(format(float(x), ".17g") for x in row) + "\n" for row in np.asarray(M))


def write_matrix_csv(path: str | Path, M: np.ndarray) -> None:
    Path(path).write_text(format_matrix(M))


def write_json(path: str | Path, doc: Any) -> None:
    Path(path).write_text(dumps(doc))


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, default=_jsonable) + "\n"


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Report):
        return obj.to_dict()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


class MatrixSink:
    """Inline small matrices; write larger ones next to the report.

    Sidecars are named ``<report stem>.<key>.csv`` and referenced by file
    name, so a report stays byte-identical wherever it is written.
    """

    def __init__(self, report_path: str | Path | None):
        self.report_path = None if report_path is None else Path(report_path)

    def __call__(self, key: str, M: np.ndarray, force_file: bool = False):
        M = np.asarray(M)
        big = max(M.shape, default=0) > INLINE_MATRIX_MAX
        if self.report_path is None or not (big or force_file):
            return {"shape": list(M.shape), "data": M.tolist()}
        name = f"{self.report_path.stem}.{key}.csv"
        write_matrix_csv(self.report_path.parent / name, M)
        return {"shape": list(M.shape), "csv": name}


def qspace_to_dict(qspace, sink: MatrixSink) -> dict[str, Any]:
    from .quotient import EQ_RTOL, equality_tolerance

    qpm = qspace.qpm
    return {
        "metadata": {
            "tau_merge": qspace.tau_merge,
            "equality_rtol": EQ_RTOL,
            "equality_tolerance": equality_tolerance(qpm.space),
            "solver": qpm.solver,
            "n_points": qpm.space.n,
            "n_partition_classes": qpm.partition.K,
            "n_quotient_classes": qspace.size,
        },
        "partition": qpm.partition.to_list(),
        "class_delta": sink("class_delta", qpm.class_delta),
        "quotient": {
            "pi": qspace.pi.tolist(),
            "classes": [m.tolist() for m in qspace.Q.class_members],
            "nabla": sink("nabla", qspace.nabla, force_file=True),
        },
    }


def pipeline_to_dict(report, sink: MatrixSink, include_timings: bool = False) -> dict[str, Any]:
    qs = report.qspace
    doc: dict[str, Any] = {
        "params": {
            **report.params.to_dict(),
            "delta_F": report.delta_F,
            "tau_merge": report.tau_merge,
            "collar": report.collar,
        },
        "decomposition": report.decomposition.to_dict(),
        "quotient": {
            "pi": qs.pi.tolist(),
            "n_classes": qs.size,
            "nabla": sink("nabla", qs.nabla),
        },
        "residual": report.residual.tolist(),
        "residual_points": report.residual_points.tolist(),
        "checks": {k: v.to_dict() for k, v in report.checks.items()},
        "diagnostics": dict(report.diagnostics),
        "ok": report.ok,
    }
    if include_timings:
        doc["timings_ms"] = dict(report.timings_ms)
    return doc
