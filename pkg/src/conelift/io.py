"""JSON formats for matrices, charts, correspondences, point sets and
sampled self-maps. Every ``*_to_json`` has a matching ``*_from_json``."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .grid import GridChart
from .rigidity import CorrespondenceSet, SelfMapSamples


class SchemaError(ValueError):
    """Malformed input document; ``field`` names the offending key."""

    def __init__(self, field: str, problem: str = "missing or invalid"):
        super().__init__(f"field '{field}': {problem}")
        self.field = field


def _get(d: dict, key: str, kind=None):
    if not isinstance(d, dict) or key not in d:
        raise SchemaError(key, "missing")
    val = d[key]
    if kind is not None and not isinstance(val, kind):
        raise SchemaError(key, f"expected {getattr(kind, '__name__', kind)}")
    return val


def _array(d: dict, key: str, ndim: int | None = None) -> np.ndarray:
    raw = _get(d, key)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(key, "not a rectangular numeric array") from None
    if ndim is not None and arr.ndim != ndim:
        raise SchemaError(key, f"expected a {ndim}-d array, got {arr.ndim}-d")
    return arr


def read_json(path: str | Path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def dumps(doc: Any) -> str:
    return json.dumps(doc, allow_nan=True) + "\n"


def write_json(doc: Any, path: str | Path | None = None) -> str:
    text = dumps(doc)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# -- matrices ----------------------------------------------------------------


def matrix_to_json(M: np.ndarray) -> dict:
    M = np.asarray(M, dtype=float)
    return {"n": M.shape[0] - 1, "entries": M.tolist()}


def matrix_from_json(d: dict) -> np.ndarray:
    n = _get(d, "n", int)
    M = _array(d, "entries", 2)
    if M.shape != (n + 1, n + 1):
        raise SchemaError("entries", f"expected shape {(n + 1, n + 1)}, got {M.shape}")
    return M


# -- charts ------------------------------------------------------------------


def chart_to_json(chart: GridChart) -> dict:
    m = chart.m
    doc = {
        "m": m,
        "n": chart.n,
        "target": chart.target,
        "k": chart.k,
        "shape": list(chart.shape),
        "spacing": list(chart.spacing),
        "origin": list(chart.origin),
        "periodic": list(chart.periodic),
        "values": chart.values.reshape(-1, chart.width).tolist(),
    }
    if chart.metric is not None:
        doc["metric"] = chart.metric.reshape(-1, m * m).tolist()
    return doc


def chart_from_json(d: dict) -> GridChart:
    m = _get(d, "m", int)
    n = _get(d, "n", int)
    target = _get(d, "target", str)
    k = d.get("k", 0)
    shape = tuple(_get(d, "shape", list))
    if len(shape) != m or not all(isinstance(s, int) and s > 0 for s in shape):
        raise SchemaError("shape", f"expected {m} positive integers")
    values = _array(d, "values", 2)
    nodes = int(np.prod(shape))
    if values.shape[0] != nodes:
        raise SchemaError("values", f"expected {nodes} node rows, got {values.shape[0]}")
    metric = None
    if "metric" in d:
        metric = _array(d, "metric", 2)
        if metric.shape != (nodes, m * m):
            raise SchemaError("metric", f"expected shape {(nodes, m * m)}, got {metric.shape}")
        metric = metric.reshape(*shape, m, m)
    try:
        return GridChart(
            values.reshape(*shape, values.shape[1]),
            _get(d, "spacing", list),
            _get(d, "origin", list),
            _get(d, "periodic", list),
            target,
            n,
            k,
            metric,
        )
    except ValueError as exc:
        raise SchemaError("chart", str(exc)) from None


def metric_from_json(d: dict, chart: GridChart) -> np.ndarray:
    """Metric samples from a document carrying a ``metric`` field (a chart file works)."""
    m = chart.m
    g = _array(d, "metric", 2)
    nodes = int(np.prod(chart.shape))
    if g.shape != (nodes, m * m):
        raise SchemaError("metric", f"expected shape {(nodes, m * m)}, got {g.shape}")
    return g.reshape(*chart.shape, m, m)


# -- pairs and points --------------------------------------------------------


def correspondence_to_json(c: CorrespondenceSet) -> dict:
    return {
        "k": c.k,
        "n": c.n,
        "pairs": [[x, y] for x, y in zip(c.source.tolist(), c.target.tolist())],
    }


def _pairs(d: dict) -> tuple[np.ndarray, np.ndarray]:
    raw = _get(d, "pairs", list)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError("pairs", "not a rectangular numeric array") from None
    if arr.ndim != 3 or arr.shape[1] != 2:
        raise SchemaError("pairs", "expected a list of [point, point] pairs")
    return arr[:, 0, :], arr[:, 1, :]


def correspondence_from_json(d: dict) -> CorrespondenceSet:
    k = _get(d, "k", int)
    n = _get(d, "n", int)
    src, dst = _pairs(d)
    try:
        c = CorrespondenceSet(k, src, dst)
    except ValueError as exc:
        raise SchemaError("pairs", str(exc)) from None
    if c.n != n:
        raise SchemaError("n", f"declared {n} but points imply {c.n}")
    return c


def sphere_pairs_to_json(z: np.ndarray, zt: np.ndarray) -> dict:
    z = np.asarray(z, dtype=float)
    return {"n": z.shape[1], "pairs": [[a, b] for a, b in zip(z.tolist(), np.asarray(zt).tolist())]}


def sphere_pairs_from_json(d: dict) -> tuple[np.ndarray, np.ndarray]:
    n = _get(d, "n", int)
    z, zt = _pairs(d)
    if z.shape[1] != n:
        raise SchemaError("pairs", f"points must have length n={n}")
    return z, zt


def points_to_json(points: np.ndarray, k: int | None = None, n: int | None = None) -> dict:
    points = np.asarray(points, dtype=float)
    doc: dict = {}
    if k is not None:
        doc["k"] = k
    doc["n"] = n if n is not None else points.shape[1]
    doc["points"] = points.tolist()
    return doc


def points_from_json(d: dict) -> tuple[np.ndarray, int | None, int]:
    """Returns ``(points, k, n)``; ``k`` is None for sphere samples."""
    n = _get(d, "n", int)
    k = d.get("k")
    if k is not None and k not in (0, 1, -1):
        raise SchemaError("k", "must be 0, 1 or -1")
    pts = _array(d, "points", 2)
    width = n if k is None else (n + 1 if k == 0 else n + 2)
    if pts.shape[1] != width:
        raise SchemaError("points", f"expected length {width}, got {pts.shape[1]}")
    return pts, k, n


# -- self-maps ---------------------------------------------------------------


def selfmap_to_json(s: SelfMapSamples) -> dict:
    nodes = int(np.prod(s.sphere.shape))
    T = s.t_levels.size
    return {
        "k": s.k,
        "n": s.n,
        "t_levels": s.t_levels.tolist(),
        "sphere": chart_to_json(s.sphere),
        "image_t": s.image_t.reshape(T, nodes).tolist(),
        "image_z": s.image_z.reshape(T, nodes, s.n).tolist(),
    }


def selfmap_from_json(d: dict) -> SelfMapSamples:
    k = _get(d, "k", int)
    n = _get(d, "n", int)
    sphere = chart_from_json(_get(d, "sphere", dict))
    if sphere.n != n:
        raise SchemaError("sphere", f"sphere grid has n={sphere.n}, expected {n}")
    t_levels = _array(d, "t_levels", 1)
    T = t_levels.size
    image_t = _array(d, "image_t", 2)
    image_z = _array(d, "image_z", 3)
    try:
        return SelfMapSamples(
            t_levels,
            sphere,
            image_t.reshape(T, *sphere.shape),
            image_z.reshape(T, *sphere.shape, n),
            k,
        )
    except ValueError as exc:
        raise SchemaError("image_t", str(exc)) from None
