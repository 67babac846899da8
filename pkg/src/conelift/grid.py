"""Uniform tensor-product parameter grids carrying sampled maps, and
finite-difference pullback metrics on them."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .lorentz import Signature, ambient_signature

TARGETS = ("sphere", "cone", "plane", "ambient")


@dataclass
class GridChart:
    """Sampled map from an ``m``-dimensional parameter box.

    ``values`` has shape ``(*shape, width)``; node ``idx`` sits at parameter
    ``origin + idx * spacing``. ``metric``, when present, has shape
    ``(*shape, m, m)``.
    """

    values: np.ndarray
    spacing: tuple[float, ...]
    origin: tuple[float, ...]
    periodic: tuple[bool, ...]
    target: str
    n: int
    k: int = 0
    metric: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.spacing = tuple(float(h) for h in self.spacing)
        self.origin = tuple(float(o) for o in self.origin)
        self.periodic = tuple(bool(p) for p in self.periodic)
        m = self.values.ndim - 1
        if m < 1:
            raise ValueError("values must have at least one grid axis plus a value axis")
        if not (len(self.spacing) == len(self.origin) == len(self.periodic) == m):
            raise ValueError(f"spacing/origin/periodic must all have length m={m}")
        if any(h <= 0 for h in self.spacing):
            raise ValueError("spacing must be positive")
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        if self.target == "cone" and self.k not in (0, 1, -1):
            raise ValueError(f"cone tag k must be 0, +1 or -1, got {self.k}")
        expected = expected_width(self.target, self.n, self.k)
        if expected is not None and self.width != expected:
            raise ValueError(f"{self.target} values need width {expected}, got {self.width}")
        if self.metric is not None:
            self.metric = np.asarray(self.metric, dtype=float)
            if self.metric.shape != (*self.shape, m, m):
                raise ValueError(f"metric shape {self.metric.shape} does not match grid {self.shape}, m={m}")

    @property
    def m(self) -> int:
        return self.values.ndim - 1

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[:-1]

    @property
    def width(self) -> int:
        return self.values.shape[-1]

    def params(self) -> np.ndarray:
        """Parameter coordinates of every node, shape ``(*shape, m)``."""
        axes = [o + h * np.arange(s) for o, h, s in zip(self.origin, self.spacing, self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def with_values(self, values, **changes) -> "GridChart":
        return replace(self, values=values, **changes)

    def window(self, slices: tuple[slice, ...]) -> "GridChart":
        """Sub-grid; windows are never periodic."""
        values = self.values[slices]
        metric = None if self.metric is None else self.metric[slices]
        origin = tuple(o + h * (s.start or 0) for o, h, s in zip(self.origin, self.spacing, slices))
        return replace(self, values=values, origin=origin, periodic=(False,) * self.m, metric=metric)


def expected_width(target: str, n: int, k: int = 0) -> int | None:
    if target == "sphere":
        return n
    if target == "plane":
        return n - 1
    if target == "cone":
        return n + 1 if k == 0 else n + 2
    return None


def default_signature(chart: GridChart) -> Signature:
    if chart.target in ("sphere", "plane"):
        return Signature(0, chart.width)
    if chart.target == "cone":
        return ambient_signature(chart.n, chart.k)
    raise ValueError("ambient charts need an explicit signature")


def jacobian(chart: GridChart) -> np.ndarray:
    """Second-order finite-difference Jacobian, shape ``(*shape, width, m)``.

    Central differences inside, periodic wrap on flagged axes, second-order
    one-sided differences at the ends of the other axes.
    """
    cols = []
    for axis, (h, per) in enumerate(zip(chart.spacing, chart.periodic)):
        if chart.shape[axis] < 3:
            raise ValueError(f"axis {axis} needs at least 3 nodes for second-order differences")
        if per:
            d = (np.roll(chart.values, -1, axis=axis) - np.roll(chart.values, 1, axis=axis)) / (2 * h)
        else:
            d = np.gradient(chart.values, h, axis=axis, edge_order=2)
        cols.append(d)
    return np.stack(cols, axis=-1)


def pullback_metric(chart: GridChart, s: Signature | None = None) -> np.ndarray:
    """Pull the ambient form of ``s`` back along the chart: ``<J_i, J_j>_s`` per node."""
    s = default_signature(chart) if s is None else s
    if s.dim != chart.width:
        raise ValueError(f"signature {tuple(s)} does not match value width {chart.width}")
    J = jacobian(chart)
    return np.einsum("...ci,c,...cj->...ij", J, s.signs, J)


def check_metric_field(g, shape: tuple[int, ...], m: int) -> np.ndarray:
    """Validate a sampled Riemannian metric: symmetric, positive definite, right shape."""
    g = np.asarray(g, dtype=float)
    if g.shape != (*shape, m, m):
        raise ValueError(f"metric shape {g.shape} does not match grid {shape} with m={m}")
    if np.max(np.abs(g - np.swapaxes(g, -1, -2)), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(g))):
        raise ValueError("metric is not symmetric")
    if np.min(np.linalg.eigvalsh(g)) <= 0:
        raise ValueError("metric is not positive definite at some node")
    return g


def relative_deviation(P: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Nodewise ``|P - g|_F / |g|_F``."""
    return np.linalg.norm(P - g, axis=(-2, -1)) / np.linalg.norm(g, axis=(-2, -1))


# -- standard charts ---------------------------------------------------------


def hyperspherical(angles: np.ndarray) -> np.ndarray:
    """Map ``(theta_1..theta_{n-2}, phi)`` to a unit vector in R^n; theta_1 is the
    polar angle from ``e_1``."""
    angles = np.asarray(angles, dtype=float)
    m = angles.shape[-1]
    out = np.empty((*angles.shape[:-1], m + 1))
    sin_prod = np.ones(angles.shape[:-1])
    for i in range(m):
        out[..., i] = sin_prod * np.cos(angles[..., i])
        sin_prod = sin_prod * np.sin(angles[..., i])
    out[..., m] = sin_prod
    return out


def hyperspherical_metric(angles: np.ndarray) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    m = angles.shape[-1]
    diag = np.ones((*angles.shape[:-1], m))
    for i in range(1, m):
        diag[..., i] = diag[..., i - 1] * np.sin(angles[..., i - 1]) ** 2
    return diag[..., :, None] * np.eye(m)


def default_sphere_shape(n: int) -> tuple[int, ...]:
    return {2: (256,), 3: (96, 160), 4: (36, 36, 36), 5: (22, 22, 22, 22)}.get(n, (8,) * (n - 1))


def default_patch(n: int) -> float | None:
    if n <= 3:
        return None
    return 0.5 if n == 4 else 0.3


def sphere_chart(
    n: int, shape: tuple[int, ...] | None = None, margin: float = 0.3, patch: float | None = None
) -> GridChart:
    """Hyperspherical grid on S^{n-1} with the round metric attached.

    Whole-sphere charts (the default for n <= 3) cover polar angles
    ``[margin, pi - margin]`` (the chart degenerates at the poles) and a
    periodic last angle over ``[0, 2 pi)``. With ``patch=r`` (the default
    for n >= 4, see :func:`default_patch`) every angle instead ranges over ``[pi/2 - r, pi/2 + r]``
    and no axis is periodic, which keeps fine grids affordable in higher
    dimension.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    shape = default_sphere_shape(n) if shape is None else tuple(shape)
    if len(shape) != n - 1:
        raise ValueError(f"S^{n - 1} grid needs {n - 1} axes, got {len(shape)}")
    if patch is None:
        patch = default_patch(n)
    if patch is not None:
        spacing = [2 * patch / (s - 1) for s in shape]
        origin = [np.pi / 2 - patch] * len(shape)
        periodic = [False] * len(shape)
    else:
        spacing = [(np.pi - 2 * margin) / (s - 1) for s in shape[:-1]] + [2 * np.pi / shape[-1]]
        origin = [margin] * (len(shape) - 1) + [0.0]
        periodic = [False] * (len(shape) - 1) + [True]
    probe = GridChart(np.zeros((*shape, n)), spacing, origin, periodic, "sphere", n)
    angles = probe.params()
    return replace(probe, values=hyperspherical(angles), metric=hyperspherical_metric(angles))
