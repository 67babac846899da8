"""Future light cones of Minkowski (k=0), de Sitter (k=+1) and anti-de Sitter
(k=-1) space, the projection to the sphere of null rays, and the lift of
conformal sphere data to isometric cone immersions.

Cone points are coordinate arrays (last axis), always time-first:

* k=0:  ``(t, x)`` in R^{1,n}
* k=+1: ``(t, x, 1)`` in R^{1,n+1}
* k=-1: ``(1, t, x)`` in R^{2,n}
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridChart, check_metric_field, jacobian, pullback_metric, relative_deviation
from .lorentz import minkowski

CONE_TOL = 1e-10
RANK_EPS = 1e-8


class ConformalityError(ValueError):
    """The sphere chart is not a conformal immersion for the given metric."""

    def __init__(self, message: str, residual: float = np.nan):
        super().__init__(message)
        self.residual = residual


def cone_dimension(coords, k: int) -> int:
    """The ``n`` of the R^{1,n} cone these coordinates represent."""
    w = np.shape(coords)[-1]
    if k == 0:
        return w - 1
    if k in (1, -1):
        return w - 2
    raise ValueError(f"k must be one of 0, +1, -1, got {k}")


def _time_and_space(coords: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    if k == 0:
        return coords[..., 0], coords[..., 1:]
    if k == 1:
        return coords[..., 0], coords[..., 1:-1]
    return coords[..., 1], coords[..., 2:]


@dataclass(frozen=True)
class ConeMembership:
    quadric: np.ndarray
    slice: np.ndarray
    time: np.ndarray
    passed: np.ndarray
    tol: float

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))

    @property
    def max_quadric(self) -> float:
        return float(np.max(np.abs(self.quadric), initial=0.0))

    def failures(self) -> np.ndarray:
        """Flat indices of points that fail."""
        return np.flatnonzero(~np.atleast_1d(self.passed))


def cone_contains(coords, k: int, tol: float = CONE_TOL) -> ConeMembership:
    """Residuals of the cone conditions for tag ``k``.

    ``quadric`` is ``-t^2 + |x|^2`` (signed); ``slice`` is ``|x_{n+1} - 1|`` for
    k=+1, ``|t_1 - 1|`` for k=-1 and zero for k=0. A point passes when
    ``|quadric| <= tol * max(1, t^2)``, ``slice <= tol`` and ``t > 0``.
    """
    coords = np.asarray(coords, dtype=float)
    n = cone_dimension(coords, k)
    if n < 1:
        raise ValueError(f"coordinate length {coords.shape[-1]} too short for k={k}")
    t, x = _time_and_space(coords, k)
    quadric = -t * t + np.sum(x * x, axis=-1)
    if k == 0:
        sl = np.zeros_like(t)
    elif k == 1:
        sl = np.abs(coords[..., -1] - 1.0)
    else:
        sl = np.abs(coords[..., 0] - 1.0)
    passed = (np.abs(quadric) <= tol * np.maximum(1.0, t * t)) & (sl <= tol) & (t > 0)
    return ConeMembership(quadric, sl, t, passed, tol)


def _require_on_cone(coords: np.ndarray, k: int, tol: float) -> None:
    mem = cone_contains(coords, k, tol)
    if not mem.all_passed:
        bad = mem.failures()
        raise ValueError(f"{bad.size} point(s) not on the k={k} cone, first index {bad[0]}")


def to_minkowski(coords, k: int) -> np.ndarray:
    """Drop the slice coordinate: k=+1 and k=-1 points to R^{1,n}. No validation."""
    coords = np.asarray(coords, dtype=float)
    if k == 0:
        return coords
    if k == 1:
        return coords[..., :-1]
    if k == -1:
        return coords[..., 1:]
    raise ValueError(f"k must be one of 0, +1, -1, got {k}")


def from_minkowski(coords, k: int) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    one = np.ones((*coords.shape[:-1], 1))
    if k == 0:
        return coords
    if k == 1:
        return np.concatenate([coords, one], axis=-1)
    if k == -1:
        return np.concatenate([one, coords], axis=-1)
    raise ValueError(f"k must be one of 0, +1, -1, got {k}")


def cone_convert(coords, k_from: int, k_to: int, tol: float | None = CONE_TOL) -> np.ndarray:
    """Move cone points between the three spacetimes, routing through k=0.

    Only slice coordinates are added or removed, so round trips are exact.
    Pass ``tol=None`` to skip validation of the source points.
    """
    coords = np.asarray(coords, dtype=float)
    if tol is not None:
        _require_on_cone(coords, k_from, tol)
    return from_minkowski(to_minkowski(coords, k_from), k_to)


def quadric_residual(coords, k: int) -> np.ndarray:
    """Residual of the ambient quadric housing the cone: 0 for Minkowski's null
    cone, ``<p,p> - 1`` on de Sitter, ``<p,p> + 1`` on anti-de Sitter."""
    coords = np.asarray(coords, dtype=float)
    if k == 0:
        return -coords[..., 0] ** 2 + np.sum(coords[..., 1:] ** 2, axis=-1)
    if k == 1:
        return -coords[..., 0] ** 2 + np.sum(coords[..., 1:] ** 2, axis=-1) - 1.0
    if k == -1:
        return -coords[..., 0] ** 2 - coords[..., 1] ** 2 + np.sum(coords[..., 2:] ** 2, axis=-1) + 1.0
    raise ValueError(f"k must be one of 0, +1, -1, got {k}")


def cone_project(coords, k: int = 0, tol: float | None = CONE_TOL) -> np.ndarray:
    """The null-ray map ``(t, x) -> x / t`` to S^{n-1}."""
    coords = np.asarray(coords, dtype=float)
    if tol is not None:
        _require_on_cone(coords, k, tol)
    p = to_minkowski(coords, k)
    return p[..., 1:] / p[..., :1]


# -- charts ------------------------------------------------------------------


def extract_conformal_factor(psi: GridChart, g=None, tol: float = 1e-3) -> tuple[np.ndarray, float]:
    """Find ``lam`` with ``psi^* g_S = lam^{-2} g`` nodewise.

    The scalar ``c = lam^{-2}`` at each node is the Frobenius projection of
    the finite-difference pullback onto ``g``. Returns ``(lam, residual)``
    where residual is ``max |P - c g|_F / |g|_F``. Raises
    :class:`ConformalityError` when ``c <= 0`` somewhere or the residual
    exceeds ``tol``.
    """
    if psi.target != "sphere":
        raise ValueError("psi must be a sphere-valued chart")
    g = psi.metric if g is None else g
    if g is None:
        raise ValueError("no metric supplied")
    g = check_metric_field(g, psi.shape, psi.m)
    P = pullback_metric(psi)
    c = np.sum(P * g, axis=(-2, -1)) / np.sum(g * g, axis=(-2, -1))
    if np.any(c <= 0):
        raise ConformalityError("pullback degenerates (non-positive conformal scale)")
    residual = float(np.max(relative_deviation(P, c[..., None, None] * g)))
    if residual > tol:
        raise ConformalityError(f"chart is not conformal: residual {residual:.3g} > {tol:.3g}", residual)
    return c ** -0.5, residual


def cone_lift(psi: GridChart, lam, k: int = 0) -> GridChart:
    """Isometric cone chart ``(lam, lam * psi)``, expressed in the k-coordinates."""
    if psi.target != "sphere":
        raise ValueError("psi must be a sphere-valued chart")
    lam = np.broadcast_to(np.asarray(lam, dtype=float), psi.shape)
    if np.any(lam <= 0):
        raise ValueError("conformal factor must be positive")
    values = np.concatenate([lam[..., None], lam[..., None] * psi.values], axis=-1)
    return psi.with_values(from_minkowski(values, k), target="cone", k=k)


def project_chart(chart: GridChart) -> GridChart:
    """Sphere chart ``pi o phi`` of a cone chart."""
    if chart.target != "cone":
        raise ValueError("expected a cone chart")
    return chart.with_values(cone_project(chart.values, chart.k, tol=None), target="sphere", k=0)


@dataclass(frozen=True)
class ImmersionReport:
    deviation: float
    cone_ok: bool
    cone_max_residual: float
    min_singular: float
    rank_deficient: bool
    tol: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tol and self.cone_ok

    def to_json(self) -> dict:
        return {
            "deviation": f"{self.deviation:.17g}",
            "cone_ok": self.cone_ok,
            "cone_max_residual": f"{self.cone_max_residual:.17g}",
            "min_singular": f"{self.min_singular:.17g}",
            "rank_deficient": self.rank_deficient,
            "pass": self.passed,
        }


def verify_isometric_immersion(chart: GridChart, g=None, tol: float = 1e-3) -> ImmersionReport:
    """Compare the finite-difference pullback of the ambient form to ``g``.

    Rank deficiency of the Jacobian (smallest singular value below 1e-8) is
    reported but does not fail the check.
    """
    if chart.target != "cone":
        raise ValueError("expected a cone chart")
    g = chart.metric if g is None else g
    if g is None:
        raise ValueError("no metric supplied")
    g = check_metric_field(g, chart.shape, chart.m)
    P = pullback_metric(chart)
    deviation = float(np.max(relative_deviation(P, g)))
    mem = cone_contains(chart.values, chart.k)
    smin = float(np.min(np.linalg.svd(jacobian(chart), compute_uv=False)[..., -1]))
    return ImmersionReport(
        deviation=deviation,
        cone_ok=mem.all_passed,
        cone_max_residual=mem.max_quadric,
        min_singular=smin,
        rank_deficient=smin < RANK_EPS,
        tol=tol,
    )


def verify_lemma1(chart: GridChart, g=None) -> float:
    """Max nodewise relative deviation between ``(pi o phi)^* g_S`` and ``t^{-2} g``."""
    if chart.target != "cone":
        raise ValueError("expected a cone chart")
    g = chart.metric if g is None else g
    if g is None:
        raise ValueError("no metric supplied")
    g = check_metric_field(g, chart.shape, chart.m)
    t = to_minkowski(chart.values, chart.k)[..., 0]
    P = pullback_metric(project_chart(chart))
    return float(np.max(relative_deviation(P, g / (t * t)[..., None, None])))


def minkowski_pullback(chart: GridChart) -> np.ndarray:
    """Pullback of the R^{1,n} form along a cone chart (slice coordinates dropped)."""
    mink = chart.with_values(to_minkowski(chart.values, chart.k), target="ambient", k=0)
    return pullback_metric(mink, minkowski(chart.n))
