"""Synthetic inputs: the double-wrapped circle pair, unit-slice sphere charts,
Lorentz-related chart pairs, sampled cone self-maps and non-Moebius sphere
pairs."""
from __future__ import annotations

import numpy as np

from .cone import cone_lift, from_minkowski
from .conformal import random_conformal
from .grid import GridChart, sphere_chart
from .rigidity import CorrespondenceSet, SelfMapSamples, sample_selfmap


def random_sphere_points(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    z = rng.standard_normal((count, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_cone_points(
    rng: np.random.Generator, count: int, n: int, t_range: tuple[float, float] = (0.5, 2.0)
) -> np.ndarray:
    """Points ``(t, t z)`` on the R^{1,n} cone with log-uniform ``t``."""
    t = np.exp(rng.uniform(np.log(t_range[0]), np.log(t_range[1]), count))
    return t[:, None] * np.hstack([np.ones((count, 1)), random_sphere_points(rng, count, n)])


def circle_charts(nodes: int = 512) -> tuple[GridChart, GridChart]:
    """The radius-2 circle, ``g = 4 dtheta^2``, immersed into the R^{1,2} cone
    twice: ``(2, 2 cos, 2 sin)`` and the double cover ``(1, cos 2, sin 2)``."""
    theta = 2 * np.pi * np.arange(nodes) / nodes
    g = np.full((nodes, 1, 1), 4.0)
    common = dict(spacing=(2 * np.pi / nodes,), origin=(0.0,), periodic=(True,), target="cone", n=2, k=0, metric=g)
    phi1 = np.stack([np.full(nodes, 2.0), 2 * np.cos(theta), 2 * np.sin(theta)], axis=-1)
    phi2 = np.stack([np.ones(nodes), np.cos(2 * theta), np.sin(2 * theta)], axis=-1)
    return GridChart(phi1, **common), GridChart(phi2, **common)


def circle_psi(nodes: int, wraps: int = 1) -> GridChart:
    """``theta -> (cos w theta, sin w theta)`` with metric ``4 dtheta^2``."""
    theta = 2 * np.pi * np.arange(nodes) / nodes
    z = np.stack([np.cos(wraps * theta), np.sin(wraps * theta)], axis=-1)
    return GridChart(z, (2 * np.pi / nodes,), (0.0,), (True,), "sphere", 2, metric=np.full((nodes, 1, 1), 4.0))


def sphere_identity(n: int, shape: tuple[int, ...] | None = None, k: int = 0) -> GridChart:
    """Unit-slice cone chart ``(1, z)`` over a hyperspherical grid, metric g_S."""
    return cone_lift(sphere_chart(n, shape), 1.0, k)


def random_cone_chart(
    rng: np.random.Generator, n: int, shape: tuple[int, ...] | None = None, k: int = 0
) -> GridChart:
    """Brinkmann lift ``(lam, lam z)`` of the sphere grid for a smooth random
    positive ``lam(z) = exp(c . z + c0)``; its metric is ``lam^2 g_S``."""
    psi = sphere_chart(n, shape)
    c = rng.uniform(-0.3, 0.3, n)
    lam = np.exp(psi.values @ c + rng.uniform(-0.2, 0.2))
    chart = cone_lift(psi, lam, k)
    chart.metric = (lam * lam)[..., None, None] * psi.metric
    return chart


def tau_pair(
    seed: int, n: int, shape: tuple[int, ...] | None = None, steps: int = 8, bound: float = 2.0, k: int = 0
) -> tuple[GridChart, GridChart, np.ndarray]:
    """``(chart1, tau0 . chart1, tau0)`` for ``tau0 = random_conformal(seed, steps, bound)``."""
    rng = np.random.default_rng(seed)
    chart1 = random_cone_chart(rng, n, shape, k=0)
    tau0 = random_conformal(seed, steps, bound, n)
    chart2 = chart1.with_values(chart1.values @ tau0.T)
    if k != 0:
        chart1 = chart1.with_values(from_minkowski(chart1.values, k), k=k)
        chart2 = chart2.with_values(from_minkowski(chart2.values, k), k=k)
    return chart1, chart2, tau0


def tau_pair_points(seed: int, n: int, count: int = 20, steps: int = 8, bound: float = 2.0) -> tuple[CorrespondenceSet, np.ndarray]:
    rng = np.random.default_rng(seed)
    x = random_cone_points(rng, count, n)
    tau0 = random_conformal(seed, steps, bound, n)
    return CorrespondenceSet(0, x, x @ tau0.T), tau0


def circle_pairs(samples: int = 16) -> CorrespondenceSet:
    phi1, phi2 = circle_charts(samples)
    return CorrespondenceSet(0, phi1.values, phi2.values)


def single_ray_pairs(n: int, count: int = 6) -> CorrespondenceSet:
    z = np.zeros(n)
    z[0] = 1.0
    t = np.linspace(0.5, 3.0, count)
    x = t[:, None] * np.r_[1.0, z]
    return CorrespondenceSet(0, x, x)


def default_levels(count: int = 5) -> np.ndarray:
    return np.linspace(0.5, 2.5, count)


def cone_selfmap(
    seed: int,
    n: int,
    variant: str = "tau",
    levels: int = 5,
    shape: tuple[int, ...] | None = None,
    steps: int = 8,
    bound: float = 2.0,
) -> tuple[SelfMapSamples, np.ndarray]:
    """Sampled cone self-map on ``levels x sphere-grid``.

    ``variant``: ``"tau"`` restricts ``random_conformal(seed, ...)``;
    ``"identity"`` is the identity; ``"twisted"`` keeps ``t`` and rotates the
    last two sphere coordinates by angle ``t`` (a ``t``-dependent map, hence
    not a cone isometry). Returns the samples and the generating matrix
    (identity for the non-Lorentz variant).
    """
    sphere = sphere_chart(n, shape)
    t_levels = default_levels(levels)
    if variant == "tau":
        tau0 = random_conformal(seed, steps, bound, n)
    elif variant in ("identity", "twisted"):
        tau0 = np.eye(n + 1)
    else:
        raise ValueError(f"unknown self-map variant {variant!r}")
    samples = sample_selfmap(tau0, t_levels, sphere)
    if variant == "twisted":
        z = np.broadcast_to(sphere.values[None], samples.image_z.shape).copy()
        ang = t_levels.reshape((-1,) + (1,) * sphere.m)
        c, s = np.cos(ang), np.sin(ang)
        p, q = z[..., -2].copy(), z[..., -1].copy()
        z[..., -2] = c * p - s * q
        z[..., -1] = s * p + c * q
        samples = SelfMapSamples(t_levels, sphere, samples.image_t, z)
    return samples, tau0


def nonconformal_pairs(seed: int, n: int, count: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Sphere pairs under the coordinatewise cube, renormalized (not Moebius)."""
    z = random_sphere_points(np.random.default_rng(seed), count, n)
    zt = z ** 3
    return z, zt / np.linalg.norm(zt, axis=1, keepdims=True)
