"""Conformal transformations of S^{n-1} realized as Lorentz matrices.

Sphere points are unit vectors ``z = (z1, z')`` in R^n; plane points are
their stereographic images ``w = z' / (1 - z1)`` in R^{n-1}. The point
``(1, 0, ..., 0)`` is the pole and has no plane image.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import ortho_group

from .lorentz import (
    DEFAULT_TOL,
    ValidityReport,
    blocks,
    from_blocks,
    lorentz_check,
    minkowski,
    minkowski_inner,
)

POLE_EPS = 1e-12
GAP_THRESHOLD = 1e-8


class Status(str, Enum):
    UNIQUE = "unique"
    INCONSISTENT = "inconsistent"
    UNDERDETERMINED = "underdetermined"


class PoleError(ValueError):
    """Stereographic projection requested at the pole z1 = 1."""


class DenominatorError(ValueError):
    """u^T z + a <= 0: the matrix is not orthochronous (or is corrupted)."""


def stereo_project(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    pole = np.zeros(z.shape[-1])
    pole[0] = 1.0
    if np.any(np.linalg.norm(z - pole, axis=-1) <= POLE_EPS):
        raise PoleError("stereographic projection of the pole")
    return z[..., 1:] / (1.0 - z[..., :1])


def stereo_unproject(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    s = np.sum(w * w, axis=-1, keepdims=True)
    return np.concatenate([(s - 1.0) / (s + 1.0), 2.0 * w / (s + 1.0)], axis=-1)


def _denominator(m: np.ndarray, z: np.ndarray) -> np.ndarray:
    return z @ m[0, 1:] + m[0, 0]


def mobius_apply(m, z) -> np.ndarray:
    """Induced sphere map ``z -> (Az + v) / (u^T z + a)``; ``z`` may be batched."""
    m = np.asarray(m, dtype=float)
    z = np.asarray(z, dtype=float)
    den = _denominator(m, z)
    if np.any(den <= 0):
        raise DenominatorError("non-positive denominator u^T z + a")
    out = (z @ m[1:, 1:].T + m[1:, 0]) / den[..., None]
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def mobius_conformal_factor(m, z) -> np.ndarray | float:
    """Linear stretch ``1 / (u^T z + a)`` of the induced sphere map at ``z``."""
    m = np.asarray(m, dtype=float)
    den = _denominator(m, np.asarray(z, dtype=float))
    if np.any(den <= 0):
        raise DenominatorError("non-positive denominator u^T z + a")
    out = 1.0 / den
    return float(out) if np.ndim(out) == 0 else out


# -- generator lifts ---------------------------------------------------------


def gen_dilation(lam: float, n: int) -> np.ndarray:
    """Lift of ``w -> lam * w``. Negative ``lam`` negates every block."""
    if lam == 0:
        raise ValueError("dilation factor must be nonzero")
    c = 0.5 * (lam + 1.0 / lam)
    s = 0.5 * (lam - 1.0 / lam)
    e1 = np.zeros(n)
    e1[0] = 1.0
    A = np.eye(n)
    A[0, 0] = c
    M = from_blocks(c, s * e1, s * e1, A)
    return -M if lam < 0 else M


def gen_rotation(B, tol: float = 1e-10) -> np.ndarray:
    """Lift of ``w -> B w`` for orthogonal ``B`` of size n-1."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d = B.shape[0]
    if B.shape != (d, d) or np.max(np.abs(B.T @ B - np.eye(d))) > tol:
        raise ValueError("B must be a square orthogonal matrix")
    M = np.eye(d + 2)
    M[2:, 2:] = B
    return M


def gen_inversion(w0) -> np.ndarray:
    """Lift of ``w -> (w - w0) / |w - w0|^2``."""
    w0 = np.atleast_1d(np.asarray(w0, dtype=float))
    h = 0.5 * (w0 @ w0)
    n = w0.shape[0] + 1
    A = np.eye(n)
    A[0, 0] = -1.0 + h
    A[0, 1:] = w0
    A[1:, 0] = w0
    uv = np.r_[-h, -w0]
    return from_blocks(1.0 + h, uv, uv, A)


def gen_translation(b) -> np.ndarray:
    """Lift of ``w -> w + b``."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    h = 0.5 * (b @ b)
    n = b.shape[0] + 1
    A = np.eye(n)
    A[0, 0] = 1.0 - h
    A[0, 1:] = b
    A[1:, 0] = -b
    return from_blocks(1.0 + h, np.r_[-h, b], np.r_[h, b], A)


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.array([[rng.choice([-1.0, 1.0])]])
    return ortho_group.rvs(d, random_state=rng)


def _random_ball(d: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal(d)
    return radius * rng.uniform() ** (1.0 / d) * x / np.linalg.norm(x)


def random_generator(n: int, bound: float, rng: np.random.Generator) -> np.ndarray:
    """One generator lift with parameters drawn within ``bound``."""
    kind = rng.integers(4)
    if kind == 0:
        lb = np.log(bound)
        return gen_dilation(float(np.exp(rng.uniform(-lb, lb))), n)
    if kind == 1:
        return gen_rotation(random_orthogonal(n - 1, rng))
    if kind == 2:
        return gen_inversion(_random_ball(n - 1, bound, rng))
    return gen_translation(_random_ball(n - 1, bound, rng))


def random_conformal(seed: int, steps: int, bound: float, n: int) -> np.ndarray:
    """Deterministic product of ``steps`` random generator lifts.

    Dilation factors are log-uniform in ``[1/bound, bound]``; translation and
    inversion centers are uniform in the ball of radius ``bound``; rotations
    are Haar-distributed on O(n-1).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if bound < 1:
        raise ValueError("bound must be >= 1")
    rng = np.random.default_rng(seed)
    M = np.eye(n + 1)
    for _ in range(steps):
        M = random_generator(n, bound, rng) @ M
    return M


# -- estimation from sampled sphere pairs ------------------------------------


@dataclass
class ConformalFit:
    status: Status
    lorentz: np.ndarray | None
    residual: float
    sigma_min: float
    sigma_second: float
    sigma_max: float
    validity: ValidityReport | None
    route: str

    def to_json(self) -> dict:
        out = {
            "status": self.status.value,
            "route": self.route,
            "residual": f"{self.residual:.17g}",
            "sigma_min": f"{self.sigma_min:.17g}",
            "sigma_second": f"{self.sigma_second:.17g}",
            "sigma_max": f"{self.sigma_max:.17g}",
        }
        if self.lorentz is not None:
            out["tau"] = self.lorentz.tolist()
        if self.validity is not None:
            out["lorentz_residuals"] = self.validity.to_json()
        return out


def _dlt_system(x: np.ndarray, zt: np.ndarray) -> np.ndarray:
    # rows: (M x_i)_j - zt_ij (M x_i)_0 = 0 for j = 1..n, unknowns M row-major
    N, d = x.shape
    n = d - 1
    L = np.zeros((N, n, d, d))
    for j in range(1, d):
        L[:, j - 1, j, :] = x
        L[:, j - 1, 0, :] = -zt[:, j - 1, None] * x
    return L.reshape(N * n, d * d)


def _gram_scales(x: np.ndarray, y: np.ndarray) -> np.ndarray | None:
    """Per-pair scales mu with <mu_i y_i, mu_j y_j> = <x_i, x_j>, by log least squares."""
    N, d = x.shape
    s = minkowski(d - 1)
    gx = minkowski_inner(x[:, None, :], x[None, :, :], s)
    gy = minkowski_inner(y[:, None, :], y[None, :, :], s)
    iu, ju = np.triu_indices(N, 1)
    ratio = gx[iu, ju] / np.where(gy[iu, ju] == 0, np.nan, gy[iu, ju])
    if not np.all(np.isfinite(ratio)) or np.any(ratio <= 0):
        return None
    G = np.zeros((iu.size, N))
    G[np.arange(iu.size), iu] = 1.0
    G[np.arange(iu.size), ju] = 1.0
    logmu, *_ = np.linalg.lstsq(G, np.log(ratio), rcond=None)
    return np.exp(logmu)


def _fit_once(z: np.ndarray, zt: np.ndarray):
    """One linear fit. Returns ``(M, route, diagnostics)``; ``M`` is None on failure
    and ``route`` then names the failing status."""
    N, n = z.shape
    d = n + 1
    x = np.hstack([np.ones((N, 1)), z])
    y = np.hstack([np.ones((N, 1)), zt])

    L = _dlt_system(x, zt)
    sv = np.linalg.svd(L, compute_uv=False)
    s_pad = np.zeros(d * d)
    s_pad[: sv.size] = sv
    diag = dict(sigma_min=float(s_pad[-1]), sigma_second=float(s_pad[-2]), sigma_max=float(s_pad[0]))

    if s_pad[-2] >= GAP_THRESHOLD * s_pad[0]:
        _, _, Vt = np.linalg.svd(L, full_matrices=True)
        M = Vt[-1].reshape(d, d)
        a, _, v, _ = blocks(M)
        norm2 = a * a - v @ v
        if norm2 <= 0:
            return None, Status.INCONSISTENT, diag
        return M * (np.sign(a) / np.sqrt(norm2)), "nullspace", diag

    sx = np.linalg.svd(x, compute_uv=False)
    if N < 3 or sx.size < d or sx[-1] < GAP_THRESHOLD * sx[0]:
        return None, Status.UNDERDETERMINED, diag
    mu = _gram_scales(x, y)
    if mu is None:
        return None, Status.INCONSISTENT, diag
    Mt, *_ = np.linalg.lstsq(x, y * mu[:, None], rcond=None)
    return Mt.T, "gram", diag


def _residual(M: np.ndarray, z: np.ndarray, zt: np.ndarray) -> float:
    den = _denominator(M, z)
    if np.any(den <= 0):
        return np.inf
    img = (z @ M[1:, 1:].T + M[1:, 0]) / den[:, None]
    return float(np.max(np.linalg.norm(img - zt, axis=1)))


def conformal_to_lorentz(z, zt, tol: float = DEFAULT_TOL) -> ConformalFit:
    """Estimate the Lorentz matrix whose sphere action sends ``z[i]`` to ``zt[i]``.

    The per-pair scales are eliminated to give a homogeneous linear system in
    the matrix entries; its least-squares null direction is normalized to
    ``a^2 - |v|^2 = 1, a > 0``. When the linear system alone has a null space
    of dimension > 1 but the homogeneous source points ``(1, z_i)`` still span
    R^{n+1} (exactly n+1 pairs, for instance), the scales are fixed instead by
    requiring the Minkowski Gram matrix to be preserved.

    Sphere samples only pin the matrix down to roughly ``eps * max|M|^3``
    in absolute terms, because a strongly distorting map crowds its images
    into a region of size ``~1/max|M|^2``.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    zt = np.atleast_2d(np.asarray(zt, dtype=float))
    if z.shape != zt.shape:
        raise ValueError(f"pair shapes differ: {z.shape} vs {zt.shape}")

    M, route, diag = _fit_once(z, zt)
    if M is None:
        return ConformalFit(route, None, np.inf, validity=None, route="linear", **diag)
    residual = _residual(M, z, zt)
    validity = lorentz_check(M, tol)
    ok = validity.passed and residual <= tol
    return ConformalFit(
        Status.UNIQUE if ok else Status.INCONSISTENT, M, residual, validity=validity, route=route, **diag
    )
