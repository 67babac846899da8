"""Orthochronous Lorentz group O+(1,n) in block form, and its embeddings
into the isometry groups of de Sitter and anti-de Sitter space.

A Lorentz map is stored as a dense ``(n+1, n+1)`` numpy array

    [[a, u^T],
     [v, A  ]]

with the time coordinate first.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DEFAULT_TOL = 1e-9


class LorentzError(ValueError):
    """Raised when a matrix is not a valid orthochronous Lorentz map."""


class Signature(NamedTuple):
    """Bilinear form diag(-1,...,-1, +1,...,+1) with ``p`` minus signs first.

    ``p=0`` is allowed and gives the Euclidean form (used for sphere targets).
    """

    p: int
    q: int

    @property
    def dim(self) -> int:
        return self.p + self.q

    @property
    def eta(self) -> np.ndarray:
        return np.diag(np.r_[-np.ones(self.p), np.ones(self.q)])

    @property
    def signs(self) -> np.ndarray:
        return np.r_[-np.ones(self.p), np.ones(self.q)]


def minkowski(n: int) -> Signature:
    """Signature of R^{1,n}."""
    return Signature(1, n)


def minkowski_inner(x, y, s: Signature) -> np.ndarray | float:
    """Evaluate the form of signature ``s`` on ``x`` and ``y`` (last axis)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != s.dim or y.shape[-1] != s.dim:
        raise ValueError(
            f"vectors of length {x.shape[-1]}, {y.shape[-1]} do not match signature {tuple(s)}"
        )
    out = -np.sum(x[..., : s.p] * y[..., : s.p], axis=-1) + np.sum(
        x[..., s.p :] * y[..., s.p :], axis=-1
    )
    return float(out) if np.ndim(out) == 0 else out


def blocks(M: np.ndarray) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Split a Lorentz matrix into ``(a, u, v, A)``."""
    M = np.asarray(M, dtype=float)
    return float(M[0, 0]), M[0, 1:], M[1:, 0], M[1:, 1:]


def from_blocks(a: float, u, v, A) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    M = np.empty((n + 1, n + 1))
    M[0, 0] = a
    M[0, 1:] = u
    M[1:, 0] = v
    M[1:, 1:] = A
    return M


@dataclass(frozen=True)
class ValidityReport:
    residual_scalar: float
    residual_mixed: float
    residual_block: float
    residual_global: float
    orthochronous: bool
    det_sign: int
    tol: float
    scale: float = 1.0

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol * self.scale and self.orthochronous

    @property
    def max_residual(self) -> float:
        return max(self.residual_scalar, self.residual_mixed, self.residual_block)

    def to_json(self) -> dict:
        return {
            "residual_scalar": f"{self.residual_scalar:.17g}",
            "residual_mixed": f"{self.residual_mixed:.17g}",
            "residual_block": f"{self.residual_block:.17g}",
            "residual_global": f"{self.residual_global:.17g}",
            "orthochronous": self.orthochronous,
            "det_sign": self.det_sign,
            "scale": f"{self.scale:.17g}",
            "pass": self.passed,
        }


def lorentz_check(M, tol: float = DEFAULT_TOL) -> ValidityReport:
    """Block-wise test of the O+(1,n) conditions.

    Residuals are absolute. They are quadratic in the entries, so rounding
    alone produces residuals of order ``eps * max|M|^2``; the pass threshold
    is therefore ``tol * max(1, max|M|)^2``.

    ``residual_global`` is ``max|M^T eta M - eta|``, reported alongside the
    block residuals as a cross-check. The determinant sign is recorded but
    never fails the check.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 2:
        raise ValueError(f"expected a square matrix of size >= 2, got shape {M.shape}")
    n = M.shape[0] - 1
    a, u, v, A = blocks(M)
    r_scalar = abs(a * a - v @ v - 1.0)
    r_mixed = float(np.max(np.abs(A.T @ v - a * u)))
    r_block = float(np.max(np.abs(A.T @ A - np.outer(u, u) - np.eye(n))))
    eta = minkowski(n).eta
    r_global = float(np.max(np.abs(M.T @ eta @ M - eta)))
    det = np.linalg.det(M)
    return ValidityReport(
        residual_scalar=float(r_scalar),
        residual_mixed=r_mixed,
        residual_block=r_block,
        residual_global=r_global,
        orthochronous=bool(a > 0),
        det_sign=int(np.sign(det)) if det != 0 else 0,
        tol=tol,
        scale=max(1.0, float(np.max(np.abs(M)))) ** 2,
    )


def _require_valid(M: np.ndarray, tol: float) -> None:
    rep = lorentz_check(M, tol)
    if not rep.passed:
        raise LorentzError(
            f"not an orthochronous Lorentz matrix (max residual {rep.max_residual:.3g}, "
            f"orthochronous={rep.orthochronous})"
        )


def lorentz_compose(M1, M2, tol: float | None = None) -> np.ndarray:
    """Group product ``M1 @ M2``. Validates the factors when ``tol`` is given."""
    M1 = np.asarray(M1, dtype=float)
    M2 = np.asarray(M2, dtype=float)
    if M1.shape != M2.shape:
        raise ValueError(f"dimension mismatch: {M1.shape} vs {M2.shape}")
    if tol is not None:
        _require_valid(M1, tol)
        _require_valid(M2, tol)
    return M1 @ M2


def lorentz_inverse(M, tol: float | None = None) -> np.ndarray:
    """Exact group inverse ``eta M^T eta``."""
    M = np.asarray(M, dtype=float)
    if tol is not None:
        _require_valid(M, tol)
    Minv = M.T.copy()
    # eta M^T eta only flips the sign of the mixed blocks
    Minv[0, 1:] *= -1.0
    Minv[1:, 0] *= -1.0
    return Minv


def block_embed(M, k: int, tol: float | None = None) -> np.ndarray:
    """Place ``M`` in O(1,n+1) (``k=+1``, trailing 1) or O(2,n) (``k=-1``, leading 1)."""
    M = np.asarray(M, dtype=float)
    if k not in (1, -1):
        raise ValueError(f"k must be +1 or -1, got {k}")
    if tol is not None:
        _require_valid(M, tol)
    d = M.shape[0]
    E = np.zeros((d + 1, d + 1))
    if k == 1:
        E[:d, :d] = M
        E[d, d] = 1.0
    else:
        E[0, 0] = 1.0
        E[1:, 1:] = M
    return E


def block_extract(E, k: int) -> np.ndarray:
    """Inverse of :func:`block_embed` (no validation of the off-diagonal zeros)."""
    E = np.asarray(E, dtype=float)
    if k == 1:
        return E[:-1, :-1].copy()
    if k == -1:
        return E[1:, 1:].copy()
    raise ValueError(f"k must be +1 or -1, got {k}")


def ambient_signature(n: int, k: int) -> Signature:
    """Signature of the flat space housing the cone with tag ``k``."""
    if k == 0:
        return Signature(1, n)
    if k == 1:
        return Signature(1, n + 1)
    if k == -1:
        return Signature(2, n)
    raise ValueError(f"k must be one of 0, +1, -1, got {k}")
