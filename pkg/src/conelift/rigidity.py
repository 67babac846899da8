"""Recovery of the Lorentz transformation relating two cone immersions.

Generic cone points span R^{1,n}, so the transformation is pinned down by a
square linear solve on ``n+1`` well-chosen samples. Every other sample then
serves as a check: exact agreement plus the Lorentz conditions gives a
``unique`` verdict, anything else is ``inconsistent``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .conformal import Status
from .cone import (
    CONE_TOL,
    ImmersionReport,
    cone_contains,
    minkowski_pullback,
    to_minkowski,
    verify_isometric_immersion,
)
from .grid import GridChart, relative_deviation
from .lorentz import DEFAULT_TOL, ValidityReport, block_embed, lorentz_check

RANK_RTOL = 1e-10
NEAR_MISS_FACTOR = 10.0


@dataclass
class CorrespondenceSet:
    """Paired cone samples ``(phi1(p), phi2(p))`` in the coordinates of tag ``k``."""

    k: int
    source: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        self.source = np.atleast_2d(np.asarray(self.source, dtype=float))
        self.target = np.atleast_2d(np.asarray(self.target, dtype=float))
        if self.k not in (0, 1, -1):
            raise ValueError(f"k must be 0, +1 or -1, got {self.k}")
        if self.source.shape != self.target.shape:
            raise ValueError(f"source/target shapes differ: {self.source.shape} vs {self.target.shape}")
        if self.source.shape[0] < 1:
            raise ValueError("need at least one pair")

    @property
    def n(self) -> int:
        return self.source.shape[1] - (1 if self.k == 0 else 2)

    def validate(self, tol: float = CONE_TOL) -> None:
        for name, pts in (("source", self.source), ("target", self.target)):
            mem = cone_contains(pts, self.k, tol)
            if not mem.all_passed:
                raise ValueError(f"{name} point {mem.failures()[0]} is not on the k={self.k} cone")


@dataclass
class RecoveryReport:
    status: Status
    k: int
    n: int
    tau: np.ndarray | None
    tau_embedded: np.ndarray | None
    max_point_residual: float
    lorentz: ValidityReport | None
    span_rank: int
    condition_estimate: float
    near_miss: bool = False
    stage: str | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "status": self.status.value,
            "k": self.k,
            "n": self.n,
            "tau": None if self.tau is None else self.tau.tolist(),
            "max_point_residual": f"{self.max_point_residual:.17g}",
            "span_rank": self.span_rank,
            "condition_estimate": f"{self.condition_estimate:.17g}",
            "near_miss": self.near_miss,
        }
        if self.tau_embedded is not None:
            out["tau_embedded"] = self.tau_embedded.tolist()
        if self.lorentz is not None:
            out["lorentz_residuals"] = self.lorentz.to_json()
        if self.stage is not None:
            out["stage"] = self.stage
        if self.details:
            out["details"] = {key: f"{val:.17g}" if isinstance(val, float) else val for key, val in self.details.items()}
        return out


def _polish(M: np.ndarray) -> np.ndarray:
    # one Newton step towards M^T eta M = eta
    eta = np.diag(np.r_[-1.0, np.ones(M.shape[0] - 1)])
    return 0.5 * M @ (3.0 * np.eye(M.shape[0]) - eta @ M.T @ eta @ M)


def recover_tau(c: CorrespondenceSet, tol: float = DEFAULT_TOL, polish: bool = False) -> RecoveryReport:
    """Find the orthochronous Lorentz ``tau`` with ``target = tau^{(k)} source``.

    Sample columns are chosen by QR with column pivoting (greedy volume
    maximization), ``tau`` is solved from that square system, and the result
    is validated against every pair and against the Lorentz conditions.
    Residuals between ``tol`` and ``10 * tol`` are still ``inconsistent`` but
    carry ``near_miss=True``.
    """
    c.validate()
    X = to_minkowski(c.source, c.k)
    Y = to_minkowski(c.target, c.k)
    d = X.shape[1]
    n = d - 1

    sv = np.linalg.svd(X, compute_uv=False)
    span_rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv[0] > 0 else 0
    if span_rank < d:
        return RecoveryReport(Status.UNDERDETERMINED, c.k, n, None, None, np.inf, None, span_rank, np.inf)

    _, _, piv = scipy.linalg.qr(X.T, pivoting=True, mode="economic")
    sel = piv[:d]
    Xs, Ys = X[sel], Y[sel]
    tau = np.linalg.solve(Xs, Ys).T
    if polish:
        tau = _polish(tau)
    cond = float(np.linalg.cond(Xs))

    resid = np.linalg.norm(X @ tau.T - Y, axis=1) / np.linalg.norm(X, axis=1)
    max_res = float(np.max(resid))
    validity = lorentz_check(tau, tol)
    unique = validity.passed and max_res <= tol
    near = (not unique) and max_res <= NEAR_MISS_FACTOR * tol and lorentz_check(tau, NEAR_MISS_FACTOR * tol).passed
    return RecoveryReport(
        status=Status.UNIQUE if unique else Status.INCONSISTENT,
        k=c.k,
        n=n,
        tau=tau,
        tau_embedded=block_embed(tau, c.k) if c.k != 0 else None,
        max_point_residual=max_res,
        lorentz=validity,
        span_rank=span_rank,
        condition_estimate=cond,
        near_miss=bool(near),
    )


def correspondences_from_charts(chart1: GridChart, chart2: GridChart) -> CorrespondenceSet:
    if chart1.target != "cone" or chart2.target != "cone":
        raise ValueError("both charts must be cone-valued")
    if chart1.k != chart2.k:
        raise ValueError(f"mixed cone tags: {chart1.k} vs {chart2.k}")
    if chart1.values.shape != chart2.values.shape:
        raise ValueError(f"grid mismatch: {chart1.values.shape} vs {chart2.values.shape}")
    w = chart1.width
    return CorrespondenceSet(chart1.k, chart1.values.reshape(-1, w), chart2.values.reshape(-1, w))


@dataclass
class RigidityReport:
    immersion1: ImmersionReport
    immersion2: ImmersionReport
    recovery: RecoveryReport | None

    def to_json(self) -> dict:
        return {
            "immersion1": self.immersion1.to_json(),
            "immersion2": self.immersion2.to_json(),
            "recovery": None if self.recovery is None else self.recovery.to_json(),
        }


def verify_rigidity(
    chart1: GridChart, chart2: GridChart, g=None, tol: float = DEFAULT_TOL, fd_tol: float = 1e-3
) -> RigidityReport:
    """Check both charts are isometric immersions for ``g``, then recover ``tau``.

    Recovery is skipped (``recovery=None``) when either immersion check fails.
    """
    if chart1.values.shape != chart2.values.shape or chart1.spacing != chart2.spacing:
        raise ValueError("charts must share the same grid")
    g = chart1.metric if g is None else g
    rep1 = verify_isometric_immersion(chart1, g, fd_tol)
    rep2 = verify_isometric_immersion(chart2, g, fd_tol)
    if not (rep1.passed and rep2.passed):
        return RigidityReport(rep1, rep2, None)
    return RigidityReport(rep1, rep2, recover_tau(correspondences_from_charts(chart1, chart2), tol))


# -- cone self-isometries ----------------------------------------------------


@dataclass
class SelfMapSamples:
    """Samples of a map of the cone, on ``t_levels x sphere-grid``.

    The source point at level ``a`` and sphere node ``b`` is ``(t_a, t_a z_b)``;
    its image is ``(image_t[a, b], image_t[a, b] * image_z[a, b])``.
    """

    t_levels: np.ndarray
    sphere: GridChart
    image_t: np.ndarray
    image_z: np.ndarray
    k: int = 0

    def __post_init__(self):
        self.t_levels = np.asarray(self.t_levels, dtype=float)
        self.image_t = np.asarray(self.image_t, dtype=float)
        self.image_z = np.asarray(self.image_z, dtype=float)
        T = self.t_levels.size
        if self.sphere.target != "sphere":
            raise ValueError("sphere grid must be sphere-valued")
        if self.image_t.shape != (T, *self.sphere.shape):
            raise ValueError(f"image_t shape {self.image_t.shape} != {(T, *self.sphere.shape)}")
        if self.image_z.shape != (T, *self.sphere.shape, self.sphere.n):
            raise ValueError(f"image_z shape {self.image_z.shape} does not match the sphere grid")

    @property
    def n(self) -> int:
        return self.sphere.n

    def source_points(self) -> np.ndarray:
        return _level_points(self.t_levels, self.sphere.values)

    def image_points(self) -> np.ndarray:
        f = self.image_t[..., None]
        return np.concatenate([f, f * self.image_z], axis=-1)


def _level_points(t_levels: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``(t_a, t_a z_b)`` for every level ``a`` and node ``b``."""
    t = np.asarray(t_levels, dtype=float).reshape((-1,) + (1,) * z.ndim)
    tz = t * z[None]
    return np.concatenate([np.broadcast_to(t, tz.shape[:-1] + (1,)), tz], axis=-1)


def sample_selfmap(tau: np.ndarray, t_levels, sphere: GridChart, k: int = 0) -> SelfMapSamples:
    """Restriction of ``tau`` to the cone, sampled on ``t_levels x sphere``."""
    src = _level_points(t_levels, sphere.values)
    img = src @ np.asarray(tau, dtype=float).T
    return SelfMapSamples(t_levels, sphere, img[..., 0], img[..., 1:] / img[..., :1], k)


def _rejected(stage: str, n: int, k: int, **details) -> RecoveryReport:
    return RecoveryReport(Status.INCONSISTENT, k, n, None, None, np.inf, None, 0, np.inf, stage=stage, details=details)


def extend_cone_isometry(samples: SelfMapSamples, tol: float = DEFAULT_TOL, fd_tol: float = 1e-3) -> RecoveryReport:
    """Extend a sampled cone isometry to a Lorentz transformation.

    Four stages: (i) the sphere part of the map must not depend on ``t``;
    (ii) at every level the pulled-back cone metric ``f^2 phibar^* g_S`` must
    equal ``t^2 g_S``; (iii) ``tau`` is recovered from the cone samples;
    (iv) the time row of ``tau`` must reproduce the sampled ``f``.
    Failing (i) or (ii) returns ``inconsistent`` with ``stage`` set and no
    recovery attempted.
    """
    if samples.t_levels.size < 2 or np.unique(samples.t_levels).size < 2:
        raise ValueError("need at least two distinct t-levels")
    n, k = samples.n, samples.k

    t_var = float(np.max(np.linalg.norm(samples.image_z - samples.image_z[:1], axis=-1)))
    if t_var > tol:
        return _rejected("t-independence", n, k, t_variation=t_var)

    # (ii) f^2 phibar^* g_S is the Minkowski pullback of the image cone chart
    # (the cross terms vanish because <z', dz'> = 0); compare with the source
    # chart's pullback t^2 g_S computed by the same stencil
    src = samples.source_points()
    img = samples.image_points()
    scale_dev = 0.0
    for a in range(samples.t_levels.size):
        src_chart = samples.sphere.with_values(src[a], target="cone", k=0)
        img_chart = samples.sphere.with_values(img[a], target="cone", k=0)
        P_src = minkowski_pullback(src_chart)
        P_img = minkowski_pullback(img_chart)
        scale_dev = max(scale_dev, float(np.max(relative_deviation(P_img, P_src))))
    if scale_dev > fd_tol:
        return _rejected("conformal-scaling", n, k, t_variation=t_var, scaling_deviation=scale_dev)

    w = n + 1
    rep = recover_tau(CorrespondenceSet(0, src.reshape(-1, w), img.reshape(-1, w)), tol)
    rep.details.update(t_variation=t_var, scaling_deviation=scale_dev)
    rep.k = k
    if rep.tau is not None:
        f_dev = float(np.max(np.abs(src.reshape(-1, w) @ rep.tau[0] - samples.image_t.reshape(-1)) / src.reshape(-1, w)[:, 0]))
        rep.details["f_deviation"] = f_dev
        if k != 0:
            rep.tau_embedded = block_embed(rep.tau, k)
        if rep.status == Status.UNIQUE and f_dev > tol:
            rep.status = Status.INCONSISTENT
            rep.stage = "time-row"
    return rep


# -- locality ----------------------------------------------------------------


def default_windows(shape: tuple[int, ...], per_axis: int = 2) -> list[tuple[slice, ...]]:
    """Overlapping blocks: each axis cut into ``per_axis`` pieces padded by
    ``max(1, len // 8)`` nodes on each side; all combinations returned."""
    axis_slices = []
    for L in shape:
        pad = max(1, L // 8)
        edges = np.linspace(0, L, per_axis + 1).round().astype(int)
        axis_slices.append([slice(max(0, lo - pad), min(L, hi + pad)) for lo, hi in zip(edges[:-1], edges[1:])])
    return [tuple(combo) for combo in itertools.product(*axis_slices)]


@dataclass
class LocalityReport:
    windows: list[tuple[slice, ...]]
    reports: list[RecoveryReport]
    max_disagreement: float
    agree_tol: float

    @property
    def all_unique(self) -> bool:
        return all(r.status == Status.UNIQUE for r in self.reports)

    @property
    def underdetermined(self) -> list[int]:
        return [i for i, r in enumerate(self.reports) if r.status == Status.UNDERDETERMINED]

    @property
    def constant(self) -> bool:
        return self.all_unique and self.max_disagreement <= self.agree_tol

    def to_json(self) -> dict:
        return {
            "windows": [[[int(s.start), int(s.stop)] for s in w] for w in self.windows],
            "statuses": [r.status.value for r in self.reports],
            "max_disagreement": f"{self.max_disagreement:.17g}",
            "constant": self.constant,
        }


def locality_check(
    chart1: GridChart,
    chart2: GridChart,
    windows: list[tuple[slice, ...]] | None = None,
    tol: float = DEFAULT_TOL,
    agree_tol: float = 1e-8,
) -> LocalityReport:
    """Recover ``tau`` on each window separately and measure how far the
    per-window answers are from each other (max-entry distance)."""
    if chart1.values.shape != chart2.values.shape:
        raise ValueError("charts must share the same grid")
    windows = default_windows(chart1.shape) if windows is None else windows
    reports = [
        recover_tau(correspondences_from_charts(chart1.window(w), chart2.window(w)), tol) for w in windows
    ]
    taus = [r.tau for r in reports if r.status == Status.UNIQUE]
    disagreement = 0.0
    for t1, t2 in itertools.combinations(taus, 2):
        disagreement = max(disagreement, float(np.max(np.abs(t1 - t2))))
    if len(taus) < len(reports):
        disagreement = np.inf
    return LocalityReport(windows, reports, disagreement, agree_tol)
