"""Santalo points through the volume of the polar body.

For ``x`` interior to ``K`` the polar ``(K - x)°`` has gauge ``h_{K-x}``, so

    vol((K - x)°) = vol(B_2^n) E[h_{K-x}(theta)^(-n)]
    g((K - x)°)   = n/(n+1) E[theta h^(-(n+1))] / E[h^(-n)]

with ``theta`` uniform on the sphere and ``h_{K-x}(u) = h_K(u) - <u, x>``.
The Santalo point minimizes the first quantity and is the unique ``x`` at
which the second vanishes.

Bodies symmetric about a coordinate axis, with ``x`` on that axis, are
integrated by Gauss-Legendre quadrature in the polar angle, which is
deterministic and smooth in ``x``. Everything else uses antithetic Monte
Carlo directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from . import specfun
from .bodies import Body, make_half_ball
from .errors import DiagnosticsError, DomainError, UnsupportedError
from .volmc import RandomStream, VolumeEstimate, run_blocks

QUAD_NODES = 2000  # per half of [0, pi]
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
SEARCH_METHODS = ("axis-golden-section", "grid-2d")


@dataclass(frozen=True)
class SantaloReport:
    """Outcome of a Santalo point search.

    ``residual`` is the norm of the centroid of ``(K - point)°`` computed
    by :func:`verify_santalo_fixed_point`, not by the search itself.
    """

    point: tuple
    polar_log_volume: float
    iterations: int
    residual: float
    method: str
    tolerance: float
    interval: tuple = ()


# ---------------------------------------------------------------------------
# evaluation of the polar moments


@lru_cache(maxsize=4)
def _angle_nodes(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [0, pi/2] and [pi/2, pi] (the split catches kinks at the equator)."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = np.pi / 4
    phi = np.concatenate([half * (x + 1), half * (x + 1) + np.pi / 2])
    return phi, np.concatenate([w, w]) * half


def _axis_line_point(body: Body, axis: int, x: np.ndarray) -> bool:
    off = np.delete(x - body.anchor_array, axis)
    return not np.any(off)


def _support_shifted(body: Body, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    h = body.support_fn(u) - u @ x
    if np.any(h <= 0):
        raise DomainError("the point is not interior to the body")
    return h


def _quadrature_moments(body: Body, x: np.ndarray, axis: int, nodes: int) -> tuple[float, float]:
    """``(ln E[h^-n], E[cos(phi) h^-(n+1)] / E[h^-n])`` by quadrature in the polar angle."""
    n = body.dim
    phi, w = _angle_nodes(nodes)
    other = 1 if axis != 1 else 0
    u = np.zeros((phi.size, n))
    u[:, axis] = np.cos(phi)
    u[:, other] = np.sin(phi)
    h = _support_shifted(body, x, u)
    log_norm = 0.5 * math.log(math.pi) + math.lgamma(0.5 * (n - 1)) - math.lgamma(0.5 * n)
    logs = -n * np.log(h) + (n - 2) * np.log(np.sin(phi)) + np.log(w)
    log_mean = float(logsumexp(logs)) - log_norm
    wt = np.exp(logs - logs.max())
    ratio = float(np.sum(wt * np.cos(phi) / h) / np.sum(wt))
    return log_mean, ratio


def _log_combine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Merge two partial sums stored as ``[shift, sums...]``."""
    m = max(a[0], b[0])
    out = np.empty_like(a)
    out[0] = m
    out[1:] = a[1:] * math.exp(a[0] - m) + b[1:] * math.exp(b[0] - m)
    return out


def _mc_moments(body: Body, x: np.ndarray, samples: int, stream: RandomStream) -> np.ndarray:
    """Shifted sums ``[m, S w, S w^2, S w y, S w^2 y, S w^2 y^2]`` with ``w = h^-n e^-m``, ``y = theta/h``.

    Each block draws ``size`` directions and also uses their negatives.
    """
    n = body.dim

    def kernel(size, st):
        g = st.generator().standard_normal((size, n))
        theta = g / np.linalg.norm(g, axis=1, keepdims=True)
        theta = np.concatenate([theta, -theta])
        h = _support_shifted(body, x, theta)
        logw = -n * np.log(h)
        m = float(logw.max())
        w = np.exp(logw - m)
        y = theta / h[:, None]
        w2 = w * w
        return np.concatenate([[m, w.sum(), w2.sum()], w @ y, w2 @ y, w2 @ (y * y)])

    return run_blocks(kernel, samples, stream, combine=_log_combine)


def _resolve_method(body: Body, x: np.ndarray, method: str) -> str:
    if method not in ("auto", "quadrature", "monte-carlo"):
        raise DomainError(f"unknown method {method!r}")
    if body.dim == 1:
        return "closed-form"
    axial = body.axis is not None and _axis_line_point(body, body.axis, x)
    if method == "quadrature" and not axial:
        raise UnsupportedError("quadrature needs an axially symmetric body and a point on its axis")
    if method == "auto":
        return "quadrature" if axial else "monte-carlo"
    return method


def _prepare(body: Body, x) -> np.ndarray:
    if not body.has_support:
        raise DomainError(f"{body.name} has no support function")
    x = np.zeros(body.dim) if x is None else np.asarray(x, dtype=float)
    if x.shape != (body.dim,):
        raise DomainError("point has the wrong dimension")
    return x


def polar_log_volume(body: Body, x=None, angular_samples: int = 100_000,
                     stream: Optional[RandomStream] = None, method: str = "auto",
                     nodes: int = QUAD_NODES) -> VolumeEstimate:
    """``ln vol((K - x)°)``.

    Parameters
    ----------
    body : Body
        Needs a support function.
    x : array_like, optional
        Interior point, the origin by default.
    angular_samples : int
        Directions for Monte Carlo; each is used with its negative.
    method : {"auto", "quadrature", "monte-carlo"}
    """
    x = _prepare(body, x)
    method = _resolve_method(body, x, method)
    n = body.dim
    if method == "closed-form":
        e = np.array([[1.0], [-1.0]])
        h = _support_shifted(body, x, e)
        return VolumeEstimate.exact(math.log(float(np.sum(1.0 / h))))
    log_vb = specfun.lp_ball_log_volume(2, n)
    if method == "quadrature":
        log_mean, _ = _quadrature_moments(body, x, body.axis, nodes)
        return VolumeEstimate(log_vb + log_mean, 0.0, 2 * nodes, "quadrature")
    stream = RandomStream(0) if stream is None else stream
    sums = _mc_moments(body, x, angular_samples, stream)
    total = 2 * angular_samples
    mean = sums[1] / total
    var = max(sums[2] / total - mean * mean, 0.0)
    rel = float(math.sqrt(var / total) / mean)
    log_value = float(log_vb + sums[0] + math.log(mean))
    return VolumeEstimate(log_value, rel, total, "monte-carlo", math.exp(log_value) * rel)


def polar_centroid(body: Body, x=None, samples: int = 100_000, stream: Optional[RandomStream] = None,
                   method: str = "auto", nodes: int = QUAD_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Centroid of ``(K - x)°`` and its componentwise standard error."""
    x = _prepare(body, x)
    method = _resolve_method(body, x, method)
    n = body.dim
    if method == "closed-form":
        e = np.array([[1.0], [-1.0]])
        h = _support_shifted(body, x, e)
        # the polar is the interval [-1/h(-1), 1/h(1)]
        return np.array([0.5 * (1.0 / h[0] - 1.0 / h[1])]), np.zeros(1)
    if method == "quadrature":
        _, ratio = _quadrature_moments(body, x, body.axis, nodes)
        c = np.zeros(n)
        c[body.axis] = n / (n + 1) * ratio
        return c, np.zeros(n)
    stream = RandomStream(0) if stream is None else stream
    sums = _mc_moments(body, x, samples, stream)
    s0, s00 = sums[1], sums[2]
    sy, s0y, syy = sums[3:3 + n], sums[3 + n:3 + 2 * n], sums[3 + 2 * n:]
    ratio = sy / s0
    # delta method for a ratio of means
    var = np.maximum(syy - 2 * ratio * s0y + ratio * ratio * s00, 0.0) / (s0 * s0)
    k = n / (n + 1)
    return k * ratio, k * np.sqrt(var)


def verify_santalo_fixed_point(body: Body, candidate, samples: int = 100_000,
                               stream: Optional[RandomStream] = None, method: str = "auto") -> float:
    """Norm of the centroid of ``(K - candidate)°``; zero exactly at the Santalo point."""
    c, _ = polar_centroid(body, candidate, samples, stream, method)
    return float(np.linalg.norm(c))


# ---------------------------------------------------------------------------
# searches


def _search_axis(body: Body, axis: Optional[int]) -> int:
    if axis is not None:
        if not 0 <= axis < body.dim:
            raise DomainError("axis out of range")
        if body.axis == axis or body.origin_symmetric:
            return axis
        raise UnsupportedError(f"{body.name} is not symmetric about axis {axis}")
    if body.axis is not None:
        return body.axis
    if body.origin_symmetric:
        return 0
    raise UnsupportedError(f"{body.name} has no axis of symmetry; only axis searches are supported")


def santalo_axis_search(body: Body, tolerance: float = 1e-4, angular_samples: int = 100_000,
                        stream: Optional[RandomStream] = None, axis: Optional[int] = None,
                        verify_samples: int = 100_000, margin: float = 1e-3) -> SantaloReport:
    """Golden-section minimization of the polar volume along a symmetry axis.

    The search line passes through the anchor parallel to ``axis`` and is
    clipped to the body, minus ``margin`` times its length at each end.
    Every evaluation uses the same random directions, so the Monte Carlo
    objective is a fixed convex function of the position.

    Raises
    ------
    UnsupportedError
        If the body is neither axially nor centrally symmetric.
    DiagnosticsError
        If the minimizer runs into an end of the search interval.
    """
    if not tolerance > 0:
        raise DomainError("tolerance must be positive")
    if not body.has_support:
        raise DomainError(f"{body.name} has no support function")
    stream = RandomStream(0) if stream is None else stream
    ax = _search_axis(body, axis)
    base = body.anchor_array
    e = np.zeros(body.dim)
    e[ax] = 1.0
    up = 1.0 / float(body.gauge(base + e))
    down = 1.0 / float(body.gauge(base - e))
    pad = margin * (up + down)
    lo, hi = base[ax] - down + pad, base[ax] + up - pad
    if hi - lo <= tolerance:
        raise DiagnosticsError("search interval is shorter than the tolerance")

    def point(t):
        p = base.copy()
        p[ax] = t
        return p

    def f(t):
        return polar_log_volume(body, point(t), angular_samples, stream).log_value

    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    iterations = 0
    while b - a > tolerance:
        iterations += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    t = 0.5 * (a + b)
    if t - lo < tolerance or hi - t < tolerance:
        raise DiagnosticsError(f"golden-section search collapsed onto the end of [{lo:.6g}, {hi:.6g}]")
    best = point(t)
    est = polar_log_volume(body, best, angular_samples, stream)
    residual = verify_santalo_fixed_point(body, best, verify_samples, stream.spawn(1))
    return SantaloReport(tuple(float(v) for v in best), est.log_value, iterations, residual,
                         "axis-golden-section", tolerance, (float(lo), float(hi)))


def planar_polar_area(body: Body, points, directions: int = 4096) -> np.ndarray:
    """``vol((K - x)°)`` for planar ``K`` at each row of ``points``.

    Midpoint rule for ``(1/2) ∫ h_{K-x}(theta)^-2 dtheta``; ``inf`` where
    ``x`` is not interior.
    """
    if body.dim != 2:
        raise UnsupportedError("planar_polar_area needs a planar body")
    phi = (np.arange(directions) + 0.5) * (2 * np.pi / directions)
    u = np.column_stack([np.cos(phi), np.sin(phi)])
    hk = body.support(u)
    h = hk[None, :] - np.asarray(points, dtype=float) @ u.T
    with np.errstate(divide="ignore"):
        area = np.pi * np.mean(h ** -2.0, axis=1)
    return np.where(np.all(h > 0, axis=1), area, np.inf)


def santalo_grid_2d(body: Body, step: float = 1e-3, width: int = 41, directions: int = 4096,
                    verify_samples: int = 100_000, stream: Optional[RandomStream] = None) -> SantaloReport:
    """Brute-force Santalo point of a planar body on refining square grids.

    Starts on ``width x width`` points covering the body and zooms onto the
    best point until the spacing is at most ``step``.
    """
    if body.dim != 2:
        raise UnsupportedError("the grid search is planar only")
    stream = RandomStream(0) if stream is None else stream
    center = body.anchor_array
    half = body.out_radius
    iterations = 0
    while True:
        iterations += 1
        ax = np.linspace(-half, half, width)
        gx, gy = np.meshgrid(center[0] + ax, center[1] + ax, indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        area = planar_polar_area(body, pts, directions)
        k = int(np.argmin(area))
        center = pts[k]
        spacing = ax[1] - ax[0]
        if spacing <= step:
            break
        half = 2 * spacing
    residual = verify_santalo_fixed_point(body, center, verify_samples, stream)
    return SantaloReport(tuple(float(v) for v in center), math.log(float(area[k])), iterations, residual,
                         "grid-2d", step)


# ---------------------------------------------------------------------------
# the half-ball


def half_ball_centroid(n: int) -> float:
    """First coordinate of the centroid of ``{x in B_2^n : x_1 >= 0}``.

    ``2 vol_{n-1}(B_2^{n-1}) / ((n + 1) vol_n(B_2^n))``.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"half-ball centroid needs an integer n >= 2, got {n!r}")
    n = int(n)
    log_ratio = specfun.lp_ball_log_volume(2, n - 1) - specfun.lp_ball_log_volume(2, n)
    return 2.0 * math.exp(log_ratio) / (n + 1)


def half_ball_polar_upper_bound(lam: float, n: int) -> float:
    """Log of ``vol_n(B_2^n) (1-lam^2)^(-(n+1)/2) + vol_{n-1}(B_2^{n-1}) / (n lam (1+lam^2)^(n-1))``.

    An upper bound for the polar of the half-ball about ``lam e_1``.
    """
    if not 0 < lam < 1:
        raise DomainError(f"need 0 < lambda < 1, got {lam!r}")
    if int(n) != n or n < 2:
        raise DomainError(f"need an integer n >= 2, got {n!r}")
    n = int(n)
    ellipsoid = specfun.lp_ball_log_volume(2, n) - 0.5 * (n + 1) * math.log1p(-lam * lam)
    cone = specfun.lp_ball_log_volume(2, n - 1) - math.log(n * lam) - (n - 1) * math.log1p(lam * lam)
    return specfun.log_add(ellipsoid, cone)


@dataclass(frozen=True)
class HalfBallRow:
    n: int
    centroid: float
    santalo: float
    residual: float

    @property
    def scaled_gap(self) -> float:
        """``sqrt(n) |g(B)_1 - s(B)_1|``; the axis chord of the half-ball is 1."""
        return math.sqrt(self.n) * abs(self.centroid - self.santalo)

    @property
    def scaled_santalo(self) -> float:
        return math.sqrt(self.n) * self.santalo


def half_ball_table(dims, tolerance: float = 1e-4) -> list[HalfBallRow]:
    """Centroid and Santalo point of the half-ball for each dimension."""
    rows = []
    for n in dims:
        rep = santalo_axis_search(make_half_ball(int(n)), tolerance)
        rows.append(HalfBallRow(int(n), half_ball_centroid(int(n)), rep.point[0], rep.residual))
    return rows


def fit_gamma(rows: list[HalfBallRow]) -> float:
    """Smallest ``gamma`` with ``s(B)_1 <= gamma / sqrt(n)`` at the first row."""
    return rows[0].scaled_santalo
