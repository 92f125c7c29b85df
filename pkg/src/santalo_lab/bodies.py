"""Star bodies described by evaluators.

A :class:`Body` carries a gauge (Minkowski functional) about a stated
interior anchor, an optional support function, and two radii measured from
the anchor. All evaluators are vectorized over the last axis: ``gauge``
maps an array of shape ``(..., dim)`` to shape ``(...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import specfun
from .errors import DomainError
from .specfun import INF

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Body:
    """A compact star body in ``R^dim``.

    Attributes
    ----------
    dim : int
    gauge_fn : callable
        Evaluates ``||x - anchor||_{K - anchor}`` for absolute points ``x``.
    support_fn : callable or None
        Evaluates ``h_K(u)`` for arbitrary (not necessarily unit) ``u``.
    out_radius, in_radius : float
        ``in_radius * B_2 + anchor  <=  K  <=  out_radius * B_2 + anchor``.
    anchor : tuple of float
        Center of the gauge. The origin for every symmetric body.
    origin_symmetric : bool
    axis : int or None
        Coordinate axis (0-based) about which K is rotationally symmetric.
    """

    dim: int
    gauge_fn: Evaluator
    support_fn: Optional[Evaluator]
    out_radius: float
    in_radius: float
    anchor: tuple = field(default=())
    origin_symmetric: bool = False
    axis: Optional[int] = None
    name: str = "body"

    def __post_init__(self):
        if not self.anchor:
            object.__setattr__(self, "anchor", (0.0,) * self.dim)
        if len(self.anchor) != self.dim:
            raise DomainError("anchor dimension does not match body dimension")

    @property
    def anchor_array(self) -> np.ndarray:
        return np.asarray(self.anchor, dtype=float)

    @property
    def has_support(self) -> bool:
        return self.support_fn is not None

    def gauge(self, x) -> np.ndarray:
        x = self._check(x)
        return self.gauge_fn(x)

    def support(self, u) -> np.ndarray:
        if self.support_fn is None:
            raise DomainError(f"{self.name} has no support function")
        return self.support_fn(self._check(u))

    def contains(self, x) -> np.ndarray:
        return self.gauge(x) <= 1.0

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DomainError(f"expected points of dimension {self.dim}, got {x.shape[-1]}")
        return x


def _lp_norm(x: np.ndarray, p) -> np.ndarray:
    if p == INF:
        return np.max(np.abs(x), axis=-1)
    if p == 1:
        return np.sum(np.abs(x), axis=-1)
    if p == 2:
        return np.linalg.norm(x, axis=-1)
    return np.sum(np.abs(x) ** p, axis=-1) ** (1.0 / p)


def make_lp_ball(p, n: int, scale: float = 1.0) -> Body:
    """``scale * B_p^n``; ``p`` may be ``math.inf`` or ``"inf"``."""
    p = specfun.parse_p(p)
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n!r}")
    if not scale > 0:
        raise DomainError(f"scale must be positive, got {scale!r}")
    n = int(n)
    q = specfun.dual_exponent(p)
    # Euclidean radii of B_p^n: the extreme points are vertices or diagonals.
    if p == INF:
        r_out, r_in = math.sqrt(n), 1.0
    elif p >= 2:
        r_out, r_in = n ** (0.5 - 1.0 / p), 1.0
    else:
        r_out, r_in = 1.0, n ** (0.5 - 1.0 / p)
    return Body(
        dim=n,
        gauge_fn=lambda x: _lp_norm(x, p) / scale,
        support_fn=lambda u: scale * _lp_norm(u, q),
        out_radius=scale * r_out,
        in_radius=scale * r_in,
        origin_symmetric=True,
        axis=0 if (p == 2 or n == 1) else None,
        name=f"{scale:g}*B_{'inf' if p == INF else f'{p:g}'}^{n}",
    )


def make_half_ball(n: int, anchor: float = 0.25) -> Body:
    """``{x : ||x||_2 <= 1, x_1 >= 0}`` with gauge taken about ``anchor * e_1``."""
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n!r}")
    if not 0 < anchor < 1:
        raise DomainError("the anchor must lie strictly inside the half-ball")
    n = int(n)
    c = np.zeros(n)
    c[0] = anchor

    def gauge(x):
        d = x - c
        dd = np.sum(d * d, axis=-1)
        cd = d[..., 0] * anchor
        # 1/rho for the sphere |c + rho d| = 1, written to stay finite at d = 0.
        disc = np.sqrt(cd * cd + dd * (1.0 - anchor * anchor))
        inv_sphere = (cd + disc) / (1.0 - anchor * anchor)
        inv_plane = -d[..., 0] / anchor
        return np.maximum(inv_sphere, inv_plane)

    def support(u):
        full = np.linalg.norm(u, axis=-1)
        side = np.linalg.norm(u[..., 1:], axis=-1)
        return np.where(u[..., 0] >= 0, full, side)

    return Body(
        dim=n,
        gauge_fn=gauge,
        support_fn=support,
        out_radius=math.sqrt(1.0 + anchor * anchor),
        in_radius=min(anchor, 1.0 - anchor),
        anchor=tuple(c),
        axis=0,
        name=f"half-ball^{n}",
    )


def make_ellipsoid(center, semi_axes) -> Body:
    """Axis-parallel ellipsoid ``{x : sum((x - c)_i / a_i)^2 <= 1}``, gauge about ``center``."""
    c = np.asarray(center, dtype=float)
    ax = np.asarray(semi_axes, dtype=float)
    if c.shape != ax.shape or c.ndim != 1:
        raise DomainError("center and semi_axes must be vectors of equal length")
    if np.any(ax <= 0):
        raise DomainError("semi-axes must be positive")
    rotational = c.size >= 2 and np.all(c[1:] == 0) and np.all(ax[1:] == ax[1])
    return Body(
        dim=c.size,
        gauge_fn=lambda x: np.linalg.norm((x - c) / ax, axis=-1),
        support_fn=lambda u: u @ c + np.linalg.norm(u * ax, axis=-1),
        out_radius=float(ax.max()),
        in_radius=float(ax.min()),
        anchor=tuple(c),
        origin_symmetric=bool(np.all(c == 0)),
        axis=0 if rotational or c.size == 1 else None,
        name="ellipsoid",
    )


def shifted_ball_polar_ellipsoid(lam: float, n: int) -> Body:
    """Polar, about the origin, of the unit ball centered at ``lam * e_1``.

    It is the ellipsoid with center ``-lam / (1 - lam^2) e_1``, semi-axis
    ``1 / (1 - lam^2)`` along ``e_1`` and ``1 / sqrt(1 - lam^2)`` across.
    The gauge is re-centered at the origin, which is interior.
    """
    if not 0 <= lam < 1:
        raise DomainError(f"need 0 <= lambda < 1, got {lam!r}")
    if lam == 0:
        return make_lp_ball(2, n)
    w = 1.0 - lam * lam
    center = np.zeros(n)
    center[0] = -lam / w
    axes = np.full(n, 1.0 / math.sqrt(w))
    axes[0] = 1.0 / w
    ell = make_ellipsoid(center, axes)

    def gauge(x):
        # Positive root rho of |(rho x - c)/a| = 1, returned as 1/rho.
        xa = x / axes
        ca = center / axes
        A = np.sum(xa * xa, axis=-1)
        B = np.sum(xa * ca, axis=-1)
        C = float(ca @ ca) - 1.0  # < 0 since the origin is interior
        return (np.sqrt(B * B - A * C) - B) / (-C)

    return replace(
        ell,
        gauge_fn=gauge,
        anchor=(0.0,) * n,
        out_radius=1.0 / (1.0 - lam),
        in_radius=1.0 / (1.0 + lam),
        name=f"polar-ellipsoid(lambda={lam:g})^{n}",
    )


def ellipsoid_log_volume(lam: float, n: int) -> float:
    """``ln vol`` of :func:`shifted_ball_polar_ellipsoid`."""
    return -0.5 * (n + 1) * math.log1p(-lam * lam) + specfun.lp_ball_log_volume(2, n)


def translate(body: Body, x0) -> Body:
    """``K - x0``. The anchor moves with the body."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (body.dim,):
        raise DomainError("translation vector has the wrong dimension")
    g = body.gauge_fn
    h = body.support_fn
    on_axis = body.axis is not None and np.count_nonzero(np.delete(x0, body.axis)) == 0
    return Body(
        dim=body.dim,
        gauge_fn=lambda x: g(x + x0),
        support_fn=None if h is None else (lambda u: h(u) - u @ x0),
        out_radius=body.out_radius,
        in_radius=body.in_radius,
        anchor=tuple(body.anchor_array - x0),
        origin_symmetric=body.origin_symmetric and not np.any(x0),
        axis=body.axis if on_axis else None,
        name=f"({body.name}) - x0",
    )


def scale(body: Body, t: float) -> Body:
    """``t * K`` for ``t > 0``."""
    if not t > 0:
        raise DomainError(f"scale factor must be positive, got {t!r}")
    g = body.gauge_fn
    h = body.support_fn
    return replace(
        body,
        gauge_fn=lambda x: g(x / t),
        support_fn=None if h is None else (lambda u: t * h(u)),
        out_radius=t * body.out_radius,
        in_radius=t * body.in_radius,
        anchor=tuple(t * body.anchor_array),
        name=f"{t:g}*({body.name})",
    )


def intersect(b1: Body, b2: Body) -> Body:
    """``K1 ∩ K2``; gauges must share the anchor. The support function is dropped."""
    if b1.dim != b2.dim:
        raise DomainError(f"dimension mismatch: {b1.dim} vs {b2.dim}")
    if not np.allclose(b1.anchor_array, b2.anchor_array, rtol=0, atol=1e-14):
        raise DomainError("intersected bodies must share their anchor")
    g1, g2 = b1.gauge_fn, b2.gauge_fn
    return Body(
        dim=b1.dim,
        gauge_fn=lambda x: np.maximum(g1(x), g2(x)),
        support_fn=None,
        out_radius=min(b1.out_radius, b2.out_radius),
        in_radius=min(b1.in_radius, b2.in_radius),
        anchor=b1.anchor,
        origin_symmetric=b1.origin_symmetric and b2.origin_symmetric,
        axis=b1.axis if b1.axis == b2.axis else None,
        name=f"({b1.name}) & ({b2.name})",
    )


def reanchor(body: Body, center, iterations: int = 60) -> Body:
    """Same set, gauge re-centered at an interior point ``center``.

    Evaluated by bisection along rays from ``center``, so it costs
    ``iterations`` calls of the original gauge.
    """
    c = np.asarray(center, dtype=float)
    if body.gauge(c) >= 1:
        raise DomainError("new anchor is not interior to the body")
    reach = body.out_radius + float(np.linalg.norm(c - body.anchor_array))
    inner = max(body.in_radius - float(np.linalg.norm(c - body.anchor_array)), 0.0)
    g = body.gauge_fn

    def gauge(x):
        d = np.asarray(x, dtype=float) - c
        norm = np.linalg.norm(d, axis=-1)
        safe = np.where(norm > 0, norm, 1.0)
        u = d / safe[..., None]
        lo = np.full(norm.shape, inner)
        hi = np.full(norm.shape, reach)
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            inside = g(c + mid[..., None] * u) <= 1.0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return np.where(norm > 0, norm / (0.5 * (lo + hi)), 0.0)

    return replace(body, gauge_fn=gauge, anchor=tuple(c), out_radius=reach, in_radius=inner)


def polar_body(body: Body, x=None, out_radius: Optional[float] = None) -> Body:
    """``(K - x)°`` as a body whose gauge is the support function of ``K - x``.

    When ``out_radius`` is not given it is estimated from the support values
    on a dense direction set (exact up to the direction spacing in 2-D).
    """
    h = body.support_fn
    if h is None:
        raise DomainError("the polar body needs the support function")
    x = np.zeros(body.dim) if x is None else np.asarray(x, dtype=float)
    if out_radius is None:
        dirs = _direction_net(body.dim)
        hmin = float(np.min(h(dirs) - dirs @ x))
        if hmin <= 0:
            raise DomainError("x is not interior to the body")
        out_radius = 1.0 / (hmin * (1.0 - 1e-3))
    reach = body.out_radius + float(np.linalg.norm(x - body.anchor_array))
    return Body(
        dim=body.dim,
        gauge_fn=lambda y: h(y) - y @ x,
        support_fn=None,
        out_radius=out_radius,
        in_radius=1.0 / reach,
        origin_symmetric=body.origin_symmetric and not np.any(x),
        name=f"polar({body.name})",
    )


def _direction_net(dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        phi = np.linspace(0, 2 * np.pi, 200_000, endpoint=False)
        return np.column_stack([np.cos(phi), np.sin(phi)])
    rng = np.random.default_rng(0)
    g = rng.standard_normal((200_000, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# The hull body and its polar sections


@dataclass(frozen=True)
class HullBodyParams:
    """Parameters of ``M_n = co[(K, -a), (L, b)]`` in ``R^(n+1)``.

    ``K = B_2^n / vol(B_2^n)^(1/n)`` and ``L = B_inf^n / 2`` both have volume 1.
    """

    n: int
    a: float = 1.0
    b: float = 1.0 / (math.e - 1.0)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"need a > 0 and b > 0, got a={self.a!r}, b={self.b!r}")

    @property
    def s_min(self) -> float:
        return -1.0 / self.a

    @property
    def s_max(self) -> float:
        return 1.0 / self.b

    def shifted(self, delta: float) -> "HullBodyParams":
        """Parameters after moving the origin to ``delta * e_(n+1)``."""
        return HullBodyParams(self.n, self.a + delta, self.b - delta)


@dataclass(frozen=True)
class SectionBody:
    """``r2 * B_2^n ∩ r1 * B_1^n``."""

    n: int
    r2: float
    r1: float

    @property
    def degenerate(self) -> bool:
        return self.r2 <= 0 or self.r1 <= 0

    def gauge(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            g2 = np.linalg.norm(x, axis=-1) / self.r2
            g1 = np.sum(np.abs(x), axis=-1) / self.r1
            g = np.maximum(g2, g1)
        return np.where(np.all(x == 0, axis=-1), 0.0, g)

    def as_body(self) -> Body:
        return Body(
            dim=self.n,
            gauge_fn=self.gauge,
            support_fn=None,
            out_radius=min(self.r2, self.r1),
            in_radius=min(self.r2, self.r1 / math.sqrt(self.n)),
            origin_symmetric=True,
            axis=0 if self.n == 1 else None,
            name=f"{self.r2:g}*B_2 & {self.r1:g}*B_1",
        )


def polar_section(params: HullBodyParams, s: float) -> SectionBody:
    """Section of the polar hull at height ``s``: ``(1+sa) K° ∩ (1-sb) L°``.

    ``K° = vol(B_2^n)^(1/n) B_2^n`` and ``L° = 2 B_1^n``.
    """
    slack = 1e-12 * max(1.0, abs(s))
    if not (params.s_min - slack <= s <= params.s_max + slack):
        raise DomainError(f"s={s!r} lies outside [{params.s_min}, {params.s_max}]")
    r2 = max(1.0 + s * params.a, 0.0) * specfun.lp_ball_root(2, params.n)
    r1 = max(2.0 * (1.0 - s * params.b), 0.0)
    return SectionBody(params.n, r2, r1)


def make_hull(params: HullBodyParams) -> Body:
    """The hull ``M_n`` itself, a body in ``R^(n+1)`` with gauge about the origin.

    Membership of ``(z, w)``: with ``t = (w + a)/(a + b)``, ``z`` lies in
    ``(1-t) K + t L``, i.e. within distance ``(1-t) rho_K`` of the cube of
    half-side ``t/2``. The gauge is found by bisection along rays.
    """
    n, a, b = params.n, params.a, params.b
    rho_k = 1.0 / specfun.lp_ball_root(2, n)

    def member(y):
        z, w = y[..., :n], y[..., n]
        t = (w + a) / (a + b)
        excess = np.maximum(np.abs(z) - 0.5 * t[..., None], 0.0)
        dist = np.linalg.norm(excess, axis=-1)
        ok = (t >= 0) & (t <= 1) & (dist <= (1 - t) * rho_k)
        return np.where(ok, 0.0, 2.0)

    def support(u):
        z, v = u[..., :n], u[..., n]
        return np.maximum(rho_k * np.linalg.norm(z, axis=-1) - a * v, 0.5 * np.sum(np.abs(z), axis=-1) + b * v)

    reach = max(math.hypot(rho_k, a), math.hypot(0.5 * math.sqrt(n), b))
    # Double cone over the height-0 section's inscribed ball.
    t0 = a / (a + b)
    r0 = (1 - t0) * rho_k + 0.5 * t0
    inner = r0 * min(a, b) / math.hypot(r0, min(a, b))
    proto = Body(dim=n + 1, gauge_fn=member, support_fn=support, out_radius=reach, in_radius=0.0, name=f"M_{n}")
    return replace(reanchor(proto, np.zeros(n + 1)), out_radius=reach, in_radius=inner)
