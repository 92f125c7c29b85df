"""Monte Carlo volume machinery.

Volumes of ``B_p^n ∩ s B_q^n`` are estimated through the radial
representation

    vol(B_p ∩ s B_q) = vol(B_p) * P(R ||h||_q / ||h||_p <= s),

where ``h`` has i.i.d. coordinates with density proportional to
``exp(-|t|^p)`` and ``R = U^(1/n)`` is independent of ``h``. The product
``R h / ||h||_p`` is uniform on ``B_p^n``, which folds the radial integral
into a single expectation.

Work is split into fixed-size blocks. Block ``j`` of a stream draws from its
own child stream and the block results are reduced in ascending order, so a
result depends on ``(seed, stream key, samples)`` and never on how many
threads ran the blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import specfun
from .bodies import Body
from .errors import DomainError, UnsupportedError

BLOCK_SIZE = 8192
THREADS_ENV = "SANTALO_LAB_THREADS"

METHODS = ("monte-carlo", "grid", "closed-form", "quadrature", "analytic-bound")


@dataclass(frozen=True)
class RandomStream:
    """Seeded, splittable source of variates.

    ``key`` is the path of child indices from the root stream; two streams
    with the same ``(seed, key)`` produce the same numbers on every platform
    numpy's PCG64 supports.
    """

    seed: int
    key: tuple = field(default=())

    def __post_init__(self):
        if isinstance(self.key, int):
            object.__setattr__(self, "key", (self.key,))
        object.__setattr__(self, "key", tuple(int(k) for k in self.key))

    @property
    def stream_id(self) -> tuple:
        return self.key

    def spawn(self, index: int) -> "RandomStream":
        return RandomStream(self.seed, self.key + (int(index),))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=int(self.seed) & (2**64 - 1), spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(seq))


def worker_count() -> int:
    """Threads used for block evaluation; ``SANTALO_LAB_THREADS`` caps it."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def run_blocks(fn: Callable[[int, RandomStream], np.ndarray], samples: int, stream: RandomStream,
               block_size: int = BLOCK_SIZE,
               combine: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """Evaluate ``fn(size, block_stream)`` per block and reduce in block order.

    ``fn`` returns a fixed-length vector of partial sums. ``combine`` replaces
    the default elementwise sum, e.g. for partial sums kept in log space.
    """
    if samples < 1:
        raise DomainError("samples must be at least 1")
    sizes = [block_size] * (samples // block_size)
    if samples % block_size:
        sizes.append(samples % block_size)
    jobs = [(size, stream.spawn(j)) for j, size in enumerate(sizes)]
    workers = min(worker_count(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    else:
        parts = [fn(*job) for job in jobs]
    if combine is None:
        total = np.zeros_like(np.asarray(parts[0], dtype=float))
        for part in parts:
            total = total + part
        return total
    total = np.asarray(parts[0], dtype=float)
    for part in parts[1:]:
        total = combine(total, np.asarray(part, dtype=float))
    return total


# ---------------------------------------------------------------------------
# sampling and moments


def sample_pgauss(p: float, count: int, stream: RandomStream | np.random.Generator,
                  normal: bool = False, shape: Sequence[int] | None = None) -> np.ndarray:
    """Draws with density ``p / (2 Gamma(1/p)) exp(-|t|^p)``.

    ``|h| = G^(1/p)`` with ``G ~ Gamma(1/p)`` and an independent sign. With
    ``normal=True`` and ``p == 2`` the draws are standard normal instead
    (variance 1 rather than 1/2).
    """
    p = float(p)
    if not math.isfinite(p) or p < 1:
        raise DomainError(f"p must satisfy 1 <= p < inf, got {p!r}")
    rng = stream.generator() if isinstance(stream, RandomStream) else stream
    size = (int(count),) if shape is None else tuple(shape)
    if p == 2 and normal:
        return rng.standard_normal(size)
    if p == 2:
        return rng.standard_normal(size) * math.sqrt(0.5)
    if p == 1:
        mag = rng.standard_exponential(size)
    else:
        mag = rng.standard_gamma(1.0 / p, size) ** (1.0 / p)
    sign = rng.integers(0, 2, size, dtype=np.int8) * 2 - 1
    return mag * sign


def pq_moment(p: float, q: float) -> float:
    """``E|h|^q = Gamma((q+1)/p) / Gamma(1/p)`` for the density above."""
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p!r}")
    if not q >= 0:
        raise DomainError(f"q must be >= 0, got {q!r}")
    return math.exp(math.lgamma((q + 1) / p) - math.lgamma(1 / p))


# ---------------------------------------------------------------------------
# estimators


def wilson_std_err(hits: float, n: int) -> float:
    """One-sigma Wilson score half-width for a binomial proportion."""
    if n <= 0:
        return math.inf
    phat = hits / n
    return math.sqrt(phat * (1 - phat) / n + 1.0 / (4 * n * n)) / (1 + 1.0 / n)


@dataclass(frozen=True)
class VolumeEstimate:
    """A volume carried as its natural log.

    ``std_err_log`` is the standard error of ``log_value`` (delta method);
    ``std_err`` is the standard error of the linear value. For a zero
    estimate only ``std_err`` is informative.
    """

    log_value: float
    std_err_log: float
    samples: int
    method: str
    std_err: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown estimate method {self.method!r}")
        if self.std_err_log < 0 or self.std_err < 0:
            raise DomainError("standard errors must be non-negative")

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    @classmethod
    def exact(cls, log_value: float) -> "VolumeEstimate":
        return cls(log_value, 0.0, 0, "closed-form", 0.0)

    @classmethod
    def from_fraction(cls, log_scale: float, hits: float, samples: int,
                      std_err: float | None = None) -> "VolumeEstimate":
        """``exp(log_scale) * hits / samples`` with a Wilson standard error."""
        frac = hits / samples
        se = wilson_std_err(hits, samples) if std_err is None else std_err
        if frac <= 0:
            return cls(-math.inf, math.inf, samples, "monte-carlo", math.exp(log_scale) * se)
        se_abs = math.exp(log_scale + math.log(se)) if se > 0 else 0.0
        return cls(log_scale + math.log(frac), se / frac, samples, "monte-carlo", se_abs)


def _ratio_block(p: float, q, n: int, threshold: float, stratified_total: int = 0):
    """Block kernel counting ``R ||h||_q / ||h||_p <= threshold``."""
    qn = specfun.parse_p(q)

    def kernel(size: int, stream: RandomStream) -> np.ndarray:
        rng = stream.generator()
        h = sample_pgauss(p, 0, rng, normal=True, shape=(size, n))
        ratio = _norm(h, qn) / _norm(h, p)
        u = rng.random(size)
        if stratified_total:
            start = stream.key[-1] * BLOCK_SIZE
            u = (start + np.arange(size) + u) / stratified_total
        r = u ** (1.0 / n)
        return np.array([np.count_nonzero(r * ratio <= threshold)], dtype=float)

    return kernel


def _norm(x: np.ndarray, p) -> np.ndarray:
    if p == specfun.INF:
        return np.max(np.abs(x), axis=-1)
    if p == 1:
        return np.sum(np.abs(x), axis=-1)
    if p == 2:
        return np.sqrt(np.einsum("...i,...i->...", x, x))
    return np.sum(np.abs(x) ** p, axis=-1) ** (1.0 / p)


def ratio_cdf(p: float, q, n: int, u: float, samples: int, stream: RandomStream) -> tuple[float, float]:
    """Empirical ``P(||h||_q / ||h||_p <= u)`` for a p-Gaussian vector ``h``.

    Returns ``(probability, std_err)``.
    """
    if not u >= 0:
        raise DomainError("u must be non-negative")
    qn = specfun.parse_p(q)

    def kernel(size, st):
        h = sample_pgauss(p, 0, st.generator(), normal=True, shape=(size, n))
        return np.array([np.count_nonzero(_norm(h, qn) / _norm(h, p) <= u)], dtype=float)

    hits = run_blocks(kernel, samples, stream)[0]
    return hits / samples, wilson_std_err(hits, samples)


def intersect_fraction(p: float, q, n: int, s: float, samples: int, stream: RandomStream,
                       stratified: bool = False) -> tuple[float, float]:
    """``vol(B_p^n ∩ s B_q^n) / vol(B_p^n)`` with its standard error."""
    if not s >= 0:
        raise DomainError(f"s must be non-negative, got {s!r}")
    if s == 0:
        return 0.0, 0.0
    kernel = _ratio_block(float(p), q, int(n), float(s), samples if stratified else 0)
    hits = run_blocks(kernel, samples, stream)[0]
    return hits / samples, wilson_std_err(hits, samples)


def intersect_volume(p: float, q, n: int, s: float, samples: int, stream: RandomStream,
                     stratified: bool = False) -> VolumeEstimate:
    """Estimate ``vol_n(B_p^n ∩ s B_q^n)``.

    With ``stratified=True`` the uniform variate behind the radius is
    stratified over the whole run, which lowers the variance near the
    nesting transition.
    """
    if not s >= 0:
        raise DomainError(f"s must be non-negative, got {s!r}")
    if s == 0:
        return VolumeEstimate(-math.inf, 0.0, samples, "closed-form", 0.0)
    frac, se = intersect_fraction(p, q, n, s, samples, stream, stratified)
    return VolumeEstimate.from_fraction(specfun.lp_ball_log_volume(p, n), frac * samples, samples, se)


# ---------------------------------------------------------------------------
# thresholds for the normalized ball / cross-polytope intersections


def threshold_ball_in_cross(n: int, gamma: float) -> float:
    """Scale ``t`` above which ``B_2/|B_2|^(1/n) ∩ t B_1/|B_1|^(1/n)`` keeps half its volume.

    ``(sqrt(2/pi) + gamma) sqrt(n) (vol B_1 / vol B_2)^(1/n)``.
    """
    _check_gamma(gamma)
    return (math.sqrt(2 / math.pi) + gamma) * math.sqrt(n) * _root_ratio(1, 2, n)


def threshold_cross_in_ball(n: int, gamma: float) -> float:
    """Scale ``s`` above which ``B_1/|B_1|^(1/n) ∩ s B_2/|B_2|^(1/n)`` keeps half its volume.

    ``(sqrt(2) + gamma) / sqrt(n) (vol B_2 / vol B_1)^(1/n)``; tends to ``sqrt(pi/e)``.
    """
    _check_gamma(gamma)
    return (math.sqrt(2) + gamma) / math.sqrt(n) * _root_ratio(2, 1, n)


def _root_ratio(p, q, n: int) -> float:
    return math.exp((specfun.lp_ball_log_volume(p, n) - specfun.lp_ball_log_volume(q, n)) / n)


def _check_gamma(gamma: float) -> None:
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma!r}")


def half_test(kind: str, n: int, scale: float, samples: int, stream: RandomStream) -> tuple[float, float]:
    """Volume of the intersection of two volume-one normalized balls.

    ``kind="ball-in-cross"``: ``B_2/|B_2|^(1/n) ∩ scale * B_1/|B_1|^(1/n)``;
    ``kind="cross-in-ball"``: ``B_1/|B_1|^(1/n) ∩ scale * B_2/|B_2|^(1/n)``.
    Returns ``(fraction, std_err)``; the fraction lies in [0, 1].
    """
    if not scale >= 0:
        raise DomainError("scale must be non-negative")
    if kind == "ball-in-cross":
        return intersect_fraction(2, 1, n, scale * _root_ratio(2, 1, n), samples, stream)
    if kind == "cross-in-ball":
        return intersect_fraction(1, 2, n, scale * _root_ratio(1, 2, n), samples, stream)
    raise DomainError(f"unknown half-test kind {kind!r}")


# ---------------------------------------------------------------------------
# deterministic low-dimensional oracle


def grid_volume(body: Body, resolution: int, chunk: int = 1 << 21) -> VolumeEstimate:
    """Midpoint-rule rasterization of ``body`` over ``anchor ± out_radius``.

    The reported ``std_err`` is a heuristic: half the volume of the cells
    whose centers lie within half a cell diagonal (measured radially) of the
    boundary. It scales like ``1/resolution``.
    """
    d = body.dim
    if d > 3:
        raise UnsupportedError(f"grid_volume supports dim <= 3, got {d}")
    if resolution < 100:
        raise DomainError("resolution must be at least 100")
    if body.in_radius <= 0 and body.out_radius <= 0:
        return VolumeEstimate(-math.inf, 0.0, 0, "grid", 0.0)
    R = body.out_radius * (1 + 1e-9)
    h = 2 * R / resolution
    axis = -R + h * (np.arange(resolution) + 0.5)
    c = body.anchor_array
    cell = h ** d
    band = 0.5 * h * math.sqrt(d)
    inside = 0
    near = 0
    total = resolution ** d
    rows = max(1, chunk // resolution ** (d - 1))
    for start in range(0, resolution, rows):
        first = axis[start:start + rows]
        mesh = np.meshgrid(first, *([axis] * (d - 1)), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1) + c
        g = body.gauge_fn(pts)
        inside += int(np.count_nonzero(g <= 1.0))
        r = np.linalg.norm(pts - c, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            radial_gap = np.abs(r - np.where(g > 0, r / g, np.inf))
        near += int(np.count_nonzero(radial_gap <= band))
    if inside == 0:
        return VolumeEstimate(-math.inf, 0.0, total, "grid", near * cell * 0.5)
    vol = inside * cell
    se = 0.5 * near * cell
    return VolumeEstimate(math.log(vol), se / vol, total, "grid", se)
