"""Mixed volumes of the Euclidean ball and the cube, and hull centroids.

For ``K = B_2^n / vol(B_2^n)^(1/n)`` and ``L = B_inf^n / 2`` the mixed volumes
are known in closed form, so the centroid of ``co[(K, 0), (L, c)]`` is a
ratio of two finite sums. The weights are formed in log space because
``Gamma(1 + n/2)^(k/n)`` overflows for n in the hundreds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from . import specfun
from .errors import DomainError


@dataclass(frozen=True)
class MixedVolumeTable:
    """``entries[k] = ln V_{n-k,k}(B_2^n, B_inf^n)`` for ``k = 0..n``."""

    n: int
    entries: np.ndarray

    def entry(self, k: int) -> float:
        return float(self.entries[k])


def mixed_volume_table(n: int) -> MixedVolumeTable:
    """``V_{n-k,k}(B_2^n, B_inf^n) = 2^k vol_{n-k}(B_2^{n-k})``, with ``vol_0 = 1``."""
    n = _dim(n)
    k = np.arange(n + 1)
    m = n - k
    # ln vol_m(B_2^m) = (m/2) ln pi - ln Gamma(1 + m/2), which is 0 at m = 0.
    log_ball = 0.5 * m * math.log(math.pi) - gammaln(1.0 + 0.5 * m)
    return MixedVolumeTable(n, k * math.log(2.0) + log_ball)


def minkowski_volume(n: int, t: float) -> float:
    """``ln vol_n(B_2^n + t B_inf^n)`` from the mixed-volume expansion."""
    if not t >= 0:
        raise DomainError(f"dilation t must be non-negative, got {t!r}")
    table = mixed_volume_table(n)
    if t == 0:
        return table.entry(0)
    k = np.arange(n + 1)
    log_binom = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    return float(logsumexp(log_binom + table.entries + k * math.log(t)))


def hull_log_weights(n: int) -> np.ndarray:
    """``ln w_k`` with ``w_k = 1 / (Gamma(1+n/2)^(k/n) Gamma(1+(n-k)/2))``.

    ``w_k`` is proportional to ``V_{n-k,k}(K, L)`` for the volume-one faces.
    """
    n = _dim(n)
    k = np.arange(n + 1)
    return -(k / n) * gammaln(1.0 + 0.5 * n) - gammaln(1.0 + 0.5 * (n - k))


def centroid_height_from_weights(log_weights, c: float = 1.0) -> float:
    """Height of the centroid of ``co[(K,0),(L,c)]`` given ``ln V_{n-k,k}(K,L)``.

    ``c/(n+2) * sum (k+1) w_k / sum w_k``.
    """
    lw = np.asarray(log_weights, dtype=float)
    n = lw.size - 1
    shifted = np.exp(lw - lw.max())
    k = np.arange(n + 1)
    return c / (n + 2) * float(np.sum((k + 1) * shifted) / np.sum(shifted))


def hull_centroid_height(n: int, c: float) -> float:
    """Height of the centroid of ``co[(K, 0), (L, c)]`` above the K face."""
    if not c > 0:
        raise DomainError(f"height c must be positive, got {c!r}")
    return centroid_height_from_weights(hull_log_weights(n), c)


def centroid_ratio_sequence(n: int) -> float:
    """The normalized centroid height; tends to ``1 - 1/e``."""
    return hull_centroid_height(n, 1.0)


def hull_centroid(n: int, a: float, b: float) -> float:
    """Last coordinate of the centroid of ``co[(K, -a), (L, b)]``."""
    if not (a > 0 and b > 0):
        raise DomainError("need a > 0 and b > 0")
    return hull_centroid_height(n, a + b) - a


def hull_centroid_limit(a: float, b: float) -> float:
    """Large-n limit of :func:`hull_centroid`: ``-a/e + (1 - 1/e) b``."""
    if not (a > 0 and b > 0):
        raise DomainError("need a > 0 and b > 0")
    return -a / math.e + (1.0 - 1.0 / math.e) * b


def _dim(n) -> int:
    return specfun._dim(n)
