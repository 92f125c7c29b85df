"""Special functions in log space.

Every volume in this package is carried as a natural logarithm. Unit-ball
volumes fall below the smallest double long before the dimensions used here
(``vol(B_2^n)**2`` underflows near n = 250), so linear values are only formed
for small n or after a max-shift.
"""

from __future__ import annotations

import math

from .errors import DomainError

# Natural log of a positive quantity; -inf encodes an exact zero.
LogValue = float

INF = math.inf
"""Exponent of the cube norm. Compared by identity, never used in 1/p."""


def is_inf(p) -> bool:
    if isinstance(p, str):
        return p.strip().lower() in ("inf", "infinity", "oo")
    return p == math.inf


def parse_p(p) -> float:
    """Normalize an exponent given as a number or as the string ``"inf"``."""
    if is_inf(p):
        return INF
    p = float(p)
    if not math.isfinite(p) or p < 1:
        raise DomainError(f"lp exponent must satisfy p >= 1, got {p!r}")
    return p


def dual_exponent(p) -> float:
    """Return q with 1/p + 1/q = 1."""
    p = parse_p(p)
    if p == INF:
        return 1.0
    if p == 1:
        return INF
    return p / (p - 1)


def log_gamma(x: float) -> LogValue:
    """Natural log of the gamma function for real ``x > 0``.

    Backed by the C library ``lgamma``, whose error is a few ulps of the
    result over the whole positive axis.
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"log_gamma needs a finite positive argument, got {x!r}")
    return math.lgamma(x)


def lp_ball_log_volume(p, n: int) -> LogValue:
    """``ln vol_n(B_p^n)``.

    Uses ``vol(B_p^n) = (2 Gamma(1 + 1/p))**n / Gamma(1 + n/p)`` and
    ``n ln 2`` for the cube.
    """
    p = parse_p(p)
    n = _dim(n)
    if p == INF:
        return n * math.log(2.0)
    return n * (math.log(2.0) + math.lgamma(1.0 + 1.0 / p)) - math.lgamma(1.0 + n / p)


def lp_ball_root(p, n: int) -> float:
    """``vol_n(B_p^n) ** (1/n)``, finite for every n."""
    return math.exp(lp_ball_log_volume(p, n) / n)


def euclid_ball_root_bounds(n: int) -> tuple[float, float]:
    """Stirling sandwich for ``vol_n(B_2^n) ** (1/n)``.

    Returns ``(lower, upper)`` with

        upper = sqrt(2 pi e) / (sqrt(n) (pi n)**(1/(2n)))
        lower = upper * exp(-1 / (6 n (n - 2)))

    The correction factor requires n >= 3.
    """
    n = _dim(n)
    if n < 3:
        raise DomainError(f"the Stirling sandwich needs n >= 3, got n={n}")
    log_upper = 0.5 * math.log(2 * math.pi * math.e) - 0.5 * math.log(n) - math.log(math.pi * n) / (2 * n)
    log_lower = log_upper - 1.0 / (6 * n * (n - 2))
    return math.exp(log_lower), math.exp(log_upper)


def log_add(x: LogValue, y: LogValue) -> LogValue:
    """``ln(e**x + e**y)`` without overflow."""
    if x == -math.inf:
        return y
    if y == -math.inf:
        return x
    hi, lo = (x, y) if x >= y else (y, x)
    return hi + math.log1p(math.exp(lo - hi))


def _dim(n) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n!r}")
    return int(n)
