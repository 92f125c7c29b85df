"""Section profile and centroid of the polar hull ``M_n°``.

The section of ``M_n°`` at height ``s`` is ``r2 B_2^n ∩ r1 B_1^n`` with
``r2 = (1 + s a) vol(B_2^n)^(1/n)`` and ``r1 = 2 (1 - s b)``. Its volume is
written as an analytic prefactor times the volume fraction of one ball kept
by the other, and the fraction is estimated by :mod:`santalo_lab.volmc`:

    cross:  vol = r1^n vol(B_1^n) * vol(B_1 ∩ (r2/r1) B_2) / vol(B_1)
    ball:   vol = r2^n vol(B_2^n) * vol(B_2 ∩ (r1/r2) B_1) / vol(B_2)

Each prefactor is an upper bound, so their minimum is a global envelope.
The factorization with the smaller prefactor has the larger fraction and is
the one estimated.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from . import moments, specfun
from .bodies import HullBodyParams, polar_section
from .errors import DiagnosticsError, DomainError
from .volmc import RandomStream, VolumeEstimate, intersect_fraction

log = logging.getLogger(__name__)

TARGET_LO = 0.142673
TARGET_HI = 0.18383
FRACTION_FLOOR = 1e-3
MAX_TAIL_FRACTION = 0.1


@dataclass(frozen=True)
class WindowConstants:
    s0: float
    s1: float
    a: float
    b: float


def window_constants(a: float = 1.0, b: float = 1.0 / (math.e - 1.0)) -> WindowConstants:
    """Heights between which the volume of ``M_n°`` concentrates.

    ``s0 = (1 - sqrt(e)) / (b + a sqrt(e))`` and
    ``s1 = (2 - sqrt(pi e)) / (a sqrt(pi e) + 2 b)``.
    """
    if not (a > 0 and b > 0):
        raise DomainError("need a > 0 and b > 0")
    re, rpe = math.sqrt(math.e), math.sqrt(math.pi * math.e)
    return WindowConstants((1 - re) / (b + a * re), (2 - rpe) / (a * rpe + 2 * b), a, b)


def log_envelopes(params: HullBodyParams, s: float) -> tuple[float, float]:
    """``(ln[2^n (1-sb)^n vol B_1^n], ln[(1+sa)^n vol(B_2^n)^2])``."""
    n = params.n
    u_cross = 1.0 - s * params.b
    u_ball = 1.0 + s * params.a
    lc = n * math.log(2 * u_cross) + specfun.lp_ball_log_volume(1, n) if u_cross > 0 else -math.inf
    lb = n * math.log(u_ball) + 2 * specfun.lp_ball_log_volume(2, n) if u_ball > 0 else -math.inf
    return lc, lb


def log_envelope(params: HullBodyParams, s: float) -> float:
    return min(log_envelopes(params, s))


@dataclass(frozen=True)
class SectionVolume:
    """Volume of one section with the fraction it was built from.

    ``factorization`` is ``"cross"``, ``"ball"``, ``"apex"`` or ``"envelope"``.
    """

    s: float
    estimate: VolumeEstimate
    fraction: float
    fraction_err: float
    factorization: str
    log_envelope: float

    @property
    def log_value(self) -> float:
        return self.estimate.log_value

    @property
    def std_err_log(self) -> float:
        return self.estimate.std_err_log


def section_log_volume(params: HullBodyParams, s: float, samples: int, stream: RandomStream,
                       factorization: str = "auto", floor: float = FRACTION_FLOOR) -> SectionVolume:
    """Estimate ``ln vol_n(M_n°(s))``.

    ``factorization`` forces ``"cross"`` or ``"ball"``; ``"auto"`` takes the
    one with the larger fraction and falls back to the envelope (tagged
    ``analytic-bound``) when even that fraction is below ``floor``.
    """
    section = polar_section(params, s)
    n = params.n
    lc, lb = log_envelopes(params, s)
    env = min(lc, lb)
    if section.degenerate:
        return SectionVolume(s, VolumeEstimate(-math.inf, 0.0, 0, "closed-form"), 0.0, 0.0, "apex", env)
    if factorization == "auto":
        factorization = "cross" if lc <= lb else "ball"
    if factorization == "cross":
        frac, err = intersect_fraction(1, 2, n, section.r2 / section.r1, samples, stream)
        prefactor = lc
    elif factorization == "ball":
        frac, err = intersect_fraction(2, 1, n, section.r1 / section.r2, samples, stream)
        prefactor = lb
    else:
        raise DomainError(f"unknown factorization {factorization!r}")
    if frac < floor and prefactor == env:
        est = VolumeEstimate(env, 0.0, samples, "analytic-bound")
        return SectionVolume(s, est, frac, err, "envelope", env)
    est = VolumeEstimate.from_fraction(prefactor, frac * samples, samples, err)
    return SectionVolume(s, est, frac, err, factorization, env)


@dataclass(frozen=True)
class SectionProfile:
    params: HullBodyParams
    s_grid: np.ndarray
    sections: tuple

    @property
    def log_vols(self) -> np.ndarray:
        return np.array([sec.log_value for sec in self.sections])

    @property
    def envelope(self) -> np.ndarray:
        return np.array([sec.log_envelope for sec in self.sections])


def section_profile(params: HullBodyParams, grid_points: int, samples: int, stream: RandomStream,
                    s_grid=None) -> SectionProfile:
    """Sections on a uniform grid over ``[-1/a, 1/b]`` (endpoints included)."""
    if s_grid is None:
        if grid_points < 2:
            raise DomainError("need at least two grid points")
        s_grid = np.linspace(params.s_min, params.s_max, grid_points)
    s_grid = np.asarray(s_grid, dtype=float)
    sections = []
    for i, s in enumerate(s_grid):
        sections.append(section_log_volume(params, float(s), samples, stream.spawn(i)))
        log.info("section %d/%d done (s=%.6f)", i + 1, len(s_grid), s)
    return SectionProfile(params, s_grid, tuple(sections))


# ---------------------------------------------------------------------------
# centroid height


@dataclass(frozen=True)
class PolarCentroid:
    """Centroid height of ``M_n°`` with its error budget.

    Masses are natural logs. Tail masses are envelope integrals and
    therefore upper bounds.
    """

    params: HullBodyParams
    height: float
    err: float
    stat_err: float
    quad_err: float
    tail_bound: float
    window: tuple
    padding: float
    profile: SectionProfile
    log_window_mass: float
    log_tail_mass: tuple
    log_abs_tail_mass: tuple
    diagnostics: dict = field(default_factory=dict)

    @property
    def tail_fraction(self) -> float:
        return math.exp(specfun.log_add(*self.log_tail_mass) - self.log_window_mass)


def _tail_integral(params: HullBodyParams, lo: float, hi: float, shift: float, weight_abs: bool) -> float:
    """``ln ∫_lo^hi |s|^w exp(envelope(s))`` computed after subtracting ``shift``."""
    if hi <= lo:
        return -math.inf

    def f(s):
        e = log_envelope(params, s) - shift
        val = math.exp(e) if e > -700 else 0.0
        return abs(s) * val if weight_abs else val

    pts = [p for p in (0.0,) if lo < p < hi]
    val, _ = integrate.quad(f, lo, hi, points=pts or None, limit=200, epsabs=0.0, epsrel=1e-10)
    return math.log(val) + shift if val > 0 else -math.inf


def trapezoid_centroid(s, log_vols, std_err_log=None) -> tuple[float, float, float, float]:
    """Centroid of a density known in log space on a uniform grid.

    Returns ``(centroid, std_err, log_mass, shift)``; ``std_err`` propagates
    independent errors ``std_err_log`` of the log values by the delta method
    and ``shift`` is the max-log offset used before exponentiating.
    """
    s = np.asarray(s, dtype=float)
    logs = np.asarray(log_vols, dtype=float)
    shift = float(np.max(logs))
    if not math.isfinite(shift):
        raise DiagnosticsError("every section volume vanished")
    v = np.exp(logs - shift)
    c = np.full(s.size, s[1] - s[0])
    c[0] = c[-1] = 0.5 * (s[1] - s[0])
    W = float(np.sum(c * v))
    g = float(np.sum(c * s * v)) / W
    sig = np.zeros(s.size) if std_err_log is None else np.asarray(std_err_log, dtype=float)
    stat = math.sqrt(float(np.sum((c * (s - g) * v * sig / W) ** 2)))
    return g, stat, math.log(W) + shift, shift


def polar_centroid_height(params: HullBodyParams, grid_points: int = 64, samples: int = 100_000,
                          stream: Optional[RandomStream] = None, padding: float = 0.05,
                          max_tail_fraction: float = MAX_TAIL_FRACTION) -> PolarCentroid:
    """Last coordinate of the centroid of ``M_n°``.

    The sections are estimated on a uniform grid over ``[s0 - padding,
    s1 + padding]`` and integrated by the trapezoid rule after a max-log
    shift. Mass outside the window is bounded by integrating the envelope.

    ``err`` adds the tail bound, the trapezoid/Simpson discrepancy and three
    statistical standard errors.
    """
    if grid_points < 16:
        raise DomainError("grid_points must be at least 16")
    stream = RandomStream(0) if stream is None else stream
    wc = window_constants(params.a, params.b)
    lo = max(params.s_min, wc.s0 - padding)
    hi = min(params.s_max, wc.s1 + padding)
    if hi <= lo:
        raise DiagnosticsError("empty concentration window")
    prof = section_profile(params, grid_points, samples, stream, s_grid=np.linspace(lo, hi, grid_points))
    s = prof.s_grid
    sig = np.array([sec.std_err_log if math.isfinite(sec.std_err_log) else 0.0 for sec in prof.sections])
    g, stat, log_w, shift = trapezoid_centroid(s, prof.log_vols, sig)
    v = np.exp(prof.log_vols - shift)

    g_simpson = float(integrate.simpson(s * v, x=s) / integrate.simpson(v, x=s))
    quad_err = abs(g - g_simpson)

    t_lo = _tail_integral(params, params.s_min, lo, shift, False)
    t_hi = _tail_integral(params, hi, params.s_max, shift, False)
    a_lo = _tail_integral(params, params.s_min, lo, shift, True)
    a_hi = _tail_integral(params, hi, params.s_max, shift, True)
    tail_mass = math.exp(specfun.log_add(t_lo, t_hi) - log_w)
    abs_tail = math.exp(specfun.log_add(a_lo, a_hi) - log_w)
    tail_bound = abs_tail + abs(g) * tail_mass
    diagnostics = {
        "analytic_bound_sections": sum(sec.factorization == "envelope" for sec in prof.sections),
        "min_fraction": min(sec.fraction for sec in prof.sections),
        "tail_mass_fraction": tail_mass,
    }
    if tail_mass > max_tail_fraction:
        raise DiagnosticsError(
            f"envelope tail mass is {tail_mass:.3g} of the window mass at n={params.n}; "
            "the dimension is too small for the volume to concentrate"
        )
    err = tail_bound + quad_err + 3 * stat
    return PolarCentroid(params, g, err, stat, quad_err, tail_bound, (lo, hi), padding, prof,
                         log_w, (t_lo, t_hi), (a_lo, a_hi), diagnostics)


# ---------------------------------------------------------------------------
# concentration and the separation ratio


@dataclass(frozen=True)
class ConcentrationReport:
    gamma: float
    window_holds: bool
    lower_tail_holds: bool
    upper_tail_holds: bool
    tail_fraction: float
    lower_abs_fraction: float
    upper_abs_fraction: float

    @property
    def holds(self) -> bool:
        return self.window_holds and self.lower_tail_holds and self.upper_tail_holds


def concentration_check(params: HullBodyParams, gamma: float = 0.05, samples: int = 100_000,
                        stream: Optional[RandomStream] = None, grid_points: int = 64,
                        result: Optional[PolarCentroid] = None) -> ConcentrationReport:
    """Check that the volume of ``M_n°`` sits in ``[s0 - gamma, s1 + gamma]``.

    (i)  total mass <= (1 + gamma) * window mass;
    (ii) each ``|s|``-weighted tail mass <= gamma * total mass.

    Tails use the envelope (upper bounds) and the total is replaced by the
    window mass (a lower bound), so a pass is conservative.
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    if result is None or not math.isclose(result.padding, gamma) or result.params != params:
        result = polar_centroid_height(params, grid_points, samples, stream, padding=gamma,
                                       max_tail_fraction=math.inf)
    lw = result.log_window_mass
    tail = math.exp(specfun.log_add(*result.log_tail_mass) - lw)
    low = math.exp(result.log_abs_tail_mass[0] - lw)
    up = math.exp(result.log_abs_tail_mass[1] - lw)
    return ConcentrationReport(gamma, tail <= gamma, low <= gamma, up <= gamma, tail, low, up)


@dataclass(frozen=True)
class SeparationReport:
    params: HullBodyParams
    constants: WindowConstants
    centroid: PolarCentroid
    hull_centroid: float
    distance: float
    polar_chord: float
    hull_height: float
    ratio_over_polar_chord: float
    ratio_over_hull_height: float
    target: tuple = (TARGET_LO, TARGET_HI)
    normalization_note: str = (
        "the printed constants equal (1-1/e)|s1| and (1-1/e)|s0|, i.e. |g*| divided by the hull "
        "height a+b; the chord of the polar body along the axis is 1/a+1/b"
    )


def separation_report(params: HullBodyParams, grid_points: int = 64, samples: int = 100_000,
                      stream: Optional[RandomStream] = None, padding: float = 0.05,
                      result: Optional[PolarCentroid] = None) -> SeparationReport:
    """Distance between centroid and Santalo point of the polar hull, with both normalizations.

    The Santalo point of the polar of ``M_n`` about its centroid is the
    origin, so the distance is ``|g(M_n°)(n+1)|``.
    """
    if result is None:
        result = polar_centroid_height(params, grid_points, samples, stream, padding)
    dist = abs(result.height)
    chord = 1.0 / params.a + 1.0 / params.b
    height = params.a + params.b
    return SeparationReport(
        params=params,
        constants=window_constants(params.a, params.b),
        centroid=result,
        hull_centroid=moments.hull_centroid(params.n, params.a, params.b),
        distance=dist,
        polar_chord=chord,
        hull_height=height,
        ratio_over_polar_chord=dist / chord,
        ratio_over_hull_height=dist / height,
    )


def recentered(params: HullBodyParams) -> HullBodyParams:
    """Parameters of ``M_n`` seen from its own centroid (``a + d``, ``b - d``)."""
    return params.shifted(moments.hull_centroid(params.n, params.a, params.b))
