"""Command-line interface.

Every report is a JSON object holding the resolved configuration, the
package version and the command's results. ``--format csv`` flattens the
same object into ``key,value`` rows in document order, with nested keys
joined by dots and list positions written as indices.

Exit status is 0 on success, 2 for invalid arguments and 1 when a
computation fails; in the last case a JSON object with ``error`` and
``message`` is written instead of the report.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass
from importlib import resources
from typing import Optional

from . import __version__, moments, profile, santalo, specfun, volmc
from .bodies import HullBodyParams, make_ellipsoid, make_half_ball, make_lp_ball
from .errors import DiagnosticsError, DomainError, UnsupportedError

DEFAULT_SEED = 20240001
log = logging.getLogger("santalo_lab")


@dataclass(frozen=True)
class RunConfig:
    command: str
    dim: int = 200
    a: float = 1.0
    b: float = 1.0 / (math.e - 1.0)
    samples: int = 100_000
    grid_points: int = 64
    seed: int = DEFAULT_SEED
    gamma: float = 0.05
    output_format: str = "json"
    output_path: Optional[str] = None

    @property
    def params(self) -> HullBodyParams:
        return HullBodyParams(self.dim, self.a, self.b)

    @property
    def stream(self) -> volmc.RandomStream:
        return volmc.RandomStream(self.seed)


def load_schema() -> dict:
    """JSON schema of the ``reproduce`` report."""
    text = resources.files("santalo_lab").joinpath("schemas/reproduce.schema.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------------------
# commands; each returns the command-specific part of the report


def _ball_volume(cfg, args):
    out = {
        "p": "inf" if specfun.is_inf(args.p) else float(args.p),
        "log_volume": specfun.lp_ball_log_volume(args.p, cfg.dim),
        "volume_root": specfun.lp_ball_root(args.p, cfg.dim),
    }
    if cfg.dim >= 3 and not specfun.is_inf(args.p) and float(args.p) == 2:
        lo, hi = specfun.euclid_ball_root_bounds(cfg.dim)
        out["stirling_lower"] = lo
        out["stirling_upper"] = hi
    return out


def _mixed_volume(cfg, args):
    table = moments.mixed_volume_table(cfg.dim)
    return {
        "t": args.t,
        "log_minkowski_volume": moments.minkowski_volume(cfg.dim, args.t),
        "log_mixed_volumes": [float(v) for v in table.entries],
    }


def _centroid_hull(cfg, args):
    ratio = moments.centroid_ratio_sequence(cfg.dim)
    limit = 1.0 - 1.0 / math.e
    return {
        "centroid_ratio": ratio,
        "limit": limit,
        "limit_gap": abs(ratio - limit),
        "hull_centroid": moments.hull_centroid(cfg.dim, cfg.a, cfg.b),
        "hull_centroid_limit": moments.hull_centroid_limit(cfg.a, cfg.b),
    }


def _intersect(cfg, args):
    est = volmc.intersect_volume(args.p, args.q, cfg.dim, args.s, cfg.samples, cfg.stream, args.stratified)
    return {"p": args.p, "q": args.q, "s": args.s, "estimate": _estimate(est)}


def _sections(cfg, args):
    prof = profile.section_profile(cfg.params, cfg.grid_points, cfg.samples, cfg.stream)
    return {"sections": [_section(sec) for sec in prof.sections]}


def _polar_centroid(cfg, args):
    params = profile.recentered(cfg.params) if args.recenter else cfg.params
    res = profile.polar_centroid_height(params, cfg.grid_points, cfg.samples, cfg.stream, cfg.gamma)
    return {"hull": {"a": params.a, "b": params.b}, **_centroid(res)}


def _santalo(cfg, args):
    body = _make_body(args.body, cfg.dim, args.lam)
    if args.grid:
        rep = santalo.santalo_grid_2d(body, step=args.tolerance, verify_samples=cfg.samples, stream=cfg.stream)
    else:
        rep = santalo.santalo_axis_search(body, args.tolerance, cfg.samples, cfg.stream, verify_samples=cfg.samples)
    out = {"body": body.name, **asdict(rep)}
    out["interval"] = list(rep.interval)
    out["point"] = list(rep.point)
    return out


def _half_ball(cfg, args):
    rows = santalo.half_ball_table(args.dims, args.tolerance)
    gamma = santalo.fit_gamma(rows)
    return {
        "gamma_fit": gamma,
        "rows": [
            {
                "n": r.n,
                "centroid": r.centroid,
                "santalo": r.santalo,
                "residual": r.residual,
                "scaled_gap": r.scaled_gap,
                "scaled_santalo": r.scaled_santalo,
                "below_gamma": r.scaled_santalo <= gamma,
            }
            for r in rows
        ],
    }


def _reproduce(cfg, args):
    params = profile.recentered(cfg.params) if args.recenter else cfg.params
    wc = profile.window_constants(cfg.a, cfg.b)
    res = profile.polar_centroid_height(params, cfg.grid_points, cfg.samples, cfg.stream, cfg.gamma,
                                        max_tail_fraction=math.inf)
    sep = profile.separation_report(params, result=res)
    conc = profile.concentration_check(params, cfg.gamma, result=res)
    k = 1.0 - 1.0 / math.e
    lo, hi = wc.s0 - 0.06, wc.s1 + 0.06
    band = (k * abs(hi), k * abs(lo))
    checks = [
        _check("centroid_in_window", lo <= res.height <= hi,
               f"height {res.height:.6f} vs [{lo:.6f}, {hi:.6f}]"),
        _check("hull_height_ratio_band_covers_target",
               band[0] <= profile.TARGET_LO and profile.TARGET_HI <= band[1],
               f"band [{band[0]:.6f}, {band[1]:.6f}]"),
        _check("hull_height_ratio_in_target",
               profile.TARGET_LO <= sep.ratio_over_hull_height <= profile.TARGET_HI,
               f"ratio {sep.ratio_over_hull_height:.6f}"),
        _check("polar_chord_ratio_in_target",
               profile.TARGET_LO <= sep.ratio_over_polar_chord <= profile.TARGET_HI,
               f"ratio {sep.ratio_over_polar_chord:.6f}; {sep.normalization_note}"),
        _check("window_mass", conc.window_holds, f"tail/window {conc.tail_fraction:.3e} <= {cfg.gamma}"),
        _check("lower_tail_moment", conc.lower_tail_holds, f"{conc.lower_abs_fraction:.3e} <= {cfg.gamma}"),
        _check("upper_tail_moment", conc.upper_tail_holds, f"{conc.upper_abs_fraction:.3e} <= {cfg.gamma}"),
    ]
    return {
        "constants": {
            "s0": wc.s0,
            "s1": wc.s1,
            "one_minus_inv_e": k,
            "target_lo": profile.TARGET_LO,
            "target_hi": profile.TARGET_HI,
        },
        "measured": {
            "polar_centroid_height": res.height,
            "err": res.err,
            "distance": sep.distance,
            "ratio_over_polar_chord": sep.ratio_over_polar_chord,
            "ratio_over_hull_height": sep.ratio_over_hull_height,
            "hull_centroid": sep.hull_centroid,
            "tail_fraction": res.tail_fraction,
            "recentered": bool(args.recenter),
            "hull": {"a": params.a, "b": params.b},
        },
        "checks": checks,
    }


HANDLERS = {
    "ball-volume": _ball_volume,
    "mixed-volume": _mixed_volume,
    "centroid-hull": _centroid_hull,
    "intersect": _intersect,
    "sections": _sections,
    "polar-centroid": _polar_centroid,
    "santalo": _santalo,
    "half-ball": _half_ball,
    "reproduce": _reproduce,
}


def _check(name, ok, detail):
    return {"name": name, "pass": bool(ok), "detail": detail}


def _estimate(est: volmc.VolumeEstimate) -> dict:
    return {
        "log_value": est.log_value,
        "std_err_log": est.std_err_log,
        "std_err": est.std_err,
        "samples": est.samples,
        "method": est.method,
    }


def _section(sec: profile.SectionVolume) -> dict:
    return {
        "s": sec.s,
        "log_volume": sec.log_value,
        "std_err_log": sec.std_err_log,
        "fraction": float(sec.fraction),
        "fraction_err": float(sec.fraction_err),
        "factorization": sec.factorization,
        "log_envelope": sec.log_envelope,
        "method": sec.estimate.method,
    }


def _centroid(res: profile.PolarCentroid) -> dict:
    return {
        "height": res.height,
        "err": res.err,
        "stat_err": res.stat_err,
        "quad_err": res.quad_err,
        "tail_bound": res.tail_bound,
        "window": list(res.window),
        "tail_fraction": res.tail_fraction,
        "analytic_bound_sections": int(res.diagnostics["analytic_bound_sections"]),
    }


def _make_body(kind: str, n: int, lam: float):
    if kind == "half-ball":
        return make_half_ball(n)
    if kind == "shifted-ball":
        center = [lam] + [0.0] * (n - 1)
        return make_ellipsoid(center, [1.0] * n)
    p = {"ball": 2, "cross": 1, "cube": math.inf}[kind]
    return make_lp_ball(p, n)


# ---------------------------------------------------------------------------
# output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    x = float(obj)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], obj


def render(report: dict, fmt: str) -> str:
    report = _jsonable(report)
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for key, value in _flatten(report):
        w.writerow([key, json.dumps(value) if isinstance(value, bool) else value])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument parsing


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=_positive_int, default=200)
    common.add_argument("--a", type=_positive_float, default=1.0)
    common.add_argument("--b", type=_positive_float, default=1.0 / (math.e - 1.0))
    common.add_argument("--samples", type=_positive_int, default=100_000)
    common.add_argument("--grid-points", type=_positive_int, default=64)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--gamma", type=_positive_float, default=0.05)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--quiet", action="store_true", help="suppress progress on stderr")

    parser = argparse.ArgumentParser(prog="santalo-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ball-volume", parents=[common], help="volume of the lp unit ball")
    p.add_argument("--p", default="2")
    p = sub.add_parser("mixed-volume", parents=[common], help="mixed volumes of ball and cube")
    p.add_argument("--t", type=float, default=1.0)
    sub.add_parser("centroid-hull", parents=[common], help="centroid height of the hull body")
    p = sub.add_parser("intersect", parents=[common], help="volume of B_p ∩ s B_q")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", default="1")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--stratified", action="store_true")
    sub.add_parser("sections", parents=[common], help="section volumes of the polar hull")
    p = sub.add_parser("polar-centroid", parents=[common], help="centroid height of the polar hull")
    p.add_argument("--recenter", action="store_true", help="move the origin to the hull centroid first")
    p = sub.add_parser("santalo", parents=[common], help="Santalo point of a symmetric body")
    p.add_argument("--body", choices=("half-ball", "ball", "cross", "cube", "shifted-ball"), default="half-ball")
    p.add_argument("--lam", type=float, default=0.3, help="center offset of shifted-ball")
    p.add_argument("--tolerance", type=_positive_float, default=1e-4)
    p.add_argument("--grid", action="store_true", help="planar brute-force grid search")
    p = sub.add_parser("half-ball", parents=[common], help="half-ball centroid and Santalo point sweep")
    p.add_argument("--dims", type=_positive_int, nargs="+", default=[4, 16, 64, 256])
    p.add_argument("--tolerance", type=_positive_float, default=1e-4)
    p = sub.add_parser("reproduce", parents=[common], help="constants, measured separation and checks")
    p.add_argument("--recenter", action="store_true", help="move the origin to the hull centroid first")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "santalo" and args.body in ("half-ball", "ball") and args.dim < 2:
        parser.error("--dim must be at least 2 for this body")
    cfg = RunConfig(args.command, args.dim, args.a, args.b, args.samples, args.grid_points,
                    args.seed, args.gamma, args.format, args.out)
    if not args.quiet:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.INFO)
    extra = {k: v for k, v in vars(args).items()
             if k not in ("command", "dim", "a", "b", "samples", "grid_points", "seed", "gamma",
                          "format", "out", "quiet")}
    report = {"version": __version__, "command": cfg.command, "config": {**asdict(cfg), **extra}}
    try:
        report.update(HANDLERS[cfg.command](cfg, args))
    except (DomainError, DiagnosticsError, UnsupportedError) as exc:
        report = {**report, "error": type(exc).__name__, "message": str(exc)}
        sys.stdout.write(render(report, "json"))
        return 1
    text = render(report, cfg.output_format)
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
