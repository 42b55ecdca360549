"""Command-line front end.

Subcommands ``construct``, ``integrate``, ``converge`` and ``measure``
write CSV or JSON files; nothing is plotted. Options may also come from a
JSON file given with ``--config``; explicit flags win over the file, which
wins over the built-in defaults.

Exit codes: 0 ok, 1 usage, 2 radial tangency, 3 singularity, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import io as pio
from .analysis import (
    FitError,
    chord_decay_study,
    bound_study,
    coverage_convergence,
    integrator_order_study,
)
from .construction import ConstructionError, RadialTangencyError, construct
from .force_measures import ratio_convergence, sample
from .geometry import (
    Circle,
    CustomSampled,
    DegenerateCurveError,
    DomainError,
    EllipseCenter,
    EllipseFocus,
    PlanarCurve,
    Segment,
)
from .integrator import ForceLaw, SingularityError, integrate

EXIT_OK, EXIT_USAGE, EXIT_TANGENCY, EXIT_SINGULAR, EXIT_NUMERIC = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text, count=None, what="value"):
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        try:
            vals = [float(v) for v in str(text).split(",") if v.strip() != ""]
        except ValueError:
            raise UsageError(f"cannot parse {what} {text!r}") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"{what} needs {count} comma-separated numbers, got {text!r}")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what} must be finite, got {text!r}")
    return vals


def _ints(text, what="n list"):
    vals = _floats(text, what=what)
    if any(v != int(v) for v in vals):
        raise UsageError(f"{what} must contain integers, got {text!r}")
    return [int(v) for v in vals]


def parse_curve(spec: str, domain=None) -> PlanarCurve:
    """``circle:R``, ``ellipse-focus:a,e``, ``ellipse-center:a,b``, ``segment`` or ``sampled:FILE``."""
    kind, _, args = spec.partition(":")
    kw = {} if domain is None else {"domain": tuple(_floats(domain, 2, "domain"))}
    try:
        if kind == "circle":
            (r,) = _floats(args, 1, "circle radius")
            return Circle(radius=r, **kw)
        if kind == "ellipse-focus":
            a, e = _floats(args, 2, "ellipse-focus a,e")
            return EllipseFocus(a=a, e=e, **kw)
        if kind == "ellipse-center":
            a, b = _floats(args, 2, "ellipse-center a,b")
            return EllipseCenter(a=a, b=b, **kw)
        if kind == "segment":
            return Segment(**kw)
        if kind == "sampled":
            curve = CustomSampled.from_csv(args)
            return curve.with_domain(*kw["domain"]) if kw else curve
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad curve {spec!r}: {exc}") from None
    raise UsageError(f"unknown curve kind {kind!r}")


def parse_law(spec: str) -> ForceLaw:
    """``linear:k``, ``inverse-square:GM`` or ``power:A,p``."""
    kind, _, args = spec.partition(":")
    try:
        if kind == "linear":
            return ForceLaw.linear(*_floats(args, 1, "linear k"))
        if kind == "inverse-square":
            return ForceLaw.inverse_square(*_floats(args, 1, "inverse-square GM"))
        if kind == "power":
            return ForceLaw.power_law(*_floats(args, 2, "power A,p"))
    except ValueError as exc:
        raise UsageError(f"bad force law {spec!r}: {exc}") from None
    raise UsageError(f"unknown force law {kind!r}")


@dataclass
class RunConfig:
    command: str
    study: str | None = None
    curve: str = "circle:1"
    domain: str | None = None
    center: str = "0,0,0"
    u0: float = 0.0
    s1: float | None = None
    max_steps: int = 10_000
    law: str = "inverse-square:1"
    r0: str | None = None
    v0: str | None = None
    T: float = 2 * math.pi
    n: str | None = None
    L: float | None = None
    length: float = 1.0
    h: float | None = None
    out: str | None = None
    format: str | None = None
    emit_plot_data: bool = False
    report: bool = False
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("u0", "T", "length"):
            v = getattr(self, name)
            if not math.isfinite(float(v)):
                raise UsageError(f"--{name} must be finite")
        for name in ("s1", "L", "h"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(float(v)):
                raise UsageError(f"--{name} must be finite")
        if self.format is None and self.out is not None:
            self.format = "csv" if Path(self.out).suffix.lower() == ".csv" else "json"
        if self.format is None:
            self.format = "json"
        if self.format not in ("csv", "json"):
            raise UsageError(f"--format must be csv or json, got {self.format!r}")


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults < ``--config`` file < explicit flags."""
    merged = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(data) - _FIELDS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(data)
    merged.update({k: v for k, v in vars(args).items()
                   if k in _FIELDS and v is not None and v is not False})
    merged["command"] = args.command
    for key in ("n", "center", "r0", "v0", "domain"):
        if isinstance(merged.get(key), list):
            merged[key] = ",".join(str(v) for v in merged[key])
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def _common(p, out=True):
    p.add_argument("--config", help="JSON file with option values (flags override it)")
    if out:
        p.add_argument("--out", help="output file (default: standard output)")
        p.add_argument("--format", choices=["csv", "json"],
                       help="output format (default from --out suffix, else json)")
        p.add_argument("--emit-plot-data", action="store_true", dest="emit_plot_data",
                       help="also write whitespace-separated columns to OUT.dat")


def _curve_args(p):
    p.add_argument("--curve", help="circle:R | ellipse-focus:a,e | ellipse-center:a,b | "
                                   "segment | sampled:FILE.csv")
    p.add_argument("--domain", help="parameter interval umin,umax")
    p.add_argument("--center", help="force centre x,y,z (default 0,0,0)")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polyorb", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("construct", help="curve-constrained polygon construction")
    _curve_args(p)
    p.add_argument("--u0", type=float, help="starting curve parameter")
    p.add_argument("--s1", type=float, help="first chord length (required)")
    p.add_argument("--max-steps", type=int, dest="max_steps", help="maximum number of chords")
    _common(p)

    p = sub.add_parser("integrate", help="impulse (drift-kick) integration")
    p.add_argument("--law", help="linear:k | inverse-square:GM | power:A,p")
    p.add_argument("--r0", help="initial position x,y,z (required)")
    p.add_argument("--v0", help="initial velocity x,y,z (required)")
    p.add_argument("--center", help="force centre x,y,z (default 0,0,0)")
    p.add_argument("--T", type=float, help="total time (default 2*pi)")
    p.add_argument("--n", help="number of steps")
    _common(p)

    p = sub.add_parser("converge", help="convergence studies over a list of n")
    p.add_argument("study", choices=["chords", "coverage", "ratio", "order", "bound"])
    _curve_args(p)
    p.add_argument("--u0", "--u", type=float, dest="u0", help="curve parameter of the start/point")
    p.add_argument("--L", type=float, help="target length; first chord is L/n")
    p.add_argument("--length", type=float, help="ratio study: chord is length/n (default 1)")
    p.add_argument("--n", help="comma-separated increasing n values (at least 3)")
    p.add_argument("--law", help="order study: force law")
    p.add_argument("--r0", help="order study: initial position")
    p.add_argument("--v0", help="order study: initial velocity")
    p.add_argument("--T", type=float, help="order study: total time")
    p.add_argument("--report", action="store_true", help="print a summary table")
    _common(p)

    p = sub.add_parser("measure", help="point-wise polygon and tangent-line force measures")
    _curve_args(p)
    p.add_argument("--u0", "--u", type=float, dest="u0", help="curve parameter")
    p.add_argument("--n", help="chord is length/n (default 64)")
    p.add_argument("--length", type=float, help="chord is length/n (default 1)")
    p.add_argument("--h", type=float, help="arc offset for the tangent measure "
                                           "(default: extrapolated to zero)")
    _common(p)
    return parser


def _emit(cfg: RunConfig, text: str, plot=None):
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        pio.write_text(cfg.out, text)
        if cfg.emit_plot_data and plot is not None:
            pio.write_text(str(cfg.out) + ".dat", pio.columns_text(*plot))


def _center(cfg):
    return _floats(cfg.center, 3, "--center")


def cmd_construct(cfg: RunConfig) -> int:
    if cfg.s1 is None:
        raise UsageError("--s1 is required")
    if cfg.s1 <= 0:
        raise UsageError("--s1 must be positive")
    curve = parse_curve(cfg.curve, cfg.domain)
    code = EXIT_OK
    try:
        orbit = construct(curve, _center(cfg), cfg.u0, cfg.s1, int(cfg.max_steps))
    except RadialTangencyError as exc:
        print(f"polyorb: radial tangency: {exc}", file=sys.stderr)
        if exc.orbit is None:
            return EXIT_TANGENCY
        orbit, code = exc.orbit, EXIT_TANGENCY
    desc = curve.describe()
    text = (pio.dumps(pio.orbit_to_dict(orbit, desc)) if cfg.format == "json"
            else pio.orbit_to_csv(orbit, desc))
    v = orbit.vertices
    _emit(cfg, text, (["u", "x", "y", "z"], [orbit.params, v[:, 0], v[:, 1], v[:, 2]]))
    print(f"construct: {len(orbit)} vertices, termination={orbit.termination.value}, "
          f"coverage={orbit.coverage():.12g}", file=sys.stderr)
    return code


def _step_count(cfg, default=None):
    if cfg.n is None:
        if default is None:
            raise UsageError("--n is required")
        return default
    vals = _ints(cfg.n, "--n")
    if len(vals) != 1 or vals[0] < 1:
        raise UsageError("--n must be a single positive integer")
    return vals[0]


def cmd_integrate(cfg: RunConfig) -> int:
    if cfg.r0 is None or cfg.v0 is None:
        raise UsageError("--r0 and --v0 are required")
    law = parse_law(cfg.law)
    n = _step_count(cfg, 1000)
    if not cfg.T > 0:
        raise UsageError("--T must be positive")
    traj = integrate(_floats(cfg.r0, 3, "--r0"), _floats(cfg.v0, 3, "--v0"), law,
                     _center(cfg), cfg.T, n)
    text = (pio.dumps(pio.trajectory_to_dict(traj)) if cfg.format == "json"
            else pio.trajectory_to_csv(traj))
    p = traj.positions
    _emit(cfg, text, (["t", "x", "y", "z"], [traj.times, p[:, 0], p[:, 1], p[:, 2]]))
    print(f"integrate: n={n}, momentum drift={traj.max_momentum_drift:.3e}, "
          f"area spread={traj.area_spread():.3e}", file=sys.stderr)
    return EXIT_OK


def _study_length(cfg, curve):
    if cfg.L is not None:
        if cfg.L < 0:
            raise UsageError("--L must be non-negative")
        return cfg.L
    lo, hi = curve.domain
    return curve.arc_length(lo, hi)


def cmd_converge(cfg: RunConfig) -> int:
    if cfg.n is None:
        raise UsageError("--n is required")
    ns = _ints(cfg.n)
    if len(ns) < 3:
        raise UsageError("--n needs at least 3 values for an order fit")
    if any(b <= a for a, b in zip(ns[:-1], ns[1:])) or ns[0] < 1:
        raise UsageError("--n values must be positive and strictly increasing")
    study = cfg.study
    if study == "order":
        if cfg.r0 is None or cfg.v0 is None:
            raise UsageError("order study needs --r0 and --v0")
        report = integrator_order_study(_floats(cfg.r0, 3, "--r0"), _floats(cfg.v0, 3, "--v0"),
                                        parse_law(cfg.law), _center(cfg), cfg.T, ns)
    else:
        curve = parse_curve(cfg.curve, cfg.domain)
        center = _center(cfg)
        if study == "ratio":
            report = ratio_convergence(curve, center, cfg.u0, ns, cfg.length)
        else:
            L = _study_length(cfg, curve)
            fn = {"chords": chord_decay_study, "coverage": coverage_convergence,
                  "bound": bound_study}[study]
            report = fn(curve, center, cfg.u0, L, ns)
            report.extras.setdefault("L", L)
    text = (pio.dumps(report.to_dict()) if cfg.format == "json" else pio.report_to_csv(report))
    _emit(cfg, text, (["n", report.metric_name], [report.n_values, report.metric]))
    print(f"{study}: fit_order={report.log_log_slope:.6g} +/- {report.slope_ci:.2g}, "
          f"extrapolated={report.extrapolated_limit:.12g}")
    if cfg.report:
        print(format_report(report))
    return EXIT_OK


def format_report(report) -> str:
    lines = [f"{'n':>8}  {report.metric_name:>24}"]
    for n, m in zip(report.n_values, report.metric):
        lines.append(f"{int(n):>8}  {m:>24.16g}")
    lines.append(f"slope {report.log_log_slope:.6g} (+/- {report.slope_ci:.2g}), "
                 f"residual {report.residual:.3g}, limit {report.extrapolated_limit:.12g}")
    return "\n".join(lines)


def cmd_measure(cfg: RunConfig) -> int:
    curve = parse_curve(cfg.curve, cfg.domain)
    n = _step_count(cfg, 64)
    s = sample(curve, _center(cfg), cfg.u0, cfg.length / n, cfg.h)
    d = {"u": s.u, "chord": s.scale, "prop1": s.measure_p1, "prop6": s.measure_p6,
         "ratio": s.ratio, "h": cfg.h}
    if cfg.format == "json":
        text = pio.dumps(d)
    else:
        text = "u,chord,prop1,prop6,ratio\n" + ",".join(
            pio.fmt(d[k]) for k in ("u", "chord", "prop1", "prop6", "ratio")) + "\n"
    _emit(cfg, text)
    return EXIT_OK


COMMANDS = {"construct": cmd_construct, "integrate": cmd_integrate,
            "converge": cmd_converge, "measure": cmd_measure}


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"polyorb: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RadialTangencyError as exc:
        print(f"polyorb: radial tangency: {exc}", file=sys.stderr)
        return EXIT_TANGENCY
    except SingularityError as exc:
        print(f"polyorb: singularity: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (FitError, DomainError, DegenerateCurveError) as exc:
        print(f"polyorb: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConstructionError, ArithmeticError, RuntimeError) as exc:
        print(f"polyorb: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"polyorb: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
