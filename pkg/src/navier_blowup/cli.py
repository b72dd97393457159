"""Command-line entry point.

Exit codes: 0 success, 1 computation failure, 2 usage or range error.
All numbers are written with 17 significant digits; nothing depends on the
environment, so identical arguments give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import acceptance, asymptotics, bubble, greens, projection, reduction, solver
from .errors import InvalidArgumentError, NavierBlowupError
from .greens import BallDomain
from .serialize import fmt, to_json


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _positive(kind):
    def parse(text):
        try:
            val = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not (math.isfinite(val) and val > 0):
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val

    return parse


def _epsilon(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (0.0 < val < 1.0):
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, 1), got {text}")
    return val


def _eps_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, newline="\n")


# ---------------------------------------------------------------------------
# commands


def cmd_constants(args):
    table = bubble.compute_constants()
    if args.json:
        return table.to_json()
    lines = ["name,value,error_estimate"]
    for key, c in table.to_dict().items():
        lines.append(f"{key},{fmt(c['value'])},{fmt(c['error_estimate'])}")
    return "\n".join(lines) + "\n"


def cmd_robin(args):
    ball = BallDomain(radius=args.radius)
    rows = greens.tabulate_robin(ball, args.points, args.method)
    return greens.robin_csv(rows)


def cmd_project_check(args):
    ball = BallDomain(radius=args.radius)
    b = bubble.Bubble(lam=args.lam)
    exact = projection.project_closed_form_ball(b, ball)
    numeric = projection.project_numeric_radial(b, ball)
    r = np.linspace(0.0, ball.radius, args.points)
    peak = float(exact.value(0.0))
    th = exact.theta(r)
    delta = bubble.radial_value(b.lam, r)
    f_sup = projection.theta_remainder_sup(b, ball)
    summary = {
        "lambda": b.lam,
        "radius": ball.radius,
        "closed_vs_numeric": float(np.max(np.abs(exact.value(r) - numeric.value(r)))) / peak,
        "boundary_value": float(exact.value(ball.radius)),
        "boundary_laplacian": float(exact.laplacian(ball.radius)),
        "theta_min": float(np.min(th)),
        "theta_minus_delta_max": float(np.max(th - delta)),
        "theta_norm": exact.theta_norm(),
        "remainder_sup": f_sup,
        "remainder_scaled": f_sup * b.lam**2.5 * ball.radius**3,
    }
    if args.out:
        _emit(projection.projection_csv(b, ball, args.points), args.out)
    return to_json(summary)


def _read_warm(path):
    try:
        data = json.loads(Path(path).read_text())
        sp = data["shooting_parameters"]
        return float(sp["u0"]), float(sp["w0"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"cannot read warm start from {path}: {exc}") from exc


def cmd_solve(args):
    ball = BallDomain(radius=args.radius)
    init = _read_warm(args.warm) if args.warm else None
    sol = solver.solve_radial(args.eps, ball, init=init)
    fit = solver.decompose(sol)
    text = solver.solution_json(sol, fit)
    if args.out:
        _emit(solver.solution_csv(sol), args.out + ".csv")
        _emit(text, args.out + ".json")
        return ""
    return text


def cmd_sweep(args):
    ball = BallDomain(radius=args.radius)
    rows = asymptotics.run_sweep(args.eps, ball)
    if args.summary:
        _emit(asymptotics.summary_json(asymptotics.sweep_summary(rows, ball)), args.summary)
    return asymptotics.sweep_csv(rows)


def cmd_reduce(args):
    ball = BallDomain(radius=args.radius)
    lam_direct = None
    if args.compare:
        try:
            rows = asymptotics.read_sweep_csv(Path(args.compare).read_text())
        except OSError as exc:
            raise InvalidArgumentError(f"cannot read {args.compare}: {exc}") from exc
        match = [r for r in rows if abs(r.epsilon - args.eps) <= 1e-12 * args.eps]
        if not match:
            raise InvalidArgumentError(f"no row with epsilon={args.eps:g} in {args.compare}")
        lam_direct = match[0].lambda_fit
    sol = reduction.solve_reduced(args.eps, ball)
    return reduction.report_json(reduction.reduced_report(sol, lam_direct))


def cmd_verify_all(args):
    text, ok = acceptance.verify_all()
    return text, (0 if ok else 1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="navier-blowup", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("constants", help="print the constant table")
    p.add_argument("--json", action="store_true", help="JSON instead of CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("robin", help="tabulate phi along a radius")
    p.add_argument("--points", type=_positive(int), default=11)
    p.add_argument("--radius", type=_positive(float), default=1.0)
    p.add_argument("--method", choices=("composition", "double-poisson"), default="composition")
    p.add_argument("--out")
    p.set_defaults(func=cmd_robin)

    p = sub.add_parser("project-check", help="closed-form vs numeric projection of a centred bubble")
    p.add_argument("--lambda", dest="lam", type=_positive(float), required=True)
    p.add_argument("--radius", type=_positive(float), default=1.0)
    p.add_argument("--points", type=_positive(int), default=128)
    p.add_argument("--out", help="CSV of the profiles")
    p.set_defaults(func=cmd_project_check)

    p = sub.add_parser("solve", help="radial solution at one epsilon")
    p.add_argument("--eps", type=_epsilon, required=True)
    p.add_argument("--radius", type=_positive(float), default=1.0)
    p.add_argument("--warm", help="JSON of a previous solve to seed the search")
    p.add_argument("--out", help="write PREFIX.csv and PREFIX.json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve along a decreasing list of epsilon")
    p.add_argument("--eps", type=_eps_list, default=list(asymptotics.DEFAULT_SWEEP))
    p.add_argument("--radius", type=_positive(float), default=1.0)
    p.add_argument("--out")
    p.add_argument("--summary", help="JSON with the extrapolated limits")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reduce", help="solve the reduced system at one epsilon")
    p.add_argument("--eps", type=_epsilon, required=True)
    p.add_argument("--radius", type=_positive(float), default=1.0)
    p.add_argument("--compare", help="sweep CSV with a row at the same epsilon")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("verify-all", help="run the acceptance checks")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_all)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        out = args.func(args)
    except InvalidArgumentError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except NavierBlowupError as exc:
        print(f"{parser.prog}: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    code = 0
    if isinstance(out, tuple):
        out, code = out
    if out:
        _emit(out, getattr(args, "out", None) if args.command not in ("solve", "project-check") else None)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
