"""Sweeps in ``eps`` and extrapolation of the blow-up rates.

As ``eps -> 0`` the radial solutions concentrate at the centre with

    eps * |u|_inf^2  ->  c1 c0^2 phi(0) / c2,      eps * lam  ->  c1 phi(0) / c2,

and the scale balances as ``c2 eps - c1 phi(0) / lam = O(eps^2)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .bubble import compute_constants
from .errors import InvalidArgumentError, NoConvergenceError
from .greens import BallDomain, robin
from .serialize import fmt, to_json
from .solver import decompose, solve_radial

DEFAULT_SWEEP = (0.4, 0.2, 0.1, 0.05, 0.025)
CSV_COLUMNS = (
    "epsilon",
    "sup_norm",
    "lambda_fit",
    "alpha_fit",
    "v_norm",
    "eps_supnorm_sq",
    "balance_residual",
)


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    sup_norm: float
    lambda_fit: float
    alpha_fit: float
    v_norm: float
    eps_supnorm_sq: float
    balance_residual: float

    @property
    def eps_lambda(self) -> float:
        return self.epsilon * self.lambda_fit

    @property
    def peak_ratio(self) -> float:
        """``c0^-2 |u|_inf^2 / lam``."""
        return self.sup_norm**2 / (compute_constants().c0.value ** 2 * self.lambda_fit)


def robin_center(ball: BallDomain) -> float:
    return robin(ball, ball.center).value


def limit_targets(ball: BallDomain) -> dict:
    k = compute_constants()
    phi = robin_center(ball)
    c0, c1, c2 = k.c0.value, k.c1.value, k.c2.value
    return {
        "phi0": phi,
        "eps_supnorm_sq": c1 * c0**2 * phi / c2,
        "eps_lambda": c1 * phi / c2,
    }


def _balance(eps, lam, phi, c1, c2):
    return c2 * eps - c1 * phi / lam


def run_sweep(eps_list=DEFAULT_SWEEP, ball: BallDomain | None = None) -> list[SweepRow]:
    """Solve and decompose at each ``eps``, warm-starting from the previous row."""
    return run_sweep_detailed(eps_list, ball)[0]


def run_sweep_detailed(eps_list=DEFAULT_SWEEP, ball: BallDomain | None = None):
    """``run_sweep`` that also returns the solutions and fits behind each row."""
    ball = ball or BallDomain()
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise InvalidArgumentError("empty sweep")
    if any(not (0.0 < e <= 0.5) for e in eps_list):
        raise InvalidArgumentError("sweep values must lie in (0, 0.5]")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidArgumentError("sweep values must be strictly decreasing")
    k = compute_constants()
    c1, c2 = k.c1.value, k.c2.value
    phi = robin_center(ball)
    rows: list[SweepRow] = []
    sols, fits = [], []
    warm = None
    for eps in eps_list:
        try:
            sol = solve_radial(eps, ball, init=warm)
            fit = decompose(sol)
        except NoConvergenceError as exc:
            diag = dict(exc.diagnostics)
            diag.update(failed_epsilon=eps, partial_rows=rows)
            raise NoConvergenceError(f"sweep failed at eps={eps:g}: {exc}", diag) from exc
        warm = sol.shooting_parameters
        sols.append(sol)
        fits.append(fit)
        rows.append(
            SweepRow(
                epsilon=eps,
                sup_norm=sol.sup_norm,
                lambda_fit=fit.lam,
                alpha_fit=fit.alpha,
                v_norm=fit.v_norm,
                eps_supnorm_sq=eps * sol.sup_norm**2,
                balance_residual=_balance(eps, fit.lam, phi, c1, c2),
            )
        )
    return rows, sols, fits


def _column(rows, column):
    if column == "eps_lambda":
        return np.array([r.eps_lambda for r in rows])
    if column not in CSV_COLUMNS:
        raise InvalidArgumentError(f"unknown column {column!r}")
    return np.array([getattr(r, column) for r in rows], dtype=float)


def _fit_three(eps, vals):
    A = np.stack([np.ones(3), eps, eps * np.log(eps)], axis=1)
    return float(np.linalg.solve(A, vals)[0])


def extrapolate_limit(rows, column: str) -> tuple[float, float]:
    """Limit ``L`` of ``value(eps) = L + A eps + B eps log eps`` through the last three rows.

    The error estimate is the change of ``L`` when the window is moved one
    row back (``nan`` with exactly three rows).
    """
    if len(rows) < 3:
        raise InvalidArgumentError("extrapolation needs at least three rows")
    eps = np.array([r.epsilon for r in rows])
    ratios = eps[1:] / eps[:-1]
    if np.any(np.abs(ratios / ratios[0] - 1.0) > 1e-9):
        raise InvalidArgumentError("extrapolation needs a geometric sweep")
    vals = _column(rows, column)
    best = _fit_three(eps[-3:], vals[-3:])
    err = math.nan
    if len(rows) >= 4:
        err = abs(best - _fit_three(eps[-4:-1], vals[-4:-1]))
    return best, err


def balance_residuals(rows, constants=None, phi: float | None = None, ball=None) -> list[float]:
    """``c2 eps - c1 phi(0) / lam_fit`` per row, optionally with other constants ``(c1, c2)``."""
    k = compute_constants()
    c1, c2 = constants if constants is not None else (k.c1.value, k.c2.value)
    phi = phi if phi is not None else robin_center(ball or BallDomain())
    return [_balance(r.epsilon, r.lambda_fit, phi, c1, c2) for r in rows]


def balance_ratios(rows, residuals) -> list[float]:
    """Ratios of ``residual / eps^2`` between consecutive rows."""
    norm = [res / r.epsilon**2 for r, res in zip(rows, residuals)]
    return [b / a for a, b in zip(norm, norm[1:])]


def balance_spread(rows, residuals) -> float:
    """``max / min`` of ``|residual| / eps^2`` over the sweep."""
    norm = np.abs([res / r.epsilon**2 for r, res in zip(rows, residuals)])
    return float(np.max(norm) / np.min(norm))


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([fmt(v) for v in astuple(row)])
    return buf.getvalue()


def read_sweep_csv(text: str) -> list[SweepRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise InvalidArgumentError("not a sweep table: unexpected header")
    names = [f.name for f in fields(SweepRow)]
    return [SweepRow(**{k: float(rec[k]) for k in names}) for rec in reader]


def sweep_summary(rows, ball: BallDomain | None = None, tolerance: float = 0.05) -> dict:
    ball = ball or BallDomain()
    targets = limit_targets(ball)
    out = {"targets": targets, "tolerance": tolerance, "limits": {}}
    ok = True
    if len(rows) >= 3:
        for col, key in (("eps_supnorm_sq", "eps_supnorm_sq"), ("eps_lambda", "eps_lambda")):
            L, err = extrapolate_limit(rows, col)
            rel = abs(L - targets[key]) / targets[key]
            passed = rel <= tolerance
            ok &= passed
            out["limits"][key] = {
                "value": L,
                "error_estimate": None if math.isnan(err) else err,
                "relative_gap": rel,
                "pass": passed,
            }
    else:
        ok = False
    out["pass"] = bool(ok)
    return out


def summary_json(summary: dict) -> str:
    return to_json(summary)
