"""Acceptance checks with pinned tolerances.

Each check returns a ``Criterion``; ``render`` turns a list of them into the
fixed-format pass/fail table printed by ``verify-all``. No timings appear in
the table so that repeated runs are byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import asymptotics, bubble, greens, projection, reduction, solver
from .bubble import Bubble
from .greens import BallDomain

# pinned tolerances
C1_TOL = 1e-10
C2_SCHEME_TOL = 1e-8
PDE_TOL = 1e-6
PDE_SAMPLES = 1000
PDE_T_MAX = 10.0
SOBOLEV_TOL = 1e-8
PROJECTION_TOL = 1e-6
BOUNDARY_TOL = 1e-10
THETA_SLACK = 1e-12
SCALING_SPREAD = 0.5
SYMMETRY_TOL = 1e-8
GRADIENT_TOL = 1e-8
METHOD_TOL = 1e-5
DECOMPOSE_TOL = 1e-10
LIMIT_TOL = 0.05
BALANCE_FACTOR = 4.0
PEAK_TOL = 0.02
REDUCED_TOL = 0.10
BOUND_FACTOR = 2.0

SEED = 20240917
SWEEP = asymptotics.DEFAULT_SWEEP


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d} {self.name}: {self.detail}"


def _g(x) -> str:
    return format(float(x), ".6g")


# ---------------------------------------------------------------------------
# shared computations


class _Cache:
    def __init__(self):
        self.sweep = None

    def sweep_result(self):
        if self.sweep is None:
            self.sweep = asymptotics.run_sweep_detailed(SWEEP, BallDomain())
        return self.sweep


# ---------------------------------------------------------------------------
# criteria


def constants_integrity(cache=None) -> Criterion:
    k = bubble.compute_constants()
    oracle = 105.0**0.25 * 16.0 * math.pi**2
    rel1 = abs(k.c1.value - oracle) / oracle
    c2_theta, _ = bubble.c2_theta_scheme()
    rel2 = abs(k.c2.value - c2_theta) / abs(c2_theta)
    ok = rel1 <= C1_TOL and rel2 <= C2_SCHEME_TOL and k.c2.value > 0
    detail = f"c1 rel {_g(rel1)} (<= {C1_TOL:g}); c2 schemes rel {_g(rel2)} (<= {C2_SCHEME_TOL:g}); c2 = {_g(k.c2.value)}"
    return Criterion(1, "constants integrity", ok, detail)


def bubble_identities(cache=None) -> Criterion:
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(PDE_SAMPLES):
        b = Bubble(rng.uniform(-1, 1, 5), float(np.exp(rng.uniform(np.log(0.5), np.log(50.0)))))
        e = rng.normal(size=5)
        x = b.a + rng.uniform(0.0, PDE_T_MAX) / b.lam * e / np.linalg.norm(e)
        res = bubble.bubble_pde_residual(b, x)
        worst = max(worst, abs(res) / float(bubble.eval_bubble(b, x)) ** 9)
    quotients = []
    for _ in range(5):
        b = Bubble(rng.uniform(-2, 2, 5), float(np.exp(rng.uniform(np.log(0.1), np.log(100.0)))))
        quotients.append(bubble.sobolev_quotient(b))
    q = np.array(quotients)
    spread = float((q.max() - q.min()) / q.mean())
    ok = worst <= PDE_TOL and spread <= SOBOLEV_TOL
    detail = f"max PDE residual {_g(worst)} (<= {PDE_TOL:g}); quotient spread {_g(spread)} (<= {SOBOLEV_TOL:g})"
    return Criterion(2, "bubble identities", ok, detail)


def projection_closed_form(cache=None) -> Criterion:
    ball = BallDomain()
    worst_match = worst_bdry = 0.0
    theta_ok = True
    r = np.linspace(0.0, ball.radius, 2001)
    for lam in (10.0, 100.0, 1000.0):
        b = Bubble(lam=lam)
        exact = projection.project_closed_form_ball(b, ball)
        numeric = projection.project_numeric_radial(b, ball)
        peak = float(exact.value(0.0))
        worst_match = max(worst_match, float(np.max(np.abs(exact.value(r) - numeric.value(r)))) / peak)
        lap_peak = abs(float(exact.laplacian(0.0)))
        bdry = max(abs(float(exact.value(ball.radius))) / peak,
                   abs(float(exact.laplacian(ball.radius))) / lap_peak)
        worst_bdry = max(worst_bdry, bdry)
        th = exact.theta(r)
        delta = bubble.radial_value(lam, r)
        slack = THETA_SLACK * peak
        theta_ok &= bool(np.all(th >= -slack) and np.all(th <= delta + slack))
    ok = worst_match <= PROJECTION_TOL and worst_bdry <= BOUNDARY_TOL and theta_ok
    detail = (f"closed vs numeric {_g(worst_match)} (<= {PROJECTION_TOL:g}); "
              f"boundary {_g(worst_bdry)} (<= {BOUNDARY_TOL:g}); 0 <= theta <= delta {theta_ok}")
    return Criterion(3, "projection closed form", ok, detail)


def remainder_scaling(cache=None) -> Criterion:
    vals = []
    for d in (0.5, 1.0, 2.0):
        ball = BallDomain(radius=d)
        for lam in (20.0, 40.0, 80.0, 160.0):
            f = projection.theta_remainder_sup(Bubble(lam=lam), ball)
            vals.append(f * lam**2.5 * d**3)
    v = np.array(vals)
    spread = float(v.max() / v.min() - 1.0)
    ok = spread < SCALING_SPREAD
    detail = f"sup|f| lam^2.5 d^3 in [{_g(v.min())}, {_g(v.max())}], spread {_g(spread)} (< {SCALING_SPREAD:g})"
    return Criterion(4, "remainder scaling", ok, detail)


def robin_function(cache=None) -> Criterion:
    ball = BallDomain()
    rng = np.random.default_rng(SEED + 1)
    sym = 0.0
    for _ in range(5):
        x, y = (rng.uniform(-0.4, 0.4, 5) for _ in range(2))
        gxy = greens.biharmonic_green(ball, x, y).value
        gyx = greens.biharmonic_green(ball, y, x).value
        sym = max(sym, abs(gxy - gyx) / abs(gxy))
    grad = float(np.linalg.norm(greens.robin_gradient(ball, ball.center)))
    eig = float(np.min(np.linalg.eigvalsh(greens.robin_hessian(ball, ball.center))))
    comp = greens.robin(ball, ball.center, "composition").value
    dp = greens.robin(ball, ball.center, "double-poisson").value
    rel = abs(comp - dp) / abs(dp)
    ok = sym <= SYMMETRY_TOL and grad <= GRADIENT_TOL and eig > 0 and rel <= METHOD_TOL
    detail = (f"symmetry {_g(sym)} (<= {SYMMETRY_TOL:g}); |grad phi(0)| {_g(grad)} (<= {GRADIENT_TOL:g}); "
              f"min Hessian eigenvalue {_g(eig)} (> 0); methods rel {_g(rel)} (<= {METHOD_TOL:g})")
    return Criterion(5, "Robin function", ok, detail)


def direct_solver(cache) -> Criterion:
    _, sols, _ = cache.sweep_result()
    res = max(s.residual_norm for s in sols)
    bdry = max(max(s.boundary_defect) for s in sols)
    positive = all(bool(np.all(s.profile.u[:-1] > 0)) for s in sols)
    ball = BallDomain()
    alpha, lam = 1.3, 57.0
    exact = solver.projected_bubble_solution(lam, ball, alpha)
    fit = solver.decompose(exact)
    rec = max(abs(fit.alpha - alpha) / alpha, abs(fit.lam - lam) / lam)
    ok = (res <= solver.RESIDUAL_TOL and bdry <= solver.BOUNDARY_TOL and positive
          and rec <= DECOMPOSE_TOL)
    detail = (f"max residual {_g(res)} (<= {solver.RESIDUAL_TOL:g}); boundary {_g(bdry)} "
              f"(<= {solver.BOUNDARY_TOL:g}); positive {positive}; fit recovery {_g(rec)} (<= {DECOMPOSE_TOL:g})")
    return Criterion(6, "direct solver", ok, detail)


def limit_law(cache) -> Criterion:
    rows, _, _ = cache.sweep_result()
    summary = asymptotics.sweep_summary(rows, BallDomain(), LIMIT_TOL)
    lim = summary["limits"]
    tg = summary["targets"]
    detail = (f"eps|u|^2 -> {_g(lim['eps_supnorm_sq']['value'])} vs {_g(tg['eps_supnorm_sq'])} "
              f"(gap {_g(lim['eps_supnorm_sq']['relative_gap'])}); "
              f"eps lam -> {_g(lim['eps_lambda']['value'])} vs {_g(tg['eps_lambda'])} "
              f"(gap {_g(lim['eps_lambda']['relative_gap'])}); tol {LIMIT_TOL:g}")
    return Criterion(7, "limit law", summary["pass"], detail)


def scale_balance(cache) -> Criterion:
    rows, _, _ = cache.sweep_result()
    res = asymptotics.balance_residuals(rows)
    ratios = asymptotics.balance_ratios(rows, res)
    spread = asymptotics.balance_spread(rows, res)
    ok = all(1.0 / BALANCE_FACTOR <= q <= BALANCE_FACTOR for q in ratios) and spread <= BALANCE_FACTOR
    detail = f"ratios [{', '.join(_g(q) for q in ratios)}]; spread {_g(spread)} (<= {BALANCE_FACTOR:g})"
    return Criterion(8, "scale balance", ok, detail)


def peak_height(cache) -> Criterion:
    rows, _, _ = cache.sweep_result()
    ratios = [r.peak_ratio for r in rows]
    gaps = [abs(q - 1.0) for q in ratios]
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    ok = gaps[-1] <= PEAK_TOL and monotone
    detail = (f"c0^-2|u|^2/lam [{', '.join(_g(q) for q in ratios)}]; "
              f"gap at eps={_g(rows[-1].epsilon)} {_g(gaps[-1])} (<= {PEAK_TOL:g}); monotone {monotone}")
    return Criterion(9, "peak height", ok, detail)


def reduced_consistency(cache) -> Criterion:
    rows, _, _ = cache.sweep_result()
    by_eps = {r.epsilon: r for r in rows}
    ball = BallDomain()
    coarse = reduction.solve_reduced(0.05, ball)
    fine = reduction.solve_reduced(0.025, ball)
    lam_direct = by_eps[0.05].lambda_fit
    gap = abs(coarse.lambda_predicted - lam_direct) / lam_direct
    scale = (0.025 * abs(math.log(0.025))) / (0.05 * abs(math.log(0.05)))
    q_beta = abs(fine.state.beta / coarse.state.beta) / scale
    q_rho = abs(fine.state.rho / coarse.state.rho) / scale
    within = all(1.0 / BOUND_FACTOR <= q <= BOUND_FACTOR for q in (q_beta, q_rho))
    ok = gap <= REDUCED_TOL and within
    detail = (f"lam reduced {_g(coarse.lambda_predicted)} vs direct {_g(lam_direct)} "
              f"(gap {_g(gap)}, <= {REDUCED_TOL:g}); halving ratios / (eps|log eps|) ratio: "
              f"beta {_g(q_beta)}, rho {_g(q_rho)} (factor {BOUND_FACTOR:g})")
    return Criterion(10, "reduced consistency", ok, detail)


CHECKS = (
    constants_integrity,
    bubble_identities,
    projection_closed_form,
    remainder_scaling,
    robin_function,
    direct_solver,
    limit_law,
    scale_balance,
    peak_height,
    reduced_consistency,
)


def _guarded(check, cache, number) -> Criterion:
    try:
        return check(cache)
    except Exception as exc:  # a crashed check is a failed check
        return Criterion(number, check.__name__.replace("_", " "), False, f"error: {type(exc).__name__}: {exc}")


def evaluate(checks=CHECKS) -> list[Criterion]:
    cache = _Cache()
    return [_guarded(c, cache, i) for i, c in enumerate(checks, start=1)]


def render(results: list[Criterion]) -> str:
    lines = [c.line() for c in results]
    passed = sum(c.passed for c in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(lines) + "\n"


def determinism(first: list[Criterion]) -> Criterion:
    """Re-evaluate criteria 1-10 from cold caches and compare the rendered lines."""
    bubble.compute_constants.cache_clear()
    second = evaluate()
    same = [c.line() for c in first] == [c.line() for c in second]
    return Criterion(11, "determinism", same, f"repeat evaluation byte-identical {same}")


def verify_all() -> tuple[str, bool]:
    results = evaluate()
    results.append(determinism(results))
    return render(results), all(c.passed for c in results)
