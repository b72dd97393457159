"""Radial positive solutions of ``Laplace^2 u = u**(9-eps)`` on a centred ball
with Navier boundary values, and their fit to a projected bubble.

The radial problem is the chain ``u'' + 4u'/r = w``, ``w'' + 4w'/r = u**q``
with ``u'(0) = w'(0) = 0`` and ``u(R) = w(R) = 0``.

Primary method: the equation is invariant under
``u -> mu**(4/(q-1)) u(mu x)``, so every radial solution is a rescaling of
the one with ``u(0) = 1``. Shooting in the single unknown ``W = Laplace u(0)``
for the condition ``w = 0`` at the first zero ``rho`` of ``u``, and rescaling
with ``mu = rho / R``, solves the boundary value problem with a scalar root
find instead of a two-dimensional Newton iteration. ``newton_shoot`` is the
two-parameter Newton shooting in the original variables, used to polish or
to check a solution from a warm start.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from . import bubble as bb
from .errors import (
    FitError,
    InvalidArgumentError,
    NoConvergenceError,
    PositivityViolationError,
    TrivialSolutionError,
)
from .greens import BallDomain
from .numerics import (
    SERIES_START,
    RadialProfile,
    ball_radial_rule,
    clustered_grid,
    radial_laplacian_fd,
)
from .serialize import fmt, to_json
from .projection import closed_form_lam_derivative, project_closed_form_ball, projected_profile

BOUNDARY_TOL = 1e-9
RESIDUAL_TOL = 1e-7
PROFILE_POINTS = 2048


@dataclass
class RadialSolution:
    epsilon: float
    domain: BallDomain
    profile: RadialProfile
    sup_norm: float
    shooting_parameters: tuple[float, float]
    residual_norm: float
    boundary_defect: tuple[float, float] = (0.0, 0.0)
    monotone: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def exponent(self) -> float:
        return 9.0 - self.epsilon

    @property
    def lambda_guess(self) -> float:
        """Bubble scale with the same peak height, ``c0^-2 |u|_inf^2``."""
        return self.sup_norm**2 / bb.C0**2


def _check_eps(eps):
    if not (0.0 < eps < 1.0):
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {eps!r}")


def _check_ball(ball):
    if not ball.is_centered:
        raise InvalidArgumentError("the radial solver needs a ball centred at the origin")


def _chain_rhs(q, power=True):
    def rhs(r, y):
        u, du, w, dw = y
        src = math.copysign(abs(u) ** q, u) if power else 0.0
        return [du, w - 4.0 * du / r, dw, src - 4.0 * dw / r]

    return rhs


def _origin_series(r0, u0, w0, q, power=True):
    """Taylor start ``u = u0 + w0 r^2/10 + f r^4/280``, ``w = w0 + f r^2/10``, ``f = u0**q``."""
    f = math.copysign(abs(u0) ** q, u0) if power else 0.0
    return np.array(
        [
            u0 + w0 * r0**2 / 10.0 + f * r0**4 / 280.0,
            w0 * r0 / 5.0 + f * r0**3 / 70.0,
            w0 + f * r0**2 / 10.0,
            f * r0 / 5.0,
        ]
    )


# ---------------------------------------------------------------------------
# normalized shooting


@dataclass(frozen=True)
class _Shot:
    value: float  # w at the first zero of u, +inf if u turns upward first
    rho: float | None
    sol: object


def _shoot_normalized(W, q, tol, r_max=1e9):
    r0 = SERIES_START
    y0 = _origin_series(r0, 1.0, W, q)

    def hit_zero(r, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1

    def turn(r, y):
        # u increasing while Laplace u > 0: u can no longer reach zero
        return y[1] if y[2] > 0 else -1.0

    turn.terminal = True
    turn.direction = 1
    sol = solve_ivp(
        _chain_rhs(q), (r0, r_max), y0, method="DOP853", rtol=tol, atol=1e-300,
        events=[hit_zero, turn], dense_output=True,
    )
    if sol.t_events[0].size:
        return _Shot(float(sol.y_events[0][0][2]), float(sol.t_events[0][0]), sol)
    return _Shot(math.inf, None, sol)


def _find_root(q, tol, guess=None):
    """Root ``W`` of ``w(rho(W))``; bracketed by a scan around the bubble value."""
    wb = -5.0 / bb.C0**4
    factors = [1.5, 1.2, 1.1, 1.05, 1.02, 1.01, 1.0, 0.99, 0.98, 0.95, 0.9, 0.8]
    scan = [wb * f for f in factors]
    if guess is not None and np.isfinite(guess) and guess < 0:
        scan = sorted(set(scan + [guess * 1.001, guess * 0.999]))
    scan.sort()  # most negative first
    vals = [_shoot_normalized(W, q, tol).value for W in scan]
    for a, b, fa, fb in zip(scan, scan[1:], vals, vals[1:]):
        if np.sign(fa) != np.sign(fb):
            break
    else:
        raise NoConvergenceError("no sign change of the shooting defect", {"scan": scan, "values": vals})

    def g(W):
        v = _shoot_normalized(W, q, tol).value
        return 1e300 if math.isinf(v) else v

    # bisect until both ends are finite so brentq sees a continuous function
    for _ in range(200):
        if np.isfinite(fa) and np.isfinite(fb):
            break
        m = 0.5 * (a + b)
        fm = _shoot_normalized(m, q, tol).value
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b, fb = m, fm
    return brentq(g, a, b, xtol=1e-300, rtol=1e-15, maxiter=300)


def solve_radial(
    eps: float,
    ball: BallDomain | None = None,
    init: tuple[float, float] | None = None,
    tol: float = 1e-13,
    points: int = PROFILE_POINTS,
) -> RadialSolution:
    """Positive radial solution on the centred ball.

    ``init = (u(0), Laplace u(0))`` (for instance from a neighbouring
    ``eps``) only seeds the bracket search; the root is always confirmed by
    a sign change.
    """
    _check_eps(eps)
    ball = ball or BallDomain()
    _check_ball(ball)
    R = ball.radius
    q = 9.0 - eps
    p = 4.0 / (q - 1.0)
    guess = None
    if init is not None:
        u0, w0 = init
        if not (u0 > 0 and np.isfinite(w0)):
            raise InvalidArgumentError("warm start needs u(0) > 0")
        guess = w0 * u0 ** (-(p + 2.0) / p)
    W = _find_root(q, tol, guess)
    shot = _shoot_normalized(W, q, tol)
    if shot.rho is None:
        raise NoConvergenceError("shooting root lost its zero crossing", {"W": W})
    mu = shot.rho / R
    return _assemble(eps, ball, W, shot, mu, points)


def _assemble(eps, ball, W, shot, mu, points):
    q = 9.0 - eps
    p = 4.0 / (q - 1.0)
    R = ball.radius
    sup = mu**p
    lam = sup**2 / bb.C0**2
    grid = clustered_grid(R, 1.0 / lam, points)
    r0 = SERIES_START
    dense_ivp = shot.sol.sol
    scales = np.array([mu**p, mu ** (p + 1), mu ** (p + 2), mu ** (p + 3)])

    def dense(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        s = np.minimum(mu * r, shot.rho)
        out = np.empty((4, r.size))
        inner = s < r0
        if np.any(inner):
            out[:, inner] = np.stack([_origin_series(si, 1.0, W, q) for si in s[inner]], axis=1)
        if np.any(~inner):
            out[:, ~inner] = dense_ivp(s[~inner])
        return out * scales[:, None]

    states = dense(grid).T
    profile = RadialProfile(grid, states, dense, R)
    u_end, w_end = states[-1, 0], states[-1, 2]
    defect = (abs(float(u_end)) / sup, abs(float(w_end)) / abs(mu ** (p + 2) * W))
    sol = RadialSolution(
        epsilon=eps,
        domain=ball,
        profile=profile,
        sup_norm=sup,
        shooting_parameters=(sup, mu ** (p + 2) * W),
        residual_norm=math.nan,
        boundary_defect=defect,
        monotone=bool(np.all(states[1:, 1] <= 1e-8 * sup / R)),
        diagnostics={"normalized_root": W, "zero_radius": shot.rho, "scale": mu},
    )
    sol.residual_norm = residual_norm(sol)
    _verify(sol)
    return sol


def _verify(sol: RadialSolution):
    u = sol.profile.u
    if np.any(u[:-1] <= 0):
        raise PositivityViolationError("solution is not positive inside the ball")
    if max(sol.boundary_defect) > BOUNDARY_TOL:
        raise NoConvergenceError("Navier boundary values not met", {"defect": sol.boundary_defect})
    if not sol.residual_norm <= RESIDUAL_TOL:
        raise NoConvergenceError("ODE residual above tolerance", {"residual": sol.residual_norm})


def residual_norm(sol: RadialSolution, profile: RadialProfile | None = None) -> float:
    """``max |Laplace(w) - u**q| / max u**q`` with ``Laplace w`` re-differenced on the grid."""
    prof = profile or sol.profile
    q = sol.exponent
    u = prof.u
    src = np.sign(u) * np.abs(u) ** q
    lap_w = radial_laplacian_fd(prof.r, prof.lap)
    return float(np.max(np.abs(lap_w - src)) / np.max(np.abs(src)))


# ---------------------------------------------------------------------------
# two-parameter Newton shooting in the original variables


def _shoot_full(u0, w0, q, R, tol, power=True):
    # the core has width ~ c0^2 / u0^2
    r0 = SERIES_START * min(R, bb.C0**2 / max(u0 * u0, 1e-300))
    y0 = _origin_series(r0, u0, w0, q, power)
    sol = solve_ivp(_chain_rhs(q, power), (r0, R), y0, method="DOP853", rtol=tol,
                    atol=1e-300, dense_output=True)
    if sol.status != 0:
        raise NoConvergenceError(f"shooting integration failed: {sol.message}", {"u0": u0, "w0": w0})
    return sol


def newton_shoot(
    eps: float,
    ball: BallDomain,
    init: tuple[float, float],
    tol: float = 1e-13,
    max_iter: int = 40,
    nonlinear: bool = True,
) -> tuple[float, float]:
    """Newton iteration on ``(u(0), Laplace u(0))`` for ``u(R) = w(R) = 0``.

    Forward-difference Jacobian (relative step 1e-7) and step halving.
    Returns the converged shooting parameters. ``nonlinear=False`` drops the
    source term; the only solution is then zero, which is reported as
    ``TrivialSolutionError``.
    """
    _check_eps(eps)
    q = 9.0 - eps
    R = ball.radius
    x = np.array(init, dtype=float)

    def defect(v):
        s = _shoot_full(v[0], v[1], q, R, tol, nonlinear)
        return np.array([s.y[0, -1], s.y[2, -1]])

    scale = np.abs(x) + 1e-300
    f = defect(x)
    history = [float(np.linalg.norm(f / scale))]
    for it in range(max_iter):
        if np.max(np.abs(x)) < 1e-6:
            raise TrivialSolutionError("Newton iterate collapsed onto the zero solution")
        J = np.empty((2, 2))
        for j in range(2):
            h = 1e-7 * max(abs(x[j]), 1e-8)
            xp = x.copy()
            xp[j] += h
            J[:, j] = (defect(xp) - f) / h
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError as exc:
            raise NoConvergenceError("singular shooting Jacobian", {"history": history}) from exc
        t = 1.0
        while True:
            cand = x + t * step
            try:
                fc = defect(cand)
            except NoConvergenceError:
                fc = np.full(2, np.inf)
            if np.linalg.norm(fc / scale) < history[-1] or t < 1e-6:
                break
            t *= 0.5
        x, f = cand, fc
        history.append(float(np.linalg.norm(f / scale)))
        if np.max(np.abs(x)) < 1e-6:
            raise TrivialSolutionError("Newton iterate collapsed onto the zero solution")
        if np.linalg.norm(t * step) <= 1e-13 * np.linalg.norm(x) or history[-1] < 1e-14:
            return float(x[0]), float(x[1])
        if t < 1e-6:
            break
    raise NoConvergenceError("Newton shooting stagnated", {"history": history, "iterate": x.tolist()})


# ---------------------------------------------------------------------------
# independent finite-difference collocation


def collocation_solve(
    eps: float,
    ball: BallDomain,
    n: int,
    guess_lambda: float,
    max_iter: int = 60,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Second-order finite differences on a uniform grid, damped Newton.

    Unknowns ``u_i, w_i`` at ``r_i = i R / n``; the origin row uses
    ``Laplace f(0) = 5 f''(0)``. The initial guess is the projected bubble
    of scale ``guess_lambda``. Returns ``(r, u, w)``.
    """
    q = 9.0 - eps
    R = ball.radius
    r = np.linspace(0.0, R, n + 1)
    h = R / n
    m = n  # unknowns at r_0 .. r_{n-1}; r_n is the boundary
    proj = project_closed_form_ball(bb.Bubble(lam=guess_lambda), ball)
    u = proj.value(r[:m])
    w = proj.laplacian(r[:m])

    # discrete Laplacian with zero Dirichlet data at r_n
    main = np.full(m, -2.0 / h**2)
    upper = np.empty(m - 1)
    lower = np.empty(m - 1)
    ri = r[1:m]
    upper[1:] = 1.0 / h**2 + 2.0 / (ri[:-1] * h)
    lower[:] = 1.0 / h**2 - 2.0 / (ri * h)
    main[0] = -10.0 / h**2
    upper[0] = 10.0 / h**2
    L = sp.diags([lower, main, upper], [-1, 0, 1], format="csc")
    eye = sp.identity(m, format="csc")

    def resid(u, w):
        return np.concatenate([L @ u - w, L @ w - np.sign(u) * np.abs(u) ** q])

    F = resid(u, w)
    for _ in range(max_iter):
        dsrc = q * np.abs(u) ** (q - 1.0)
        J = sp.bmat([[L, -eye], [-sp.diags(dsrc), L]], format="csc")
        step = spsolve(J, -F)
        t = 1.0
        nf = np.linalg.norm(F)
        while t > 1e-4:
            un, wn = u + t * step[:m], w + t * step[m:]
            Fn = resid(un, wn)
            if np.linalg.norm(Fn) < nf:
                break
            t *= 0.5
        u, w, F = un, wn, Fn
        if np.linalg.norm(t * step) <= 1e-10 * np.linalg.norm(np.concatenate([u, w])):
            return r, np.append(u, 0.0), np.append(w, 0.0)
    raise NoConvergenceError("collocation Newton did not converge", {"residual": float(np.linalg.norm(F))})


def collocation_sup_norm(eps: float, ball: BallDomain, n: int, guess_lambda: float) -> tuple[float, float]:
    """Richardson-extrapolated ``u(0)`` from grids ``n, 2n, 4n``, with an error estimate."""
    vals = [collocation_solve(eps, ball, k * n, guess_lambda)[1][0] for k in (1, 2, 4)]
    r1 = (4 * vals[1] - vals[0]) / 3
    r2 = (4 * vals[2] - vals[1]) / 3
    best = (16 * r2 - r1) / 15
    return float(best), float(abs(best - r2))


# ---------------------------------------------------------------------------
# bubble decomposition


@dataclass
class DecompositionFit:
    alpha: float
    lam: float
    v_norm: float
    orthogonality_residuals: tuple[float, float]
    u_norm: float = math.nan
    basis_norms: tuple[float, float] = (math.nan, math.nan)
    iterations: int = 0

    @property
    def orthogonality_ok(self) -> bool:
        return all(
            abs(res) <= 1e-8 * self.u_norm * nb
            for res, nb in zip(self.orthogonality_residuals, self.basis_norms)
        )


def _fit_terms(lap_u, ball, lam, n=24):
    r, w = ball_radial_rule(ball.radius, 1.0 / lam, n)
    proj = project_closed_form_ball(bb.Bubble(lam=lam), ball)
    lp = proj.laplacian(r)
    _, ld = closed_form_lam_derivative(lam, ball.radius, r)
    lu = lap_u(r)
    return lu, lp, ld, w


def decompose_profile(lap_u, ball: BallDomain, lam0: float, tol: float = 1e-13, max_iter: int = 60):
    """Fit ``u = alpha P delta_lam + v`` with ``v`` orthogonal to ``P delta`` and
    ``lam dP delta/dlam`` in ``<f, g> = int Laplace f Laplace g``.

    ``lap_u`` evaluates ``Laplace u`` at radii. Newton in ``(alpha, log lam)``;
    the ``alpha`` column of the Jacobian is exact, the ``log lam`` column a
    central difference.
    """

    def equations(alpha, s):
        lu, lp, ld, w = _fit_terms(lap_u, ball, math.exp(s))
        dv = lu - alpha * lp
        return np.array([np.dot(w, dv * lp), np.dot(w, dv * ld)]), (lu, lp, ld, w)

    alpha, s = 1.0, math.log(lam0)
    F, terms = equations(alpha, s)
    for it in range(1, max_iter + 1):
        _, lp, ld, w = terms
        J = np.empty((2, 2))
        J[:, 0] = [-np.dot(w, lp * lp), -np.dot(w, lp * ld)]
        hs = 1e-5
        J[:, 1] = (equations(alpha, s + hs)[0] - equations(alpha, s - hs)[0]) / (2 * hs)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise FitError("singular fit Jacobian", {"alpha": alpha, "lam": math.exp(s)}) from exc
        t = 1.0
        base = np.linalg.norm(F)
        while True:
            step_s = max(min(t * step[1], 1.0), -1.0)
            Fn, tn = equations(alpha + t * step[0], s + step_s)
            if np.linalg.norm(Fn) < base or t < 1e-3:
                break
            t *= 0.5
        alpha, s = alpha + t * step[0], s + step_s
        F, terms = Fn, tn
        if abs(step_s) < tol and abs(t * step[0]) < tol * abs(alpha):
            break
    else:
        landscape = {
            f"{f:g}": equations(alpha, s + math.log(f))[0].tolist() for f in (0.5, 0.8, 1.25, 2.0)
        }
        raise FitError("decomposition Newton did not converge", {"landscape": landscape})
    lu, lp, ld, w = terms
    v = lu - alpha * lp
    return DecompositionFit(
        alpha=float(alpha),
        lam=float(math.exp(s)),
        v_norm=float(math.sqrt(np.dot(w, v * v))),
        orthogonality_residuals=(float(F[0]), float(F[1])),
        u_norm=float(math.sqrt(np.dot(w, lu * lu))),
        basis_norms=(float(math.sqrt(np.dot(w, lp * lp))), float(math.sqrt(np.dot(w, ld * ld)))),
        iterations=it,
    )


def decompose(sol: RadialSolution) -> DecompositionFit:
    lap_u = lambda r: sol.profile.evaluate(r)[2]  # noqa: E731
    return decompose_profile(lap_u, sol.domain, sol.lambda_guess)


def projected_bubble_solution(lam: float, ball: BallDomain, alpha: float = 1.0, eps: float = 0.0):
    """A ``RadialSolution``-shaped wrapper of ``alpha P delta_lam`` (for checks, not verified)."""
    prof = projected_profile(lam, ball, alpha)
    sup = float(prof.u[0])
    return RadialSolution(eps, ball, prof, sup, (sup, float(prof.lap[0])), math.nan)


# ---------------------------------------------------------------------------
# serialization


def solution_csv(sol: RadialSolution) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "u", "lap_u"])
    for r, u, lu in zip(sol.profile.r, sol.profile.u, sol.profile.lap):
        w.writerow([fmt(r), fmt(u), fmt(lu)])
    return buf.getvalue()


def solution_json(sol: RadialSolution, fit: DecompositionFit | None = None) -> str:
    data = {
        "epsilon": sol.epsilon,
        "radius": sol.domain.radius,
        "sup_norm": sol.sup_norm,
        "shooting_parameters": {"u0": sol.shooting_parameters[0], "w0": sol.shooting_parameters[1]},
        "residual_norm": sol.residual_norm,
        "boundary_defect": list(sol.boundary_defect),
        "monotone": sol.monotone,
    }
    if fit is not None:
        data["fit"] = asdict(fit)
    return to_json(data)

