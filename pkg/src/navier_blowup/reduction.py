"""Finite-dimensional reduction in the bubble parameters ``(alpha, lam)``.

On the ansatz ``u = alpha P delta_lam`` (centred ball, concentration point at
the centre) the quotient

    J_eps(u) = (int |Laplace u|^2) (int |u|^(10-eps)) ** (-2/(10-eps))

is degree-zero homogeneous. Its reduced gradient, with ``N = |P delta|^2``,
``P = int P delta^(10-eps)`` and their ``lam d/dlam`` counterparts, is

    G_alpha = 2J (alpha N   - alpha^(9-eps) J^(5-eps/2) P)
    G_lam   = 2J (alpha N_l - alpha^(9-eps) J^(5-eps/2) P_l)

and to leading order in ``eps`` and ``1/lam``

    g_alpha = 2J alpha S^(5/4) (1 - alpha^8 S^5)
    g_lam   = J (alpha c1 phi(0) / lam (1 - 2 alpha^8 S^5) + c2 S^5 alpha^9 eps).

The unknowns are shifted to ``alpha = alpha0 + beta`` with
``alpha0 = S^(-5/8)`` and ``lam^(-1/2) = sqrt(c2/c1) (phi(0)^(-1/2) + rho) sqrt(eps)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bubble as bb
from .errors import (
    DomainError,
    InvalidArgumentError,
    NoConvergenceError,
    PreconditionError,
)
from .greens import BallDomain, robin, robin_hessian
from .numerics import RadialProfile, ball_radial_rule
from .projection import closed_form_lam_derivative, project_closed_form_ball
from .serialize import to_json

NU0 = 0.5
D0 = 0.1
EPS0 = 0.1


@dataclass(frozen=True)
class ReducedState:
    beta: float
    rho: float
    epsilon: float
    xi: np.ndarray = field(default_factory=lambda: np.zeros(5))


@dataclass
class ReducedSolution:
    state: ReducedState
    lambda_predicted: float
    alpha: float
    iterations: int
    contraction_history: list[float]
    gradient_norm: float = math.nan

    @property
    def bound_constants(self) -> tuple[float, float]:
        """``|beta|`` and ``|rho|`` in units of ``eps |log eps|``."""
        e = self.state.epsilon
        scale = e * abs(math.log(e))
        return abs(self.state.beta) / scale, abs(self.state.rho) / scale


# ---------------------------------------------------------------------------
# the quotient


def _profile_scale(u: RadialProfile) -> float:
    vals = np.abs(u.u)
    below = np.nonzero(vals <= 0.5 * vals[0])[0]
    r_half = u.r[below[0]] if below.size else u.radius
    return max(0.5 * r_half, 1e-12 * u.radius)


def j_eps(u: RadialProfile, eps: float, n: int = 32) -> float:
    """``J_eps(u)`` by radial quadrature on ``[0, u.radius]``."""
    R = u.radius
    r, w = ball_radial_rule(R, _profile_scale(u), n)
    st = u.evaluate(r)
    val, lap = st[0], st[2]
    num = np.dot(w, lap * lap)
    den = np.dot(w, np.abs(val) ** (10.0 - eps))
    if not (num > 0 and den > 0):
        raise InvalidArgumentError("J_eps is undefined for the zero function")
    return float(num / den ** (2.0 / (10.0 - eps)))


@dataclass(frozen=True)
class _Moments:
    N: float
    P: float
    N_l: float
    P_l: float

    def J(self, eps):
        return self.N / self.P ** (2.0 / (10.0 - eps))


def _moments(lam: float, eps: float, ball: BallDomain, n: int = 32) -> _Moments:
    r, w = ball_radial_rule(ball.radius, 1.0 / lam, n)
    proj = project_closed_form_ball(bb.Bubble(ball.center, lam), ball)
    v = np.maximum(proj.value(r), 0.0)
    lap = proj.laplacian(r)
    dv, dlap = closed_form_lam_derivative(lam, ball.radius, r)
    return _Moments(
        N=float(np.dot(w, lap * lap)),
        P=float(np.dot(w, v ** (10.0 - eps))),
        N_l=float(np.dot(w, lap * dlap)),
        P_l=float(np.dot(w, v ** (9.0 - eps) * dv)),
    )


def bubble_quotient(lam: float, eps: float, ball: BallDomain) -> float:
    """``J_eps(P delta_lam)``."""
    return _moments(lam, eps, ball).J(eps)


# ---------------------------------------------------------------------------
# gradients


def _constants(ball: BallDomain, overrides=None):
    k = bb.compute_constants()
    c1, c2 = (k.c1.value, k.c2.value) if overrides is None else overrides
    return k.S.value, c1, c2, robin(ball, ball.center).value


def reduced_gradient(alpha: float, lam: float, eps: float, ball: BallDomain, nu0: float = NU0):
    """Leading-order ``(g_alpha, g_lam)``."""
    S, c1, c2, phi = _constants(ball)
    a0 = S**-0.625
    if not (abs(alpha - a0) < nu0 and lam > 1.0 and eps * math.log(lam) < nu0):
        raise DomainError("(alpha, lam) outside the reduction neighbourhood")
    J = bubble_quotient(lam, eps, ball)
    s5 = alpha**8 * S**5
    g_alpha = 2.0 * J * alpha * S**1.25 * (1.0 - s5)
    g_lam = J * (alpha * c1 * phi / lam * (1.0 - 2.0 * s5) + c2 * S**5 * alpha**9 * eps)
    return g_alpha, g_lam


def exact_reduced_gradient(alpha: float, lam: float, eps: float, ball: BallDomain):
    """``(G_alpha, G_lam)`` from quadrature of the projected bubble."""
    m = _moments(lam, eps, ball)
    J = m.J(eps)
    c = alpha ** (9.0 - eps) * J ** (5.0 - 0.5 * eps)
    return 2.0 * J * (alpha * m.N - c * m.P), 2.0 * J * (alpha * m.N_l - c * m.P_l)


def reduced_energy(alpha: float, lam: float, eps: float, ball: BallDomain, J: float | None = None):
    """``J (alpha^2 N - 2/(10-eps) alpha^(10-eps) J^(5-eps/2) P)`` with ``J`` frozen.

    Its ``alpha``-derivative is ``G_alpha``; this is the function the
    finite-difference check differentiates.
    """
    m = _moments(lam, eps, ball)
    J = m.J(eps) if J is None else J
    return J * (alpha**2 * m.N - 2.0 / (10.0 - eps) * alpha ** (10.0 - eps) * J ** (5.0 - 0.5 * eps) * m.P)


# ---------------------------------------------------------------------------
# fixed point


def lambda_from_rho(rho: float, eps: float, c1: float, c2: float, phi: float) -> float:
    """Invert ``lam^(-1/2) = sqrt(c2/c1) (phi^(-1/2) + rho) sqrt(eps)``."""
    if c2 <= 0 or c1 <= 0:
        return -math.inf
    return c1 / (c2 * eps * (phi**-0.5 + rho) ** 2)


def check_nondegenerate(ball: BallDomain, step: float | None = None) -> float:
    """Smallest eigenvalue of the Hessian of ``phi`` at the centre; raises if not positive."""
    step = step if step is not None else 2e-2 * ball.radius
    grad_ok = ball.radius >= D0
    hess = robin_hessian(ball, ball.center, step)
    lo = float(np.min(np.linalg.eigvalsh(0.5 * (hess + hess.T))))
    if not (lo > 0 and grad_ok):
        raise PreconditionError(f"centre is not a nondegenerate minimum of phi (eigenvalue {lo:.3g})")
    return lo


def solve_reduced(
    eps: float,
    ball: BallDomain | None = None,
    constants: tuple[float, float] | None = None,
    eps0: float = EPS0,
    nu0: float = NU0,
    max_iter: int = 100,
    tol: float = 1e-12,
    check_hessian: bool = True,
) -> ReducedSolution:
    """Zero of ``(G_alpha, G_lam)`` in the shifted unknowns ``(beta, rho)``.

    Quasi-Newton iteration: the residual is the full reduced gradient, the
    Jacobian a finite difference of the leading-order system at the current
    iterate. ``constants = (c1, c2)`` overrides the tabulated values in the
    change of variables and the Jacobian.
    """
    ball = ball or BallDomain()
    if not (0.0 < eps <= eps0):
        raise InvalidArgumentError(f"epsilon must lie in (0, {eps0}], got {eps!r}")
    if not ball.is_centered:
        raise InvalidArgumentError("the reduction is set up for a ball centred at the origin")
    if check_hessian:
        check_nondegenerate(ball)
    S, c1, c2, phi = _constants(ball, constants)
    a0 = S**-0.625

    def lam_of(rho):
        lam = lambda_from_rho(rho, eps, c1, c2, phi)
        if not (np.isfinite(lam) and lam > 0):
            raise NoConvergenceError(
                "change of variables gives no admissible scale",
                {"lambda_predicted": lam, "rho": rho, "c2": c2},
            )
        return lam

    # residual scales: g_alpha ~ J alpha0 S^(5/4), g_lam ~ J alpha0 |c2| eps
    def exact(x):
        beta, rho = x
        lam = lam_of(rho)
        ga, gl = exact_reduced_gradient(a0 + beta, lam, eps, ball)
        J = bubble_quotient(lam, eps, ball)
        return np.array([ga / (J * a0 * S**1.25), gl / (J * a0 * abs(c2) * eps)])

    def leading(x):
        beta, rho = x
        alpha = a0 + beta
        lam = lam_of(rho)
        s5 = alpha**8 * S**5
        ga = 2.0 * alpha * S**1.25 * (1.0 - s5)
        gl = alpha * c1 * phi / lam * (1.0 - 2.0 * s5) + c2 * S**5 * alpha**9 * eps
        return np.array([ga / (a0 * S**1.25), gl / (a0 * abs(c2) * eps)])

    x = np.zeros(2)
    history: list[float] = []
    F = exact(x)
    for it in range(1, max_iter + 1):
        J = np.empty((2, 2))
        h = 1e-7
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            J[:, j] = (leading(x + e) - leading(x - e)) / (2 * h)
        step = np.linalg.solve(J, -F)
        x = x + step
        if np.any(np.abs(x) >= nu0):
            raise NoConvergenceError("iterate left the neighbourhood", {"history": history, "state": x.tolist()})
        history.append(float(np.linalg.norm(step)))
        F = exact(x)
        if history[-1] < tol:
            break
        if len(history) > 3 and history[-1] > history[-2]:
            raise NoConvergenceError("reduced iteration is not contracting", {"history": history})
    else:
        raise NoConvergenceError("no contraction within the iteration limit", {"history": history})
    lam = lam_of(x[1])
    return ReducedSolution(
        state=ReducedState(beta=float(x[0]), rho=float(x[1]), epsilon=eps),
        lambda_predicted=float(lam),
        alpha=float(a0 + x[0]),
        iterations=it,
        contraction_history=history,
        gradient_norm=float(np.linalg.norm(F)),
    )


def reduced_report(sol: ReducedSolution, lambda_direct: float | None = None) -> dict:
    out = {
        "epsilon": sol.state.epsilon,
        "beta": sol.state.beta,
        "rho": sol.state.rho,
        "lambda_predicted": sol.lambda_predicted,
        "iterations": sol.iterations,
        "lambda_direct": lambda_direct,
        "relative_gap": None,
    }
    if lambda_direct is not None:
        out["relative_gap"] = abs(sol.lambda_predicted - lambda_direct) / lambda_direct
    return out


def report_json(report: dict) -> str:
    return to_json(report)

