import math

import numpy as np
import pytest

from navier_blowup import bubble as bb
from navier_blowup import reduction as rd
from navier_blowup import solver
from navier_blowup.errors import DomainError, InvalidArgumentError, NoConvergenceError
from navier_blowup.greens import BallDomain, robin
from navier_blowup.projection import projected_profile

UNIT = BallDomain()
K = bb.compute_constants()
S = K.S.value


def test_alpha0_definition():
    assert K.alpha0**8 * S**5 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("t", [0.5, 2.0, 10.0])
def test_j_eps_homogeneous(t):
    prof = projected_profile(300.0, UNIT)
    assert rd.j_eps(prof.scaled(t), 0.05) == pytest.approx(rd.j_eps(prof, 0.05), rel=1e-12)


def test_j_eps_matches_moments():
    prof = projected_profile(300.0, UNIT)
    assert rd.j_eps(prof, 0.05) == pytest.approx(rd.bubble_quotient(300.0, 0.05, UNIT), rel=1e-10)


@pytest.mark.xfail(
    strict=True,
    reason="the 1/lam coefficient is c1 phi S^(-1/4) ~ 191 and the eps log lam one ~ S/10 ~ 10, both above 5",
)
def test_quotient_bound_desk_constant():
    lam, eps = 1e3, 0.01
    dev = abs(rd.j_eps(projected_profile(lam, UNIT), eps) - S)
    assert dev <= 5 * (eps * math.log(lam) + 1 / lam)


def test_quotient_inverse_scale_coefficient():
    # J_0(P delta) = S + c1 phi(0) S^(-1/4) / lam + o(1/lam)
    phi = robin(UNIT, np.zeros(5)).value
    coef = K.c1.value * phi * S**-0.25
    lam = 1e4
    assert (rd.bubble_quotient(lam, 0.0, UNIT) - S) * lam == pytest.approx(coef, rel=1e-3)


def test_quotient_eps_log_lam_order():
    # the eps part is of order eps log lam, with coefficient close to S / 10
    lam = 1e4
    base = rd.bubble_quotient(lam, 0.0, UNIT)
    for eps in (0.01, 0.005):
        q = (rd.bubble_quotient(lam, eps, UNIT) - base) / (eps * math.log(lam))
        assert 0.5 * S / 10 < q < 1.5 * S / 10


def test_solution_quotient_below_bubble(sweep):
    rows, sols, fits = sweep
    i = [r.epsilon for r in rows].index(0.05)
    j_sol = rd.j_eps(sols[i].profile, 0.05)
    j_bub = rd.bubble_quotient(fits[i].lam, 0.05, UNIT)
    assert j_sol <= j_bub * (1 + 1e-2)
    assert j_sol < j_bub


def test_leading_factor_vanishes_at_alpha0():
    g_alpha, _ = rd.reduced_gradient(K.alpha0, 1e3, 0.01, UNIT)
    assert abs(g_alpha) <= 1e-10


def test_leading_lambda_balance():
    phi = robin(UNIT, np.zeros(5)).value
    eps = 0.05
    lam = K.c1.value * phi / (K.c2.value * eps)
    _, g_lam = rd.reduced_gradient(K.alpha0, lam, eps, UNIT)
    J = rd.bubble_quotient(lam, eps, UNIT)
    assert abs(g_lam) <= 1e-12 * J * K.c2.value * S**5 * K.alpha0**9 * eps * 1e3
    assert rd.lambda_from_rho(0.0, eps, K.c1.value, K.c2.value, phi) == pytest.approx(lam, rel=1e-14)


@pytest.mark.parametrize("alpha", [1.05, 0.9])
def test_g_alpha_finite_difference(alpha):
    lam, eps = 1e3, 0.01
    a = alpha * K.alpha0
    J = rd.bubble_quotient(lam, eps, UNIT)
    h = 1e-6
    fd = (rd.reduced_energy(a + h, lam, eps, UNIT, J) - rd.reduced_energy(a - h, lam, eps, UNIT, J)) / (2 * h)
    g_alpha, _ = rd.reduced_gradient(a, lam, eps, UNIT)
    assert abs(g_alpha - fd) <= 10 * (eps * math.log(lam) + 1 / lam) * abs(fd)
    G_alpha, _ = rd.exact_reduced_gradient(a, lam, eps, UNIT)
    assert G_alpha == pytest.approx(fd, rel=1e-7)


def test_exact_g_lam_finite_difference():
    lam, eps, a = 500.0, 0.05, 1.1 * K.alpha0
    J = rd.bubble_quotient(lam, eps, UNIT)
    h = 1e-5

    def energy(s):
        lm = lam * math.exp(s)
        m = rd._moments(lm, eps, UNIT)
        return J * (a * a * m.N - 2 / (10 - eps) * a ** (10 - eps) * J ** (5 - eps / 2) * m.P)

    fd = (energy(h) - energy(-h)) / (2 * h)
    _, G_lam = rd.exact_reduced_gradient(a, lam, eps, UNIT)
    # d/d(log lam) of the frozen-J energy is alpha * G_lam
    assert a * G_lam == pytest.approx(fd, rel=1e-6)


def test_gradient_neighbourhood():
    with pytest.raises(DomainError):
        rd.reduced_gradient(K.alpha0 + 0.6, 1e3, 0.01, UNIT)


def test_nondegenerate_center():
    assert rd.check_nondegenerate(UNIT) > 0


def test_solve_reduced_matches_direct(sweep):
    rows = sweep[0]
    lam_direct = next(r.lambda_fit for r in rows if r.epsilon == 0.05)
    sol = rd.solve_reduced(0.05, UNIT)
    assert sol.lambda_predicted == pytest.approx(lam_direct, rel=0.10)
    assert sol.gradient_norm < 1e-8


def test_bounds_scale_like_eps_log_eps():
    a, b = rd.solve_reduced(0.05, UNIT), rd.solve_reduced(0.025, UNIT)
    ratio = (0.025 * math.log(0.025)) / (0.05 * math.log(0.05))
    for x, y in ((a.state.beta, b.state.beta), (a.state.rho, b.state.rho)):
        q = abs(y / x) / ratio
        assert 0.5 <= q <= 2


def test_contraction():
    sol = rd.solve_reduced(0.1, UNIT)
    h = sol.contraction_history
    assert all(b / a <= 0.9 for a, b in zip(h[1:], h[2:]))


def test_eps_lambda_convergence():
    phi = robin(UNIT, np.zeros(5)).value
    target = K.c1.value * phi / K.c2.value
    vals = [rd.solve_reduced(e, UNIT).lambda_predicted * e for e in (0.1, 0.05, 0.025)]
    assert abs(vals[-1] - target) <= 0.05 * target
    assert abs(vals[2] - target) < abs(vals[1] - target) < abs(vals[0] - target)


def test_negated_c2_is_flagged():
    with pytest.raises(NoConvergenceError):
        rd.solve_reduced(0.05, UNIT, constants=(K.c1.value, -K.c2.value))
    assert rd.lambda_from_rho(0.0, 0.05, K.c1.value, -K.c2.value, 1.2) < 0


def test_eps_range():
    with pytest.raises(InvalidArgumentError):
        rd.solve_reduced(0.5, UNIT)


def test_report(sweep):
    sol = rd.solve_reduced(0.05, UNIT)
    rep = rd.reduced_report(sol, 371.0)
    assert rep["relative_gap"] == pytest.approx(abs(sol.lambda_predicted - 371.0) / 371.0)
    assert rd.report_json(rep).endswith("\n")
