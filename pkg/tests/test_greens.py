import math

import numpy as np
import pytest

from navier_blowup import greens
from navier_blowup.errors import AccuracyError, DomainError, SingularityError
from navier_blowup.greens import BallDomain
from navier_blowup.numerics import OMEGA5

UNIT = BallDomain()


def _inside(rng, radius=0.8):
    v = rng.normal(size=5)
    return v / np.linalg.norm(v) * radius * rng.uniform(0.05, 1.0)


def _rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(5, 5)))
    return q * np.sign(np.diag(r))


def test_laplace_green_boundary():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = _inside(rng)
        e = rng.normal(size=5)
        e /= np.linalg.norm(e)
        assert abs(greens.laplace_green(UNIT, x, (1 - 1e-12) * e)) <= 1e-10
        # linear vanishing with slope given by the Poisson kernel
        s = 1e-5
        poisson = (1 - x @ x) / (OMEGA5 * np.linalg.norm(x - e) ** 5)
        assert greens.laplace_green(UNIT, x, (1 - s) * e) / s == pytest.approx(poisson, rel=1e-4)


def test_laplace_green_symmetry():
    rng = np.random.default_rng(2)
    for _ in range(100):
        x, y = _inside(rng), _inside(rng)
        a, b = greens.laplace_green(UNIT, x, y), greens.laplace_green(UNIT, y, x)
        assert a == pytest.approx(b, rel=1e-12)


def test_laplace_green_harmonic():
    rng = np.random.default_rng(3)
    x = np.zeros(5)
    for _ in range(10):
        y = _inside(rng, 0.6) + 0.2 * np.eye(5)[0]
        h = 1e-3
        lap = 0.0
        for i in range(5):
            e = np.eye(5)[i] * h
            vals = [greens.laplace_green(UNIT, x, y + k * e) for k in (-2, -1, 0, 1, 2)]
            lap += (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (12 * h * h)
        assert abs(lap) <= 1e-6 * abs(greens.laplace_green(UNIT, x, y)) / np.linalg.norm(y - x) ** 2


def test_laplace_green_singular():
    with pytest.raises(SingularityError):
        greens.laplace_green(UNIT, np.zeros(5), np.zeros(5))


def test_outside_point_rejected():
    with pytest.raises(DomainError):
        greens.robin(UNIT, np.array([1.0, 0, 0, 0, 0]))


def test_biharmonic_symmetry_and_positivity():
    rng = np.random.default_rng(4)
    for _ in range(50):
        x, y = _inside(rng, 0.6), _inside(rng, 0.6)
        gxy = greens.biharmonic_green(UNIT, x, y, tol=1e-9).value
        gyx = greens.biharmonic_green(UNIT, y, x, tol=1e-9).value
        assert gxy > 0
        assert gxy == pytest.approx(gyx, rel=1e-8)


def test_biharmonic_boundary_values():
    # near the sphere the 1-D double-Poisson route is the accurate one
    G = lambda x, y: greens.biharmonic_green(UNIT, x, y, "double-poisson")  # noqa: E731
    x = np.array([0.2, 0.1, 0, 0, 0])
    e = np.array([0, 0.6, 0.8, 0, 0])
    vals = [G(x, (1 - s) * e).value for s in (1e-2, 1e-3, 1e-4)]
    # G vanishes linearly in the distance to the sphere
    assert vals[2] < vals[1] < vals[0]
    assert vals[2] <= 2e-3 * G(x, 0.5 * e).value
    # numerical Laplacian in y, along the radial direction, tends to zero as well
    def lap_y(s, h=2e-4):
        y = (1 - s) * e
        total = 0.0
        for i in range(5):
            d = np.eye(5)[i] * h
            total += (
                G(x, y + d).value - 2 * G(x, y).value + G(x, y - d).value
            ) / h**2
        return total
    assert abs(lap_y(1e-3)) < 0.1 * abs(lap_y(1e-1))


def test_biharmonic_route_agreement():
    rng = np.random.default_rng(5)
    for _ in range(5):
        x, y = _inside(rng), _inside(rng)
        a = greens.regular_part(UNIT, x, y, "composition")
        b = greens.regular_part(UNIT, x, y, "double-poisson")
        assert a == pytest.approx(b, rel=1e-8)


def test_robin_center_reference():
    phi = greens.robin(UNIT, np.zeros(5))
    assert phi.value == pytest.approx(greens.robin_center_exact(1.0), rel=1e-10)
    ext = greens.regular_part_eval(UNIT, np.zeros(5), np.zeros(5), diagonal="extrapolate")
    assert ext.value == pytest.approx(phi.value, rel=1e-6)


def test_robin_rotational_symmetry():
    rng = np.random.default_rng(6)
    x = np.array([0.4, 0.2, -0.1, 0, 0.3])
    ref = greens.robin(UNIT, x).value
    for _ in range(20):
        q = _rotation(rng)
        assert greens.robin(UNIT, q @ x).value == pytest.approx(ref, rel=1e-8)


def test_robin_grows_toward_boundary():
    e = np.eye(5)[2]
    at = lambda d: greens.robin(UNIT, (1 - d) * e).value  # noqa: E731
    assert at(0.1) > at(0.3) > greens.robin(UNIT, np.zeros(5)).value


def test_robin_gradient_center():
    assert np.linalg.norm(greens.robin_gradient(UNIT, np.zeros(5))) <= 1e-8


def test_robin_gradient_alignment():
    x = np.array([0.3, -0.2, 0.1, 0.0, 0.15])
    g = greens.robin_gradient(UNIT, x, step=1e-3)
    radial = g @ x / np.linalg.norm(x)
    cross = np.linalg.norm(g - radial * x / np.linalg.norm(x))
    assert cross <= 1e-6 * abs(radial)


def test_robin_gradient_growth():
    e = np.eye(5)[0]
    scaled = []
    for d in (0.3, 0.2, 0.1):
        g = greens.robin_gradient(UNIT, (1 - d) * e, step=d / 20)
        scaled.append(np.linalg.norm(g) * d**2)
    assert max(scaled) / min(scaled) < 2.0


def test_robin_gradient_step_check():
    with pytest.raises(AccuracyError):
        greens.robin_gradient(UNIT, 0.95 * np.eye(5)[0], step=1e-2)


def test_robin_hessian_positive_definite():
    hess = greens.robin_hessian(UNIT, np.zeros(5))
    assert np.allclose(hess, hess.T)
    assert np.min(np.linalg.eigvalsh(hess)) > 0


@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_robin_radius_scaling(R):
    ball = BallDomain(radius=R)
    assert greens.robin(ball, ball.center).value == pytest.approx(greens.robin(UNIT, np.zeros(5)).value / R, rel=1e-6)


def test_robin_translated_ball():
    ball = BallDomain(center=np.array([1.0, 2, 3, 4, 5]), radius=1.0)
    x = ball.center + np.array([0.3, 0, 0.1, 0, 0])
    assert greens.robin(ball, x).value == pytest.approx(greens.robin(UNIT, x - ball.center).value, rel=1e-12)


def test_methods_agree_at_center():
    a = greens.robin(UNIT, np.zeros(5), "composition").value
    b = greens.robin(UNIT, np.zeros(5), "double-poisson").value
    assert a == pytest.approx(b, rel=1e-5)


def test_polar_weight_monte_carlo():
    """The 3-D polar reduction of a 5-D ball integral against Monte Carlo sampling."""
    p3, q3 = np.array([0.3, 0.0, 0.0]), np.array([0.1, 0.4, 0.0])

    def f(pts, p, q):
        return 1.0 / (1.0 + np.sum((pts - p) ** 2, axis=-1) + np.sum((pts - q) ** 2, axis=-1))

    rng = np.random.default_rng(12345)
    n = 1_000_000
    z = rng.normal(size=(n, 5))
    z *= (rng.uniform(size=n) ** 0.2 / np.linalg.norm(z, axis=1))[:, None]
    p5, q5 = np.pad(p3, (0, 2)), np.pad(q3, (0, 2))
    mc = np.mean(f(z, p5, q5)) * math.pi**2.5 / math.gamma(3.5)
    pts, w, _ = greens._polar_rule(p3, 1.0, 16, collinear=False)
    assert float(np.dot(w, f(pts, p3, q3))) == pytest.approx(mc, rel=1e-2)


def test_polar_weight_collinear_volume():
    pts, w, _ = greens._polar_rule(np.array([0.4, 0.0, 0.0]), 1.0, 16, collinear=True)
    assert w.sum() == pytest.approx(math.pi**2.5 / math.gamma(3.5), rel=1e-10)


def test_robin_csv_header():
    text = greens.robin_csv(greens.tabulate_robin(UNIT, 3))
    assert text.splitlines()[0] == "r,phi,dphi_dr,error_estimate"
    assert len(text.splitlines()) == 4
    assert "\r" not in text
