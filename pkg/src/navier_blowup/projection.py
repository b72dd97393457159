"""Projection of a bubble onto functions with Navier boundary values on a ball.

``P delta`` solves ``Laplace^2 P delta = Laplace^2 delta`` in the ball with
``P delta = Laplace P delta = 0`` on the sphere; ``theta = delta - P delta``.
For a ball centred at the concentration point the correction is a radial
biharmonic polynomial ``k0 + k2 |x-a|^2``, fixed by the two boundary values.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import bubble as bb
from .bubble import Bubble
from .errors import InvalidArgumentError
from .greens import BallDomain, regular_part
from .numerics import OMEGA5, RadialProfile, clustered_grid, legendre_rule
from .serialize import fmt


@dataclass(frozen=True)
class ClosedFormCoefficients:
    """``P delta = delta - peak_offset - quadratic_coefficient * r^2``."""

    peak_offset: float
    quadratic_coefficient: float


@dataclass(frozen=True)
class ProjectedBubble:
    bubble: Bubble
    domain: BallDomain
    representation: RadialProfile | ClosedFormCoefficients

    @property
    def lam(self) -> float:
        return self.bubble.lam

    @property
    def d(self) -> float:
        return self.domain.radius

    def value(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        rep = self.representation
        if isinstance(rep, ClosedFormCoefficients):
            return bb.radial_value(self.lam, r) - rep.peak_offset - rep.quadratic_coefficient * r**2
        return rep.evaluate(r)[0].reshape(r.shape)

    def laplacian(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        rep = self.representation
        if isinstance(rep, ClosedFormCoefficients):
            return bb.radial_laplacian(self.lam, r) - 10.0 * rep.quadratic_coefficient
        return rep.evaluate(r)[2].reshape(r.shape)

    def theta(self, r) -> np.ndarray:
        return bb.radial_value(self.lam, r) - self.value(r)

    def theta_norm(self) -> float:
        """``(int_B |Laplace theta|^2)^(1/2)``; ``Laplace theta`` is constant for the closed form."""
        rep = self.representation
        vol = OMEGA5 * self.d**5 / 5.0
        if isinstance(rep, ClosedFormCoefficients):
            return abs(10.0 * rep.quadratic_coefficient) * math.sqrt(vol)
        r = rep.r
        lap_theta = bb.radial_laplacian(self.lam, r) - rep.lap
        return math.sqrt(np.trapezoid(OMEGA5 * r**4 * lap_theta**2, r))


def _require_concentric(b: Bubble, ball: BallDomain):
    if not np.allclose(b.a, ball.center, rtol=0.0, atol=1e-14 * ball.radius):
        raise InvalidArgumentError("the radial projection needs the ball centred at the bubble")


def boundary_laplacian(b: Bubble, ball: BallDomain) -> float:
    """``c = Laplace delta`` on the sphere ``|x - a| = d``."""
    return float(bb.radial_laplacian(b.lam, ball.radius))


def project_closed_form_ball(b: Bubble, ball: BallDomain) -> ProjectedBubble:
    """``P delta = delta - delta(d) - (c/10)(|x-a|^2 - d^2)`` with ``c = Laplace delta(d)``."""
    _require_concentric(b, ball)
    d = ball.radius
    c = boundary_laplacian(b, ball)
    k2 = c / 10.0
    k0 = float(bb.radial_value(b.lam, d)) - k2 * d**2
    return ProjectedBubble(b, ball, ClosedFormCoefficients(k0, k2))


def closed_form_lam_derivative(lam: float, d: float, r):
    """``lam d/dlam`` of the closed-form projection and of its Laplacian at radii ``r``."""
    r = np.asarray(r, dtype=float)
    dk2 = float(bb.radial_lam_derivative_laplacian(lam, d)) / 10.0
    dk0 = float(bb.radial_lam_derivative(lam, d)) - dk2 * d**2
    val = bb.radial_lam_derivative(lam, r) - dk0 - dk2 * r**2
    lap = bb.radial_lam_derivative_laplacian(lam, r) - 10.0 * dk2
    return val, lap


def projected_profile(lam: float, ball: BallDomain, alpha: float = 1.0, points: int = 2048):
    """``alpha P delta_lam`` (closed form, centred) as a profile with an exact evaluator."""
    proj = project_closed_form_ball(Bubble(ball.center, lam), ball)
    k2 = proj.representation.quadratic_coefficient

    def dense(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return alpha * np.stack([
            proj.value(r),
            bb.radial_derivative(lam, r) - 2.0 * k2 * r,
            proj.laplacian(r),
            bb.radial_laplacian_derivative(lam, r),
        ])

    grid = clustered_grid(ball.radius, 1.0 / lam, points)
    return RadialProfile(grid, dense(grid).T, dense)


# ---------------------------------------------------------------------------
# two-stage radial Dirichlet solve


def _panel_rule(n):
    x, w = legendre_rule(n)
    return 0.5 * (x + 1.0), 0.5 * w


class _RadialDirichlet:
    """Solution of ``Laplace w = f``, ``w(d) = 0`` for radial ``f`` on ``[0, d]``.

    With ``F(r) = int_0^r s^4 f`` and ``K(r) = int_r^d s f``,

        w(r)  = -(1/3) (F(r) r^-3 + K(r) - F(d) d^-3)
        w'(r) = F(r) r^-4

    which is the radial form of the Dirichlet Green's kernel
    ``(max(r, s)^-3 - d^-3) / (3 omega5)``. Integrals use Gauss panels between
    the breakpoints, partial panels their own rescaled rule.
    """

    def __init__(self, f, breaks, n=10):
        self.f = f
        self.breaks = np.asarray(breaks, dtype=float)
        self.d = self.breaks[-1]
        self.s, self.ws = _panel_rule(n)
        lo, hi = self.breaks[:-1], self.breaks[1:]
        nodes = lo[:, None] + (hi - lo)[:, None] * self.s
        wts = (hi - lo)[:, None] * self.ws
        fv = f(nodes)
        self.cum_F = np.concatenate([[0.0], np.cumsum(np.sum(wts * nodes**4 * fv, axis=1))])
        k = np.sum(wts * nodes * fv, axis=1)
        self.cum_K = np.concatenate([np.cumsum(k[::-1])[::-1], [0.0]])

    def _partial(self, r):
        """``F(r)`` and ``K(r)`` at arbitrary radii."""
        r = np.asarray(r, dtype=float)
        idx = np.clip(np.searchsorted(self.breaks, r, side="right") - 1, 0, self.breaks.size - 2)
        lo = self.breaks[idx]
        hi = self.breaks[idx + 1]
        # [lo, r] for F, [r, hi] for K
        a = lo[..., None] + (r - lo)[..., None] * self.s
        wa = (r - lo)[..., None] * self.ws
        b = r[..., None] + (hi - r)[..., None] * self.s
        wb = (hi - r)[..., None] * self.ws
        F = self.cum_F[idx] + np.sum(wa * a**4 * self.f(a), axis=-1)
        K = self.cum_K[idx + 1] + np.sum(wb * b * self.f(b), axis=-1)
        return F, K

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        F, K = self._partial(r)
        Fd = self.cum_F[-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.where(r > 0, F / np.where(r > 0, r, 1.0) ** 3, 0.0)
            dw = np.where(r > 0, F / np.where(r > 0, r, 1.0) ** 4, 0.0)
        return -(inner + K - Fd / self.d**3) / 3.0, dw


def project_numeric_radial(b: Bubble, ball: BallDomain, points: int = 512) -> ProjectedBubble:
    """Projection by two chained radial Dirichlet solves.

    Stage one: ``Laplace w = Laplace^2 delta = delta^9``, ``w(d) = 0``.
    Stage two: ``Laplace P delta = w``, ``P delta(d) = 0``.
    """
    _require_concentric(b, ball)
    lam, d = b.lam, ball.radius
    grid = clustered_grid(d, 1.0 / lam, points)
    source = lambda r: bb.radial_value(lam, r) ** 9  # noqa: E731
    stage1 = _RadialDirichlet(source, grid)
    stage2 = _RadialDirichlet(lambda r: stage1(r)[0], grid)
    p, dp = stage2(grid)
    w, dw = stage1(grid)
    states = np.stack([p, dp, w, dw], axis=1)

    def dense(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        p, dp = stage2(r)
        w, dw = stage1(r)
        return np.stack([p, dp, w, dw])

    return ProjectedBubble(b, ball, RadialProfile(grid, states, dense))


# ---------------------------------------------------------------------------
# expansion of theta


def theta_leading(b: Bubble, ball: BallDomain, r) -> np.ndarray:
    """``c0 lam^-1/2 H(a, x)`` at ``|x - a| = r`` for the centred ball."""
    e = np.eye(5)[0]
    r = np.atleast_1d(np.asarray(r, dtype=float))
    H = np.array(
        [regular_part(ball, ball.center, ball.center + ri * e, method="double-poisson") for ri in r]
    )
    return bb.C0 / math.sqrt(b.lam) * H


def theta_expansion_residual(b: Bubble, ball: BallDomain, x) -> float:
    """``f = theta(x) - c0 lam^-1/2 H(a, x)``."""
    proj = project_closed_form_ball(b, ball)
    r = float(np.linalg.norm(ball.local(x)))
    return float(proj.theta(r) - theta_leading(b, ball, r)[0])


def theta_remainder_sup(b: Bubble, ball: BallDomain, points: int = 64) -> float:
    """``sup |f|`` over radii in ``[0, 0.95 d]``."""
    proj = project_closed_form_ball(b, ball)
    r = np.linspace(0.0, 0.95 * ball.radius, points)
    return float(np.max(np.abs(proj.theta(r) - theta_leading(b, ball, r))))


def projection_csv(b: Bubble, ball: BallDomain, points: int = 128) -> str:
    """Columns ``r, delta, Pdelta, theta, leading, f``."""
    proj = project_closed_form_ball(b, ball)
    r = np.linspace(0.0, ball.radius, points)
    r_in = r[:-1]
    lead = np.append(theta_leading(b, ball, r_in), np.nan)
    delta = bb.radial_value(b.lam, r)
    pd = proj.value(r)
    th = delta - pd
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "delta", "Pdelta", "theta", "leading", "f"])
    for row in zip(r, delta, pd, th, lead, th - lead):
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()
