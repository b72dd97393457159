"""Navier Green's function of the bilaplacian on balls of R^5 and its regular part.

Normalization: ``Laplace^2 G(x, .) = c_fund * delta_x`` with ``G = Laplace G = 0``
on the boundary, so that ``H(x, y) = |x - y|**-1 - G(x, y)`` is smooth.

Two independent routes are implemented.

composition
    ``G = c_fund * int_B G_L(x, z) G_L(z, y) dz`` with ``G_L`` the Dirichlet
    Green's function of ``-Laplace``. Writing ``G_L = Gamma - I`` (free-space
    kernel minus Kelvin image) and using ``Gamma * Gamma = |x-y|**-1 / c_fund``
    on R^5, the singular part cancels and

        H = c_fund * (E + T(x, y) + T(y, x) - M)

    with ``E = int_{|z|>R} Gamma_x Gamma_y``, ``T(x, y) = int_B Gamma_x I_y``
    and ``M = int_B I_x I_y``. Each piece is integrated in polar coordinates
    about ``x`` (or ``y``); only the plane through the centre, ``x`` and ``y``
    matters, which leaves a 2-D (collinear) or 3-D tensor Gauss rule.

double-poisson
    Solving ``Laplace^2 H = 0`` with ``H = |x-.|**-1`` and
    ``Laplace H = -2 |x-.|**-3`` on the sphere by two Poisson extensions
    collapses, after Kelvin inversion, to

        H = 1/D(x, y) + (R^2-|x|^2)(R^2-|y|^2)/(2R^2) int_0^1 t^1.5 D(x, ty)**-3 dt

    where ``D(x, y)**2 = |x|^2|y|^2/R^2 - 2 x.y + R^2``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .bubble import DIM, compute_constants
from .errors import AccuracyError, DomainError, InvalidArgumentError, SingularityError
from .numerics import OMEGA5, legendre_rule
from .serialize import fmt

Method = Literal["composition", "double-poisson"]


@dataclass(frozen=True)
class BallDomain:
    center: np.ndarray = field(default_factory=lambda: np.zeros(DIM))
    radius: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        if c.shape != (DIM,):
            raise InvalidArgumentError(f"ball centre must be a point of R^{DIM}")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise InvalidArgumentError(f"ball radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    def local(self, x) -> np.ndarray:
        """Coordinates of ``x`` relative to the centre; raises outside the open ball."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (DIM,):
            raise InvalidArgumentError(f"points must have {DIM} coordinates")
        p = x - self.center
        if not np.linalg.norm(p) < self.radius:
            raise DomainError(f"point at distance {np.linalg.norm(p):.6g} is not inside the ball")
        return p

    def boundary_distance(self, x) -> float:
        return self.radius - float(np.linalg.norm(self.local(x)))

    @property
    def is_centered(self) -> bool:
        return not np.any(self.center)


@dataclass(frozen=True)
class GreensEval:
    value: float
    method: str
    error_estimate: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "error_estimate", float(self.error_estimate))
        if self.method not in ("composition", "double-poisson"):
            raise InvalidArgumentError(f"unknown method {self.method!r}")
        if not self.error_estimate >= 0:
            raise InvalidArgumentError("error estimate must be nonnegative")


# ---------------------------------------------------------------------------
# kernels (coordinates relative to the centre, any trailing dimension)


def _gamma(z):
    return 1.0 / (3.0 * OMEGA5 * np.sum(z * z, axis=-1) ** 1.5)


def _image_distance(x, y, R):
    xx = np.sum(x * x, axis=-1)
    yy = np.sum(y * y, axis=-1)
    xy = np.sum(x * y, axis=-1)
    return np.sqrt(np.maximum(xx * yy / R**2 - 2.0 * xy + R**2, 0.0))


def _image(x, y, R):
    return 1.0 / (3.0 * OMEGA5 * _image_distance(x, y, R) ** 3)


def laplace_green(dom: BallDomain, x, y) -> float:
    """Dirichlet Green's function of ``-Laplace`` on the ball (method of images)."""
    p, q = dom.local(x), dom.local(y)
    if np.array_equal(p, q):
        raise SingularityError("Green's function evaluated on the diagonal")
    return float(_gamma(p - q) - _image(p, q, dom.radius))


# ---------------------------------------------------------------------------
# reduction to the plane through the centre, x and y


def _plane_coordinates(p, q, R):
    """Express ``p, q`` in an orthonormal frame adapted to span{p, q}.

    Returns 3-vectors and whether the configuration is collinear with the
    centre, in which case only the first axis is used.
    """
    tol = 1e-14 * R
    basis = []
    for v in (p, q):
        w = v - sum(np.dot(v, e) * e for e in basis)
        nw = np.linalg.norm(w)
        if nw > tol:
            basis.append(w / nw)
    if not basis:
        basis.append(np.eye(DIM)[0])
    coords = [np.array([np.dot(v, basis[0]), np.dot(v, basis[1]) if len(basis) > 1 else 0.0, 0.0])
              for v in (p, q)]
    return coords[0], coords[1], len(basis) < 2


def _polar_rule(p, R, n, collinear, exterior=False):
    """Points ``z`` and weights for ``int g(z) dz`` over the ball (or its exterior).

    Polar coordinates about ``p``; the direction is
    ``(cos psi, sin psi cos chi, sin psi sin chi)`` in the adapted frame and the
    two remaining angles integrate to ``4 pi sin^3 psi sin^2 chi``. In the
    collinear case ``chi`` drops out as well, leaving ``2 pi^2 sin^3 psi``.
    """
    x, wx = legendre_rule(n)
    s, ws = 0.5 * (x + 1.0), 0.5 * wx
    psi, wpsi = 0.5 * np.pi * (x + 1.0), 0.5 * np.pi * wx
    if collinear:
        dirs = np.stack([np.cos(psi), np.sin(psi), np.zeros_like(psi)], axis=-1)
        wdir = 2.0 * np.pi**2 * np.sin(psi) ** 3 * wpsi
    else:
        P, C = np.meshgrid(psi, psi, indexing="ij")
        WP, WC = np.meshgrid(wpsi, wpsi, indexing="ij")
        dirs = np.stack(
            [np.cos(P), np.sin(P) * np.cos(C), np.sin(P) * np.sin(C)], axis=-1
        ).reshape(-1, 3)
        wdir = (4.0 * np.pi * np.sin(P) ** 3 * np.sin(C) ** 2 * WP * WC).ravel()
    pe = dirs @ p
    rho_max = -pe + np.sqrt(pe**2 + R**2 - np.dot(p, p))
    if exterior:
        # rho = rho_max / s, d rho = rho_max / s^2 ds
        rho = rho_max[:, None] / s[None, :]
        jac = rho_max[:, None] / s[None, :] ** 2
    else:
        rho = rho_max[:, None] * s[None, :]
        jac = np.broadcast_to(rho_max[:, None], rho.shape)
    z = p + rho[..., None] * dirs[:, None, :]
    w = wdir[:, None] * ws[None, :] * jac * rho**4
    return z.reshape(-1, 3), w.ravel(), rho.ravel()


def _composition_terms(p, q, R, n, collinear):
    """``E + T(p, q) + T(q, p) - M`` at one rule order."""
    k = 1.0 / (3.0 * OMEGA5)
    z, w, rho = _polar_rule(p, R, n, collinear)
    # Gamma_p * rho^4 = k * rho, kept analytic to avoid 0 * inf at the pole
    tpq = np.dot(w / rho**3 * k, _image(z, q, R))
    m = np.dot(w, _image(p, z, R) * _image(z, q, R))
    if np.array_equal(p, q):
        tqp = tpq
    else:
        zq, wq, rq = _polar_rule(q, R, n, collinear)
        tqp = np.dot(wq / rq**3 * k, _image(zq, p, R))
    ze, we, re_ = _polar_rule(p, R, n, collinear, exterior=True)
    e = np.dot(we / re_**3 * k, _gamma(ze - q))
    return e + tpq + tqp - m


def _double_poisson(p, q, R, n):
    s, ws = legendre_rule(n)
    s, ws = 0.5 * (s + 1.0), 0.5 * ws
    t = s * s
    # t = s^2: t^1.5 dt = 2 s^4 ds
    integral = 2.0 * np.dot(ws * s**4, _image_distance(p, t[:, None] * q, R) ** -3)
    pref = (R**2 - np.dot(p, p)) * (R**2 - np.dot(q, q)) / (2.0 * R**2)
    return 1.0 / _image_distance(p, q, R) + pref * integral


def _refine(fn, n0, n_max, tol):
    """Evaluate ``fn(n)`` with doubling ``n`` until two orders agree to ``tol``."""
    n = n0
    prev = fn(n)
    while True:
        n *= 2
        cur = fn(n)
        err = abs(cur - prev)
        if err <= tol * abs(cur) or n >= n_max:
            break
        prev = cur
    if err > tol * abs(cur):
        raise AccuracyError(f"quadrature did not reach relative tolerance {tol:g}", err)
    return cur, err


def _regular_part_eval(dom, p, q, method, tol):
    R = dom.radius
    if method == "composition":
        cf = compute_constants().c_fund.value
        a, b, collinear = _plane_coordinates(p, q, R)
        n0, n_max = (16, 512) if collinear else (12, 192)
        val, err = _refine(lambda n: _composition_terms(a, b, R, n, collinear), n0, n_max, tol)
        return GreensEval(cf * val, method, cf * err)
    if method == "double-poisson":
        val, err = _refine(lambda n: _double_poisson(p, q, R, n), 8, 1024, tol)
        return GreensEval(val, method, err)
    raise InvalidArgumentError(f"unknown method {method!r}")


def regular_part_eval(
    dom: BallDomain,
    x,
    y,
    method: Method = "composition",
    diagonal: Literal["direct", "extrapolate"] = "direct",
    tol: float = 1e-11,
) -> GreensEval:
    """``H(x, y)`` with an error estimate.

    On the diagonal the decomposition above is already regular, so the
    default is to evaluate it there directly. ``diagonal="extrapolate"``
    instead extrapolates ``H(x, x + h e)`` quadratically from
    ``h in {1e-2, 5e-3, 2.5e-3} R`` along a fixed direction.
    """
    p, q = dom.local(x), dom.local(y)
    if diagonal == "extrapolate" and np.array_equal(p, q):
        e = p / np.linalg.norm(p) if np.any(p) else np.eye(DIM)[0]
        hs = np.array([1e-2, 5e-3, 2.5e-3]) * dom.radius
        vals = [_regular_part_eval(dom, p, p + h * e, method, tol) for h in hs]
        coef = np.polyfit(hs, [v.value for v in vals], 2)
        lin = np.polyfit(hs[1:], [v.value for v in vals[1:]], 1)
        err = abs(coef[-1] - lin[-1]) + max(v.error_estimate for v in vals)
        return GreensEval(float(coef[-1]), method, float(err))
    if diagonal not in ("direct", "extrapolate"):
        raise InvalidArgumentError(f"unknown diagonal mode {diagonal!r}")
    return _regular_part_eval(dom, p, q, method, tol)


def regular_part(dom: BallDomain, x, y, method: Method = "composition", **kw) -> float:
    return regular_part_eval(dom, x, y, method, **kw).value


def biharmonic_green(
    dom: BallDomain, x, y, method: Method = "composition", tol: float = 1e-11
) -> GreensEval:
    """``G(x, y)`` with ``Laplace^2 G(x, .) = c_fund delta_x`` and Navier boundary values."""
    p, q = dom.local(x), dom.local(y)
    if np.array_equal(p, q):
        raise SingularityError("Green's function evaluated on the diagonal")
    h = _regular_part_eval(dom, p, q, method, tol)
    return GreensEval(1.0 / np.linalg.norm(p - q) - h.value, method, h.error_estimate)


def robin(dom: BallDomain, x, method: Method = "composition", tol: float = 1e-11) -> GreensEval:
    """``phi(x) = H(x, x)``."""
    p = dom.local(x)
    return _regular_part_eval(dom, p, p, method, tol)


def robin_center_exact(radius: float) -> float:
    """``phi`` at the centre of a ball in closed form, ``6 / (5 R)``."""
    return 6.0 / (5.0 * radius)


def _check_step(dom, x, step):
    if not step > 0:
        raise InvalidArgumentError("step must be positive")
    d = dom.boundary_distance(x)
    if d <= 10.0 * step:
        raise AccuracyError(f"step {step:g} too large for boundary distance {d:.3g}", step / d)


def robin_gradient(
    dom: BallDomain, x, step: float = 1e-2, method: Method = "composition", return_error=False
):
    """Central-difference gradient of ``phi``, Richardson-combined over ``step`` and ``step/2``."""
    x = np.asarray(x, dtype=float)
    _check_step(dom, x, step)

    def central(h):
        g = np.empty(DIM)
        for i in range(DIM):
            e = np.zeros(DIM)
            e[i] = h
            g[i] = (robin(dom, x + e, method).value - robin(dom, x - e, method).value) / (2 * h)
        return g

    g1, g2 = central(step), central(0.5 * step)
    grad = (4.0 * g2 - g1) / 3.0
    err = float(np.linalg.norm(g2 - g1)) / 3.0
    return (grad, err) if return_error else grad


def robin_hessian(dom: BallDomain, x, step: float = 2e-2, method: Method = "composition"):
    """Finite-difference Hessian of ``phi`` (symmetric 5x5)."""
    x = np.asarray(x, dtype=float)
    _check_step(dom, x, step)
    phi = lambda z: robin(dom, z, method).value  # noqa: E731
    f0 = phi(x)
    hess = np.empty((DIM, DIM))
    eye = np.eye(DIM) * step
    for i in range(DIM):
        hess[i, i] = (phi(x + eye[i]) - 2 * f0 + phi(x - eye[i])) / step**2
        for j in range(i):
            hess[i, j] = hess[j, i] = (
                phi(x + eye[i] + eye[j])
                - phi(x + eye[i] - eye[j])
                - phi(x - eye[i] + eye[j])
                + phi(x - eye[i] - eye[j])
            ) / (4 * step**2)
    return hess


def tabulate_robin(dom: BallDomain, points: int, method: Method = "composition", step=None):
    """Rows ``(r, phi, dphi_dr, error_estimate)`` along a radius, ``r`` in ``[0, 0.9 R]``."""
    if points < 2:
        raise InvalidArgumentError("need at least two points")
    R = dom.radius
    e = np.eye(DIM)[0]
    h = step if step is not None else 1e-3 * R
    rows = []
    for r in np.linspace(0.0, 0.9 * R, points):
        x = dom.center + r * e
        ev = robin(dom, x, method)
        hi = robin(dom, x + h * e, method).value
        lo = robin(dom, x - h * e, method).value
        rows.append((float(r), ev.value, (hi - lo) / (2 * h), ev.error_estimate))
    return rows


def robin_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "phi", "dphi_dr", "error_estimate"])
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()
