"""Numerical checks of the local model near a puncture.

Everything here lives on the punctured unit disc in the unitary gauge, where
the model data is a weight vector alpha, a semisimple piece s, and a
normalized sl2-triple (H, X, Y) through the nilpotent residue:

* the adapted metric  h0 = |z|^-alpha (-ln|z|^2)^Ad(exp(i theta alpha))H |z|^-alpha,
* the model connection, whose only component is angular,
      A = -i (alpha - Ad(exp(i theta alpha)) H / ln|z|^2) d theta,
* the model Higgs field  (s - Ad(exp(i theta alpha)) Y / ln|z|^2) dz/z.

The curvature of A equals Ad(exp(i theta alpha)) H dz dz-bar / (|z| ln|z|^2)^2
exactly, and the bracket [phi, tau(phi)] reproduces it, so the pure model
solves the Hermite-Einstein equation identically; a nonzero residual profile
requires higher-order Higgs terms, which ``hitchin_residual`` accepts in the
holomorphic gauge and transports itself.  ``holonomy_check`` integrates the
angular connection around a circle and compares with the predicted monodromy
factors of the translation dictionary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .liealg import Realization, SL2Triple, hs_norm
from .nahodge import CommutationFailure, _realize, monodromy_factors
from .parhiggs import alpha_matrix


class NotSingleValued(ValueError):
    """Angular conjugation of a field that exp(2 pi i alpha) does not fix."""


class GridTooCoarse(ValueError):
    """Finite-difference and analytic curvature disagree beyond the threshold."""


class IntegratorFailure(ValueError):
    """Step refinement did not reach the requested tolerance."""


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialGrid:
    """Geometric radii (strictly decreasing, inside the unit disc) and a
    number of equispaced angular samples."""

    radii: tuple[float, ...]
    n_theta: int = 64

    def __post_init__(self):
        if not self.radii:
            raise ValueError("the grid needs at least one radius")
        if any(not 0 < r < 1 for r in self.radii):
            raise ValueError("radii must lie in (0, 1)")
        if any(b >= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly decreasing")
        if self.n_theta < 64:
            raise ValueError("need at least 64 angular samples")

    @property
    def thetas(self) -> np.ndarray:
        return np.linspace(0.0, 2 * math.pi, self.n_theta, endpoint=False)


def radial_grid(r_max: float, r_min: float, count: int, n_theta: int = 64) -> RadialGrid:
    """Geometric sequence of ``count`` radii from r_max down to r_min."""
    if not 0 < r_min < r_max < 1:
        raise ValueError("need 0 < r_min < r_max < 1")
    if count < 2:
        raise ValueError("need at least two radii")
    ratio = (r_min / r_max) ** (1.0 / (count - 1))
    return RadialGrid(radii=tuple(r_max * ratio**k for k in range(count)), n_theta=n_theta)


# ---------------------------------------------------------------------------
# field evaluation
# ---------------------------------------------------------------------------


def _polar(z) -> tuple[float, float]:
    if isinstance(z, tuple):
        r, theta = float(z[0]), float(z[1])
    else:
        zc = complex(z)
        r, theta = abs(zc), math.atan2(zc.imag, zc.real)
    if not 0 < r < 1:
        raise ValueError("the model lives on the punctured unit disc: need 0 < |z| < 1")
    return r, theta


def _check_angular_fix(a_mat: np.ndarray, fields: Sequence[tuple[str, np.ndarray]], tol: float):
    turn = expm(2j * math.pi * a_mat)
    turn_inv = np.linalg.inv(turn)
    for name, v in fields:
        if hs_norm(turn @ v @ turn_inv - v) > tol * (1 + hs_norm(v)):
            raise NotSingleValued(
                f"Ad(exp(2 pi i alpha)) does not fix {name}; "
                "the angular conjugation would be multivalued"
            )


def _angular_conj(a_mat: np.ndarray, theta: float, v: np.ndarray) -> np.ndarray:
    u = expm(1j * theta * a_mat)
    return u @ v @ np.linalg.inv(u)


def model_metric_eval(alpha, h_elem, z, tol: float = 1e-10) -> np.ndarray:
    """The adapted metric at a point of the punctured disc.

    ``z`` is a nonzero complex number inside the unit disc, or an (r, theta)
    pair when the angle matters beyond its class mod 2 pi.  Reduces to
    |z|^(-2 alpha) for h_elem = 0.  Raises NotSingleValued when the grading
    element is not fixed by Ad(exp(2 pi i alpha)).
    """
    a_mat = alpha_matrix(alpha)
    h_elem = np.asarray(h_elem, dtype=complex)
    r, theta = _polar(z)
    _check_angular_fix(a_mat, [("H", h_elem)], tol)
    radial = expm(-math.log(r) * a_mat)
    log_factor = expm(math.log(-2 * math.log(r)) * _angular_conj(a_mat, theta, h_elem))
    return radial @ log_factor @ radial


def connection_angular_part(alpha, triple: SL2Triple | None, r: float, theta: float) -> np.ndarray:
    """a(r, theta) in A = -i a d theta for the model connection."""
    a_mat = alpha_matrix(alpha)
    if triple is None:
        return a_mat.astype(complex)
    log_z2 = 2 * math.log(r)
    return a_mat - _angular_conj(a_mat, theta, triple.x) / log_z2


def higgs_field_part(
    alpha,
    s: np.ndarray,
    triple: SL2Triple | None,
    r: float,
    theta: float,
    extra_terms: Sequence[tuple[int, np.ndarray]] = (),
) -> np.ndarray:
    """dz/z-coefficient of the Higgs field in the unitary gauge.

    ``extra_terms`` are holomorphic-gauge corrections psi * z^k dz/z with
    k >= 1; they are transported by the gauge change, picking up their
    |z|^k z-decay and logarithmic distortion.
    """
    a_mat = alpha_matrix(alpha)
    s = np.asarray(s, dtype=complex)
    val = s.copy()
    log_z2 = 2 * math.log(r)
    if triple is not None:
        val = val - _angular_conj(a_mat, theta, triple.f) / log_z2
    if extra_terms:
        h_elem = np.zeros_like(a_mat) if triple is None else triple.x
        h_theta = _angular_conj(a_mat, theta, h_elem)
        # g0 = |z|^alpha (-ln|z|^2)^(-H_theta/2); the Higgs field transforms
        # by Ad(g0^{-1})
        g0 = expm(math.log(r) * a_mat) @ expm(-0.5 * math.log(-log_z2) * h_theta)
        g0_inv = np.linalg.inv(g0)
        zpow = r * complex(math.cos(theta), math.sin(theta))
        for k, psi in extra_terms:
            if int(k) < 1:
                raise ValueError("holomorphic corrections need order k >= 1")
            val = val + (zpow ** int(k)) * (g0_inv @ np.asarray(psi, dtype=complex) @ g0)
    return val


def curvature_pair(
    alpha,
    triple: SL2Triple | None,
    r: float,
    theta: float,
    fd_step: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray]:
    """(analytic, finite-difference) dz dz-bar curvature coefficients of A.

    The analytic value is Ad(exp(i theta alpha)) H / (|z| ln|z|^2)^2; the
    numeric one is the central difference of the angular coefficient in r
    (the only nonzero derivative: A has no radial component and the
    quadratic term is killed by d theta ^ d theta).
    """
    a_mat = alpha_matrix(alpha)
    if triple is None:
        n = a_mat.shape[0]
        return np.zeros((n, n), dtype=complex), np.zeros((n, n), dtype=complex)
    log_z2 = 2 * math.log(r)
    analytic = _angular_conj(a_mat, theta, triple.x) / (r * log_z2) ** 2
    step = fd_step * r
    plus = connection_angular_part(alpha, triple, r + step, theta)
    minus = connection_angular_part(alpha, triple, r - step, theta)
    fd = (plus - minus) / (2 * step) / (2 * r)
    return analytic, fd


# ---------------------------------------------------------------------------
# the residual profile
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualProfile:
    """Per-radius weighted residual of the Hermite-Einstein equation.

    ``rho[k]`` is sup over theta of  || AdH - L^2 [c, tau(c)] ||  at radius
    radii[k] (L = ln|z|^2, c the unitary-gauge Higgs coefficient): the
    residual of R(h0) = [phi, tau(phi)] rescaled by |z|^2 L^2 so the pure
    model sits at exactly zero.  ``fd_mismatch`` is the same weight applied
    to | analytic - finite-difference | curvature.
    """

    radii: tuple[float, ...]
    rho: tuple[float, ...]
    fd_mismatch: tuple[float, ...]
    fd_step: float


def _validate_model_data(real: Realization, a_mat, s, triple, tol: float):
    fields = []
    if triple is not None:
        fields = [("H", triple.x), ("X", triple.e), ("Y", triple.f)]
    _check_angular_fix(a_mat, fields, tol)
    scale = 1 + hs_norm(s)
    if hs_norm(a_mat @ s - s @ a_mat) > tol * scale:
        raise CommutationFailure("alpha and s do not commute")
    tau_s = real.tau(s)
    if hs_norm(s @ tau_s - tau_s @ s) > tol * scale * scale:
        raise CommutationFailure(
            "s does not commute with tau(s); the model connection is not flat"
        )
    if triple is not None:
        for name, part in fields:
            if hs_norm(s @ part - part @ s) > tol * scale * (1 + hs_norm(part)):
                raise CommutationFailure(f"s does not commute with the triple element {name}")


def hitchin_residual(
    alpha,
    s,
    triple: SL2Triple | None,
    grid: RadialGrid,
    realization,
    extra_terms: Sequence[tuple[int, np.ndarray]] = (),
    fd_step: float = 1e-3,
    fd_tol: float = 1e-4,
    tol: float = 1e-8,
) -> ResidualProfile:
    """Weighted Hermite-Einstein residual of the model metric over a grid.

    Raises GridTooCoarse when the finite-difference curvature drifts from
    the analytic one beyond ``fd_tol`` in the weighted norm (a sign that
    ``fd_step`` and the radii resolve nothing).
    """
    real = _realize(realization)
    a_mat = alpha_matrix(alpha)
    s = np.asarray(s, dtype=complex)
    _validate_model_data(real, a_mat, s, triple, tol)

    rho = []
    mismatch = []
    for r in grid.radii:
        weight = (2 * math.log(r)) ** 2
        worst_res = 0.0
        worst_fd = 0.0
        for theta in grid.thetas:
            analytic, fd = curvature_pair(alpha, triple, r, theta, fd_step=fd_step)
            c_phi = higgs_field_part(alpha, s, triple, r, theta, extra_terms=extra_terms)
            tau_c = real.tau(c_phi)
            bracket = c_phi @ tau_c - tau_c @ c_phi
            worst_res = max(worst_res, hs_norm(weight * (r * r * analytic - bracket)))
            worst_fd = max(worst_fd, hs_norm(weight * r * r * (analytic - fd)))
        rho.append(worst_res)
        mismatch.append(worst_fd)
        if worst_fd > fd_tol:
            raise GridTooCoarse(
                f"finite-difference curvature off by {worst_fd:.3e} at r={r:g} "
                f"(threshold {fd_tol:g}); refine fd_step"
            )
    return ResidualProfile(
        radii=tuple(grid.radii), rho=tuple(rho), fd_mismatch=tuple(mismatch), fd_step=fd_step
    )


# ---------------------------------------------------------------------------
# holonomy of the model connection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolonomyReport:
    numeric: np.ndarray
    predicted_levi: np.ndarray
    predicted_full: np.ndarray
    deviation_levi: float
    deviation_full: float
    steps: int
    est_error: float


def _rk4_circle(coeff: Callable[[float], np.ndarray], n: int, dim: int) -> np.ndarray:
    h = 2 * math.pi / n
    u = np.eye(dim, dtype=complex)
    for k in range(n):
        t = k * h
        k1 = coeff(t) @ u
        k2 = coeff(t + h / 2) @ (u + h / 2 * k1)
        k3 = coeff(t + h / 2) @ (u + h / 2 * k2)
        k4 = coeff(t + h) @ (u + h * k3)
        u = u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return u


def holonomy_check(
    alpha,
    s,
    triple: SL2Triple | None,
    r: float,
    realization,
    convention: str = "2pi_i",
    tol: float = 1e-10,
    max_doublings: int = 16,
) -> HolonomyReport:
    """Integrate the angular model connection once around the circle |z| = r.

    The parallel-transport equation is dU/d theta = -A_theta U with
    A_theta = i(-alpha + s + tau(s) - Ad(exp(i theta alpha)) N / ln r^2),
    N = Y - H - X.  Step count doubles until two Runge-Kutta sweeps agree to
    ``tol``; the deviations compare U(2 pi) against the predicted semisimple
    (Levi) part and the full predicted monodromy.  The numeric holonomy
    converges to the Levi part as r -> 0 (exactly, for Y = 0).
    """
    real = _realize(realization)
    a_mat = alpha_matrix(alpha)
    s = np.asarray(s, dtype=complex)
    if not 0 < r < 1:
        raise ValueError("need a circle radius in (0, 1)")
    _validate_model_data(real, a_mat, s, triple, max(tol, 1e-9))

    base = (-a_mat + s + real.tau(s)).astype(complex)
    log_z2 = 2 * math.log(r)
    dim = a_mat.shape[0]

    if triple is None:

        def coeff(theta: float) -> np.ndarray:
            return -1j * base

    else:
        n_mat = triple.f - triple.x - triple.e

        def coeff(theta: float) -> np.ndarray:
            return -1j * (base - _angular_conj(a_mat, theta, n_mat) / log_z2)

    steps = 128
    u_prev = _rk4_circle(coeff, steps, dim)
    est = math.inf
    for _ in range(max_doublings):
        steps *= 2
        u_next = _rk4_circle(coeff, steps, dim)
        est = hs_norm(u_next - u_prev) / 15.0  # RK4 Richardson estimate
        u_prev = u_next
        if est < tol / 2:  # absolute: the acceptance tolerances are absolute
            break
    else:
        raise IntegratorFailure(f"no convergence to {tol:g} after {steps} steps (est {est:.3e})")

    g_e, g_h, g_u, _ = monodromy_factors(alpha, s, triple, real, convention=convention)
    levi = g_e @ g_h
    full = levi @ g_u
    return HolonomyReport(
        numeric=u_prev,
        predicted_levi=levi,
        predicted_full=full,
        deviation_levi=hs_norm(u_prev - levi),
        deviation_full=hs_norm(u_prev - full),
        steps=steps,
        est_error=est,
    )
