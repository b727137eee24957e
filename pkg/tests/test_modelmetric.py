"""Adapted metric, Hermite-Einstein residual, and circle holonomy checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parhodge.liealg import build_realization, hs_norm
from parhodge.modelmetric import (
    GridTooCoarse,
    IntegratorFailure,
    NotSingleValued,
    RadialGrid,
    curvature_pair,
    higgs_field_part,
    hitchin_residual,
    holonomy_check,
    model_metric_eval,
    radial_grid,
)
from parhodge.nahodge import CommutationFailure, complete_ks_triple

E12 = np.array([[0, 1], [0, 0]], dtype=complex)
E21 = np.array([[0, 0], [1, 0]], dtype=complex)
Z2 = np.zeros((2, 2), dtype=complex)

SU11 = build_realization("SU(1,1)")
CUSP_TRIPLE = complete_ks_triple(SU11, E21)


# ---------------------------------------------------------------------------
# the adapted metric
# ---------------------------------------------------------------------------


def test_metric_weight_only():
    r = 0.3
    h = model_metric_eval((0.5, -0.5), Z2, r)
    assert np.allclose(h, np.diag([1 / r, r]), atol=1e-14)


def test_metric_log_factor_only():
    r = 0.3
    ell = -math.log(r**2)
    h = model_metric_eval((0, 0), np.diag([1.0, -1.0]), r)
    assert np.allclose(h, np.diag([ell, 1 / ell]), atol=1e-14)


def test_metric_single_valued():
    h1 = model_metric_eval((0.25, -0.25), Z2, (0.2, 1.0))
    h2 = model_metric_eval((0.25, -0.25), Z2, (0.2, 1.0 + 2 * math.pi))
    assert hs_norm(h1 - h2) < 1e-12
    # with a grading element along the wall weight
    h1 = model_metric_eval((0.5, -0.5), CUSP_TRIPLE.x, (0.2, 0.3))
    h2 = model_metric_eval((0.5, -0.5), CUSP_TRIPLE.x, (0.2, 0.3 + 2 * math.pi))
    assert hs_norm(h1 - h2) < 1e-12


def test_metric_positive_hermitian():
    h = model_metric_eval((0.5, -0.5), CUSP_TRIPLE.x, 0.1 + 0.2j)
    assert hs_norm(h - h.conj().T) < 1e-12
    assert np.min(np.linalg.eigvalsh(h)) > 0


def test_metric_rejects_multivalued_grading():
    with pytest.raises(NotSingleValued):
        model_metric_eval((0.25, 0.0), E12 + E21, 0.3)


def test_metric_needs_punctured_disc():
    with pytest.raises(ValueError):
        model_metric_eval((0, 0), Z2, 1.5)
    with pytest.raises(ValueError):
        model_metric_eval((0, 0), Z2, 0.0)


@settings(max_examples=25, deadline=None)
@given(
    a=st.integers(min_value=-2, max_value=2),
    b=st.integers(min_value=-2, max_value=2),
    h1=st.integers(min_value=-2, max_value=2),
    theta=st.floats(min_value=0.0, max_value=6.28),
)
def test_metric_positivity_property(a, b, h1, theta):
    alpha = (a / 4, b / 4)
    h_elem = np.diag([float(h1), -float(h1)])
    h = model_metric_eval(alpha, h_elem, (0.15, theta))
    assert hs_norm(h - h.conj().T) < 1e-10 * (1 + hs_norm(h))
    assert np.min(np.linalg.eigvalsh(h)) > 0


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


def test_radial_grid_geometric():
    grid = radial_grid(1e-2, 1e-6, 5)
    assert grid.radii == pytest.approx((1e-2, 1e-3, 1e-4, 1e-5, 1e-6))
    assert len(grid.thetas) == 64


def test_radial_grid_invariants():
    with pytest.raises(ValueError):
        RadialGrid(radii=(1e-3, 1e-2))  # increasing
    with pytest.raises(ValueError):
        RadialGrid(radii=(0.5,), n_theta=32)  # too few angles
    with pytest.raises(ValueError):
        RadialGrid(radii=(1.5, 0.5))  # outside the disc
    with pytest.raises(ValueError):
        radial_grid(1e-6, 1e-2, 5)  # swapped bounds


# ---------------------------------------------------------------------------
# the residual profile
# ---------------------------------------------------------------------------


def test_pure_cusp_residual_is_zero():
    grid = radial_grid(1e-2, 1e-6, 5)
    prof = hitchin_residual((0, 0), Z2, CUSP_TRIPLE, grid, "SU(1,1)")
    assert max(prof.rho) < 1e-12
    assert max(prof.fd_mismatch) < 1e-5


def test_weight_only_residual_is_zero():
    # flat model: no grading element, normal s
    grid = radial_grid(1e-2, 1e-4, 3)
    s = np.array([[0, 0.2], [0.2j, 0]], dtype=complex)
    prof = hitchin_residual((0.3, 0.3), s, None, grid, "SU(1,1)")
    assert max(prof.rho) < 1e-14
    assert max(prof.fd_mismatch) == 0


def test_perturbed_cusp_residual_decreases():
    grid = radial_grid(1e-2, 1e-6, 5)
    prof = hitchin_residual(
        (0, 0), Z2, CUSP_TRIPLE, grid, "SU(1,1)", extra_terms=[(1, 0.5 * E12)]
    )
    assert all(a > b for a, b in zip(prof.rho, prof.rho[1:]))
    assert prof.rho[0] > 1e-2
    assert prof.rho[-1] < 1e-6


def test_residual_preconditions():
    grid = radial_grid(1e-2, 1e-3, 2)
    bad_s = np.array([[0, 0.2], [0.3, 0]], dtype=complex)  # |b| != |c|: not normal
    with pytest.raises(CommutationFailure):
        hitchin_residual((0, 0), bad_s, None, grid, "SU(1,1)")
    with pytest.raises(CommutationFailure):
        hitchin_residual((0.5, -0.5), E12, CUSP_TRIPLE, grid, "SU(1,1)")
    with pytest.raises(NotSingleValued):
        hitchin_residual((0.25, 0.0), Z2, CUSP_TRIPLE, grid, "SU(1,1)")
    with pytest.raises(ValueError):
        higgs_field_part((0, 0), Z2, CUSP_TRIPLE, 0.1, 0.0, extra_terms=[(0, E12)])


def test_grid_too_coarse():
    grid = radial_grid(1e-2, 1e-3, 2)
    with pytest.raises(GridTooCoarse):
        hitchin_residual((0, 0), Z2, CUSP_TRIPLE, grid, "SU(1,1)", fd_step=0.5)


def test_curvature_fd_is_second_order():
    a1, f1 = curvature_pair((0, 0), CUSP_TRIPLE, 1e-3, 0.7, fd_step=1e-3)
    a2, f2 = curvature_pair((0, 0), CUSP_TRIPLE, 1e-3, 0.7, fd_step=5e-4)
    order = math.log2(hs_norm(a1 - f1) / hs_norm(a2 - f2))
    assert abs(order - 2) < 0.05


# ---------------------------------------------------------------------------
# holonomy
# ---------------------------------------------------------------------------


def test_holonomy_weight_only_exact():
    rep = holonomy_check((0.5, -0.5), Z2, None, 1e-3, "GL(2,C)")
    assert rep.deviation_levi < 1e-10
    assert rep.deviation_full < 1e-10  # no unipotent part
    assert np.allclose(rep.numeric, -np.eye(2), atol=1e-10)


def test_holonomy_hyperbolic_exact():
    s = np.array([[0, 0.2], [0.2j, 0]], dtype=complex)
    rep = holonomy_check((0.1, 0.1), s, None, 1e-3, "SU(1,1)")
    assert rep.deviation_levi < 1e-10


def test_holonomy_rank_three_exact():
    s3 = np.diag([0.1 + 0.2j, -0.3, 0.05 - 0.1j])
    rep = holonomy_check((0.3, 0.0, -0.2), s3, None, 1e-4, "GL(3,C)")
    assert rep.deviation_levi < 1e-10


def test_holonomy_cusp_scaling():
    radii = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    devs = []
    for r in radii:
        rep = holonomy_check((0, 0), Z2, CUSP_TRIPLE, r, "SU(1,1)")
        devs.append(rep.deviation_levi)
        # the unipotent factor never converges into the numeric holonomy
        assert rep.deviation_full > 1
    assert all(a > b for a, b in zip(devs, devs[1:]))
    # deviation * |ln r| is the constant 2*pi for this instance
    consts = [d * abs(math.log(r)) for d, r in zip(devs, radii)]
    assert max(abs(c - 2 * math.pi) for c in consts) < 1e-6
    # least-squares fit of dev against 1/|ln r| explains the data
    x = np.array([1 / abs(math.log(r)) for r in radii])
    y = np.array(devs)
    c_fit = float(x @ y / (x @ x))
    ss_res = float(np.sum((y - c_fit * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    assert 1 - ss_res / ss_tot > 0.999


def test_holonomy_wall_weight_with_triple():
    rep = holonomy_check((0.5, -0.5), Z2, CUSP_TRIPLE, 1e-4, "SU(1,1)")
    assert abs(rep.deviation_levi * abs(math.log(1e-4)) - 2 * math.pi) < 1e-6


def test_holonomy_integrator_failure():
    with pytest.raises(IntegratorFailure):
        holonomy_check((0, 0), Z2, CUSP_TRIPLE, 1e-3, "SU(1,1)", tol=1e-10, max_doublings=0)


def test_holonomy_rejects_bad_radius():
    with pytest.raises(ValueError):
        holonomy_check((0, 0), Z2, None, 2.0, "GL(2,C)")
