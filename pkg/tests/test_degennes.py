import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magrobin import degennes
from magrobin.degennes import DIRICHLET, HalfLineGrid, NonRegularWindow

# tests/oracles.py: adaptive shooting with scipy (DOP853, rtol 1e-13), T = 10
SHOOT_THETA0 = 0.5901061249502494
SHOOT_XI0 = 0.7681836424485659
SHOOT_MU_GM1_S05 = -0.8269474950547914  # mu_1(gamma=-1, sigma=0.5)


def test_robin_parameter_parsing():
    assert degennes.robin("Dirichlet") == DIRICHLET
    assert degennes.robin(math.inf) == DIRICHLET
    assert degennes.robin(0.5) == 0.5
    with pytest.raises(ValueError):
        degennes.robin(-degennes.GAMMA_BOUND - 1)
    with pytest.raises(ValueError):
        degennes.robin(math.nan)


def test_grid_invariants():
    with pytest.raises(ValueError):
        HalfLineGrid(20.0, 500)
    g = HalfLineGrid.for_sigma(15.0)
    assert g.T >= 27.0
    assert HalfLineGrid(20.0, 8000).coarsened().N == 4000


def test_solve_rejects_bad_input():
    with pytest.raises(ValueError):
        degennes.solve(0.0, math.nan, 1)
    with pytest.raises(ValueError):
        degennes.solve(0.0, 0.0, 900, HalfLineGrid(20.0, 8000))


def test_harmonic_oscillator_levels():
    pairs = degennes.solve(0.0, 0.0, 3)
    assert np.allclose([p.mu for p in pairs], [1, 5, 9], atol=1e-6)
    pairs = degennes.solve(DIRICHLET, 0.0, 3)
    assert np.allclose([p.mu for p in pairs], [3, 7, 11], atol=1e-6)


def test_sign_conventions():
    for p in degennes.solve(0.7, 1.0, 3):
        assert p.u[0] > 0
        w = np.full(p.t.size, p.t[1] - p.t[0])
        w[0] *= 0.5
        assert abs(np.sum(w * p.u ** 2) - 1.0) < 1e-12
    for p in degennes.solve(DIRICHLET, 1.0, 2):
        assert p.u[0] > 0  # first interior node, i.e. u'(0) > 0


def test_shooting_oracle_point():
    assert abs(degennes.mu(-1.0, 0.5) - SHOOT_MU_GM1_S05) < 1e-8


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.5, 3.0))
def test_gaussian_ground_state(gamma):
    # exp(-(t - gamma)^2 / 2) satisfies u'(0) = gamma u(0) and has energy 1
    assert abs(degennes.mu(gamma, gamma) - 1.0) < 1e-8


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.0, 3.0), st.floats(-2.0, 6.0))
def test_simplicity_and_lower_bound(gamma, sigma):
    mus = np.array([p.mu for p in degennes.solve(gamma, sigma, 3)])
    assert np.all(np.diff(mus) > 1e-8)
    for n in (2, 3):
        assert mus[n - 1] > 2 * n - 3


def test_dirichlet_asymptote_from_above():
    # the Dirichlet gap decays like a Gaussian in sigma; sample where it is resolved
    s = np.linspace(0.5, 3.0, 11)
    for n in (1, 2):
        gap = np.array([degennes.mu(DIRICHLET, x, n) for x in s]) - (2 * n - 1)
        assert np.all(gap > 1e-8)
        assert np.all(np.diff(gap) < 0)


@pytest.mark.parametrize("gamma", [-1.0, 0.0, 2.0])
def test_landau_asymptote_real_gamma(gamma):
    # for real gamma the curves return to 2n - 1 from below; the distance shrinks
    s = np.linspace(4.0, 8.0, 9)
    for n in (1, 2):
        gap = np.abs(np.array([degennes.mu(gamma, x, n) for x in s]) - (2 * n - 1))
        resolved = gap > 1e-9
        assert np.all(np.diff(gap[resolved]) < 0)
        assert gap[-1] < 1e-6


def test_neumann_limits():
    m6 = degennes.mu(0.0, 6.0)
    assert 1 - 1e-3 < m6 < 1 + 1e-9
    assert degennes.mu(0.0, -3.0) > 9


def test_grid_convergence_order():
    gamma, sigma = 1.0, 0.5
    vals = [degennes.branch_point(gamma, sigma, 1, HalfLineGrid(20.0, N), extrapolate=False).mu
            for N in (2000, 4000, 8000)]
    order = math.log2((vals[0] - vals[1]) / (vals[1] - vals[2]))
    assert 1.8 <= order <= 2.2


def test_refined_grid_agreement():
    for s in (-1.0, 0.5, 3.0):
        a = degennes.mu(0.3, s)
        b = degennes.mu(0.3, s, grid=HalfLineGrid(HalfLineGrid.for_sigma(s).T, 16000))
        assert abs(a - b) < 1e-6


def test_dispersion_branch_interpolation():
    br = degennes.dispersion_branch(0.0, 1, (-1.0, 3.0), 400)
    assert br.midpoint_error() <= 1e-7
    assert not br.warnings
    with pytest.raises(ValueError):
        br.mu_at(5.0)


def test_dirichlet_branch_is_decreasing():
    br = degennes.dispersion_branch(DIRICHLET, 1, (-2.0, 6.0), 81)
    d = np.diff(br.mu)
    assert np.all(d[np.abs(d) > degennes.MONOTONE_FLOOR] < 0)
    assert not br.warnings
    with pytest.raises(ValueError):
        degennes.find_minimum(DIRICHLET, 1)


def test_figure_layout_gamma_minus_one():
    # every curve dips below its Landau level and comes back
    for n in (1, 2, 3, 4):
        ext = degennes.find_minimum(-1.0, n)
        assert ext.theta < 2 * n - 1
        assert degennes.mu(-1.0, 6.0, n) > ext.theta


def test_neumann_minimum_against_shooting():
    ext = degennes.find_minimum(0.0, 1)
    assert abs(ext.theta - SHOOT_THETA0) < 1e-6
    assert abs(ext.xi - SHOOT_XI0) < 1e-6
    assert abs(ext.xi ** 2 - ext.theta) < 1e-6


@pytest.mark.parametrize("gamma", [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0])
def test_critical_value_identity(gamma):
    e = degennes.find_minimum(gamma, 1)
    assert abs(e.theta - (e.xi ** 2 - gamma ** 2)) < 1e-6
    assert e.mu2 > 0


@pytest.mark.parametrize("gamma", [-1.0, 0.0, 1.0])
def test_second_band_minimum(gamma):
    assert 1 < degennes.find_minimum(gamma, 2).theta < 3


@pytest.mark.parametrize("gamma,n,tol", [(0.0, 1, 1e-4), (1.0, 1, 1e-4), (-0.5, 2, 1e-3)])
def test_dauge_helffer(gamma, n, tol):
    assert degennes.dauge_helffer_residual(gamma, n) <= tol


@pytest.mark.parametrize("gamma,n", [(0.0, 1), (2.0, 1), (0.0, 2)])
def test_moments(gamma, n):
    m1, m3 = degennes.moment_check(gamma, n)
    assert m1 <= 1e-7 and m3 <= 1e-6


@pytest.mark.parametrize("gamma", [-1.0, 0.0, 0.5, 2.0])
def test_curvature_coefficient_closed_form(gamma):
    e = degennes.find_minimum(gamma, 1)
    assert abs(degennes.compute_C(gamma, e.xi) - degennes.closed_form_C(e)) <= 1e-6


def test_neumann_C_positive():
    e = degennes.find_minimum(0.0, 1)
    c = degennes.compute_C(0.0, e.xi)
    assert c > 0
    assert abs(c - e.u0sq / 3) < 1e-6


def test_gamma0_threshold():
    assert degennes.gamma0_function(0.0) == 1.0
    g0 = degennes.find_gamma0(1)
    assert g0 > 0
    assert abs(g0 - degennes.gamma0_from_C(1)) < 1e-5
    e = degennes.find_minimum(g0, 1)
    assert abs(degennes.compute_C(g0, e.xi)) < 1e-6
    for g in (g0 - 0.2, g0 - 0.01, g0 + 0.01, g0 + 0.2):
        e = degennes.find_minimum(g, 1)
        assert np.sign(degennes.compute_C(g, e.xi)) == np.sign(g0 - g)


def test_dirichlet_C_is_finite():
    assert math.isfinite(degennes.compute_C(DIRICHLET, 1.0))


def test_window_three_curves():
    assert 3 < degennes.find_minimum(0.0, 3).theta < 4.7
    dec = degennes.window_decomposition(0.0, 4.7, 4.9)
    assert dec.n_target == 3 and dec.N_curves == 3
    assert [dec.p(k) for k in (1, 2, 3)] == [1, 1, 2]
    assert dec.regular


def test_window_below_band_bottom_gives_two_components():
    theta0 = degennes.find_minimum(0.0, 1).theta
    dec = degennes.window_decomposition(0.0, theta0 + 0.1, 0.9)
    comps = dec.for_curve(1)
    assert len(comps) == 2
    assert [c.monotone for c in comps] == ["decreasing", "increasing"]
    for c in comps:
        s = np.linspace(c.lo, c.hi, 7)
        mus = np.array([degennes.mu(0.0, x) for x in s])
        d = np.diff(mus)
        assert np.all(d < 0) if c.monotone == "decreasing" else np.all(d > 0)
        assert abs(degennes.mu(0.0, c.alpha) - dec.window[0]) < 1e-8
        assert abs(degennes.mu(0.0, c.beta) - dec.window[1]) < 1e-8


def test_window_containing_minimum():
    dec = degennes.window_decomposition(0.0, 0.3, 0.9)
    assert dec.p(1) == 1 and not dec.regular


def test_dirichlet_windows():
    assert degennes.window_decomposition(DIRICHLET, -math.inf, 0.9).N_curves == 0
    dec = degennes.window_decomposition(DIRICHLET, 3.5, 4.5)
    assert [dec.p(k) for k in (1, 2)] == [1, 1]


def test_non_regular_windows_rejected():
    theta0 = degennes.find_minimum(0.0, 1).theta
    with pytest.raises(NonRegularWindow):
        degennes.window_decomposition(0.0, 0.7, 1.0)
    with pytest.raises(NonRegularWindow):
        degennes.window_decomposition(0.0, theta0, 0.9)
    with pytest.raises(NonRegularWindow):
        degennes.window_decomposition(0.0, 0.9, 1.2)
