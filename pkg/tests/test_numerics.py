import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magrobin import numerics
from magrobin.numerics import DenseSym, QuadratureRule, SymTridiag


def laplacian(n):
    return SymTridiag(np.full(n, 2.0), np.full(n - 1, -1.0))


def test_symtridiag_rejects_bad_input():
    with pytest.raises(ValueError):
        SymTridiag([1.0], [])
    with pytest.raises(ValueError):
        SymTridiag([1.0, 2.0, 3.0], [1.0])
    with pytest.raises(ValueError):
        SymTridiag([1.0, np.nan], [0.0])


def test_densesym_rejects_asymmetric():
    with pytest.raises(ValueError):
        DenseSym([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        DenseSym(np.ones((2, 3)))


def test_two_by_two_example():
    lam = numerics.tridiag_eigvals(SymTridiag([2.0, 2.0], [1.0]), 1, 2)
    assert np.allclose(lam, [1.0, 3.0], atol=1e-13)


def test_discrete_laplacian_closed_form():
    n = 50
    lam, vec = numerics.tridiag_eigs(laplacian(n), 1, 5)
    exact = 2.0 - 2.0 * np.cos(np.pi * np.arange(1, 6) / (n + 1))
    assert np.allclose(lam, exact, atol=1e-12)
    assert np.allclose(vec.T @ vec, np.eye(5), atol=1e-8)


def test_index_range_validation():
    with pytest.raises(ValueError):
        numerics.tridiag_eigvals(laplacian(4), 0, 2)
    with pytest.raises(ValueError):
        numerics.tridiag_eigvals(laplacian(4), 3, 5)


def test_sturm_count():
    m = SymTridiag([2.0, 2.0], [1.0])
    assert list(numerics.tridiag_count(m, [0.5, 2.0, 3.5])) == [0, 1, 2]


def test_clustered_eigenvectors_are_orthogonal():
    # two decoupled identical blocks produce exact double eigenvalues
    d = np.array([1.0, 3.0, 1.0, 3.0])
    e = np.array([0.5, 0.0, 0.5])
    lam, vec = numerics.tridiag_eigs(SymTridiag(d, e), 1, 4)
    assert abs(lam[0] - lam[1]) < 1e-12
    assert np.allclose(vec.T @ vec, np.eye(4), atol=1e-8)


def test_deterministic_eigenvectors():
    m = laplacian(30)
    _, v1 = numerics.tridiag_eigs(m, 1, 3)
    _, v2 = numerics.tridiag_eigs(m, 1, 3)
    assert np.array_equal(v1, v2)


tridiag_st = st.integers(2, 40).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-10, 10), min_size=n, max_size=n),
        st.lists(st.floats(-5, 5), min_size=n - 1, max_size=n - 1),
    )
)


@settings(max_examples=60, deadline=None)
@given(tridiag_st)
def test_trace_identity(data):
    d, e = data
    m = SymTridiag(np.array(d), np.array(e))
    lam = numerics.tridiag_eigvals(m, 1, m.n)
    scale = max(1.0, np.abs(d).sum())
    assert abs(lam.sum() - np.sum(d)) <= 1e-9 * scale
    assert np.all(np.diff(lam) >= -1e-12 * max(1.0, m.norm()))


@settings(max_examples=40, deadline=None)
@given(tridiag_st)
def test_tridiag_orthonormal_and_residual(data):
    d, e = data
    m = SymTridiag(np.array(d), np.array(e))
    lam, v = numerics.tridiag_eigs(m, 1, m.n)
    assert np.abs(v.T @ v - np.eye(m.n)).max() <= 1e-8
    assert np.abs(m.matvec(v) - v * lam).max() <= 1e-8 * max(1.0, m.norm())


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12).flatmap(
    lambda n: st.lists(st.floats(-3, 3), min_size=n * n, max_size=n * n)))
def test_dense_against_numpy(entries):
    n = int(round(math.sqrt(len(entries))))
    a = np.array(entries).reshape(n, n)
    a = a + a.T
    lam, v = numerics.dense_sym_eigs(DenseSym(a))
    assert np.allclose(lam, np.linalg.eigvalsh(a), atol=1e-9 * max(1.0, np.abs(a).max()))
    assert np.abs(v.T @ v - np.eye(n)).max() <= 1e-8


def test_zero_matrix():
    lam, v = numerics.dense_sym_eigs(DenseSym(np.zeros((3, 3))))
    assert np.array_equal(lam, np.zeros(3)) and np.array_equal(v, np.eye(3))
    assert np.array_equal(numerics.tridiag_eigvals(SymTridiag(np.zeros(4), np.zeros(3)), 1, 4), np.zeros(4))


def test_householder_similarity():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((7, 7))
    a = a + a.T
    t, q = numerics.householder_tridiagonalize(a)
    assert np.allclose(q @ t.to_dense() @ q.T, a, atol=1e-12)
    assert np.allclose(q.T @ q, np.eye(7), atol=1e-12)


def test_brent_root_contract():
    tol = 1e-12
    x = numerics.brent_root(lambda x: x ** 3 - 2.0, (0.0, 2.0), tol=tol)
    assert abs(x ** 3 - 2.0) <= 10 * tol
    with pytest.raises(ValueError):
        numerics.brent_root(lambda x: x * x + 1.0, (-1.0, 1.0))


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 3))
def test_brent_root_residual(c, slope):
    tol = 1e-12
    f = lambda x: slope * (x - c) + 0.1 * math.sin(x - c)
    x = numerics.brent_root(f, (c - 10, c + 10), tol=tol)
    assert abs(f(x)) <= 10 * tol * max(1.0, slope)


def test_minimize_1d():
    x, v = numerics.minimize_1d(lambda x: (x - 0.3) ** 2 + 1.0, (-1.0, 2.0))
    assert abs(x - 0.3) < 1e-8 and abs(v - 1.0) < 1e-14
    with pytest.raises(ValueError):
        numerics.minimize_1d(lambda x: x, (1.0, 1.0))


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(2, 200))
def test_trapezoid_exact_on_linear(p, q, n):
    rule = QuadratureRule.uniform(0.0, 1.0, n)
    assert abs(numerics.integrate(lambda x: p * x + q, rule) - (0.5 * p + q)) < 1e-13


def test_quadrature_examples():
    assert numerics.integrate(lambda x: x, QuadratureRule.uniform(0, 1, 7)) == pytest.approx(0.5, abs=1e-15)
    simpson = QuadratureRule.uniform(0, math.pi, 2001, "simpson")
    assert abs(numerics.integrate(np.sin, simpson) - 2.0) < 1e-8
    with pytest.raises(ValueError):
        QuadratureRule.uniform(0, 1, 10, "simpson")
    with pytest.raises(ValueError):
        numerics.integrate(np.ones(3), QuadratureRule.uniform(0, 1, 4))


def test_second_derivative_examples():
    assert abs(numerics.second_derivative(math.sin, 0.0)) < 1e-8
    assert abs(numerics.second_derivative(lambda x: x ** 4, 1.0) - 12.0) < 1e-6


def test_richardson_removes_quadratic_error():
    exact, c = 1.7, 0.4
    d = 0.1
    assert numerics.richardson(exact + c * (2 * d) ** 2, exact + c * d ** 2) == pytest.approx(exact, abs=1e-14)
