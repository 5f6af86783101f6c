from math import e, factorial

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from kronphi import PhiTable, ShapeMismatchError, expm, gll_rule, phi_square_step, phiquad
from kronphi.matfun import expm_multiples
from kronphi.oracle import phi_taylor_matrix


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def phi_block(X, ell):
    """phi_ell(X) read off the exponential of an augmented block matrix (scipy)."""
    n = X.shape[0]
    if ell == 0:
        return scipy.linalg.expm(X)
    W = np.zeros((n * (ell + 1), n * (ell + 1)))
    W[:n, :n] = X
    for k in range(ell):
        W[k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = np.eye(n)
    return scipy.linalg.expm(W)[:n, ell * n:]


def scaled_random(rng, n, norm):
    X = rng.standard_normal((n, n))
    return X * norm / np.abs(X).sum(axis=0).max()


# --- expm ---------------------------------------------------------------------

def test_expm_trivial_cases():
    np.testing.assert_array_equal(expm(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(expm(np.diag([1.0, 2.0])), np.diag([e, e**2]), rtol=1e-15)
    np.testing.assert_allclose(expm(np.array([[0.0, 1.0], [0.0, 0.0]])), [[1, 1], [0, 1]], atol=1e-16)


def test_expm_against_taylor_oracle():
    X = scaled_random(np.random.default_rng(0), 8, 5.0)
    assert rel(expm(X), phi_taylor_matrix(X, 0)) < 1e-12


@pytest.mark.parametrize("norm", [1e-3, 0.1, 1.0, 3.0, 10.0, 100.0])
def test_expm_against_scipy(norm):
    X = scaled_random(np.random.default_rng(1), 12, norm)
    assert rel(expm(X), scipy.linalg.expm(X)) < 1e-12


def test_expm_errors():
    with pytest.raises(ShapeMismatchError):
        expm(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        expm(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        expm(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_expm_multiples_match_individual_exponentials():
    Y = scaled_random(np.random.default_rng(2), 7, 0.9)
    cs = np.linspace(0, 1, 6)
    for c, E in zip(cs, expm_multiples(Y, cs)):
        np.testing.assert_allclose(E, scipy.linalg.expm(c * Y), rtol=1e-14, atol=1e-15)
    big = expm_multiples(10 * Y, [0.5, 1.0])
    np.testing.assert_allclose(big[1], scipy.linalg.expm(10 * Y), rtol=1e-12)


# --- GLL ----------------------------------------------------------------------

def test_gll_two_and_three_points():
    r2 = gll_rule(2)
    np.testing.assert_allclose(r2.nodes, [0, 1])
    np.testing.assert_allclose(r2.weights, [0.5, 0.5])
    r3 = gll_rule(3)
    np.testing.assert_allclose(r3.nodes, [0, 0.5, 1], atol=1e-16)
    np.testing.assert_allclose(r3.weights, [1 / 6, 2 / 3, 1 / 6], rtol=1e-15)
    for k in range(4):
        assert r3.weights @ r3.nodes**k == pytest.approx(1 / (k + 1), rel=1e-15)


@pytest.mark.parametrize("q", range(2, 21))
def test_gll_exact_to_degree_2q_minus_3(q):
    rule = gll_rule(q)
    assert rule.q == q
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert rule.nodes[0] == 0.0 and rule.nodes[-1] == 1.0
    assert np.all(np.diff(rule.nodes) > 0) and np.all(rule.weights > 0)
    for k in range(2 * q - 2):
        assert rule.weights @ rule.nodes**k == pytest.approx(1 / (k + 1), abs=1e-14)


def test_gll_rejects_small_q():
    with pytest.raises(ValueError):
        gll_rule(1)


# --- phiquad --------------------------------------------------------------------

def test_phiquad_at_zero():
    table = phiquad(np.zeros((4, 4)), 2)
    for ell in range(3):
        np.testing.assert_allclose(table[ell], np.eye(4) / factorial(ell), atol=1e-16)


def test_phiquad_scalar_closed_forms():
    table = phiquad(np.array([[1.0]]), 2)
    assert table[1][0, 0] == pytest.approx(e - 1, rel=1e-14)
    assert table[2][0, 0] == pytest.approx(e - 2, rel=1e-14)


def test_phiquad_ell_zero_is_expm():
    X = scaled_random(np.random.default_rng(3), 5, 4.0)
    table = phiquad(X, 0)
    assert len(table) == 1
    np.testing.assert_array_equal(table[0], expm(X))


def test_phiquad_random_against_taylor():
    X = scaled_random(np.random.default_rng(4), 10, 20.0)
    table = phiquad(X, 2)
    for ell in range(3):
        assert rel(table[ell], phi_taylor_matrix(X, ell)) < 1e-11


@pytest.mark.parametrize("norm", [0.01, 0.7, 5.0, 30.0, 50.0])
def test_phiquad_against_block_exponential(norm):
    X = scaled_random(np.random.default_rng(5), 15, norm)
    table = phiquad(X, 3)
    for ell in range(4):
        assert rel(table[ell], phi_block(X, ell)) < 1e-11


def test_phiquad_errors():
    with pytest.raises(ShapeMismatchError):
        phiquad(np.zeros((2, 3)), 1)
    with pytest.raises(ValueError):
        phiquad(np.eye(2), -1)


def test_phiquad_two_point_rule_is_inaccurate():
    X = scaled_random(np.random.default_rng(6), 6, 2.0)
    assert rel(phiquad(X, 2, rule=gll_rule(2))[2], phi_taylor_matrix(X, 2)) > 1e-6


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.floats(1e-3, 50.0), st.integers(0, 2**32 - 1))
def test_property_recurrence(n, norm, seed):
    X = scaled_random(np.random.default_rng(seed), n, norm)
    table = phiquad(X, 3)
    for k in range(3):
        # residual scaled by the size of the terms; phi_k itself can be tiny
        # (cancellation in X phi_{k+1} + I/k! for strongly negative X)
        Xphi = X @ table[k + 1]
        eye = np.eye(n) / factorial(k)
        res = np.linalg.norm(table[k] - Xphi - eye)
        assert res <= 1e-11 * (np.linalg.norm(Xphi) + np.linalg.norm(eye))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.floats(1e-2, 20.0), st.integers(0, 2**32 - 1))
def test_property_extra_scaling_invariance(n, norm, seed):
    X = scaled_random(np.random.default_rng(seed), n, norm)
    a, b = phiquad(X, 2), phiquad(X, 2, extra_scaling=2)
    for ell in range(3):
        assert rel(b[ell], a[ell]) < 1e-11


# --- squaring step ---------------------------------------------------------------

def test_square_step_fixed_point_at_zero():
    table = PhiTable(base=np.zeros((3, 3)), phis=tuple(np.eye(3) / factorial(l) for l in range(3)))
    doubled = phi_square_step(table)
    for a, b in zip(doubled.phis, table.phis):
        np.testing.assert_array_equal(a, b)


def test_square_step_scalar():
    z = 0.5
    table = PhiTable(base=np.array([[z]]),
                     phis=(np.array([[np.exp(z)]]), np.array([[(np.exp(z) - 1) / z]])))
    assert phi_square_step(table)[1][0, 0] == pytest.approx(e - 1, rel=1e-15)
    z = 1.0
    p1 = e - 1
    assert (e * p1 + p1) / 2 == pytest.approx((e**2 - 1) / 2, rel=1e-15)


def test_two_square_steps_reproduce_phiquad():
    X = scaled_random(np.random.default_rng(7), 6, 3.0)
    table = phiquad(X / 4, 3)
    doubled = phi_square_step(phi_square_step(table))
    np.testing.assert_allclose(doubled.base, X)
    ref = phiquad(X, 3)
    for ell in range(4):
        assert rel(doubled[ell], ref[ell]) < 1e-11
        assert rel(doubled[ell], phi_taylor_matrix(X, ell)) < 1e-11
