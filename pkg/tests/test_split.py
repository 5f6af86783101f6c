from math import factorial

import numpy as np
import pytest

from kronphi import KroneckerSum, ShapeMismatchError, apply_split_phi, build_split_phi, build_split_phis, vec
from kronphi.oracle import phi_taylor_action
from kronphi.selftest import fit_order, random_stable_factor, splitting_errors


def stable_factors(seed, dims):
    rng = np.random.default_rng(seed)
    return [random_stable_factor(rng, n) for n in dims]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_prefactor(d):
    K = KroneckerSum(stable_factors(0, (3,) * d))
    assert build_split_phi(K, 0.1, 1).prefactor == 1.0
    assert build_split_phi(K, 0.1, 2).prefactor == 2.0 ** (d - 1)
    assert build_split_phi(K, 0.1, 3).prefactor == 6.0 ** (d - 1)


def test_prefactor_l2_d3_is_four():
    assert build_split_phi(stable_factors(1, (2, 3, 4)), 0.1, 2).prefactor == 4.0


def test_tau_zero_gives_scaled_identity():
    sp = build_split_phis(stable_factors(2, (2, 3)), 0.0, [0, 1, 2])
    for ell, s in sp.items():
        for F in s.factors:
            np.testing.assert_allclose(F, np.eye(F.shape[0]) / factorial(ell), atol=1e-16)


def test_single_factor_is_exact():
    A = stable_factors(3, (5,))[0]
    v = np.random.default_rng(3).standard_normal(5)
    for ell in (0, 1, 2, 3):
        out = build_split_phi([A], 0.3, ell)(v)
        np.testing.assert_allclose(out, phi_taylor_action(0.3 * A, ell, v), rtol=1e-12)


def test_ell_zero_is_exact_d3():
    factors = stable_factors(4, (2, 3, 4))
    errs = splitting_errors(factors, 0, [1.0, 0.25, 0.01])
    assert max(errs) < 1e-12


def test_l1_d2_order_two():
    taus = [2.0**-k for k in range(3, 9)]
    errs = splitting_errors(stable_factors(5, (5, 5)), 1, taus)
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert abs(fit_order(taus, errs) - 2.0) <= 0.1
    assert np.all(np.abs(ratios - 4.0) < 0.5)


def test_wrong_prefactor_breaks_order():
    taus = [2.0**-k for k in range(3, 10)]
    factors = stable_factors(6, (3, 4, 2))
    assert abs(fit_order(taus, splitting_errors(factors, 2, taus)) - 2.0) <= 0.1
    assert fit_order(taus, splitting_errors(factors, 2, taus, prefactor_power=3)) < 0.5


def test_shared_factor_object_evaluated_once():
    A = stable_factors(7, (4,))[0]
    sp = build_split_phi(KroneckerSum([A, A]), 0.2, 1)
    assert sp.factors[0] is sp.factors[1]


def test_apply_sizing_error():
    sp = build_split_phi(stable_factors(8, (2, 3)), 0.1, 1)
    assert sp.dims == (2, 3)
    with pytest.raises(ShapeMismatchError):
        apply_split_phi(sp, np.zeros((3, 2)))


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        build_split_phis(stable_factors(9, (2, 2)), 0.1, [-1])


def test_matches_kronecker_product_of_factors():
    factors = stable_factors(10, (2, 3))
    sp = build_split_phi(factors, 0.25, 2)
    V = np.random.default_rng(10).standard_normal((2, 3))
    dense = 2.0 * np.kron(sp.factors[1], sp.factors[0])
    np.testing.assert_allclose(vec(sp(V)), dense @ vec(V), rtol=1e-14)
