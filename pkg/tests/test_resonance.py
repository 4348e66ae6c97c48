from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nls3lab.errors import ContractError
from nls3lab.resonance import (FrequencyTuple, best_constant, gamma_contains, gamma_index, phase_bound_table,
                               phase_bounds, phi, phi_array, phi_expanded_array, psi, resonant_shell_direct,
                               split_N123)
from nls3lab.spectral import cubic_terms_direct, make_state, random_state, single_mode, zero_state

ints = st.integers(-40, 40)
betas = st.sampled_from([0.0, 1.0, Fraction(3, 2), 2.1, 0.37])


def test_phi_examples():
    assert phi((2, 0, -3, -1), 0.0) == -18.0
    assert phi((3, 2, -2, -1), Fraction(3, 2)) == 0.0
    assert phi((1, 1, 0, 0), 2.1) == 0.0


def test_off_hyperplane_rejected():
    with pytest.raises(ContractError):
        FrequencyTuple(1, 1, 1, 2)
    with pytest.raises(ContractError):
        phi((0, 1, 2, 3), 0.0)


@given(ints, ints, ints, betas)
def test_phi_factorization_property(n, n1, n3, beta):
    t = FrequencyTuple.from_outer(n, n1, n3)
    e = phi_expanded_array(t.n, t.n1, t.n2, t.n3, beta)
    f = phi_array(t.n, t.n1, t.n3, beta)
    assert abs(f - e) <= 1e-9 * max(1.0, abs(e))


def test_gamma_membership():
    assert gamma_contains((2, 0, -3, -1), 0.0)
    assert not gamma_contains((3, 2, -2, -1), Fraction(3, 2))
    for beta in (0.0, 2.1):
        assert not gamma_contains((1, 1, 0, 0), beta)


@given(ints, ints, ints, betas)
def test_gamma_symmetric_in_n1_n3(n, n1, n3, beta):
    a = FrequencyTuple.from_outer(n, n1, n3)
    b = FrequencyTuple.from_outer(n, n3, n1)
    assert gamma_contains(a, beta) == gamma_contains(b, beta)


def test_phase_bounds_example():
    r = phase_bounds((2, 0, -3, -1), 0.0, c=1.0)
    assert (r.lam, r.n_max, abs(r.phi)) == (1.0, 3, 18.0)
    assert r.case_i_holds
    assert r.phi == phi((2, 0, -3, -1), 0.0)
    with pytest.raises(ContractError):
        phase_bounds((1, 1, 0, 0), 0.0)


def test_phase_table_agrees_with_scalar_reports():
    tab = phase_bound_table(5, 2.1)
    for k in range(0, tab["n"].size, 37):
        tup = (int(tab["n"][k]), int(tab["n1"][k]), int(tab["n2"][k]), int(tab["n3"][k]))
        r = phase_bounds(tup, 2.1)
        assert r.phi == pytest.approx(tab["phi"][k])
        assert (r.case_i_holds, r.case_ii_holds, r.comparable) == (bool(tab["case_i"][k]), bool(tab["case_ii"][k]),
                                                                    bool(tab["comparable"][k]))


def test_best_constant_positive_and_dichotomy():
    c = best_constant(32, 2.1)
    assert c > 0
    tab = phase_bound_table(32, 2.1, c=c)
    assert np.all(tab["case_i"] | tab["case_ii"])


def test_gamma_index_groups_and_excludes():
    n, n1, n2, n3, ph = gamma_index(6, Fraction(3, 2))
    assert np.all(np.diff(n) >= 0)
    assert np.all(n1 - n2 + n3 == n)
    assert not np.any((n == n1) | (n == n3) | (n1 + n3 == 1))
    assert np.all(ph != 0)


def test_psi_examples():
    c = np.zeros(9, complex)
    c[[4, 5, 6, 7]] = [1, 2, 3, 4]  # modes 0..3
    s = make_state(4, c)
    assert psi((0, 1, 2, 1), s) == -1 + 4 - 9 + 4
    assert psi((0, 1, 2, 1), zero_state(4)) == 0
    assert psi((3, 1, 0, 2), make_state(4, np.ones(9))) == 0
    # |w|^2 = (1, 4, 9, 16) on (n, n1, n2, n3)
    c = np.zeros(9, complex)
    c[[0 + 4, 1 + 4, 3 + 4, 2 + 4]] = [1, 2, 3, 4]
    assert psi((0, 1, 3, 2), make_state(4, c)) == pytest.approx(-1 + 4 - 9 + 16)
    with pytest.raises(IndexError):
        psi((5, 5, 0, 0), s)


def test_split_single_mode():
    a = 0.3 + 0.4j
    n1, n2, n3 = split_N123(single_mode(4, 1, a), 2.1)
    assert np.all(n1.coeffs == 0) and np.all(n3.coeffs == 0)
    assert n2.coeff(1) == pytest.approx(-abs(a) ** 2 * a)


def test_nonresonant_shell_vanishes(rng):
    # non-resonant beta: the third piece of the renormalized split is identically zero
    for _ in range(5):
        assert np.all(split_N123(random_state(6, rng), 2.1)[2].coeffs == 0)


@pytest.mark.parametrize("beta", [Fraction(3, 2), 0, 3, 2.1])
def test_partition_identity(beta, rng):
    # renormalized total = Gamma-sum - diagonal + shell
    for _ in range(3):
        u = random_state(5, rng, decay=0.2, norm=1.5)
        total = cubic_terms_direct(u, "all", renormalized=True).coeffs
        parts = sum(p.coeffs for p in split_N123(u, beta))
        assert np.max(np.abs(total - parts)) <= 1e-12


def test_shell_factored_form_matches_enumeration(rng):
    beta = Fraction(3, 2)
    u = random_state(5, rng, decay=0.0)
    assert np.allclose(resonant_shell_direct(u, beta), cubic_terms_direct(u, "resonant", beta).coeffs, atol=1e-13)


def test_three_mode_shell_nonzero():
    c = np.zeros(7, complex)
    c[[-1 + 3, 0 + 3, 2 + 3]] = 1
    n3 = split_N123(make_state(3, c), Fraction(3, 2))[2]
    assert n3.coeff(1) == pytest.approx(2.0)
