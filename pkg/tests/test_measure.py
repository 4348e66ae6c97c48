import math

import numpy as np
import pytest

from nls3lab.errors import ContractError, StepSizeError
from nls3lab.measure import (MAPS, MeasureSpec, _jacobian, _smoothing_block, apply_map, calibration_rate,
                             canonical_order, invariance_test, ramer_diagnostic, remainder_ensemble, sample_batch,
                             sample_mu, smoothing_diagnostic)
from nls3lab.params import ModelParams
from nls3lab.spectral import bracket, single_mode

P = ModelParams(beta=2.1, s=0.8)


@pytest.fixture(scope="module")
def big_ensemble():
    return sample_batch(MeasureSpec(s=0.8, N=3, seed=7, count=100_000))


def test_zero_mode_second_moment(big_ensemble):
    # E|u_0|^2 = Var(g_0) = 2
    a = np.abs(big_ensemble[:, 3]) ** 2
    assert abs(a.mean() - 2.0) <= 4 * a.std(ddof=1) / math.sqrt(a.size)


def test_means_vanish(big_ensemble):
    se = big_ensemble.std(axis=0, ddof=1) / math.sqrt(big_ensemble.shape[0])
    m = big_ensemble.mean(axis=0)
    assert np.all(np.abs(m.real) <= 4 * se / math.sqrt(2))
    assert np.all(np.abs(m.imag) <= 4 * se / math.sqrt(2))


def test_mode_three_variance(big_ensemble):
    a = np.abs(big_ensemble[:, 3 + 3]) ** 2
    assert abs(a.mean() - 2 * 10 ** -0.8) <= 4 * a.std(ddof=1) / math.sqrt(a.size)


def test_sampler_reproducible_and_nested():
    spec = MeasureSpec(0.8, 16, 99, 10)
    a, b = sample_mu(spec, 4), sample_mu(spec, 4)
    assert np.array_equal(a.coeffs, b.coeffs)
    small = sample_mu(MeasureSpec(0.8, 8, 99, 10), 4)
    assert np.array_equal(small.coeffs, a.coeffs[8:25])
    assert not np.array_equal(sample_mu(spec, 5).coeffs, a.coeffs)
    assert np.array_equal(sample_batch(spec)[4], a.coeffs)
    with pytest.raises(ContractError):
        sample_mu(spec, 10)


def test_canonical_order():
    assert canonical_order(2).tolist() == [0, 1, -1, 2, -2]


@pytest.mark.parametrize("kw", [dict(s=0.5), dict(count=0), dict(N=0), dict(seed=-1), dict(seed=2 ** 64)])
def test_spec_validation(kw):
    with pytest.raises(ContractError):
        MeasureSpec(**kw)


def test_maps_preserve_moduli_samplewise():
    X = sample_batch(MeasureSpec(0.8, 6, 1, 50))
    for name in MAPS:
        assert np.allclose(np.abs(apply_map(name, X, 0.9, 2.1)), np.abs(X), rtol=1e-13, atol=0)


def test_j_modulus_tests_do_not_reject():
    rep = invariance_test("J_t", 2.0, MeasureSpec(0.8, 8, 3, 2000))
    assert np.all(rep.pvalues["abs"] >= rep.corrected_alpha)
    assert rep.n_tests == 3 * 17 and 0 <= rep.pvalues["re"].min() <= 1


def test_invariance_report_fields():
    rep = invariance_test("composition", 0.0, MeasureSpec(0.8, 4, 0, 50))
    assert rep.warnings and "power" in rep.warnings[0]
    assert len(list(rep.rows())) == rep.n_tests
    assert rep.corrected_alpha == pytest.approx(0.01 / 27)
    with pytest.raises(ContractError):
        invariance_test("T_t", 0.0, MeasureSpec(0.8, 4, 0, 50))
    with pytest.raises(ContractError):
        invariance_test("identity", 0.0, MeasureSpec(0.8, 4, 0, 50), alpha=1.5)


def test_calibration_is_near_alpha():
    rej, tests = calibration_rate(MeasureSpec(0.8, 8, 11, 1000), 0.05, runs=6)
    assert 0.025 <= rej / tests <= 0.1


def test_remainder_single_modes():
    a, n, t = 0.9 + 0.3j, 2, 0.5
    U = single_mode(6, n, a).coeffs[None]
    K1, _, _ = remainder_ensemble(1, U, t, P)
    assert np.max(np.abs(K1)) <= 1e-13
    p0 = ModelParams(beta=2.1, s=1.2, sigma=0.6)
    norms, _ = _smoothing_block(0, U, t, p0, 1e-3, 100)
    closed = abs(np.exp(1j * t * abs(a) ** 2) - 1) * abs(a) * bracket(n) ** (3 * 0.6)
    assert norms["NR0"][0] == pytest.approx(closed, rel=1e-9)
    assert norms["N0"][0] <= 1e-10  # quadrature error only
    norms1, _ = _smoothing_block(1, U, t, P.with_(sigma=0.29), 1e-3, 100)
    assert norms1["K1"][0] <= 1e-12


def test_smoothing_ranges():
    spec = MeasureSpec(0.8, 8, 0, 2)
    with pytest.raises(ContractError, match="sigma > 1/2"):
        smoothing_diagnostic(0, 0.5, P, [8], spec)
    with pytest.raises(ContractError, match="1/4 < sigma"):
        smoothing_diagnostic(1, 0.5, ModelParams(s=1.2, sigma=0.6), [8], MeasureSpec(1.2, 8, 0, 2))
    with pytest.raises(ContractError):
        smoothing_diagnostic(1, 1.5, P, [8], spec)
    with pytest.raises(ContractError):
        smoothing_diagnostic(1, 0.5, P, [8], MeasureSpec(0.9, 8, 0, 2))


def test_smoothing_report_shape():
    rep = smoothing_diagnostic(1, 0.2, P, [4, 8], MeasureSpec(0.8, 4, 0, 3), n_nodes=20)
    assert len(list(rep.rows())) == 6
    assert rep.norms["K1"].shape == (2, 3) and np.all(np.isfinite(rep.norms["K1"]))
    assert set(rep.ratio_quantiles()["K1"]) == {0.5, 0.95, 1.0}
    rep0 = smoothing_diagnostic(0, 0.2, ModelParams(s=1.2, sigma=0.6), [4], MeasureSpec(1.2, 4, 0, 2), n_nodes=20)
    assert set(rep0.norms) == {"N0", "NR0"}


def test_ramer_trivial_and_errors():
    u = sample_mu(MeasureSpec(0.8, 4, 0, 1), 0)
    r = ramer_diagnostic(u, 0.0, 1, P)
    assert (r.hs_norm, r.min_singular_value) == (0.0, 1.0)
    with pytest.raises(ContractError):
        ramer_diagnostic(u, 0.1, 1, P, fd_step=0.0)
    with pytest.raises(StepSizeError):
        ramer_diagnostic(u, 0.5, 1, P, fd_step=3.0)
    r = ramer_diagnostic(single_mode(4, 1, 0.8), 0.2, 1, P)
    assert r.hs_norm >= 0 and r.min_singular_value >= 0 and r.probe_count == 4 * 18


def test_jacobian_is_symplectic():
    # the flow is a composition of symplectic maps, so (Id + DK)^T Omega (Id + DK) = Omega
    N = 4
    u = sample_mu(MeasureSpec(0.8, N, 5, 1), 0).coeffs
    J = _jacobian(1, u, 0.2, P, 1e-5 * bracket(np.arange(-N, N + 1)) ** -0.8, None)
    F = np.eye(J.shape[0]) + J
    m = 2 * N + 1
    Om = np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), np.zeros((m, m))]])
    assert np.max(np.abs(F.T @ Om @ F - Om)) <= 1e-8
    sv = np.linalg.svd(F, compute_uv=False)
    assert sv.min() == pytest.approx(1 / sv.max(), rel=1e-6)
