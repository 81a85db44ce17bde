import numpy as np
import pytest

from wfarima.analytic import ClosedFormInputs, closed_sigma_rho, strong_sigma_rho_closed
from wfarima.covariance import (
    assemble_sigma_rho,
    lag_matrix,
    max_ar_order,
    psi_hat,
    rho_covariance,
    spectral_ar_xi,
    strong_sigma_rho,
    u_hat,
)
from wfarima.estimate import fit
from wfarima.model import FarimaParams, ResidualSet, residual_gradients, simulate
from wfarima.noise import NoiseSpec, generate, make_rng
from wfarima.portmanteau import acf


def farima(theta, n, seed, noise=NoiseSpec(), burn=1000):
    return simulate(theta, generate(noise, n + burn, rng=make_rng(seed)), burn=burn)


@pytest.fixture(scope="module")
def ar1_strong():
    a = -0.55
    theta = FarimaParams(ar=[a], d=0.2)
    return a, residual_gradients(theta, farima(theta, 100_000, 1))


def test_lag_matrix():
    np.testing.assert_array_equal(lag_matrix([1, 2, 3], 2), [[0, 0], [1, 0], [2, 1]])


def test_psi_ar1(ar1_strong):
    a, rs = ar1_strong
    m = 5
    ref = -np.column_stack([a ** np.arange(m), 1 / np.arange(1, m + 1)])
    np.testing.assert_allclose(psi_hat(rs, m), ref, atol=0.05)


def test_psi_farima0d0():
    theta = FarimaParams(d=0.3)
    rs = residual_gradients(theta, farima(theta, 50_000, 2))
    ref = -1 / np.arange(1, 7)
    np.testing.assert_allclose(psi_hat(rs, 6)[:, 0], ref, atol=0.03)


def test_psi_zero_residuals():
    rs = ResidualSet(np.zeros(50), FarimaParams(d=0.1), np.random.default_rng(0).standard_normal((50, 1)))
    assert np.all(psi_hat(rs, 3) == 0)
    with pytest.raises(ValueError):
        psi_hat(rs, 50)
    with pytest.raises(ValueError):
        psi_hat(ResidualSet(np.zeros(5), FarimaParams()), 1)


def test_u_hat_blocks():
    x = farima(FarimaParams(ar=[0.3], d=0.2), 3000, 3)
    f = fit(x, 1, 0)
    u = u_hat(f.residual_set, f.j_hat, 4)
    assert u.values.shape == (3000, 6)
    np.testing.assert_allclose(u.autocov_block.mean(axis=0), acf(f.residuals, 4).gamma[1:], rtol=0, atol=1e-15)
    assert np.all(np.abs(u.score_block.mean(axis=0)) < 1e-4)
    assert u_hat(f.residual_set, f.j_hat, 0).values.shape == (3000, 2)
    with pytest.raises(np.linalg.LinAlgError):
        u_hat(f.residual_set, np.zeros((2, 2)), 2)


def test_spectral_iid_is_sample_covariance():
    u = make_rng(4).standard_normal((20_000, 3)) @ np.array([[1, 0.5, 0], [0, 1, 0.2], [0, 0, 2]])
    xi, r = spectral_ar_xi(u, 1)
    uc = u - u.mean(axis=0)
    np.testing.assert_allclose(xi, uc.T @ uc / len(u), atol=0.1 * np.abs(uc.T @ uc / len(u)).max())
    assert r == 1
    xi0, r0 = spectral_ar_xi(u, 0)
    assert r0 == 0
    np.testing.assert_allclose(xi0, uc.T @ uc / len(u))


def test_spectral_ar1_long_run_variance():
    v = make_rng(5).standard_normal(100_000)
    u = np.empty_like(v)
    u[0] = v[0]
    for t in range(1, v.size):
        u[t] = 0.5 * u[t - 1] + v[t]
    xi, _ = spectral_ar_xi(u, "auto")
    assert xi[0, 0] == pytest.approx(4.0, rel=0.1)


def test_spectral_order_cap():
    u = make_rng(6).standard_normal((1000, 2))
    _, r = spectral_ar_xi(u, "auto")
    assert 1 <= r <= 3
    for n in (100, 1000, 10**5, 10**7):
        for dim in (1, 5, 20):
            r = max_ar_order(n, dim)
            assert r**5 <= n
    with pytest.raises(ValueError):
        spectral_ar_xi(u[:40], 2)
    with pytest.raises(ValueError):
        spectral_ar_xi(u, -1)


def test_spectral_rank_deficient():
    u = make_rng(7).standard_normal((5000, 1))
    with pytest.raises(np.linalg.LinAlgError):
        spectral_ar_xi(np.hstack([u, u]), 1)


def test_strong_farima0d0_m1():
    psi = -np.ones((1, 1))
    j = np.array([[2 * np.pi**2 / 6]])
    s = strong_sigma_rho(psi, j, 1.0, 1)
    assert s[0, 0] == pytest.approx(1 - 6 / np.pi**2, abs=1e-12)
    np.testing.assert_array_equal(strong_sigma_rho(np.zeros((3, 1)), j, 1.0, 3), np.eye(3))


def test_strong_trace_large_m():
    a, m = -0.55, 60
    s = strong_sigma_rho_closed(a, m)
    assert np.trace(s) == pytest.approx(m - 2, abs=0.05)


def test_assemble_identities():
    rng = np.random.default_rng(8)
    k, m = 2, 3
    a = rng.standard_normal((k + m, k + m))
    xi = a @ a.T
    psi = rng.standard_normal((m, k))
    cov = assemble_sigma_rho(psi, xi, 2.0, m)
    sg = xi[k:, k:] + psi @ xi[:k, :k] @ psi.T + psi @ xi[:k, k:] + xi[k:, :k] @ psi.T
    np.testing.assert_allclose(cov.sigma_gamma, sg, rtol=1e-12)
    np.testing.assert_allclose(cov.sigma_rho, sg / 4.0, rtol=1e-12)
    assert np.all(np.diff(cov.eigenvalues) <= 0)
    np.testing.assert_array_equal(cov.sigma_theta, xi[:k, :k])
    with pytest.raises(ValueError):
        assemble_sigma_rho(psi, xi[:4, :4], 1.0, m)
    bad = xi.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        assemble_sigma_rho(psi, bad, 1.0, m)


def test_assemble_clips_negative():
    xi = np.diag([1.0, -0.5])
    cov = assemble_sigma_rho(np.zeros((1, 1)), xi, 1.0, 1)
    assert cov.eigenvalues.tolist() == [0.0]
    assert cov.clipped == pytest.approx(0.5)


@pytest.fixture(scope="module")
def ar1_fit_strong():
    theta = FarimaParams(ar=[-0.55], d=0.2)
    return fit(farima(theta, 200_000, 9), 1, 0)


def test_pipeline_strong_matches_closed_form(ar1_fit_strong):
    cov, _ = rho_covariance(ar1_fit_strong, 3)
    _, target = closed_sigma_rho(ClosedFormInputs(a=-0.55, m=3))
    np.testing.assert_allclose(cov.eigenvalues, target, atol=0.15)
    assert cov.clipped <= 1e-6 * np.abs(cov.sigma_rho).max()


def test_pipeline_block_consistency(ar1_fit_strong):
    f = ar1_fit_strong
    m = 3
    u = u_hat(f.residual_set, f.j_hat, m)
    xi, _ = spectral_ar_xi(u, 0)
    alone, _ = spectral_ar_xi(u.autocov_block, 0)
    np.testing.assert_allclose(xi[2:, 2:], alone, rtol=1e-12)
    xi_a, r = spectral_ar_xi(u, "auto")
    alone_a, _ = spectral_ar_xi(u.autocov_block, r)
    np.testing.assert_allclose(xi_a[2:, 2:], alone_a, rtol=0.1, atol=0.02)


def test_pipeline_moderate_arch_matches_closed_form():
    # alpha1 = 0.25 keeps the eighth moment finite, so the spectral estimate settles
    noise = NoiseSpec("garch11", omega=1.0, alpha1=0.25)
    theta = FarimaParams(ar=[-0.55], d=0.2)
    f = fit(farima(theta, 200_000, 10, noise), 1, 0)
    cov, _ = rho_covariance(f, 3)
    _, target = closed_sigma_rho(ClosedFormInputs(a=-0.55, alpha1=0.25, m=3))
    np.testing.assert_allclose(cov.eigenvalues, target, atol=0.1)


def test_strong_noise_weak_estimate_near_strong_form():
    theta = FarimaParams(ar=[0.5], ma=[-0.3], d=0.2)
    f = fit(farima(theta, 100_000, 11), 1, 1)
    m = 6
    cov, _ = rho_covariance(f, m)
    s = strong_sigma_rho(psi_hat(f.residual_set, m), f.j_hat, f.sigma2_hat, m)
    assert np.abs(cov.sigma_rho - s).max() <= 0.1
