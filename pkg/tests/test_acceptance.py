"""Acceptance checks, one per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` (the lines are printed even
without ``-s``) or directly with ``python tests/test_acceptance.py``.
"""

import sys
import time

import mpmath
import numpy as np
import pytest
from scipy import stats

from wfarima.analytic import ClosedFormInputs, closed_sigma_rho
from wfarima.covariance import psi_hat, rho_covariance, u_hat
from wfarima.estimate import fit, j_matrix
from wfarima.fracdiff import frac_diff_coeffs
from wfarima.lobato import DEFAULT_SEED, default_table, load_or_generate
from wfarima.model import FarimaParams, residual_gradients, residuals, simulate
from wfarima.montecarlo import McConfig, run_mc
from wfarima.noise import NoiseSpec, generate, make_rng
from wfarima.portmanteau import acf, imhof_tail, sn_matrices, sn_portmanteau

BAND = (0.011, 0.101)
GARCH = NoiseSpec("garch11", omega=0.4, alpha1=0.3, beta1=0.3)

_capman = None


@pytest.fixture(autouse=True)
def _grab_capture(request):
    global _capman
    _capman = request.config.pluginmanager.getplugin("capturemanager")
    yield


def verdict(number, ok, detail, started):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} ({time.time() - started:.1f} s)"
    if _capman is not None:
        with _capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)
    assert ok, line


def in_band(f):
    return BAND[0] <= f <= BAND[1]


def test_criterion_01_fractional_coefficients():
    t0 = time.time()
    worst = 0.0
    j = np.arange(1, 1001)
    for d in (-0.45, -0.2, -0.05, 0.05, 0.2, 0.45):
        got = frac_diff_coeffs(d, 1001)[1:]
        with mpmath.workdps(40):
            lg = mpmath.loggamma(-d)
            ref = np.array([float(mpmath.re(mpmath.exp(mpmath.loggamma(k - d) - mpmath.loggamma(k + 1) - lg)))
                            for k in j])
        worst = max(worst, np.max(np.abs(got / ref - 1)))
    t_rec = time.time()
    for d in (-0.45, -0.2, -0.05, 0.05, 0.2, 0.45):
        frac_diff_coeffs(d, 1001)
    t_rec = time.time() - t_rec
    verdict(1, worst <= 1e-12 and t_rec < 1.0,
            f"max relative error {worst:.2e} (<= 1e-12), recursion time {t_rec * 1e3:.1f} ms", t0)


def test_criterion_02_gradients():
    t0 = time.time()
    rng = np.random.default_rng(2)
    worst = 0.0
    h = 1e-6
    for _ in range(20):
        theta = FarimaParams(ar=rng.uniform(-0.8, 0.8, 1), ma=rng.uniform(-0.8, 0.8, 1),
                             d=rng.uniform(-0.45, 0.45))
        x = simulate(theta, rng.standard_normal(400), burn=200)
        ana = residual_gradients(theta, x).gradients
        v = theta.as_vector()
        for k in range(3):
            up, dn = v.copy(), v.copy()
            up[k] += h
            dn[k] -= h
            fd = (residuals(FarimaParams.from_vector(up, 1, 1), x).residuals
                  - residuals(FarimaParams.from_vector(dn, 1, 1), x).residuals) / (2 * h)
            worst = max(worst, np.max(np.abs(ana[:, k] - fd)))
    verdict(2, worst <= 1e-5 and time.time() - t0 < 10,
            f"max abs gradient error {worst:.2e} over 20 models (<= 1e-5)", t0)


def test_criterion_03_imhof():
    t0 = time.time()
    errs = [abs(imhof_tail(np.ones(k), stats.chi2.ppf(0.95, k)) - 0.05) for k in range(1, 11)]
    verdict(3, max(errs) <= 1e-4 and time.time() - t0 < 1,
            f"max |p - 0.05| = {max(errs):.2e} for k = 1..10 (<= 1e-4)", t0)


def test_criterion_04_closed_form():
    t0 = time.time()
    a = -0.55
    _, e0 = closed_sigma_rho(ClosedFormInputs(a=a, alpha1=0.0, m=3))
    _, e1 = closed_sigma_rho(ClosedFormInputs(a=a, alpha1=0.55, m=3))
    _, e12 = closed_sigma_rho(ClosedFormInputs(a=a, alpha1=0.55, m=12))
    d0 = np.abs(e0 - [1.0000, 0.2791, 0.0217]).max()
    d1 = np.abs(e1 - [5.3780, 1.0025, 0.0513]).max()
    d12 = abs(e12[0] - 5.4628)
    ok = d0 <= 5e-4 and d1 <= 5e-4 and d12 <= 5e-3
    verdict(4, ok, f"alpha1=0 {np.round(e0, 4).tolist()}, alpha1=0.55 {np.round(e1, 4).tolist()}, "
                   f"m=12 leading {e12[0]:.4f}", t0)


def test_criterion_05_pipeline_vs_closed_form():
    t0 = time.time()
    a = -0.55
    theta = FarimaParams(ar=[a], d=0.2)
    noise = NoiseSpec("garch11", omega=1.0, alpha1=0.55, beta1=0.0)
    n, burn = 200_000, 1000
    x = simulate(theta, generate(noise, n + burn, rng=make_rng(5)), burn=burn)
    cov, _ = rho_covariance(fit(x, 1, 0), 3)
    target = np.array([5.3780, 1.0025, 0.0513])
    gap = np.abs(cov.eigenvalues - target)
    verdict(5, bool(np.all(gap <= 0.35)),
            f"eigenvalues {np.round(cov.eigenvalues, 4).tolist()} vs {target.tolist()}, "
            f"max gap {gap.max():.3f} (<= 0.35)", t0)


def test_criterion_06_size_strong():
    t0 = time.time()
    cfg = McConfig(theta_true=FarimaParams(d=0.2), n_list=(1000,), m_list=(2, 6), n_reps=200, seed=6)
    res = run_mc(cfg)
    freqs = {(m, meth): res.frequency(1000, m, meth) for m in (2, 6) for meth in ("lb_weak", "bp_sn")}
    ok = all(in_band(f) for f in freqs.values())
    shown = ", ".join(f"{meth} m={m} {100 * f:.1f}%" for (m, meth), f in freqs.items())
    verdict(6, ok, f"{shown} (band 1.1%-10.1%)", t0)


def test_criterion_07_garch_over_rejection():
    t0 = time.time()
    cfg = McConfig(theta_true=FarimaParams(d=0.2), noise=GARCH, n_list=(5000,), m_list=(2,),
                   n_reps=200, seed=7)
    res = run_mc(cfg)
    lb_s = res.frequency(5000, 2, "lb_standard")
    lb_w = res.frequency(5000, 2, "lb_weak")
    verdict(7, lb_s >= 0.11 and in_band(lb_w),
            f"LB_S {100 * lb_s:.1f}% (>= 11%), LB_W {100 * lb_w:.1f}% (band 1.1%-10.1%)", t0)


def test_criterion_08_eta_product():
    t0 = time.time()
    cfg = McConfig(theta_true=FarimaParams(d=0.2), noise=NoiseSpec("eta_product"), n_list=(5000,),
                   m_list=(3,), n_reps=200, seed=8)
    res = run_mc(cfg)
    bp_s = res.frequency(5000, 3, "bp_standard")
    bp_w = res.frequency(5000, 3, "bp_weak")
    bp_sn = res.frequency(5000, 3, "bp_sn")
    verdict(8, bp_s >= 0.10 and in_band(bp_w) and in_band(bp_sn),
            f"BP_S {100 * bp_s:.1f}% (>= 10%), BP_W {100 * bp_w:.1f}%, BP_SN {100 * bp_sn:.1f}% "
            f"(band 1.1%-10.1%)", t0)


def test_criterion_09_power():
    t0 = time.time()
    cfg = McConfig(theta_true=FarimaParams(ma=[0.2], d=0.2), noise=GARCH, n_list=(10_000,), m_list=(3,),
                   n_reps=100, seed=9, fit_p=0, fit_q=0)
    res = run_mc(cfg)
    bp_w = res.frequency(10_000, 3, "bp_weak")
    verdict(9, bp_w >= 0.95, f"BP_W power {100 * bp_w:.1f}% (>= 95%)", t0)


def _scaled_sn(theta, x, m, c):
    rs = residual_gradients(theta, c * x)
    f = type("F", (), {"residuals": rs.residuals})()
    u = u_hat(rs, j_matrix(rs), m)
    return sn_portmanteau(f, u, psi_hat(rs, m), m)


def test_criterion_10_self_normalization():
    t0 = time.time()
    m = 6
    worst_psd = np.inf
    for i in range(100):
        x = simulate(FarimaParams(d=0.2), generate(GARCH, 1500, rng=make_rng(10, i)), burn=500)
        f = fit(x)
        rs = f.residual_set
        c, _ = sn_matrices(u_hat(rs, f.j_hat, m), psi_hat(rs, m), acf(rs.residuals, m))
        ev = np.linalg.eigvalsh(c)
        worst_psd = min(worst_psd, ev.min() / ev.max())
    psd_ok = worst_psd >= -1e-12

    x = simulate(FarimaParams(ar=[0.4], d=0.2), generate(GARCH, 3000, rng=make_rng(10, 1000)), burn=1000)
    theta = fit(x, 1, 0).theta_hat
    base = _scaled_sn(theta, x, m, 1.0)
    scaled = _scaled_sn(theta, x, m, 7.0)
    inv = max(abs(b.statistic / a.statistic - 1) for a, b in zip(base, scaled))
    inv_ok = inv <= 1e-10

    t1 = default_table()
    mono = bool(np.all(np.diff(t1.quantiles, axis=0) > 0))
    t2 = load_or_generate(seed=DEFAULT_SEED + 1)
    i95 = t1.levels.index(0.95)
    drift = np.max(np.abs(t2.quantiles[:, i95] / t1.quantiles[:, i95] - 1))
    stable = drift <= 0.02

    verdict(10, psd_ok and inv_ok and mono and stable,
            f"min eig(C)/max eig(C) {worst_psd:.2e} over 100 runs, Q_SN rescaling drift {inv:.1e} "
            f"(<= 1e-10), table monotone {mono}, 95% quantiles across seeds differ by "
            f"{100 * drift:.2f}% (<= 2%)", t0)


def test_criterion_11_round_trip():
    t0 = time.time()
    rng = np.random.default_rng(11)
    worst_rms = worst_exact = 0.0
    for _ in range(10):
        theta = FarimaParams(ar=rng.uniform(-0.9, 0.9, 1), ma=rng.uniform(-0.9, 0.9, 1),
                             d=rng.uniform(-0.45, 0.45))
        eps = rng.standard_normal(7000)
        # as stated: burn 2000, n 5000, RMS over the last n - 500 points
        back = residuals(theta, simulate(theta, eps, burn=2000)).residuals
        worst_rms = max(worst_rms, np.sqrt(np.mean((back - eps[2000:])[500:] ** 2)))
        # the recursion is an exact inverse when nothing is discarded
        exact = residuals(theta, simulate(theta, eps[:5000])).residuals
        worst_exact = max(worst_exact, np.max(np.abs(exact - eps[:5000])))
    assert worst_exact <= 1e-10
    verdict(11, worst_rms <= 1e-3 and time.time() - t0 < 10,
            f"burn=2000 worst RMS {worst_rms:.2e} (<= 1e-3); exact identity at burn=0 "
            f"max error {worst_exact:.1e}", t0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
