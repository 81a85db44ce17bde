import numpy as np
import pytest

from wfarima import montecarlo
from wfarima.lobato import default_table
from wfarima.model import FarimaParams
from wfarima.montecarlo import McConfig, binomial_band, one_replication, run_mc
from wfarima.noise import NoiseSpec
from wfarima.portmanteau import METHODS
from wfarima.report import mc_records, parse_records, format_records


def small_config(**kw):
    base = dict(theta_true=FarimaParams(d=0.2), n_list=(300, 200), m_list=(3, 1), n_reps=6, seed=4)
    base.update(kw)
    return McConfig(**base)


@pytest.fixture(scope="module")
def result():
    return run_mc(small_config())


def test_config_validation():
    cfg = small_config()
    assert cfg.n_list == (200, 300) and cfg.m_list == (1, 3)
    assert (cfg.fit_p, cfg.fit_q) == (0, 0)
    with pytest.raises(ValueError):
        small_config(n_reps=0)
    with pytest.raises(ValueError):
        small_config(m_list=(200,))
    with pytest.raises(ValueError):
        small_config(m_list=(0, 2))
    with pytest.raises(ValueError):
        small_config(level=1.0)


def test_binomial_band():
    lo, hi = binomial_band(0.05, 1000)
    assert lo == pytest.approx(0.0365, abs=2e-4) and hi == pytest.approx(0.0635, abs=2e-4)


def test_cells(result):
    assert len(result.cells) == 2 * 2 * len(METHODS)
    for c in result.cells:
        assert c.valid + c.failures == 6
        f = c.frequency
        if c.valid:
            assert 0 <= f <= 1
            assert c.flagged == (not c.band[0] <= f <= c.band[1])
    # standard tests at m = 1 with one parameter are not applicable
    assert result.cell(200, 1, "lb_standard").valid == 0
    assert result.fit_failures == {200: 0, 300: 0}


def test_serial_parallel_identical(result):
    par = run_mc(small_config(), workers=2)
    assert format_records(mc_records(par)) == format_records(mc_records(result))


def test_prefixes_share_one_series():
    cfg = small_config(n_reps=1)
    both = one_replication(cfg, 0, default_table())
    short = one_replication(small_config(n_reps=1, n_list=(200,)), 0, default_table())
    for key, val in short.items():
        assert both[key] == val


def test_seed_changes_results():
    a = one_replication(small_config(), 0, default_table())
    b = one_replication(small_config(seed=5), 0, default_table())
    c = one_replication(small_config(), 0, default_table())
    assert a == c
    assert a.keys() == b.keys()


def test_failures_are_counted(monkeypatch):
    real = montecarlo.fit_model
    calls = {"n": 0}

    def flaky(x, *a, **kw):
        calls["n"] += 1
        if calls["n"] == 1:
            raise ValueError("synthetic failure")
        return real(x, *a, **kw)

    monkeypatch.setattr(montecarlo, "fit_model", flaky)
    res = run_mc(small_config(n_reps=3, n_list=(200,)))
    assert res.fit_failures == {200: 1}
    assert res.cell(200, 3, "bp_weak").failures == 1
    assert res.cell(200, 3, "bp_weak").valid == 2


def test_records_round_trip(result):
    recs = mc_records(result)
    back = parse_records(format_records(recs))
    assert back[0][0] == "mc"
    cells = [f for k, f in back if k == "cell"]
    assert len(cells) == len(result.cells)
    for f, c in zip(cells, result.cells):
        assert f["rejections"] == c.rejections
        if c.valid:
            assert f["frequency"] == c.frequency


def test_garch_config():
    cfg = small_config(noise=NoiseSpec("garch11", 0.4, 0.3, 0.3), n_reps=2)
    res = run_mc(cfg)
    assert np.isfinite(res.frequency(300, 3, "bp_sn"))
