import math

import numpy as np
import pytest

from extwave.exterior_solver import SolverConfig
from extwave.lifespan import (BlowUpResult, SweepSpec, default_config, fit_lifespan,
                              is_monotone, resolution_guard, run_to_blowup, sign_flip_check,
                              sweep, threshold_shift)


@pytest.fixture(scope="module")
def cfg():
    return default_config(h=1 / 32, t_cap=2.0)


def test_exact_exponential_law_is_recovered():
    eps = np.array([1.0, 0.9, 0.8, 0.7, 0.6])
    rows = [(e, math.exp(0.3 / e**2 - 1.0)) for e in eps]
    fit = fit_lifespan(rows)
    assert fit.slope == pytest.approx(0.3, rel=1e-10)
    assert fit.intercept == pytest.approx(-1.0, rel=1e-10)
    assert fit.r2 == pytest.approx(1.0)


def test_power_law_data_prefer_power_fit():
    eps = np.array([1.6, 1.3, 1.0, 0.8, 0.6])
    fit = fit_lifespan([(e, e**-3) for e in eps])
    assert fit.power_slope == pytest.approx(3.0, rel=1e-10)
    assert fit.power_r2 > fit.r2


def test_censored_points_are_excluded_and_counted():
    rows = [(1.0, 1.0), (0.9, 2.0), (0.8, 4.0), (0.7, 8.0), (0.5, 50.0, True)]
    fit = fit_lifespan(rows)
    assert fit.summary()["n_fit"] == 4
    with pytest.raises(ValueError):
        fit_lifespan(rows[:3] + rows[4:])


def test_zero_epsilon_is_censored(cfg):
    r = run_to_blowup(0.0, cfg)
    assert r.censored and r.T_hat == cfg.t_end and r.reason == "zero data"


def test_linear_config_rejected():
    with pytest.raises(ValueError):
        run_to_blowup(1.0, SolverConfig(h=1 / 16, t_end=1.0, domain_half_width=5.0))


def test_blowup_detected_and_monotone(cfg):
    res = [run_to_blowup(e, cfg) for e in (1.6, 1.2)]
    assert not any(r.censored for r in res)
    assert res[0].T_hat < res[1].T_hat < cfg.t_end
    assert is_monotone(res)
    assert not is_monotone([BlowUpResult(1.0, 1.0, False), BlowUpResult(0.5, 0.5, False)])


def test_threshold_shift_small(cfg):
    assert threshold_shift(1.6, cfg) < 0.03


def test_sign_flip_censors(cfg):
    res = sign_flip_check([1.6], cfg)
    assert all(r.censored for r in res)


def test_resolution_guard_reports_fine_estimate(cfg):
    r = resolution_guard(1.2, cfg)
    assert r.resolved is not None
    assert math.isfinite(r.fine_T_hat)
    assert r.fine_T_hat == pytest.approx(r.T_hat, rel=0.2)


def test_cartesian_matches_radial_blowup():
    rad = default_config(h=1 / 32, t_cap=0.5)
    cart = default_config(h=1 / 32, t_cap=0.5, geometry="cartesian")
    a, b = run_to_blowup(1.6, rad), run_to_blowup(1.6, cart)
    assert not a.censored and not b.censored
    assert b.T_hat == pytest.approx(a.T_hat, rel=0.1)


def test_sweep_spec_validation(cfg):
    with pytest.raises(ValueError):
        SweepSpec([1.0, 1.2], cfg)
    with pytest.raises(ValueError):
        SweepSpec([1.0, 0.0], cfg)
    with pytest.raises(ValueError):
        SweepSpec([1.0], cfg, t_cap=10.0)


def test_sweep_csv_and_fit(cfg, tmp_path):
    res = sweep(SweepSpec([1.6, 1.4, 1.2, 1.0], cfg))
    assert res.monotone and res.fit is not None
    text = res.to_csv(tmp_path / "s.csv")
    assert text.splitlines()[0] == "epsilon,T_hat,censored,resolved_flag"
    assert "# fit" in text
    assert (tmp_path / "s.csv").read_text() == text
