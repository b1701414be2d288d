import math

import numpy as np
import pytest

from extwave.exterior_solver import (CartesianSolver, Nonlinearity, RunRecord, SolverConfig,
                                     SupportError, energy, init, local_energy, make_solver, run,
                                     step)
from extwave.exterior_solver.decomposition import TERMS, verify_cutoff_decomposition
from extwave.exterior_solver.diagnostics import (data_norm_A, fit_local_energy_decay,
                                                 fit_power_decay, non_growing,
                                                 probe_decay_exponents, upper_envelope,
                                                 weighted_pointwise_diagnostic, z_energy_norm,
                                                 z_field_derivatives, z_strings)
from extwave.exterior_solver.estimates import certify_elliptic, certify_sobolev
from extwave.exterior_solver.verification import (energy_drift, manufactured_errors,
                                                  richardson_check)
from extwave.free_propagator import CauchyData, annular_bump, gaussian
from extwave.geometry import Obstacle
from extwave.weights import WeightParams

DISK = Obstacle.disk(0.5)


def small_config(**kw):
    base = dict(h=1 / 16, cfl=0.5, domain_half_width=8.0, t_end=2.0, obstacle=DISK)
    base.update(kw)
    return SolverConfig(**base)


# solver invariants -----------------------------------------------------------

def test_masked_nodes_stay_zero():
    cfg = small_config()
    data = annular_bump(1.0, 2.0)
    _, s = run(cfg, data.w0, data.w1)
    assert np.any(s.u != 0)
    assert np.all(s.u[:, s.mask] == 0.0)


def test_init_is_linear_in_epsilon():
    cfg = small_config()
    data = annular_bump(1.0, 2.0)
    a = init(cfg, data.w0, data.w1, 1.0)
    b = init(cfg, data.w0, data.w1, 2.5)
    for fa, fb in zip(a, b):
        np.testing.assert_allclose(fb.components, 2.5 * fa.components, rtol=1e-14, atol=0)


def test_zero_data_stays_zero():
    cfg = small_config()
    fields = init(cfg, None, None)
    nxt = step(fields, cfg)
    assert not np.any(nxt.components)
    assert energy(fields, cfg) == 0.0


def test_local_energy_not_above_total():
    cfg = small_config()
    data = annular_bump(1.0, 2.0)
    f0, f1 = init(cfg, data.w0, data.w1)
    f2 = step((f0, f1), cfg)
    E = energy((f1, f2), cfg)
    assert 0 < local_energy((f1, f2), cfg, 1.5) <= E


def test_padded_active_disk_matches_untruncated_step():
    # the active disk bounds work only; an unrestricted update must agree
    cfg = small_config(t_end=1.0)
    data = annular_bump(1.0, 2.0)
    s = make_solver(cfg)
    s.initialize(data.w0, data.w1)
    fields = s.fields()
    for _ in range(10):
        s.advance()
        f = step(fields, cfg)
        fields = (fields[1], f)
    np.testing.assert_allclose(s.u, fields[1].components, rtol=0, atol=1e-13)


def test_causality_check_rejects_small_domain():
    cfg = small_config(domain_half_width=3.0, t_end=2.0)
    data = annular_bump(1.0, 2.0)
    with pytest.raises(SupportError):
        run(cfg, data.w0, data.w1)


def test_data_near_obstacle_rejected():
    cfg = small_config()
    with pytest.raises(ValueError):
        run(cfg, lambda y: np.ones(y.shape[:-1]))


def test_radial_and_cartesian_converge_together():
    # the Cartesian staircase boundary is first order, so compare the gap at two h
    data = annular_bump(1.0, 2.0)
    gaps = []
    for h in (1 / 32, 1 / 64):
        cart = small_config(h=h, t_end=1.5)
        _, sc = run(cart, data.w0, data.w1)
        _, sr = run(cart.with_(geometry="radial"), data.w0, data.w1)
        j, i = sc._probe_node(np.array([1.5, 0.0]))
        gaps.append(abs(sr.u[0][sr._probe_node(np.array([1.5, 0.0]))] - sc.u[0, j, i]))
    assert gaps[1] < 0.5 * gaps[0] and gaps[1] < 2e-3


def test_energy_conserved_radial_and_cartesian():
    d = annular_bump(1.0, 2.0)
    assert energy_drift(d, steps=200, h=1 / 16) < 1e-10
    assert energy_drift(d, steps=200, h=1 / 16, geometry="radial", obstacle=DISK) < 1e-10


def test_manufactured_solution_second_order():
    errs, orders = manufactured_errors(hs=(1 / 8, 1 / 16, 1 / 32), t=1.0)
    assert np.all(errs[1:] < errs[:-1])
    assert orders[-1] == pytest.approx(2.0, abs=0.2)


def test_richardson_against_quadrature():
    chk = richardson_check(gaussian(), probes=[(0.0, 0.0), (0.5, 0.25)], t=1.0, h=1 / 32)
    assert np.max(chk.relative_error) < 1e-2


def test_record_round_trip(tmp_path):
    cfg = small_config(t_end=1.0, record_stride=4)
    d = annular_bump(1.0, 2.0)
    rec, _ = run(cfg, d.w0, d.w1, probes={"a": (1.5, 0.0)})
    back = RunRecord.load(rec.save(tmp_path / "rec"))
    assert back.config.to_dict() == cfg.to_dict()
    np.testing.assert_array_equal(back.array("energy"), rec.array("energy"))
    np.testing.assert_array_equal(back.array("a.u"), rec.array("a.u"))
    assert back.meta["source"] == 0


def test_negated_nonlinearity():
    nl = Nonlinearity.cubic_time_derivative(1.0)
    neg = nl.negated()
    assert Nonlinearity.from_spec(neg.spec).spec == neg.spec
    np.testing.assert_allclose(neg.g, -nl.g)


# fits and diagnostics ----------------------------------------------------------

def test_power_fit_recovers_exponent():
    t = np.linspace(20, 200, 400)
    fit = fit_power_decay(t, 3.0 / np.sqrt(1 + t**2), (20, 200))
    assert fit.gamma == pytest.approx(1.0, abs=1e-3)


def test_power_fit_log_correction_steepens():
    t = np.linspace(20, 200, 400)
    fit = fit_power_decay(t, 1 / (t * np.log(2 + t) ** 2), (20, 200))
    assert 1.3 < fit.gamma < 1.6


def test_fit_rejects_short_or_outside_window():
    t = np.linspace(0, 10, 5)
    with pytest.raises(ValueError):
        fit_power_decay(t, np.ones(5), (0, 10))
    with pytest.raises(ValueError):
        fit_local_energy_decay((np.linspace(0, 10, 50), np.ones(50)), window=(5, 20))


def test_local_energy_fit_needs_linear_run():
    cfg = small_config(t_end=1.0, nonlinearity=Nonlinearity.cubic_time_derivative(1.0))
    rec = RunRecord(cfg, 1.0)
    with pytest.raises(ValueError):
        fit_local_energy_decay(rec, window=(0, 1))


def test_non_growing_and_envelope():
    t = np.linspace(0, 10, 101)
    assert non_growing(t, 1 / (1 + t))
    assert not non_growing(t, 1 + t)
    env = upper_envelope(np.array([1.0, 3.0, 2.0, 2.5, 0.5]))
    np.testing.assert_array_equal(env, [3.0, 3.0, 2.5, 2.5, 0.5])


def test_weighted_diagnostic_small_run():
    data = annular_bump(1.0, 2.0)
    cfg = small_config(t_end=3.0, domain_half_width=6.0, record_stride=4)
    rec, _ = run(cfg, data.w0, data.w1, second_order=True)
    A = data_norm_A(data.w0, data.w1, 2.1, 2.0, grad_phi=data.grad_w0)
    assert A > 0
    for which in ("ba3", "ba4", "ba4t"):
        t, ratio = weighted_pointwise_diagnostic(rec, which, A)
        assert len(t) == len(ratio) > 5
        assert np.all(np.isfinite(ratio)) and np.max(ratio) > 0
    with pytest.raises(ValueError):
        weighted_pointwise_diagnostic(rec, "ba5", A)
    with pytest.raises(ValueError):
        weighted_pointwise_diagnostic(rec, "ba4t", A, params=WeightParams(eta=0.5))


def test_probe_exponents_keys():
    data = annular_bump(1.0, 2.0)
    cfg = small_config(t_end=4.0, domain_half_width=7.0, geometry="radial", record_stride=1)
    rec, _ = run(cfg, data.w0, data.w1, probes={"near": (0.75, 0.0)})
    out = probe_decay_exponents(rec, "near", window=(2.0, 4.0))
    assert set(out) == {"dd_t", "d_grad"}


def _poly_levels(cfg, n=3):
    s = CartesianSolver(cfg.with_(obstacle=None))
    X, Y = s.points[..., 0], s.points[..., 1]
    return [np.exp(-(X**2 + Y**2) / 4)[None] * (1 + 0.1 * k * cfg.dt) for k in range(n)], X, Y


def test_z_string_counts():
    assert len(z_strings(2)) == 21
    assert len(z_strings(2, static=True)) == 13


def test_rotation_field_of_coordinate():
    cfg = SolverConfig(h=1 / 16, domain_half_width=3.0, t_end=1.0)
    s = CartesianSolver(cfg)
    X = s.points[..., 0]
    d = z_field_derivatives([X[None]], cfg, m=1, static=True)
    inner = (slice(None), slice(1, -1), slice(1, -1))
    np.testing.assert_allclose(d[(3,)][inner], -s.points[..., 1][None][inner], atol=1e-12)


def test_commutator_of_d1_and_rotation_is_second_order():
    # [d_1, O_12] = d_2 in the continuum
    errs = []
    for h in (1 / 8, 1 / 16):
        cfg = SolverConfig(h=h, domain_half_width=3.0, t_end=1.0)
        levels, X, Y = _poly_levels(cfg)
        d = z_field_derivatives(levels, cfg, m=2)
        com = d[(1, 3)] - d[(3, 1)] - d[(2,)]
        core = (np.abs(X) < 2) & (np.abs(Y) < 2)
        errs.append(np.max(np.abs(com[0][core])))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_z_energy_norm_needs_levels_and_scales():
    cfg = SolverConfig(h=1 / 16, domain_half_width=3.0, t_end=1.0)
    levels, _, _ = _poly_levels(cfg, 3)
    with pytest.raises(ValueError):
        z_energy_norm(levels[:2], cfg, m=1)
    a = z_energy_norm(levels, cfg, m=1)
    b = z_energy_norm([2 * v for v in levels], cfg, m=1)
    assert b == pytest.approx(2 * a, rel=1e-12)


# estimates and decomposition -------------------------------------------------

def test_elliptic_certificate_small():
    cert = certify_elliptic(DISK, trials=6)
    assert cert.passed and math.isfinite(cert.worst_ratio)
    assert cert.extra["hardy"].worst_ratio > 0


def test_elliptic_rejects_large_obstacle_and_m():
    with pytest.raises(ValueError):
        certify_elliptic(DISK, m=3)


def test_sobolev_certificate_small():
    cert = certify_sobolev(trials=2, placements=(5.0, 10.0))
    assert cert.passed
    assert cert.extra["rotation_defect"] < 0.1


def test_decomposition_zero_data():
    zero = CauchyData(None, None, None, 1.0, name="zero")
    res = verify_cutoff_decomposition(zero, DISK, [(3.0, 0.0)])
    assert res.max_discrepancy == 0.0


def test_decomposition_small_instance():
    res = verify_cutoff_decomposition(annular_bump(), DISK, [(1.5, 0.0), (3.0, 0.0), (6.0, 0.0)],
                                      t=2.0, h=1 / 16)
    assert set(res.terms) == set(TERMS)
    assert res.terms["S3"][2] == 0.0  # 1 - psi_3 vanishes beyond |x| = 4
    assert res.max_discrepancy < 0.05


def test_decomposition_rejects_off_grid_probe():
    with pytest.raises(ValueError):
        verify_cutoff_decomposition(annular_bump(), DISK, [(1.51, 0.0)], t=1.0, h=1 / 16)
