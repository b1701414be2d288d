import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from extwave.weights import (SpacetimePoint, SpacetimeSamples, W_weight, WeightParams,
                             bracket_plus, certify_weight_inequality, jb, jbx, phi, psi,
                             w_rho, weighted_sup_norm, z_weight)


def test_jb_values():
    assert jb(0.0) == 1.0
    assert jb(math.sqrt(3)) == pytest.approx(2.0, abs=1e-15)
    assert jbx([3.0, 4.0]) == pytest.approx(math.sqrt(26))


def test_bracket_plus_branches():
    assert bracket_plus(1.0, 0) == 1.0
    assert bracket_plus(10.0, -2) == 1.0
    assert bracket_plus(math.e, 0) == pytest.approx(2.0)
    assert bracket_plus(4.0, 0.5) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        bracket_plus(0.5, 1.0)


def test_phi_branches_at_origin():
    assert phi(-1, 0, 0) == 1.0
    assert phi(0, 0, 0) == pytest.approx(1 / math.log(3))
    assert phi(1, 0, 0) == 1.0


def test_psi_values():
    assert psi(1, 0) == pytest.approx(math.log(2))
    assert psi(2, 100) == 1.0
    assert psi(1, math.e - 2) == pytest.approx(1.0)


def test_z_W_w():
    assert z_weight(1, 1, 0, 0, 0) == 1.0
    assert W_weight(0, 1, 3, 1) == pytest.approx(math.sqrt(2))
    assert w_rho(0.5, 0, 0) == pytest.approx(2.0)


def test_params_validation():
    with pytest.raises(ValueError):
        WeightParams(kappa=0.5).require_kappa()
    with pytest.raises(ValueError):
        WeightParams(rho=1.5).require_rho()
    with pytest.raises(ValueError):
        SpacetimePoint(-1.0)
    assert SpacetimePoint(1.0, (3.0, 4.0)).r == 5.0


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0.51, 3))
def test_phi_large_nu_is_sqrt_bracket(t, r, nu):
    assert phi(nu, t, r) == pytest.approx(float(jb(t - r)) ** 0.5, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e3), st.floats(0, 1e3), st.sampled_from([-1.0, 0.0, 0.25, 0.5, 1.0]),
       st.floats(-1e-3, 1e-3), st.floats(-1e-3, 1e-3))
def test_phi_lipschitz_within_branch(t, r, nu, dt, dr):
    t2, r2 = max(t + dt, 0), max(r + dr, 0)
    assert abs(phi(nu, t, r) - phi(nu, t2, r2)) <= 2.0 * (abs(t - t2) + abs(r - r2)) + 1e-14


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e4), st.floats(0, 1e4), st.floats(0.01, 1))
def test_w_rho_dominates_second_summand(t, r, rho):
    assert w_rho(rho, t, r) >= (jb(t + r) * jb(t - r)) ** -0.5 * (1 - 1e-14)


def _samples(vals):
    times = np.linspace(0, 5, vals.shape[0])
    pts = np.column_stack([np.linspace(0, 8, vals.shape[1]), np.zeros(vals.shape[1])])
    return SpacetimeSamples(times, pts, {0: vals})


def test_weighted_sup_norm_basic():
    W = lambda s, r: W_weight(1.0, 1.0, s, r)
    times = np.linspace(0, 10, 21)
    pts = np.column_stack([np.linspace(0, 20, 41), np.linspace(0, 5, 41)])
    f = SpacetimeSamples.from_function(
        lambda s, x: 1.0 / (jbx(x) ** 0.5 * W_weight(1.0, 1.0, s, np.hypot(x[..., 0], x[..., 1]))),
        times, pts)
    assert weighted_sup_norm(f, W) == pytest.approx(1.0, rel=1e-12)
    r = np.hypot(pts[:, 0], pts[:, 1])
    dense = jb(r)[None] ** 0.5 * W(times[:, None], r[None]) * f.magnitudes[0]
    assert np.allclose(dense, 1.0, rtol=1e-12)
    zero = SpacetimeSamples.from_function(lambda s, x: 0.0 * s, times, pts)
    assert weighted_sup_norm(zero, W) == 0.0
    assert weighted_sup_norm(f.scaled(2.0), W) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        weighted_sup_norm(f, W, k=1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_weighted_sup_norm_subadditive_and_monotone(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.random((6, 7)), rng.random((6, 7))
    W = lambda s, r: W_weight(0.5, 1.0, s, r)
    fa, fb, fab = _samples(a), _samples(b), _samples(np.abs(a + b))
    assert weighted_sup_norm(fab, W) <= weighted_sup_norm(fa, W) + weighted_sup_norm(fb, W) + 1e-12
    vals = [weighted_sup_norm(fa, W, t=t) for t in np.linspace(0, 5, 6)]
    assert all(x <= y for x, y in zip(vals, vals[1:]))


def test_certificate_single_points():
    c = certify_weight_inequality("el1", 0.5, points=([0.0], [0.0]))
    assert c.worst_ratio == pytest.approx(2.0)
    c = certify_weight_inequality("el2", 1.0, points=([0.0], [0.0]))
    assert c.worst_ratio == pytest.approx(2.0)
    with pytest.raises(ValueError):
        certify_weight_inequality("el1", 0.5, points=([], []))
    with pytest.raises(ValueError):
        certify_weight_inequality("el1", 0.25)


@pytest.mark.parametrize("ineq", ["el1", "el2"])
@pytest.mark.parametrize("rho", [0.5, 0.75, 1.0])
def test_certificates_stabilize(ineq, rho):
    c = certify_weight_inequality(ineq, rho)
    assert c.passed
    assert 1.0 <= c.worst_ratio < 10
    assert c.n_points >= 64 * 64
