import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import ellipk

from extwave.kernel_verifier import (
    KERNEL_IDS, KernelPoint, Psi_angle, V_alpha, certify_kernel_bound, dk2_dlam,
    dPsi_dlam, evaluate_I, identity_discrepancy, inner_integrals, k1_angular_integral,
    k1, k1_full_integral, k2, k2_closed_form, k2_tau_integral, parse_grid,
    random_kernel_points, v1_branch_majorants, varphi, verify_l0_derivative_bound,
)
from extwave.free_propagator import gaussian_source


def test_kernel_point_validation():
    with pytest.raises(ValueError):
        KernelPoint(1.0, 2.0, 1.0, 1.0)
    kp = KernelPoint(1.0, 0.0, 1.0, 1.5)
    assert kp.T == 1.5 and kp.lam_minus == 0.5 and kp.lam_plus == 2.5 and kp.inside


def test_identity_random_points():
    pts = random_kernel_points(40, rng=3)
    assert max(identity_discrepancy(kp) for kp in pts) < 1e-9


@settings(max_examples=25, deadline=None)
@given(t=st.floats(0.1, 500.0), r=st.floats(0.1, 500.0), q=st.floats(0.02, 0.98))
def test_identity_property(t, r, q):
    lm, lp = abs(t - r), t + r
    lam = lm + q * (lp - lm)
    kp = KernelPoint(lam, 0.0, r, t)
    assert identity_discrepancy(kp) < 1e-8


def test_closed_form_matches_tau_integral():
    for kp in random_kernel_points(20, rng=5):
        cf = float(k2_closed_form(kp.lam, kp.r, kp.T))
        assert cf == pytest.approx(k2_tau_integral(kp), rel=1e-9)


def test_closed_form_symmetric_point():
    # cos(phi) = 0 gives m = 1/2
    r, T = 1.0, 1.5
    lam = math.sqrt(T * T - r * r)
    kp = KernelPoint(lam, 0.0, r, T)
    assert varphi(kp) == pytest.approx(math.pi / 2, abs=1e-12)
    ref = ellipk(0.5) / (math.pi * math.sqrt(r * lam))
    assert float(k2_closed_form(lam, r, T)) == pytest.approx(ref, rel=1e-13)


def test_identity_near_lower_endpoint():
    for delta in (1e-3, 1e-5):
        kp = KernelPoint(0.5 + delta, 0.0, 1.0, 1.5)
        assert abs(k1_angular_integral(kp) - k2_tau_integral(kp)) / k2_tau_integral(kp) < 1e-9


@pytest.mark.parametrize("tau", [0.1, 0.5, 0.9])
def test_lambda_derivatives_match_finite_differences(tau):
    lam, r, T, h = 1.3, 1.0, 1.5, 1e-6
    kp = KernelPoint(lam, 0.0, r, T)
    up, dn = KernelPoint(lam + h, 0.0, r, T), KernelPoint(lam - h, 0.0, r, T)
    fd_k2 = (k2(up, tau) - k2(dn, tau)) / (2 * h)
    fd_psi = (Psi_angle(up, tau) - Psi_angle(dn, tau)) / (2 * h)
    assert dk2_dlam(kp, tau) == pytest.approx(fd_k2, rel=1e-6, abs=1e-9)
    assert dPsi_dlam(kp, tau) == pytest.approx(fd_psi, rel=1e-6, abs=1e-9)


def test_inner_integrals_against_quad():
    lam, r, T = 1.3, 1.0, 1.5
    kp = KernelPoint(lam, 0.0, r, T)
    out = inner_integrals(np.array([lam]), np.array([r]), np.array([T]))
    ref_k2 = quad(lambda s: k2(kp, s), 0, 1, points=[0.5], limit=200)[0]
    assert 2 * out["K2"][0] == pytest.approx(float(k2_closed_form(lam, r, T)), rel=1e-9)
    ref_dk2 = quad(lambda s: abs(dk2_dlam(kp, s)), 0, 1, points=[0.5], limit=400)[0]
    assert out["dK2"][0] == pytest.approx(ref_dk2, rel=1e-7)
    assert ref_k2 == pytest.approx(out["K2"][0], rel=1e-8)


def test_k1_full_integral_deep_interior():
    # lam < lam_minus: full-circle integral matches direct quadrature
    lam, r, T = 0.5, 1.0, 3.0
    kp = KernelPoint(lam, 0.0, r, T)
    val = float(k1_full_integral(np.array([lam]), np.array([r]), np.array([T]))[0])
    ref = quad(lambda p: k1(kp, p), -math.pi, math.pi, limit=200)[0]
    assert val == pytest.approx(ref, rel=1e-8)


def test_v1_majorants_dominate():
    for S in (2.0, 20.0, 300.0):
        for alpha in (0.1 * S, 0.5 * S, 0.99 * S):
            V = V_alpha(alpha, S)
            near, far = v1_branch_majorants(alpha, S)
            assert V <= near * (1 + 1e-9)
            if alpha <= S / 2:
                assert V <= far * (1 + 1e-9)


def test_empty_region_flags():
    val, empty = evaluate_I(2, 1.0, 1.0, 0.3, 5.0, full_output=True)
    assert empty and val == 0.0
    val, empty = evaluate_I(1, 1.0, 1.0, 0.3, 5.0, full_output=True)
    assert not empty and val > 0
    with pytest.raises(ValueError):
        evaluate_I(6, 1.0, 1.0, 1.0, 1.0)


def test_I4_self_convergence():
    a = evaluate_I(4, 1.0, 1.0, 2.0, 10.0, n=24)
    b = evaluate_I(4, 1.0, 1.0, 2.0, 10.0, n=48)
    assert abs(a - b) <= 1e-3 * abs(b)


def test_parse_grid():
    g = parse_grid("per_decade=4;sum_max=100")
    assert g["per_decade"] == 4 and g["sum_max"] == 100.0


@pytest.mark.parametrize("id_", [k for k in KERNEL_IDS if k != "kernel7"])
def test_certificates_small_grid(id_):
    cert = certify_kernel_bound(id_, grid="per_decade=6;n_ratio=6;n_lam=6")
    assert math.isfinite(cert.worst_ratio) and cert.worst_ratio > 0
    assert cert.stabilized


@pytest.mark.parametrize("variant", ["der1", "der1Bis"])
def test_l0_derivative_bound_instance(variant):
    cert = verify_l0_derivative_bound(gaussian_source(), variant=variant,
                                      points=([2.0, 5.0], [1.0, 3.0]))
    assert math.isfinite(cert.worst_ratio) and cert.worst_ratio > 0
    with pytest.raises(ValueError):
        verify_l0_derivative_bound(gaussian_source(), variant="other")
