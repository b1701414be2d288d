import math

import numpy as np
import pytest

from extwave.free_propagator import (
    CauchyData, SourceTerm, ZERO_DATA, annular_bump, constant_data, constant_source,
    data_norm_B, gaussian, gaussian_source, k0_eval, l0_eval, linear_combination,
    source_norm_M, time_derivative_identity, verify_homogeneous_decay,
)
from extwave.weights import SpacetimePoint, W_weight


def _quadratic_data(slot):
    f = lambda y: np.sum(y * y, axis=-1)
    if slot == 0:
        return CauchyData(w0=f, grad_w0=lambda y: 2 * y, name="r2")
    return CauchyData(w1=f, name="r2")


def test_k0_of_unit_velocity_is_t():
    rng = np.random.default_rng(0)
    d = constant_data(0.0, 1.0)
    for _ in range(10):
        t = rng.uniform(0, 20)
        x = rng.uniform(-5, 5, 2)
        assert abs(k0_eval(d, t, x) - t) < 1e-8


@pytest.mark.parametrize("slot", [0, 1])
def test_k0_quadratic_polynomial_solutions(slot):
    # exact polynomial solutions: |x|^2 + 2t^2 and t|x|^2 + 2t^3/3
    d = _quadratic_data(slot)
    for t, x in [(0.5, (0.3, -0.2)), (2.0, (1.0, 1.0)), (3.0, (-2.0, 0.5))]:
        r2 = x[0] ** 2 + x[1] ** 2
        exact = r2 + 2 * t * t if slot == 0 else t * r2 + 2 * t**3 / 3
        assert k0_eval(d, t, x) == pytest.approx(exact, rel=1e-8, abs=1e-8)


def test_k0_zero_data_and_point_forms():
    assert k0_eval(ZERO_DATA, 1.0, (0.0, 0.0)) == 0.0
    d = gaussian()
    a = k0_eval(d, SpacetimePoint(2.0, (1.0, 0.0)))
    b = k0_eval(d, (2.0, (1.0, 0.0)))
    c = k0_eval(d, 2.0, (1.0, 0.0))
    assert a == b == c


def test_k0_initial_value():
    d = gaussian()
    x = np.array([0.4, -0.3])
    assert k0_eval(d, 0.0, x) == pytest.approx(float(d.w0(x)), abs=1e-14)


def test_k0_finite_speed():
    d = annular_bump(2.0, 3.0)
    # outside the influence region of the annulus
    assert k0_eval(d, 1.0, (10.0, 0.0)) == 0.0
    assert k0_eval(d, 0.5, (0.0, 0.0)) == 0.0
    assert k0_eval(d, 2.5, (5.0, 0.0)) != 0.0


def test_k0_linearity():
    d1, d2 = gaussian(slot="w0"), gaussian(slot="w1", alpha=4.0)
    comb = linear_combination(2.0, d1, -0.5, d2)
    for t, x in [(1.0, (0.5, 0.0)), (2.5, (0.0, 1.5))]:
        lhs = k0_eval(comb, t, x)
        rhs = 2.0 * k0_eval(d1, t, x) - 0.5 * k0_eval(d2, t, x)
        assert lhs == pytest.approx(rhs, abs=1e-8)


def test_k0_tolerance_halving_stable():
    d = gaussian()
    a = k0_eval(d, 2.0, (1.0, 0.0), atol=1e-8, rtol=1e-8)
    b = k0_eval(d, 2.0, (1.0, 0.0), atol=5e-9, rtol=5e-9)
    assert abs(a - b) < 1e-8


def test_l0_polynomial_sources():
    assert l0_eval(constant_source(1.0), 3.0, (0.0, 0.0)) == pytest.approx(4.5, rel=1e-7)
    lin = SourceTerm(lambda s, y: s * np.ones(np.shape(y)[:-1]), name="s")
    assert l0_eval(lin, 2.0, (1.0, 1.0)) == pytest.approx(8.0 / 6.0, rel=1e-7)
    assert l0_eval(constant_source(1.0), 0.0, (0.0, 0.0)) == 0.0


def test_duhamel_time_derivative_identity():
    src = gaussian_source()
    rng = np.random.default_rng(1)
    for _ in range(6):
        t = rng.uniform(0.5, 4.0)
        x = rng.uniform(-2.0, 2.0, 2)
        lhs, rhs = time_derivative_identity(src, t, x, atol=1e-9, rtol=1e-9)
        assert abs(lhs - rhs) < 1e-6


def test_data_norm_B_scales_linearly():
    d = gaussian()
    assert data_norm_B(d.scaled(3.0), 1.5) == pytest.approx(3 * data_norm_B(d, 1.5), rel=1e-12)
    assert data_norm_B(ZERO_DATA, 1.5) == 0.0


def test_source_norm_monotone_in_time():
    src = gaussian_source()
    W = lambda s, r: W_weight(1.0, 1.0, s, r)
    assert source_norm_M(src, W, 1.0) <= source_norm_M(src, W, 3.0) + 1e-15


def test_homogeneous_decay_certificate_small_grid():
    t = np.array([0.5, 2.0, 8.0, 30.0])
    r = np.array([0.5, 1.0, 4.0, 30.0])
    cert = verify_homogeneous_decay(gaussian(), 1.0, points=(t, r))
    assert math.isfinite(cert.worst_ratio) and cert.worst_ratio > 0
