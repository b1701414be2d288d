import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from extwave.geometry import Cutoff, Obstacle, check_star_shaped, commutator_apply, cutoff_eval


def test_disk_star_shaped():
    ok, worst = check_star_shaped(Obstacle.disk(0.5))
    assert ok and worst == pytest.approx(0.5, abs=1e-12)


def test_ellipse_star_shaped_matches_brute_force():
    ok, worst = check_star_shaped(Obstacle.ellipse(0.6, 0.3))
    # analytic normal of (a cos t, b sin t) is proportional to (b cos t, a sin t)
    t = np.linspace(0, 2 * np.pi, 10_000)
    a, b = 0.6, 0.3
    xn = a * b / np.sqrt((b * np.cos(t)) ** 2 + (a * np.sin(t)) ** 2)
    assert ok
    assert worst == pytest.approx(xn.min(), rel=1e-6)


def test_offcenter_disk_not_star_shaped():
    ok, worst = check_star_shaped(Obstacle.disk(0.3, center=(0.5, 0.0)))
    assert not ok
    assert worst == pytest.approx(-0.2, abs=1e-9)


def test_obstacle_validation(tmp_path):
    with pytest.raises(ValueError):
        Obstacle.disk(1.2)
    with pytest.raises(ValueError):
        Obstacle.from_radial_profile(lambda th: np.cos(th))
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    p = tmp_path / "shape.csv"
    p.write_text("theta,R\n" + "\n".join(f"{a},{0.5 + 0.1 * np.cos(3 * a)}" for a in th))
    ob = Obstacle.from_csv(p)
    assert len(ob.points) >= 256
    assert ob.max_radius == pytest.approx(0.6, abs=1e-3)
    assert check_star_shaped(ob)[0]


def test_contains():
    ob = Obstacle.disk(0.5)
    pts = np.array([[0.0, 0.0], [0.49, 0.0], [0.0, 0.51], [2.0, 2.0]])
    assert ob.contains(pts).tolist() == [True, True, False, False]


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2 * np.pi))
def test_star_shaped_rotation_invariant(angle):
    ob = Obstacle.from_radial_profile(lambda th: 0.5 + 0.15 * np.cos(2 * th) + 0.05 * np.sin(5 * th))
    ok0, w0 = check_star_shaped(ob)
    ok1, w1 = check_star_shaped(ob.rotated(angle))
    assert ok0 == ok1
    assert w1 == pytest.approx(w0, abs=5e-3)


def test_cutoff_values():
    assert cutoff_eval(1, np.array([0.5, 0.0])) == 0.0
    assert cutoff_eval(1, np.array([3.0, 0.0])) == 1.0
    assert np.all(cutoff_eval(1, np.array([3.0, 0.0]), 1) == 0.0)
    assert cutoff_eval(2, np.array([0.0, 2.5])) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        Cutoff(0.5)


def test_cutoff_c2_seams():
    c = Cutoff(1.0)
    for seam in (1.0, 2.0):
        errs = []
        for h in (1e-2, 5e-3, 2.5e-3):
            d2 = (c.radial(seam + h) - 2 * c.radial(seam) + c.radial(seam - h)) / h**2
            errs.append(abs(d2 - c.radial(seam, 2)))
        assert errs[-1] < errs[0] and errs[-1] < 1e-1
    r = np.linspace(1, 2, 1001)
    assert np.all(np.diff(c.radial(r)) >= 0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1, 5), st.floats(0, 10), st.floats(0, 2 * np.pi))
def test_gradient_support(a, r, th):
    x = np.array([r * np.cos(th), r * np.sin(th)])
    g = cutoff_eval(a, x, 1)
    r = np.hypot(*x)  # the radius the cut-off actually sees
    if r <= a or r >= a + 1:
        assert np.all(g == 0) and cutoff_eval(a, x, 2) == 0


def test_commutator_simple_cases():
    x = np.array([1.2, 0.9])
    assert commutator_apply(1, 1.0, np.zeros(2), x) == pytest.approx(cutoff_eval(1, x, 2))
    assert commutator_apply(2, 3.0, np.ones(2), np.array([0.5, 0.5])) == 0.0


def test_commutator_matches_finite_differences():
    a, hh = 1.0, 1e-4
    x = np.array([1.5 * np.cos(0.7), 1.5 * np.sin(0.7)])
    c = Cutoff(a)
    hfun = lambda y: y[..., 0]
    lap = lambda f, y: sum(f(y + e) + f(y - e) for e in (np.array([hh, 0]), np.array([0, hh]))) / hh**2 \
        - 4 * f(y) / hh**2
    fd = lap(lambda y: c.value(y) * hfun(y), x) - c.value(x) * lap(hfun, x)
    exact = commutator_apply(a, x[0], np.array([1.0, 0.0]), x)
    assert exact == pytest.approx(x[0] * c.laplacian(x) + 2 * c.gradient(x)[0])
    assert fd == pytest.approx(exact, abs=1e-5)
