"""Quadrature evaluation of the free 2D wave propagators K0 and L0.

K0[(w0, w1)](t, x) solves the homogeneous Cauchy problem, L0[g](t, x) is the
Duhamel integral of a source.  Both are written in terms of the spherical
mean

    M_t[f](x) = (1/2pi) int_{|z|<1} f(x + t z) / sqrt(1 - |z|^2) dz,

and the inverse square root at |z| = 1 is removed with |z| = sin(sigma),
which turns M_t into (1/2pi) int_0^{2pi} int_0^{pi/2} f(x + t sin(sigma) w)
sin(sigma) dsigma dtheta.  The integration box is clipped to the part of the
disk that meets the data support, so compactly supported data cost little
even for large t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cubature

from .certificates import BoundCertificate, stabilization_check
from .weights import SpacetimePoint, W_weight, jb, log_cone_grid, phi, psi

TWO_PI = 2.0 * math.pi


class QuadratureError(RuntimeError):
    """Adaptive quadrature stopped before reaching the requested tolerance."""

    def __init__(self, message, estimate=float("nan"), error=float("nan")):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class CauchyData:
    """Initial data (w0, w1) for the free wave equation.

    Callables take points of shape ``(..., 2)`` and return arrays of shape
    ``(...)``; ``grad_w0`` returns ``(..., 2)``.  ``None`` means zero.
    """

    w0: Optional[Callable] = None
    w1: Optional[Callable] = None
    grad_w0: Optional[Callable] = None
    support_radius: float = math.inf
    name: str = "data"

    def __post_init__(self):
        if self.w0 is not None and self.grad_w0 is None:
            raise ValueError("w0 requires grad_w0")
        if not self.support_radius > 0:
            raise ValueError("support_radius must be positive")

    @property
    def is_zero(self) -> bool:
        return self.w0 is None and self.w1 is None

    def scaled(self, a: float) -> "CauchyData":
        return linear_combination(a, self, 0.0, ZERO_DATA)


ZERO_DATA = CauchyData(name="zero")


def _lin(f1, f2, a, b):
    if f1 is None and f2 is None:
        return None
    if f2 is None:
        return lambda y: a * f1(y)
    if f1 is None:
        return lambda y: b * f2(y)
    return lambda y: a * f1(y) + b * f2(y)


def linear_combination(a: float, d1: CauchyData, b: float, d2: CauchyData) -> CauchyData:
    """The data a*d1 + b*d2."""
    return CauchyData(
        w0=_lin(d1.w0, d2.w0, a, b),
        w1=_lin(d1.w1, d2.w1, a, b),
        grad_w0=_lin(d1.grad_w0, d2.grad_w0, a, b),
        support_radius=max(d1.support_radius if d1.w0 or d1.w1 else 0.0,
                           d2.support_radius if d2.w0 or d2.w1 else 0.0) or math.inf,
        name=f"{a:g}*{d1.name}+{b:g}*{d2.name}",
    )


@dataclass(frozen=True)
class SourceTerm:
    """Source g(s, y) of the inhomogeneous equation.

    ``g``, ``dg_ds`` and ``grad_g`` are called as ``f(s, y)`` with ``s`` and
    ``y[..., 0]`` broadcastable; ``grad_g`` returns the spatial gradient on
    the last axis.  ``support_radius`` bounds supp g(s, .) for every s.
    """

    g: Callable
    support_radius: float = math.inf
    dg_ds: Optional[Callable] = None
    grad_g: Optional[Callable] = None
    name: str = "source"

    def derivative(self, ell: int) -> "SourceTerm":
        """The source d_ell g (ell = 0 is the time derivative)."""
        if ell == 0:
            if self.dg_ds is None:
                raise ValueError("source has no time derivative")
            return SourceTerm(self.dg_ds, self.support_radius, name=f"d_t {self.name}")
        if self.grad_g is None:
            raise ValueError("source has no spatial gradient")
        grad = self.grad_g
        return SourceTerm(lambda s, y: grad(s, y)[..., ell - 1], self.support_radius,
                          name=f"d_{ell} {self.name}")


ZERO_SOURCE = SourceTerm(lambda s, y: np.zeros(np.broadcast(s, y[..., 0]).shape),
                         support_radius=1.0, dg_ds=None, name="zero")


# built-in data ---------------------------------------------------------

def _ones(y):
    return np.ones(np.shape(y)[:-1])


def constant_data(c0: float = 0.0, c1: float = 0.0) -> CauchyData:
    w0 = (lambda y: c0 * _ones(y)) if c0 else None
    g0 = (lambda y: np.zeros(np.shape(y))) if c0 else None
    w1 = (lambda y: c1 * _ones(y)) if c1 else None
    return CauchyData(w0, w1, g0, math.inf, name=f"const({c0},{c1})")


def gaussian(amplitude: float = 1.0, alpha: float = 8.0, cut: float = 3.0,
             slot: str = "w0") -> CauchyData:
    """A exp(-alpha |y|^2), truncated at |y| = cut, placed in w0 or w1."""
    def f(y):
        r2 = np.sum(np.square(y), axis=-1)
        return np.where(r2 < cut * cut, amplitude * np.exp(-alpha * r2), 0.0)

    def grad(y):
        return -2.0 * alpha * np.asarray(y) * f(y)[..., None]

    if slot == "w0":
        return CauchyData(f, None, grad, cut, name="gaussian")
    if slot == "w1":
        return CauchyData(None, f, None, cut, name="gaussian_w1")
    raise ValueError("slot must be 'w0' or 'w1'")


def radial_bump(r_in: float, r_out: float):
    """C-infinity bump in |y| on (r_in, r_out), peak 1 at the midpoint.

    Returns ``(f, df_dr)`` acting on radii.  With ``r_in < 0`` the bump is
    centred at the origin with radius ``r_out``.
    """
    if r_in < 0:
        c, hw = 0.0, r_out
    else:
        if not r_out > r_in:
            raise ValueError("need r_out > r_in")
        c, hw = 0.5 * (r_in + r_out), 0.5 * (r_out - r_in)

    def f(r):
        s = (np.asarray(r, float) - c) / hw
        inside = np.abs(s) < 1
        q = np.where(inside, 1.0 - s * s, 1.0)
        return np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)

    def df(r):
        s = (np.asarray(r, float) - c) / hw
        inside = np.abs(s) < 1
        q = np.where(inside, 1.0 - s * s, 1.0)
        return np.where(inside, np.exp(1.0 - 1.0 / q) * (-2.0 * s / (q * q)) / hw, 0.0)

    return f, df


def _radial_field(f, df):
    def val(y):
        return f(np.hypot(y[..., 0], y[..., 1]))

    def grad(y):
        y = np.asarray(y, float)
        r = np.hypot(y[..., 0], y[..., 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            fac = np.where(r > 0, df(r) / np.where(r > 0, r, 1.0), 0.0)
        return y * fac[..., None]

    return val, grad


def annular_bump(r_in: float = 2.0, r_out: float = 3.0, amplitude: float = 1.0,
                 slot: str = "w0") -> CauchyData:
    """Radially symmetric smooth bump supported in r_in <= |y| <= r_out."""
    f, df = radial_bump(r_in, r_out)
    val, grad = _radial_field(f, df)
    v = lambda y: amplitude * val(y)
    if slot == "w0":
        return CauchyData(v, None, lambda y: amplitude * grad(y), r_out, name="annular_bump")
    if slot == "w1":
        return CauchyData(None, v, None, r_out, name="annular_bump_w1")
    raise ValueError("slot must be 'w0' or 'w1'")


BUILTIN_DATA = {"gaussian": gaussian, "annular_bump": annular_bump}


def constant_source(c: float = 1.0) -> SourceTerm:
    return SourceTerm(lambda s, y: c * np.ones(np.broadcast(s, y[..., 0]).shape),
                      math.inf,
                      dg_ds=lambda s, y: np.zeros(np.broadcast(s, y[..., 0]).shape),
                      grad_g=lambda s, y: np.zeros(np.broadcast(s, y[..., 0]).shape + (2,)),
                      name=f"const({c})")


def bump_source(r_in: float = 1.0, r_out: float = 2.0, time_power: float = 2.0,
                amplitude: float = 1.0, center=(0.0, 0.0)) -> SourceTerm:
    """g(s, y) = A b(|y - c|) <s>^(-p) with b the smooth annular bump."""
    f, df = radial_bump(r_in, r_out)
    val, grad = _radial_field(f, df)
    c = np.asarray(center, float)
    p = time_power

    def g(s, y):
        return amplitude * val(np.asarray(y) - c) * jb(s) ** -p

    def dg(s, y):
        s = np.asarray(s, float)
        return amplitude * val(np.asarray(y) - c) * (-p * s) * jb(s) ** (-p - 2)

    def gg(s, y):
        return amplitude * grad(np.asarray(y) - c) * (jb(s) ** -p)[..., None]

    return SourceTerm(g, r_out + float(np.hypot(*c)), dg, gg, name="bump_source")


def gaussian_source(center=(0.5, 0.0), alpha: float = 2.0, cut: float = 3.0,
                    time_power: float = 2.0, amplitude: float = 1.0) -> SourceTerm:
    """g(s, y) = A exp(-alpha |y - c|^2) <s>^(-p), truncated at |y - c| = cut."""
    c = np.asarray(center, float)
    p = time_power

    def prof(y):
        r2 = np.sum(np.square(np.asarray(y) - c), axis=-1)
        return np.where(r2 < cut * cut, amplitude * np.exp(-alpha * r2), 0.0)

    def g(s, y):
        return prof(y) * jb(s) ** -p

    def dg(s, y):
        s = np.asarray(s, float)
        return prof(y) * (-p * s) * jb(s) ** (-p - 2)

    def gg(s, y):
        return (-2.0 * alpha * (np.asarray(y) - c) * prof(y)[..., None]
                * (jb(s) ** -p)[..., None])

    return SourceTerm(g, cut + float(np.hypot(*c)), dg, gg, name="gaussian_source")


def weight_profile_source(nu: float, kappa: float, radius: float = 4.0) -> SourceTerm:
    """g = W_{nu,kappa}^{-1} <y>^{-1/2} chi(|y|) with chi = 1 on |y| <= radius.

    chi drops to 0 on [radius, radius + 1] with the quintic smoothstep, so
    the M_0(W_{nu,kappa}) norm of g equals 1.
    """
    def chi(r):
        s = np.clip(np.asarray(r) - radius, 0.0, 1.0)
        return 1.0 - s**3 * (10 - 15 * s + 6 * s * s)

    def g(s, y):
        r = np.hypot(y[..., 0], y[..., 1])
        return chi(r) / (W_weight(nu, kappa, s, r) * jb(r) ** 0.5)

    return SourceTerm(g, radius + 1.0, name=f"W^-1 profile nu={nu} kappa={kappa}")


BUILTIN_SOURCES = {"constant": constant_source, "bump": bump_source,
                   "gaussian": gaussian_source,
                   "weight_profile": weight_profile_source}


# quadrature ------------------------------------------------------------

def _as_point(p, x=None):
    if isinstance(p, SpacetimePoint):
        return float(p.t), np.asarray(p.x, float)
    if x is None:
        t, x = p
    else:
        t = p
    t = float(t)
    if t < 0:
        raise ValueError("t must be non-negative")
    return t, np.asarray(x, float).reshape(2)


def _integrate(f, a, b, atol, rtol, max_subdivisions=20000):
    res = cubature(f, a, b, atol=atol, rtol=rtol, max_subdivisions=max_subdivisions)
    est, err = float(res.estimate), float(res.error)
    if res.status != "converged" or not math.isfinite(est):
        raise QuadratureError("cubature did not converge", est, err)
    return est, err


def _theta_window(rx: float, R: float):
    if math.isinf(R) or rx <= R:
        return 0.0, TWO_PI
    half = math.asin(min(1.0, R / rx))
    return -half, half


def _frame(x):
    """Unit vector pointing from x towards the origin (or e1 at the origin)."""
    rx = float(np.hypot(*x))
    if rx == 0:
        return 0.0, np.array([1.0, 0.0])
    return rx, -x / rx


def _directions(theta, base):
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([base[0] * c - base[1] * s, base[0] * s + base[1] * c], axis=-1)


def _sigma_range(tau, rx, R):
    lo = 0.0 if math.isinf(R) else max(0.0, rx - R)
    hi = tau if math.isinf(R) else min(tau, rx + R)
    return lo, hi


def k0_eval(data: CauchyData, p, x=None, *, atol: float = 1e-9, rtol: float = 1e-10,
            full_output: bool = False):
    """K0[(w0, w1)](t, x) by adaptive cubature.

    Uses d/dt(t M_t[w0]) = M_t[w0] + t M_t'[grad w0 . direction] so no
    numerical time differencing is involved.  Returns the value, or
    ``(value, error_estimate)`` with ``full_output``.
    """
    t, x = _as_point(p, x)
    if data.is_zero:
        return (0.0, 0.0) if full_output else 0.0
    if t == 0.0:
        v = float(data.w0(x)) if data.w0 is not None else 0.0
        return (v, 0.0) if full_output else v
    R = data.support_radius
    rx, base = _frame(x)
    if not math.isinf(R) and rx - R >= t:
        return (0.0, 0.0) if full_output else 0.0
    rlo, rhi = _sigma_range(t, rx, R)
    s_lo, s_hi = math.asin(min(1.0, rlo / t)), math.asin(min(1.0, rhi / t))
    th_lo, th_hi = _theta_window(rx, R)
    w0, w1, gw0 = data.w0, data.w1, data.grad_w0

    def f(P):
        sn = np.sin(P[:, 0])
        om = _directions(P[:, 1], base)
        y = x + (t * sn)[:, None] * om
        val = np.zeros(P.shape[0])
        if w0 is not None:
            val += w0(y) + t * sn * np.sum(gw0(y) * om, axis=-1)
        if w1 is not None:
            val += t * w1(y)
        return val * sn / TWO_PI

    if s_hi <= s_lo:
        return (0.0, 0.0) if full_output else 0.0
    est, err = _integrate(f, [s_lo, th_lo], [s_hi, th_hi], atol, rtol)
    return (est, err) if full_output else est


def _smoothstep_map(w):
    return w * w * (3.0 - 2.0 * w), 6.0 * w * (1.0 - w)


def _duhamel(kernel, t, x, R, atol, rtol):
    """int_0^t int int kernel(s, y, tau, sin(sigma), omega) dsigma dtheta ds.

    Splits s at the times where the clipped sigma range changes form and maps
    each piece with a smoothstep so square-root endpoint behaviour in the
    clipped limits is removed.
    """
    rx, base = _frame(x)
    if math.isinf(R):
        cuts = [0.0, t]
    else:
        s_end = min(t, t - (rx - R))
        if s_end <= 0:
            return 0.0, 0.0
        cuts = [0.0] + [c for c in (t - (rx + R),) if 0.0 < c < s_end] + [s_end]
    th_lo, th_hi = _theta_window(rx, R)
    total, total_err = 0.0, 0.0
    for s0, s1 in zip(cuts[:-1], cuts[1:]):
        L = s1 - s0

        def f(P, s0=s0, L=L):
            m, dm = _smoothstep_map(P[:, 0])
            s = s0 + L * m
            tau = t - s
            if math.isinf(R):
                slo, shi = np.zeros_like(tau), np.full_like(tau, 0.5 * math.pi)
            else:
                lo = np.maximum(0.0, rx - R) / np.maximum(tau, 1e-300)
                hi = np.minimum(tau, rx + R) / np.maximum(tau, 1e-300)
                slo = np.arcsin(np.clip(lo, 0, 1))
                shi = np.arcsin(np.clip(hi, 0, 1))
            sig = slo + P[:, 1] * (shi - slo)
            sn = np.sin(sig)
            om = _directions(P[:, 2], base)
            y = x + (tau * sn)[:, None] * om
            val = kernel(s, y, tau, sn, om)
            return val * (shi - slo) * L * dm

        est, err = _integrate(f, [0.0, 0.0, th_lo], [1.0, 1.0, th_hi], atol, rtol)
        total += est
        total_err += err
    return total, total_err


def l0_eval(src: SourceTerm, p, x=None, *, atol: float = 1e-8, rtol: float = 1e-8,
            full_output: bool = False):
    """L0[g](t, x) = int_0^t (t - s) M_{t-s}[g(s)](x) ds."""
    t, x = _as_point(p, x)
    if t == 0.0:
        return (0.0, 0.0) if full_output else 0.0
    g = src.g

    def kern(s, y, tau, sn, om):
        return tau * g(s, y) * sn / TWO_PI

    est, err = _duhamel(kern, t, x, src.support_radius, atol, rtol)
    return (est, err) if full_output else est


def l0_time_derivative(src: SourceTerm, p, x=None, *, atol: float = 1e-8,
                       rtol: float = 1e-8):
    """d/dt L0[g](t, x) by differentiating the Duhamel integrand in t.

    Equals int_0^t K0[(g(s), 0)](t - s, x) ds, which needs only g and its
    spatial gradient.
    """
    if src.grad_g is None:
        raise ValueError("time derivative of L0 needs grad_g")
    t, x = _as_point(p, x)
    if t == 0.0:
        return 0.0
    g, gg = src.g, src.grad_g

    def kern(s, y, tau, sn, om):
        return (g(s, y) + tau * sn * np.sum(gg(s, y) * om, axis=-1)) * sn / TWO_PI

    return _duhamel(kern, t, x, src.support_radius, atol, rtol)[0]


def time_derivative_identity(src: SourceTerm, p, x=None, **kw):
    """Both sides of d_t L0[g] = L0[d_t g] + K0[(0, g(0))]; returns (lhs, rhs)."""
    t, x = _as_point(p, x)
    lhs = l0_time_derivative(src, t, x, **kw)
    g0 = CauchyData(None, lambda y: src.g(0.0, y), None, src.support_radius, name="g(0)")
    rhs = l0_eval(src.derivative(0), t, x, **kw) + k0_eval(g0, t, x, **kw)
    return lhs, rhs


# norms and certificates ------------------------------------------------

def _polar_samples(radius: float, n: int = 4096):
    m = int(round(math.sqrt(n)))
    r = np.linspace(0.0, radius, m)
    th = TWO_PI * np.arange(m) / m
    R, T = np.meshgrid(r, th, indexing="ij")
    return np.stack([R * np.cos(T), R * np.sin(T)], axis=-1).reshape(-1, 2)


def data_norm_B(data: CauchyData, rho: float, n_samples: int = 4096,
                radius: float | None = None) -> float:
    """sup <x>^rho (|w0| + |grad w0| + |w1|) by dense sampling (k = 0)."""
    if data.is_zero:
        return 0.0
    R = radius or (data.support_radius if math.isfinite(data.support_radius) else 10.0)
    y = _polar_samples(R, n_samples)
    tot = np.zeros(y.shape[0])
    if data.w0 is not None:
        tot += np.abs(data.w0(y)) + np.hypot(*np.moveaxis(data.grad_w0(y), -1, 0))
    if data.w1 is not None:
        tot += np.abs(data.w1(y))
    r = np.hypot(y[:, 0], y[:, 1])
    return float(np.max(jb(r) ** rho * tot))


def source_magnitude(src: SourceTerm, s, y, k: int = 0):
    """|g(s, y)|_k for k in {0, 1}; k = 1 adds d_t, d_1, d_2 and O_12."""
    v = np.abs(src.g(s, y))
    if k == 0:
        return v
    if k != 1:
        raise ValueError("only k <= 1 is available for sources")
    if src.dg_ds is None or src.grad_g is None:
        raise ValueError("|g|_1 needs dg_ds and grad_g")
    gr = src.grad_g(s, y)
    rot = y[..., 0] * gr[..., 1] - y[..., 1] * gr[..., 0]
    return v + np.abs(src.dg_ds(s, y)) + np.abs(gr[..., 0]) + np.abs(gr[..., 1]) + np.abs(rot)


def source_norm_M(src: SourceTerm, weight: Callable, t: float, k: int = 0,
                  n_samples: int = 4096, n_times: int = 33,
                  radius: float | None = None) -> float:
    """sup over s in [0, t] and sampled y of <y>^{1/2} weight(s, |y|) |g(s, y)|_k."""
    R = radius or (src.support_radius if math.isfinite(src.support_radius) else 10.0)
    y = _polar_samples(R, n_samples)
    r = np.hypot(y[:, 0], y[:, 1])
    best = 0.0
    for s in np.unique(np.concatenate([np.linspace(0.0, t, n_times), [t]])):
        vals = jb(r) ** 0.5 * weight(s, r) * source_magnitude(src, s, y, k)
        best = max(best, float(np.max(vals)))
    return best


def _default_points(sum_min=0.1, sum_max=100.0, per_decade=8, n_ratio=9):
    n_sum = int(round(per_decade * math.log10(sum_max / sum_min))) + 1
    return log_cone_grid(n_sum=n_sum, n_ratio=n_ratio, sum_min=sum_min, sum_max=sum_max)


def _certificate(name, params, spec, t, r, ratio, factor=1.2, extra=None):
    t, r, ratio = map(np.asarray, (t, r, ratio))
    stable, pmax = stabilization_check(t + r, ratio, factor)
    i = int(np.argmax(ratio))
    return BoundCertificate(name, params, spec, float(ratio[i]),
                            {"t": float(t[i]), "r": float(r[i])}, stable, int(ratio.size),
                            extra={"max_before_last_decade": pmax, **(extra or {})})


def verify_homogeneous_decay(data: CauchyData, nu: float, m: int = 0, points=None,
                             direction: float = 0.0, atol: float = 1e-10,
                             factor: float = 1.2) -> BoundCertificate:
    """max over (t, r) of <t+r>^{1/2} Phi_{nu-1} |K0| / B_{nu+1/2,0}[data].

    Points are placed at x = r (cos d, sin d); default grid has t + r in
    [0.1, 100] with 8 points per decade and 9 ratios r/(t+r).
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    if m != 0:
        raise ValueError("only m = 0 is supported")
    t, r = _default_points() if points is None else map(np.asarray, points)
    t, r = np.atleast_1d(t).astype(float), np.atleast_1d(r).astype(float)
    B = data_norm_B(data, nu + 0.5)
    spec = f"points={t.size};t+r<={float(np.max(t + r)):g}"
    if B == 0.0:
        return _certificate("decay", {"nu": nu}, spec, t, r, np.zeros_like(t))
    e = np.array([math.cos(direction), math.sin(direction)])
    K = np.array([k0_eval(data, ti, ri * e, atol=atol) for ti, ri in zip(t, r)])
    lhs = jb(t + r) ** 0.5 * phi(nu - 1.0, t, r) * np.abs(K)
    return _certificate("decay", {"nu": nu, "data": data.name}, spec, t, r, lhs / B, factor,
                        {"B": B})


def verify_inhomogeneous_decay(src: SourceTerm, nu: float, kappa: float, points=None,
                               atol: float = 1e-8, rtol: float = 1e-7,
                               factor: float = 1.2) -> BoundCertificate:
    """max of <t+r>^{1/2} Phi_{nu-1} |L0[g]| / (Psi_kappa(t+r) ||g(t):M_0(W)||)."""
    if nu <= 0 or kappa < 1:
        raise ValueError("need nu > 0 and kappa >= 1")
    t, r = _default_points(0.5, 50.0, 6, 5) if points is None else map(np.asarray, points)
    t, r = np.atleast_1d(t).astype(float), np.atleast_1d(r).astype(float)
    W = lambda s, rr: W_weight(nu, kappa, s, rr)
    ratio = np.zeros(t.size)
    for i, (ti, ri) in enumerate(zip(t, r)):
        norm = source_norm_M(src, W, ti)
        if norm == 0.0:
            continue
        L = l0_eval(src, ti, (ri, 0.0), atol=atol, rtol=rtol)
        ratio[i] = (jb(ti + ri) ** 0.5 * phi(nu - 1.0, ti, ri) * abs(L)
                    / (psi(kappa, ti + ri) * norm))
    spec = f"points={t.size};t+r<={float(np.max(t + r)):g}"
    return _certificate("ba1", {"nu": nu, "kappa": kappa, "source": src.name}, spec,
                        t, r, ratio, factor)


__all__ = [
    "QuadratureError", "CauchyData", "SourceTerm", "ZERO_DATA", "ZERO_SOURCE",
    "linear_combination", "constant_data", "gaussian", "annular_bump", "radial_bump",
    "constant_source", "bump_source", "gaussian_source", "weight_profile_source", "BUILTIN_DATA",
    "BUILTIN_SOURCES", "k0_eval", "l0_eval", "l0_time_derivative",
    "time_derivative_identity", "data_norm_B", "source_norm_M", "source_magnitude",
    "verify_homogeneous_decay", "verify_inhomogeneous_decay",
]
