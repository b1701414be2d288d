"""Wave-kernel functions K1, K2, K3, their lambda-derivatives, and bound certificates.

Notation: a kernel point carries (lam, s, r, t) and everything depends on
t and s only through T = t - s.  With

    c = cos(phi) = (r^2 + lam^2 - T^2) / (2 r lam),

the combinations 1 - c and 1 + c are evaluated in the factored forms

    1 - c = (T - lam + r)(T + lam - r) / (2 r lam),
    1 + c = (r + lam - T)(r + lam + T) / (2 r lam),

which stay accurate next to lam_- = |T - r| and lam_+ = T + r.

Inner tau-integrals are computed after tau = sin^2(theta), tan(theta) = e^y,
which turns every integrand into a smooth function of y decaying
exponentially at both ends; one fixed Gauss-Legendre rule then serves all
grid points at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ellipk, ellipkm1

from .certificates import BoundCertificate, stabilization_check
from .free_propagator import SourceTerm, l0_eval, source_norm_M
from .weights import bracket_plus, jb, psi as psi_weight, z_weight

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class KernelPoint:
    lam: float
    s: float
    r: float
    t: float

    def __post_init__(self):
        if not (self.lam > 0 and self.r > 0 and self.t > 0 and 0 <= self.s < self.t):
            raise ValueError(f"invalid kernel point {self}")

    @property
    def T(self) -> float:
        return self.t - self.s

    @property
    def lam_minus(self) -> float:
        return abs(self.T - self.r)

    @property
    def lam_plus(self) -> float:
        return self.T + self.r

    @property
    def inside(self) -> bool:
        return self.lam_minus < self.lam < self.lam_plus

    @property
    def deep_interior(self) -> bool:
        return 0 < self.lam < self.lam_minus and self.s < self.t - self.r


# closed forms ----------------------------------------------------------

def cos_phi_parts(lam, r, T):
    """(c, 1 - c, 1 + c) with the two differences in factored form."""
    lam, r, T = (np.asarray(v, float) for v in (lam, r, T))
    den = 2.0 * r * lam
    c = (r * r + lam * lam - T * T) / den
    a = (T - lam + r) * (T + lam - r) / den
    b = (r + lam - T) * (r + lam + T) / den
    return c, a, b


def dcos_phi_dlam(lam, r, T):
    lam, r, T = (np.asarray(v, float) for v in (lam, r, T))
    return (lam * lam - r * r + T * T) / (2.0 * r * lam * lam)


def _phi_from_parts(a, b):
    # accurate both near phi = 0 (a small) and phi = pi (b small)
    a = np.clip(a, 0.0, 2.0)
    b = np.clip(b, 0.0, 2.0)
    return np.where(a <= b, 2.0 * np.arcsin(np.sqrt(a / 2.0)),
                    math.pi - 2.0 * np.arcsin(np.sqrt(b / 2.0)))


def varphi(kp: KernelPoint) -> float:
    """phi = arccos[(r^2 + lam^2 - T^2) / (2 r lam)]."""
    _, a, b = cos_phi_parts(kp.lam, kp.r, kp.T)
    if a < -1e-12 or b < -1e-12:
        raise ValueError("arccos argument outside [-1, 1]")
    return float(_phi_from_parts(a, b))


def k1(kp: KernelPoint, psi: float) -> float:
    q = kp.T**2 - kp.r**2 - kp.lam**2 + 2 * kp.r * kp.lam * math.cos(psi)
    if q <= 0:
        raise ValueError("K1 outside its positivity domain")
    return q**-0.5 / TWO_PI


def k2(kp: KernelPoint, tau: float) -> float:
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    _, a, b = cos_phi_parts(kp.lam, kp.r, kp.T)
    if a < 0 or b < 0:
        raise ValueError("K2 needs lam_- <= lam <= lam_+")
    q = 2 * kp.r * kp.lam * tau * (1 - tau) * (2 - a * tau)
    return float(q**-0.5 / TWO_PI)


def Psi_angle(kp: KernelPoint, tau: float) -> float:
    _, a, _ = cos_phi_parts(kp.lam, kp.r, kp.T)
    return float(np.arccos(np.clip(1.0 - a * tau, -1.0, 1.0)))


def k3(kp: KernelPoint, psi: float, x, ell: int) -> float:
    """K3^(ell) in the polar frame x = r(cos th, sin th), xi = (cos(th+psi), sin(th+psi))."""
    if ell not in (1, 2):
        raise ValueError("ell must be 1 or 2")
    x = np.asarray(x, float)
    if abs(np.hypot(*x) - kp.r) > 1e-9 * max(1.0, kp.r):
        raise ValueError("|x| must equal r")
    th = math.atan2(x[1], x[0])
    xi = (math.cos(th + psi), math.sin(th + psi))
    q = kp.T**2 - kp.r**2 - kp.lam**2 + 2 * kp.r * kp.lam * math.cos(psi)
    if q <= 0:
        raise ValueError("K3 outside its positivity domain")
    return -(x[ell - 1] - kp.lam * xi[ell - 1]) / (TWO_PI * q**1.5)


def dk2_dlam(kp: KernelPoint, tau: float) -> float:
    """d/dlam K2 = -(K2/2) [1/lam + tau c' / (2 - (1 - c) tau)]."""
    _, a, _ = cos_phi_parts(kp.lam, kp.r, kp.T)
    cp = dcos_phi_dlam(kp.lam, kp.r, kp.T)
    return float(-0.5 * k2(kp, tau) * (1.0 / kp.lam + tau * cp / (2.0 - a * tau)))


def dPsi_dlam(kp: KernelPoint, tau: float) -> float:
    """d/dlam Psi = -tau c' / sqrt((1 - c) tau (2 - (1 - c) tau))."""
    _, a, _ = cos_phi_parts(kp.lam, kp.r, kp.T)
    cp = dcos_phi_dlam(kp.lam, kp.r, kp.T)
    return float(-tau * cp / math.sqrt(a * tau * (2.0 - a * tau)))


# the two sides of the change-of-variables identity ---------------------

def _check_inside(kp):
    if not kp.inside:
        raise ValueError("need lam_- < lam < lam_+")


def k1_angular_integral(kp: KernelPoint, epsrel: float = 1e-12) -> float:
    """int_{-phi}^{phi} K1 dpsi with psi = phi - u^2 removing the endpoint root."""
    _check_inside(kp)
    _, a, b = cos_phi_parts(kp.lam, kp.r, kp.T)
    phi = float(_phi_from_parts(a, b))
    eps = math.pi - phi
    if b < a:
        eps = 2.0 * math.asin(math.sqrt(max(b, 0.0) / 2.0))
    rl = 2.0 * kp.r * kp.lam

    def f(u):
        v = 0.5 * u * u
        # cos(psi) - cos(phi) = 2 sin(eps + v) sin(v); sin(v) / u^2 kept finite at u = 0
        s_over = 0.5 * np.sinc(v / math.pi)
        return 2.0 / math.sqrt(rl * 2.0 * math.sin(eps + v) * s_over)

    U = math.sqrt(phi)
    pts = [p for p in (math.sqrt(2 * eps), math.sqrt(20 * eps)) if 0 < p < U]
    val, _ = quad(f, 0.0, U, points=pts or None, epsabs=0.0, epsrel=epsrel, limit=400)
    return 2.0 * val / TWO_PI


def k2_tau_integral(kp: KernelPoint, epsrel: float = 1e-12) -> float:
    """2 int_0^1 K2 dtau, split at 1/2 with tau = u^2 and 1 - tau = u^2."""
    _check_inside(kp)
    _, a, b = cos_phi_parts(kp.lam, kp.r, kp.T)
    pref = (2.0 * kp.r * kp.lam) ** -0.5 / TWO_PI
    U = math.sqrt(0.5)
    lo, _ = quad(lambda u: 2.0 / math.sqrt((1 - u * u) * (2.0 - a * u * u)), 0.0, U,
                 epsabs=0.0, epsrel=epsrel, limit=200)
    knee = math.sqrt(b / a) if a > 0 else 1.0
    pts = [p for p in (knee, 10 * knee) if 0 < p < U]
    hi, _ = quad(lambda u: 2.0 / math.sqrt((1 - u * u) * (b + a * u * u)), 0.0, U,
                 points=pts or None, epsabs=0.0, epsrel=epsrel, limit=400)
    return 2.0 * pref * (lo + hi)


def k2_closed_form(lam, r, T):
    """2 int_0^1 K2 dtau = K(m) / (pi sqrt(r lam)), m = (1 - cos phi) / 2."""
    _, a, b = cos_phi_parts(lam, r, T)
    m = np.clip(a / 2.0, 0.0, 1.0)
    K = np.where(m < 0.5, ellipk(np.minimum(m, 0.5)), ellipkm1(np.clip(b / 2.0, 1e-300, 0.5)))
    return K / (math.pi * np.sqrt(np.asarray(r) * np.asarray(lam)))


def identity_discrepancy(kp: KernelPoint) -> float:
    """Relative difference of the two sides of the change-of-variables identity."""
    A, B = k1_angular_integral(kp), k2_tau_integral(kp)
    return abs(A - B) / abs(B)


def random_kernel_points(n: int, rng=None, lam_mode: str = "uniform"):
    """Random valid (inside) kernel points with t + r spread over decades."""
    rng = np.random.default_rng(rng)
    out = []
    while len(out) < n:
        t = 10 ** rng.uniform(-1, 3)
        s = t * rng.uniform(0, 0.99)
        r = 10 ** rng.uniform(-1, 3)
        T = t - s
        lm, lp = abs(T - r), T + r
        q = rng.uniform(0.01, 0.99) if lam_mode == "uniform" else 0.5
        lam = lm + q * (lp - lm)
        if lam > 0:
            out.append(KernelPoint(lam, s, r, t))
    return out


# vectorized inner integrals ---------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(256)


def _y_rule(b, n_chunk):
    """Nodes/weights in y for each point: [-32, max(0, -log(b)/2) + 32]."""
    hi = np.maximum(0.0, -0.5 * np.log(np.maximum(b, 1e-300))) + 32.0
    lo = -32.0
    half = 0.5 * (hi - lo)
    y = lo + half[:, None] * (_GL_X[None, :] + 1.0)
    w = half[:, None] * _GL_W[None, :]
    return y, w


def inner_integrals(lam, r, T, which=("K2", "dK2", "dPsiK2"), chunk=2048):
    """int_0^1 K2, int_0^1 |d_lam K2|, int_0^1 |d_lam Psi K2| dtau at each point.

    Uses K2 dtau = (2 pi)^-1 (2 r lam)^-1/2 G dy with t = e^y and
    G = 2 t / (sqrt(1 + t^2) sqrt(2 + b t^2)), b = 1 + cos(phi).
    """
    lam, r, T = np.broadcast_arrays(*(np.asarray(v, float) for v in (lam, r, T)))
    shape = lam.shape
    lam, r, T = lam.ravel(), r.ravel(), T.ravel()
    out = {k: np.empty(lam.size) for k in which}
    for i0 in range(0, lam.size, chunk):
        sl = slice(i0, i0 + chunk)
        L, R, TT = lam[sl], r[sl], T[sl]
        _, a, b = cos_phi_parts(L, R, TT)
        a = np.maximum(a, 0.0)
        b = np.maximum(b, 0.0)
        cp = dcos_phi_dlam(L, R, TT)
        pref = (2.0 * R * L) ** -0.5 / TWO_PI
        y, w = _y_rule(b, L.size)
        t = np.exp(y)
        t2 = t * t
        den = 2.0 + b[:, None] * t2
        G = 2.0 * t / (np.sqrt(1.0 + t2) * np.sqrt(den))
        if "K2" in which:
            out["K2"][sl] = pref * np.sum(w * G, axis=1)
        if "dK2" in which:
            fac = np.abs(1.0 / L[:, None] + cp[:, None] * t2 / den)
            out["dK2"][sl] = pref * np.sum(w * G * 0.5 * fac, axis=1)
        if "dPsiK2" in which:
            with np.errstate(divide="ignore"):
                fac = np.abs(cp)[:, None] * t / np.sqrt(a[:, None] * den)
            out["dPsiK2"][sl] = pref * np.sum(w * G * fac, axis=1)
    return {k: v.reshape(shape) for k, v in out.items()}


def ellipk_quadrature(m1):
    """K(m) from 1 - m by the same y-rule (used for the deep-interior K1 integral)."""
    m1 = np.atleast_1d(np.asarray(m1, float))
    y, w = _y_rule(m1, m1.size)
    t = np.exp(y)
    return np.sum(w * t / (np.sqrt(1.0 + t * t) * np.sqrt(1.0 + m1[:, None] * t * t)), axis=1)


def k1_full_integral(lam, r, T):
    """int_{-pi}^{pi} K1 dpsi for 0 < lam < lam_- (T > r).

    Equals 2 K(k) / (pi sqrt((lam_+ - lam)(lam + lam_-))) with
    1 - k = (lam_- - lam)(lam_+ + lam) / ((lam_+ - lam)(lam_- + lam)).
    """
    lam, r, T = np.broadcast_arrays(*(np.asarray(v, float) for v in (lam, r, T)))
    lm, lp = T - r, T + r
    m1 = (lm - lam) * (lp + lam) / ((lp - lam) * (lm + lam))
    K = ellipk_quadrature(m1.ravel()).reshape(lam.shape)
    return 2.0 * K / (math.pi * np.sqrt((lp - lam) * (lm + lam)))


def k3_abs_integral(lam, r, T, theta, ell=1, n_gl=12, levels=36):
    """int_{-pi}^{pi} |K3^(ell)| dpsi for 0 < lam < lam_-, graded toward psi = pi."""
    lam, r, T, theta = np.broadcast_arrays(*(np.asarray(v, float) for v in (lam, r, T, theta)))
    shape = lam.shape
    lam, r, T, theta = (v.ravel() for v in (lam, r, T, theta))
    gx, gw = np.polynomial.legendre.leggauss(n_gl)
    lm, lp = T - r, T + r
    # A - 1 scale of the peak at psi = pi, in angle units
    gap = (lm - lam) * (lp + lam) / (2.0 * r * lam)
    dmin = np.maximum(1e-3 * np.sqrt(np.maximum(gap, 0.0)), 1e-14)
    # distances from pi, geometric from pi down to dmin, then [0, dmin]
    ratios = np.exp(np.linspace(0.0, 1.0, levels + 1)[:, None]
                    * np.log(dmin[None, :] / math.pi))
    edges = math.pi * ratios                       # (levels+1, n)
    edges = np.concatenate([edges, np.zeros((1, lam.size))], axis=0)
    a_, b_ = edges[1:], edges[:-1]                  # panel [a_, b_] in distance d
    half = 0.5 * (b_ - a_)
    d = a_[..., None] + half[..., None] * (gx + 1.0)  # (panels, n, n_gl)
    wd = half[..., None] * gw
    total = np.zeros(lam.size)
    x_l = r * (np.cos(theta) if ell == 1 else np.sin(theta))
    for sign in (1.0, -1.0):
        psi = math.pi - sign * d
        xi = np.cos(theta[None, :, None] + psi) if ell == 1 else np.sin(theta[None, :, None] + psi)
        num = np.abs(x_l[None, :, None] - lam[None, :, None] * xi)
        q = (T * T - r * r - lam * lam)[None, :, None] + 2.0 * (r * lam)[None, :, None] * np.cos(psi)
        total += np.sum(wd * num / (TWO_PI * q**1.5), axis=(0, 2))
    return total.reshape(shape)


# majorants ----------------------------------------------------------------

def _rhs(id_, lam, r, T):
    lm, lp = np.abs(T - r), T + r
    rl = np.sqrt(r * lam)
    if id_ == "kernel1":
        H = (T - r > 0).astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            arg = np.where(H > 0, r * lam / ((lam - lm) * (lp + lam)), 0.0)
        return np.log(2.0 + arg) / rl
    if id_ == "kernel1-":
        return 1.0 / (rl * (lam - T + r))
    if id_ == "kernel4-":
        return (1.0 / np.sqrt((lp - lam) * (lam - lm)) + 1.0 / np.sqrt(lam * lam - lm * lm)) / rl
    if id_ == "kernel6":
        return np.log(2.0 + r * lam / ((lm - lam) * (lp + lam))) / np.sqrt((lam + lm) * (lp - lam))
    if id_ == "kernel7":
        return 1.0 / ((lm - lam) * np.sqrt((lm + lam) * (lp - lam)))
    raise ValueError(id_)


def _lhs(id_, lam, r, T, theta=None):
    if id_ == "kernel1":
        return 2.0 * inner_integrals(lam, r, T, ("K2",))["K2"]
    if id_ == "kernel1-":
        return inner_integrals(lam, r, T, ("dK2",))["dK2"]
    if id_ == "kernel4-":
        return inner_integrals(lam, r, T, ("dPsiK2",))["dPsiK2"]
    if id_ == "kernel6":
        return k1_full_integral(lam, r, T)
    if id_ == "kernel7":
        return k3_abs_integral(lam, r, T, theta, ell=1)
    raise ValueError(id_)


KERNEL_IDS = ("kernel1", "kernel1-", "kernel4-", "kernel6", "kernel7", "v1")

DEFAULT_GRID = dict(per_decade=32, sum_min=1e-2, sum_max=1e3, n_ratio=16, n_lam=16)


def _edge_fractions(n, lo=1e-6):
    """n fractions in (0, 1), geometrically clustered at both ends."""
    k = n // 2
    g = np.geomspace(lo, 0.5, k, endpoint=False)
    q = np.concatenate([g, [0.5] if n % 2 else [], 1.0 - g[::-1]])
    return np.sort(q)


def parse_grid(spec) -> dict:
    """Grid dict from a dict or a 'key=value;key=value' string."""
    g = dict(DEFAULT_GRID)
    if spec is None:
        return g
    if isinstance(spec, str):
        for item in filter(None, spec.replace(",", ";").split(";")):
            k, v = item.split("=")
            g[k.strip()] = float(v)
    else:
        g.update(spec)
    for k in ("per_decade", "n_ratio", "n_lam"):
        g[k] = int(g[k])
    return g


def _sum_grid(g):
    n = int(round(g["per_decade"] * math.log10(g["sum_max"] / g["sum_min"]))) + 1
    return np.geomspace(g["sum_min"], g["sum_max"], n)


def kernel_grid(id_, grid=None):
    """(lam, r, T[, theta]) arrays restricted to each bound's region."""
    g = parse_grid(grid)
    S = _sum_grid(g)
    if id_ in ("kernel6", "kernel7"):
        p = np.linspace(0.0, 0.5, g["n_ratio"] + 2)[1:-1]     # r < T
    else:
        p = np.linspace(0.0, 1.0, g["n_ratio"] + 2)[1:-1]
    q = _edge_fractions(g["n_lam"])
    SS, PP, QQ = np.meshgrid(S, p, q, indexing="ij")
    r, T = SS * PP, SS * (1 - PP)
    lm, lp = np.abs(T - r), T + r
    lam = QQ * lm if id_ in ("kernel6", "kernel7") else lm + QQ * (lp - lm)
    arrs = [lam.ravel(), r.ravel(), T.ravel()]
    if id_ == "kernel7":
        th = np.array([0.0, math.pi / 4, math.pi / 2])
        arrs = [np.repeat(a, th.size) for a in arrs] + [np.tile(th, lam.size)]
    return arrs, g


def _grid_str(g):
    return ";".join(f"{k}={v:g}" for k, v in g.items())


def certify_kernel_bound(id_: str, grid=None, kappa: float = 1.0,
                         factor: float = 1.2) -> BoundCertificate:
    """Worst LHS/RHS ratio of a kernel bound over a (t - s) + r log grid.

    Kernel bounds depend on (t, s) only through T = t - s, so the grid is
    laid out in (T + r, r / (T + r), lam) with s = 0.
    """
    if id_ not in KERNEL_IDS:
        raise ValueError(f"unknown inequality {id_!r}")
    if id_ == "v1":
        return certify_v1(grid, kappa=kappa, factor=factor)
    arrs, g = kernel_grid(id_, grid)
    lam, r, T = arrs[:3]
    theta = arrs[3] if len(arrs) > 3 else None
    with np.errstate(divide="ignore", invalid="ignore"):
        lhs = _lhs(id_, lam, r, T, theta)
        rhs = _rhs(id_, lam, r, T)
        ratio = lhs / rhs
    ok = np.isfinite(ratio) & np.isfinite(rhs) & (rhs > 0)
    coverage = float(np.mean(ok))
    ratio_ok = ratio[ok]
    scale = (T + r)[ok]
    stable, pmax = stabilization_check(scale, ratio_ok, factor)
    i = int(np.argmax(ratio_ok))
    loc = {"lam": float(lam[ok][i]), "r": float(r[ok][i]), "t": float(T[ok][i]), "s": 0.0}
    if theta is not None:
        loc["theta"] = float(theta[ok][i])
    return BoundCertificate(id_, {"kappa": kappa} if id_ == "v1" else {}, _grid_str(g),
                            float(ratio_ok[i]), loc, stable and coverage > 0.99,
                            int(ok.sum()), coverage, {"max_before_last_decade": pmax})


# V(alpha) ------------------------------------------------------------------

def V_alpha(alpha: float, S: float, kappa: float = 1.0) -> float:
    """V(alpha) = int_{-alpha}^{alpha} <(alpha+beta)/2>^{1/2-kappa} (beta + S)^{-1/2} dbeta.

    ``S`` is t + r.  The substitution alpha + beta = v^2 removes the root
    singularity that appears as alpha -> S.
    """
    if not 0 < alpha < S:
        raise ValueError("need 0 < alpha < t + r")
    gap = S - alpha

    def f(v):
        u = v * v
        return 2.0 * v * jb(0.5 * u) ** (0.5 - kappa) / math.sqrt(u + gap)

    V = math.sqrt(2 * alpha)
    pts = [p for p in (math.sqrt(gap), 10 * math.sqrt(gap), 1.0, 10.0) if 0 < p < V]
    val, _ = quad(f, 0.0, V, points=pts or None, epsabs=0.0, epsrel=1e-10, limit=400)
    return val


def v1_rhs(alpha, S, kappa=1.0):
    A = jb(alpha)
    return A**0.5 * bracket_plus(A, 1.0 - kappa) * jb(S) ** -0.5


def v1_branch_majorants(alpha: float, S: float, kappa: float = 1.0):
    """Upper bounds for V(alpha) from the near-endpoint and far branches.

    near (valid for all alpha < S): int over [-alpha, -alpha+1] of (beta+alpha)^{-1/2}
    plus int over the rest with (beta + S)^{-1/2} <= ((alpha+beta+1)/2)^{-1/2};
    far (valid for alpha <= S/2): (S/2)^{-1/2} int <(alpha+beta)/2>^{1/2-kappa}.
    """
    two_a = 2.0 * alpha
    first = 2.0 * math.sqrt(min(1.0, two_a))
    rest = 0.0
    if two_a > 1.0:
        rest, _ = quad(lambda u: math.sqrt(2.0 / (u + 1.0)) * jb(0.5 * u) ** (0.5 - kappa),
                       1.0, two_a, epsrel=1e-10, limit=200)
    far, _ = quad(lambda u: jb(0.5 * u) ** (0.5 - kappa), 0.0, two_a, epsrel=1e-10, limit=200)
    return first + rest, (0.5 * S) ** -0.5 * far


def certify_v1(grid=None, kappa: float = 1.0, factor: float = 1.2) -> BoundCertificate:
    g = parse_grid(grid)
    S = _sum_grid(g)
    q = _edge_fractions(g["n_lam"])
    SS, QQ = np.meshgrid(S, q, indexing="ij")
    SS, A = SS.ravel(), (SS * QQ).ravel()
    V = np.array([V_alpha(a, s, kappa) for a, s in zip(A, SS)])
    ratio = V / v1_rhs(A, SS, kappa)
    stable, pmax = stabilization_check(SS, ratio, factor)
    i = int(np.argmax(ratio))
    return BoundCertificate("v1", {"kappa": kappa}, _grid_str(g), float(ratio[i]),
                            {"alpha": float(A[i]), "t+r": float(SS[i])}, stable, int(V.size),
                            extra={"max_before_last_decade": pmax})


# der11: the five region integrals ------------------------------------------

def _gl(n):
    return np.polynomial.legendre.leggauss(n)


def _graded_rule(a, b, h0, n):
    """Nodes/weights on [a, b] clustered geometrically toward both ends.

    Each half uses x = end +- h0 (e^u - 1) with Gauss-Legendre in u, so
    features of width ~h0 at either end are resolved whatever b - a is.
    """
    x, w = _gl(n)
    L = b - a
    if L <= 0:
        return np.empty(0), np.empty(0)
    if L <= 4 * h0:
        return a + 0.5 * L * (x + 1), 0.5 * L * w
    H = 0.5 * L
    U = math.log1p(H / h0)
    u = 0.5 * U * (x + 1)
    wu = 0.5 * U * w
    d = h0 * np.expm1(u)
    dw = h0 * np.exp(u) * wu
    return np.concatenate([a + d, b - d[::-1]]), np.concatenate([dw, dw[::-1]])


def _exp_rule_from(a, width, n):
    """Nodes on (a, a + width] with x - a = width e^{-u}, u in [0, 40], two panels."""
    x, w = _gl(n)
    nodes, weights = [], []
    for u0, u1 in ((0.0, 4.0), (4.0, 40.0)):
        u = u0 + 0.5 * (u1 - u0) * (x + 1)
        wu = 0.5 * (u1 - u0) * w
        nodes.append(a + width * np.exp(-u))
        weights.append(width * np.exp(-u) * wu)
    return np.concatenate(nodes), np.concatenate(weights)


def _s_segments(t, r, s_max):
    cuts = [0.0] + ([t - r] if 0.0 < t - r < s_max else []) + [s_max]
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def _z(nu, kappa, lam, s):
    return z_weight(nu, kappa, 0.0, s, lam)


def evaluate_I(k: int, nu: float, kappa: float, r: float, t: float, n: int = 24,
               full_output: bool = False):
    """I_k (k = 1..5) over its region of the (lam, s) plane.

    Returns the value, or ``(value, empty_flag)`` with ``full_output``.  I_2
    to I_5 live on D_2 (or its boundary curves), which is empty unless
    r >= 1/2 and t > 1/2; they are then 0 with the flag set.
    """
    if k not in (1, 2, 3, 4, 5):
        raise ValueError("k must be in 1..5")
    if r <= 0 or t <= 0:
        raise ValueError("need r > 0 and t > 0")
    delta = min(r, 0.5)
    if k == 1:
        val = _I1(nu, kappa, r, t, delta, n)
        return (val, False) if full_output else val
    if r < 0.5 or t <= 0.5:
        return (0.0, True) if full_output else 0.0
    val = {2: _I2, 3: _I3, 4: _I4, 5: _I5}[k](nu, kappa, r, t, n)
    return (val, False) if full_output else val


def _I1(nu, kappa, r, t, delta, n):
    total = 0.0
    for a, b in _s_segments(t, r, t):
        s, ws = _graded_rule(a, b, 0.25, n)
        for si, wi in zip(s, ws):
            T = t - si
            lm, lp = abs(T - r), T + r
            w1 = min(delta, lp - lm)
            lam1, wl1 = _exp_rule_from(lm, w1, n)
            parts = [(lam1, wl1)]
            lo2 = max(lp - delta, lm + w1)
            if lp > lo2:
                x, w = _gl(n)
                parts.append((lo2 + 0.5 * (lp - lo2) * (x + 1), 0.5 * (lp - lo2) * w))
            for lam, wl in parts:
                f = lam**0.5 / _z(nu, kappa, lam, si) * k2_closed_form(lam, r, T)
                total += wi * np.sum(wl * f)
    return float(total)


def _D2_nodes(nu, kappa, r, t, n):
    """(lam, s, weight) for D_2 = {lam_- + 1/2 <= lam <= lam_+ - 1/2}, s < t - 1/2."""
    L, S, W = [], [], []
    for a, b in _s_segments(t, r, t - 0.5):
        s, ws = _graded_rule(a, b, 0.25, n)
        for si, wi in zip(s, ws):
            T = t - si
            lo, hi = abs(T - r) + 0.5, T + r - 0.5
            lam, wl = _graded_rule(lo, hi, 0.25, n)
            L.append(lam)
            S.append(np.full(lam.size, si))
            W.append(wi * wl)
    if not L:
        return np.empty(0), np.empty(0), np.empty(0)
    return np.concatenate(L), np.concatenate(S), np.concatenate(W)


def _I2(nu, kappa, r, t, n):
    total = 0.0
    for a, b in _s_segments(t, r, t - 0.5):
        s, ws = _graded_rule(a, b, 0.25, n)
        T = t - s
        for lam in (np.abs(T - r) + 0.5, T + r - 0.5):
            f = lam**0.5 / _z(nu, kappa, lam, s) * 0.5 * k2_closed_form(lam, r, T)
            total += math.sqrt(2.0) * np.sum(ws * f)
    return float(total)


def _I3(nu, kappa, r, t, n):
    lam, s, w = _D2_nodes(nu, kappa, r, t, n)
    f = lam**-0.5 / _z(nu, kappa, lam, s) * 0.5 * k2_closed_form(lam, r, t - s)
    return float(np.sum(w * f))


def _I4(nu, kappa, r, t, n):
    lam, s, w = _D2_nodes(nu, kappa, r, t, n)
    J = inner_integrals(lam, r, t - s, ("dK2",))["dK2"]
    return float(np.sum(w * lam**0.5 / _z(nu, kappa, lam, s) * J))


def _I5(nu, kappa, r, t, n):
    lam, s, w = _D2_nodes(nu, kappa, r, t, n)
    J = inner_integrals(lam, r, t - s, ("dPsiK2",))["dPsiK2"]
    return float(np.sum(w * lam**0.5 / _z(nu, kappa, lam, s) * J))


def der11_rhs(nu, kappa, r, t):
    return ((1 + r) ** -0.5 * (1 + abs(t - r)) ** -nu * math.log(2 + t + r)
            * float(psi_weight(kappa, t + r)))


DER11_GRID = dict(per_decade=8, sum_min=1e-1, sum_max=1e3, n_ratio=8)


def der11_grid(grid=None):
    g = dict(DER11_GRID)
    if isinstance(grid, str):
        g.update(parse_grid(grid))
        g = {k: g[k] for k in DER11_GRID}
    elif grid:
        g.update(grid)
    S = _sum_grid({**g, "per_decade": int(g["per_decade"])})
    p = np.linspace(0.0, 1.0, int(g["n_ratio"]) + 2)[1:-1]
    SS, PP = np.meshgrid(S, p, indexing="ij")
    return (SS * (1 - PP)).ravel(), (SS * PP).ravel(), g


def certify_der11(nu: float = 1.0, kappa: float = 1.0, grid=None, n: int = 24,
                  factor: float = 1.2) -> BoundCertificate:
    """Worst I_k / RHS over k = 1..5 and an (r, t) grid."""
    if not 0 < nu < 1.5 or kappa < 1:
        raise ValueError("need 0 < nu < 3/2 and kappa >= 1")
    t, r, g = der11_grid(grid)
    ratios = np.zeros((t.size, 5))
    for i, (ti, ri) in enumerate(zip(t, r)):
        rhs = der11_rhs(nu, kappa, ri, ti)
        for k in range(1, 6):
            ratios[i, k - 1] = evaluate_I(k, nu, kappa, ri, ti, n) / rhs
    worst = ratios.max(axis=1)
    stable, pmax = stabilization_check(t + r, worst, factor)
    i = int(np.argmax(worst))
    binding = int(np.argmax(ratios[i])) + 1
    per_k = {f"I{k}": float(ratios[:, k - 1].max()) for k in range(1, 6)}
    return BoundCertificate("der11", {"nu": nu, "kappa": kappa}, _grid_str(g),
                            float(worst[i]), {"t": float(t[i]), "r": float(r[i]), "k": binding},
                            stable, int(t.size), extra={"max_before_last_decade": pmax, **per_k})


# instance check of the L0 derivative bound --------------------------------

def verify_l0_derivative_bound(src: SourceTerm, nu: float = 1.0, kappa: float = 1.0,
                               ell: int = 1, points=None, variant: str = "der1",
                               eta: float = 0.25, mu: float = 0.0, atol: float = 1e-7,
                               rtol: float = 1e-6, factor: float = 1.2) -> BoundCertificate:
    """|L0[d_ell g]| (1+r)^{1/2} (1+|t-r|)^nu against Psi_{1+mu} Psi_kappa ||g : M_1(z)||.

    ``variant='der1Bis'`` uses the weight (1+|t-r|)^{1-eta} and the majorant
    log(2+t+r) ||g : M_1(z_{1,1;1})||.
    """
    if variant not in ("der1", "der1Bis"):
        raise ValueError("variant must be 'der1' or 'der1Bis'")
    if points is None:
        S = np.geomspace(1.0, 100.0, 9)
        t = np.concatenate([0.7 * S, 0.5 * S, 0.2 * S])
        r = np.concatenate([0.3 * S, 0.5 * S, 0.8 * S])
    else:
        t, r = (np.atleast_1d(np.asarray(v, float)) for v in points)
    dsrc = src.derivative(ell)
    if variant == "der1":
        zw = lambda s, rr: z_weight(nu + mu, kappa, 0.0, s, rr)
    else:
        zw = lambda s, rr: z_weight(1.0, 1.0, 1.0, s, rr)
    ratio = np.zeros(t.size)
    for i, (ti, ri) in enumerate(zip(t, r)):
        norm = source_norm_M(src, zw, ti, k=1)
        if norm == 0.0:
            continue
        L = abs(l0_eval(dsrc, ti, (ri, 0.0), atol=atol, rtol=rtol))
        if variant == "der1":
            lhs = L * (1 + ri) ** 0.5 * (1 + abs(ti - ri)) ** nu
            rhs = float(psi_weight(1.0 + mu, ti + ri) * psi_weight(kappa, ti + ri)) * norm
        else:
            lhs = L * (1 + ri) ** 0.5 * (1 + abs(ti - ri)) ** (1 - eta)
            rhs = math.log(2 + ti + ri) * norm
        ratio[i] = lhs / rhs
    stable, pmax = stabilization_check(t + r, ratio, factor)
    i = int(np.argmax(ratio))
    params = {"nu": nu, "kappa": kappa, "ell": ell, "variant": variant}
    if variant == "der1Bis":
        params["eta"] = eta
    return BoundCertificate("l0_derivative", params, f"points={t.size}", float(ratio[i]),
                            {"t": float(t[i]), "r": float(r[i])}, stable, int(t.size),
                            extra={"max_before_last_decade": pmax})
