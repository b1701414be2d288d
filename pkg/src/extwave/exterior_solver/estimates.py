"""Discrete certification of the elliptic, Hardy and Sobolev-type estimates.

Each certificate is a worst ratio LHS / RHS over random smooth trial
functions sampled on Cartesian grids; the constants are empirical.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from ..certificates import BoundCertificate
from ..geometry import Obstacle, _smoothstep
from ..weights import jb


def _bump(s):
    """C^3 compact bump (1 - s^2)^4 on |s| < 1."""
    s = np.asarray(s, float)
    return np.where(np.abs(s) < 1, (1 - np.minimum(s * s, 1.0)) ** 4, 0.0)


def _grid(R: float, h: float):
    n = int(round(2 * R / h)) + 1
    x = -R + h * np.arange(n)
    X, Y = np.meshgrid(x, x, indexing="xy")
    return X, Y


class EllipticTrial:
    """phi = bump(|x - c| / s) * quadratic modulation * C^2 blend off the obstacle."""

    def __init__(self, rng: np.random.Generator, obstacle: Optional[Obstacle], R: float,
                 blend: float = 0.5):
        ang = rng.uniform(0, 2 * math.pi)
        rad = rng.uniform(0.8, 0.5 * R)
        self.c = rad * np.array([math.cos(ang), math.sin(ang)])
        self.s = rng.uniform(0.6, min(2.5, R - rad - 0.1))
        self.coef = rng.normal(size=6)
        self.freq = rng.uniform(0.0, 2.0, size=2)
        self.obstacle = obstacle
        self.blend = blend

    def __call__(self, X, Y):
        dx, dy = X - self.c[0], Y - self.c[1]
        a = self.coef
        poly = a[0] + a[1] * dx + a[2] * dy + a[3] * dx * dx + a[4] * dx * dy + a[5] * dy * dy
        mod = np.cos(self.freq[0] * dx + self.freq[1] * dy)
        v = _bump(np.hypot(dx, dy) / self.s) * poly * mod
        if self.obstacle is not None:
            r = np.hypot(X, Y)
            Rb = self.obstacle.radial_function(np.arctan2(Y, X))
            v = v * _smoothstep((r - Rb) / self.blend)
        return v


def _masked_norm(v, mask, h):
    return math.sqrt(h * h * float(np.sum(np.where(mask, 0.0, v * v))))


def _elliptic_ratios(phi, mask, h, b_hardy: float, X, Y):
    # interior differences; rows/cols at the edge are dropped (phi vanishes there)
    c = (slice(1, -1), slice(1, -1))
    uxx = (phi[1:-1, 2:] - 2 * phi[c] + phi[1:-1, :-2]) / h**2
    uyy = (phi[2:, 1:-1] - 2 * phi[c] + phi[:-2, 1:-1]) / h**2
    uxy = (phi[2:, 2:] - phi[2:, :-2] - phi[:-2, 2:] + phi[:-2, :-2]) / (4 * h * h)
    ux = (phi[1:-1, 2:] - phi[1:-1, :-2]) / (2 * h)
    uy = (phi[2:, 1:-1] - phi[:-2, 1:-1]) / (2 * h)
    m = mask[c]
    lhs = _masked_norm(uxx, m, h) + _masked_norm(uxy, m, h) + _masked_norm(uyy, m, h)
    grad = math.sqrt(_masked_norm(ux, m, h) ** 2 + _masked_norm(uy, m, h) ** 2)
    rhs = _masked_norm(uxx + uyy, m, h) + grad
    inner = mask[c] | (np.hypot(X[c], Y[c]) >= b_hardy)
    hardy = _masked_norm(phi[c], inner, h) / grad if grad > 0 else math.nan
    return lhs / rhs, hardy


def certify_elliptic(obstacle: Optional[Obstacle], m: int = 2, trials: int = 50,
                     h_levels: Sequence[float] = (1 / 16, 1 / 32), R_dom: float = 6.0,
                     b_hardy: float = 3.0, rng=0, tolerance: float = 0.10) -> BoundCertificate:
    """Worst ratio sum_{|a|=2} ||D^a phi|| / (||Delta_h phi|| + ||grad_h phi||).

    The same continuous trials are sampled at every level in ``h_levels``;
    the certificate is stabilized when the worst ratio changes by at most
    ``tolerance`` (relative) from the coarsest to the finest level.  The
    Hardy bound ||phi : L^2(Omega_b)|| / ||grad phi|| is certified alongside
    and returned in ``extra["hardy"]``.
    """
    if m != 2:
        raise ValueError("only m = 2 is available at desk scale")
    if obstacle is not None and obstacle.max_radius >= R_dom:
        raise ValueError("domain must contain the obstacle")
    gen = np.random.default_rng(rng)
    tr = [EllipticTrial(gen, obstacle, R_dom) for _ in range(trials)]
    levels = []
    for h in h_levels:
        X, Y = _grid(R_dom, h)
        pts = np.stack([X, Y], axis=-1)
        mask = obstacle.contains(pts) if obstacle is not None else np.zeros(X.shape, bool)
        ell, hardy, used = [], [], []
        for i, f in enumerate(tr):
            phi = f(X, Y)
            phi[mask] = 0.0
            if not np.any(phi):
                continue  # degenerate trial
            e, hd = _elliptic_ratios(phi, mask, h, b_hardy, X, Y)
            ell.append(e)
            hardy.append(hd)
            used.append(i)
        levels.append((h, np.array(ell), np.array(hardy), used))
    if not levels or len(levels[0][1]) == 0:
        raise ValueError("every trial was degenerate")
    worst = [float(np.max(lv[1])) for lv in levels]
    worst_h = [float(np.nanmax(lv[2])) for lv in levels]
    change = abs(worst[-1] - worst[0]) / worst[0]
    change_h = abs(worst_h[-1] - worst_h[0]) / worst_h[0]
    h_fine, ell, _, used = levels[-1]
    k = int(np.argmax(ell))
    params = {"m": m, "trials": trials, "R_dom": R_dom,
              "obstacle": getattr(obstacle, "spec", None) or "none"}
    grid = "h=" + ",".join(f"{h:g}" for h in h_levels)
    hardy_cert = BoundCertificate(
        "hardy", dict(params, b=b_hardy), grid, worst_h[-1],
        {"trial": int(used[int(np.nanargmax(levels[-1][2]))])}, change_h <= tolerance,
        len(levels[-1][2]), extra={"worst_per_level": worst_h, "relative_change": change_h})
    return BoundCertificate(
        "elliptic", params, grid, worst[-1],
        {"trial": int(used[k]), "center": [float(v) for v in tr[used[k]].c]},
        change <= tolerance, len(ell),
        extra={"worst_per_level": worst, "relative_change": change, "hardy": hardy_cert})


# Sobolev-type estimate -------------------------------------------------------

class SectorTrial:
    """Polar-separable bump at radius ``rho``: radial width ``wr``, angular
    half-width ``wt`` (radians), centred at angle ``theta``."""

    def __init__(self, rho: float, theta: float, wr: float, wt: float, tilt: float = 0.0):
        self.rho, self.theta, self.wr, self.wt, self.tilt = rho, theta, wr, wt, tilt

    def rotated(self, angle: float) -> "SectorTrial":
        return SectorTrial(self.rho, self.theta + angle, self.wr, self.wt, self.tilt)

    def box(self, pad: float):
        """Bounding box of the support, padded."""
        half = self.wt + abs(self.tilt) * self.wr / self.rho
        th = self.theta + np.linspace(-half, half, 65)
        r = np.array([self.rho - self.wr, self.rho + self.wr])
        xs = np.outer(r, np.cos(th)).ravel()
        ys = np.outer(r, np.sin(th)).ravel()
        return xs.min() - pad, xs.max() + pad, ys.min() - pad, ys.max() + pad

    def __call__(self, X, Y):
        r = np.hypot(X, Y)
        dth = np.angle(np.exp(1j * (np.arctan2(Y, X) - self.theta)))
        s = (dth + self.tilt * (r - self.rho) / self.rho) / self.wt
        return _bump((r - self.rho) / self.wr) * _bump(s)


SOBOLEV_STRINGS = ((), (1,), (2,), (1, 1), (1, 2), (2, 2), (3,), (1, 3), (2, 3), (3, 3))
# grad^j O_12^k phi for j + k <= 2; the mixed second derivative counts twice
SOBOLEV_GROUPS = (
    (((), 1),),
    (((1,), 1), ((2,), 1)),
    (((1, 1), 1), ((1, 2), 2), ((2, 2), 1)),
    (((3,), 1),),
    (((1, 3), 1), ((2, 3), 1)),
    (((3, 3), 1),),
)


def sobolev_ratio(trial, h: float) -> float:
    """sup <x>^{1/2}|phi| / sum_{j+k<=2} ||grad^j O_12^k phi|| on a local grid."""
    x0, x1, y0, y1 = trial.box(4 * h)
    nx, ny = int(math.ceil((x1 - x0) / h)) + 1, int(math.ceil((y1 - y0) / h)) + 1
    # snap the patch to the global lattice h Z^2 so rotations compare like with like
    i0, j0 = math.floor(x0 / h), math.floor(y0 / h)
    x = h * (i0 + np.arange(nx))
    y = h * (j0 + np.arange(ny))
    X, Y = np.meshgrid(x, y, indexing="xy")
    phi = trial(X, Y)
    if not np.any(phi):
        return math.nan
    lhs = float(np.max(np.sqrt(jb(np.hypot(X, Y))) * np.abs(phi)))
    z = _static_z(phi, X, Y, h)
    # each order enters as a Frobenius norm so the sum is rotation invariant
    rhs = sum(math.sqrt(h * h * sum(w * float(np.sum(z[s] ** 2)) for s, w in group))
              for group in SOBOLEV_GROUPS)
    return lhs / rhs


def _static_z(phi, X, Y, h):
    def d(v, ax):
        out = np.zeros_like(v)
        if ax == 1:
            out[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2 * h)
        else:
            out[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2 * h)
        return out

    def z(a, v):
        return d(v, a) if a in (1, 2) else X * d(v, 2) - Y * d(v, 1)

    out = {}
    for s in SOBOLEV_STRINGS:
        v = phi
        for a in reversed(s):
            v = z(a, v)
        out[s] = v
    return out


def certify_sobolev(trials: int = 8, placements: Sequence[float] = (5.0, 10.0, 20.0, 40.0),
                    h: float = 1 / 16, rng=0, spread_limit: float = 2.0,
                    rotation_angle: float = 0.7) -> BoundCertificate:
    """Worst ratio over sector bumps placed at each radius in ``placements``.

    Trials at one radius draw random angle, widths and tilt.  The certificate
    is stabilized when max/min of the per-placement worst ratios is at most
    ``spread_limit``.  ``extra["rotation_defect"]`` is the largest relative
    change of a ratio when its trial is rotated by ``rotation_angle``.
    """
    gen = np.random.default_rng(rng)
    per, rot, worst_loc, worst = {}, 0.0, {}, -1.0
    n = 0
    for rho in placements:
        if rho - 1.5 <= 1.0:
            raise ValueError("placements must keep the trials clear of B_1")
        best = -1.0
        for _ in range(trials):
            tr = SectorTrial(rho, gen.uniform(0, 2 * math.pi), gen.uniform(0.6, 1.4),
                             gen.uniform(0.3, 0.9), gen.uniform(-0.5, 0.5))
            q = sobolev_ratio(tr, h)
            if not math.isfinite(q):
                continue
            n += 1
            q_rot = sobolev_ratio(tr.rotated(rotation_angle), h)
            rot = max(rot, abs(q_rot - q) / q)
            best = max(best, q)
            if q > worst:
                worst, worst_loc = q, {"rho": rho, "theta": tr.theta, "wr": tr.wr, "wt": tr.wt}
        per[rho] = best
    vals = np.array(list(per.values()))
    spread = float(vals.max() / vals.min())
    return BoundCertificate(
        "sobolev", {"trials": trials, "h": h}, "rho=" + ",".join(f"{p:g}" for p in placements),
        worst, worst_loc, spread <= spread_limit, n,
        extra={"per_placement": per, "spread": spread, "rotation_defect": rot})
