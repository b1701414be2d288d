"""Weight functions and weighted sup-norms for 2D exterior wave estimates.

All weights are radial in ``x`` so they are written in terms of ``(t, r)``
with ``r = |x|``.  Every function broadcasts over numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .certificates import BoundCertificate, stabilization_check


@dataclass(frozen=True)
class WeightParams:
    """Exponent bundle shared by the weights (nu, kappa, rho, mu, eta, c)."""

    nu: float = 1.0
    kappa: float = 1.0
    rho: float = 1.0
    mu: float = 0.0
    eta: float = 0.5
    c: float = 0.0

    def require_kappa(self):
        if self.kappa < 1:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")

    def require_rho(self, lo=0.0):
        if not (lo <= self.rho <= 1.0) or self.rho <= 0:
            raise ValueError(f"rho must lie in ({lo}, 1], got {self.rho}")


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be non-negative")

    @property
    def r(self) -> float:
        return float(np.hypot(*self.x))


def jb(s):
    """Japanese bracket sqrt(1 + s^2), elementwise."""
    s = np.asarray(s, dtype=float)
    return np.sqrt(1.0 + s * s)


def jbx(x):
    """Japanese bracket of a vector; the last axis holds the components."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(1.0 + np.sum(x * x, axis=-1))


def bracket_plus(A, a: float):
    """``A^{[a]_+}``: A**a for a > 0, 1 for a < 0, 1 + log A for a == 0."""
    A = np.asarray(A, dtype=float)
    if np.any(A < 1.0 - 1e-12):
        raise ValueError("bracket_plus requires A >= 1")
    if a > 0:
        return A**a
    if a < 0:
        return np.ones_like(A)
    return 1.0 + np.log(A)


def phi(nu: float, t, r):
    """Three-branch weight Phi_nu(t, x).

    The nu > 0 branch uses <t - r> in both factors, as printed in the source
    definition; nu > 1/2 therefore collapses to <t - r>^{1/2}.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if nu < 0:
        return jb(t + r) ** nu
    if nu == 0:
        return 1.0 / np.log(2.0 + jb(t + r) / jb(t - r))
    A = jb(t - r)
    return np.sqrt(A) / bracket_plus(A, 0.5 - nu)


def psi(kappa: float, t):
    """Psi_kappa(t) = log(2 + t) if kappa == 1 else 1."""
    t = np.asarray(t, dtype=float)
    if kappa == 1:
        return np.log(2.0 + t)
    return np.ones_like(t)


def z_weight(rho: float, kappa: float, c: float, t, r):
    """z_{rho,kappa;c}(t, x) = <t + r>^rho <c t - r>^kappa."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    return jb(t + r) ** rho * jb(c * t - r) ** kappa


def W_weight(rho: float, kappa: float, t, r):
    """W_{rho,kappa}(t, x) = <t + r>^rho min(<r>, <t - r>)^kappa."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    return jb(t + r) ** rho * np.minimum(jb(r), jb(t - r)) ** kappa


def w_rho(rho: float, t, r):
    """w_rho(t, x) = <x>^{-1/2}<t-r>^{-rho} + <t+r>^{-1/2}<t-r>^{-1/2}."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    tm = jb(t - r)
    return jb(r) ** -0.5 * tm**-rho + (jb(t + r) * tm) ** -0.5


@dataclass
class SpacetimeSamples:
    """Samples of a field on a (time x point) grid.

    ``magnitudes[k]`` holds ``|f|_k`` with shape ``(len(times), len(points))``;
    only the orders actually computed are present.
    """

    times: np.ndarray
    points: np.ndarray
    magnitudes: dict[int, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_function(cls, f: Callable, times, points) -> "SpacetimeSamples":
        times = np.asarray(times, dtype=float)
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        vals = np.abs(np.asarray(f(times[:, None], points[None, :, :])))
        vals = np.broadcast_to(vals, (times.size, points.shape[0]))
        return cls(times, points, {0: np.array(vals, dtype=float)})

    def scaled(self, a: float) -> "SpacetimeSamples":
        return SpacetimeSamples(self.times, self.points,
                                {k: abs(a) * v for k, v in self.magnitudes.items()})

    @property
    def max_order(self) -> int:
        return max(self.magnitudes) if self.magnitudes else -1


def weighted_sup_norm(f: SpacetimeSamples, weight: Callable, k: int = 0,
                      t: float | None = None) -> float:
    """sup over samples with s <= t of <x>^{1/2} W(s, x) |f(s, x)|_k.

    ``weight`` is called as ``weight(s, r)``.  This is a lower bound for the
    continuous sup.
    """
    if k not in f.magnitudes:
        raise ValueError(f"|f|_{k} not available (have orders {sorted(f.magnitudes)})")
    sel = np.ones(f.times.shape, bool) if t is None else f.times <= t + 1e-12
    if not np.any(sel):
        return 0.0
    r = np.hypot(f.points[:, 0], f.points[:, 1])
    W = weight(f.times[sel][:, None], r[None, :])
    vals = jb(r)[None, :] ** 0.5 * W * f.magnitudes[k][sel]
    return float(np.max(vals)) if vals.size else 0.0


def log_cone_grid(n_sum=64, n_ratio=64, sum_min=1e-2, sum_max=1e3):
    """(t, r) points: t + r log-spaced, r / (t + r) linear in [0, 1]."""
    S = np.geomspace(sum_min, sum_max, n_sum)
    q = np.linspace(0.0, 1.0, n_ratio)
    SS, QQ = np.meshgrid(S, q, indexing="ij")
    r = (SS * QQ).ravel()
    t = (SS * (1 - QQ)).ravel()
    return t, r


def certify_weight_inequality(ineq: str, rho: float, grid: Mapping | None = None,
                              points=None, factor: float = 1.1) -> BoundCertificate:
    """Empirical constant for w_rho <= C W_{1/2,1/2}^{-1} (el1) or
    w_rho <= C <t>^{-rho} on |x| <= 2 (el2).

    Either ``points=(t, r)`` arrays or a ``grid`` dict (keys of
    :func:`log_cone_grid`) may be given.
    """
    if ineq not in ("el1", "el2"):
        raise ValueError(f"unknown inequality {ineq!r}")
    if ineq == "el1" and not 0.5 <= rho <= 1:
        raise ValueError("el1 requires 1/2 <= rho <= 1")
    if ineq == "el2" and not 0 < rho <= 1:
        raise ValueError("el2 requires 0 < rho <= 1")
    spec = dict(n_sum=64, n_ratio=64, sum_min=1e-2, sum_max=1e3)
    spec.update(grid or {})
    if points is not None:
        t, r = (np.atleast_1d(np.asarray(p, float)) for p in points)
        spec = {"points": int(t.size)}
    elif ineq == "el1":
        t, r = log_cone_grid(**spec)
    else:
        tt = np.concatenate([[0.0], np.geomspace(spec["sum_min"], spec["sum_max"], spec["n_sum"])])
        rr = np.linspace(0.0, 2.0, spec["n_ratio"])
        T, R = np.meshgrid(tt, rr, indexing="ij")
        t, r = T.ravel(), R.ravel()
    if t.size == 0:
        raise ValueError("empty grid")
    if ineq == "el2" and np.any(r > 2):
        keep = r <= 2
        t, r = t[keep], r[keep]
    w = w_rho(rho, t, r)
    ratio = w * (W_weight(0.5, 0.5, t, r) if ineq == "el1" else jb(t) ** rho)
    scale = t + r if ineq == "el1" else t
    stable, prefix_max = stabilization_check(scale, ratio, factor)
    i = int(np.argmax(ratio))
    return BoundCertificate(
        inequality=ineq,
        params={"rho": rho},
        grid_spec=";".join(f"{k}={v}" for k, v in spec.items()),
        worst_ratio=float(ratio[i]),
        worst_location={"t": float(t[i]), "r": float(r[i])},
        stabilized=stable,
        n_points=int(t.size),
        extra={"max_before_last_decade": prefix_max},
    )
