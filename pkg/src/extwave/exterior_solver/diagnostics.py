"""Measurements on solver output: decay fits, weighted ratio series and
generalized (Z-field) derivatives on Cartesian grids."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..weights import WeightParams, jb, w_rho
from .config import Field, RunRecord, SolverConfig

MIN_FIT_SAMPLES = 10
WHICH = ("ba3", "ba4", "ba4t")


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit log y = c - gamma log <t> over a window."""

    gamma: float
    intercept: float
    residual: float  # RMS of the log-log residuals
    n: int
    window: tuple


def fit_power_decay(t, y, window) -> DecayFit:
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    t1, t2 = window
    sel = (t >= t1) & (t <= t2) & (y > 0)
    if np.count_nonzero(sel) < MIN_FIT_SAMPLES:
        raise ValueError(f"window {window} holds {np.count_nonzero(sel)} samples; "
                         f"need at least {MIN_FIT_SAMPLES}")
    x = np.log(jb(t[sel]))
    ly = np.log(y[sel])
    slope, icpt = np.polyfit(x, ly, 1)
    res = float(np.sqrt(np.mean((ly - (slope * x + icpt)) ** 2)))
    return DecayFit(float(-slope), float(icpt), res, int(sel.sum()), (float(t1), float(t2)))


def fit_local_energy_decay(record, b: Optional[float] = None, window=(20.0, 200.0)) -> DecayFit:
    """Fitted exponent of ||du : L^2(Omega_b)|| against <t>.

    ``record`` is a RunRecord or a pair ``(t, values)``.  The record holds
    the local norm for ``config.local_b`` only, so another ``b`` is an error.
    """
    if isinstance(record, RunRecord):
        if b is not None and abs(b - record.config.local_b) > 1e-12:
            raise ValueError(f"record holds the local norm for b={record.config.local_b}, not {b}")
        if record.config.nonlinearity is not None:
            raise ValueError("decay fit needs a linear run")
        t, y = record.array("t"), record.array("local_energy_b2")
    else:
        t, y = record
    t2 = float(np.max(t)) if len(t) else -math.inf
    if window[1] > t2 + 1e-9 or window[0] < float(np.min(t)) - 1e-9:
        raise ValueError(f"window {window} exceeds the recorded range")
    return fit_power_decay(t, y, window)


def data_norm_A(phi, psi, rho: float, radius: float, grad_phi=None, epsilon: float = 1.0,
                n_samples: int = 4096) -> float:
    """sup <x>^rho (|v0| + |grad v0| + |v1|) over the exterior, k = 0.

    Data vanish near the obstacle, so the sup is taken over the disk of
    ``radius`` by polar sampling; ``grad_phi`` defaults to centred differences.
    """
    m = int(round(math.sqrt(n_samples)))
    r = np.linspace(0.0, radius, m)
    th = 2 * math.pi * np.arange(m) / m
    R, T = np.meshgrid(r, th, indexing="ij")
    y = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1).reshape(-1, 2)
    tot = np.zeros(len(y))
    if phi is not None:
        v = np.asarray(phi(y), float).reshape(-1, len(y))
        tot += np.abs(v).sum(axis=0)
        if grad_phi is not None:
            g = np.asarray(grad_phi(y), float).reshape(-1, len(y), 2)
        else:
            e = 1e-6
            g = np.stack([(np.asarray(phi(y + e * d), float) - np.asarray(phi(y - e * d), float))
                          .reshape(-1, len(y)) / (2 * e) for d in np.eye(2)], axis=-1)
        tot += np.hypot(g[..., 0], g[..., 1]).sum(axis=0)
    if psi is not None:
        tot += np.abs(np.asarray(psi(y), float).reshape(-1, len(y))).sum(axis=0)
    return abs(epsilon) * float(np.max(jb(np.hypot(y[:, 0], y[:, 1])) ** rho * tot))


def weighted_pointwise_diagnostic(record: RunRecord, which: str, data_norm: float,
                                  params: Optional[WeightParams] = None):
    """Ratio series LHS / A for the linear basic estimates at k = 0.

    ``ba3``: sup|u| / A_{3/2};  ``ba4``: sup|du| / w_{1/2} / A_{2+delta};
    ``ba4t``: sup|d d_t u| / w_{1-eta} / A_{2+delta}, with the record's eta
    (checked against ``params.eta`` when ``params`` is given).
    ``data_norm`` is the matching A (see ``data_norm_A``).  Runs with a
    source are rejected because no N-norm of f is recorded.
    Returns ``(t, ratio)``.
    """
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}")
    if record.meta.get("source"):
        raise ValueError("record has a source term; its N-norm series is not recorded")
    if which == "ba4":
        t, lhs = record.array("t"), record.array("e0")
    else:
        if "sup_u" not in record.extra:
            raise ValueError("run with second_order=True to record sup|u| and sup|d d_t u|")
        t = np.asarray(record.extra["t"], float)
        lhs = np.asarray(record.extra["sup_u" if which == "ba3" else "e_t"], float)
        if (which == "ba4t" and params is not None
                and abs(record.meta.get("eta", params.eta) - params.eta) > 1e-12):
            raise ValueError("record was taken with a different eta")
    if data_norm == 0.0:
        return t, np.zeros_like(lhs)
    return t, lhs / data_norm


def non_growing(t, ratio, factor: float = 1.2) -> bool:
    """Bounded and non-growing: max over the second half of the time range is
    at most ``factor`` times the max over the first half."""
    t = np.asarray(t, float)
    ratio = np.asarray(ratio, float)
    if not np.all(np.isfinite(ratio)):
        return False
    mid = 0.5 * (t[0] + t[-1])
    first, second = ratio[t <= mid], ratio[t > mid]
    if len(second) == 0:
        return True
    return bool(second.max() <= factor * first.max())


def upper_envelope(y):
    """Running max from the right: the smallest non-increasing majorant."""
    y = np.asarray(y, float)
    return np.maximum.accumulate(y[::-1])[::-1]


def probe_decay_exponents(record: RunRecord, probe: str, window=(20.0, 100.0)) -> dict:
    """Fitted decay exponents of |d d_t u| and |d grad u| at a probe.

    The oscillating series are replaced by their non-increasing upper
    envelope before the log-log fit.
    """
    t = record.array(f"{probe}.t")
    out = {}
    for key in ("dd_t", "d_grad"):
        out[key] = fit_power_decay(t, upper_envelope(record.array(f"{probe}.{key}")), window)
    return out


# Z-field derivatives ----------------------------------------------------------

def _d(u, axis, h):
    out = np.zeros_like(u)
    sl = [slice(None)] * u.ndim
    a, b, c = list(sl), list(sl), list(sl)
    a[axis], b[axis], c[axis] = slice(1, -1), slice(2, None), slice(None, -2)
    out[tuple(a)] = (u[tuple(b)] - u[tuple(c)]) / (2 * h)
    return out


def _grid_xy(config: SolverConfig, n: int):
    x0 = -0.5 * (n - 1) * config.h
    x = x0 + config.h * np.arange(n)
    return np.meshgrid(x, x, indexing="xy")


def _levels(fields) -> list:
    return [np.asarray(f.components if isinstance(f, Field) else f, float) for f in fields]


def z_strings(m: int, static: bool = False):
    """All index strings alpha with |alpha| <= m over {0,1,2,3} (or {1,2,3})."""
    idx = (1, 2, 3) if static else (0, 1, 2, 3)
    return [a for k in range(m + 1) for a in itertools.product(idx, repeat=k)]


def z_field_derivatives(fields: Sequence, config: SolverConfig, m: int = 2,
                        static: bool = False) -> dict:
    """Discrete Z^alpha u for |alpha| <= m at the middle stored level.

    Z_0 = d_t, Z_1 = d_1, Z_2 = d_2, Z_3 = O_12 = x_1 d_2 - x_2 d_1, all by
    centred differences; ``alpha = (a_1, ..., a_k)`` means Z_{a_1}...Z_{a_k} u.
    ``fields`` holds consecutive levels (Field or (N, n, n) arrays); strings
    containing d_t need three levels and d_t^2 needs the same three.  With
    ``static`` a single level suffices and only spatial strings are built.
    """
    if config.geometry != "cartesian":
        raise ValueError("Z-field derivatives need the Cartesian grid")
    if not 0 <= m <= 2:
        raise ValueError("m must be 0, 1 or 2")
    lv = _levels(fields)
    if not static and m >= 1 and len(lv) < 3:
        raise ValueError("strings with d_t need at least three stored levels")
    mid = len(lv) // 2
    h, dt = config.h, config.dt
    u = lv[mid]
    X, Y = _grid_xy(config, u.shape[-1])

    def spatial(a, v):
        if a == 1:
            return _d(v, -1, h)
        if a == 2:
            return _d(v, -2, h)
        return X * _d(v, -2, h) - Y * _d(v, -1, h)

    # time-derivative stack at the middle level: d_t^0, d_t^1, d_t^2
    tder = [u]
    if not static and m >= 1:
        tder.append((lv[mid + 1] - lv[mid - 1]) / (2 * dt))
        tder.append((lv[mid + 1] - 2 * u + lv[mid - 1]) / dt**2)
    out = {}
    for alpha in z_strings(m, static):
        # time derivatives commute with the spatial fields, so apply them first
        q = sum(1 for a in alpha if a == 0)
        v = tder[q]
        for a in reversed([a for a in alpha if a != 0]):
            v = spatial(a, v)
        out[alpha] = v
    return out


def z_pointwise_norm(derivs: dict, m: int) -> np.ndarray:
    """|u|_m = sum over |alpha| <= m of |Z^alpha u|, summed over components."""
    tot = None
    for alpha, v in derivs.items():
        if len(alpha) <= m:
            a = np.abs(v).sum(axis=0)
            tot = a if tot is None else tot + a
    return tot


def z_energy_norm(levels: Sequence, config: SolverConfig, m: int, k: int = 1,
                  mask=None) -> float:
    """z_m = sum_{p=0}^{2k-m} ||d_t^p du : H^m||, m <= 2, by differences.

    ``levels`` are consecutive levels centred on the evaluation time; d_t^p du
    needs p + 1 time derivatives, so 2k - m + 2 levels are required (an odd
    count is used with centred differences, rounding up).
    """
    if not 0 <= m <= min(2, 2 * k):
        raise ValueError("m must satisfy 0 <= m <= min(2, 2k)")
    lv = np.stack(_levels(levels))
    pmax = 2 * k - m
    need = pmax + 2
    if len(lv) < need + (1 - need % 2):
        raise ValueError(f"need {need + (1 - need % 2)} consecutive levels")
    h, dt = config.h, config.dt
    mid = len(lv) // 2
    # centred time derivatives of every order at the middle level
    tder = [lv[mid]]
    cur = lv
    for q in range(1, pmax + 2):
        cur = np.diff(cur, axis=0) / dt
        # after q differences, the middle sits between entries for odd q
        c = (len(cur) - 1) / 2
        lo, hi = int(math.floor(c)), int(math.ceil(c))
        tder.append(0.5 * (cur[lo] + cur[hi]))
    cell = h * h

    def sobolev(v):
        tot = 0.0
        stack = [v]
        for _ in range(m + 1):
            tot += sum(float(np.sum(np.where(mask, 0.0, w * w)) if mask is not None else np.sum(w * w))
                       for w in stack)
            stack = [_d(w, ax, h) for w in stack for ax in (-1, -2)]
        return math.sqrt(cell * tot)

    total = 0.0
    for p in range(pmax + 1):
        ut = tder[p + 1]
        grads = [ut] + [_d(tder[p], ax, h) for ax in (-1, -2)]
        total += math.sqrt(sum(sobolev(g) ** 2 for g in grads))
    return total


def e0_field(derivs_half, t: float, r) -> np.ndarray:
    """e_0[u] = |du| / w_{1/2}(t, x) from a stack (d_t u, d_1 u, d_2 u)."""
    q = np.sqrt(np.sum(np.asarray(derivs_half) ** 2, axis=tuple(range(np.ndim(derivs_half) - np.ndim(r)))))
    return q / w_rho(0.5, t, r)
