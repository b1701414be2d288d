"""Blow-up detection and lifespan scaling sweeps for the cubic problem.

A run ends when sup |du| crosses a threshold (by default 10^6 times its
initial value) or turns non-finite; the crossing time is interpolated in
log sup |du| between the bracketing steps.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .exterior_solver import BlowUp, Nonlinearity, SolverConfig, make_solver
from .free_propagator import annular_bump
from .geometry import Obstacle

DEFAULT_THRESHOLD_FACTOR = 1e6


def default_config(h: float = 1 / 64, t_cap: float = 400.0, data_radius: float = 3.0,
                   sign: float = 1.0, obstacle: Optional[Obstacle] = None,
                   geometry: str = "radial") -> SolverConfig:
    """Radial solver, disk(1/2), F = sign (d_t u)^3, domain sized for ``t_cap``."""
    obs = Obstacle.disk(0.5) if obstacle is None else obstacle
    return SolverConfig(h=h, cfl=0.5, domain_half_width=data_radius + t_cap + 4 * h,
                        obstacle=obs, nonlinearity=Nonlinearity.cubic_time_derivative(sign),
                        t_end=t_cap, record_stride=1, geometry=geometry)


@dataclass
class BlowUpResult:
    epsilon: float
    T_hat: float  # t_cap when censored
    censored: bool
    resolved: Optional[bool] = None  # set by resolution_guard
    threshold: float = math.nan
    steps: int = 0
    reason: str = ""

    def row(self) -> dict:
        return {"epsilon": repr(self.epsilon), "T_hat": repr(self.T_hat),
                "censored": int(self.censored),
                "resolved_flag": "" if self.resolved is None else int(self.resolved)}


def _crossing(t0, s0, t1, s1, thr):
    """Root of the linear interpolant of log s through (t0, s0), (t1, s1)."""
    if not math.isfinite(s1) or s1 <= s0:
        return t1
    a, b, c = math.log(s0), math.log(s1), math.log(thr)
    return t0 + (t1 - t0) * min(max((c - a) / (b - a), 0.0), 1.0)


class _Tracker:
    def __init__(self, solver, threshold):
        self.solver = solver
        self.thr = threshold
        self.prev = None

    def check(self):
        """Crossing time or None; called after each step."""
        s = self.solver.sup_derivatives()[0]
        t = self.solver.t_half
        out = None
        if not math.isfinite(s) or s > self.thr:
            out = t if self.prev is None else _crossing(self.prev[0], self.prev[1], t, s, self.thr)
        self.prev = (t, s)
        return out


def _initial_sup(solver) -> float:
    return solver.sup_derivatives()[0]


def run_to_blowup(epsilon: float, config: SolverConfig, data=None, *,
                  threshold: Optional[float] = None,
                  threshold_factor: float = DEFAULT_THRESHOLD_FACTOR,
                  stop_at: Optional[float] = None, on_stop: Optional[Callable] = None
                  ) -> BlowUpResult:
    """Advance until sup |du| exceeds the threshold; censored at ``config.t_end``.

    ``data`` is CauchyData (default: annular bump on 2 <= |x| <= 3 in w0).
    ``stop_at`` pauses at that time and hands the solver to ``on_stop``
    (used by the resolution guard); the returned result is then censored
    with reason "stopped".
    """
    if config.nonlinearity is None:
        raise ValueError("run_to_blowup needs a nonlinearity")
    data = data or annular_bump(2.0, 3.0)
    solver = make_solver(config)
    solver.keep_old = stop_at is not None
    solver.initialize(data.w0, data.w1, epsilon)
    s0 = _initial_sup(solver)
    if threshold is None:
        threshold = threshold_factor * s0 if s0 > 0 else math.inf
    res = BlowUpResult(float(epsilon), float(config.t_end), True, threshold=threshold)
    if epsilon == 0.0 or s0 == 0.0:
        res.reason = "zero data"
        return res
    tracker = _Tracker(solver, threshold)
    tracker.check()
    n_total = config.n_steps
    try:
        while solver.level < n_total:
            solver.advance()
            if stop_at is not None and solver.t >= stop_at:
                res.reason = "stopped"
                res.steps = solver.level
                if on_stop is not None:
                    on_stop(solver)
                return res
            hit = tracker.check()
            if hit is not None:
                res.T_hat, res.censored, res.reason = float(hit), False, "threshold"
                break
    except BlowUp as exc:
        prev = tracker.prev
        res.T_hat = float(prev[0] if prev else exc.t)
        res.censored, res.reason = False, "non-finite"
    res.steps = solver.level
    if res.censored:
        res.reason = "t_cap"
    return res


def continue_from(solver, config: SolverConfig, threshold: float) -> BlowUpResult:
    """Carry a paused coarse run onto ``config`` (finer h) and run to blow-up.

    The coarse run must have kept three levels; the fine start uses
    u(t + dt_f) = u + dt_f u_t + dt_f^2 / 2 u_tt with centred coarse
    differences, interpolated linearly in space.
    """
    if solver.u_old is None:
        raise ValueError("coarse solver must keep three levels")
    dtc = solver.dt
    um, u0, up = solver.u_old, solver.u_prev, solver.u
    ut = (up - um) / (2 * dtc)
    utt = (up - 2 * u0 + um) / dtc**2
    fine = make_solver(config)
    fine.support = solver.support
    t0 = solver.t - dtc
    n0 = int(round(t0 / fine.dt))
    if abs(n0 * fine.dt - t0) > 1e-9:
        raise ValueError("coarse time must be a fine-grid level")
    dtf = fine.dt

    v0 = _resample(u0, solver, fine)
    v1 = _resample(u0 + dtf * ut + 0.5 * dtf**2 * utt, solver, fine)
    v0[:, fine.mask] = 0.0
    v1[:, fine.mask] = 0.0
    fine.u_prev, fine.u = v0, v1
    fine.level = n0 + 1
    res = BlowUpResult(math.nan, float(config.t_end), True, threshold=threshold)
    tracker = _Tracker(fine, threshold)
    tracker.check()
    try:
        while fine.level < config.n_steps:
            fine.advance()
            hit = tracker.check()
            if hit is not None:
                res.T_hat, res.censored, res.reason = float(hit), False, "threshold"
                break
    except BlowUp as exc:
        prev = tracker.prev
        res.T_hat = float(prev[0] if prev else exc.t)
        res.censored, res.reason = False, "non-finite"
    res.steps = fine.level
    if res.censored:
        res.reason = "t_cap"
    return res


def _resample(a, coarse, fine):
    if a.ndim == 2:  # radial
        return np.stack([np.interp(fine.radius, coarse.radius, c) for c in a])
    out = np.empty((a.shape[0],) + fine.radius.shape)
    pts = fine.points.reshape(-1, 2)[:, ::-1]  # (y, x) order
    for c in range(a.shape[0]):
        f = RegularGridInterpolator((coarse.x, coarse.x), a[c], bounds_error=False, fill_value=0.0)
        out[c] = f(pts).reshape(fine.radius.shape)
    return out


def resolution_guard(epsilon: float, config: SolverConfig, data=None, *,
                     result: Optional[BlowUpResult] = None, tolerance: float = 0.05,
                     threshold_factor: float = DEFAULT_THRESHOLD_FACTOR) -> BlowUpResult:
    """Re-run the last 10% before blow-up at h/2; flag when T_hat moves > ``tolerance``.

    Returns the (possibly supplied) coarse result with ``resolved`` set and
    the fine estimate in ``fine_T_hat`` on the returned object.
    """
    data = data or annular_bump(2.0, 3.0)
    res = result or run_to_blowup(epsilon, config, data, threshold_factor=threshold_factor)
    if res.censored:
        res.resolved = True  # nothing to resolve: no blow-up within t_cap
        res.fine_T_hat = res.T_hat
        return res
    fine_cfg = config.with_(h=config.h / 2)
    # restart time on a coarse level that is also a fine level
    t_restart = math.floor(0.9 * res.T_hat / config.dt) * config.dt
    box = {}
    run_to_blowup(epsilon, config, data, threshold=res.threshold, stop_at=t_restart,
                  on_stop=lambda s: box.setdefault("solver", s))
    if "solver" not in box:
        res.resolved = False
        res.fine_T_hat = math.nan
        return res
    fine = continue_from(box["solver"], fine_cfg, res.threshold)
    res.fine_T_hat = fine.T_hat
    res.resolved = (not fine.censored) and abs(fine.T_hat - res.T_hat) <= tolerance * res.T_hat
    return res


def threshold_shift(epsilon: float, config: SolverConfig, data=None, factor: float = 10.0,
                    result: Optional[BlowUpResult] = None) -> float:
    """Relative change of T_hat when the threshold is multiplied by ``factor``."""
    res = result or run_to_blowup(epsilon, config, data)
    if res.censored:
        return 0.0
    hi = run_to_blowup(epsilon, config, data, threshold=factor * res.threshold)
    return abs(hi.T_hat - res.T_hat) / res.T_hat


# sweep and fit ---------------------------------------------------------------

@dataclass
class SweepSpec:
    epsilons: Sequence[float]
    config: SolverConfig
    threshold_factor: float = DEFAULT_THRESHOLD_FACTOR
    t_cap: Optional[float] = None

    def __post_init__(self):
        eps = [float(e) for e in self.epsilons]
        if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be positive and strictly decreasing")
        self.epsilons = eps
        if self.t_cap is None:
            self.t_cap = self.config.t_end
        if self.t_cap > self.config.t_end + 1e-12:
            raise ValueError("t_cap beyond the configured t_end")


@dataclass
class LifespanFit:
    epsilons: np.ndarray
    T_hat: np.ndarray
    censored: np.ndarray
    slope: float  # empirical C in log T = C eps^-2 + b
    intercept: float
    r2: float
    power_slope: float  # log T vs log(1/eps)
    power_r2: float
    convex: Optional[bool] = None  # curvature of log T vs eps^-2 (recorded only)

    def summary(self) -> dict:
        return {"slope_C": self.slope, "intercept": self.intercept, "R2": self.r2,
                "power_slope": self.power_slope, "power_R2": self.power_r2,
                "n_fit": int(np.count_nonzero(~self.censored)),
                "log_T_convex_in_eps^-2": "" if self.convex is None else int(self.convex)}


def _linfit(x, y):
    slope, icpt = np.polyfit(x, y, 1)
    pred = slope * x + icpt
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), min(max(r2, 0.0), 1.0)


def fit_lifespan(results) -> LifespanFit:
    """Least squares of log T_hat against eps^-2 over uncensored pairs.

    ``results`` holds BlowUpResult objects or (eps, T_hat[, censored]) tuples.
    A power-law fit (log T vs log 1/eps) is reported for comparison.
    """
    eps, T, cen = [], [], []
    for r in results:
        if isinstance(r, BlowUpResult):
            eps.append(r.epsilon), T.append(r.T_hat), cen.append(r.censored)
        else:
            eps.append(r[0]), T.append(r[1]), cen.append(bool(r[2]) if len(r) > 2 else False)
    eps, T, cen = np.array(eps, float), np.array(T, float), np.array(cen, bool)
    ok = ~cen
    if np.count_nonzero(ok) < 4:
        raise ValueError("need at least 4 uncensored pairs")
    x = eps[ok] ** -2
    y = np.log(T[ok])
    slope, icpt, r2 = _linfit(x, y)
    pslope, _, pr2 = _linfit(np.log(1 / eps[ok]), y)
    convex = None
    if np.count_nonzero(ok) >= 3:
        convex = bool(np.polyfit(x, y, 2)[0] > 0)
    return LifespanFit(eps, T, cen, slope, icpt, r2, pslope, pr2, convex)


def is_monotone(results, rtol: float = 0.0) -> bool:
    """T_hat non-increasing in eps (inputs in any order; censoring allowed)."""
    pairs = sorted(((r.epsilon, r.T_hat) for r in results))
    return all(b <= a * (1 + rtol) for (_, a), (_, b) in zip(pairs, pairs[1:]))


@dataclass
class SweepResult:
    results: list
    fit: Optional[LifespanFit]
    monotone: bool
    notes: dict = field(default_factory=dict)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, ["epsilon", "T_hat", "censored", "resolved_flag"],
                           lineterminator="\n")
        w.writeheader()
        for r in self.results:
            w.writerow(r.row())
        if self.fit is not None:
            buf.write("\n# fit\n")
            s = self.fit.summary()
            buf.write(",".join(s) + "\n")
            buf.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in s.values()) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def sweep(spec: SweepSpec, data=None, guard: bool = False) -> SweepResult:
    """Run every epsilon (sequentially; runs are independent) and fit."""
    cfg = spec.config.with_(t_end=spec.t_cap)
    results = []
    for e in spec.epsilons:
        r = run_to_blowup(e, cfg, data, threshold_factor=spec.threshold_factor)
        if guard:
            resolution_guard(e, cfg, data, result=r)
        results.append(r)
    try:
        fit = fit_lifespan(results)
    except ValueError:
        fit = None
    return SweepResult(results, fit, is_monotone(results))


def sign_flip_check(epsilons: Sequence[float], config: SolverConfig, data=None) -> list:
    """Results with F = -(d_t u)^3; the defocusing runs should all be censored."""
    cfg = config.with_(nonlinearity=config.nonlinearity.negated())
    return [run_to_blowup(e, cfg, data) for e in epsilons]
