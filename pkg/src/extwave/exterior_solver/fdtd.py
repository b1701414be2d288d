"""Leapfrog solvers for the exterior mixed problem with Dirichlet obstacle.

Two discretizations share one interface: a Cartesian five-point scheme
with staircase obstacle masking, and an axisymmetric radial scheme for
centred disks (boundary-fitted, used for long runs).  Both conserve the
staggered energy E^{n+1/2} exactly when F = 0.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels as K
from ..weights import w_rho
from .config import BlowUp, Field, RunRecord, SolverConfig, SupportError

PROBE_QUANTITIES = ("t", "u", "ut", "dd_t", "d_grad")

# The discrete solution has a dispersive precursor ahead of the light cone;
# it falls below 1e-24 of the peak within 64 nodes, so the active disk is
# the cone widened by that margin rather than by 2h.
PAD_NODES = 64


def _w_half(t, r):
    tm = np.sqrt(1.0 + (t - r) ** 2)
    return (1.0 + r * r) ** -0.25 / np.sqrt(tm) + 1.0 / np.sqrt(np.sqrt(1.0 + (t + r) ** 2) * tm)


class _Solver:
    """State (u^{n}, u^{n+1}) plus time; subclasses provide the geometry."""

    def __init__(self, config: SolverConfig):
        self.config = config
        self.N = config.N
        self.h = config.h
        self.dt = config.dt
        self.nl = config.nonlinearity
        self.source = None
        self.support = 0.0
        self.level = 0
        self._probes = {}
        self.keep_old = False
        self.u_old = None

    @property
    def t(self) -> float:
        """Time of the newest level."""
        return self.level * self.dt

    @property
    def t_half(self) -> float:
        return (self.level - 0.5) * self.dt

    def _data_support(self, vals) -> float:
        nz = np.any(vals != 0.0, axis=0)
        return float(np.max(self.radius[nz]) + self.h) if np.any(nz) else 0.0

    def initialize(self, phi: Optional[Callable], psi: Optional[Callable], epsilon: float = 1.0,
                   source=None, source_support: float = math.inf):
        """Levels 0 and 1 from eps*phi, eps*psi by the second-order Taylor start.

        ``source`` is ``f(t, xy) -> (N, ...)`` or None; data and source must
        vanish within 2h of the obstacle.
        """
        u0 = self._sample(phi, epsilon)
        u1 = self._sample(psi, epsilon)
        self._check_obstacle_clearance(u0, u1)
        self.support = self._data_support(np.concatenate([u0, u1]))
        self.source = source
        if source is not None:
            self.support = max(self.support, source_support)
        if math.isfinite(self.support):
            self.config.check_causality(self.support)
        D = self._derivs_from(u1, u0)
        acc = self._laplacian(u0)
        if self.nl is not None:
            acc = acc + self.nl(D)
        f0 = self._source_at(0.0)
        if f0 is not None:
            acc = acc + f0
        nxt = u0 + self.dt * u1 + 0.5 * self.dt**2 * acc
        self._zero_outside(nxt, self._rho(self.dt))
        nxt[:, self.mask] = 0.0
        self.u_prev, self.u = u0, nxt
        self.level = 1
        for name in self._probes:
            self._record_probe_level(name, 0, u0)
            self._record_probe_level(name, 1, nxt)
        return self.fields()

    def _rho(self, t):
        return min(self.support + t + PAD_NODES * self.h, self.limit)

    def _source_at(self, t):
        if self.source is None:
            return None
        return np.asarray(self.source(t, self.points), float).reshape(self.u_shape)

    def fields(self):
        return (Field(self.u_prev.copy(), self.mask, (self.level - 1) * self.dt),
                Field(self.u.copy(), self.mask, self.t))

    def advance(self, forcing=None):
        """One leapfrog step; ``forcing`` is an extra source array on the grid
        (same shape as a level) or ``(array, offsets)`` for a sub-box."""
        t = self.t
        rho = self._rho(t + self.dt)
        F = None
        if self.nl is not None:
            F = self.nl(self._derivs_lagged())
        src = self._source_at(t)
        if src is not None:
            F = src if F is None else F + src
        old = self.u_prev
        if self.keep_old:
            self.u_old = old.copy()
        ok = self._leapfrog(rho)
        if F is not None:
            ok &= self._add(F, None, rho)
        if forcing is not None:
            arr, off = forcing if isinstance(forcing, tuple) else (forcing, None)
            ok &= self._add(arr, off, rho)
        self.u_prev, self.u = self.u, old
        self.level += 1
        if not ok:
            raise BlowUp(self.t)
        for name in self._probes:
            self._record_probe_level(name, self.level, self.u)

    def energy(self, b: Optional[float] = None):
        """(E, E_b) at t_{n+1/2}; E_b uses b (default config.local_b)."""
        return self._energies(self.config.local_b if b is None else b)

    def local_energy_norm(self, b=None) -> float:
        """||du : L^2(Omega_b)|| = sqrt(2 E_b)."""
        return math.sqrt(max(2.0 * self.energy(b)[1], 0.0))

    def second_order_sups(self, eta: float):
        """(sup |u|, sup |d d_t u| / w_{1-eta}) at the middle of the last three levels.

        Needs ``keep_old`` set before the last step.
        """
        if self.u_old is None:
            raise RuntimeError("need three stored levels (set keep_old)")
        um, u0, up = self._active(self.u_old), self._active(self.u_prev), self._active(self.u)
        ut = (up - um) / (2 * self.dt)
        utt = (up - 2 * u0 + um) / self.dt**2
        D = self._derivs_from(utt, ut)
        mask, r = self._active(self.mask), self._active(self.radius)
        q = np.sqrt(np.sum(D * D, axis=(0, 1)))
        q[mask] = 0.0
        tm = self.t - self.dt
        return float(np.max(np.abs(u0))), float(np.max(q / w_rho(1.0 - eta, tm, r)))

    def _active(self, arr):
        return arr

    def snapshot(self) -> Field:
        return Field(self.u.copy(), self.mask, self.t)

    # probes ------------------------------------------------------------------
    def add_probe(self, name: str, xy):
        """Track u, d_t u, |d d_t u| and |d grad u| at the node nearest ``xy``."""
        if self.level > 0:
            raise RuntimeError("add probes before initialize")
        node = self._probe_node(np.asarray(xy, float))
        self._probes[name] = {"node": node, "patches": [], "out": {k: [] for k in PROBE_QUANTITIES}}
        return self._node_coords(node)

    def _record_probe_level(self, name, level, arr):
        p = self._probes[name]
        p["patches"].append(self._patch(arr, p["node"]))
        if len(p["patches"]) < 3:
            return
        a, b, c = p["patches"][-3:]
        p["patches"] = p["patches"][-3:]
        for k, v in self._probe_values(a, b, c, p["node"], (level - 1) * self.dt).items():
            p["out"][k].append(v)

    def probe_series(self) -> dict:
        out = {}
        for name, p in self._probes.items():
            for k, v in p["out"].items():
                out[f"{name}.{k}"] = list(v)
        return out


# Cartesian -------------------------------------------------------------------

@lru_cache(maxsize=2)
def _cartesian_grid(n: int, h: float):
    """Node coordinates, points (n, n, 2) and radii; shared read-only."""
    x = -0.5 * (n - 1) * h + h * np.arange(n)
    X, Y = np.meshgrid(x, x, indexing="xy")
    pts = np.stack([X, Y], axis=-1)
    r = np.hypot(X, Y)
    for a in (x, pts, r):
        a.flags.writeable = False
    return x, pts, r


class CartesianSolver(_Solver):
    """Five-point leapfrog on [-R, R]^2 with staircase obstacle mask."""

    def __init__(self, config: SolverConfig):
        super().__init__(config)
        h = config.h
        n = int(round(2 * config.domain_half_width / h)) + 1
        self.n = n
        self.x0 = -0.5 * (n - 1) * h
        self.x, self.points, self.radius = _cartesian_grid(n, h)
        obs = config.obstacle
        self.mask = np.zeros((n, n), bool)
        if obs is not None:
            near = self.radius < obs.max_radius + h
            self.mask[near] = obs.contains(self.points[near])
        self.u_shape = (self.N, n, n)
        self.limit = -self.x0 - h
        K.warm_up()

    def _sample(self, f, eps):
        out = np.zeros(self.u_shape)
        if f is not None and eps != 0.0:
            out[:] = eps * np.asarray(f(self.points), float).reshape((-1, self.n, self.n))
        out[:, self.mask] = 0.0
        return out

    def _check_obstacle_clearance(self, *arrs):
        obs = self.config.obstacle
        if obs is None:
            return
        pts = obs.points
        dense = np.concatenate([pts + (np.roll(pts, -1, 0) - pts) * s for s in np.linspace(0, 1, 4, endpoint=False)])
        near = (self.radius < obs.max_radius + 3 * self.h)
        d, _ = cKDTree(dense).query(self.points[near])
        bad = self.mask[near] | (d <= 2 * self.h)
        for a in arrs:
            if np.any(a[:, near][:, bad] != 0.0):
                raise SupportError("data must vanish within 2h of the obstacle")

    def _zero_outside(self, arr, rho):
        arr[:, self.radius > rho] = 0.0

    def _laplacian(self, u):
        out = np.zeros_like(u)
        out[:, 1:-1, 1:-1] = (u[:, 1:-1, 2:] + u[:, 1:-1, :-2] + u[:, 2:, 1:-1] + u[:, :-2, 1:-1]
                              - 4 * u[:, 1:-1, 1:-1]) / self.h**2
        return out

    def _grad(self, u):
        gx = np.zeros_like(u)
        gy = np.zeros_like(u)
        gx[:, :, 1:-1] = (u[:, :, 2:] - u[:, :, :-2]) / (2 * self.h)
        gy[:, 1:-1, :] = (u[:, 2:, :] - u[:, :-2, :]) / (2 * self.h)
        return gx, gy

    def _derivs_from(self, ut, u):
        gx, gy = self._grad(u)
        return np.stack([ut, gx, gy])

    def _box(self, rho):
        """Index slice of the square containing the disk |x| <= rho (+ one node)."""
        lo = max(0, int(math.floor((-rho - self.x0) / self.h)) - 1)
        hi = min(self.n, int(math.ceil((rho - self.x0) / self.h)) + 2)
        return slice(lo, hi)

    def _active(self, arr):
        s = self._box(self._rho(self.t) + self.h)
        return arr[..., s, s]

    def _derivs_lagged(self):
        s = self._box(self._rho(self.t))
        u, up = self.u[:, s, s], self.u_prev[:, s, s]
        D = self._derivs_from((u - up) / self.dt, u)
        return D, s

    def advance(self, forcing=None):
        if self.nl is None:
            return super().advance(forcing)
        # nonlinearity evaluated on the active box only
        D, s = self._derivs_lagged()
        F = self.nl(D)
        box = (F, (s.start, s.start))
        nl, self.nl = self.nl, None
        try:
            extra = box if forcing is None else _merge_forcing(box, forcing, self.u_shape)
            super().advance(extra)
        finally:
            self.nl = nl

    def _leapfrog(self, rho):
        m, ok = K.leapfrog(self.u_prev, self.u, self.mask, (self.dt / self.h) ** 2,
                           self.x0, self.h, rho)
        return ok

    def _add(self, F, off, rho):
        F = np.asarray(F, float)
        if off is None:
            off = (0, 0)
        return K.add_box(self.u_prev, np.ascontiguousarray(F), off[0], off[1], self.dt**2,
                         self.mask, self.x0, self.h, rho)

    def _energies(self, b):
        # levels: u_prev = u^n, u = u^{n+1}
        return K.energies(self.u_prev, self.u, self.mask, self.x0, self.h, self.dt, b,
                          self._rho(self.t))

    def sup_derivatives(self):
        """(sup |du|, e_0 = sup |du| / w_{1/2}) at t_{n+1/2}."""
        return K.sup_derivatives(self.u_prev, self.u, self.mask, self.x0, self.h, self.dt,
                                 self.t_half, self._rho(self.t))

    # probes
    def _probe_node(self, xy):
        i = int(round((xy[0] - self.x0) / self.h))
        j = int(round((xy[1] - self.x0) / self.h))
        if not (1 <= i < self.n - 1 and 1 <= j < self.n - 1) or self.mask[j, i]:
            raise ValueError("probe outside the computational exterior domain")
        return (j, i)

    def _node_coords(self, node):
        j, i = node
        return (float(self.x[i]), float(self.x[j]))

    def _patch(self, arr, node):
        j, i = node
        return arr[:, j - 1:j + 2, i - 1:i + 2].copy()

    def _probe_values(self, a, b, c, node, t):
        h, dt = self.h, self.dt
        ut = (c - a) / (2 * dt)
        utt = (c - 2 * b + a) / dt**2
        utx = (ut[:, 1, 2] - ut[:, 1, 0]) / (2 * h)
        uty = (ut[:, 2, 1] - ut[:, 0, 1]) / (2 * h)
        uxx = (b[:, 1, 2] - 2 * b[:, 1, 1] + b[:, 1, 0]) / h**2
        uyy = (b[:, 2, 1] - 2 * b[:, 1, 1] + b[:, 0, 1]) / h**2
        uxy = (b[:, 2, 2] - b[:, 2, 0] - b[:, 0, 2] + b[:, 0, 0]) / (4 * h * h)
        return {
            "t": t, "u": float(b[0, 1, 1]), "ut": float(ut[0, 1, 1]),
            "dd_t": float(np.sqrt(np.sum(utt[:, 1, 1] ** 2 + utx**2 + uty**2))),
            "d_grad": float(np.sqrt(np.sum(utx**2 + uty**2 + uxx**2 + uyy**2 + 2 * uxy**2))),
        }


def _merge_forcing(a, b, shape):
    full = np.zeros(shape)
    for arr, off in (a, b if isinstance(b, tuple) else (b, None)):
        off = off or (0, 0)
        full[:, off[0]:off[0] + arr.shape[1], off[1]:off[1] + arr.shape[2]] += arr
    return full


# radial ----------------------------------------------------------------------

class RadialSolver(_Solver):
    """Axisymmetric leapfrog in r for a centred disk obstacle (or none).

    Nodes r_i = a + i h with u(a) = 0, or r_i = i h including the origin.
    The weighted operator (1/r)(r u_r)_r is symmetric in the area weights
    2 pi r_i h (pi h^2 / 4 at the origin), which makes the staggered energy
    exactly conserved.
    """

    def __init__(self, config: SolverConfig):
        super().__init__(config)
        h = config.h
        obs = config.obstacle
        self.a = 0.0 if obs is None else float(obs.radius)
        n = int(math.ceil((config.domain_half_width - self.a) / h)) + 1
        self.n = n
        r = self.a + h * np.arange(n)
        self.r = r
        self.radius = r
        self.points = np.stack([r, np.zeros_like(r)], axis=-1)
        self.mask = np.zeros(n, bool)
        if obs is not None:
            self.mask[0] = True
        self.mask[-1] = True  # artificial outer boundary, never reached
        rh = r[:-1] + 0.5 * h  # edge midpoints
        self.r_edge = rh
        w = 2 * math.pi * r * h
        if obs is None:
            w[0] = math.pi * h * h / 4
        self.weight = w
        self._inv_w = np.where(w > 0, 1.0 / np.where(w > 0, w, 1.0), 0.0)
        self.u_shape = (self.N, n)
        self.limit = r[-1] - h

    def _sample(self, f, eps):
        out = np.zeros(self.u_shape)
        if f is not None and eps != 0.0:
            out[:] = eps * np.asarray(f(self.points), float).reshape((-1, self.n))
        out[:, self.mask] = 0.0
        return out

    def _check_obstacle_clearance(self, *arrs):
        if self.config.obstacle is None:
            return
        near = self.r <= self.a + 2 * self.h + 1e-12
        for a in arrs:
            if np.any(a[:, near] != 0.0):
                raise SupportError("data must vanish within 2h of the obstacle")

    def _zero_outside(self, arr, rho):
        arr[:, self.r > rho] = 0.0

    def _laplacian(self, u):
        flux = 2 * math.pi * self.r_edge * np.diff(u, axis=-1) / self.h
        out = np.zeros_like(u)
        out[:, :-1] += flux
        out[:, 1:] -= flux
        out *= self._inv_w
        out[:, self.mask] = 0.0
        return out

    def _derivs_from(self, ut, u):
        ur = np.zeros_like(u)
        ur[:, 1:-1] = (u[:, 2:] - u[:, :-2]) / (2 * self.h)
        if self.a == 0.0:
            ur[:, 0] = 0.0
        else:
            ur[:, 0] = (-3 * u[:, 0] + 4 * u[:, 1] - u[:, 2]) / (2 * self.h)
        return np.stack([ut, ur, np.zeros_like(u)])

    def _derivs_lagged(self):
        return self._derivs_from((self.u - self.u_prev) / self.dt, self.u)

    def _leapfrog(self, rho):
        nxt = 2 * self.u - self.u_prev + self.dt**2 * self._laplacian(self.u)
        nxt[:, self.r > rho] = 0.0
        nxt[:, self.mask] = 0.0
        self.u_prev[:] = nxt
        return bool(np.all(np.isfinite(nxt)))

    def _add(self, F, off, rho):
        F = np.asarray(F, float)
        if off is not None:
            full = np.zeros(self.u_shape)
            full[:, off[0]:off[0] + F.shape[1]] = F
            F = full
        upd = self.dt**2 * F
        upd[:, (self.r > rho) | self.mask] = 0.0
        self.u_prev += upd
        return bool(np.all(np.isfinite(self.u_prev)))

    def _energies(self, b):
        u0, u1 = self.u_prev, self.u
        v = (u1 - u0) / self.dt
        node = 0.5 * self.weight * np.sum(v * v, axis=0)
        node[self.mask] = 0.0
        edge = 0.5 * (2 * math.pi * self.r_edge / self.h) * np.sum(np.diff(u0, axis=-1) * np.diff(u1, axis=-1), axis=0)
        E = float(node.sum() + edge.sum())
        Eb = float(node[self.r < b].sum() + edge[self.r_edge < b].sum())
        return E, Eb

    def _grad_half(self):
        u0, u1 = self.u_prev, self.u
        ur = 0.5 * (self._derivs_from(u0, u0)[1] + self._derivs_from(u1, u1)[1])
        return (u1 - u0) / self.dt, ur

    def sup_derivatives(self):
        ut, ur = self._grad_half()
        q = np.sqrt(np.sum(ut * ut + ur * ur, axis=0))
        q[self.mask] = 0.0
        return float(q.max()), float(np.max(q / _w_half(self.t_half, self.r)))

    def du_profile(self):
        """|du|(t_{n+1/2}, r) on the radial nodes."""
        ut, ur = self._grad_half()
        q = np.sqrt(np.sum(ut * ut + ur * ur, axis=0))
        q[self.mask] = 0.0
        return q

    # probes
    def _probe_node(self, xy):
        rr = float(np.hypot(*xy))
        i = int(round((rr - self.a) / self.h))
        lo = 0 if self.a == 0.0 else 1
        if not lo <= i < self.n - 1 or self.mask[i]:
            raise ValueError("probe outside the computational exterior domain")
        return i

    def _node_coords(self, node):
        return (float(self.r[node]), 0.0)

    def _patch(self, arr, node):
        if node == 0:  # origin: even reflection
            return arr[:, [1, 0, 1]].copy()
        return arr[:, node - 1:node + 2].copy()

    def _probe_values(self, a, b, c, node, t):
        h, dt, r = self.h, self.dt, self.r[node]
        ut = (c - a) / (2 * dt)
        utt = (c - 2 * b + a) / dt**2
        utr = (ut[:, 2] - ut[:, 0]) / (2 * h)
        ur = (b[:, 2] - b[:, 0]) / (2 * h)
        urr = (b[:, 2] - 2 * b[:, 1] + b[:, 0]) / h**2
        ur_over_r = urr if r == 0.0 else ur / r
        return {
            "t": t, "u": float(b[0, 1]), "ut": float(ut[0, 1]),
            "dd_t": float(np.sqrt(np.sum(utt[:, 1] ** 2 + utr**2))),
            "d_grad": float(np.sqrt(np.sum(utr**2 + urr**2 + ur_over_r**2))),
        }


def make_solver(config: SolverConfig) -> _Solver:
    return RadialSolver(config) if config.geometry == "radial" else CartesianSolver(config)


# run loop --------------------------------------------------------------------

def run(config: SolverConfig, phi=None, psi=None, epsilon: float = 1.0, *, source=None,
        source_support: float = math.inf, probes: Optional[dict] = None,
        monitor: Optional[Callable] = None, snapshot_times=(), raise_on_blowup: bool = False,
        second_order: bool = False, eta: float = 0.25):
    """Advance to ``config.t_end`` and return ``(RunRecord, solver)``.

    Every ``record_stride`` steps the record gets energy, local energy norm,
    sup |du| and e_0 at t_{n+1/2}.  ``monitor(solver, record)`` may return
    True to stop early (it is called at record steps).  Non-finite values
    set ``blow_up_time`` unless ``raise_on_blowup``.  With ``second_order``
    the record's ``extra`` series also holds sup |u| and
    sup |d d_t u| / w_{1-eta} at the level times.
    """
    solver = make_solver(config)
    solver.keep_old = second_order
    for name, xy in (probes or {}).items():
        solver.add_probe(name, xy)
    rec = RunRecord(config, float(epsilon))
    snaps = sorted(snapshot_times)
    solver.initialize(phi, psi, epsilon, source=source, source_support=source_support)
    rec.meta["support_radius"] = solver.support
    rec.meta["source"] = int(source is not None)
    if second_order:
        rec.meta["eta"] = eta
    n_total = config.n_steps
    stride = config.record_stride
    stopped = False

    def record():
        E, Eb = solver.energy()
        s, e0 = solver.sup_derivatives()
        rec.append(t=solver.t_half, energy=E, local_energy_b2=math.sqrt(max(2 * Eb, 0.0)),
                   sup_du=s, e0=e0)
        if second_order and solver.u_old is not None:
            su, et = solver.second_order_sups(eta)
            rec.append_extra(t=solver.t - solver.dt, sup_u=su, e_t=et)
        return monitor is not None and bool(monitor(solver, rec))

    stopped = record()
    try:
        while not stopped and solver.level < n_total:
            solver.advance()
            while snaps and solver.t >= snaps[0] - 1e-12:
                rec.snapshots.append(solver.snapshot())
                snaps.pop(0)
            if solver.level % stride == 0 or solver.level == n_total:
                stopped = record()
    except BlowUp as exc:
        if raise_on_blowup:
            raise
        rec.set_blow_up(min(exc.t, config.t_end))
    rec.probes.update(solver.probe_series())
    return rec, solver


# functional interface --------------------------------------------------------

def init(config: SolverConfig, phi, psi, epsilon: float = 1.0):
    """Levels 0 and 1 as a pair of Fields."""
    solver = make_solver(config)
    return solver.initialize(phi, psi, epsilon)


def step(fields, config: SolverConfig) -> Field:
    """Next level from ``(level n-1, level n)`` without mutating the inputs."""
    f0, f1 = fields
    solver = make_solver(config)
    solver.u_prev = f0.components.copy()
    solver.u = f1.components.copy()
    solver.level = int(round(f1.t / config.dt))
    solver.support = math.inf
    solver.advance()
    return Field(solver.u.copy(), solver.mask, solver.t)


def energy(fields, config: SolverConfig) -> float:
    """Total staggered energy between the two levels in ``fields``."""
    return _energy_pair(fields, config, config.domain_half_width)[0]


def local_energy(fields, config: SolverConfig, b: float) -> float:
    if b > config.domain_half_width:
        raise ValueError("b must not exceed R_dom")
    return _energy_pair(fields, config, b)[1]


def _energy_pair(fields, config, b):
    f0, f1 = fields
    solver = make_solver(config)
    solver.u_prev, solver.u = f0.components, f1.components
    solver.level = int(round(f1.t / config.dt))
    solver.support = math.inf
    return solver.energy(b)
