"""Consistency check of the cut-off representation of the exterior solution.

With psi_a the radial cut-offs (0 on B_a, 1 outside B_{a+1}), w = S_0[psi_2 Xi]
the free solution and y = S[(1 - psi_2) Xi] the exterior one,

    S[Xi] = psi_1 w + (1 - psi_2) L[c_1] - L_0[[psi_2, -Delta] L[c_1]]
            + (1 - psi_3) y - L_0[[psi_3, -Delta] y],      c_1 = [psi_1, -Delta] w.

The free term psi_1 w at the probes comes from quadrature; everything else
is advanced simultaneously on one Cartesian grid and compared with a direct
exterior solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..free_propagator import CauchyData, k0_eval
from ..geometry import Cutoff, Obstacle
from .config import SolverConfig
from .fdtd import CartesianSolver

TERMS = ("psi1_S0", "S1", "S2", "S3", "S4")


@dataclass
class DecompositionResult:
    h: float
    t: float
    probes: list
    direct: np.ndarray
    terms: dict = field(default_factory=dict)

    @property
    def assembled(self) -> np.ndarray:
        return sum(self.terms[k] for k in TERMS)

    @property
    def discrepancy(self) -> np.ndarray:
        return np.abs(self.direct - self.assembled)

    @property
    def max_discrepancy(self) -> float:
        return float(np.max(self.discrepancy)) if len(self.probes) else 0.0


def cutoff_data(data: CauchyData, a: float, complement: bool = False) -> CauchyData:
    """(psi_a v0, psi_a v1), or with 1 - psi_a when ``complement``."""
    c = Cutoff(a)

    def chi(y):
        v = c.value(np.asarray(y, float))
        return 1.0 - v if complement else v

    def dchi(y):
        g = c.gradient(np.asarray(y, float))
        return -g if complement else g

    w0 = w1 = g0 = None
    if data.w0 is not None:
        w0 = lambda y: chi(y) * data.w0(y)
        g0 = lambda y: chi(y)[..., None] * data.grad_w0(y) + dchi(y) * np.asarray(data.w0(y))[..., None]
    if data.w1 is not None:
        w1 = lambda y: chi(y) * data.w1(y)
    tag = "1-psi" if complement else "psi"
    return CauchyData(w0, w1, g0, data.support_radius, name=f"{tag}{a:g}*{data.name}")


class _Commutator:
    """[psi_a, -Delta] v = v Delta psi_a + 2 grad psi_a . grad_h v on the box
    covering supp grad psi_a = closure(B_{a+1} minus B_a)."""

    def __init__(self, solver: CartesianSolver, a: float):
        h, x0 = solver.h, solver.x0
        lo = max(1, int(math.floor((-(a + 1) - x0) / h)) - 1)
        hi = min(solver.n - 1, int(math.ceil((a + 1 - x0) / h)) + 2)
        self.s = slice(lo, hi)
        pts = solver.points[self.s, self.s]
        c = Cutoff(a)
        self.lap = c.laplacian(pts)
        g = c.gradient(pts)
        self.gx, self.gy = g[..., 0], g[..., 1]
        self.h = h
        self.lo = lo

    def __call__(self, u):
        s, h = self.s, self.h
        # one extra node on each side for the centred differences
        e = slice(s.start - 1, s.stop + 1)
        ue = u[:, e, e]
        v = ue[:, 1:-1, 1:-1]
        ux = (ue[:, 1:-1, 2:] - ue[:, 1:-1, :-2]) / (2 * h)
        uy = (ue[:, 2:, 1:-1] - ue[:, :-2, 1:-1]) / (2 * h)
        return v * self.lap + 2 * (self.gx * ux + self.gy * uy)


def _solver(cfg: SolverConfig, obstacle: Optional[Obstacle], phi=None, psi=None,
            forced_support: float = 0.0) -> CartesianSolver:
    s = CartesianSolver(cfg.with_(obstacle=obstacle))
    s.initialize(phi, psi, 1.0)
    # sources enter through the forcing path, so widen the active disk by hand
    s.support = max(s.support, forced_support)
    cfg.check_causality(s.support)
    return s


def _node_values(solver: CartesianSolver, probes) -> np.ndarray:
    out = []
    for p in probes:
        j, i = solver._probe_node(np.asarray(p, float))
        out.append(float(solver.u[0, j, i]))
    return np.array(out)


def _check_probes(solver: CartesianSolver, probes):
    for p in probes:
        j, i = solver._probe_node(np.asarray(p, float))
        if abs(solver.x[i] - p[0]) > 1e-9 or abs(solver.x[j] - p[1]) > 1e-9:
            raise ValueError(f"probe {p} is not a grid node at h={solver.h}")


def verify_cutoff_decomposition(data: CauchyData, obstacle: Obstacle, probes: Sequence,
                                t: float = 5.0, h: float = 1 / 32, cfl: float = 0.5,
                                domain_half_width: Optional[float] = None,
                                quad_tol: float = 1e-10) -> DecompositionResult:
    """Compare a direct exterior solve at time ``t`` with the cut-off sum.

    ``data`` must vanish near the obstacle; ``probes`` are grid nodes in the
    exterior.  Returns every term of the sum at the probes.
    """
    probes = [tuple(map(float, p)) for p in probes]
    if data.is_zero:
        z = np.zeros(len(probes))
        return DecompositionResult(h, t, probes, z, {k: z.copy() for k in TERMS})
    support = data.support_radius
    if domain_half_width is None:
        domain_half_width = max(support, 4.0) + t + 0.5
    cfg = SolverConfig(h=h, cfl=cfl, domain_half_width=domain_half_width, t_end=t)
    n_steps = cfg.n_steps
    if abs(n_steps * cfg.dt - t) > 1e-9 * max(t, 1.0):
        raise ValueError("t must be a whole number of time steps")

    inner, outer = cutoff_data(data, 2.0), cutoff_data(data, 2.0, complement=True)
    w0i = inner.w0 if inner.w0 is not None else None
    direct = _solver(cfg, obstacle, data.w0, data.w1)
    w = _solver(cfg, None, w0i, inner.w1)
    y1 = _solver(cfg, obstacle, forced_support=2.0)  # L[c_1]
    s2 = _solver(cfg, None, forced_support=3.0)      # -L_0[[psi_2,-Delta] L[c_1]]
    y = _solver(cfg, obstacle, outer.w0, outer.w1)   # S[(1 - psi_2) Xi]
    s4 = _solver(cfg, None, forced_support=4.0)      # -L_0[[psi_3,-Delta] y]
    _check_probes(direct, probes)
    com1, com2, com3 = _Commutator(w, 1.0), _Commutator(w, 2.0), _Commutator(w, 3.0)

    def box(c, arr, sign=1.0):
        return (sign * arr, (c.lo, c.lo))

    while direct.level < n_steps:
        f1 = box(com1, com1(w.u))
        f2 = box(com2, com2(y1.u), -1.0)
        f4 = box(com3, com3(y.u), -1.0)
        direct.advance()
        w.advance()
        y1.advance(f1)
        s2.advance(f2)
        y.advance()
        s4.advance(f4)

    pts = np.array(probes)
    r = np.hypot(pts[:, 0], pts[:, 1])
    psi1 = Cutoff(1.0).radial(r)
    one_m_psi2 = 1.0 - Cutoff(2.0).radial(r)
    one_m_psi3 = 1.0 - Cutoff(3.0).radial(r)
    free = np.array([k0_eval(inner, t, p, atol=quad_tol, rtol=quad_tol) if q != 0 else 0.0
                     for p, q in zip(probes, psi1)])
    terms = {
        "psi1_S0": psi1 * free,
        "S1": one_m_psi2 * _node_values(y1, probes),
        "S2": _node_values(s2, probes),
        "S3": one_m_psi3 * _node_values(y, probes),
        "S4": _node_values(s4, probes),
    }
    return DecompositionResult(h, t, probes, _node_values(direct, probes), terms)


REFERENCE_PROBES = ((1.5, 0.0), (0.0, -1.5), (3.0, 0.0), (0.0, 3.0), (6.0, 0.0), (-6.0, 0.0))


def decomposition_convergence(data: CauchyData, obstacle: Obstacle,
                              hs: Sequence[float] = (1 / 32, 1 / 64, 1 / 128),
                              probes: Sequence = REFERENCE_PROBES, t: float = 5.0):
    """Max discrepancy at each h and the observed orders between levels."""
    res = [verify_cutoff_decomposition(data, obstacle, probes, t=t, h=h) for h in hs]
    errs = np.array([r.max_discrepancy for r in res])
    orders = np.log(errs[:-1] / errs[1:]) / np.log(np.array(hs[:-1]) / np.array(hs[1:]))
    return res, errs, orders
