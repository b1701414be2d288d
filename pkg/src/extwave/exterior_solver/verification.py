"""Self-checks of the linear solver: Richardson extrapolation against the
free propagator, manufactured-solution convergence and energy drift."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..free_propagator import CauchyData, gaussian, k0_eval
from ..geometry import Obstacle
from .config import SolverConfig
from .fdtd import CartesianSolver, run

DEFAULT_PROBES = tuple((r * math.cos(a), r * math.sin(a))
                       for r, a in [(0.0, 0.0), (0.25, 0.3), (0.5, 1.1), (0.75, 2.0), (1.0, 2.9),
                                    (1.25, 3.7), (1.5, 4.4), (1.75, 5.2), (2.0, 5.9), (2.25, 0.7)])


def _bilinear(solver: CartesianSolver, p) -> float:
    """Bilinear interpolation of the newest level at ``p`` (exact at nodes)."""
    fx = (p[0] - solver.x0) / solver.h
    fy = (p[1] - solver.x0) / solver.h
    i, j = int(math.floor(fx)), int(math.floor(fy))
    a, b = fx - i, fy - j
    u = solver.u[0]
    return float((1 - a) * (1 - b) * u[j, i] + a * (1 - b) * u[j, i + 1]
                 + (1 - a) * b * u[j + 1, i] + a * b * u[j + 1, i + 1])


def fdtd_probe_values(data: CauchyData, probes, t: float, h: float, cfl: float = 0.5,
                      obstacle: Optional[Obstacle] = None) -> np.ndarray:
    """u_h(t, p) at the probes from a Cartesian run with data (w0, w1)."""
    R = data.support_radius + t + 0.5
    cfg = SolverConfig(h=h, cfl=cfl, domain_half_width=R, t_end=t, obstacle=obstacle,
                       record_stride=10**9)
    _, s = run(cfg, data.w0, data.w1)
    if abs(s.t - t) > 1e-9:
        raise ValueError("t must be a whole number of time steps")
    return np.array([_bilinear(s, p) for p in probes])


@dataclass
class RichardsonCheck:
    probes: list
    reference: np.ndarray  # quadrature values
    extrapolated: np.ndarray
    coarse: np.ndarray
    fine: np.ndarray

    @property
    def relative_error(self) -> np.ndarray:
        return np.abs(self.extrapolated - self.reference) / np.abs(self.reference)

    def significant_digits(self) -> np.ndarray:
        """-log10 of the relative error."""
        return -np.log10(np.maximum(self.relative_error, 1e-300))


def richardson_check(data: Optional[CauchyData] = None, probes: Sequence = DEFAULT_PROBES,
                     t: float = 2.0, h: float = 1 / 64, cfl: float = 0.5) -> RichardsonCheck:
    """Extrapolate (4 u_{h/2} - u_h) / 3 and compare with k0_eval.

    Probes should lie on both grids' nodes or be interpolated; bilinear
    interpolation is second order, so the extrapolation keeps its meaning
    only at nodes.  The default probes are rounded to the coarse grid.
    """
    data = data or gaussian()
    probes = [(round(p[0] / h) * h, round(p[1] / h) * h) for p in probes]
    coarse = fdtd_probe_values(data, probes, t, h, cfl)
    fine = fdtd_probe_values(data, probes, t, h / 2, cfl)
    ref = np.array([k0_eval(data, t, p, atol=1e-12, rtol=1e-11) for p in probes])
    return RichardsonCheck(probes, ref, (4 * fine - coarse) / 3, coarse, fine)


# manufactured solution -----------------------------------------------------

class ManufacturedSolution:
    """u = cos(omega t) B(x), B = (1 - |x - c|^2 / R^2)^6 on the disk of radius R,
    with source f = u_tt - Delta u."""

    def __init__(self, omega: float = 2.0, radius: float = 2.0, center=(0.3, -0.2)):
        self.omega, self.R, self.c = omega, radius, np.asarray(center, float)

    def _s(self, xy):
        d = np.asarray(xy, float) - self.c
        return np.sum(d * d, axis=-1) / self.R**2

    def bump(self, xy):
        s = self._s(xy)
        return np.where(s < 1, (1 - np.minimum(s, 1)) ** 6, 0.0)

    def laplacian(self, xy):
        s = self._s(xy)
        q = 1 - np.minimum(s, 1)
        # g(s) = q^6 with s = |x-c|^2/R^2: Delta = g'' |grad s|^2 + g' Delta s
        return np.where(s < 1, 30 * q**4 * 4 * s / self.R**2 - 6 * q**5 * 4 / self.R**2, 0.0)

    def exact(self, t, xy):
        return math.cos(self.omega * t) * self.bump(xy)

    def source(self, t, xy):
        return math.cos(self.omega * t) * (-self.omega**2 * self.bump(xy) - self.laplacian(xy))

    @property
    def support(self) -> float:
        return float(np.hypot(*self.c) + self.R)


def manufactured_errors(hs: Sequence[float] = (1 / 16, 1 / 32, 1 / 64), t: float = 2.0,
                        cfl: float = 0.5, ms: Optional[ManufacturedSolution] = None):
    """Max nodal error at time ``t`` per h and the observed orders."""
    ms = ms or ManufacturedSolution()
    errs = []
    for h in hs:
        R = ms.support + t + 1.0
        cfg = SolverConfig(h=h, cfl=cfl, domain_half_width=R, t_end=t, record_stride=10**9)
        _, s = run(cfg, ms.bump, None, source=ms.source, source_support=ms.support)
        errs.append(float(np.max(np.abs(s.u[0] - ms.exact(s.t, s.points)))))
    errs = np.array(errs)
    hs = np.asarray(hs, float)
    return errs, np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:])


def energy_drift(data: Optional[CauchyData] = None, steps: int = 1000, h: float = 1 / 32,
                 cfl: float = 0.5, geometry: str = "cartesian",
                 obstacle: Optional[Obstacle] = None) -> float:
    """max |E_n - E_0| / E_0 over ``steps`` leapfrog steps with F = 0."""
    data = data or gaussian()
    t_end = steps * cfl * h
    R = data.support_radius + t_end + 1.0
    cfg = SolverConfig(h=h, cfl=cfl, domain_half_width=R, t_end=t_end, geometry=geometry,
                       obstacle=obstacle, record_stride=10)
    rec, _ = run(cfg, data.w0, data.w1)
    E = rec.array("energy")
    return float(np.max(np.abs(E - E[0])) / E[0])
