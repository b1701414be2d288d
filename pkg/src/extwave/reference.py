"""Reference experiment instances shared by the acceptance suite and demos."""
from __future__ import annotations

from .exterior_solver import SolverConfig, run
from .exterior_solver.diagnostics import data_norm_A
from .free_propagator import annular_bump
from .geometry import Obstacle
from .lifespan import SweepSpec, default_config

# annulus 3 <= |x| <= 6 keeps the data well resolved at h = 1/64
DECAY_DATA = (3.0, 6.0)
DECAY_WINDOW = (20.0, 200.0)
PROBE_WINDOW = (20.0, 100.0)
NEAR_PROBE = (0.75, 0.0)
LIFESPAN_EPSILONS = (1.6, 1.4, 1.2, 1.0, 0.9, 0.8)
LIFESPAN_T_CAP = 50.0


def obstacle() -> Obstacle:
    return Obstacle.disk(0.5)


def decay_data():
    return annular_bump(*DECAY_DATA)


def linear_config(h: float, t_end: float, cfl: float = 0.5) -> SolverConfig:
    """Radial linear run around disk(1/2) about two records per unit time."""
    return SolverConfig(h=h, cfl=cfl, domain_half_width=DECAY_DATA[1] + t_end + 1.0,
                        t_end=t_end, obstacle=obstacle(), geometry="radial",
                        record_stride=max(1, round(1 / (h * cfl * 2))))


def local_decay_run(h: float = 1 / 64, t_end: float = DECAY_WINDOW[1] + 1.0):
    """RunRecord of the local energy decay instance."""
    d = decay_data()
    rec, _ = run(linear_config(h, t_end), d.w0, d.w1)
    return rec


def probe_run(h: float = 1 / 128, t_end: float = PROBE_WINDOW[1] + 1.0, eta: float = 0.25):
    """RunRecord with second-order sups and the near-obstacle probe ``near``."""
    d = decay_data()
    rec, _ = run(linear_config(h, t_end), d.w0, d.w1, probes={"near": NEAR_PROBE},
                 second_order=True, eta=eta)
    return rec


def data_norms(delta: float = 0.1) -> dict:
    """A-norms matching each pointwise diagnostic of the probe run."""
    d = decay_data()
    a32 = data_norm_A(d.w0, d.w1, 1.5, DECAY_DATA[1], grad_phi=d.grad_w0)
    a2 = data_norm_A(d.w0, d.w1, 2.0 + delta, DECAY_DATA[1], grad_phi=d.grad_w0)
    return {"ba3": a32, "ba4": a2, "ba4t": a2}


def lifespan_spec(h: float = 1 / 64, t_cap: float = LIFESPAN_T_CAP) -> SweepSpec:
    return SweepSpec(LIFESPAN_EPSILONS, default_config(h=h, t_cap=t_cap))
