"""Solver configuration, cubic nonlinearities, fields and run records."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..geometry import Obstacle

MAX_CFL = 1.0 / math.sqrt(2.0)


class SupportError(ValueError):
    """Data or source touches the obstacle neighbourhood or the outer boundary."""


class BlowUp(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, t: float):
        super().__init__(f"non-finite values at t={t:.6g}")
        self.t = t


# nonlinearity ----------------------------------------------------------

class Nonlinearity:
    """Cubic form F_i = sum g[i,a,b,c,j,k,l] (d_a u_j)(d_b u_k)(d_c u_l).

    Slot 0 is the time derivative and slots 1, 2 the spatial ones.  The
    coefficient array has shape ``(N, 3, 3, 3, N, N, N)`` and is mostly zero,
    so evaluation loops over its nonzero entries.
    """

    def __init__(self, coefficients, name: str = "custom"):
        g = np.asarray(coefficients, dtype=float)
        if g.ndim != 7 or g.shape[1:4] != (3, 3, 3):
            raise ValueError("coefficients must have shape (N, 3, 3, 3, N, N, N)")
        N = g.shape[0]
        if g.shape[4:] != (N, N, N):
            raise ValueError("component axes must all have length N")
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite coefficient")
        self.g = g
        self.name = name
        self._terms = [(idx, float(g[idx])) for idx in zip(*np.nonzero(g))]

    @property
    def N(self) -> int:
        return self.g.shape[0]

    @classmethod
    def cubic_time_derivative(cls, sign: float = 1.0, N: int = 1) -> "Nonlinearity":
        """F_i = sign (d_t u_i)^3."""
        g = np.zeros((N, 3, 3, 3, N, N, N))
        for i in range(N):
            g[i, 0, 0, 0, i, i, i] = sign
        return cls(g, name=f"cubic_dt:{sign:+g}" if N == 1 else f"cubic_dt:{sign:+g}:N={N}")

    @classmethod
    def from_terms(cls, N: int, terms: dict, name: str = "custom") -> "Nonlinearity":
        g = np.zeros((N, 3, 3, 3, N, N, N))
        for idx, val in terms.items():
            g[tuple(idx)] = val
        return cls(g, name=name)

    @classmethod
    def from_spec(cls, spec: str) -> Optional["Nonlinearity"]:
        """``none``, ``cubic_dt:+1`` or ``terms:N:i,a,b,c,j,k,l=v;...``."""
        spec = spec.strip()
        if spec.lower() in ("", "none"):
            return None
        kind, _, arg = spec.partition(":")
        if kind == "cubic_dt":
            parts = arg.split(":")
            N = int(parts[1].split("=")[1]) if len(parts) > 1 else 1
            return cls.cubic_time_derivative(float(parts[0] or 1.0), N)
        if kind == "terms":
            N_str, _, body = arg.partition(":")
            terms = {}
            for item in filter(None, body.split(";")):
                idx, _, val = item.partition("=")
                terms[tuple(int(v) for v in idx.split(","))] = float(val)
            nl = cls.from_terms(int(N_str), terms)
            nl.name = spec
            return nl
        raise ValueError(f"bad nonlinearity spec {spec!r}")

    @property
    def spec(self) -> str:
        if self.name.startswith(("cubic_dt", "terms")):
            return self.name
        body = ";".join(",".join(map(str, idx)) + f"={v!r}" for idx, v in self._terms)
        return f"terms:{self.N}:{body}"

    def negated(self) -> "Nonlinearity":
        """-F; cubic_dt names keep their short form."""
        if self.name.startswith("cubic_dt"):
            sign = -float(self.name.split(":")[1])
            return Nonlinearity.cubic_time_derivative(sign, self.N)
        return Nonlinearity(-self.g)

    def __call__(self, D: np.ndarray) -> np.ndarray:
        """Evaluate F from derivatives ``D`` of shape ``(3, N, ...)``."""
        D = np.asarray(D, float)
        if D.shape[:2] != (3, self.N):
            raise ValueError(f"derivative array must start with (3, {self.N})")
        out = np.zeros((self.N,) + D.shape[2:])
        for (i, a, b, c, j, k, l), v in self._terms:
            out[i] += v * D[a, j] * D[b, k] * D[c, l]
        return out

    def is_rotation_invariant(self, n_trials: int = 8, rng=0) -> bool:
        """True when F(R D) = F(D) for spatial rotations R (needed by the radial solver)."""
        rng = np.random.default_rng(rng)
        for _ in range(n_trials):
            D = rng.normal(size=(3, self.N))
            th = rng.uniform(0, 2 * np.pi)
            c, s = math.cos(th), math.sin(th)
            DR = D.copy()
            DR[1], DR[2] = c * D[1] - s * D[2], s * D[1] + c * D[2]
            if not np.allclose(self(D), self(DR), rtol=1e-12, atol=1e-12):
                return False
        return True

    def __repr__(self):
        return f"Nonlinearity({self.name}, N={self.N}, terms={len(self._terms)})"


# configuration -----------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one finite-difference run (dt = cfl * h).

    ``geometry='radial'`` selects the axisymmetric solver, which needs a
    centred disk (or no obstacle) and rotation-invariant data and F.
    """

    h: float = 1.0 / 32
    cfl: float = 0.5
    domain_half_width: float = 10.0
    obstacle: Optional[Obstacle] = None
    nonlinearity: Optional[Nonlinearity] = None
    t_end: float = 5.0
    record_stride: int = 1
    geometry: str = "cartesian"
    local_b: float = 2.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not 0 < self.cfl <= MAX_CFL + 1e-15:
            raise ValueError(f"cfl must lie in (0, 1/sqrt(2)], got {self.cfl}")
        if not self.domain_half_width > 2 * self.h:
            raise ValueError("domain too small")
        if self.t_end < 0 or self.record_stride < 1:
            raise ValueError("need t_end >= 0 and record_stride >= 1")
        if self.geometry not in ("cartesian", "radial"):
            raise ValueError("geometry must be 'cartesian' or 'radial'")
        if not 0 < self.local_b <= self.domain_half_width:
            raise ValueError("local energy radius b must lie in (0, R_dom]")
        if self.geometry == "radial":
            if self.obstacle is not None and self.obstacle.radius is None:
                raise ValueError("radial geometry needs a disk centred at the origin")
            if self.nonlinearity is not None and not self.nonlinearity.is_rotation_invariant():
                raise ValueError("radial geometry needs a rotation-invariant nonlinearity")

    @property
    def dt(self) -> float:
        return self.cfl * self.h

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9))

    @property
    def N(self) -> int:
        return 1 if self.nonlinearity is None else self.nonlinearity.N

    def check_causality(self, support_radius: float):
        need = support_radius + self.t_end + 2 * self.h
        if self.domain_half_width < need:
            raise SupportError(f"R_dom={self.domain_half_width} < support + t_end + 2h = {need:.6g}")

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)

    # key=value text form
    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "obstacle":
                v = "none" if v is None else (v.spec or f"unserializable:{v.name}")
            elif f.name == "nonlinearity":
                v = "none" if v is None else v.spec
            out[f.name] = repr(v) if isinstance(v, float) else str(v)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        kw = {}
        conv = {"h": float, "cfl": float, "domain_half_width": float, "t_end": float,
                "record_stride": int, "geometry": str, "local_b": float}
        for k, v in d.items():
            if k == "obstacle":
                kw[k] = Obstacle.from_spec(str(v))
            elif k == "nonlinearity":
                kw[k] = Nonlinearity.from_spec(str(v))
            elif k in conv:
                kw[k] = conv[k](v)
            else:
                raise ValueError(f"unknown solver key {k!r}")
        return cls(**kw)


# fields ----------------------------------------------------------------------

@dataclass
class Field:
    """N components on the solver grid at time ``t``; masked nodes hold 0."""

    components: np.ndarray
    mask: np.ndarray
    t: float

    def __post_init__(self):
        if self.components.shape[1:] != self.mask.shape:
            raise ValueError("components and mask shapes differ")

    @property
    def N(self) -> int:
        return self.components.shape[0]

    def copy(self) -> "Field":
        return Field(self.components.copy(), self.mask, self.t)


# run records -------------------------------------------------------------

SERIES_COLUMNS = ("t", "energy", "local_energy_b2", "sup_du", "e0")


@dataclass
class RunRecord:
    """Config, epsilon and recorded time series of one run.

    Series values are taken at the half steps t_{n+1/2}, where the
    staggered leapfrog energy lives.  ``local_energy_b2`` is the norm
    ||du(t) : L^2(Omega_b)|| for the configured b.
    """

    config: SolverConfig
    epsilon: float
    series: dict = field(default_factory=lambda: {k: [] for k in SERIES_COLUMNS})
    blow_up_time: Optional[float] = None
    probes: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)

    def append_extra(self, **row):
        for k, v in row.items():
            self.extra.setdefault(k, []).append(float(v))

    def append(self, **row):
        t = row["t"]
        if self.series["t"] and not t > self.series["t"][-1]:
            raise ValueError("record times must increase strictly")
        for k in SERIES_COLUMNS:
            self.series[k].append(float(row[k]))

    def array(self, key: str) -> np.ndarray:
        for src in (self.series, self.extra, self.probes):
            if key in src:
                return np.asarray(src[key], float)
        raise KeyError(key)

    def set_blow_up(self, t: float):
        if t > self.config.t_end + 1e-9:
            raise ValueError("blow-up time beyond t_end")
        self.blow_up_time = float(t)

    def save(self, directory):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        lines = [f"{k}={v}" for k, v in self.config.to_dict().items()]
        lines.append(f"epsilon={self.epsilon!r}")
        lines.append(f"blow_up_time={'none' if self.blow_up_time is None else repr(self.blow_up_time)}")
        lines += [f"meta.{k}={v}" for k, v in self.meta.items()]
        (d / "config.txt").write_text("\n".join(lines) + "\n")
        with open(d / "series.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SERIES_COLUMNS)
            for row in zip(*(self.series[k] for k in SERIES_COLUMNS)):
                w.writerow([repr(float(v)) for v in row])
        for name, cols in (("probes.csv", self.probes), ("extra.csv", self.extra)):
            if cols:
                _write_columns(d / name, cols)
        for k, snap in enumerate(self.snapshots):
            save_snapshot(snap, self.config.h, d / f"snapshot_{k:03d}")
        return d

    @classmethod
    def load(cls, directory) -> "RunRecord":
        d = Path(directory)
        kv = parse_key_values((d / "config.txt").read_text())
        eps = float(kv.pop("epsilon"))
        bt = kv.pop("blow_up_time", "none")
        meta = {k[5:]: _maybe_float(v) for k, v in kv.items() if k.startswith("meta.")}
        cfg = SolverConfig.from_dict({k: v for k, v in kv.items() if not k.startswith("meta.")})
        rec = cls(cfg, eps, meta=meta)
        rec.blow_up_time = None if bt == "none" else float(bt)
        with open(d / "series.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        header = rows[0]
        for row in rows[1:]:
            rec.append(**{k: float(v) for k, v in zip(header, row)})
        for name, cols in (("probes.csv", rec.probes), ("extra.csv", rec.extra)):
            if (d / name).exists():
                cols.update(_read_columns(d / name))
        return rec


def _write_columns(path, cols: dict):
    keys = sorted(cols)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for row in itertools.zip_longest(*(cols[k] for k in keys), fillvalue=""):
            w.writerow([repr(float(v)) if v != "" else "" for v in row])


def _read_columns(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return {k: [float(r[j]) for r in rows[1:] if r[j] != ""] for j, k in enumerate(rows[0])}


def _maybe_float(v: str):
    try:
        return float(v)
    except ValueError:
        return v


def parse_key_values(text: str) -> dict:
    """``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def save_snapshot(field_: Field, h: float, path):
    """Flat float64 binary plus a text header (dimensions, h, t)."""
    p = Path(path)
    field_.components.astype("<f8").tofile(p.with_suffix(".bin"))
    dims = " ".join(str(n) for n in field_.components.shape)
    p.with_suffix(".txt").write_text(f"dims={dims}\nh={h!r}\nt={field_.t!r}\ndtype=<f8\n")
    return p.with_suffix(".bin")


def load_snapshot(path):
    p = Path(path)
    kv = parse_key_values(p.with_suffix(".txt").read_text())
    dims = tuple(int(v) for v in kv["dims"].split())
    data = np.fromfile(p.with_suffix(".bin"), dtype="<f8").reshape(dims)
    return data, float(kv["h"]), float(kv["t"])
