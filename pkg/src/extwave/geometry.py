"""Obstacles, star-shapedness, cut-off functions and commutators."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class Obstacle:
    """Compact obstacle O inside the unit ball, bounded by a smooth closed curve.

    The boundary is stored as ``M`` equally spaced samples of a periodic
    parametrization and interpolated trigonometrically, so tangents and
    normals are spectrally accurate.  Samples are oriented counterclockwise.
    """

    def __init__(self, boundary, name: str = "obstacle"):
        pts = np.asarray(boundary, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 16:
            raise ValueError("boundary must be an (M, 2) array with M >= 16")
        if not np.all(np.isfinite(pts)):
            raise ValueError("boundary contains non-finite values")
        x, y = pts.T
        area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        if abs(area) < 1e-14:
            raise ValueError("degenerate boundary curve")
        if area < 0:
            pts = pts[::-1].copy()
        self.points = pts
        self.name = name
        if np.max(np.hypot(*pts.T)) >= 1.0:
            raise ValueError("obstacle must lie inside the unit ball B_1")
        self._tangent = _spectral_derivative(pts)

    # constructors -----------------------------------------------------
    @classmethod
    def from_radial_profile(cls, R, M: int = 256, name="radial"):
        """Boundary {R(theta)(cos theta, sin theta)}; ``R`` callable or samples."""
        if callable(R):
            th = 2 * np.pi * np.arange(M) / M
            rad = np.asarray(R(th), dtype=float)
        else:
            rad = np.asarray(R, dtype=float)
            M = rad.size
            th = 2 * np.pi * np.arange(M) / M
        if np.any(rad <= 0) or not np.all(np.isfinite(rad)):
            raise ValueError("boundary radius must be positive")
        if M < 256:
            rad = _fourier_resample(rad, 256)
            th = 2 * np.pi * np.arange(256) / 256
        return cls(np.column_stack([rad * np.cos(th), rad * np.sin(th)]), name=name)

    @classmethod
    def disk(cls, radius: float, center=(0.0, 0.0), M: int = 256):
        th = 2 * np.pi * np.arange(M) / M
        c = np.asarray(center, float)
        pts = c + radius * np.column_stack([np.cos(th), np.sin(th)])
        ob = cls(pts, name=f"disk({radius})")
        ob.radius = radius if np.allclose(c, 0) else None
        ob.spec = f"disk:{radius!r}" if ob.radius else f"disk:{radius!r},{float(c[0])!r},{float(c[1])!r}"
        return ob

    @classmethod
    def ellipse(cls, a: float, b: float, center=(0.0, 0.0), M: int = 256):
        th = 2 * np.pi * np.arange(M) / M
        c = np.asarray(center, float)
        ob = cls(c + np.column_stack([a * np.cos(th), b * np.sin(th)]), name=f"ellipse({a},{b})")
        ob.spec = f"ellipse:{a!r},{b!r}" + (f",{float(c[0])!r},{float(c[1])!r}" if np.any(c) else "")
        return ob

    @classmethod
    def from_csv(cls, path):
        """Read ``theta,R`` rows (header optional) as a radial profile."""
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    continue
        if len(rows) < 16:
            raise ValueError("need at least 16 (theta, R) samples")
        th, rad = np.array(rows).T
        order = np.argsort(np.mod(th, 2 * np.pi))
        th, rad = np.mod(th, 2 * np.pi)[order], rad[order]
        M = max(256, len(rows))
        grid = 2 * np.pi * np.arange(M) / M
        prof = np.interp(grid, th, rad, period=2 * np.pi)
        ob = cls.from_radial_profile(prof, name=Path(path).stem)
        ob.spec = f"csv:{path}"
        return ob

    @classmethod
    def from_spec(cls, spec: str):
        """Parse ``disk:r[,cx,cy]``, ``ellipse:a,b[,cx,cy]`` or ``csv:path``; ``none`` gives None."""
        spec = spec.strip()
        if spec.lower() in ("", "none"):
            return None
        kind, _, arg = spec.partition(":")
        if kind == "csv":
            return cls.from_csv(arg)
        try:
            vals = [float(v) for v in arg.split(",")]
        except ValueError:
            raise ValueError(f"bad obstacle spec {spec!r}") from None
        if kind == "disk" and len(vals) in (1, 3):
            return cls.disk(vals[0], tuple(vals[1:]) or (0.0, 0.0))
        if kind == "ellipse" and len(vals) in (2, 4):
            return cls.ellipse(vals[0], vals[1], tuple(vals[2:]) or (0.0, 0.0))
        raise ValueError(f"bad obstacle spec {spec!r}")

    radius = None  # set for origin-centred disks
    spec = None  # text form for run configs, when known

    # geometry ---------------------------------------------------------
    @property
    def outward_normals(self) -> np.ndarray:
        """Unit normals pointing out of O (into the exterior domain)."""
        tx, ty = self._tangent.T
        n = np.column_stack([ty, -tx])
        return n / np.hypot(*n.T)[:, None]

    @property
    def max_radius(self) -> float:
        return float(np.max(np.hypot(*self.points.T)))

    @property
    def diameter(self) -> float:
        d = self.points[:, None, :] - self.points[None, ::4, :]
        return float(np.max(np.hypot(d[..., 0], d[..., 1])))

    @property
    def r0(self) -> float:
        """Distance from the origin to the boundary."""
        return float(np.min(np.hypot(*self.points.T)))

    def contains(self, xy) -> np.ndarray:
        """Boolean mask of points strictly inside O (even-odd rule)."""
        xy = np.asarray(xy, dtype=float)
        shape = xy.shape[:-1]
        P = xy.reshape(-1, 2)
        inside = np.zeros(P.shape[0], bool)
        near = np.hypot(P[:, 0], P[:, 1]) < self.max_radius + 1e-12
        if not np.any(near):
            return inside.reshape(shape)
        px, py = P[near, 0], P[near, 1]
        x0, y0 = self.points.T
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        acc = np.zeros(px.size, bool)
        for a, b, c, d in zip(x0, y0, x1, y1):
            cond = (b > py) != (d > py)
            if not np.any(cond):
                continue
            xint = a + (py - b) * (c - a) / (d - b + 1e-300)
            acc ^= cond & (px < xint)
        inside[near] = acc
        return inside.reshape(shape)

    def rotated(self, angle: float) -> "Obstacle":
        c, s = np.cos(angle), np.sin(angle)
        pts = self.points @ np.array([[c, s], [-s, c]])
        ob = Obstacle(pts, name=f"{self.name}@{angle:g}")
        ob.radius = self.radius
        return ob

    def radial_function(self, theta):
        """R(theta) for obstacles that are radial graphs about the origin."""
        ang = np.unwrap(np.arctan2(self.points[:, 1], self.points[:, 0]))
        rad = np.hypot(*self.points.T)
        if np.any(np.diff(ang) <= 0):
            raise ValueError("boundary is not a radial graph about the origin")
        ang0 = ang - 2 * np.pi * np.floor(ang[0] / (2 * np.pi))
        return np.interp(np.mod(theta, 2 * np.pi), ang0, rad, period=2 * np.pi)

    def __repr__(self):
        return f"Obstacle({self.name}, M={len(self.points)})"


def _spectral_derivative(pts: np.ndarray) -> np.ndarray:
    M = pts.shape[0]
    k = np.fft.fftfreq(M, d=1.0 / M)
    if M % 2 == 0:
        k[M // 2] = 0.0
    F = np.fft.fft(pts, axis=0)
    return np.real(np.fft.ifft(1j * k[:, None] * F, axis=0))


def _fourier_resample(samples: np.ndarray, M: int) -> np.ndarray:
    n = samples.size
    F = np.fft.rfft(samples)
    G = np.zeros(M // 2 + 1, complex)
    m = min(F.size, G.size)
    G[:m] = F[:m]
    return np.fft.irfft(G, n=M) * (M / n)


def check_star_shaped(obs: Obstacle, tol_scale: float = 1e-10):
    """Star-shapedness about the origin: min over the boundary of x . n(x).

    Returns ``(is_star_shaped, min_x_dot_n)``; the tolerance scales with the
    obstacle diameter.
    """
    xn = np.sum(obs.points * obs.outward_normals, axis=1)
    worst = float(np.min(xn))
    return worst >= -tol_scale * obs.diameter, worst


# cut-off functions -----------------------------------------------------

def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s * s)


def _smoothstep_d1(s):
    inside = (s > 0) & (s < 1)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 30 * s * s * (1 - s) ** 2, 0.0)


def _smoothstep_d2(s):
    inside = (s > 0) & (s < 1)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 60 * s * (1 - s) * (1 - 2 * s), 0.0)


@dataclass(frozen=True)
class Cutoff:
    """Radial psi_a: 0 on |x| <= a, 1 on |x| >= a + 1, quintic bridge between."""

    a: float = 1.0

    def __post_init__(self):
        if self.a < 1:
            raise ValueError("cut-off requires a >= 1")

    def radial(self, r, order: int = 0):
        s = np.asarray(r, float) - self.a
        return (_smoothstep, _smoothstep_d1, _smoothstep_d2)[order](s)

    def value(self, x):
        return self.radial(np.hypot(x[..., 0], x[..., 1]))

    def gradient(self, x):
        x = np.asarray(x, float)
        r = np.hypot(x[..., 0], x[..., 1])
        d1 = self.radial(r, 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            fac = np.where(d1 != 0, d1 / r, 0.0)
        return x * fac[..., None]

    def laplacian(self, x):
        x = np.asarray(x, float)
        r = np.hypot(x[..., 0], x[..., 1])
        d1 = self.radial(r, 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.radial(r, 2) + np.where(d1 != 0, d1 / r, 0.0)


def cutoff_eval(a: float, x, order: int = 0):
    """Value (0), gradient (1) or Laplacian (2) of psi_a at ``x``."""
    c = Cutoff(a)
    x = np.asarray(x, float)
    return (c.value, c.gradient, c.laplacian)[order](x)


def commutator_apply(a: float, h, grad_h, x):
    """[psi_a, -Delta] h = h Delta psi_a + 2 grad h . grad psi_a."""
    c = Cutoff(a)
    x = np.asarray(x, float)
    return np.asarray(h) * c.laplacian(x) + 2 * np.sum(np.asarray(grad_h) * c.gradient(x), axis=-1)
