"""Worst-case ratio certificates and their CSV form."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_FIELDS = ["inequality", "params", "grid", "worst_ratio", "stabilized",
              "worst_location", "n_points", "coverage"]


@dataclass
class BoundCertificate:
    """Empirical constant for an inequality LHS <= C RHS over a grid.

    ``stabilized`` records whether the worst ratio stopped growing when the
    last decade of the grid's scale variable was added.
    """

    inequality: str
    params: dict
    grid_spec: str
    worst_ratio: float
    worst_location: dict
    stabilized: bool
    n_points: int
    coverage: float = 1.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_points <= 0:
            raise ValueError("certificate grid is empty")
        if not self.worst_ratio >= 0:
            raise ValueError(f"invalid worst ratio {self.worst_ratio}")

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.worst_ratio) and self.stabilized)

    def row(self) -> dict:
        return {
            "inequality": self.inequality,
            "params": _fmt_map(self.params),
            "grid": self.grid_spec,
            "worst_ratio": repr(float(self.worst_ratio)),
            "stabilized": int(self.stabilized),
            "worst_location": _fmt_map(self.worst_location),
            "n_points": self.n_points,
            "coverage": repr(float(self.coverage)),
        }


def _fmt_map(d: dict) -> str:
    return ";".join(f"{k}={_fmt_value(v)}" for k, v in d.items())


def _fmt_value(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(v)
    return str(v)


def certificates_to_csv(certs, path=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for c in certs:
        w.writerow(c.row())
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def stabilization_check(scale, ratio, factor: float = 1.2):
    """Compare the global max with the max over points below the last decade.

    Returns ``(stabilized, prefix_max)``.  Points whose scale lies within a
    factor 10 of the largest scale form the last decade; the grid counts as
    stabilized when adding them raised the max by at most ``factor``.  With
    no points before the last decade there is nothing to compare and the
    result is ``True``.
    """
    scale = np.asarray(scale, float).ravel()
    ratio = np.asarray(ratio, float).ravel()
    ok = np.isfinite(ratio)
    if not np.all(ok):
        return False, float("nan")
    top = np.max(scale)
    prefix = scale < top / 10.0
    if not np.any(prefix):
        return True, float(np.max(ratio))
    pmax = float(np.max(ratio[prefix]))
    gmax = float(np.max(ratio))
    return bool(gmax <= factor * pmax or gmax == 0.0), pmax


def decade_maxima(scale, ratio):
    """Max ratio per decade of the scale variable (diagnostic listing)."""
    scale = np.asarray(scale, float)
    ratio = np.asarray(ratio, float)
    pos = scale > 0
    d = np.floor(np.log10(scale[pos])).astype(int)
    return {int(k): float(np.max(ratio[pos][d == k])) for k in np.unique(d)}
