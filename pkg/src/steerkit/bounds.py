"""Closed-form robustness and cooling bounds for maximally entangled and isotropic states.

Everything here is a pure function of ``d`` and ``eta`` so it can referee
the SDP results independently.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np


def _check_dim(d):
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")


def _check_eta(eta):
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")


def harmonic_number(d: int) -> float:
    return math.fsum(1.0 / k for k in range(1, int(d) + 1))


def maxent_robustness_lb(d: int) -> float:
    _check_dim(d)
    r = math.sqrt(d)
    return r * (r - 1) / (r + 1)


def isotropic_robustness_lb(d: int, eta: float) -> float:
    """Affine in ``eta``; negative values carry no information."""
    _check_dim(d)
    _check_eta(eta)
    r = math.sqrt(d)
    return r * (r - 1) / (r + 1) * eta - (d * r - 1) / (d * (r + 1)) * (1 - eta)


def xi_lb_isotropic(d: int, eta: float) -> float:
    _check_dim(d)
    _check_eta(eta)
    return (d + 1) * (1 + eta * (d - 1)) / (d * (1 + math.sqrt(d)))


@dataclass(frozen=True)
class Thresholds:
    unsteerable: float
    advantage: float
    dim_scaling: float


def thresholds(d: int) -> Thresholds:
    """Visibility thresholds: full LHS model, ``xi_lb > 1``, and growth of the bound with ``d``."""
    _check_dim(d)
    r = math.sqrt(d)
    return Thresholds(
        unsteerable=(harmonic_number(d) - 1) / (d - 1),
        advantage=1 / (r + 1 / (d + r + 1)),
        dim_scaling=(2 + r * (3 + d)) / (2 + 3 * r + 2 * d * d + d**2.5),
    )


@dataclass(frozen=True)
class BoundSet:
    d: int
    eta: float
    R_lb_maxent: float
    R_lb_isotropic: float
    xi_lb: float
    eta_threshold_unsteerable: float
    eta_threshold_advantage: float
    eta_threshold_dim_scaling: float


def bound_set(d: int, eta: float) -> BoundSet:
    t = thresholds(d)
    return BoundSet(
        d,
        eta,
        maxent_robustness_lb(d),
        isotropic_robustness_lb(d, eta),
        xi_lb_isotropic(d, eta),
        t.unsteerable,
        t.advantage,
        t.dim_scaling,
    )


FIG3_COLUMNS = ("d", "eta", "xi_lb", "R_lb", "unsteerable_threshold", "advantage_threshold")


def eta_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive grid with values rounded to the step's decimals, so 0.3 prints as 0.3."""
    if step <= 0:
        raise ValueError("step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise ValueError("empty grid")
    decimals = max(0, -int(math.floor(math.log10(step))) + 2)
    return [round(start + i * step, decimals) for i in range(count)]


def fig3_surface(d_range, eta_grid_values) -> list[dict]:
    """Rows of the advantage surface in (d, eta) order."""
    ds = list(d_range)
    etas = list(eta_grid_values)
    if not ds or not etas:
        raise ValueError("empty d range or eta grid")
    rows = []
    for d in ds:
        t = thresholds(d)
        for eta in etas:
            rows.append(
                {
                    "d": int(d),
                    "eta": float(eta),
                    "xi_lb": xi_lb_isotropic(d, eta),
                    "R_lb": isotropic_robustness_lb(d, eta),
                    "unsteerable_threshold": t.unsteerable,
                    "advantage_threshold": t.advantage,
                }
            )
    return rows


def rows_to_csv(rows, columns, fh=None) -> str:
    """Write rows with ``repr`` floats so values round-trip exactly."""
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue() if fh is None else ""


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)
