"""Complete sets of mutually unbiased bases in prime dimension.

Conventions fixed here are inherited by every witness built on top:

* ``d = 2``: basis 0 is the X eigenbasis ``{|+>, |->}``, basis 1 the Y
  eigenbasis ``{|+i>, |-i>}``, basis 2 the computational basis.
* odd prime ``d``: basis ``x < d`` has vectors with components
  ``omega**(x*s**2 + a*s) / sqrt(d)`` (``omega = exp(2*pi*i/d)``); basis ``d``
  is the computational basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy

from steerkit.errors import DimensionError, UnsupportedDimension
from steerkit.linop import matrix_from_json, matrix_to_json, projector


@dataclass(frozen=True)
class MubFamily:
    """``bases[x][a]`` is the ket ``|phi^a_x>``; stored as an array (d+1, d, d)."""

    dim: int
    bases: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bases, dtype=complex)
        if b.ndim != 3 or b.shape[1:] != (self.dim, self.dim):
            raise DimensionError(f"bases array of shape {b.shape} does not match dim {self.dim}")
        b.setflags(write=False)
        object.__setattr__(self, "bases", b)

    @property
    def n_bases(self) -> int:
        return self.bases.shape[0]

    def vector(self, a: int, x: int) -> np.ndarray:
        return self.bases[x, a]

    def projector(self, a: int, x: int) -> np.ndarray:
        return projector(self.bases[x, a])

    def to_json(self) -> dict:
        return {"schema_version": 1, "dim": self.dim, "bases": [matrix_to_json(b) for b in self.bases]}

    @classmethod
    def from_json(cls, data: dict) -> "MubFamily":
        bases = np.array([matrix_from_json(b) for b in data["bases"]])
        return cls(int(data["dim"]), bases)


@dataclass
class ValidationReport:
    passed: bool
    max_orthonormality_deviation: float
    max_unbiasedness_deviation: float
    violations: list[str] = field(default_factory=list)


def mub_family(d: int) -> MubFamily:
    if d < 2:
        raise DimensionError(f"dimension must be at least 2, got {d}")
    if not sympy.isprime(d):
        raise UnsupportedDimension(f"MUB construction is only implemented for prime d, got {d}")
    if d == 2:
        s = 1 / np.sqrt(2)
        bases = np.array(
            [
                [[s, s], [s, -s]],
                [[s, 1j * s], [s, -1j * s]],
                [[1, 0], [0, 1]],
            ],
            dtype=complex,
        )
        return MubFamily(2, bases)
    s = np.arange(d)
    omega = np.exp(2j * np.pi / d)
    bases = np.empty((d + 1, d, d), dtype=complex)
    for x in range(d):
        for a in range(d):
            bases[x, a] = omega ** ((x * s * s + a * s) % d) / np.sqrt(d)
    bases[d] = np.eye(d)
    return MubFamily(d, bases)


def verify_unbiased(f: MubFamily, tol: float = 1e-10) -> ValidationReport:
    """Check orthonormality within each basis and unbiasedness across bases."""
    d, b = f.dim, f.bases
    # gram[x, a, y, c] = <phi^a_x | phi^c_y>
    gram = np.abs(np.einsum("xai,yci->xayc", b.conj(), b))
    n = b.shape[0]
    same = np.eye(n, dtype=bool)
    ortho = max(
        (np.max(np.abs(gram[x, :, x, :] - np.eye(d))) for x in range(n)), default=0.0
    )
    # (x, y, a, c) ordering so the boolean mask selects the x != y pairs
    cross = np.abs(np.transpose(gram, (0, 2, 1, 3))[~same] - 1 / np.sqrt(d))
    unbiased = float(cross.max()) if cross.size else 0.0
    violations = []
    if ortho > tol:
        violations.append(f"orthonormality deviation {ortho:.3e} > {tol:.1e}")
    if unbiased > tol:
        violations.append(f"unbiasedness deviation {unbiased:.3e} > {tol:.1e}")
    return ValidationReport(not violations, float(ortho), unbiased, violations)


def conjugate_projectors(f: MubFamily):
    """Alice's measurements: projectors onto the entrywise conjugated MUB vectors."""
    from steerkit.assemblage import Measurements

    effects = {}
    for x in range(f.n_bases):
        for a in range(f.dim):
            effects[(a, x)] = projector(f.bases[x, a].conj())
    return Measurements(f.n_bases, f.dim, effects)
