"""Assemblages, measurements and deterministic local-hidden-state strategies.

An assemblage is stored unnormalized: ``members[x, a]`` is the operator
``sigma_{a|x}`` whose trace is the outcome probability ``p(a|x)``.  Note the
array order is ``(setting, outcome)`` while the public accessors take the
conventional ``(a, x)`` pair.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from steerkit.errors import DimensionError, InvalidAssemblage, TooManyStrategies
from steerkit.linop import (
    PSD_TOL,
    as_density,
    hermitian_part,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
)

STRATEGY_CAP = 10**7
TRACE_TOL = 1e-10
SIGNALING_TOL = 1e-9
ZERO_PROB = 1e-12


def _stack_members(members, settings=None, outcomes=None):
    """Accept either an (n, o, d, d) array or a mapping ``(a, x) -> matrix``."""
    if isinstance(members, dict):
        if not members:
            raise InvalidAssemblage("no members given")
        n = settings if settings is not None else 1 + max(x for _, x in members)
        o = outcomes if outcomes is not None else 1 + max(a for a, _ in members)
        d = np.asarray(next(iter(members.values()))).shape[0]
        out = np.zeros((n, o, d, d), dtype=complex)
        for (a, x), m in members.items():
            if not (0 <= a < o and 0 <= x < n):
                raise InvalidAssemblage(f"member index {(a, x)} out of range")
            out[x, a] = m
        return out
    return np.array(members, dtype=complex)


@dataclass(frozen=True)
class Assemblage:
    members: np.ndarray

    def __init__(self, members, *, settings=None, outcomes=None, validate=True):
        arr = _stack_members(members, settings, outcomes)
        if arr.ndim != 4 or arr.shape[2] != arr.shape[3]:
            raise DimensionError(f"members must have shape (n, o, d, d), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidAssemblage("assemblage has non-finite entries")
        arr = hermitian_part(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "members", arr)
        if validate:
            problems = self.violations()
            if problems:
                raise InvalidAssemblage("; ".join(problems))

    @property
    def settings(self) -> int:
        return self.members.shape[0]

    @property
    def outcomes(self) -> int:
        return self.members.shape[1]

    @property
    def dim(self) -> int:
        return self.members.shape[2]

    def member(self, a: int, x: int) -> np.ndarray:
        return self.members[x, a]

    def probabilities(self) -> np.ndarray:
        """Table ``p[x, a] = Tr(sigma_{a|x})``."""
        return np.einsum("xaii->xa", self.members).real

    def normalized(self) -> np.ndarray:
        """Conditional states; zero-probability branches stay zero."""
        p = self.probabilities()
        safe = np.where(p > ZERO_PROB, p, 1.0)
        out = self.members / safe[:, :, None, None]
        out[p <= ZERO_PROB] = 0
        return out

    def marginals(self) -> np.ndarray:
        """Bob's reduced state per setting, shape (n, d, d)."""
        return self.members.sum(axis=1)

    def violations(self) -> list[str]:
        problems = []
        mins = np.linalg.eigvalsh(self.members)[..., 0]
        if mins.min() < -PSD_TOL:
            x, a = np.unravel_index(np.argmin(mins), mins.shape)
            problems.append(f"member {a}|{x} has eigenvalue {mins.min():.3e}")
        totals = self.probabilities().sum(axis=1)
        bad = np.abs(totals - 1) > TRACE_TOL
        if bad.any():
            problems.append(f"setting {int(np.argmax(bad))} has total trace {totals[bad][0]!r}")
        marg = self.marginals()
        drift = np.linalg.norm(marg - marg[0], axis=(1, 2)).max()
        if drift > SIGNALING_TOL:
            problems.append(f"signaling: marginals differ by {drift:.3e}")
        return problems

    def to_json(self) -> dict:
        members = {
            f"{a}|{x}": matrix_to_json(self.members[x, a])
            for x in range(self.settings)
            for a in range(self.outcomes)
        }
        return {
            "schema_version": 1,
            "dim": self.dim,
            "settings": self.settings,
            "outcomes": self.outcomes,
            "members": members,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Assemblage":
        try:
            d, n, o = int(data["dim"]), int(data["settings"]), int(data["outcomes"])
            raw = data["members"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidAssemblage(f"malformed assemblage JSON: {exc!r}") from exc
        arr = np.zeros((n, o, d, d), dtype=complex)
        seen = set()
        for key, m in raw.items():
            try:
                a, x = (int(t) for t in key.split("|"))
            except ValueError as exc:
                raise InvalidAssemblage(f"bad member key {key!r}; expected '<a>|<x>'") from exc
            if not (0 <= a < o and 0 <= x < n):
                raise InvalidAssemblage(f"member key {key!r} out of range")
            mat = matrix_from_json(m)
            if mat.shape != (d, d):
                raise DimensionError(f"member {key} has shape {mat.shape}, expected {(d, d)}")
            arr[x, a] = mat
            seen.add((a, x))
        if len(seen) != n * o:
            raise InvalidAssemblage(f"expected {n * o} members, got {len(seen)}")
        return cls(arr)


@dataclass(frozen=True)
class Measurements:
    """POVMs ``M_{a|x}``; ``effects[x, a]`` is a (dA, dA) operator."""

    effects: np.ndarray

    def __init__(self, settings, outcomes, effects, validate=True):
        arr = _stack_members(effects, settings, outcomes)
        arr = hermitian_part(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "effects", arr)
        if validate:
            mins = np.linalg.eigvalsh(arr)[..., 0]
            if mins.min() < -PSD_TOL:
                raise InvalidAssemblage(f"POVM effect has eigenvalue {mins.min():.3e}")
            eye = np.eye(arr.shape[2])
            dev = np.abs(arr.sum(axis=1) - eye).max()
            if dev > 1e-10:
                raise InvalidAssemblage(f"POVM effects do not sum to identity (deviation {dev:.3e})")

    @property
    def settings(self) -> int:
        return self.effects.shape[0]

    @property
    def outcomes(self) -> int:
        return self.effects.shape[1]

    @property
    def dim(self) -> int:
        return self.effects.shape[2]

    def effect(self, a: int, x: int) -> np.ndarray:
        return self.effects[x, a]

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "dim": self.dim,
            "settings": self.settings,
            "outcomes": self.outcomes,
            "effects": {
                f"{a}|{x}": matrix_to_json(self.effects[x, a])
                for x in range(self.settings)
                for a in range(self.outcomes)
            },
        }

    @classmethod
    def from_json(cls, data: dict) -> "Measurements":
        try:
            n, o = int(data["settings"]), int(data["outcomes"])
            effects = {}
            for key, m in data["effects"].items():
                a, x = (int(t) for t in key.split("|"))
                effects[(a, x)] = matrix_from_json(m)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidAssemblage(f"malformed measurements JSON: {exc!r}") from exc
        return cls(n, o, effects)


@dataclass(frozen=True)
class DeterministicStrategySet:
    """All maps ``lambda: x -> a``; row ``k`` of ``table`` lists ``lambda_k(x)``."""

    settings: int
    outcomes: int
    table: np.ndarray

    def __len__(self):
        return self.table.shape[0]

    def response(self) -> np.ndarray:
        """Indicator ``D[k, x, a] = delta(a, lambda_k(x))``."""
        return np.eye(self.outcomes, dtype=int)[self.table]


def strategy_count(n: int, o: int) -> int:
    return int(o) ** int(n)


def enumerate_strategies(n: int, o: int, cap: int = STRATEGY_CAP) -> DeterministicStrategySet:
    count = strategy_count(n, o)
    if count > cap:
        raise TooManyStrategies(count, cap)
    table = np.array(list(itertools.product(range(o), repeat=n)), dtype=np.int64).reshape(count, n)
    table.setflags(write=False)
    return DeterministicStrategySet(n, o, table)


def assemblage_from_state(rho_ab, m: Measurements) -> Assemblage:
    """``sigma_{a|x} = Tr_A[(M_{a|x} (x) 1) rho_AB]`` for Alice's POVMs ``m``."""
    rho_ab = as_density(rho_ab)
    d_a = m.dim
    if rho_ab.shape[0] % d_a:
        raise DimensionError(f"state of size {rho_ab.shape[0]} is not divisible by Alice's dim {d_a}")
    d_b = rho_ab.shape[0] // d_a
    t = rho_ab.reshape(d_a, d_b, d_a, d_b)
    # sum_{i,k} M[k, i] rho[i, j, k, l] implements Tr_A[(M (x) 1) rho]
    members = np.einsum("xaki,ijkl->xajl", m.effects, t)
    return Assemblage(members)


def maximally_entangled_state(d: int) -> np.ndarray:
    v = np.eye(d).reshape(-1) / np.sqrt(d)
    return np.outer(v, v).astype(complex)


def isotropic_state(d: int, eta: float) -> np.ndarray:
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if d < 2:
        raise DimensionError(f"dimension must be at least 2, got {d}")
    return eta * maximally_entangled_state(d) + (1 - eta) * np.eye(d * d) / d**2


def isotropic_assemblage(d: int, eta: float, f) -> Assemblage:
    """Closed form ``eta/d |phi^a_x><phi^a_x| + (1 - eta) I/d^2``."""
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if f.dim != d:
        raise DimensionError(f"MUB family has dim {f.dim}, expected {d}")
    proj = np.einsum("xai,xaj->xaij", f.bases, f.bases.conj())
    members = eta * proj / d + (1 - eta) * np.eye(d) / d**2
    return Assemblage(members)


def maxent_assemblage(f) -> Assemblage:
    return isotropic_assemblage(f.dim, 1.0, f)


def maximally_mixed_reference(p, d: int) -> Assemblage:
    """The unsteerable assemblage ``p(a|x) I/d`` with the given outcome table ``p[x, a]``."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or np.any(p < -ZERO_PROB) or np.any(np.abs(p.sum(axis=1) - 1) > TRACE_TOL):
        raise InvalidAssemblage("p must be a table p[x, a] of conditional distributions")
    return Assemblage(np.clip(p, 0, None)[:, :, None, None] * np.eye(d) / d)


def lhs_assemblage(weights, states, strategies: DeterministicStrategySet) -> Assemblage:
    """Assemble ``sum_lambda D(a|x, lambda) w_lambda rho_lambda``."""
    w = np.asarray(weights, dtype=float)
    states = np.asarray(states, dtype=complex)
    blocks = w[:, None, None] * states
    members = np.einsum("kxa,kij->xaij", strategies.response(), blocks)
    return Assemblage(members)
