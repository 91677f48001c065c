"""Heat withdrawal by quenching, witness Hamiltonians and the certified advantage ratio.

Energies use k_B = 1. A branch ``(a, x)`` prepared in the normalized state
``rho`` and quenched to ``H`` withdraws ``Tr(H rho) - Tr(H gamma)`` from the
bath, where ``gamma`` is the Gibbs state of ``H``. Positive values mean heat
removed from the bath.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from steerkit.assemblage import ZERO_PROB, Assemblage
from steerkit.errors import DimensionError
from steerkit.linop import as_hermitian, hermitian_part, matrix_from_json, matrix_to_json
from steerkit.steering import STEERING_TOL, classical_heat_max, robustness_dual

ADVANTAGE_SLACK = 1e-6
# denominators below this fraction of the task's energy scale are treated as 0/0
DENOMINATOR_REL = 1e-7
DENOMINATOR_ABS = 1e-12
MC_CHUNK = 1 << 16  # even, so chunks start on whole Philox blocks


class Verdict(str, enum.Enum):
    ADVANTAGE = "AdvantageCertified"
    NONE = "NoAdvantage"
    DEGENERATE = "DenominatorNonpositive"


@dataclass
class CoolingTask:
    """Quench Hamiltonians ``hamiltonians[x, a]`` and inverse temperature ``beta``."""

    hamiltonians: np.ndarray
    beta: float

    def __post_init__(self):
        h = np.asarray(self.hamiltonians, dtype=complex)
        if h.ndim != 4 or h.shape[-1] != h.shape[-2]:
            raise DimensionError(f"hamiltonians must have shape (n, o, d, d), got {h.shape}")
        for m in h.reshape(-1, *h.shape[-2:]):
            as_hermitian(m)
        self.hamiltonians = hermitian_part(h)
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be finite and non-negative, got {self.beta}")

    @classmethod
    def from_map(cls, mapping: dict, beta: float, settings: int, outcomes: int):
        d = next(iter(mapping.values())).shape[0]
        h = np.zeros((settings, outcomes, d, d), dtype=complex)
        for (a, x), m in mapping.items():
            h[x, a] = m
        return cls(h, beta)

    @property
    def settings(self) -> int:
        return self.hamiltonians.shape[0]

    @property
    def outcomes(self) -> int:
        return self.hamiltonians.shape[1]

    @property
    def dim(self) -> int:
        return self.hamiltonians.shape[2]

    def stack(self) -> np.ndarray:
        return self.hamiltonians

    def hamiltonian(self, a: int, x: int) -> np.ndarray:
        return self.hamiltonians[x, a]

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "beta": self.beta,
            "hamiltonians": {
                f"{a}|{x}": matrix_to_json(self.hamiltonians[x, a])
                for x in range(self.settings)
                for a in range(self.outcomes)
            },
        }

    @classmethod
    def from_json(cls, data: dict) -> "CoolingTask":
        mapping = {}
        for key, m in data["hamiltonians"].items():
            a, x = (int(t) for t in key.split("|"))
            mapping[(a, x)] = matrix_from_json(m)
        n = 1 + max(x for _, x in mapping)
        o = 1 + max(a for a, _ in mapping)
        return cls.from_map(mapping, float(data["beta"]), n, o)


def gibbs_state(h, beta: float) -> np.ndarray:
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    w, v = np.linalg.eigh(hermitian_part(np.asarray(h, dtype=complex)))
    # shift by the ground energy so the largest weight is exactly 1
    weights = np.exp(-beta * (w - w[..., :1]))
    weights /= weights.sum(axis=-1, keepdims=True)
    return (v * weights[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def heat_withdrawn(rho, h, beta: float) -> float:
    rho = np.asarray(rho, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if rho.shape != h.shape:
        raise DimensionError(f"state {rho.shape} and Hamiltonian {h.shape} differ in shape")
    gamma = gibbs_state(h, beta)
    return float(np.trace(h @ rho).real - np.trace(h @ gamma).real)


def _check_shapes(a: Assemblage, task: CoolingTask):
    if task.hamiltonians.shape != a.members.shape:
        raise DimensionError(
            f"task shape {task.hamiltonians.shape} does not match assemblage {a.members.shape}"
        )


def branch_heats(a: Assemblage, task: CoolingTask) -> np.ndarray:
    """Per-branch heat ``Tr(H rho_hat) - Tr(H gamma_hat)``; zero on empty branches."""
    _check_shapes(a, task)
    H = task.hamiltonians
    rho_hat = a.normalized()
    gam = gibbs_state(H, task.beta)
    out = np.einsum("xaij,xaji->xa", H, rho_hat).real - np.einsum("xaij,xaji->xa", H, gam).real
    out[a.probabilities() <= ZERO_PROB] = 0.0
    return out


def average_heat(a: Assemblage, task: CoolingTask) -> float:
    """``(1/n) sum_{a,x} [Tr(H rho_{a|x}) - p(a|x) Tr(H gamma_hat_{a|x})]``."""
    _check_shapes(a, task)
    H = task.hamiltonians
    gam = gibbs_state(H, task.beta)
    p = a.probabilities()
    first = np.einsum("xaij,xaji->", H, a.members).real
    second = np.einsum("xa,xaij,xaji->", p, H, gam).real
    return float(first - second) / a.settings


def witness_hamiltonians(F, epsilon: float, beta: float) -> CoolingTask:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return CoolingTask(epsilon * np.asarray(F, dtype=complex), beta)


@dataclass
class AdvantageReport:
    q_quantum: float
    q_classical_max: float
    xi: float | None
    one_plus_R: float
    z: float
    S: float
    epsilon: float
    beta: float
    verdict: Verdict
    certified: bool = True

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "q_quantum": self.q_quantum,
            "q_classical_max": self.q_classical_max,
            "xi": self.xi,
            "one_plus_R": self.one_plus_R,
            "z": self.z,
            "S": self.S,
            "epsilon": self.epsilon,
            "beta": self.beta,
            "verdict": self.verdict.value,
            "certified": self.certified,
        }


@dataclass
class Ratio:
    q_quantum: float
    q_classical_max: float
    xi: float | None
    argmax: Assemblage
    certified: bool


def advantage_ratio(a: Assemblage, task: CoolingTask, tol: float = STEERING_TOL) -> Ratio:
    """``xi`` for a fixed task, using a certified upper bound on the unsteerable maximum.

    Dividing by an upper bound makes ``xi`` a lower bound on the exact ratio.
    ``xi`` is ``None`` when the denominator is numerically indistinguishable
    from zero.
    """
    qq = average_heat(a, task)
    hm = classical_heat_max(a, task, tol=tol)
    qc = hm.value
    scale = float(np.abs(np.linalg.eigvalsh(task.hamiltonians)).max())
    xi = qq / qc if qc > max(DENOMINATOR_ABS, DENOMINATOR_REL * scale) else None
    return Ratio(qq, qc, xi, hm.argmax, hm.certified)


def certified_advantage(a: Assemblage, epsilon: float, beta: float, tol: float = STEERING_TOL, robustness=None) -> AdvantageReport:
    """Compare the cooling ratio on witness Hamiltonians against ``1 + R``.

    ``robustness`` may carry a precomputed ``robustness_dual(a)`` result so
    that parameter sweeps reuse one witness.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    res = robustness if robustness is not None else robustness_dual(a, tol=tol)
    F = res.witnesses
    task = witness_hamiltonians(F, epsilon, beta)
    ratio = advantage_ratio(a, task, tol=tol)
    p = a.probabilities()
    gam = gibbs_state(task.hamiltonians, beta)
    z = float(np.einsum("xa,xaij,xaji->", p, F, gam).real)
    S = float(np.einsum("xaij,xaji->", F, ratio.argmax.members).real)
    one_plus_r = 1 + res.R
    if ratio.xi is None:
        verdict = Verdict.DEGENERATE
    elif ratio.xi > 1 + ADVANTAGE_SLACK and ratio.xi >= one_plus_r - ADVANTAGE_SLACK:
        verdict = Verdict.ADVANTAGE
    else:
        verdict = Verdict.NONE
    return AdvantageReport(
        q_quantum=ratio.q_quantum,
        q_classical_max=ratio.q_classical_max,
        xi=ratio.xi,
        one_plus_R=one_plus_r,
        z=z,
        S=S,
        epsilon=epsilon,
        beta=beta,
        verdict=verdict,
        certified=res.certified and ratio.certified,
    )


# ---------------------------------------------------------------------------
# Monte Carlo


def _uniform_pairs(seed: int, start: int, count: int) -> np.ndarray:
    """Two uniforms per shot for shots ``start .. start+count-1``.

    Shot ``i`` consumes raw Philox outputs ``2i`` and ``2i+1`` of the stream
    keyed by ``seed``, so any chunking reproduces the same draws.
    """
    bg = np.random.Philox(key=seed)
    bg.advance(start // 2)
    raw = bg.random_raw(2 * count)
    return ((raw >> np.uint64(11)).astype(np.float64) * 2.0**-53).reshape(count, 2)


@dataclass
class SimulationResult:
    shots: int
    mean: float
    std_error: float
    seed: int

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "shots": self.shots,
            "mean": self.mean,
            "std_error": self.std_error,
            "seed": self.seed,
        }


def simulate_protocol(a: Assemblage, task: CoolingTask, shots: int, seed: int = 0) -> SimulationResult:
    """Sample settings uniformly, outcomes from ``p(a|x)``, and average the branch heat."""
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    heat = branch_heats(a, task)
    p = a.probabilities()
    cdf = np.cumsum(p / p.sum(axis=1, keepdims=True), axis=1)
    cdf[:, -1] = 1.0
    n, o = a.settings, a.outcomes
    # heat takes one value per branch, so branch counts give exact moments
    counts = np.zeros(n * o, dtype=np.int64)
    for start in range(0, shots, MC_CHUNK):
        count = min(MC_CHUNK, shots - start)
        u = _uniform_pairs(seed, start, count)
        x = np.minimum((u[:, 0] * n).astype(np.int64), n - 1)
        b = np.minimum((u[:, 1][:, None] >= cdf[x]).sum(axis=1), o - 1)
        counts += np.bincount(x * o + b, minlength=n * o)
    h = heat.reshape(-1)
    mean = float(counts @ h) / shots
    var = float(counts @ (h - mean) ** 2) / max(shots - 1, 1)
    return SimulationResult(shots, mean, math.sqrt(var / shots), seed)
