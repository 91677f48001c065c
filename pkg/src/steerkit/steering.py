"""Steering robustness, unsteerable heat maximization and witness checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from steerkit import conic
from steerkit.assemblage import (
    STRATEGY_CAP,
    Assemblage,
    DeterministicStrategySet,
    enumerate_strategies,
    strategy_count,
)
from steerkit.errors import DimensionError, SolverError, TooManyStrategies
from steerkit.linop import hermitian_part, matrix_to_json

# The certificate contract is 1e-6; solving tighter leaves headroom for the
# witness repair below and for the 1e-6 primal/dual agreement checks.
STEERING_TOL = 1e-9
ZERO_R = 1e-7
STEERABLE_R = 1e-6
FEASIBILITY_TOL = 1e-9
CERT_TOL = 1e-6
# below this Schur size the primal program is solved through its own
# Lagrangian dual, so the two robustness routines do not share a core form
INDEPENDENT_ROUTE_LIMIT = 3000


@dataclass
class SteeringResult:
    R: float
    witnesses: np.ndarray  # F[x, a]
    lhs_model: np.ndarray  # sigma[lambda]
    strategies: DeterministicStrategySet
    gap: float
    certified: bool
    objective: float = math.nan
    dual_objective: float = math.nan
    failures: list = field(default_factory=list)

    @property
    def steerable(self) -> bool:
        return self.R > STEERABLE_R

    def witness(self, a: int, x: int) -> np.ndarray:
        return self.witnesses[x, a]

    def to_json(self, include_model: bool = False) -> dict:
        n, o = self.witnesses.shape[:2]
        out = {
            "schema_version": 1,
            "R": self.R,
            "gap": self.gap,
            "certified": self.certified,
            "steerable": self.steerable,
            "witnesses": {
                f"{a}|{x}": matrix_to_json(self.witnesses[x, a]) for x in range(n) for a in range(o)
            },
        }
        if include_model:
            out["lhs_model"] = [matrix_to_json(s) for s in self.lhs_model]
        return out


def _psd_project(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(m))
    return (v * np.maximum(w, 0)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def strategy_sums(F: np.ndarray, table: np.ndarray) -> np.ndarray:
    """``sum_x F[x, lambda(x)]`` for every row of ``table``."""
    n = F.shape[0]
    return sum(F[x, table[:, x]] for x in range(n))


def _max_strategy_eig(F, table, chunk=1 << 16):
    best, arg = -math.inf, -1
    for s in range(0, len(table), chunk):
        ev = np.linalg.eigvalsh(strategy_sums(F, table[s : s + chunk]))
        norms = np.abs(ev).max(axis=1)
        k = int(np.argmax(norms))
        if norms[k] > best:
            best, arg = float(norms[k]), s + k
    return best, arg


def _strategies_for(a: Assemblage) -> DeterministicStrategySet:
    return enumerate_strategies(a.settings, a.outcomes)


def _dual_problem(a: Assemblage, strat: DeterministicStrategySet) -> conic.SdpProblem:
    p = conic.SdpProblem("max")
    d = a.dim
    for x in range(a.settings):
        for b in range(a.outcomes):
            p.add_block((b, x), d, a.members[x, b])
    eye = np.eye(d)
    for lam, row in enumerate(strat.table):
        p.add_inequality({(int(row[x]), x): 1.0 for x in range(a.settings)}, eye, ("lambda", lam))
    return p


def _primal_problem(a: Assemblage, strat: DeterministicStrategySet) -> conic.SdpProblem:
    p = conic.SdpProblem("min")
    d = a.dim
    eye = np.eye(d)
    for lam in range(len(strat)):
        p.add_block(lam, d, eye)
    owners = {}
    for lam, row in enumerate(strat.table):
        for x, b in enumerate(row):
            owners.setdefault((int(b), x), []).append(lam)
    for x in range(a.settings):
        for b in range(a.outcomes):
            p.add_inequality({lam: -1.0 for lam in owners[(b, x)]}, -a.members[x, b], (b, x))
    return p


def _finish(a, strat, F, sigma, sol, report, tol_cert) -> SteeringResult:
    F = _psd_project(F)
    worst, _ = _max_strategy_eig(F, strat.table)
    if worst > 1:
        F = F / worst
    sigma = _psd_project(sigma)
    lower = float(np.einsum("xaij,xaji->", F, a.members).real) - 1
    upper = float(np.trace(sigma, axis1=1, axis2=2).real.sum()) - 1
    gap = abs(upper - lower) / (1 + abs(upper + 1) + abs(lower + 1))
    R = lower
    if abs(R) <= ZERO_R:
        R = 0.0
    failures = list(report.failures)
    certified = sol.optimal and report.passed and gap <= tol_cert
    if not sol.optimal:
        failures.append(f"solver status {sol.status.value}")
    if gap > tol_cert:
        failures.append(f"repaired certificate gap {gap:.3e}")
    return SteeringResult(
        R=R,
        witnesses=F,
        lhs_model=sigma,
        strategies=strat,
        gap=gap,
        certified=certified,
        objective=lower,
        dual_objective=upper,
        failures=failures,
    )


def robustness_dual(a: Assemblage, tol: float = STEERING_TOL, strict: bool = True) -> SteeringResult:
    """Robustness from the witness program ``max sum Tr(F rho) - 1``.

    The returned witnesses are projected onto the PSD cone and rescaled so
    every strategy sum is exactly below the identity; ``R`` is then a valid
    lower bound. The multipliers of the strategy constraints give the LHS
    model, whose total trace bounds ``R`` from above.
    """
    strat = _strategies_for(a)
    p = _dual_problem(a, strat)
    sol = conic.solve(p, tol=tol)
    if strict and sol.status in (conic.Status.INFEASIBLE, conic.Status.UNBOUNDED):
        raise SolverError(f"robustness program reported {sol.status.value}", sol)
    n, o, d = a.settings, a.outcomes, a.dim
    F = np.array([[sol.primal[(b, x)] for b in range(o)] for x in range(n)])
    sigma = np.array(sol.ineq_duals)
    report = conic.check_certificates(p, sol, tol=CERT_TOL)
    res = _finish(a, strat, F, sigma, sol, report, CERT_TOL)
    if strict and not sol.optimal:
        raise SolverError(f"robustness program ended with {sol.status.value}", res)
    return res


def robustness_primal(a: Assemblage, tol: float = STEERING_TOL, strict: bool = True) -> SteeringResult:
    """Robustness from the LHS-model program ``min sum_l Tr(sigma_l) - 1``."""
    strat = _strategies_for(a)
    p = _primal_problem(a, strat)
    route = "dual" if len(strat) * a.dim**2 <= INDEPENDENT_ROUTE_LIMIT else "auto"
    sol = conic.solve(p, tol=tol, route=route)
    if strict and sol.status in (conic.Status.INFEASIBLE, conic.Status.UNBOUNDED):
        raise SolverError(f"robustness program reported {sol.status.value}", sol)
    n, o = a.settings, a.outcomes
    sigma = np.array([sol.primal[lam] for lam in range(len(strat))])
    F = np.array(sol.ineq_duals).reshape(n, o, a.dim, a.dim)
    report = conic.check_certificates(p, sol, tol=CERT_TOL)
    res = _finish(a, strat, F, sigma, sol, report, CERT_TOL)
    # the primal program reports the upper bound; keep both visible
    R = res.dual_objective
    res.R = 0.0 if abs(R) <= ZERO_R else R
    if strict and not sol.optimal:
        raise SolverError(f"robustness program ended with {sol.status.value}", res)
    return res


def is_steerable(a: Assemblage, tol: float = STEERING_TOL) -> bool:
    return robustness_dual(a, tol=tol).R > STEERABLE_R


# ---------------------------------------------------------------------------


@dataclass
class HeatMax:
    """``value`` is a certified upper bound; ``attained`` is the heat of ``argmax``."""

    value: float
    attained: float
    argmax: Assemblage
    gibbs_constant: float
    certified: bool


def classical_heat_max(a: Assemblage, task, tol: float = STEERING_TOL) -> HeatMax:
    """Largest averaged heat over unsteerable assemblages with the marginals of ``a``.

    Traces of the LHS branches are pinned to ``p(a|x)``. One trace row per
    setting beyond the first is implied by the others and dropped, since
    every setting's probabilities sum to the same total.
    """
    from steerkit.cooling import gibbs_state

    n, o, d = a.settings, a.outcomes, a.dim
    H = task.stack()
    if H.shape != a.members.shape:
        raise DimensionError(f"task shape {H.shape} does not match assemblage {a.members.shape}")
    strat = _strategies_for(a)
    probs = a.probabilities()
    p = conic.SdpProblem("max")
    K = strategy_sums(H, strat.table)
    for lam in range(len(strat)):
        p.add_block(lam, d, K[lam])
    eye = np.eye(d)
    owners = {}
    for lam, row in enumerate(strat.table):
        for x, b in enumerate(row):
            owners.setdefault((int(b), x), []).append(lam)
    rows = []
    for x in range(n):
        for b in range(o if x == 0 else o - 1):
            p.add_equality({lam: eye for lam in owners[(b, x)]}, probs[x, b], (b, x))
            rows.append((b, x))
    sol = conic.solve(p, tol=tol)
    if not sol.optimal:
        raise SolverError(f"heat program ended with {sol.status.value}", sol)
    report = conic.check_certificates(p, sol, tol=CERT_TOL)
    sigma = _psd_project(np.array([sol.primal[lam] for lam in range(len(strat))]))
    D = strat.response()
    members = np.einsum("lxa,lij->xaij", D, sigma)
    arg = Assemblage(members, validate=False)
    raw = float(np.einsum("xaij,xaji->", H, members).real)
    # Dual side: multipliers mu must satisfy sum_{rows in lambda} mu >= lambda_max(K_lambda).
    # Every strategy meets exactly one x = 0 row, so shifting those rows by the
    # worst deficit makes mu exactly feasible and the bound rigorous.
    mu = np.zeros((n, o))
    for (b, x), m in zip(rows, sol.eq_duals):
        mu[x, b] = m
    cover = sum(mu[x, strat.table[:, x]] for x in range(n))
    deficit = max(0.0, float((np.linalg.eigvalsh(K)[:, -1] - cover).max()))
    upper = float(sum(probs[x, b] * mu[x, b] for b, x in rows)) + deficit * float(probs[0].sum())
    gibbs = gibbs_state(H, task.beta)
    const = float(np.einsum("xa,xaij,xaji->", probs, H, gibbs).real)
    return HeatMax((upper - const) / n, (raw - const) / n, arg, const, report.passed)


def canonical_mub_witness(f) -> np.ndarray:
    """``F[x, a] = |phi^a_x><phi^a_x| / (1 + sqrt(d))`` for the family ``f``."""
    proj = np.einsum("xai,xaj->xaij", f.bases, f.bases.conj())
    return proj / (1 + math.sqrt(f.dim))


@dataclass
class FeasibilityReport:
    passed: bool
    max_norm: float
    worst_strategy: tuple | None
    exhaustive: bool
    checked: int


def verify_witness_feasibility(
    F: np.ndarray,
    strategies: DeterministicStrategySet | None = None,
    *,
    samples: int | None = None,
    seed: int = 0,
    cap: int = STRATEGY_CAP,
    tol: float = FEASIBILITY_TOL,
) -> FeasibilityReport:
    """Check ``|| sum_x F[x, lambda(x)] ||_op <= 1`` for every strategy.

    Without an explicit strategy set the check is exhaustive when ``o^n`` is
    under ``cap``. Above it, a ``samples`` count enables uniform random
    strategies instead; such reports are flagged as non-exhaustive.
    """
    F = np.asarray(F, dtype=complex)
    n, o = F.shape[:2]
    if strategies is not None:
        table, exhaustive = strategies.table, True
    else:
        count = strategy_count(n, o)
        if count <= cap:
            table, exhaustive = enumerate_strategies(n, o, cap).table, True
        elif samples:
            rng = np.random.default_rng(seed)
            table, exhaustive = rng.integers(0, o, size=(samples, n)), False
        else:
            raise TooManyStrategies(count, cap)
    best, arg = _max_strategy_eig(F, table)
    return FeasibilityReport(
        passed=best <= 1 + tol,
        max_norm=best,
        worst_strategy=tuple(int(v) for v in table[arg]) if arg >= 0 else None,
        exhaustive=exhaustive,
        checked=len(table),
    )
