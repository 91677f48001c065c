import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import steerkit.cooling as cooling
from helpers import rand_density, rand_herm, rand_lhs_assemblage, rand_state_assemblage, rand_task_hamiltonians
from steerkit.assemblage import Assemblage, isotropic_assemblage, maxent_assemblage, maximally_mixed_reference
from steerkit.cooling import (
    CoolingTask,
    Verdict,
    advantage_ratio,
    average_heat,
    certified_advantage,
    gibbs_state,
    heat_withdrawn,
    simulate_protocol,
    witness_hamiltonians,
)
from steerkit.mub import mub_family
from steerkit.steering import canonical_mub_witness, robustness_dual

H01 = np.diag([0.0, 1.0])
E = math.exp(-1)


def test_gibbs_examples():
    assert np.allclose(gibbs_state(np.zeros((3, 3)), 2.0), np.eye(3) / 3)
    assert np.allclose(gibbs_state(rand_herm(np.random.default_rng(0), 4), 0.0), np.eye(4) / 4)
    g = gibbs_state(H01, 1.0)
    assert np.allclose(g, np.diag([1 / (1 + E), E / (1 + E)]))
    assert g[0, 0].real == pytest.approx(0.73106, abs=1e-5)
    with pytest.raises(ValueError):
        gibbs_state(H01, -1)


def test_gibbs_no_overflow():
    g = gibbs_state(np.diag([-1e4, 0, 1e4]), 50.0)
    assert np.all(np.isfinite(g))
    assert np.allclose(g, np.diag([1, 0, 0]))


@given(st.integers(2, 7), st.floats(0, 20), st.integers(0, 2**32 - 1))
def test_gibbs_is_a_commuting_state(d, beta, seed):
    h = rand_herm(np.random.default_rng(seed), d)
    g = gibbs_state(h, beta)
    assert np.trace(g).real == pytest.approx(1, abs=1e-12)
    assert np.linalg.eigvalsh(g).min() >= -1e-12
    assert np.abs(g @ h - h @ g).max() <= 1e-9


def test_gibbs_energy_decreases_with_beta():
    rng = np.random.default_rng(1)
    betas = np.linspace(0, 10, 21)
    for k in range(100):
        h = rand_herm(rng, 2 + k % 6)
        energies = [np.trace(h @ gibbs_state(h, b)).real for b in betas]
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))


def test_heat_withdrawn_examples():
    assert heat_withdrawn(gibbs_state(H01, 1.0), H01, 1.0) == pytest.approx(0, abs=1e-15)
    assert heat_withdrawn(np.diag([0, 1]), H01, 1.0) == pytest.approx(1 - E / (1 + E))
    assert heat_withdrawn(np.diag([0, 1]), H01, 1.0) == pytest.approx(0.73106, abs=1e-5)
    assert heat_withdrawn(np.diag([1, 0]), H01, 1.0) == pytest.approx(-0.26894, abs=1e-5)


def test_average_heat_trivial_cases():
    a = isotropic_assemblage(2, 0.7, mub_family(2))
    assert average_heat(a, CoolingTask(np.zeros((3, 2, 2, 2)), 1.0)) == 0
    rho = rand_density(np.random.default_rng(2), 3)
    single = Assemblage(rho[None, None])
    h = rand_herm(np.random.default_rng(3), 3)
    assert average_heat(single, CoolingTask(h[None, None], 0.4)) == pytest.approx(heat_withdrawn(rho, h, 0.4))


def _naive_average_heat(a, task):
    total = 0.0
    for x in range(a.settings):
        for b in range(a.outcomes):
            rho = a.member(b, x)
            p = np.trace(rho).real
            H = task.hamiltonian(b, x)
            w, v = np.linalg.eigh(H)
            boltz = np.exp(-task.beta * w)
            gamma_hat = (v * (boltz / boltz.sum())) @ v.conj().T
            total += np.trace(H @ rho).real - p * np.trace(H @ gamma_hat).real
    return total / a.settings


def test_average_heat_against_naive_loop():
    f = mub_family(2)
    a = maxent_assemblage(f)
    task = witness_hamiltonians(canonical_mub_witness(f), 1.0, 1.0)
    assert average_heat(a, task) == pytest.approx(_naive_average_heat(a, task), abs=1e-14)
    rng = np.random.default_rng(5)
    b = rand_state_assemblage(rng, 3, 2, 3)
    task = CoolingTask(rand_task_hamiltonians(rng, 2, 3, 3), 2.0)
    assert average_heat(b, task) == pytest.approx(_naive_average_heat(b, task), abs=1e-13)


def test_average_heat_linear_under_mixing():
    rng = np.random.default_rng(6)
    a = rand_lhs_assemblage(rng, 2, 2, 2)
    ref = maximally_mixed_reference(a.probabilities(), 2)
    task = CoolingTask(rand_task_hamiltonians(rng, 2, 2, 2), 1.0)
    t = 0.35
    mix = Assemblage(t * a.members + (1 - t) * ref.members)
    assert average_heat(mix, task) == pytest.approx(t * average_heat(a, task) + (1 - t) * average_heat(ref, task))


def test_witness_hamiltonians():
    F = canonical_mub_witness(mub_family(2))
    task = witness_hamiltonians(F, 1.0, 1.0)
    for ev in np.linalg.eigvalsh(task.hamiltonians).reshape(-1, 2):
        assert ev == pytest.approx([0, 0.41421], abs=1e-5)
    assert np.allclose(witness_hamiltonians(F, 2.0, 1.0).hamiltonians, 2 * task.hamiltonians)
    with pytest.raises(ValueError):
        witness_hamiltonians(F, 0.0, 1.0)
    with pytest.raises(ValueError):
        witness_hamiltonians(F, -1.0, 1.0)


def test_task_json_round_trip():
    rng = np.random.default_rng(0)
    task = CoolingTask(rand_task_hamiltonians(rng, 3, 2, 2), 0.25)
    back = CoolingTask.from_json(task.to_json())
    assert np.array_equal(back.hamiltonians, task.hamiltonians) and back.beta == 0.25


# ---------------------------------------------------------------- advantage


def test_maxent_d2_advantage():
    rep = certified_advantage(maxent_assemblage(mub_family(2)), 1.0, 1.0)
    assert rep.verdict == Verdict.ADVANTAGE
    assert rep.xi >= 1.24264
    assert rep.xi >= rep.one_plus_R - 1e-6
    assert rep.S <= 1 + 1e-8 and rep.z <= rep.S + 1e-8


def test_maxent_d3_advantage():
    rep = certified_advantage(maxent_assemblage(mub_family(3)), 1.0, 1.0)
    assert rep.xi >= (3 + 1) / (math.sqrt(3) + 1)
    assert (3 + 1) / (math.sqrt(3) + 1) == pytest.approx(1.46410, abs=1e-5)


def test_unsteerable_has_no_advantage():
    rep = certified_advantage(isotropic_assemblage(2, 0.5, mub_family(2)), 1.0, 1.0)
    assert rep.verdict in (Verdict.NONE, Verdict.DEGENERATE)
    assert rep.xi is None or rep.xi <= 1 + 1e-6


def test_report_json():
    data = certified_advantage(maxent_assemblage(mub_family(2)), 1.0, 1.0).to_json()
    assert data["schema_version"] == 1
    assert set(data) >= {"q_quantum", "q_classical_max", "xi", "one_plus_R", "z", "S", "epsilon", "verdict"}


@pytest.mark.parametrize("d,eta", [(2, 0.7), (2, 0.9), (3, 0.5), (3, 0.8)])
def test_theorem_grid_isotropic(d, eta):
    a = isotropic_assemblage(d, eta, mub_family(d))
    r = robustness_dual(a)
    assert r.R > 1e-6
    ref = maximally_mixed_reference(a.probabilities(), d)
    for beta in (0.1, 1, 10):
        zs = []
        for eps in (0.1, 1, 10):
            rep = certified_advantage(a, eps, beta, robustness=r)
            assert rep.xi is not None and rep.xi >= rep.one_plus_R - 1e-6
            assert rep.S <= 1 + 1e-8
            assert rep.z <= rep.S + 1e-8
            task = witness_hamiltonians(r.witnesses, eps, beta)
            assert rep.q_classical_max >= average_heat(ref, task) - 1e-8
            zs.append(rep.z)
        assert all(b <= a_ + 1e-10 for a_, b in zip(zs, zs[1:]))


@pytest.mark.parametrize("seed", range(6))
def test_unsteerable_ratio_on_random_tasks(seed):
    rng = np.random.default_rng(seed)
    a = rand_lhs_assemblage(rng, 2, 3, 2)
    task = CoolingTask(rand_task_hamiltonians(rng, 3, 2, 2), float(rng.uniform(0.1, 5)))
    ratio = advantage_ratio(a, task)
    assert ratio.xi is None or ratio.xi <= 1 + 1e-6


# ---------------------------------------------------------------- Monte Carlo


def test_uniform_stream_independent_of_chunking():
    whole = cooling._uniform_pairs(11, 0, 1000)
    parts = np.concatenate([cooling._uniform_pairs(11, s, 250) for s in range(0, 1000, 250)])
    assert np.array_equal(whole, parts)
    assert whole.min() >= 0 and whole.max() < 1


def test_simulation_chunk_size_does_not_matter(monkeypatch):
    rng = np.random.default_rng(3)
    a = rand_state_assemblage(rng, 2, 3, 2)
    task = CoolingTask(rand_task_hamiltonians(rng, 3, 2, 2), 1.0)
    r1 = simulate_protocol(a, task, 5001, seed=4)
    monkeypatch.setattr(cooling, "MC_CHUNK", 64)
    r2 = simulate_protocol(a, task, 5001, seed=4)
    assert r1 == r2


def test_simulation_deterministic_branch():
    rho = rand_density(np.random.default_rng(0), 2)
    a = Assemblage(rho[None, None])
    task = CoolingTask(H01[None, None], 1.0)
    r = simulate_protocol(a, task, 1000, seed=1)
    assert r.std_error == 0
    assert r.mean == pytest.approx(average_heat(a, task), abs=1e-15)


def test_simulation_reproducible_and_seed_sensitive():
    rng = np.random.default_rng(8)
    a = rand_state_assemblage(rng, 2, 2, 2)
    task = CoolingTask(rand_task_hamiltonians(rng, 2, 2, 2), 1.0)
    assert simulate_protocol(a, task, 10**4, 5) == simulate_protocol(a, task, 10**4, 5)
    assert simulate_protocol(a, task, 10**4, 5).mean != simulate_protocol(a, task, 10**4, 6).mean
    with pytest.raises(ValueError):
        simulate_protocol(a, task, 0, 5)


def test_simulation_converges_maxent_witness():
    f = mub_family(2)
    a = maxent_assemblage(f)
    task = witness_hamiltonians(robustness_dual(a).witnesses, 1.0, 1.0)
    r = simulate_protocol(a, task, 10**6, seed=2)
    assert abs(r.mean - average_heat(a, task)) <= 5 * r.std_error + 1e-12
