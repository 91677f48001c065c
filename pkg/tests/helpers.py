"""Random instance generators shared by the test modules."""

import numpy as np

from steerkit.assemblage import Measurements, assemblage_from_state, enumerate_strategies, lhs_assemblage


def rand_herm(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def rand_density(rng, d, rank=None):
    k = rank or d
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def rand_povm(rng, d, o):
    """Random o-outcome POVM on C^d via a normalized Gram construction."""
    raw = [g @ g.conj().T for g in (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(o))]
    total = sum(raw)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return [inv_sqrt @ e @ inv_sqrt for e in raw]


def rand_measurements(rng, d, n, o):
    effects = {}
    for x in range(n):
        for a, e in enumerate(rand_povm(rng, d, o)):
            effects[(a, x)] = e
    return Measurements(n, o, effects)


def rand_state_assemblage(rng, d, n, o, rank=1):
    rho = rand_density(rng, d * d, rank=rank)
    return assemblage_from_state(rho, rand_measurements(rng, d, n, o))


def rand_lhs_assemblage(rng, d, n, o):
    strat = enumerate_strategies(n, o)
    w = rng.dirichlet(np.ones(len(strat)))
    states = np.array([rand_density(rng, d) for _ in range(len(strat))])
    return lhs_assemblage(w, states, strat)


def rand_task_hamiltonians(rng, n, o, d, scale=1.0):
    return np.array([[rand_herm(rng, d, scale) for _ in range(o)] for _ in range(n)])
