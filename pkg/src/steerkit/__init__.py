"""Steering robustness and steering-assisted cooling advantage."""

from steerkit.assemblage import (
    Assemblage,
    Measurements,
    assemblage_from_state,
    enumerate_strategies,
    isotropic_assemblage,
    isotropic_state,
    maximally_mixed_reference,
)
from steerkit.bounds import (
    fig3_surface,
    isotropic_robustness_lb,
    maxent_robustness_lb,
    thresholds,
    xi_lb_isotropic,
)
from steerkit.cooling import (
    CoolingTask,
    average_heat,
    certified_advantage,
    gibbs_state,
    heat_withdrawn,
    simulate_protocol,
    witness_hamiltonians,
)
from steerkit.mub import MubFamily, conjugate_projectors, mub_family, verify_unbiased
from steerkit.steering import (
    canonical_mub_witness,
    classical_heat_max,
    is_steerable,
    robustness_dual,
    robustness_primal,
    verify_witness_feasibility,
)

__version__ = "0.1.0"
