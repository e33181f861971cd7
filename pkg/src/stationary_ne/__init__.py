"""Exact verification of stationary equilibria in perfect-information
stochastic games, and compilers from quadratic systems to such games."""

from __future__ import annotations

from .derandomize import (
    ChanceGadget,
    ChanceWeights,
    build_chance_gadget,
    build_deterministic_full_game,
    build_partition_game,
    chance_weights,
    derandomize_partition,
    eliminate_chance_nodes,
    equal_partition,
    gadget_game,
    partition_witness,
    rewards_to_cycles,
)
from .equilibrium import (
    BestResponse,
    GridBudgetError,
    UnsupportedMDPError,
    VerificationReport,
    best_response,
    enumerate_positional,
    grid_search,
    regret_vector,
    verify_ne,
    verify_spe,
)
from .etr import (
    Formula,
    MissingVariableError,
    canonical_assignment,
    check_assignment,
    encode_stationary_ne,
    to_raw,
    to_smtlib,
)
from .evaluate import (
    UnsupportedStructureError,
    binary_decomposition,
    expected_payoffs,
    mean_payoff,
    node_payoffs,
    normalize_rewards_to_binary,
    objective_affine_map,
    objective_payoffs,
    reach_probabilities,
    simulate_payoffs,
    to_objective_form,
)
from .game import (
    CycleError,
    Game,
    GameParseError,
    IncompleteProfileError,
    InvalidGameError,
    Node,
    PayoffDemand,
    StationaryProfile,
    ValidationReport,
    Violation,
    check_profile,
    find_cycle,
    is_tree,
    parse_game,
    parse_profile,
    pull_back_profile,
    serialize_game,
    serialize_profile,
    subgame,
    topological_order,
    unfold,
    unfold_to_tree,
    validate,
)
from .polynomials import PolySystem, Quadratic, SimplexPoint, homogenize, parse_system, scale_coefficients, serialize_system
from .reductions import (
    ReductionOutput,
    build_exists_ne_game,
    build_full_game,
    build_mul_game,
    build_poly_game,
    build_sure_game,
    build_var_game,
    demand_vector,
    mul_game,
    poly_game,
    profile_to_witness,
    var_game,
    witness_to_profile,
)

__version__ = "0.1.0"
