"""Simulate cut-and-choose quantum state verification and certify its efficiency limits."""
from .algebra import SpectralDecomposition, eigvalsh, frobenius_inner, hermitian_eig, kron, psd_sqrt, trace_norm
from .attacks import (
    AttackConstruction,
    depolarized_attack_state,
    dishonest_distinguisher,
    honest_distinguisher,
    iid_attack,
    measurement_attack_construction,
    mixed_attack_state,
    pure_attack_state,
    simulator_channel,
)
from .channels import (
    AlgebraObject,
    BlockState,
    Channel,
    apply,
    compose,
    density,
    dsum,
    identity,
    kraus_channel,
    prepare,
    pure,
    tensor,
    trace_channel,
)
from .combs import Comb, concat, fill, nest, resource_metric
from .errors import QSVError
from .metrics import (
    diamond_lower_estimate,
    fidelity,
    fvdg_bounds,
    helstrom,
    multicopy_bounds,
    pure_multicopy_distance,
    trace_distance_half,
)
from .protocols import AcceptanceTest, Protocol, RoundDistribution, TargetSpec, client_comb, game_output
from .verifier import (
    VerificationReport,
    concavity_check,
    emit,
    eval_eps_dishonest,
    eval_eps_honest,
    run_sweep,
    theorem_bound,
)

__version__ = "0.1.0"
