"""Hybrid gradient/Newton primal-dual optimization over agent networks.

A simulator and analysis library for decentralized composite minimization:
each agent holds a strongly convex quadratic loss, a shared nonsmooth
regularizer is handled through its proximal mapping by one selector agent,
and agents activate asynchronously, choosing per-agent between first-order
and Newton update directions.
"""

from .activation import ActivationRecord, ActivationScheme, expected_activation, induced_edge_activation, sample
from .analysis import (
    AnalysisTuple,
    ContractionMonitor,
    OracleSolution,
    RateCertificate,
    contraction_check,
    kkt_residuals,
    lyapunov,
    solve_centralized,
    star_tuple,
    theoretical_eta,
)
from .datasets import Dataset, parse_libsvm, partition_even, serialize_libsvm, synth_least_squares
from .objectives import (
    ConvexityConstants,
    LocalObjective,
    Regularizer,
    default_gamma,
    estimate_constants,
)
from .protocol import (
    AdmmReferenceState,
    HyperParams,
    NetworkState,
    UpdateMode,
    admm_reference_step,
    agent_step,
    edge_dual_step,
    error_term,
    local_lagrangian_gradient,
    regularizer_step,
    step_active,
    update_direction,
)
from .simulator import CostLedger, RunConfig, Trace, cost_model, run
from .topology import (
    IncidenceSet,
    SpectralConstants,
    Topology,
    build_incidence,
    complete_topology,
    generate_connected_gnp,
    load_edge_list,
    path_topology,
    save_edge_list,
    spectral_constants,
)

__version__ = "0.1.0"
