"""Truncated-Fock Lindblad engine for the dispersive and Jaynes-Cummings models."""

from ._kernels import BACKEND
from .metrics import (
    ConvergenceCheck,
    JcComparison,
    cavity_model,
    dispersive_model,
    dispersive_reference,
    dump_state,
    embed_ground,
    jc_model,
    jc_vs_dispersive_error,
    load_state,
    photon_numbers,
    qubit_excited_population,
    reduced_cavity,
    reduced_qubit,
    smallest_converged_n_max,
    state_fidelity,
    truncation_convergence,
)
from .operators import (
    HilbertConfig,
    ModeOperators,
    basis_projector,
    build_h_dispersive,
    build_h_jc,
    build_h_jc_uncoupled,
    collapse_ops,
    identity,
    jc_coupling,
    ladder,
    mode_operators,
    tensor,
)
from .solver import (
    LindbladModel,
    NoJumpInverse,
    SteadyStateResult,
    liouvillian,
    physical_state,
    steady_state,
    trace_row,
    unvec,
    validate_density_matrix,
    vec,
)
