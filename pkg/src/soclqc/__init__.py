"""Second-order cone toolkit for robust quadratic constraints and control.

Core pieces:

* :mod:`soclqc.model` / :mod:`soclqc.solver` -- conic programs and a dense
  primal-dual interior-point SOCP solver.
* :mod:`soclqc.slemma` -- simultaneous diagonalization and the simplified
  S-lemma constraint generator, with the classical matrix inequality kept as
  a numeric verification oracle.
* :mod:`soclqc.lqc` -- finite-horizon robust / regret-optimal /
  distributionally robust linear-quadratic control as SOCPs.
* :mod:`soclqc.mpc` -- MPC with an online-reconfigurable ellipsoidal
  terminal set.
* :mod:`soclqc.oracle` -- independent brute-force verification oracles.
* :mod:`soclqc.problemfile` / :mod:`soclqc.cli` -- problem files and the
  ``soclqc`` command line (solve | verify | bench).
"""

from .model import (
    NONNEG,
    SOC,
    ConeBlock,
    ConicProgram,
    ConicProgramBuilder,
    DimensionMismatch,
    LinExpr,
    NotPositiveDefinite,
    add_quadratic_cost,
    cholesky_factor,
    hyperbolic_to_soc,
    pin_variables,
    psd_sqrt_factor,
    quadratic_epigraph,
)
from .solver import Solution, SolverConfig, Status, solve
from .slemma import (
    DegenerateInput,
    QuadForm,
    SLemmaBlock,
    SimulDiag,
    assemble_classical_lmi,
    check_psd,
    emit_simplified_slemma,
    simultaneous_diagonalize,
)
from .oracle import (
    BallMaxResult,
    BisectionFailure,
    DimensionTooLarge,
    closed_form_inner_min,
    grid_worst_case,
    max_quad_over_ball,
)
from .lqc import (
    AmbiguitySpec,
    CompactCost,
    LqcSocp,
    LqcSpec,
    PredictionMatrices,
    RecedingHorizonError,
    RobustCertificateData,
    SimulationRecord,
    box_polyhedron,
    build_compact_cost,
    build_dr_regret_socp,
    build_dr_socp,
    build_prediction_matrices,
    build_regret_socp,
    build_robust_sdp_data,
    build_robust_socp,
    receding_horizon_simulate,
    rollout_cost,
    rollout_states,
    scalar_benchmark_spec,
    time_invariant_spec,
)
from .mpc import (
    MpcSocp,
    MpcSpec,
    NegativeEigenvalue,
    TerminalDiag,
    build_mpc_socp,
    diagonalize_terminal_pair,
    emit_input_containment,
    emit_invariance_constraints,
    emit_state_containment,
    max_fixed_radius,
)
from .problemfile import ProblemFileError, load_problem, parse_problem, save_problem

__version__ = "0.1.0"
