"""Conjugate gradients with quadrature-based error bounds.

The package tracks, alongside each CG iterate, lower and upper bounds on
the squared A-norm of the error (Gauss, Gauss-Radau for a prescribed
underestimate of the smallest eigenvalue, and a simple ratio bound), an
adaptive scheme that certifies upper bounds to a requested relative
accuracy, and the spectral diagnostics that explain when and why the
Gauss-Radau bound degrades.  All core arithmetic is parameterized by an
explicit precision context.
"""

from .precision import PrecisionContext, native, elevated
from .tridiag import (
    JacobiMatrix,
    EigenDecomposition,
    eig_tridiagonal,
    solve_shifted,
    ldl_tridiagonal,
    solve_posdef,
    inverse_first_entry,
    EigenConvergenceError,
    NotPositiveDefiniteError,
    ShiftNotBelowSpectrumError,
)
from .spectrum import (
    DistributionFunction,
    ModelProblem,
    strakos_nodes,
    cluster_sizes,
    blur,
    rkpw,
    jacobi_via_lanczos,
    jacobi_moment,
    gauss_rule,
    build_model_problem,
    write_jacobi,
    read_jacobi,
    write_distribution,
    read_distribution,
    ReconstructionError,
)
from .krylov import (
    JacobiOperator,
    DiagonalOperator,
    DenseOperator,
    SparseSymmetricOperator,
    LanczosState,
    lanczos_start,
    lanczos_step,
    run_lanczos,
    CGState,
    cg_start,
    cg_step,
    run_cg,
    CGRecord,
    CGTrace,
    cg_to_lanczos,
    true_error2,
    read_matrix_market,
    write_matrix_market,
    write_trace_csv,
    read_trace_csv,
    MatrixMarketError,
    BreakdownError,
)
from .bounds import (
    update_phi,
    update_gamma_mu,
    update_alpha_mu,
    gamma_from_alpha,
    bounds_at,
    PhiTracker,
    MuEstimator,
    BoundSeries,
    BoundRecord,
    AcceptedBound,
    estimate_bounds,
    improved_bounds,
    adaptive_accept,
    delay_estimate,
    EstimatorInvalidError,
    write_bounds_csv,
    write_acceptance_csv,
    write_estimators_csv,
)
from .analysis import (
    EtaBreakdown,
    eta_breakdown,
    lemma2_diff,
    omega_identity_check,
    neumann_identity_check,
    relative_distance,
    crit1_identity_check,
    crit1_bracket,
    bracket_upper2,
    phase2_onset_oracle,
    phase2_markers_practical,
    ritz_accuracy,
    convergence_ratios,
    TraceDiagnostics,
    write_analysis_csv,
)

__version__ = "0.1.0"
