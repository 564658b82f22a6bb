//! Numerical thresholds shared across modules.

/// Accepted deviation of an input row sum from one.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Target accuracy of spectral computations.
pub const EIG_TOL: f64 = 1e-10;
/// Entries below this magnitude are flushed to exact zero during validation.
pub const FLUSH_TOL: f64 = 1e-15;
/// Allowed negative slack on disturbances and on the running maximum.
pub const FEAS_TOL: f64 = 1e-12;
pub const CONSENSUS_TOL: f64 = 1e-7;
pub const RESIDUAL_TOL: f64 = 1e-7;
/// Below this a decreasing tail counts as divergent regardless of its rate.
pub const DIVERGENCE_FLOOR: f64 = 1e6;
pub const CLUSTER_TOL: f64 = 1e-6;
pub const FP_TOL: f64 = 1e-9;
pub const SOLVER_TOL: f64 = 1e-6;
pub const SOLVER_MAX_ITERS: usize = 100_000;
/// Partial-sum threshold for persistent arcs of non-periodic sequences.
pub const DIVERGENCE_THRESHOLD: f64 = 10.0;
pub const CUT_ENUMERATION_LIMIT: usize = 20;

/// Length of the tail examined by trajectory classification.
pub fn tail_window(steps: usize) -> usize {
    50.max(steps / 10)
}
