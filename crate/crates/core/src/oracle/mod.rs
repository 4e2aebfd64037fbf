//! Brute-force positive-P trajectories used to check the linearized theory.

pub mod ensemble;
pub mod estimate;

pub use ensemble::{
    default_transient, rotate_by_theta0, simulate_ensemble, BinAccumulator, EnsembleRun,
    OracleOptions, TrajectoryAccumulator, TrajectoryStatus, TRANSIENT_CAP,
};
pub use estimate::{
    channel_means, estimate_covariance, estimate_quadrature_spectrum, moment_check,
    CovarianceEstimate, MomentEntry, MomentReport, SpectrumEstimate, MIN_SEGMENTS,
};
