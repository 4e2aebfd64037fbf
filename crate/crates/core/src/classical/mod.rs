//! Noise-free dynamics: stationary states, bifurcation structure, integration.

pub mod asymmetric;
pub mod diagram;
pub mod dynamics;
pub mod steady;

pub use asymmetric::{
    asym_stability_matrix, locate_hopf, matrix_eigenvalues, newton_fixed_point,
    relax_to_fixed_point, HopfPoint,
};
pub use diagram::{
    bifurcation_diagram, locking_injection, AsymmetricRecord, BifurcationDiagram, BranchPoint,
    DiagramOptions, OrbitRecord,
};
pub use dynamics::{
    classical_rhs, dopri5, integrate_classical, Attractor, Drift, IntegratorOptions, Trajectory,
};
pub use steady::{
    bright_dark_matrix, classify_branch, injection_for_intensity, special_points,
    steady_intensities, symmetric_fixed_point, symmetric_phase, symmetric_stability_eigs,
    symmetric_steady_states, turning_points, BranchLabel, SpecialPoints, Stability, SteadyState,
};
