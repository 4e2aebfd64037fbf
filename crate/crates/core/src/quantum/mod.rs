//! Linearized quantum fluctuations: spectra, projection, covariance.

pub mod covariance;
pub mod projection;
pub mod spectra;

pub use covariance::{
    covariance_at_fixed_point, duan_sum, entanglement_at_fixed_point, log_negativity,
    min_duan_sum, mode_weights, output_covariance, signal_idler_noise, symmetric_covariance,
    symmetric_duan_phases, symplectic_eigenvalues, transposed_symplectic_eigenvalues,
    EntanglementReport, SpectralCovariance,
};
pub use projection::{
    appendix_spectrum, bright_dark_to_signal_idler, bright_dark_weights, guard_band,
    projected_symmetric_spectrum, projection_spectrum_matrix, symmetric_eigensystem,
    symmetric_noise, variable_spectral_matrix, weighted_mode_spectrum, SymmetricBasis,
    SymmetricEigensystem, MAX_CONDITION,
};
pub use spectra::{
    check_symmetric_stability, f_pm, pb_small_delta_approx, spectrum_at_special_point,
    symmetric_quadrature_spectrum, LabeledSpectrum, Quadrature, SpecialPoint, SpectrumValue,
    SymmetricMode, STABILITY_MARGIN,
};
