//! Classical and linearized quantum analysis of a type II optical parametric
//! oscillator whose signal and idler are frequency-locked by a subharmonic
//! injection.
//!
//! Everything works in dimensionless variables: time in units of the signal
//! cavity decay, amplitudes normalized so that the free-running threshold sits
//! at `sigma = 1`. The crate is organized by layer:
//!
//! - [`model`]: parameters, phase-space state, polarization and quadrature algebra.
//! - [`classical`]: fixed points, bifurcation structure, deterministic integration,
//!   numerical Hopf location.
//! - [`linalg`]: small dense complex helpers and the 4x4 left eigensolver.
//! - [`quantum`]: linearized fluctuation spectra, spectral covariance matrices,
//!   Duan sum and logarithmic negativity.
//! - [`oracle`]: brute-force positive-P stochastic integration used to validate
//!   the linearized theory.
//! - [`validate`]: the invariant suites behind `opo validate`.

pub mod classical;
pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod quantum;
pub mod validate;

pub use error::{Error, Result};
pub use model::{PhaseSpaceState, PolarizationMode, SystemParams};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always follows input order.
pub(crate) fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
