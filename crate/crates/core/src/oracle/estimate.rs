//! Spectra, covariances and moment checks from ensemble accumulators.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::ensemble::{EnsembleRun, TrajectoryAccumulator};
use crate::quantum::{mode_weights, SpectralCovariance};
use crate::{Error, Result, C64};

/// Fewest Welch segments accepted for an estimate.
pub const MIN_SEGMENTS: u64 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub theta: f64,
    pub psi: f64,
    /// Bin frequencies actually used.
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_trajectories: usize,
    pub n_segments: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub covariance: SpectralCovariance,
    pub std_errors: [[f64; 4]; 4],
    pub n_trajectories: usize,
    pub n_segments: u64,
    /// Per-trajectory matrices, kept for derived statistics.
    #[serde(skip)]
    pub samples: Vec<Matrix4<f64>>,
}

fn bin_for(run: &EnsembleRun, omega: f64) -> Result<usize> {
    let half = run.options.bin_width() / 2.0;
    run.bins
        .iter()
        .position(|&(_, w)| (w - omega.abs()).abs() <= half)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "frequency {omega} was not accumulated (available: {:?})",
                run.bins.iter().map(|b| b.1).collect::<Vec<_>>()
            ))
        })
}

fn check_data(run: &EnsembleRun) -> Result<()> {
    let segs = run.total_segments();
    if segs < MIN_SEGMENTS {
        return Err(Error::InsufficientData(format!(
            "{segs} periodogram segments survive, need {MIN_SEGMENTS}"
        )));
    }
    if run.accumulators.len() < 2 {
        return Err(Error::InsufficientData(
            "standard errors need at least two completed trajectories".into(),
        ));
    }
    Ok(())
}

/// Mean of `(x_s, y_s, x_i, y_i)` over all completed samples.
pub fn channel_means(run: &EnsembleRun) -> [C64; 4] {
    let n: u64 = run.accumulators.iter().map(|a| a.samples).sum();
    let mut m = [C64::default(); 4];
    for a in &run.accumulators {
        for k in 0..4 {
            m[k] += a.channel_sum[k];
        }
    }
    m.map(|z| z / n.max(1) as f64)
}

fn trajectory_covariance(run: &EnsembleRun, acc: &TrajectoryAccumulator, b: usize, mean: &[C64; 4]) -> Matrix4<f64> {
    let bin = &acc.bins[b];
    let (w, wm) = run.window_dft[b];
    let n = acc.segments as f64;
    let scale = run.options.sample_dt() / (run.window_power * n);
    let s = |a: usize, c: usize| {
        let corrected = bin.prod[a][c] - mean[c] * wm * bin.pos[a] - mean[a] * w * bin.neg[c]
            + mean[a] * mean[c] * w * wm * n;
        corrected * scale
    };
    let g2 = run.params.g * run.params.g;
    Matrix4::from_fn(|a, c| {
        let delta = if a == c { 1.0 } else { 0.0 };
        delta + (s(a, c) + s(c, a)).re / g2
    })
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Normally ordered spectral covariance at `omega`, with per-entry standard
/// errors across trajectories.
pub fn estimate_covariance(run: &EnsembleRun, omega: f64) -> Result<CovarianceEstimate> {
    check_data(run)?;
    let b = bin_for(run, omega)?;
    let mean = channel_means(run);
    let samples: Vec<Matrix4<f64>> = run
        .accumulators
        .iter()
        .map(|a| trajectory_covariance(run, a, b, &mean))
        .collect();
    let mut v = Matrix4::zeros();
    let mut se = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let xs: Vec<f64> = samples.iter().map(|m| m[(r, c)]).collect();
            let (m, e) = mean_and_se(&xs);
            v[(r, c)] = m;
            se[r][c] = e;
        }
    }
    Ok(CovarianceEstimate {
        covariance: SpectralCovariance::from_matrix(run.bins[b].1, &v),
        std_errors: se,
        n_trajectories: run.accumulators.len(),
        n_segments: run.total_segments(),
        samples,
    })
}

/// `V(X_theta^psi; Omega)` on a grid of accumulated frequencies.
pub fn estimate_quadrature_spectrum(run: &EnsembleRun, theta: f64, psi: f64, omegas: &[f64]) -> Result<SpectrumEstimate> {
    check_data(run)?;
    let w = mode_weights(theta, psi);
    let mut out = SpectrumEstimate {
        theta,
        psi,
        omegas: Vec::new(),
        values: Vec::new(),
        std_errors: Vec::new(),
        n_trajectories: run.accumulators.len(),
        n_segments: run.total_segments(),
    };
    for &omega in omegas {
        let cov = estimate_covariance(run, omega)?;
        let xs: Vec<f64> = cov.samples.iter().map(|m| (w.transpose() * m * w)[(0, 0)]).collect();
        let (m, e) = mean_and_se(&xs);
        out.omegas.push(cov.covariance.omega);
        out.values.push(m);
        out.std_errors.push(e);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub name: String,
    pub expected: C64,
    pub mean: C64,
    pub std_error: (f64, f64),
    /// Largest of the real and imaginary z-scores.
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub entries: Vec<MomentEntry>,
    /// `Im <b_s b_s+>` in standard errors; the photon number must be real.
    pub number_imag_z: f64,
    pub passed: bool,
}

fn complex_stats(values: &[C64]) -> (C64, (f64, f64)) {
    let re: Vec<f64> = values.iter().map(|z| z.re).collect();
    let im: Vec<f64> = values.iter().map(|z| z.im).collect();
    let (mr, er) = mean_and_se(&re);
    let (mi, ei) = mean_and_se(&im);
    (C64::new(mr, mi), (er, ei))
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se > 0.0 {
        diff.abs() / se
    } else {
        f64::INFINITY
    }
}

/// Ensemble means of the amplitudes against the start point; flags bias
/// beyond three standard errors.
pub fn moment_check(run: &EnsembleRun) -> Result<MomentReport> {
    check_data(run)?;
    let start = [run.start.signal, run.start.signal_plus, run.start.idler, run.start.idler_plus];
    let names = ["b_s", "b_s+", "b_i", "b_i+"];
    let mut entries = Vec::new();
    for k in 0..4 {
        let per: Vec<C64> = run
            .accumulators
            .iter()
            .map(|a| a.amplitude_sum[k] / a.samples as f64)
            .collect();
        let (mean, se) = complex_stats(&per);
        let d = mean - start[k];
        let z = z_score(d.re, se.0).max(z_score(d.im, se.1));
        entries.push(MomentEntry {
            name: names[k].into(),
            expected: start[k],
            mean,
            std_error: se,
            z,
            flagged: z > 3.0,
        });
    }
    let per: Vec<C64> = run.accumulators.iter().map(|a| a.number_sum / a.samples as f64).collect();
    let (n, se) = complex_stats(&per);
    let number_imag_z = z_score(n.im, se.1);
    let passed = entries.iter().all(|e| !e.flagged) && number_imag_z <= 3.0;
    Ok(MomentReport {
        entries,
        number_imag_z,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PhaseSpaceState, SystemParams};
    use crate::oracle::{simulate_ensemble, OracleOptions};

    fn vacuum_run(sigma: f64, n: usize, horizon: f64) -> EnsembleRun {
        let p = SystemParams::symmetric(sigma, 0.0, 0.0).unwrap();
        let opts = OracleOptions {
            horizon,
            trajectories: n,
            segment_len: 1024,
            omegas: vec![0.0, 50.0],
            seed: 11,
            ..OracleOptions::default()
        };
        simulate_ensemble(&p, &PhaseSpaceState::classical(C64::default(), C64::default()), &opts).unwrap()
    }

    #[test]
    fn vacuum_is_identity_within_error() {
        let run = vacuum_run(0.0, 4, 100.0);
        let c = estimate_covariance(&run, 0.0).unwrap();
        // no coupling, no noise: exactly the identity
        assert!((c.covariance.matrix() - Matrix4::identity()).norm() < 1e-12);
    }

    #[test]
    fn below_threshold_squeezing_rough() {
        let run = vacuum_run(0.5, 6, 300.0);
        let est = estimate_quadrature_spectrum(&run, 0.3, std::f64::consts::FRAC_PI_2, &[0.0, 50.0]).unwrap();
        let (v0, e0) = (est.values[0], est.std_errors[0]);
        assert!((v0 - 1.0 / 9.0).abs() < 4.0 * e0 + 0.05, "{v0} +- {e0}");
        assert!((est.values[1] - 1.0).abs() < 0.05, "{}", est.values[1]);
        let m = moment_check(&run).unwrap();
        assert!(m.entries.iter().all(|e| e.z < 5.0), "{m:?}");
    }

    #[test]
    fn insufficient_data() {
        let p = SystemParams::symmetric(0.5, 0.0, 0.0).unwrap();
        let opts = OracleOptions {
            horizon: 20.0,
            trajectories: 2,
            ..OracleOptions::default()
        };
        let run = simulate_ensemble(&p, &PhaseSpaceState::classical(C64::default(), C64::default()), &opts).unwrap();
        assert!(matches!(estimate_covariance(&run, 0.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn unknown_frequency_rejected() {
        let run = vacuum_run(0.0, 2, 60.0);
        assert!(matches!(estimate_covariance(&run, 7.0), Err(Error::InvalidParameter(_))));
    }
}
