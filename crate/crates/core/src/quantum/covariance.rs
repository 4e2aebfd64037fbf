//! Spectral covariance of signal and idler quadratures, and the
//! entanglement measures built from it.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::{Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::projection::{
    bright_dark_to_signal_idler, projection_spectrum_matrix, symmetric_eigensystem,
    symmetric_noise, variable_spectral_matrix,
};
use crate::classical::{asym_stability_matrix, symmetric_phase};
use crate::linalg::{left_eigensystem, CMat4, Eigensystem};
use crate::model::SystemParams;
use crate::{Error, Result, C64};

/// Tolerance on the imaginary part of assembled covariance entries,
/// relative to `max(1, |V|)`.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Slack below 1 tolerated for the un-transposed symplectic eigenvalue.
pub const PHYSICALITY_TOL: f64 = 1e-6;

/// Covariance in the ordering `(x_s, y_s, x_i, y_i)`; vacuum is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCovariance {
    pub omega: f64,
    pub v: [[f64; 4]; 4],
}

impl SpectralCovariance {
    pub fn from_matrix(omega: f64, m: &Matrix4<f64>) -> Self {
        let mut v = [[0.0; 4]; 4];
        for (r, row) in v.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = m[(r, c)];
            }
        }
        Self { omega, v }
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|r, c| self.v[r][c])
    }

    /// `w^T V w`.
    pub fn variance(&self, w: &Vector4<f64>) -> f64 {
        (w.transpose() * self.matrix() * w)[(0, 0)]
    }

    /// Variance of the quadrature `psi` of the polarization mode `theta`.
    pub fn quadrature_variance(&self, theta: f64, psi: f64) -> f64 {
        self.variance(&mode_weights(theta, psi))
    }
}

/// Weights over `(x_s, y_s, x_i, y_i)` for `e^{-i psi} b_theta + h.c.`
/// with `b_theta = (e^{-i theta} b_s + e^{i theta} b_i)/sqrt 2`.
pub fn mode_weights(theta: f64, psi: f64) -> Vector4<f64> {
    let (a, b) = (psi + theta, psi - theta);
    Vector4::new(a.cos(), a.sin(), b.cos(), b.sin()) * FRAC_1_SQRT_2
}

/// Noise matrix over `(s, s+, i, i+)` for a pump of phase `phi_p`.
pub fn signal_idler_noise(phi_p: f64) -> CMat4 {
    let e = C64::from_polar(1.0, phi_p);
    let mut s = CMat4::zeros();
    s[(0, 2)] = e;
    s[(2, 0)] = e;
    s[(1, 3)] = e.conj();
    s[(3, 1)] = e.conj();
    s
}

/// `(s, s+, i, i+)` to `(x_s, y_s, x_i, y_i)`.
fn quadrature_map() -> CMat4 {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let z = C64::new(0.0, 0.0);
    Matrix4::new(
        one, one, z, z,
        -i, i, z, z,
        z, z, one, one,
        z, z, -i, i,
    )
}

fn finish(omega: f64, p_si: &CMat4, g: f64) -> Result<SpectralCovariance> {
    let r = quadrature_map();
    let m = r * p_si * r.transpose() / C64::new(g * g, 0.0);
    let scale = m.iter().map(|z| z.re.abs()).fold(1.0, f64::max);
    let imag = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > IMAG_RESIDUE_TOL * scale {
        return Err(Error::ImaginaryResidue(imag));
    }
    let v = Matrix4::identity() + m.map(|z| z.re);
    Ok(SpectralCovariance::from_matrix(omega, &((v + v.transpose()) * 0.5)))
}

/// Covariance from a signal/idler eigensystem and a pump `|beta_p| e^{i phi_p}`.
pub fn output_covariance(
    eig: &Eigensystem,
    phi_p: f64,
    abs_pump: f64,
    g: f64,
    omega: f64,
) -> Result<SpectralCovariance> {
    let c = projection_spectrum_matrix(eig, &signal_idler_noise(phi_p), abs_pump, g, omega)?;
    let p = variable_spectral_matrix(eig, &c)?;
    finish(omega, &p, g)
}

/// Covariance at a fixed point `(beta_s, beta_i)` of the given parameters.
pub fn covariance_at_fixed_point(
    params: &SystemParams,
    signal: C64,
    idler: C64,
    omega: f64,
) -> Result<SpectralCovariance> {
    let l = asym_stability_matrix(signal, idler, params)?;
    let eig = left_eigensystem(&l)?;
    let bp = params.sigma - signal * idler;
    output_covariance(&eig, bp.arg(), bp.norm(), params.g, omega)
}

/// Symmetric configuration through the closed-form bright/dark eigenbasis.
pub fn symmetric_covariance(sigma: f64, delta: f64, intensity: f64, g: f64, omega: f64) -> Result<SpectralCovariance> {
    let sys = symmetric_eigensystem(intensity, sigma, delta)?;
    let (noise, abs_bp) = symmetric_noise(intensity, sigma);
    let c = projection_spectrum_matrix(&sys.eig, &noise, abs_bp, g, omega)?;
    let p_bd = variable_spectral_matrix(&sys.eig, &c)?;
    let t = bright_dark_to_signal_idler(symmetric_phase(intensity, sigma, delta));
    finish(omega, &(t * p_bd * t.transpose()), g)
}

/// `V((X_s - X_i)/sqrt 2) + V((Y_s + Y_i)/sqrt 2)` with local phases `phi_s`, `phi_i`.
pub fn duan_sum(cov: &SpectralCovariance, phi_s: f64, phi_i: f64) -> f64 {
    let (cs, ss, ci, si) = (phi_s.cos(), phi_s.sin(), phi_i.cos(), phi_i.sin());
    let w1 = Vector4::new(cs, ss, -ci, -si) * FRAC_1_SQRT_2;
    let w2 = Vector4::new(-ss, cs, -si, ci) * FRAC_1_SQRT_2;
    cov.variance(&w1) + cov.variance(&w2)
}

/// Local phases that turn the Duan sum into `V(Y_{phi+pi/4}) + V(Y_{phi-pi/4})`
/// at a fixed point with `arg beta_s = phi`.
pub fn symmetric_duan_phases(signal: C64, idler: C64) -> (f64, f64) {
    (signal.arg() + FRAC_PI_2, idler.arg() - FRAC_PI_2)
}

/// Smallest Duan sum over both local phases: coarse grid, then coordinate refinement.
pub fn min_duan_sum(cov: &SpectralCovariance) -> (f64, f64, f64) {
    let n = 90;
    let step = std::f64::consts::TAU / n as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            let (ps, pi) = (a as f64 * step, b as f64 * step);
            let d = duan_sum(cov, ps, pi);
            if d < best.0 {
                best = (d, ps, pi);
            }
        }
    }
    let mut h = step;
    while h > 1e-10 {
        let mut moved = false;
        for (ds, di) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h), (h, h), (-h, -h), (h, -h), (-h, h)] {
            let d = duan_sum(cov, best.1 + ds, best.2 + di);
            if d < best.0 {
                best = (d, best.1 + ds, best.2 + di);
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    best
}

fn blocks(v: &Matrix4<f64>) -> (f64, f64, f64) {
    let a: Matrix2<f64> = v.fixed_view::<2, 2>(0, 0).into_owned();
    let b: Matrix2<f64> = v.fixed_view::<2, 2>(2, 2).into_owned();
    let c: Matrix2<f64> = v.fixed_view::<2, 2>(0, 2).into_owned();
    (a.determinant(), b.determinant(), c.determinant())
}

fn symplectic_pair(invariant: f64, det: f64) -> (f64, f64) {
    let disc = (invariant * invariant - 4.0 * det).max(0.0).sqrt();
    let plus_sq = (invariant + disc) / 2.0;
    // product of the roots is det; avoids cancellation when nu- << nu+
    let minus_sq = if plus_sq > 0.0 { det / plus_sq } else { 0.0 };
    (plus_sq.max(0.0).sqrt(), minus_sq.max(0.0).sqrt())
}

/// Symplectic eigenvalues `(nu+, nu-)` of `V` (vacuum gives 1, 1).
pub fn symplectic_eigenvalues(cov: &SpectralCovariance) -> (f64, f64) {
    let v = cov.matrix();
    let (da, db, dc) = blocks(&v);
    symplectic_pair(da + db + 2.0 * dc, v.determinant())
}

/// Symplectic eigenvalues of the partial transpose `Z V Z`, `Z = diag(1, 1, 1, -1)`.
pub fn transposed_symplectic_eigenvalues(cov: &SpectralCovariance) -> (f64, f64) {
    let v = cov.matrix();
    let (da, db, dc) = blocks(&v);
    symplectic_pair(da + db - 2.0 * dc, v.determinant())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub omega: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    /// Natural logarithm.
    pub log_negativity: f64,
    pub duan_sum: Option<f64>,
    pub duan_phases: Option<(f64, f64)>,
    pub entangled: bool,
}

/// Logarithmic negativity (natural log) of a covariance, after a physicality check.
pub fn log_negativity(cov: &SpectralCovariance) -> Result<EntanglementReport> {
    let (_, raw_minus) = symplectic_eigenvalues(cov);
    if raw_minus < 1.0 - PHYSICALITY_TOL {
        return Err(Error::UnphysicalCovariance(raw_minus));
    }
    let (nu_plus, nu_minus) = transposed_symplectic_eigenvalues(cov);
    let log_negativity: f64 = [nu_plus, nu_minus]
        .iter()
        .filter(|&&nu| nu < 1.0)
        .map(|nu| -nu.ln())
        .sum();
    Ok(EntanglementReport {
        omega: cov.omega,
        nu_plus,
        nu_minus,
        log_negativity,
        duan_sum: None,
        duan_phases: None,
        entangled: log_negativity > 0.0,
    })
}

/// Full report at a fixed point, with the Duan sum minimized over local phases.
pub fn entanglement_at_fixed_point(
    params: &SystemParams,
    signal: C64,
    idler: C64,
    omega: f64,
) -> Result<EntanglementReport> {
    let cov = covariance_at_fixed_point(params, signal, idler, omega)?;
    let mut report = log_negativity(&cov)?;
    let (d, ps, pi) = min_duan_sum(&cov);
    report.duan_sum = Some(d);
    report.duan_phases = Some((ps, pi));
    Ok(report)
}
