//! Projection of the linearized fluctuations onto the left eigenvectors of
//! the stability matrix, and assembly of quadrature spectra from the
//! projected correlation matrix `C(Omega)`.

use nalgebra::Matrix4;

use super::spectra::{Quadrature, SymmetricMode, STABILITY_MARGIN};
use crate::classical::bright_dark_matrix;
use crate::linalg::{condition_number, left_eigensystem, CMat4, CVec4, Eigensystem};
use crate::model::psi_pm;
use crate::{Error, Result, C64};

/// Half-width of the band around `I = delta` where the bright/dark
/// stability matrix is treated as non-diagonalizable.
pub fn guard_band(delta: f64) -> f64 {
    1e-6 * delta.max(1.0)
}

/// Condition number of `U` beyond which assembly is refused.
pub const MAX_CONDITION: f64 = 1e8;

/// Which closed-form eigenbasis a symmetric eigensystem uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymmetricBasis {
    /// `I < delta`: complex-conjugate pairs.
    Lower,
    /// `I > delta`: real eigenvalues, with the `M+-` weights.
    Upper { m_plus: f64, m_minus: f64 },
    /// Numerically computed (used when `delta = 0`).
    Numeric,
}

/// Eigensystem of the bright/dark stability matrix with its basis tag.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigensystem {
    pub sigma: f64,
    pub delta: f64,
    pub intensity: f64,
    pub basis: SymmetricBasis,
    pub eig: Eigensystem,
}

/// Closed-form left eigensystem of the bright/dark matrix.
///
/// Ordering: `I < delta` gives `lambda = -1-sigma -+ i w, -1+sigma-2I -+ i w`;
/// `I > delta` gives `-1-sigma -+ r, -1+sigma-2I -+ r` with `r = sqrt(I^2 - delta^2)`.
/// Within the guard band around `I = delta` the matrix is defective and an
/// error is returned; for `delta = 0` a numeric eigensystem is used.
pub fn symmetric_eigensystem(intensity: f64, sigma: f64, delta: f64) -> Result<SymmetricEigensystem> {
    let l = bright_dark_matrix(intensity, sigma, delta);
    let (i, d) = (intensity, delta);
    if d == 0.0 {
        return Ok(SymmetricEigensystem {
            sigma,
            delta,
            intensity,
            basis: SymmetricBasis::Numeric,
            eig: left_eigensystem(&l)?,
        });
    }
    if (i - d).abs() < guard_band(d) {
        return Err(Error::DefectiveMatrix((i - d).abs()));
    }
    let a = -1.0 - sigma;
    let b = -1.0 + sigma - 2.0 * i;
    let c = |re: f64, im: f64| C64::new(re, im);
    let (lambdas, cols, basis) = if i < d {
        let w = (d * d - i * i).sqrt();
        let phase = w.atan2(i);
        let e = C64::from_polar(1.0, -phase / 2.0);
        let ec = e.conj();
        let cols = [
            CVec4::new(e, -e, ec, -ec),
            CVec4::new(ec, -ec, e, -e),
            CVec4::new(e, e, ec, ec),
            CVec4::new(ec, ec, e, e),
        ];
        ([c(a, -w), c(a, w), c(b, -w), c(b, w)], cols, SymmetricBasis::Lower)
    } else {
        let r = (i * i - d * d).sqrt();
        let fp = i + r;
        // I - r without cancellation
        let fm = d * d / (i + r);
        let re = |x: f64| c(x, 0.0);
        let cols = [
            CVec4::new(re(fp), re(-fp), re(d), re(-d)),
            CVec4::new(re(fm), re(-fm), re(d), re(-d)),
            CVec4::new(re(fp), re(fp), re(d), re(d)),
            CVec4::new(re(fm), re(fm), re(d), re(d)),
        ];
        let pm = psi_pm(i, d)?;
        (
            [re(a - r), re(a + r), re(b - r), re(b + r)],
            cols,
            SymmetricBasis::Upper {
                m_plus: pm.m_plus,
                m_minus: pm.m_minus,
            },
        )
    };
    let left = CMat4::from_columns(&cols);
    Ok(SymmetricEigensystem {
        sigma,
        delta,
        intensity,
        basis,
        eig: Eigensystem::from_parts(&l, lambdas, left)?,
    })
}

/// `C_jl(Omega) = g^2 |beta_p| u_l^dagger S u_j^* / ((lambda_j + i Omega)(lambda_l - i Omega))`.
pub fn projection_spectrum_matrix(
    eig: &Eigensystem,
    noise: &CMat4,
    abs_pump: f64,
    g: f64,
    omega: f64,
) -> Result<CMat4> {
    let max_re = eig.max_real_part();
    if max_re > STABILITY_MARGIN {
        return Err(Error::UnstablePoint(max_re));
    }
    let w = C64::new(0.0, omega);
    let pref = g * g * abs_pump;
    Ok(CMat4::from_fn(|j, l| {
        let uj = eig.left.column(j);
        let ul = eig.left.column(l);
        let num = (ul.adjoint() * noise * uj.map(|z| z.conj()))[(0, 0)];
        num * pref / ((eig.eigenvalues[j] + w) * (eig.eigenvalues[l] - w))
    }))
}

/// `U^{-1} [C + C^T] U^{-T}`: the symmetrized spectral matrix of the
/// underlying variables, still scaled by `g^2`.
pub fn variable_spectral_matrix(eig: &Eigensystem, c: &CMat4) -> Result<CMat4> {
    let u = eig.projection_matrix();
    let cond = condition_number(&u);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let uinv = u.try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))?;
    Ok(uinv * (c + c.transpose()) * uinv.transpose())
}

/// Symmetric-case noise matrix in the bright/dark basis and `|beta_p|`.
pub fn symmetric_noise(intensity: f64, sigma: f64) -> (CMat4, f64) {
    let bp = sigma - intensity;
    let sign = if bp < 0.0 { -1.0 } else { 1.0 };
    (CMat4::identity() * C64::new(sign, 0.0), bp.abs())
}

/// Spectra of the symmetric configuration from the projection matrix via the
/// closed-form combinations tied to the analytic eigenbasis.
pub fn appendix_spectrum(
    sys: &SymmetricEigensystem,
    c: &CMat4,
    g: f64,
    mode: SymmetricMode,
    quad: Quadrature,
) -> Result<f64> {
    let (i, d) = (sys.intensity, sys.delta);
    let g2 = g * g;
    let at = |j: usize, l: usize| c[(j, l)];
    let value = match sys.basis {
        SymmetricBasis::Lower => {
            let (lo, hi) = (1.0 + i / d, 1.0 - i / d);
            match (mode, quad) {
                (SymmetricMode::MinusQuarter, Quadrature::Y) => {
                    1.0 - (at(0, 0) + at(1, 1) + at(1, 0) + at(0, 1)).re / (2.0 * g2 * lo)
                }
                (SymmetricMode::PlusQuarter, Quadrature::Y) => {
                    1.0 + (at(0, 0) + at(1, 1) - at(1, 0) - at(0, 1)).re / (2.0 * g2 * hi)
                }
                (SymmetricMode::MinusQuarter, Quadrature::X) => {
                    1.0 + (at(2, 2) + at(3, 3) + at(2, 3) + at(3, 2)).re / (2.0 * g2 * lo)
                }
                (SymmetricMode::PlusQuarter, Quadrature::X) => {
                    1.0 - (at(2, 2) + at(3, 3) - at(2, 3) - at(3, 2)).re / (2.0 * g2 * hi)
                }
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "mode {} needs I > delta",
                        mode.label()
                    )))
                }
            }
        }
        SymmetricBasis::Upper { m_plus, m_minus } => {
            let mm = (m_plus * m_minus).sqrt();
            let (lo, hi) = (1.0 + d / i, 1.0 - d / i);
            match (mode, quad) {
                (SymmetricMode::PsiPlus, Quadrature::Y) => 1.0 - 2.0 * at(0, 0).re / (g2 * m_plus),
                (SymmetricMode::PsiMinus, Quadrature::Y) => 1.0 - 2.0 * at(1, 1).re / (g2 * m_minus),
                (SymmetricMode::PsiPlus, Quadrature::X) => 1.0 + 2.0 * at(2, 2).re / (g2 * m_plus),
                (SymmetricMode::PsiMinus, Quadrature::X) => 1.0 + 2.0 * at(3, 3).re / (g2 * m_minus),
                (SymmetricMode::MinusQuarter, Quadrature::Y) => {
                    1.0 - (at(0, 0).re / m_plus + at(1, 1).re / m_minus + (at(1, 0) + at(0, 1)).re / mm)
                        / (g2 * lo)
                }
                (SymmetricMode::PlusQuarter, Quadrature::Y) => {
                    1.0 - (at(0, 0).re / m_plus + at(1, 1).re / m_minus - (at(1, 0) + at(0, 1)).re / mm)
                        / (g2 * hi)
                }
                (SymmetricMode::MinusQuarter, Quadrature::X) => {
                    1.0 + (at(2, 2).re / m_plus + at(3, 3).re / m_minus + (at(2, 3) + at(3, 2)).re / mm)
                        / (g2 * lo)
                }
                (SymmetricMode::PlusQuarter, Quadrature::X) => {
                    1.0 + (at(2, 2).re / m_plus + at(3, 3).re / m_minus - (at(2, 3) + at(3, 2)).re / mm)
                        / (g2 * hi)
                }
            }
        }
        SymmetricBasis::Numeric => return weighted_mode_spectrum(sys, c, g, mode, quad),
    };
    Ok(value)
}

/// Weights over `(b, b+, d, d+)` selecting the quadrature `psi` of the
/// polarization mode at angle `phi + alpha`.
pub fn bright_dark_weights(alpha: f64, psi: f64) -> CVec4 {
    let e = C64::from_polar(1.0, -psi);
    let (ca, sa) = (alpha.cos(), alpha.sin());
    CVec4::new(e * ca, e.conj() * ca, -e * sa, -e.conj() * sa)
}

/// Basis-independent route: `1 + w^T U^{-1}[C + C^T]U^{-T} w / g^2`.
pub fn weighted_mode_spectrum(
    sys: &SymmetricEigensystem,
    c: &CMat4,
    g: f64,
    mode: SymmetricMode,
    quad: Quadrature,
) -> Result<f64> {
    let p = variable_spectral_matrix(&sys.eig, c)?;
    let w = bright_dark_weights(mode.offset(sys.intensity, sys.delta)?, quad.psi());
    let v = (w.transpose() * p * w)[(0, 0)];
    Ok(1.0 + v.re / (g * g))
}

/// The projection route end to end for one symmetric spectrum.
pub fn projected_symmetric_spectrum(
    sigma: f64,
    delta: f64,
    intensity: f64,
    mode: SymmetricMode,
    quad: Quadrature,
    omega: f64,
    g: f64,
) -> Result<f64> {
    let sys = symmetric_eigensystem(intensity, sigma, delta)?;
    let (noise, abs_bp) = symmetric_noise(intensity, sigma);
    let c = projection_spectrum_matrix(&sys.eig, &noise, abs_bp, g, omega)?;
    appendix_spectrum(&sys, &c, g, mode, quad)
}

/// Map from `(b, b+, d, d+)` at bright angle `phi` to `(b_s, b_s+, b_i, b_i+)`.
pub fn bright_dark_to_signal_idler(phi: f64) -> CMat4 {
    let e = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, phi);
    let ec = e.conj();
    let i = C64::new(0.0, 1.0);
    let z = C64::new(0.0, 0.0);
    Matrix4::new(
        e, z, -i * e, z,
        z, ec, z, i * ec,
        ec, z, i * ec, z,
        z, e, z, -i * e,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::spectra::symmetric_quadrature_spectrum;

    #[test]
    fn analytic_eigensystems_meet_contract() {
        for &(i, s, d) in &[(0.05, 1.2, 0.2), (0.15, 1.2, 0.2), (2.5, 2.8, 0.6), (0.0, 0.5, 0.6)] {
            let sys = symmetric_eigensystem(i, s, d).unwrap();
            assert!(sys.eig.residual <= 1e-12, "{}", sys.eig.residual);
        }
    }

    #[test]
    fn upper_branch_first_vector() {
        let (i, s, d) = (1.3, 2.8, 0.6);
        let sys = symmetric_eigensystem(i, s, d).unwrap();
        let r = (i * i - d * d).sqrt();
        let u1 = sys.eig.u(0);
        assert!((u1[0].re - (i + r)).abs() < 1e-14 && (u1[2].re - d).abs() < 1e-15);
        assert!((sys.eig.eigenvalues[0].re - (-1.0 - s - r)).abs() < 1e-14);
    }

    #[test]
    fn defective_at_crossing() {
        assert!(matches!(symmetric_eigensystem(0.2, 1.2, 0.2), Err(Error::DefectiveMatrix(_))));
        let l = bright_dark_matrix(0.2, 1.2, 0.2);
        assert!(left_eigensystem(&l).is_err());
    }

    #[test]
    fn single_mode_projection() {
        // 2x2 analog embedded in the 4x4 machinery: lambda = -1, u = (1, 1), S = 1
        let mut left = CMat4::zeros();
        left[(0, 0)] = C64::new(1.0, 0.0);
        left[(1, 0)] = C64::new(1.0, 0.0);
        left[(2, 1)] = C64::new(1.0, 0.0);
        left[(3, 2)] = C64::new(1.0, 0.0);
        left[(3, 3)] = C64::new(0.0, 1.0);
        let eig = Eigensystem {
            eigenvalues: [C64::new(-1.0, 0.0); 4],
            left,
            residual: 0.0,
        };
        let sigma = 0.7;
        let c = projection_spectrum_matrix(&eig, &CMat4::identity(), sigma, 1.0, 0.0).unwrap();
        assert!((c[(0, 0)] - 2.0 * sigma).norm() < 1e-15);
    }

    #[test]
    fn below_threshold_ninth_by_projection() {
        let y = projected_symmetric_spectrum(0.5, 0.0, 0.0, SymmetricMode::PlusQuarter, Quadrature::Y, 0.0, 0.01)
            .unwrap();
        assert!((y - 1.0 / 9.0).abs() < 1e-12, "{y}");
    }

    #[test]
    fn high_frequency_decay() {
        let sys = symmetric_eigensystem(0.15, 1.2, 0.2).unwrap();
        let (n, a) = symmetric_noise(0.15, 1.2);
        let c = projection_spectrum_matrix(&sys.eig, &n, a, 0.01, 1e6).unwrap();
        assert!(c.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn unstable_rejected() {
        let l = bright_dark_matrix(1.2, 2.8, 0.6);
        let eig = left_eigensystem(&l).unwrap();
        let (n, a) = symmetric_noise(1.2, 2.8);
        assert!(matches!(
            projection_spectrum_matrix(&eig, &n, a, 0.01, 0.0),
            Err(Error::UnstablePoint(_))
        ));
    }

    #[test]
    fn hermitian_like_symmetry() {
        let sys = symmetric_eigensystem(0.12, 1.2, 0.2).unwrap();
        let (n, a) = symmetric_noise(0.12, 1.2);
        let cp = projection_spectrum_matrix(&sys.eig, &n, a, 0.1, 0.4).unwrap();
        let cm = projection_spectrum_matrix(&sys.eig, &n, a, 0.1, -0.4).unwrap();
        assert!((cp - cm.transpose()).norm() < 1e-15);
    }

    #[test]
    fn weighted_and_appendix_routes_agree() {
        for &(i, s, d) in &[(0.12, 1.2, 0.2), (0.15, 1.2, 0.2), (1.9, 2.8, 0.6), (2.5, 2.8, 0.6)] {
            let sys = symmetric_eigensystem(i, s, d).unwrap();
            let (n, a) = symmetric_noise(i, s);
            for w in [0.0, 0.3, 2.0] {
                let c = projection_spectrum_matrix(&sys.eig, &n, a, 0.01, w).unwrap();
                for m in SymmetricMode::ALL {
                    if m.needs_upper_branch() && i < d {
                        continue;
                    }
                    for q in [Quadrature::X, Quadrature::Y] {
                        let x = appendix_spectrum(&sys, &c, 0.01, m, q).unwrap();
                        let y = weighted_mode_spectrum(&sys, &c, 0.01, m, q).unwrap();
                        let z = symmetric_quadrature_spectrum(s, d, i, m, q, w).unwrap().value();
                        assert!((x - z).abs() <= 1e-10 * z.abs().max(1.0), "{m:?} {q:?} {x} {z}");
                        assert!((y - z).abs() <= 1e-9 * z.abs().max(1.0), "{m:?} {q:?} {y} {z}");
                    }
                }
            }
        }
    }

    #[test]
    fn basis_map_inverts_polarization_combine() {
        let phi = 0.37;
        let t = bright_dark_to_signal_idler(phi);
        let (bs, bi) = (C64::new(0.3, -0.2), C64::new(-0.1, 0.4));
        let st = crate::model::PhaseSpaceState::classical(bs, bi);
        let (b, bp) = crate::model::PolarizationMode::bright(phi).amplitudes(&st);
        let (d, dp) = crate::model::PolarizationMode::dark(phi).amplitudes(&st);
        let out = t * CVec4::new(b, bp, d, dp);
        let want = CVec4::new(bs, bs.conj(), bi, bi.conj());
        assert!((out - want).norm() < 1e-15);
    }
}
