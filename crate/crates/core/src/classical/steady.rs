//! Symmetric stationary branch: the intensity cubic, turning points, the
//! bright/dark stability matrix and its closed-form spectrum.

use serde::{Deserialize, Serialize};

use crate::linalg::CMat4;
use crate::model::SystemParams;
use crate::{Error, Result, C64};

/// `[(I + 1 - sigma)^2 + delta^2] I`.
pub fn injection_for_intensity(intensity: f64, sigma: f64, delta: f64) -> f64 {
    let a = intensity + 1.0 - sigma;
    (a * a + delta * delta) * intensity
}

fn cubic_and_slope(i: f64, sigma: f64, delta: f64, injection: f64) -> (f64, f64) {
    let a = 1.0 - sigma;
    // I^3 + 2a I^2 + (a^2 + d^2) I - inj
    let c1 = a * a + delta * delta;
    let p = ((i + 2.0 * a) * i + c1) * i - injection;
    let dp = (3.0 * i + 4.0 * a) * i + c1;
    (p, dp)
}

fn polish(mut i: f64, sigma: f64, delta: f64, injection: f64) -> f64 {
    for _ in 0..8 {
        let (p, dp) = cubic_and_slope(i, sigma, delta, injection);
        if p == 0.0 || dp == 0.0 {
            break;
        }
        let next = i - p / dp;
        let (pn, _) = cubic_and_slope(next, sigma, delta, injection);
        if pn.abs() < p.abs() {
            i = next;
        } else {
            break;
        }
    }
    i
}

/// All real non-negative intensities on the symmetric branch, ascending.
///
/// Roots closer than `1e-7` (relative) are merged, so a fold yields two values.
pub fn steady_intensities(sigma: f64, delta: f64, injection: f64) -> Vec<f64> {
    let a = 1.0 - sigma;
    // monic cubic I^3 + b I^2 + c I + d
    let (b, c, d) = (2.0 * a, a * a + delta * delta, -injection);
    let shift = -b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = q * q / 4.0 + p * p * p / 27.0;

    let mut roots: Vec<f64> = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    } else if p == 0.0 {
        vec![shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    };
    for r in roots.iter_mut() {
        *r = polish(*r, sigma, delta, injection);
    }
    // a double root at a fold can be lost to rounding in the discriminant
    let dd = b * b - 3.0 * c;
    if dd >= 0.0 {
        for crit in [(-b - dd.sqrt()) / 3.0, (-b + dd.sqrt()) / 3.0] {
            let (pc, _) = cubic_and_slope(crit, sigma, delta, injection);
            if crit >= 0.0 && pc.abs() <= 1e-12 * injection.max(1.0) {
                roots.push(crit);
            }
        }
    }
    roots.retain(|r| *r >= -1e-12);
    for r in roots.iter_mut() {
        *r = r.max(0.0);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-7 * y.abs().max(1.0));
    roots
}

/// Fold intensities `(I-, I+)` of the S-shaped response, when it is S-shaped.
pub fn turning_points(sigma: f64, delta: f64) -> Option<(f64, f64)> {
    let s1 = sigma - 1.0;
    let disc = s1 * s1 - 3.0 * delta * delta;
    if s1 <= 0.0 || disc < -1e-12 * (1.0 + s1 * s1) {
        return None;
    }
    let r = disc.max(0.0).sqrt();
    Some(((2.0 * s1 - r) / 3.0, (2.0 * s1 + r) / 3.0))
}

/// Closed-form eigenvalues `[lambda_I+, lambda_I-, lambda_II+, lambda_II-]`.
pub fn symmetric_stability_eigs(intensity: f64, sigma: f64, delta: f64) -> [C64; 4] {
    let root = C64::new(intensity * intensity - delta * delta, 0.0).sqrt();
    let a = C64::new(-(1.0 + sigma), 0.0);
    let b = C64::new(sigma - 1.0 - 2.0 * intensity, 0.0);
    [a + root, a - root, b + root, b - root]
}

/// Stability matrix of the symmetric branch in the bright/dark quadrature basis.
pub fn bright_dark_matrix(intensity: f64, sigma: f64, delta: f64) -> CMat4 {
    let (i, s, d) = (intensity, sigma, delta);
    let m = nalgebra::Matrix4::new(
        -1.0 - 2.0 * i, s - i, -d, 0.0,
        s - i, -1.0 - 2.0 * i, 0.0, -d,
        d, 0.0, -1.0, s - i,
        0.0, d, s - i, -1.0,
    );
    m.map(|x| C64::new(x, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    UnstableStatic,
    UnstableOscillatory,
}

impl Stability {
    pub fn is_stable(self) -> bool {
        self == Stability::Stable
    }

    pub fn label(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::UnstableStatic => "unstable-static",
            Stability::UnstableOscillatory => "unstable-oscillatory",
        }
    }

    /// Classifies from any eigenvalue set.
    pub fn from_eigenvalues(eigs: &[C64]) -> Self {
        let lead = eigs
            .iter()
            .max_by(|a, b| a.re.total_cmp(&b.re))
            .copied()
            .unwrap_or_default();
        if lead.re < 0.0 {
            Stability::Stable
        } else if lead.im.abs() > 1e-12 {
            Stability::UnstableOscillatory
        } else {
            Stability::UnstableStatic
        }
    }
}

/// Stability of a symmetric-branch point and the factor responsible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchLabel {
    pub stability: Stability,
    /// `P_I` has a root with non-negative real part (pitchfork side).
    pub p1_unstable: bool,
    /// `P_II` has a root with non-negative real part (fold or Hopf side).
    pub p2_unstable: bool,
}

pub fn classify_branch(intensity: f64, sigma: f64, delta: f64) -> BranchLabel {
    let eigs = symmetric_stability_eigs(intensity, sigma, delta);
    BranchLabel {
        stability: Stability::from_eigenvalues(&eigs),
        p1_unstable: eigs[0].re >= 0.0,
        p2_unstable: eigs[2].re >= 0.0,
    }
}

/// Landmarks of the symmetric branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoints {
    pub pitchfork: f64,
    /// `(I_HB, omega_HB)`.
    pub hopf: Option<(f64, f64)>,
    /// `(I-, I+)`.
    pub turning: Option<(f64, f64)>,
}

pub fn special_points(sigma: f64, delta: f64) -> SpecialPoints {
    let pitchfork = ((1.0 + sigma).powi(2) + delta * delta).sqrt();
    let hopf = (delta > 0.0 && sigma > 1.0 && sigma < 1.0 + 2.0 * delta).then(|| {
        let i = 0.5 * (sigma - 1.0);
        (i, (delta * delta - i * i).sqrt())
    });
    SpecialPoints {
        pitchfork,
        hopf,
        turning: turning_points(sigma, delta),
    }
}

/// A classical fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub signal: C64,
    pub idler: C64,
    /// `sigma - beta_s beta_i`.
    pub pump: C64,
    /// `|beta_s|^2`.
    pub intensity: f64,
    /// `arg beta_s`.
    pub phi: f64,
    pub stability: Stability,
    pub eigenvalues: [C64; 4],
}

impl SteadyState {
    pub fn max_real_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Phase of the symmetric solution, `arg(I + 1 - sigma - i delta)`.
pub fn symmetric_phase(intensity: f64, sigma: f64, delta: f64) -> f64 {
    (-delta).atan2(intensity + 1.0 - sigma)
}

/// Symmetric fixed point `beta_s = conj(beta_i) = sqrt(I) e^{i phi}` of the given intensity.
pub fn symmetric_fixed_point(intensity: f64, sigma: f64, delta: f64) -> SteadyState {
    let phi = symmetric_phase(intensity, sigma, delta);
    let bs = C64::from_polar(intensity.sqrt(), phi);
    let eigenvalues = symmetric_stability_eigs(intensity, sigma, delta);
    SteadyState {
        signal: bs,
        idler: bs.conj(),
        pump: C64::new(sigma - intensity, 0.0),
        intensity,
        phi,
        stability: Stability::from_eigenvalues(&eigenvalues),
        eigenvalues,
    }
}

/// All symmetric fixed points for symmetric parameters, ascending in intensity.
pub fn symmetric_steady_states(params: &SystemParams) -> Result<Vec<SteadyState>> {
    if !params.is_symmetric() {
        return Err(Error::InvalidParameter(
            "symmetric steady states require delta_i = -delta_s and phi0 = pi/4".into(),
        ));
    }
    Ok(
        steady_intensities(params.sigma, params.delta_s, params.injection)
            .into_iter()
            .map(|i| symmetric_fixed_point(i, params.sigma, params.delta_s))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injection_examples() {
        assert_eq!(injection_for_intensity(0.0, 2.8, 0.6), 0.0);
        assert!((injection_for_intensity(1.2, 2.8, 0.6) - 0.864).abs() < 1e-14);
        assert!((injection_for_intensity(0.1, 1.2, 0.2) - 0.005).abs() < 1e-15);
    }

    #[test]
    fn roots_bistable_window() {
        let r = steady_intensities(2.8, 0.6, 0.864);
        assert_eq!(r.len(), 3);
        // (I - 1.2)(I^2 - 2.4 I + 0.72)
        let s = 0.72_f64.sqrt();
        let want = [1.2 - s, 1.2, 1.2 + s];
        for (g, w) in r.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
        assert!((r[0] - 0.35147).abs() < 1e-5 && (r[2] - 2.04853).abs() < 1e-5);
    }

    #[test]
    fn roots_simple_cases() {
        assert_eq!(steady_intensities(0.5, 0.6, 0.0), vec![0.0]);
        assert_eq!(steady_intensities(2.8, 0.6, 50.0).len(), 1);
    }

    #[test]
    fn fold_gives_two_roots() {
        let (lo, _) = turning_points(2.8, 0.6).unwrap();
        let inj = injection_for_intensity(lo, 2.8, 0.6);
        let r = steady_intensities(2.8, 0.6, inj);
        assert_eq!(r.len(), 2, "{r:?}");
        assert!(r.iter().any(|x| (x - lo).abs() < 1e-6));
    }

    #[test]
    fn turning_point_examples() {
        let (lo, hi) = turning_points(2.8, 0.6).unwrap();
        assert!((lo - 0.71010).abs() < 1e-5 && (hi - 1.68990).abs() < 1e-5);
        assert!(turning_points(1.5, 0.6).is_none());
        let s = 1.0 + 3.0_f64.sqrt() * 0.6;
        let (lo, hi) = turning_points(s, 0.6).unwrap();
        assert!((lo - hi).abs() < 1e-6 && (lo - 0.69282).abs() < 1e-5);
    }

    #[test]
    fn eigenvalue_examples() {
        let e = symmetric_stability_eigs(0.0, 0.5, 0.6);
        assert!((e[0] - C64::new(-1.5, 0.6)).norm() < 1e-15);
        assert!((e[2] - C64::new(-0.5, 0.6)).norm() < 1e-15);

        let e = symmetric_stability_eigs(0.1, 1.2, 0.2);
        assert!(e[2].re.abs() < 1e-15 && (e[2].im.abs() - 0.173205).abs() < 1e-6);
        assert!((e[0].re + 2.2).abs() < 1e-15);

        let ipb = special_points(1.0, 0.2).pitchfork;
        let e = symmetric_stability_eigs(ipb, 1.0, 0.2);
        assert!(e[0].re.abs() < 1e-14);
    }

    #[test]
    fn special_point_examples() {
        let sp = special_points(1.0, 0.2);
        assert!((sp.pitchfork - 2.00998).abs() < 1e-5 && sp.hopf.is_none());
        let sp = special_points(1.2, 0.2);
        assert!((sp.pitchfork - 4.88_f64.sqrt()).abs() < 1e-14);
        let (i, w) = sp.hopf.unwrap();
        assert!((i - 0.1).abs() < 1e-15 && (w - 0.17321).abs() < 1e-5);
        let (i, w) = special_points(1.98, 0.6).hopf.unwrap();
        assert!((i - 0.49).abs() < 1e-14 && (w - 0.34627).abs() < 1e-5);
    }

    #[test]
    fn classification_examples() {
        let mid = classify_branch(1.2, 2.8, 0.6);
        assert_eq!(mid.stability, Stability::UnstableStatic);
        assert!(mid.p2_unstable && !mid.p1_unstable);
        let e = symmetric_stability_eigs(1.2, 2.8, 0.6);
        assert!((e[2].re - 0.43923).abs() < 1e-5);

        let low = classify_branch(0.05, 1.2, 0.2);
        assert_eq!(low.stability, Stability::UnstableOscillatory);

        for k in 0..50 {
            let i = 1.6 * k as f64 / 50.0;
            assert!(classify_branch(i, 0.5, 0.6).stability.is_stable());
        }
    }

    #[test]
    fn symmetric_fixed_point_solves_balance() {
        let (s, d) = (2.8, 0.6);
        for i in steady_intensities(s, d, 0.864) {
            let fp = symmetric_fixed_point(i, s, d);
            let eps = 0.864_f64.sqrt();
            // eps - (1 + i d) b + (sigma - I) b
            let r = eps - C64::new(1.0, d) * fp.signal + (s - i) * fp.signal;
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn hopf_below_turning_points() {
        for k in 1..40 {
            let s = 1.0 + 0.05 * k as f64;
            let d = 0.6;
            let sp = special_points(s, d);
            if let Some((ihb, _)) = sp.hopf {
                assert!(ihb < sp.pitchfork);
                if let Some((lo, _)) = sp.turning {
                    assert!(ihb < lo);
                }
            }
            if let Some((_, hi)) = sp.turning {
                assert!(sp.pitchfork > hi);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn roots_meet_residual(s in 0.0..3.0f64, d in 0.0..1.0f64, inj in 0.0..5.0f64) {
            for i in steady_intensities(s, d, inj) {
                let r = inj - injection_for_intensity(i, s, d);
                proptest::prop_assert!(r.abs() <= 1e-12 * inj.max(1.0), "residual {r}");
            }
            let n = steady_intensities(s, d, inj).len();
            proptest::prop_assert!((1..=3).contains(&n));
        }

        #[test]
        fn matrix_matches_closed_form(i in 0.0..3.0f64, s in 0.0..3.0f64, d in 0.01..1.0f64) {
            let l = bright_dark_matrix(i, s, d);
            let num = crate::classical::matrix_eigenvalues(&l);
            let exact = symmetric_stability_eigs(i, s, d);
            // near I = delta the pairs coalesce into a Jordan block and are
            // only determined to sqrt(machine epsilon)
            let tol = if (i - d).abs() < 1e-3 { 1e-6 } else { 1e-10 };
            let dist = crate::linalg::multiset_distance(&num, &exact);
            proptest::prop_assert!(dist <= tol, "{num:?} vs {exact:?}");
        }

        #[test]
        fn folds_have_zero_eigenvalue(s in 1.1..3.0f64, d in 0.0..0.6f64) {
            if let Some((lo, hi)) = turning_points(s, d) {
                for i in [lo, hi] {
                    let e = symmetric_stability_eigs(i, s, d);
                    let m = e[2].norm().min(e[3].norm());
                    proptest::prop_assert!(m <= 1e-10, "fold eigenvalue {m}");
                }
            }
        }
    }
}
