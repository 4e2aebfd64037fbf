//! Fixed points and stability away from the symmetric configuration, and the
//! numerical Hopf locator.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::dynamics::{dopri5, Drift, IntegratorOptions};
use super::steady::{special_points, steady_intensities, symmetric_fixed_point, Stability, SteadyState};
use crate::linalg::{characteristic_polynomial, left_eigensystem, quartic_roots, CMat4};
use crate::model::SystemParams;
use crate::{Error, Result, C64};

/// Residual above which an input is not accepted as a fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-8;

fn drift_residual(params: &SystemParams, bs: C64, bi: C64) -> f64 {
    let d = Drift::new(params).adiabatic(&[bs, bs.conj(), bi, bi.conj()]);
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn stability_matrix_unchecked(params: &SystemParams, bs: C64, bi: C64) -> CMat4 {
    let bp = params.sigma - bs * bi;
    let theta_s = C64::new(-1.0 - bi.norm_sqr(), -params.delta_s);
    let theta_i = C64::new(-1.0 - bs.norm_sqr(), -params.delta_i);
    let x = bs * bi.conj();
    let z = C64::new(0.0, 0.0);
    Matrix4::new(
        theta_s, z, -x, bp,
        z, theta_s.conj(), bp.conj(), -x.conj(),
        -x.conj(), bp, theta_i, z,
        bp.conj(), -x, z, theta_i.conj(),
    )
}

/// Linear stability matrix over `(b_s, b_s+, b_i, b_i+)` at a fixed point.
pub fn asym_stability_matrix(bs: C64, bi: C64, params: &SystemParams) -> Result<CMat4> {
    let r = drift_residual(params, bs, bi);
    if !(r <= FIXED_POINT_TOL) {
        return Err(Error::NotFixedPoint(r));
    }
    Ok(stability_matrix_unchecked(params, bs, bi))
}

/// Eigenvalues sorted by real part; falls back to bare polynomial roots
/// when the matrix is defective.
pub fn matrix_eigenvalues(l: &CMat4) -> [C64; 4] {
    let mut e = left_eigensystem(l)
        .map(|es| es.eigenvalues)
        .unwrap_or_else(|_| quartic_roots(&characteristic_polynomial(l)));
    e.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    e
}

fn steady_from(params: &SystemParams, bs: C64, bi: C64) -> SteadyState {
    let l = stability_matrix_unchecked(params, bs, bi);
    let eigenvalues = matrix_eigenvalues(&l);
    SteadyState {
        signal: bs,
        idler: bi,
        pump: params.sigma - bs * bi,
        intensity: bs.norm_sqr(),
        phi: bs.arg(),
        stability: Stability::from_eigenvalues(&eigenvalues),
        eigenvalues,
    }
}

/// Damped Newton iteration for a fixed point on the real 4-dimensional space
/// `(Re b_s, Im b_s, Re b_i, Im b_i)`.
pub fn newton_fixed_point(params: &SystemParams, seed: (C64, C64)) -> Result<SteadyState> {
    let drift = Drift::new(params);
    let residual = |bs: C64, bi: C64| -> Vector4<f64> {
        let d = drift.adiabatic(&[bs, bs.conj(), bi, bi.conj()]);
        Vector4::new(d[0].re, d[0].im, d[2].re, d[2].im)
    };
    let (mut bs, mut bi) = seed;
    let mut f = residual(bs, bi);
    for _ in 0..200 {
        if f.norm() < 1e-14 * (1.0 + bs.norm() + bi.norm()) {
            break;
        }
        let l = stability_matrix_unchecked(params, bs, bi);
        // d F = a dz + b dz*, so dF/dx = a + b and dF/dy = i (a - b)
        let mut jac = Matrix4::<f64>::zeros();
        for (row, eq) in [(0usize, 0usize), (2, 2)] {
            for (col, var) in [(0usize, 0usize), (2, 2)] {
                let a = l[(eq, var)];
                let b = l[(eq, var + 1)];
                let dx = a + b;
                let dy = C64::new(0.0, 1.0) * (a - b);
                jac[(row, col)] = dx.re;
                jac[(row + 1, col)] = dx.im;
                jac[(row, col + 1)] = dy.re;
                jac[(row + 1, col + 1)] = dy.im;
            }
        }
        let step = jac
            .lu()
            .solve(&(-f))
            .ok_or_else(|| Error::NonConvergence("singular Newton Jacobian".into()))?;
        let mut lambda = 1.0;
        loop {
            let ns = bs + C64::new(step[0], step[1]) * lambda;
            let ni = bi + C64::new(step[2], step[3]) * lambda;
            let nf = residual(ns, ni);
            if nf.norm() < f.norm() || lambda < 1e-6 {
                bs = ns;
                bi = ni;
                f = nf;
                break;
            }
            lambda *= 0.5;
        }
    }
    let r = drift_residual(params, bs, bi);
    if r > 1e-10 {
        return Err(Error::NonConvergence(format!("Newton stalled with residual {r:.3e}")));
    }
    Ok(steady_from(params, bs, bi))
}

/// Fixed point reached by integrating from `seed` for `horizon`, polished by Newton.
pub fn relax_to_fixed_point(
    params: &SystemParams,
    seed: (C64, C64),
    horizon: f64,
) -> Result<SteadyState> {
    let drift = Drift::new(params);
    let opts = IntegratorOptions {
        max_step: 0.1,
        ..IntegratorOptions::default()
    };
    let y = dopri5(
        |y| drift.adiabatic(y),
        [seed.0, seed.0.conj(), seed.1, seed.1.conj()],
        horizon,
        &opts,
        |_, _| {},
    )?;
    newton_fixed_point(params, (y[0], y[2]))
}

/// Result of [`locate_hopf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub injection: f64,
    pub fixed_point: SteadyState,
    /// `|Im lambda|` of the critical pair.
    pub omega: f64,
    /// Leading real part at the returned injection.
    pub max_real: f64,
    pub bisection_steps: usize,
}

fn leading(eigs: &[C64; 4]) -> C64 {
    *eigs.iter().max_by(|a, b| a.re.total_cmp(&b.re)).expect("four eigenvalues")
}

/// Default upper end of the search: a stable point of the symmetric proxy
/// with the same mean detuning, as `(injection, intensity)`.
fn default_start(sigma: f64, delta: f64) -> (f64, f64) {
    let sp = special_points(sigma, delta);
    let i_low = sp.hopf.map(|h| h.0).unwrap_or(0.0);
    let i_cap = sp.turning.map(|t| t.0).unwrap_or(sp.pitchfork).min(sp.pitchfork);
    let mut candidates = vec![i_low + 0.5 * (i_cap - i_low)];
    if let Some((_, hi)) = sp.turning {
        candidates.push(0.5 * (hi + sp.pitchfork));
    }
    let i = candidates
        .iter()
        .copied()
        .find(|&i| super::steady::classify_branch(i, sigma, delta).stability.is_stable())
        .unwrap_or(candidates[0]);
    (super::steady::injection_for_intensity(i, sigma, delta), i)
}

/// Lowers the injection along the stable locked branch until the leading
/// eigenvalue crosses the imaginary axis, then bisects the crossing.
///
/// `bracket` is `(low, high)` in injection; by default the search starts on a
/// stable part of the symmetric proxy and continues down to zero. Losing the
/// branch altogether (Newton failure past a fold) counts as a crossing.
pub fn locate_hopf(params: &SystemParams, bracket: Option<(f64, f64)>) -> Result<HopfPoint> {
    let sigma = params.sigma;
    if sigma <= 1.0 {
        return Err(Error::NoHopfInBracket(format!(
            "sigma = {sigma} is not above the free-running threshold"
        )));
    }
    let delta = params.mean_detuning().abs();
    let (default_inj, default_i) = default_start(sigma, delta);
    let (lo, hi) = bracket.unwrap_or((0.0, default_inj));
    if !(hi > lo && lo >= 0.0) {
        return Err(Error::InvalidParameter(format!("bad injection bracket ({lo}, {hi})")));
    }
    let at = |inj: f64| params.with_injection(inj);

    // stable locked point at the top of the bracket
    let p_hi = at(hi)?;
    let seed_i = if bracket.is_none() {
        default_i
    } else {
        let roots = steady_intensities(sigma, delta, hi);
        roots
            .iter()
            .copied()
            .find(|&i| super::steady::classify_branch(i, sigma, delta).stability.is_stable())
            .or_else(|| roots.first().copied())
            .unwrap_or(0.0)
    };
    let proxy = symmetric_fixed_point(seed_i, sigma, delta);
    let proxy = (proxy.signal, proxy.idler);
    let mut upper = match newton_fixed_point(&p_hi, proxy) {
        Ok(fp) if fp.stability.is_stable() => fp,
        _ => relax_to_fixed_point(&p_hi, proxy, 2000.0)?,
    };
    if !upper.stability.is_stable() {
        return Err(Error::NoHopfInBracket(format!(
            "fixed point at the upper injection {hi} is not stable"
        )));
    }
    let mut inj_hi = hi;
    let stable_at = |inj: f64, seed: &SteadyState| -> Result<Option<SteadyState>> {
        match newton_fixed_point(&at(inj)?, (seed.signal, seed.idler)) {
            Ok(fp) if fp.max_real_eigenvalue() <= 0.0 => Ok(Some(fp)),
            Ok(_) | Err(Error::NonConvergence(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };

    // march down until the leading real part turns positive
    let floor = lo.max(1e-12 * hi);
    let mut inj_lo = None;
    while inj_hi > floor {
        let next = (inj_hi * 0.97).max(floor);
        match stable_at(next, &upper)? {
            Some(fp) => {
                upper = fp;
                inj_hi = next;
            }
            None => {
                inj_lo = Some(next);
                break;
            }
        }
    }
    let Some(mut inj_lo) = inj_lo else {
        return Err(Error::NoHopfInBracket(format!(
            "leading eigenvalue stays negative for injection in [{lo}, {hi}]"
        )));
    };

    let mut steps = 0usize;
    while (inj_hi - inj_lo) > 1e-12 && upper.max_real_eigenvalue().abs() > 1e-8 && steps < 200 {
        let mid = 0.5 * (inj_lo + inj_hi);
        steps += 1;
        match stable_at(mid, &upper)? {
            Some(fp) => {
                upper = fp;
                inj_hi = mid;
            }
            None => inj_lo = mid,
        }
    }
    let crit = leading(&upper.eigenvalues);
    if crit.im.abs() <= 1e-6 {
        return Err(Error::StaticCrossing {
            injection: inj_hi,
            imag: crit.im.abs(),
        });
    }
    Ok(HopfPoint {
        injection: inj_hi,
        fixed_point: upper,
        omega: crit.im.abs(),
        max_real: crit.re,
        bisection_steps: steps,
    })
}
