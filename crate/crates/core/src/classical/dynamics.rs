//! Deterministic drift of the positive-P equations and an adaptive
//! Dormand-Prince integrator with attractor classification.

use serde::{Deserialize, Serialize};

use crate::model::{PhaseSpaceState, SystemParams};
use crate::{Error, Result, C64};

/// Precomputed drift coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    pub sigma: f64,
    pub eps_s: f64,
    pub eps_i: f64,
    /// `1 + i delta_s`.
    pub loss_s: C64,
    /// `1 + i delta_i`.
    pub loss_i: C64,
    pub kappa: f64,
}

impl Drift {
    pub fn new(params: &SystemParams) -> Self {
        let (eps_s, eps_i) = params.injection_amplitudes();
        Self {
            sigma: params.sigma,
            eps_s,
            eps_i,
            loss_s: C64::new(1.0, params.delta_s),
            loss_i: C64::new(1.0, params.delta_i),
            kappa: params.kappa,
        }
    }

    /// Adiabatic model over `(b_s, b_s+, b_i, b_i+)`.
    #[inline]
    pub fn adiabatic(&self, y: &[C64; 4]) -> [C64; 4] {
        let [s, sp, i, ip] = *y;
        let p = self.sigma - s * i;
        let pp = self.sigma - sp * ip;
        self.signal_idler(p, pp, y)
    }

    /// Full model over `(b_p, b_p+, b_s, b_s+, b_i, b_i+)`.
    #[inline]
    pub fn full(&self, y: &[C64; 6]) -> [C64; 6] {
        let [p, pp, s, sp, i, ip] = *y;
        let [ds, dsp, di, dip] = self.signal_idler(p, pp, &[s, sp, i, ip]);
        [
            self.kappa * (self.sigma - p - s * i),
            self.kappa * (self.sigma - pp - sp * ip),
            ds,
            dsp,
            di,
            dip,
        ]
    }

    #[inline]
    fn signal_idler(&self, p: C64, pp: C64, y: &[C64; 4]) -> [C64; 4] {
        let [s, sp, i, ip] = *y;
        [
            self.eps_s - self.loss_s * s + p * ip,
            self.eps_s - self.loss_s.conj() * sp + pp * i,
            self.eps_i - self.loss_i * i + p * sp,
            self.eps_i - self.loss_i.conj() * ip + pp * s,
        ]
    }
}

/// Drift of the noise-free equations; the pump pair is included when the
/// state carries one and the parameters are non-adiabatic.
pub fn classical_rhs(state: &PhaseSpaceState, params: &SystemParams) -> PhaseSpaceState {
    let d = Drift::new(params);
    match (state.pump, params.adiabatic) {
        (Some((p, pp)), false) => {
            let [dp, dpp, s, sp, i, ip] =
                d.full(&[p, pp, state.signal, state.signal_plus, state.idler, state.idler_plus]);
            PhaseSpaceState {
                signal: s,
                signal_plus: sp,
                idler: i,
                idler_plus: ip,
                pump: Some((dp, dpp)),
            }
        }
        _ => {
            let [s, sp, i, ip] =
                d.adiabatic(&[state.signal, state.signal_plus, state.idler, state.idler_plus]);
            PhaseSpaceState {
                signal: s,
                signal_plus: sp,
                idler: i,
                idler_plus: ip,
                pump: None,
            }
        }
    }
}

fn state_to_vec(state: &PhaseSpaceState) -> [C64; 4] {
    [state.signal, state.signal_plus, state.idler, state.idler_plus]
}

fn vec_to_state(y: &[C64; 4]) -> PhaseSpaceState {
    PhaseSpaceState {
        signal: y[0],
        signal_plus: y[1],
        idler: y[2],
        idler_plus: y[3],
        pump: None,
    }
}

/// Settings for the embedded Runge-Kutta integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    /// Time discarded before attractor classification; `None` means 200.
    pub transient: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.05,
            initial_step: 1e-3,
            transient: None,
        }
    }
}

// Dormand-Prince 5(4) tableau
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[C64; N], terms: &[(f64, &[C64; N])], h: f64) -> [C64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for j in 0..N {
            out[j] += k[j] * (h * c);
        }
    }
    out
}

/// Integrates `y' = f(y)` from `t = 0` to `t_end` with Dormand-Prince 5(4),
/// calling `observe(t, y)` at the start and after every accepted step.
pub fn dopri5<const N: usize, F, O>(
    f: F,
    y0: [C64; N],
    t_end: f64,
    opts: &IntegratorOptions,
    mut observe: O,
) -> Result<[C64; N]>
where
    F: Fn(&[C64; N]) -> [C64; N],
    O: FnMut(f64, &[C64; N]),
{
    let mut t = 0.0;
    let mut y = y0;
    let mut h = opts.initial_step.min(opts.max_step).min(t_end.max(f64::MIN_POSITIVE));
    let mut k1 = f(&y);
    observe(t, &y);
    let mut rejects = 0usize;
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let k2 = f(&axpy(&y, &[(A21, &k1)], h));
        let k3 = f(&axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(&axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(&axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        let k6 = f(&axpy(
            &y,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
        ));
        let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(&y_new);
        let mut err = 0.0;
        for j in 0..N {
            let e = (k1[j] * E1 + k3[j] * E3 + k4[j] * E4 + k5[j] * E5 + k6[j] * E6 + k7[j] * E7) * h;
            let sc = opts.atol + opts.rtol * y[j].norm().max(y_new[j].norm());
            err += (e.norm() / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::NonConvergence(format!("state diverged at t = {t:.6}")));
        }
        if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
            observe(t, &y);
            rejects = 0;
        } else {
            rejects += 1;
            if rejects > 60 || h < 1e-14 {
                return Err(Error::NonConvergence(format!("step size underflow at t = {t:.6}")));
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(opts.max_step);
    }
    Ok(y)
}

/// Long-time behaviour of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Attractor {
    FixedPoint {
        signal: C64,
        idler: C64,
    },
    PeriodicOrbit {
        period: f64,
        /// `(max + min) / 2` of `|beta_s|^2` over the recorded orbit.
        mean_intensity: f64,
        max_intensity: f64,
        min_intensity: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseSpaceState>,
    pub attractor: Attractor,
    /// `max |beta_s - conj(beta_i)|` along the trajectory.
    pub symmetry_defect: f64,
}

/// Local maxima of `v` with parabolic refinement, as `(time, value)`.
fn local_maxima(t: &[f64], v: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 1..v.len().saturating_sub(1) {
        if v[k] > v[k - 1] && v[k] >= v[k + 1] {
            let (t0, t1, t2) = (t[k - 1], t[k], t[k + 1]);
            let (v0, v1, v2) = (v[k - 1], v[k], v[k + 1]);
            // vertex of the interpolating parabola on a non-uniform grid
            let d01 = (v1 - v0) / (t1 - t0);
            let d12 = (v2 - v1) / (t2 - t1);
            let a = (d12 - d01) / (t2 - t0);
            if a < 0.0 {
                // p(t) = v0 + d01 (t - t0) + a (t - t0)(t - t1)
                let tv = (0.5 * (t0 + t1) - d01 / (2.0 * a)).clamp(t0, t2);
                let vv = v0 + d01 * (tv - t0) + a * (tv - t0) * (tv - t1);
                let vv = if vv.is_finite() && vv >= v1 { vv } else { v1 };
                out.push((tv, vv));
            } else {
                out.push((t1, v1));
            }
        }
    }
    out
}

/// Integrates the adiabatic noise-free equations up to `horizon` and
/// classifies the attractor reached.
///
/// A fixed point is declared when the drift norm at the end is below `1e-9`.
/// Otherwise successive maxima of `Re beta_s` after the transient must agree
/// to `1e-6` (relative) for a periodic orbit.
pub fn integrate_classical(
    state0: &PhaseSpaceState,
    params: &SystemParams,
    horizon: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    let drift = Drift::new(params);
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut defect = 0.0_f64;
    let y_end = dopri5(
        |y| drift.adiabatic(y),
        state_to_vec(state0),
        horizon,
        opts,
        |t, y| {
            times.push(t);
            states.push(vec_to_state(y));
            defect = defect.max((y[0] - y[2].conj()).norm());
        },
    )?;
    let f_end = drift.adiabatic(&y_end);
    let speed = f_end.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let attractor = if speed < 1e-9 {
        Attractor::FixedPoint {
            signal: y_end[0],
            idler: y_end[2],
        }
    } else {
        let transient = opts.transient.unwrap_or(200.0).min(0.5 * horizon);
        let start = times.partition_point(|&t| t < transient);
        let t = &times[start..];
        let re: Vec<f64> = states[start..].iter().map(|s| s.signal.re).collect();
        let maxima = local_maxima(t, &re);
        if maxima.len() < 4 {
            return Err(Error::NonConvergence(format!(
                "no fixed point (drift {speed:.3e}) and only {} maxima after the transient",
                maxima.len()
            )));
        }
        let tail = &maxima[maxima.len() - 4..];
        let scale = tail.iter().map(|m| m.1.abs()).fold(0.0, f64::max).max(1e-12);
        let spread = tail.windows(2).map(|w| (w[1].1 - w[0].1).abs()).fold(0.0, f64::max);
        if spread > 1e-6 * scale {
            return Err(Error::NonConvergence(format!(
                "successive maxima differ by {:.3e} (relative)",
                spread / scale
            )));
        }
        let period = (tail[3].0 - tail[0].0) / 3.0;
        let window_start = times.partition_point(|&x| x < times[times.len() - 1] - 2.0 * period);
        let inten: Vec<f64> = states[window_start..]
            .iter()
            .map(|s| s.signal.norm_sqr())
            .collect();
        let tw = &times[window_start..];
        let mut imax = inten.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut imin = inten.iter().copied().fold(f64::INFINITY, f64::min);
        // refine extrema between samples
        if let Some(m) = local_maxima(tw, &inten).iter().map(|m| m.1).reduce(f64::max) {
            imax = imax.max(m);
        }
        let neg: Vec<f64> = inten.iter().map(|x| -x).collect();
        if let Some(m) = local_maxima(tw, &neg).iter().map(|m| -m.1).reduce(f64::min) {
            imin = imin.min(m);
        }
        Attractor::PeriodicOrbit {
            period,
            mean_intensity: 0.5 * (imax + imin),
            max_intensity: imax,
            min_intensity: imin,
        }
    };
    Ok(Trajectory {
        times,
        states,
        attractor,
        symmetry_defect: defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::steady::{steady_intensities, symmetric_fixed_point};

    #[test]
    fn linear_term_only() {
        let p = SystemParams::symmetric(1.2, 0.2, 0.25).unwrap();
        let st = PhaseSpaceState::classical(C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let d = classical_rhs(&st, &p);
        assert!((d.signal - 0.5).norm() < 1e-15 && (d.idler - 0.5).norm() < 1e-15);
    }

    #[test]
    fn fixed_point_has_zero_drift() {
        let p = SystemParams::symmetric(2.8, 0.6, 0.864).unwrap();
        for i in steady_intensities(2.8, 0.6, 0.864) {
            let fp = symmetric_fixed_point(i, 2.8, 0.6);
            let d = classical_rhs(&PhaseSpaceState::classical(fp.signal, fp.idler), &p);
            assert!(d.max_norm() < 1e-12, "{}", d.max_norm());
        }
    }

    #[test]
    fn full_model_fixed_point_has_zero_drift() {
        let p = SystemParams::symmetric(2.8, 0.6, 0.864).unwrap().with_adiabatic(false);
        let fp = symmetric_fixed_point(1.2, 2.8, 0.6);
        let st = PhaseSpaceState::classical_with_pump(fp.pump, fp.signal, fp.idler);
        let d = classical_rhs(&st, &p);
        assert!(d.max_norm() < 1e-12);
    }

    #[test]
    fn free_running_orbit() {
        // I = sigma - 1 on the free-running circle, rotating at -delta
        let (s, d) = (1.5, 0.3);
        let p = SystemParams::symmetric(s, d, 0.0).unwrap();
        let amp = (s - 1.0_f64).sqrt();
        let st = PhaseSpaceState::classical(C64::new(amp, 0.0), C64::new(amp, 0.0));
        let r = classical_rhs(&st, &p);
        // d/dt (amp e^{-i d t}) = -i d amp
        assert!((r.signal - C64::new(0.0, -d * amp)).norm() < 1e-14);
        assert!((r.idler - C64::new(0.0, d * amp)).norm() < 1e-14);
    }

    #[test]
    fn converges_to_symmetric_fixed_point() {
        let p = SystemParams::symmetric(1.2, 0.2, 0.05).unwrap();
        let st = PhaseSpaceState::classical(C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let tr = integrate_classical(&st, &p, 400.0, &IntegratorOptions::default()).unwrap();
        let roots = steady_intensities(1.2, 0.2, 0.05);
        match tr.attractor {
            Attractor::FixedPoint { signal, idler } => {
                assert!(roots.iter().any(|i| (signal.norm_sqr() - i).abs() < 1e-8));
                assert!((signal - idler.conj()).norm() < 1e-10);
            }
            other => panic!("expected fixed point, got {other:?}"),
        }
    }

    #[test]
    fn periodic_orbit_below_locking() {
        let p = SystemParams::symmetric(1.2, 0.2, 0.001).unwrap();
        let st = PhaseSpaceState::classical(C64::new(0.1, 0.0), C64::new(0.1, 0.0));
        let tr = integrate_classical(&st, &p, 1500.0, &IntegratorOptions::default()).unwrap();
        assert!(matches!(tr.attractor, Attractor::PeriodicOrbit { .. }), "{:?}", tr.attractor);
        assert!(tr.symmetry_defect <= 1e-8);
    }

    #[test]
    fn decays_below_threshold() {
        let p = SystemParams::symmetric(0.5, 0.6, 0.0).unwrap();
        let st = PhaseSpaceState::classical(C64::new(0.05, 0.02), C64::new(-0.03, 0.01));
        let tr = integrate_classical(&st, &p, 100.0, &IntegratorOptions::default()).unwrap();
        match tr.attractor {
            Attractor::FixedPoint { signal, idler } => assert!(signal.norm() < 1e-9 && idler.norm() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn preserves_conjugacy() {
        let p = SystemParams::new(1.2, 0.3, -0.1, 0.01).unwrap();
        let st = PhaseSpaceState::classical(C64::new(0.2, 0.1), C64::new(-0.1, 0.3));
        let tr = integrate_classical(&st, &p, 50.0, &IntegratorOptions::default());
        let tr = match tr {
            Ok(t) => t,
            Err(Error::NonConvergence(_)) => return,
            Err(e) => panic!("{e}"),
        };
        for s in &tr.states {
            assert!(s.conjugacy_defect() < 1e-12);
        }
    }

    #[test]
    fn dopri_exponential() {
        let y = dopri5(
            |y: &[C64; 1]| [y[0] * C64::new(-1.0, 2.0)],
            [C64::new(1.0, 0.0)],
            3.0,
            &IntegratorOptions::default(),
            |_, _| {},
        )
        .unwrap();
        let exact = (C64::new(-1.0, 2.0) * 3.0).exp();
        assert!((y[0] - exact).norm() < 1e-9);
    }
}
