//! Euler-Maruyama integration of the positive-P Langevin equations with
//! streaming Welch accumulators.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::classical::{asym_stability_matrix, matrix_eigenvalues};
use crate::model::{PhaseSpaceState, SystemParams};
use crate::quantum::STABILITY_MARGIN;
use crate::{par_map, Error, Result, C64};

/// Upper bound on the automatic transient.
pub const TRANSIENT_CAP: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub dt: f64,
    /// Sampled time after the transient.
    pub horizon: f64,
    /// `None`: `20 / min |Re lambda|` of the start point, capped.
    pub transient: Option<f64>,
    pub trajectories: usize,
    pub seed: u64,
    /// Integration steps between stored samples.
    pub sample_every: usize,
    pub segment_len: usize,
    /// Frequencies at which periodograms are accumulated (snapped to bins).
    pub omegas: Vec<f64>,
    pub cutoff: f64,
    pub discard_branch_crossings: bool,
    pub max_divergence_fraction: f64,
    /// Skip the stable-fixed-point precondition.
    pub exploratory: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 2000.0,
            transient: None,
            trajectories: 200,
            seed: 0,
            sample_every: 10,
            segment_len: 4096,
            omegas: vec![0.0],
            cutoff: 1e6,
            discard_branch_crossings: true,
            max_divergence_fraction: 0.1,
            exploratory: false,
        }
    }
}

impl OracleOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be positive");
        }
        if matches!(self.transient, Some(t) if !(t >= 0.0 && t.is_finite())) {
            return bad("transient must be non-negative");
        }
        if self.trajectories == 0 {
            return bad("need at least one trajectory");
        }
        if self.sample_every == 0 || self.segment_len < 4 || self.segment_len % 2 != 0 {
            return bad("sample_every >= 1 and an even segment length >= 4 required");
        }
        if self.omegas.iter().any(|w| !w.is_finite()) {
            return bad("frequencies must be finite");
        }
        if !(self.cutoff > 0.0) || !(0.0..=1.0).contains(&self.max_divergence_fraction) {
            return bad("cutoff must be positive and divergence fraction in [0, 1]");
        }
        Ok(())
    }

    pub fn sample_dt(&self) -> f64 {
        self.dt * self.sample_every as f64
    }

    /// Angular frequency spacing of the periodogram.
    pub fn bin_width(&self) -> f64 {
        std::f64::consts::TAU / (self.segment_len as f64 * self.sample_dt())
    }
}

/// Periodogram sums at one frequency bin.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BinAccumulator {
    /// `sum_seg F_a(Omega) F_b(-Omega)`.
    pub prod: [[C64; 4]; 4],
    pub pos: [C64; 4],
    pub neg: [C64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryAccumulator {
    pub index: usize,
    pub samples: u64,
    pub segments: u64,
    /// Sums of `(x_s, y_s, x_i, y_i)` over samples.
    pub channel_sum: [C64; 4],
    /// Sums of `(b_s, b_s+, b_i, b_i+)` over samples.
    pub amplitude_sum: [C64; 4],
    /// Sum of `b_s b_s+`.
    pub number_sum: C64,
    pub bins: Vec<BinAccumulator>,
    pub branch_crossings: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TrajectoryStatus {
    Completed,
    Diverged { time: f64, branch_crossing: bool },
}

/// A completed ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub params: SystemParams,
    pub options: OracleOptions,
    pub transient: f64,
    /// Start state in the frame rotated by `theta0`.
    pub start: PhaseSpaceState,
    /// `(bin index, angular frequency)` per accumulated bin.
    pub bins: Vec<(usize, f64)>,
    pub statuses: Vec<TrajectoryStatus>,
    /// Completed trajectories in index order.
    pub accumulators: Vec<TrajectoryAccumulator>,
    /// Hann window transform at `(+k, -k)` per bin.
    pub window_dft: Vec<(C64, C64)>,
    pub window_power: f64,
    pub warnings: Vec<String>,
}

impl EnsembleRun {
    pub fn diverged(&self) -> usize {
        self.statuses.len() - self.accumulators.len()
    }

    pub fn divergence_fraction(&self) -> f64 {
        self.diverged() as f64 / self.statuses.len() as f64
    }

    pub fn total_segments(&self) -> u64 {
        self.accumulators.iter().map(|a| a.segments).sum()
    }
}

/// Rotation `b_s -> b_s e^{i theta0}`, `b_i -> b_i e^{-i theta0}` that
/// carries a `theta0 = 0` solution to one for the given `theta0`.
pub fn rotate_by_theta0(state: &PhaseSpaceState, theta0: f64) -> PhaseSpaceState {
    let e = C64::from_polar(1.0, theta0);
    PhaseSpaceState {
        signal: state.signal * e,
        signal_plus: state.signal_plus * e.conj(),
        idler: state.idler * e.conj(),
        idler_plus: state.idler_plus * e,
        pump: state.pump,
    }
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| 0.5 * (1.0 - (std::f64::consts::TAU * j as f64 / n as f64).cos()))
        .collect()
}

fn window_transform(w: &[f64], k: usize) -> C64 {
    let n = w.len();
    w.iter()
        .enumerate()
        .map(|(j, &x)| C64::from_polar(x, -std::f64::consts::TAU * (k * j % n) as f64 / n as f64))
        .sum()
}

/// Default transient from the linearization at the start point.
pub fn default_transient(params: &SystemParams, start: &PhaseSpaceState) -> f64 {
    let rate = asym_stability_matrix(start.signal, start.idler, params)
        .map(|l| {
            matrix_eigenvalues(&l)
                .iter()
                .map(|z| z.re.abs())
                .fold(f64::INFINITY, f64::min)
        })
        .unwrap_or(0.0);
    if rate > 0.0 {
        (20.0 / rate).min(TRANSIENT_CAP)
    } else {
        TRANSIENT_CAP
    }
}

fn check_start(params: &SystemParams, start: &PhaseSpaceState) -> Result<()> {
    let l = asym_stability_matrix(start.signal, start.idler, params)?;
    let max_re = matrix_eigenvalues(&l).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if max_re > STABILITY_MARGIN {
        return Err(Error::UnstablePoint(max_re));
    }
    Ok(())
}

struct Stepper {
    sigma: f64,
    eps_s: C64,
    eps_i: C64,
    loss_s: C64,
    loss_i: C64,
    kappa: f64,
    g: f64,
    adiabatic: bool,
    dt: f64,
    noise_scale: f64,
}

impl Stepper {
    fn new(params: &SystemParams, dt: f64) -> Self {
        let (es, ei) = params.injection_amplitudes();
        let rot = C64::from_polar(1.0, params.theta0);
        Self {
            sigma: params.sigma,
            eps_s: rot * es,
            eps_i: rot.conj() * ei,
            loss_s: C64::new(1.0, params.delta_s),
            loss_i: C64::new(1.0, params.delta_i),
            kappa: params.kappa,
            g: params.g,
            adiabatic: params.adiabatic,
            dt,
            noise_scale: (dt / 2.0).sqrt(),
        }
    }

    /// One Ito step over `(p, p+, s, s+, i, i+)`; returns the pump pair used.
    #[inline]
    fn step(&self, y: &mut [C64; 6], n: [f64; 4]) -> (C64, C64) {
        let [p0, pp0, s, sp, i, ip] = *y;
        let (p, pp) = if self.adiabatic {
            (self.sigma - s * i, self.sigma - sp * ip)
        } else {
            (p0, pp0)
        };
        let eta = C64::new(n[0], n[1]) * self.noise_scale;
        let etap = C64::new(n[2], n[3]) * self.noise_scale;
        let a = p.sqrt() * self.g;
        let ap = pp.sqrt() * self.g;
        let dt = self.dt;
        y[2] = s + (self.eps_s - self.loss_s * s + p * ip) * dt + a * eta;
        y[3] = sp + (self.eps_s.conj() - self.loss_s.conj() * sp + pp * i) * dt + ap * etap;
        y[4] = i + (self.eps_i - self.loss_i * i + p * sp) * dt + a * eta.conj();
        y[5] = ip + (self.eps_i.conj() - self.loss_i.conj() * ip + pp * s) * dt + ap * etap.conj();
        if self.adiabatic {
            y[0] = p;
            y[1] = pp;
        } else {
            y[0] = p0 + self.kappa * (self.sigma - p0 - s * i) * dt;
            y[1] = pp0 + self.kappa * (self.sigma - pp0 - sp * ip) * dt;
        }
        (p, pp)
    }
}

fn crossed(prev: C64, next: C64) -> bool {
    // principal sqrt jumps when the argument passes the negative real axis
    prev.re < 0.0 && next.re < 0.0 && (prev.im >= 0.0) != (next.im >= 0.0)
}

struct Shared<'a> {
    stepper: Stepper,
    start: [C64; 6],
    opts: &'a OracleOptions,
    transient_steps: u64,
    sampled: u64,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    bins: &'a [(usize, f64)],
}

fn channels(y: &[C64; 6]) -> [C64; 4] {
    let mi = C64::new(0.0, -1.0);
    [y[2] + y[3], mi * (y[2] - y[3]), y[4] + y[5], mi * (y[4] - y[5])]
}

fn run_trajectory(sh: &Shared, index: usize) -> std::result::Result<TrajectoryAccumulator, TrajectoryStatus> {
    let opts = sh.opts;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let l = opts.segment_len;
    let mut acc = TrajectoryAccumulator {
        index,
        samples: 0,
        segments: 0,
        channel_sum: [C64::default(); 4],
        amplitude_sum: [C64::default(); 4],
        number_sum: C64::default(),
        bins: vec![BinAccumulator::default(); sh.bins.len()],
        branch_crossings: 0,
    };
    let mut y = sh.start;
    let mut buf: Vec<[C64; 4]> = Vec::with_capacity(l);
    let mut scratch = vec![C64::default(); l];
    let mut fft_scratch = vec![C64::default(); sh.fft.get_inplace_scratch_len()];
    let (mut prev_p, mut prev_pp) = (C64::new(f64::NAN, 0.0), C64::new(f64::NAN, 0.0));
    let total_steps = sh.transient_steps + sh.sampled * opts.sample_every as u64;
    for step in 1..=total_steps {
        let n: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let (p, pp) = sh.stepper.step(&mut y, n);
        if crossed(prev_p, p) || crossed(prev_pp, pp) {
            acc.branch_crossings += 1;
            if opts.discard_branch_crossings {
                return Err(TrajectoryStatus::Diverged {
                    time: step as f64 * opts.dt,
                    branch_crossing: true,
                });
            }
        }
        prev_p = p;
        prev_pp = pp;
        let big = y.iter().any(|z| !(z.norm_sqr() <= opts.cutoff * opts.cutoff));
        if big {
            return Err(TrajectoryStatus::Diverged {
                time: step as f64 * opts.dt,
                branch_crossing: false,
            });
        }
        if step <= sh.transient_steps || (step - sh.transient_steps) % opts.sample_every as u64 != 0 {
            continue;
        }
        let ch = channels(&y);
        acc.samples += 1;
        for a in 0..4 {
            acc.channel_sum[a] += ch[a];
            acc.amplitude_sum[a] += y[a + 2];
        }
        acc.number_sum += y[2] * y[3];
        buf.push(ch);
        if buf.len() == l {
            let mut fk = vec![[C64::default(); 4]; sh.bins.len()];
            let mut fmk = vec![[C64::default(); 4]; sh.bins.len()];
            for a in 0..4 {
                for (j, s) in scratch.iter_mut().enumerate() {
                    *s = buf[j][a] * sh.window[j];
                }
                sh.fft.process_with_scratch(&mut scratch, &mut fft_scratch);
                for (b, &(k, _)) in sh.bins.iter().enumerate() {
                    fk[b][a] = scratch[k];
                    fmk[b][a] = scratch[(l - k) % l];
                }
            }
            for (b, bin) in acc.bins.iter_mut().enumerate() {
                for a in 0..4 {
                    bin.pos[a] += fk[b][a];
                    bin.neg[a] += fmk[b][a];
                    for c in 0..4 {
                        bin.prod[a][c] += fk[b][a] * fmk[b][c];
                    }
                }
            }
            acc.segments += 1;
            buf.drain(..l / 2);
        }
    }
    Ok(acc)
}

/// Runs `N` independent trajectories from `start` (given for `theta0 = 0`).
///
/// Streams are derived from `(seed, index)` and merged in index order, so the
/// result does not depend on the number of workers.
pub fn simulate_ensemble(params: &SystemParams, start: &PhaseSpaceState, opts: &OracleOptions) -> Result<EnsembleRun> {
    params.validate()?;
    opts.validate()?;
    if !opts.exploratory {
        check_start(params, start)?;
    }
    let transient = opts.transient.unwrap_or_else(|| default_transient(params, start));
    let rotated = rotate_by_theta0(start, params.theta0);
    let (pump, pump_plus) = match rotated.pump {
        Some(p) if !params.adiabatic => p,
        _ => rotated.pump_amplitudes(params.sigma),
    };
    let width = opts.bin_width();
    let l = opts.segment_len;
    let mut bins: Vec<(usize, f64)> = Vec::new();
    for &w in &opts.omegas {
        let k = (w.abs() / width).round() as usize;
        if k > l / 2 {
            return Err(Error::InvalidParameter(format!(
                "frequency {w} above the Nyquist limit {}",
                width * (l / 2) as f64
            )));
        }
        if !bins.iter().any(|&(kk, _)| kk == k) {
            bins.push((k, k as f64 * width));
        }
    }
    let window = hann(l);
    let window_power = window.iter().map(|x| x * x).sum();
    let window_dft = bins
        .iter()
        .map(|&(k, _)| (window_transform(&window, k), window_transform(&window, (l - k) % l)))
        .collect();
    let shared = Shared {
        stepper: Stepper::new(params, opts.dt),
        start: [pump, pump_plus, rotated.signal, rotated.signal_plus, rotated.idler, rotated.idler_plus],
        opts,
        transient_steps: (transient / opts.dt).round() as u64,
        sampled: (opts.horizon / opts.sample_dt()).round() as u64,
        window,
        fft: FftPlanner::new().plan_fft_forward(l),
        bins: &bins,
    };
    let indices: Vec<usize> = (0..opts.trajectories).collect();
    let outcomes = par_map(&indices, |&j| run_trajectory(&shared, j));
    let mut statuses = Vec::with_capacity(outcomes.len());
    let mut accumulators = Vec::new();
    for o in outcomes {
        match o {
            Ok(a) => {
                statuses.push(TrajectoryStatus::Completed);
                accumulators.push(a);
            }
            Err(s) => statuses.push(s),
        }
    }
    let diverged = statuses.len() - accumulators.len();
    if diverged as f64 > opts.max_divergence_fraction * statuses.len() as f64 {
        return Err(Error::ExcessiveDivergence {
            diverged,
            total: statuses.len(),
        });
    }
    let mut warnings = Vec::new();
    if diverged as f64 > 0.01 * statuses.len() as f64 {
        warnings.push(format!("{diverged} of {} trajectories diverged; consider a smaller g", statuses.len()));
    }
    Ok(EnsembleRun {
        params: *params,
        options: opts.clone(),
        transient,
        start: rotated,
        bins,
        statuses,
        accumulators,
        window_dft,
        window_power,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{dopri5, Drift, IntegratorOptions};

    fn quick(n: usize) -> OracleOptions {
        OracleOptions {
            horizon: 50.0,
            trajectories: n,
            segment_len: 512,
            seed: 7,
            ..OracleOptions::default()
        }
    }

    #[test]
    fn hann_transform() {
        let w = hann(16);
        assert!((window_transform(&w, 0) - C64::new(8.0, 0.0)).norm() < 1e-12);
        assert!((window_transform(&w, 1) - C64::new(-4.0, 0.0)).norm() < 1e-12);
        assert!(window_transform(&w, 3).norm() < 1e-12);
    }

    #[test]
    fn noiseless_limit_matches_integrator() {
        let p = SystemParams::symmetric(1.2, 0.2, 0.02).unwrap().with_g(1e-12).unwrap();
        let s0 = PhaseSpaceState::classical(C64::new(0.1, 0.0), C64::new(0.1, 0.0));
        let opts = OracleOptions {
            dt: 1e-4,
            transient: Some(0.0),
            horizon: 3.0,
            trajectories: 1,
            sample_every: 1,
            segment_len: 1 << 16,
            exploratory: true,
            ..OracleOptions::default()
        };
        let run = simulate_ensemble(&p, &s0, &opts).unwrap();
        let acc = &run.accumulators[0];
        // running integral of b_s carried as a fifth component
        let drift = Drift::new(&p);
        let f = |y: &[C64; 5]| {
            let d = drift.adiabatic(&[y[0], y[1], y[2], y[3]]);
            [d[0], d[1], d[2], d[3], y[0]]
        };
        let y0 = [s0.signal, s0.signal_plus, s0.idler, s0.idler_plus, C64::default()];
        let y = dopri5(f, y0, 3.0, &IntegratorOptions::default(), |_, _| {}).unwrap();
        let mean = y[4] / 3.0;
        let em = acc.amplitude_sum[0] / acc.samples as f64;
        assert!((em - mean).norm() < 5e-4, "{em} {mean}");
    }

    #[test]
    fn deterministic_given_seed() {
        let p = SystemParams::symmetric(0.5, 0.0, 0.0).unwrap();
        let s0 = PhaseSpaceState::classical(C64::default(), C64::default());
        let a = simulate_ensemble(&p, &s0, &quick(3)).unwrap();
        let b = simulate_ensemble(&p, &s0, &quick(3)).unwrap();
        assert_eq!(a, b);
        let mut other = quick(3);
        other.seed = 8;
        assert_ne!(simulate_ensemble(&p, &s0, &other).unwrap().accumulators, a.accumulators);
    }

    #[test]
    fn streams_are_per_index() {
        let p = SystemParams::symmetric(0.5, 0.0, 0.0).unwrap();
        let s0 = PhaseSpaceState::classical(C64::default(), C64::default());
        let three = simulate_ensemble(&p, &s0, &quick(3)).unwrap();
        let two = simulate_ensemble(&p, &s0, &quick(2)).unwrap();
        assert_eq!(&three.accumulators[..2], &two.accumulators[..]);
    }

    #[test]
    fn unstable_start_rejected() {
        let p = SystemParams::symmetric(1.5, 0.0, 0.0).unwrap();
        let s0 = PhaseSpaceState::classical(C64::default(), C64::default());
        assert!(matches!(simulate_ensemble(&p, &s0, &quick(1)), Err(Error::UnstablePoint(_))));
    }

    #[test]
    fn huge_noise_diverges() {
        let p = SystemParams::symmetric(0.9, 0.0, 0.0).unwrap().with_g(3.0).unwrap();
        let s0 = PhaseSpaceState::classical(C64::default(), C64::default());
        let opts = OracleOptions {
            cutoff: 5.0,
            ..quick(8)
        };
        assert!(matches!(
            simulate_ensemble(&p, &s0, &opts),
            Err(Error::ExcessiveDivergence { .. })
        ));
    }

    #[test]
    fn segment_count() {
        let p = SystemParams::symmetric(0.5, 0.0, 0.0).unwrap();
        let s0 = PhaseSpaceState::classical(C64::default(), C64::default());
        let run = simulate_ensemble(&p, &s0, &quick(1)).unwrap();
        // 5000 samples, 512-sample segments, hop 256
        assert_eq!(run.accumulators[0].samples, 5000);
        assert_eq!(run.accumulators[0].segments, (5000 - 512) / 256 + 1);
        assert!((run.transient - 40.0).abs() < 1e-9);
    }
}
