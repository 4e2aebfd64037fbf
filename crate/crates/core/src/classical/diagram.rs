//! Bifurcation diagram of the symmetric configuration.

use serde::{Deserialize, Serialize};

use super::asymmetric::relax_to_fixed_point;
use super::dynamics::{integrate_classical, Attractor, IntegratorOptions};
use super::steady::{
    classify_branch, injection_for_intensity, special_points, symmetric_fixed_point, BranchLabel,
    SpecialPoints,
};
use crate::model::{PhaseSpaceState, SystemParams};
use crate::{Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub intensity: f64,
    pub injection: f64,
    pub label: BranchLabel,
}

/// Mean intensity of the periodic orbit found below locking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub injection: f64,
    pub mean_intensity: f64,
    pub period: f64,
}

/// Asymmetric stationary state reached by long-time integration above the
/// pitchfork.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetricRecord {
    pub injection: f64,
    pub signal_intensity: f64,
    pub idler_intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub sigma: f64,
    pub delta: f64,
    pub branch: Vec<BranchPoint>,
    pub special: SpecialPoints,
    /// Injection below which no stable locked state exists, if any.
    pub locking_injection: Option<f64>,
    pub orbits: Vec<OrbitRecord>,
    pub asymmetric: Vec<AsymmetricRecord>,
}

/// Optional numerically traced parts of the diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramOptions {
    /// Number of injections sampled below locking for periodic orbits.
    pub orbit_samples: usize,
    /// Number of injections sampled above the pitchfork for asymmetric states.
    pub asymmetric_samples: usize,
    pub horizon: f64,
}

impl Default for DiagramOptions {
    fn default() -> Self {
        Self {
            orbit_samples: 0,
            asymmetric_samples: 0,
            horizon: 1500.0,
        }
    }
}

/// Injection at which the lowest locked branch loses stability: the Hopf
/// point when present, otherwise the lower fold.
pub fn locking_injection(sigma: f64, delta: f64) -> Option<f64> {
    let sp = special_points(sigma, delta);
    if let Some((i, _)) = sp.hopf {
        return Some(injection_for_intensity(i, sigma, delta));
    }
    sp.turning
        .filter(|_| sigma > 1.0)
        .map(|(lo, _)| injection_for_intensity(lo, sigma, delta))
}

pub fn bifurcation_diagram(
    sigma: f64,
    delta: f64,
    grid: &[f64],
    opts: &DiagramOptions,
) -> Result<BifurcationDiagram> {
    let branch = grid
        .iter()
        .map(|&i| BranchPoint {
            intensity: i,
            injection: injection_for_intensity(i, sigma, delta),
            label: classify_branch(i, sigma, delta),
        })
        .collect();
    let special = special_points(sigma, delta);
    let locking = locking_injection(sigma, delta);
    let base = SystemParams::symmetric(sigma, delta, 0.0)?;

    let orbit_injections: Vec<f64> = match locking {
        Some(lock) if opts.orbit_samples > 0 => (0..opts.orbit_samples)
            .map(|k| lock * (k as f64 + 0.5) / opts.orbit_samples as f64)
            .collect(),
        _ => Vec::new(),
    };
    let integ = IntegratorOptions::default();
    let orbits = crate::par_map(&orbit_injections, |&inj| -> Result<Option<OrbitRecord>> {
        let p = base.with_injection(inj)?;
        let a = (sigma - 1.0).max(0.01).sqrt();
        let st = PhaseSpaceState::classical(C64::new(a, 0.05), C64::new(a, -0.05));
        Ok(match integrate_classical(&st, &p, opts.horizon, &integ) {
            Ok(tr) => match tr.attractor {
                Attractor::PeriodicOrbit {
                    period,
                    mean_intensity,
                    ..
                } => Some(OrbitRecord {
                    injection: inj,
                    mean_intensity,
                    period,
                }),
                Attractor::FixedPoint { .. } => None,
            },
            Err(_) => None,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?
    .into_iter()
    .flatten()
    .collect();

    let asym_injections: Vec<(f64, f64)> = if opts.asymmetric_samples > 0 {
        let i_max = grid.iter().copied().fold(special.pitchfork, f64::max);
        (0..opts.asymmetric_samples)
            .map(|k| {
                let i = special.pitchfork
                    + (i_max - special.pitchfork).max(0.5) * (k as f64 + 1.0)
                        / opts.asymmetric_samples as f64;
                (injection_for_intensity(i, sigma, delta), i)
            })
            .collect()
    } else {
        Vec::new()
    };
    let asymmetric = crate::par_map(&asym_injections, |&(inj, i)| -> Result<Option<AsymmetricRecord>> {
        let p = base.with_injection(inj)?;
        let fp = symmetric_fixed_point(i, sigma, delta);
        // break the signal/idler symmetry slightly
        let seed = (fp.signal * 1.01, fp.idler * 0.99);
        Ok(relax_to_fixed_point(&p, seed, opts.horizon)
            .ok()
            .filter(|s| s.stability.is_stable())
            .map(|s| AsymmetricRecord {
                injection: inj,
                signal_intensity: s.signal.norm_sqr(),
                idler_intensity: s.idler.norm_sqr(),
            }))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?
    .into_iter()
    .flatten()
    .collect();

    Ok(BifurcationDiagram {
        sigma,
        delta,
        branch,
        special,
        locking_injection: locking,
        orbits,
        asymmetric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::steady::Stability;

    fn grid(n: usize, max: f64) -> Vec<f64> {
        (0..=n).map(|k| max * k as f64 / n as f64).collect()
    }

    #[test]
    fn below_threshold_single_valued() {
        let d = bifurcation_diagram(0.5, 0.6, &grid(200, 2.0), &DiagramOptions::default()).unwrap();
        assert!((d.special.pitchfork - 1.61555).abs() < 1e-5);
        assert!(d.branch.windows(2).all(|w| w[1].injection > w[0].injection));
        assert!(d.special.turning.is_none());
        for p in &d.branch {
            assert_eq!(p.label.stability.is_stable(), p.intensity < d.special.pitchfork);
        }
    }

    #[test]
    fn s_shaped_middle_branch_unstable() {
        let d = bifurcation_diagram(2.8, 0.6, &grid(300, 3.0), &DiagramOptions::default()).unwrap();
        let (lo, hi) = d.special.turning.unwrap();
        assert!((lo - 0.71010).abs() < 1e-5 && (hi - 1.68990).abs() < 1e-5);
        for p in d.branch.iter().filter(|p| p.intensity > lo + 1e-9 && p.intensity < hi - 1e-9) {
            assert_eq!(p.label.stability, Stability::UnstableStatic);
        }
    }

    #[test]
    fn hopf_marked_on_lower_branch() {
        let d = bifurcation_diagram(1.98, 0.6, &grid(100, 3.0), &DiagramOptions::default()).unwrap();
        let (i, _) = d.special.hopf.unwrap();
        assert!((i - 0.49).abs() < 1e-14);
        assert!((d.locking_injection.unwrap() - 0.294049).abs() < 1e-12);
    }

    #[test]
    fn orbits_and_asymmetric_states() {
        let opts = DiagramOptions {
            orbit_samples: 2,
            asymmetric_samples: 1,
            horizon: 1500.0,
        };
        let d = bifurcation_diagram(1.2, 0.2, &grid(20, 3.0), &opts).unwrap();
        assert_eq!(d.orbits.len(), 2);
        for o in &d.orbits {
            assert!(o.mean_intensity > 0.0 && o.period > 0.0);
        }
        for a in &d.asymmetric {
            assert!(a.injection > 0.0);
        }
    }
}
