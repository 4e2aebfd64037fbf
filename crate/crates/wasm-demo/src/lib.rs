//! Browser bindings for three interactive views: the symmetric branch, a
//! quadrature noise spectrum and the entanglement at the locking point.
//!
//! Every export returns a JSON string; the page parses and plots it.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use opo_core::classical::{
    classify_branch, injection_for_intensity, locking_injection, special_points, symmetric_fixed_point,
    SpecialPoints,
};
use opo_core::quantum::{entanglement_at_fixed_point, symmetric_quadrature_spectrum, Quadrature, SymmetricMode};
use opo_core::SystemParams;

#[derive(Debug, Serialize)]
pub struct BranchSample {
    pub intensity: f64,
    pub injection: f64,
    pub stable: bool,
}

#[derive(Debug, Serialize)]
pub struct BranchView {
    pub samples: Vec<BranchSample>,
    pub special: SpecialPoints,
    pub locking_injection: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SpectrumView {
    pub omega: Vec<f64>,
    /// `null` where the spectrum diverges.
    pub value: Vec<Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct EntanglementSample {
    pub sigma: f64,
    pub log_negativity: f64,
    pub duan_sum: f64,
}

fn check(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

pub fn branch_view(sigma: f64, delta: f64, i_max: f64, points: usize) -> Result<BranchView, String> {
    SystemParams::symmetric(sigma, delta, 0.0).map_err(|e| e.to_string())?;
    check(i_max > 0.0 && (2..=20_000).contains(&points), "need i_max > 0 and 2..=20000 points")?;
    let samples = grid(0.0, i_max, points)
        .into_iter()
        .map(|i| BranchSample {
            intensity: i,
            injection: injection_for_intensity(i, sigma, delta),
            stable: classify_branch(i, sigma, delta).stability.is_stable(),
        })
        .collect();
    Ok(BranchView {
        samples,
        special: special_points(sigma, delta),
        locking_injection: locking_injection(sigma, delta),
    })
}

pub fn spectrum_view(
    sigma: f64,
    delta: f64,
    intensity: f64,
    mode: &str,
    quadrature: &str,
    omega_max: f64,
    points: usize,
) -> Result<SpectrumView, String> {
    let mode = SymmetricMode::parse(mode).ok_or_else(|| format!("unknown mode {mode}"))?;
    let quad = Quadrature::parse(quadrature).ok_or_else(|| format!("unknown quadrature {quadrature}"))?;
    check(omega_max >= 0.0 && (2..=20_000).contains(&points), "need omega_max >= 0 and 2..=20000 points")?;
    let omega = grid(0.0, omega_max, points);
    let value = omega
        .iter()
        .map(|&w| {
            symmetric_quadrature_spectrum(sigma, delta, intensity, mode, quad, w)
                .map(|v| v.finite())
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    Ok(SpectrumView { omega, value })
}

/// `E_N` and the Duan sum at the Hopf point across the window `1 < sigma < 1 + 2 delta`.
pub fn entanglement_view(delta: f64, points: usize) -> Result<Vec<EntanglementSample>, String> {
    check(delta > 0.0 && delta.is_finite(), "need delta > 0")?;
    check((2..=2_000).contains(&points), "need 2..=2000 points")?;
    let hi = 1.0 + 2.0 * delta;
    let mut out = Vec::with_capacity(points);
    for k in 0..points {
        let sigma = 1.0 + (hi - 1.0) * (k as f64 + 0.5) / points as f64;
        let Some((i, _)) = special_points(sigma, delta).hopf else {
            continue;
        };
        let inj = injection_for_intensity(i, sigma, delta);
        let p = SystemParams::symmetric(sigma, delta, inj).map_err(|e| e.to_string())?;
        let fp = symmetric_fixed_point(i, sigma, delta);
        let r = entanglement_at_fixed_point(&p, fp.signal, fp.idler, 0.0).map_err(|e| e.to_string())?;
        out.push(EntanglementSample {
            sigma,
            log_negativity: r.log_negativity,
            duan_sum: r.duan_sum.unwrap_or(f64::NAN),
        });
    }
    Ok(out)
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bifurcation(sigma: f64, delta: f64, i_max: f64, points: usize) -> Result<String, JsValue> {
    to_js(branch_view(sigma, delta, i_max, points))
}

#[wasm_bindgen]
pub fn spectrum(
    sigma: f64,
    delta: f64,
    intensity: f64,
    mode: &str,
    quadrature: &str,
    omega_max: f64,
    points: usize,
) -> Result<String, JsValue> {
    to_js(spectrum_view(sigma, delta, intensity, mode, quadrature, omega_max, points))
}

#[wasm_bindgen]
pub fn entanglement(delta: f64, points: usize) -> Result<String, JsValue> {
    to_js(entanglement_view(delta, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_has_folds() {
        let v = branch_view(2.8, 0.6, 4.0, 101).unwrap();
        assert_eq!(v.samples.len(), 101);
        let (lo, hi) = v.special.turning.unwrap();
        // unstable between the folds, stable just above the upper one
        assert!(v.samples.iter().filter(|s| s.intensity > lo && s.intensity < hi).all(|s| !s.stable));
        assert!(classify_branch(hi + 0.1, 2.8, 0.6).stability.is_stable());
        assert!(branch_view(2.8, 0.6, -1.0, 10).is_err());
    }

    #[test]
    fn spectrum_tends_to_vacuum() {
        let v = spectrum_view(1.2, 0.2, 0.1, "phi+pi/4", "Y", 200.0, 50).unwrap();
        assert!((v.value[0].unwrap() - 0.0853779).abs() < 1e-6);
        assert!((v.value[49].unwrap() - 1.0).abs() < 1e-3);
        assert!(spectrum_view(1.2, 0.2, 0.1, "bogus", "Y", 1.0, 5).is_err());
    }

    #[test]
    fn divergent_value_is_null() {
        // pitchfork at sigma = 1, delta = 0.2
        let i = (4.0f64 + 0.04).sqrt();
        let v = spectrum_view(1.0, 0.2, i, "phi-psi-", "Y", 1.0, 3).unwrap();
        assert!(v.value[0].is_none());
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("null"));
    }

    #[test]
    fn entanglement_positive_across_window() {
        let v = entanglement_view(0.2, 8).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.iter().all(|s| s.log_negativity > 0.0 && s.duan_sum < 2.0));
        assert!(entanglement_view(0.0, 8).is_err());
    }
}
