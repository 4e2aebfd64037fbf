//! Output rows. Field order is column order.

use opo_core::quantum::SpectrumValue;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationRow {
    /// `branch`, `fold-`, `fold+`, `pb`, `hb`, `orbit` or `asymmetric`.
    pub kind: String,
    pub injection: f64,
    /// Signal intensity (mean intensity for orbits).
    pub intensity: f64,
    /// Idler intensity, asymmetric rows only.
    pub idler_intensity: Option<f64>,
    pub stability: String,
    /// Which factor of the characteristic polynomial is unstable: `none`, `P1`, `P2`, `P1+P2`.
    pub branch_tag: String,
    /// Oscillation frequency at a Hopf point or of an orbit.
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraRow {
    pub sigma: f64,
    pub delta: f64,
    pub point: String,
    pub intensity: f64,
    pub mode: String,
    pub quadrature: String,
    pub omega: f64,
    #[serde(rename = "V")]
    pub v: SpectrumValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementRow {
    pub sigma: f64,
    pub delta_s: f64,
    pub delta_i: f64,
    pub injection_at_hopf: f64,
    pub intensity_signal: f64,
    pub intensity_idler: f64,
    pub omega: f64,
    pub nu_minus: f64,
    #[serde(rename = "E_N")]
    pub log_negativity: f64,
    pub duan_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub theta: f64,
    pub psi: f64,
    pub omega: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub std_error: f64,
    pub n_trajectories: usize,
    pub n_segments: u64,
}
