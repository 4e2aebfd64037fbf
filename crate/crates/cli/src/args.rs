use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "opo",
    version,
    about = "Classical and quantum analysis of the injection-locked type II OPO",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symmetric steady states, their stability and the special points.
    Bifurcation(BifurcationArgs),
    /// Zero- or finite-frequency quadrature noise spectra.
    Spectra(SpectraArgs),
    /// Logarithmic negativity and Duan sum at the locking point.
    Entanglement(EntanglementArgs),
    /// Positive-P stochastic estimate of a quadrature spectrum.
    Oracle(OracleArgs),
    /// Run every invariant suite; exits 1 on any failure.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Output file (standard output when omitted). A manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// JSON file with default values for any flag (same keys as the flags).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DetuningArgs {
    /// Symmetric detuning: delta_s = delta, delta_i = -delta.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["delta_s", "delta_i"])]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "delta_i")]
    pub delta_s: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "delta_s")]
    pub delta_i: Option<f64>,
}

impl DetuningArgs {
    /// `(delta_s, delta_i)`; `None` when no detuning flag was given.
    pub fn pair(&self) -> Option<(f64, f64)> {
        match (self.delta, self.delta_s, self.delta_i) {
            (Some(d), _, _) => Some((d, -d)),
            (None, Some(s), Some(i)) => Some((s, i)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OmegaArgs {
    #[arg(long, default_value_t = 0.0)]
    pub omega_min: f64,
    #[arg(long, default_value_t = 0.0)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 1)]
    pub omega_points: usize,
}

impl OmegaArgs {
    pub fn grid(&self) -> Vec<f64> {
        linspace(self.omega_min, self.omega_max, self.omega_points)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BifurcationArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub detuning: DetuningArgs,
    /// Largest intensity on the branch grid.
    #[arg(long, default_value_t = 4.0)]
    pub i_max: f64,
    #[arg(long, default_value_t = 400)]
    pub points: usize,
    /// Injections sampled below locking for periodic orbits.
    #[arg(long, default_value_t = 0)]
    pub orbits: usize,
    /// Injections sampled above the pitchfork for asymmetric states.
    #[arg(long, default_value_t = 0)]
    pub asymmetric_samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum PointArg {
    #[value(name = "hb")]
    #[serde(rename = "hb")]
    Hb,
    #[value(name = "pb")]
    #[serde(rename = "pb")]
    Pb,
    #[value(name = "fold+")]
    #[serde(rename = "fold+")]
    FoldPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Engine {
    #[value(name = "closed-form")]
    #[serde(rename = "closed-form")]
    ClosedForm,
    #[value(name = "projection")]
    #[serde(rename = "projection")]
    Projection,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpectraArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: f64,
    #[arg(long)]
    pub delta: f64,
    /// Special point at which to evaluate.
    #[arg(long, value_enum, conflicts_with_all = ["injection", "intensity"])]
    pub at: Option<PointArg>,
    /// Injection; every stable steady state is reported.
    #[arg(long, conflicts_with = "intensity")]
    pub injection: Option<f64>,
    /// Steady intensity I directly.
    #[arg(long)]
    pub intensity: Option<f64>,
    /// Polarization mode: phi+pi/4, phi-pi/4, phi-psi+, phi-psi- (default: all applicable).
    #[arg(long)]
    pub mode: Vec<String>,
    /// X or Y (default both).
    #[arg(long)]
    pub quadrature: Vec<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub omega: OmegaArgs,
    #[arg(long, value_enum, default_value = "closed-form")]
    pub engine: Engine,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EntanglementArgs {
    /// Pump values (repeatable); alternative to the --sigma-min/max/points sweep.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Vec<f64>,
    #[arg(long)]
    pub sigma_min: Option<f64>,
    #[arg(long)]
    pub sigma_max: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub sigma_points: usize,
    #[arg(long)]
    pub delta: f64,
    /// Use delta_s = 1.5 delta, delta_i = -0.5 delta and locate the Hopf point numerically.
    #[arg(long)]
    pub asymmetric: bool,
    #[arg(long, default_value_t = 0.0)]
    pub omega: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OracleArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub detuning: DetuningArgs,
    #[arg(long, default_value_t = 0.0)]
    pub injection: f64,
    #[arg(long, default_value_t = 0.01)]
    pub g: f64,
    /// Keep the pump as a dynamical variable with this decay ratio.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta0: f64,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub trajectories: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Sampled time after the transient.
    #[arg(long, default_value_t = 2000.0)]
    pub t_max: f64,
    #[arg(long)]
    pub transient: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Samples per periodogram segment.
    #[arg(long, default_value_t = 4096)]
    pub segment_len: usize,
    /// Integration steps between stored samples.
    #[arg(long, default_value_t = 10)]
    pub sample_every: usize,
    /// Measured mode relative to the start phase: phi+pi/4 or phi-pi/4.
    #[arg(long, default_value = "phi+pi/4")]
    pub mode: String,
    /// Absolute mode angle; overrides --mode.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, default_value = "Y")]
    pub quadrature: String,
    /// Absolute quadrature angle; overrides --quadrature.
    #[arg(long, allow_hyphen_values = true)]
    pub psi: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub omega: OmegaArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub physicality_points: usize,
    /// Test fixture: ROW,COL,EPS added to one stability-matrix entry.
    #[arg(long, hide = true)]
    pub perturb_jacobian: Option<String>,
    /// JSON report destination (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}
