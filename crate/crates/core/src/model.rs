//! Dimensionless parameters, phase-space amplitudes and the polarization /
//! quadrature algebra shared by the classical and quantum layers.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

const SYMMETRY_TOL: f64 = 1e-12;

/// Dimensionless OPO parameters.
///
/// `injection` is the subharmonic injection intensity. The signal and idler
/// injection amplitudes follow from the polarization angle `phi0`, see
/// [`SystemParams::injection_amplitudes`]. `theta0` is carried for
/// completeness only: no statistic depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub sigma: f64,
    pub delta_s: f64,
    pub delta_i: f64,
    pub injection: f64,
    pub g: f64,
    pub kappa: f64,
    pub phi0: f64,
    pub theta0: f64,
    pub adiabatic: bool,
}

impl SystemParams {
    pub const DEFAULT_G: f64 = 0.01;
    pub const DEFAULT_KAPPA: f64 = 100.0;

    /// Validated parameters with defaults `g = 0.01`, `kappa = 100`,
    /// `phi0 = pi/4`, `theta0 = 0`, adiabatic pump.
    pub fn new(sigma: f64, delta_s: f64, delta_i: f64, injection: f64) -> Result<Self> {
        let p = Self {
            sigma,
            delta_s,
            delta_i,
            injection,
            g: Self::DEFAULT_G,
            kappa: Self::DEFAULT_KAPPA,
            phi0: FRAC_PI_4,
            theta0: 0.0,
            adiabatic: true,
        };
        p.validate()?;
        Ok(p)
    }

    /// The symmetric configuration `delta_s = -delta_i = delta`, `phi0 = pi/4`.
    pub fn symmetric(sigma: f64, delta: f64, injection: f64) -> Result<Self> {
        Self::new(sigma, delta, -delta, injection)
    }

    pub fn with_g(mut self, g: f64) -> Result<Self> {
        self.g = g;
        self.validate()?;
        Ok(self)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn with_injection(mut self, injection: f64) -> Result<Self> {
        self.injection = injection;
        self.validate()?;
        Ok(self)
    }

    pub fn with_polarization(mut self, phi0: f64, theta0: f64) -> Result<Self> {
        self.phi0 = phi0;
        self.theta0 = theta0;
        self.validate()?;
        Ok(self)
    }

    pub fn with_adiabatic(mut self, adiabatic: bool) -> Self {
        self.adiabatic = adiabatic;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("sigma", self.sigma),
            ("delta_s", self.delta_s),
            ("delta_i", self.delta_i),
            ("injection", self.injection),
            ("g", self.g),
            ("kappa", self.kappa),
            ("phi0", self.phi0),
            ("theta0", self.theta0),
        ];
        if let Some((name, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be finite")));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidParameter("sigma must be non-negative".into()));
        }
        if self.injection < 0.0 {
            return Err(Error::InvalidParameter(
                "injection must be non-negative".into(),
            ));
        }
        if self.g <= 0.0 {
            return Err(Error::InvalidParameter("g must be positive".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidParameter("kappa must be positive".into()));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.phi0) {
            return Err(Error::InvalidParameter("phi0 must lie in [0, pi/2]".into()));
        }
        Ok(())
    }

    /// Opposite detunings and injection polarized at 45 degrees.
    pub fn is_symmetric(&self) -> bool {
        (self.delta_s + self.delta_i).abs() <= SYMMETRY_TOL * (1.0 + self.delta_s.abs())
            && (self.phi0 - FRAC_PI_4).abs() <= SYMMETRY_TOL
    }

    /// Half the signal/idler resonance separation, `(delta_s - delta_i) / 2`.
    pub fn mean_detuning(&self) -> f64 {
        0.5 * (self.delta_s - self.delta_i)
    }

    /// Real injection amplitudes `(eps_s, eps_i)`; both equal `sqrt(injection)`
    /// in the symmetric configuration.
    pub fn injection_amplitudes(&self) -> (f64, f64) {
        let amp = (2.0 * self.injection).sqrt();
        (amp * self.phi0.cos(), amp * self.phi0.sin())
    }
}

/// Positive-P amplitudes of signal and idler, plus the pump pair when the
/// pump is not adiabatically eliminated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceState {
    pub signal: C64,
    pub signal_plus: C64,
    pub idler: C64,
    pub idler_plus: C64,
    /// `(beta_p, beta_p_plus)`; `None` in the adiabatic model.
    pub pump: Option<(C64, C64)>,
}

impl PhaseSpaceState {
    /// Classical state of the adiabatic model: plus amplitudes are conjugates.
    pub fn classical(signal: C64, idler: C64) -> Self {
        Self {
            signal,
            signal_plus: signal.conj(),
            idler,
            idler_plus: idler.conj(),
            pump: None,
        }
    }

    /// Classical state of the full model.
    pub fn classical_with_pump(pump: C64, signal: C64, idler: C64) -> Self {
        Self {
            pump: Some((pump, pump.conj())),
            ..Self::classical(signal, idler)
        }
    }

    /// Pump pair, derived as `sigma - beta_s beta_i` when eliminated.
    pub fn pump_amplitudes(&self, sigma: f64) -> (C64, C64) {
        self.pump.unwrap_or((
            sigma - self.signal * self.idler,
            sigma - self.signal_plus * self.idler_plus,
        ))
    }

    /// Largest deviation from `beta_plus = conj(beta)` over all modes.
    pub fn conjugacy_defect(&self) -> f64 {
        let mut d = (self.signal_plus - self.signal.conj())
            .norm()
            .max((self.idler_plus - self.idler.conj()).norm());
        if let Some((p, pp)) = self.pump {
            d = d.max((pp - p.conj()).norm());
        }
        d
    }

    pub fn max_norm(&self) -> f64 {
        let mut m = self
            .signal
            .norm()
            .max(self.signal_plus.norm())
            .max(self.idler.norm())
            .max(self.idler_plus.norm());
        if let Some((p, pp)) = self.pump {
            m = m.max(p.norm()).max(pp.norm());
        }
        m
    }
}

/// A polarization mode `eps_theta` built from signal and idler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationMode {
    pub theta: f64,
}

impl PolarizationMode {
    pub fn new(theta: f64) -> Self {
        Self { theta }
    }

    /// The mode excited by a symmetric fixed point of phase `phi`.
    pub fn bright(phi: f64) -> Self {
        Self::new(phi)
    }

    /// Orthogonal to [`PolarizationMode::bright`].
    pub fn dark(phi: f64) -> Self {
        Self::new(phi - std::f64::consts::FRAC_PI_2)
    }

    pub fn orthogonal(self) -> Self {
        Self::new(self.theta - std::f64::consts::FRAC_PI_2)
    }

    pub fn amplitudes(&self, state: &PhaseSpaceState) -> (C64, C64) {
        polarization_combine(
            state.signal,
            state.idler,
            state.signal_plus,
            state.idler_plus,
            self.theta,
        )
    }

    /// Quadrature `x^psi` of this mode for the given state.
    pub fn quadrature(&self, state: &PhaseSpaceState, psi: f64) -> C64 {
        let (b, bp) = self.amplitudes(state);
        quadrature_value(b, bp, psi)
    }
}

/// `(beta_theta, beta_theta_plus)` from signal/idler amplitudes.
pub fn polarization_combine(bs: C64, bi: C64, bs_plus: C64, bi_plus: C64, theta: f64) -> (C64, C64) {
    let e = C64::from_polar(1.0, theta);
    let ec = e.conj();
    (
        (ec * bs + e * bi) * FRAC_1_SQRT_2,
        (e * bs_plus + ec * bi_plus) * FRAC_1_SQRT_2,
    )
}

/// `e^{-i psi} beta + e^{i psi} beta_plus`. Real when `beta_plus = conj(beta)`.
pub fn quadrature_value(beta: C64, beta_plus: C64, psi: f64) -> C64 {
    let e = C64::from_polar(1.0, psi);
    e.conj() * beta + e * beta_plus
}

/// Polarization rotation angles and weights of the `I > delta` eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiPm {
    /// Auxiliary angle with `sqrt(2) cos(psi) = sqrt(1 + delta/I)`.
    pub psi: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub m_plus: f64,
    pub m_minus: f64,
}

/// Amplitudes `M+-` and phases `psi+-` of `F+- + i delta`, `F+- = I +- sqrt(I^2 - delta^2)`.
///
/// Defined for `I >= delta >= 0`; at `I = delta` both phases equal `pi/4`.
pub fn psi_pm(intensity: f64, delta: f64) -> Result<PsiPm> {
    if !(delta >= 0.0) || !(intensity > 0.0) || intensity < delta {
        return Err(Error::InvalidParameter(format!(
            "psi_pm requires I >= delta >= 0 and I > 0 (I = {intensity}, delta = {delta})"
        )));
    }
    let root = (intensity * intensity - delta * delta).max(0.0).sqrt();
    let r = delta / intensity;
    let psi = (1.0 - r).sqrt().atan2((1.0 + r).sqrt());
    Ok(PsiPm {
        psi,
        psi_plus: FRAC_PI_4 - psi,
        psi_minus: FRAC_PI_4 + psi,
        m_plus: 2.0 * intensity * (intensity + root),
        // I - sqrt(I^2 - d^2) rewritten to avoid cancellation
        m_minus: 2.0 * intensity * delta * delta / (intensity + root),
    })
}
