//! Closed-form output spectra of the symmetric configuration.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::classical::{special_points, symmetric_stability_eigs, turning_points};
use crate::model::psi_pm;
use crate::{Error, Result};

/// Largest real part tolerated by the stability precondition; lets marginal
/// points (Hopf, pitchfork) through.
pub const STABILITY_MARGIN: f64 = 1e-8;

/// A spectrum value that may diverge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumValue {
    Finite(f64),
    Infinite,
}

impl SpectrumValue {
    pub fn value(self) -> f64 {
        match self {
            SpectrumValue::Finite(v) => v,
            SpectrumValue::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, SpectrumValue::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            SpectrumValue::Finite(v) => Some(v),
            SpectrumValue::Infinite => None,
        }
    }
}

impl fmt::Display for SpectrumValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumValue::Finite(v) => write!(f, "{v}"),
            SpectrumValue::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for SpectrumValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SpectrumValue::Finite(v) => s.serialize_f64(*v),
            SpectrumValue::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SpectrumValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v == f64::INFINITY => Ok(SpectrumValue::Infinite),
            Raw::Num(v) => Ok(SpectrumValue::Finite(v)),
            Raw::Text(t) if t == "inf" => Ok(SpectrumValue::Infinite),
            Raw::Text(t) => match t.parse::<f64>() {
                Ok(v) if v == f64::INFINITY => Ok(SpectrumValue::Infinite),
                Ok(v) => Ok(SpectrumValue::Finite(v)),
                Err(e) => Err(serde::de::Error::custom(e)),
            },
        }
    }
}

/// Polarization modes with closed-form spectra, as offsets from the bright
/// mode angle `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetricMode {
    #[serde(rename = "phi+pi/4")]
    PlusQuarter,
    #[serde(rename = "phi-pi/4")]
    MinusQuarter,
    /// `phi - psi+`, defined for `I > delta`.
    #[serde(rename = "phi-psi+")]
    PsiPlus,
    /// `phi - psi-`, defined for `I > delta`.
    #[serde(rename = "phi-psi-")]
    PsiMinus,
}

impl SymmetricMode {
    pub const ALL: [SymmetricMode; 4] = [
        SymmetricMode::PlusQuarter,
        SymmetricMode::MinusQuarter,
        SymmetricMode::PsiPlus,
        SymmetricMode::PsiMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SymmetricMode::PlusQuarter => "phi+pi/4",
            SymmetricMode::MinusQuarter => "phi-pi/4",
            SymmetricMode::PsiPlus => "phi-psi+",
            SymmetricMode::PsiMinus => "phi-psi-",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.label() == s)
    }

    pub fn needs_upper_branch(self) -> bool {
        matches!(self, SymmetricMode::PsiPlus | SymmetricMode::PsiMinus)
    }

    /// `theta - phi` for this mode at intensity `I`.
    pub fn offset(self, intensity: f64, delta: f64) -> Result<f64> {
        Ok(match self {
            SymmetricMode::PlusQuarter => FRAC_PI_4,
            SymmetricMode::MinusQuarter => -FRAC_PI_4,
            SymmetricMode::PsiPlus => -psi_pm(intensity, delta)?.psi_plus,
            SymmetricMode::PsiMinus => -psi_pm(intensity, delta)?.psi_minus,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    Y,
}

impl Quadrature {
    pub fn psi(self) -> f64 {
        match self {
            Quadrature::X => 0.0,
            Quadrature::Y => FRAC_PI_2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Quadrature::X => "X",
            Quadrature::Y => "Y",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "X" | "x" => Some(Quadrature::X),
            "Y" | "y" => Some(Quadrature::Y),
            _ => None,
        }
    }
}

/// Rejects points with an eigenvalue in the right half plane.
pub fn check_symmetric_stability(intensity: f64, sigma: f64, delta: f64) -> Result<()> {
    let max_re = symmetric_stability_eigs(intensity, sigma, delta)
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_re > STABILITY_MARGIN {
        return Err(Error::UnstablePoint(max_re));
    }
    Ok(())
}

fn ratio(num: f64, den: f64) -> SpectrumValue {
    // a vanishing denominator is an eigenvalue sitting at i*Omega
    if den.abs() <= 1e-24 * (1.0 + num.abs()) {
        SpectrumValue::Infinite
    } else {
        SpectrumValue::Finite(num / den)
    }
}

fn offset_by(sign: f64, v: SpectrumValue) -> SpectrumValue {
    match v {
        SpectrumValue::Finite(x) => SpectrumValue::Finite(1.0 + sign * x),
        // only the positive divergence is physical; both directions are reported as +inf
        SpectrumValue::Infinite => SpectrumValue::Infinite,
    }
}

/// `f+-(z) = 4 (sigma - I) [(I +- delta)^2 + z^2 + W^2] / [(d^2 - I^2 + z^2)^2 + 2 (I^2 - d^2 + z^2) W^2 + W^4]`.
pub fn f_pm(z: f64, sign: f64, sigma: f64, delta: f64, intensity: f64, omega: f64) -> SpectrumValue {
    let (i, d, w2) = (intensity, delta, omega * omega);
    let num = 4.0 * (sigma - i) * ((i + sign * d).powi(2) + z * z + w2);
    let a = d * d - i * i + z * z;
    let den = a * a + 2.0 * (i * i - d * d + z * z) * w2 + w2 * w2;
    ratio(num, den)
}

/// Output spectrum `V(Q_mode; Omega)` of the symmetric configuration.
pub fn symmetric_quadrature_spectrum(
    sigma: f64,
    delta: f64,
    intensity: f64,
    mode: SymmetricMode,
    quad: Quadrature,
    omega: f64,
) -> Result<SpectrumValue> {
    check_symmetric_stability(intensity, sigma, delta)?;
    let i = intensity;
    match mode {
        SymmetricMode::PlusQuarter | SymmetricMode::MinusQuarter => {
            let sign = if mode == SymmetricMode::PlusQuarter { 1.0 } else { -1.0 };
            Ok(match quad {
                Quadrature::Y => offset_by(-1.0, f_pm(1.0 + sigma, sign, sigma, delta, i, omega)),
                Quadrature::X => offset_by(1.0, f_pm(2.0 * i + 1.0 - sigma, sign, sigma, delta, i, omega)),
            })
        }
        SymmetricMode::PsiPlus | SymmetricMode::PsiMinus => {
            if !(i > delta) {
                return Err(Error::InvalidParameter(format!(
                    "mode {} needs I > delta (I = {i}, delta = {delta})",
                    mode.label()
                )));
            }
            let root = (i * i - delta * delta).sqrt();
            let r = if mode == SymmetricMode::PsiPlus { root } else { -root };
            let num = 4.0 * (sigma - i);
            Ok(match quad {
                Quadrature::Y => offset_by(-1.0, ratio(num, (1.0 + sigma + r).powi(2) + omega * omega)),
                Quadrature::X => {
                    offset_by(1.0, ratio(num, (1.0 - sigma + 2.0 * i + r).powi(2) + omega * omega))
                }
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecialPoint {
    Hopf,
    FoldUpper,
    Pitchfork,
}

impl SpecialPoint {
    pub fn label(self) -> &'static str {
        match self {
            SpecialPoint::Hopf => "hb",
            SpecialPoint::FoldUpper => "fold+",
            SpecialPoint::Pitchfork => "pb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hb" => Some(SpecialPoint::Hopf),
            "fold+" => Some(SpecialPoint::FoldUpper),
            "pb" => Some(SpecialPoint::Pitchfork),
            _ => None,
        }
    }

    /// Intensity of the point, or why it does not exist.
    pub fn intensity(self, sigma: f64, delta: f64) -> Result<f64> {
        match self {
            SpecialPoint::Hopf => special_points(sigma, delta)
                .hopf
                .map(|h| h.0)
                .ok_or_else(|| Error::PointAbsent("Hopf requires 1 < sigma < 1 + 2 delta".into())),
            SpecialPoint::FoldUpper => turning_points(sigma, delta)
                .map(|t| t.1)
                .ok_or_else(|| Error::PointAbsent("sigma <= 1 + sqrt(3) delta".into())),
            SpecialPoint::Pitchfork => Ok(special_points(sigma, delta).pitchfork),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledSpectrum {
    pub mode: SymmetricMode,
    pub quadrature: Quadrature,
    pub value: SpectrumValue,
}

/// Zero-frequency spectra at a special point of the symmetric branch.
///
/// Hopf: the `phi +- pi/4` modes. Pitchfork: the four `phi - psi+-` values,
/// with `Y_{phi - psi-}` divergent. Upper fold: all modes, with the `X`
/// quadratures whose eigenvalue vanishes reported as divergent.
pub fn spectrum_at_special_point(point: SpecialPoint, sigma: f64, delta: f64) -> Result<(f64, Vec<LabeledSpectrum>)> {
    let i = point.intensity(sigma, delta)?;
    let modes: &[SymmetricMode] = match point {
        SpecialPoint::Hopf => &[SymmetricMode::PlusQuarter, SymmetricMode::MinusQuarter],
        SpecialPoint::Pitchfork => &[SymmetricMode::PsiPlus, SymmetricMode::PsiMinus],
        SpecialPoint::FoldUpper => &SymmetricMode::ALL,
    };
    let mut out = Vec::new();
    for &mode in modes {
        for quad in [Quadrature::X, Quadrature::Y] {
            let forced_infinite = match point {
                SpecialPoint::Pitchfork => mode == SymmetricMode::PsiMinus && quad == Quadrature::Y,
                SpecialPoint::FoldUpper => {
                    quad == Quadrature::X && mode != SymmetricMode::PsiPlus
                }
                SpecialPoint::Hopf => false,
            };
            let value = if forced_infinite {
                SpectrumValue::Infinite
            } else {
                symmetric_quadrature_spectrum(sigma, delta, i, mode, quad, 0.0)?
            };
            out.push(LabeledSpectrum {
                mode,
                quadrature: quad,
                value,
            });
        }
    }
    Ok((i, out))
}

/// Leading-order small-detuning values of `V(X_{phi-psi-})` and `V(X_{phi-psi+})` at the pitchfork.
pub fn pb_small_delta_approx(sigma: f64, delta: f64) -> (f64, f64) {
    (
        delta * delta / (2.0 * (sigma + 1.0)),
        1.0 - 1.0 / (sigma + 2.0).powi(2),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: f64, d: f64, i: f64, m: SymmetricMode, q: Quadrature, w: f64) -> f64 {
        symmetric_quadrature_spectrum(s, d, i, m, q, w).unwrap().value()
    }

    #[test]
    fn hopf_values() {
        use Quadrature::*;
        use SymmetricMode::*;
        assert!((v(1.2, 0.2, 0.1, PlusQuarter, Y, 0.0) - 0.08538).abs() < 1e-5);
        // 1 - 4.4 * 4.85 / 4.87^2
        assert!((v(1.2, 0.2, 0.1, MinusQuarter, Y, 0.0) - (1.0 - 21.34 / 23.7169)).abs() < 1e-12);
        assert!((v(1.2, 0.2, 0.1, MinusQuarter, Y, 0.0) - 0.100220).abs() < 1e-6);
        // 1 + 4 * 1.1 * 0.09 / 0.03^2
        assert!((v(1.2, 0.2, 0.1, PlusQuarter, X, 0.0) - 441.0).abs() < 1e-9);
    }

    #[test]
    fn below_threshold_ninth() {
        let y = v(0.5, 0.0, 0.0, SymmetricMode::PlusQuarter, Quadrature::Y, 0.0);
        assert!((y - 1.0 / 9.0).abs() < 1e-15);
        let far = v(0.5, 0.0, 0.0, SymmetricMode::PlusQuarter, Quadrature::Y, 1e4);
        assert!((far - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pitchfork_values() {
        let (i, vals) = spectrum_at_special_point(SpecialPoint::Pitchfork, 1.0, 0.2).unwrap();
        assert!((i - 2.0099751).abs() < 1e-7);
        let get = |m, q| vals.iter().find(|l| l.mode == m && l.quadrature == q).unwrap().value;
        use Quadrature::*;
        use SymmetricMode::*;
        let xm = get(PsiMinus, X).value();
        assert!((xm - (1.0 - 1.0 / (i - 1.0))).abs() < 1e-12);
        assert!((xm - 0.0098766).abs() < 1e-7);
        assert!((get(PsiPlus, X).value() - 0.888523).abs() < 1e-6);
        assert!((get(PsiPlus, Y).value() - 1.252494).abs() < 1e-6);
        assert!(get(PsiMinus, Y).is_infinite());
    }

    #[test]
    fn small_delta_expansion() {
        let (a, b) = pb_small_delta_approx(1.0, 0.2);
        assert!((a - 0.01).abs() < 1e-15 && (b - 8.0 / 9.0).abs() < 1e-15);
        assert!(((a - 0.0098772) / 0.0098772).abs() < 0.013);
        assert!(((b - 0.888523) / 0.888523).abs() < 0.0005);
        let (a0, b0) = pb_small_delta_approx(1.0, 0.0);
        let (_, vals) = spectrum_at_special_point(SpecialPoint::Pitchfork, 1.0, 0.0).unwrap();
        assert_eq!(a0, 0.0);
        let xm = vals.iter().find(|l| l.mode == SymmetricMode::PsiMinus && l.quadrature == Quadrature::X).unwrap();
        let xp = vals.iter().find(|l| l.mode == SymmetricMode::PsiPlus && l.quadrature == Quadrature::X).unwrap();
        assert!(xm.value.value().abs() < 1e-12 && (xp.value.value() - b0).abs() < 1e-12);
    }

    #[test]
    fn absent_points() {
        assert!(matches!(
            spectrum_at_special_point(SpecialPoint::FoldUpper, 1.5, 0.6),
            Err(Error::PointAbsent(m)) if m.contains("1 + sqrt(3) delta")
        ));
        assert!(matches!(
            spectrum_at_special_point(SpecialPoint::Hopf, 2.5, 0.2),
            Err(Error::PointAbsent(_))
        ));
    }

    #[test]
    fn fold_flags_divergence() {
        let (i, vals) = spectrum_at_special_point(SpecialPoint::FoldUpper, 2.8, 0.6).unwrap();
        assert!((i - 1.68990).abs() < 1e-5);
        for l in &vals {
            if l.quadrature == Quadrature::X && l.mode != SymmetricMode::PsiPlus {
                assert!(l.value.is_infinite());
            } else {
                assert!(!l.value.is_infinite());
            }
        }
    }

    #[test]
    fn rejects_unstable_and_lower_branch_psi_modes() {
        assert!(matches!(
            symmetric_quadrature_spectrum(2.8, 0.6, 1.2, SymmetricMode::PlusQuarter, Quadrature::Y, 0.0),
            Err(Error::UnstablePoint(_))
        ));
        assert!(symmetric_quadrature_spectrum(1.2, 0.2, 0.15, SymmetricMode::PsiPlus, Quadrature::Y, 0.0).is_err());
    }

    #[test]
    fn spectrum_value_serde() {
        let vals = [SpectrumValue::Finite(0.25), SpectrumValue::Infinite];
        let s = serde_json_like(&vals);
        assert_eq!(s, "0.25,inf");
    }

    fn serde_json_like(v: &[SpectrumValue]) -> String {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    }

    proptest::proptest! {
        #[test]
        fn spectra_nonnegative_and_uncertain(s in 0.0..3.0f64, d in 0.0..1.0f64, i in 0.0..4.0f64, w in 0.0..5.0f64) {
            if check_symmetric_stability(i, s, d).is_err() {
                return Ok(());
            }
            for m in SymmetricMode::ALL {
                if m.needs_upper_branch() && !(i > d) {
                    continue;
                }
                let x = symmetric_quadrature_spectrum(s, d, i, m, Quadrature::X, w).unwrap();
                let y = symmetric_quadrature_spectrum(s, d, i, m, Quadrature::Y, w).unwrap();
                if let (Some(x), Some(y)) = (x.finite(), y.finite()) {
                    proptest::prop_assert!(x >= -1e-10 && y >= -1e-10);
                    proptest::prop_assert!(x * y >= 1.0 - 1e-8, "{m:?} {x} {y}");
                }
            }
        }
    }
}
