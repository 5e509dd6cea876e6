//! Barotropic pressure laws `P(ρ)` and the enthalpy `h(ρ) = ∫₁^ρ P'(r)/r dr`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Pressure law of one fluid. Only the polytropic family `P = K ρ^γ`
/// (with its isothermal member `γ = 1`) is supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawSpec", into = "LawSpec")]
pub enum BarotropicLaw {
    Polytropic { k: f64, gamma: f64 },
    Isothermal { k: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LawSpec {
    kind: LawKind,
    #[serde(rename = "K")]
    k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LawKind {
    Polytropic,
    Isothermal,
}

impl TryFrom<LawSpec> for BarotropicLaw {
    type Error = Error;

    fn try_from(spec: LawSpec) -> Result<Self> {
        match spec.kind {
            LawKind::Isothermal => {
                if spec.gamma.is_some_and(|g| g != 1.0) {
                    return Err(Error::Config("isothermal law takes no gamma (or gamma = 1)".into()));
                }
                BarotropicLaw::isothermal(spec.k)
            }
            LawKind::Polytropic => {
                let gamma = spec
                    .gamma
                    .ok_or_else(|| Error::Config("polytropic law requires \"gamma\"".into()))?;
                BarotropicLaw::polytropic(spec.k, gamma)
            }
        }
    }
}

impl From<BarotropicLaw> for LawSpec {
    fn from(law: BarotropicLaw) -> Self {
        match law {
            BarotropicLaw::Polytropic { k, gamma } => LawSpec { kind: LawKind::Polytropic, k, gamma: Some(gamma) },
            BarotropicLaw::Isothermal { k } => LawSpec { kind: LawKind::Isothermal, k, gamma: None },
        }
    }
}

fn check_density(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("density must be positive and finite, got {rho}")))
    }
}

impl BarotropicLaw {
    /// `P = K ρ^γ`; `γ = 1` yields the isothermal law.
    pub fn polytropic(k: f64, gamma: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Config(format!("pressure scale K must be positive, got {k}")));
        }
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("adiabatic exponent gamma >= 1 required, got {gamma}")));
        }
        if gamma == 1.0 {
            Ok(BarotropicLaw::Isothermal { k })
        } else {
            Ok(BarotropicLaw::Polytropic { k, gamma })
        }
    }

    pub fn isothermal(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Config(format!("pressure scale K must be positive, got {k}")));
        }
        Ok(BarotropicLaw::Isothermal { k })
    }

    pub fn k(&self) -> f64 {
        match *self {
            BarotropicLaw::Polytropic { k, .. } | BarotropicLaw::Isothermal { k } => k,
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            BarotropicLaw::Polytropic { gamma, .. } => gamma,
            BarotropicLaw::Isothermal { .. } => 1.0,
        }
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(match *self {
            BarotropicLaw::Polytropic { k, gamma } => k * rho.powf(gamma),
            BarotropicLaw::Isothermal { k } => k * rho,
        })
    }

    /// `P'(ρ)`.
    pub fn dpressure(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(self.dpressure_unchecked(rho))
    }

    pub(crate) fn dpressure_unchecked(&self, rho: f64) -> f64 {
        match *self {
            BarotropicLaw::Polytropic { k, gamma } => k * gamma * rho.powf(gamma - 1.0),
            BarotropicLaw::Isothermal { k } => k,
        }
    }

    /// `P'(ρ)` propagated through a density jet.
    pub fn dpressure_jet<const N: usize>(&self, rho: &Jet<N>) -> Jet<N> {
        match *self {
            BarotropicLaw::Polytropic { k, gamma } => rho.powf(gamma - 1.0) * (k * gamma),
            BarotropicLaw::Isothermal { k } => Jet::constant(k),
        }
    }

    /// Inverse of the pressure map on `(0, ∞)`.
    pub fn pressure_inv(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Domain(format!("pressure must be positive, got {p}")));
        }
        Ok(match *self {
            BarotropicLaw::Polytropic { k, gamma } => (p / k).powf(1.0 / gamma),
            BarotropicLaw::Isothermal { k } => p / k,
        })
    }

    pub fn enthalpy(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(match *self {
            BarotropicLaw::Polytropic { k, gamma } => k * gamma / (gamma - 1.0) * ((gamma - 1.0) * rho.ln()).exp_m1(),
            BarotropicLaw::Isothermal { k } => k * rho.ln(),
        })
    }

    /// Open interval `h((0, ∞))`.
    pub fn enthalpy_image(&self) -> (f64, f64) {
        match *self {
            BarotropicLaw::Polytropic { k, gamma } => (-k * gamma / (gamma - 1.0), f64::INFINITY),
            BarotropicLaw::Isothermal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn enthalpy_inv(&self, y: f64) -> Result<f64> {
        let (lower, upper) = self.enthalpy_image();
        if !(y > lower && y < upper) {
            return Err(Error::Range { value: y, lower, upper });
        }
        Ok(match *self {
            BarotropicLaw::Polytropic { k, gamma } => {
                ((y * (gamma - 1.0) / (k * gamma)).ln_1p() / (gamma - 1.0)).exp()
            }
            BarotropicLaw::Isothermal { k } => (y / k).exp(),
        })
    }
}
