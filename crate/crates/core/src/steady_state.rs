//! Hydrostatic two-fluid steady state on the slab `(-m, ℓ)` with the interface at `x₃ = 0`.

use serde::{Deserialize, Serialize};

use crate::barotropic::BarotropicLaw;
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Which fluid a vertical location belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct TwoFluidConfig {
    pub g: f64,
    pub m: f64,
    pub ell: f64,
    pub rho0_minus: f64,
    pub law_minus: BarotropicLaw,
    pub law_plus: BarotropicLaw,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    g: f64,
    m: f64,
    ell: f64,
    rho0_minus: f64,
    law_minus: BarotropicLaw,
    law_plus: BarotropicLaw,
}

impl TryFrom<RawConfig> for TwoFluidConfig {
    type Error = Error;
    fn try_from(r: RawConfig) -> Result<Self> {
        TwoFluidConfig::new(r.g, r.m, r.ell, r.rho0_minus, r.law_minus, r.law_plus)
    }
}

impl From<TwoFluidConfig> for RawConfig {
    fn from(c: TwoFluidConfig) -> Self {
        RawConfig { g: c.g, m: c.m, ell: c.ell, rho0_minus: c.rho0_minus, law_minus: c.law_minus, law_plus: c.law_plus }
    }
}

impl TwoFluidConfig {
    pub fn new(
        g: f64,
        m: f64,
        ell: f64,
        rho0_minus: f64,
        law_minus: BarotropicLaw,
        law_plus: BarotropicLaw,
    ) -> Result<Self> {
        for (name, v) in [("g", g), ("m", m), ("ell", ell), ("rho0_minus", rho0_minus)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("\"{name}\" must be positive and finite, got {v}")));
            }
        }
        Ok(Self { g, m, ell, rho0_minus, law_minus, law_plus })
    }

    /// Isothermal reference configuration: `K₋ = 2`, `K₊ = 1`, `g = m = ℓ = ρ₀⁻ = 1`.
    pub fn reference_isothermal() -> Self {
        Self {
            g: 1.0,
            m: 1.0,
            ell: 1.0,
            rho0_minus: 1.0,
            law_minus: BarotropicLaw::Isothermal { k: 2.0 },
            law_plus: BarotropicLaw::Isothermal { k: 1.0 },
        }
    }

    pub fn law(&self, side: Side) -> &BarotropicLaw {
        match side {
            Side::Lower => &self.law_minus,
            Side::Upper => &self.law_plus,
        }
    }
}

/// `ρ₀⁺ = P₊⁻¹(P₋(ρ₀⁻))`.
pub fn compute_rho0_plus(config: &TwoFluidConfig) -> Result<f64> {
    let p = config.law_minus.pressure(config.rho0_minus)?;
    config.law_plus.pressure_inv(p)
}

/// Polytropic regime inequality `(ρ₀⁻)^{γ₋−γ₊} > K₊/K₋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeTest {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstabilityReport {
    pub unstable: bool,
    pub rho0_plus: f64,
    pub jump: f64,
    pub regime: RegimeTest,
}

pub fn check_instability(config: &TwoFluidConfig) -> Result<InstabilityReport> {
    let rho0_plus = compute_rho0_plus(config)?;
    let jump = rho0_plus - config.rho0_minus;
    let (gm, gp) = (config.law_minus.gamma(), config.law_plus.gamma());
    let lhs = config.rho0_minus.powf(gm - gp);
    let rhs = config.law_plus.k() / config.law_minus.k();
    Ok(InstabilityReport { unstable: jump > 0.0, rho0_plus, jump, regime: RegimeTest { lhs, rhs, holds: lhs > rhs } })
}

/// The steady density `ρ₀(x₃)`, stored as closed-form evaluators per slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyProfile {
    pub config: TwoFluidConfig,
    pub rho0_plus: f64,
    /// `⟦ρ₀⟧ = ρ₀⁺ − ρ₀⁻`
    pub jump: f64,
}

pub fn build_profile(config: &TwoFluidConfig) -> Result<SteadyProfile> {
    let rho0_plus = compute_rho0_plus(config)?;
    let g = config.g;

    let (lo, _) = config.law_minus.enthalpy_image();
    let h_bottom = config.law_minus.enthalpy(config.rho0_minus)? + g * config.m;
    if h_bottom <= lo {
        // unreachable for the polytropic family; kept for completeness of the check
        return Err(Error::Config(format!("lower slab inadmissible: h_-(rho0_minus) + g m = {h_bottom} not in image")));
    }
    let (lo, _) = config.law_plus.enthalpy_image();
    let h_top = config.law_plus.enthalpy(rho0_plus)? - g * config.ell;
    if h_top <= lo {
        let ell_max = (config.law_plus.enthalpy(rho0_plus)? - lo) / g;
        return Err(Error::Config(format!(
            "upper slab inadmissible: density vanishes inside (0, ell); ell must be < {ell_max} (got {})",
            config.ell
        )));
    }
    Ok(SteadyProfile { config: *config, rho0_plus, jump: rho0_plus - config.rho0_minus })
}

impl SteadyProfile {
    pub fn g(&self) -> f64 {
        self.config.g
    }

    pub fn m(&self) -> f64 {
        self.config.m
    }

    pub fn ell(&self) -> f64 {
        self.config.ell
    }

    pub fn law(&self, side: Side) -> &BarotropicLaw {
        self.config.law(side)
    }

    /// `ρ₀^±`.
    pub fn interface_density(&self, side: Side) -> f64 {
        match side {
            Side::Lower => self.config.rho0_minus,
            Side::Upper => self.rho0_plus,
        }
    }

    fn check_side(&self, x: f64, side: Side) -> Result<()> {
        let ok = match side {
            Side::Lower => x >= -self.config.m && x <= 0.0,
            Side::Upper => x >= 0.0 && x <= self.config.ell,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("x3 = {x} outside the {} slab", side.label())))
        }
    }

    /// Side of a point off the interface.
    pub fn side_of(&self, x: f64) -> Result<Side> {
        if x == 0.0 {
            return Err(Error::Domain("x3 = 0 lies on the interface; select a side explicitly".into()));
        }
        if x < -self.config.m || x > self.config.ell || x.is_nan() {
            return Err(Error::Domain(format!("x3 = {x} outside the slab [-m, ell]")));
        }
        Ok(if x < 0.0 { Side::Lower } else { Side::Upper })
    }

    /// `ρ₀(x₃)` off the interface.
    pub fn rho0(&self, x: f64) -> Result<f64> {
        let side = self.side_of(x)?;
        Ok(self.rho0_unchecked(x, side))
    }

    /// `ρ₀(x₃)` on the requested side; at `x₃ = 0` this is the one-sided limit.
    pub fn rho0_side(&self, x: f64, side: Side) -> Result<f64> {
        self.check_side(x, side)?;
        Ok(self.rho0_unchecked(x, side))
    }

    pub(crate) fn rho0_unchecked(&self, x: f64, side: Side) -> f64 {
        let law = self.law(side);
        let r = self.interface_density(side);
        let g = self.config.g;
        match *law {
            BarotropicLaw::Isothermal { k } => r * (-g * x / k).exp(),
            BarotropicLaw::Polytropic { k, gamma } => {
                (r.powf(gamma - 1.0) - g * (gamma - 1.0) * x / (k * gamma)).powf(1.0 / (gamma - 1.0))
            }
        }
    }

    /// `ρ₀'(x₃) = −g ρ₀ / P'(ρ₀)`.
    pub fn drho0(&self, x: f64) -> Result<f64> {
        let side = self.side_of(x)?;
        Ok(self.drho0_unchecked(x, side))
    }

    pub fn drho0_side(&self, x: f64, side: Side) -> Result<f64> {
        self.check_side(x, side)?;
        Ok(self.drho0_unchecked(x, side))
    }

    pub(crate) fn drho0_unchecked(&self, x: f64, side: Side) -> f64 {
        let rho = self.rho0_unchecked(x, side);
        -self.config.g * rho / self.law(side).dpressure_unchecked(rho)
    }

    /// `P'(ρ₀(x₃))`.
    pub(crate) fn sound_speed_sq(&self, x: f64, side: Side) -> f64 {
        self.law(side).dpressure_unchecked(self.rho0_unchecked(x, side))
    }

    /// Taylor jet of `ρ₀` about `x₃ = x`.
    pub fn rho0_jet<const N: usize>(&self, x: f64, side: Side) -> Jet<N> {
        let law = self.law(side);
        let r = self.interface_density(side);
        let g = self.config.g;
        let xj = Jet::<N>::variable(x);
        match *law {
            BarotropicLaw::Isothermal { k } => (xj * (-g / k)).exp() * r,
            BarotropicLaw::Polytropic { k, gamma } => {
                let base = xj * (-g * (gamma - 1.0) / (k * gamma)) + r.powf(gamma - 1.0);
                base.powf(1.0 / (gamma - 1.0))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn iso(k: f64) -> BarotropicLaw {
        BarotropicLaw::isothermal(k).unwrap()
    }

    fn poly(k: f64, g: f64) -> BarotropicLaw {
        BarotropicLaw::polytropic(k, g).unwrap()
    }

    #[test]
    fn rho0_plus_examples() {
        let cfg = TwoFluidConfig::reference_isothermal();
        assert_relative_eq!(compute_rho0_plus(&cfg).unwrap(), 2.0, max_relative = 1e-15);
        let same = TwoFluidConfig::new(1.0, 1.0, 1.0, 0.7, poly(1.3, 1.4), poly(1.3, 1.4)).unwrap();
        assert_relative_eq!(compute_rho0_plus(&same).unwrap(), 0.7, max_relative = 1e-14);
        let mixed = TwoFluidConfig::new(1.0, 1.0, 1.0, 1.0, iso(4.0), poly(1.0, 2.0)).unwrap();
        assert_relative_eq!(compute_rho0_plus(&mixed).unwrap(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn instability_examples() {
        let r = check_instability(&TwoFluidConfig::reference_isothermal()).unwrap();
        assert!(r.unstable);
        assert_relative_eq!(r.jump, 1.0, max_relative = 1e-15);
        let same = TwoFluidConfig::new(1.0, 1.0, 1.0, 1.0, iso(1.0), iso(1.0)).unwrap();
        let r = check_instability(&same).unwrap();
        assert!(!r.unstable);
        assert_eq!(r.jump, 0.0);
        let c = TwoFluidConfig::new(1.0, 1.0, 0.5, 0.5, poly(1.0, 2.0), iso(1.0)).unwrap();
        let r = check_instability(&c).unwrap();
        assert!(!r.unstable);
        assert!(!r.regime.holds);
        assert_relative_eq!(r.regime.lhs, 0.5);
    }

    #[test]
    fn profile_examples() {
        let p = build_profile(&TwoFluidConfig::reference_isothermal()).unwrap();
        assert_relative_eq!(p.rho0_side(-1.0, Side::Lower).unwrap(), 0.5f64.exp(), max_relative = 1e-15);
        assert_relative_eq!(p.rho0_side(1.0, Side::Upper).unwrap(), 2.0 * (-1f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(p.rho0(-0.5).unwrap(), 1.2840254166877414, max_relative = 1e-14);
        assert_relative_eq!(p.drho0(-0.5).unwrap(), -0.6420127083438707, max_relative = 1e-14);
        assert_relative_eq!(p.rho0(0.25).unwrap(), 1.5576015661428098, max_relative = 1e-14);
        assert_relative_eq!(p.rho0_side(0.0, Side::Lower).unwrap(), 1.0);
        assert_relative_eq!(p.rho0_side(0.0, Side::Upper).unwrap(), 2.0);
        assert!(p.rho0(0.0).is_err());
        assert!(p.rho0(1.5).is_err());
        assert!(p.rho0_side(0.3, Side::Lower).is_err());
    }

    #[test]
    fn inadmissible_upper_slab_reports_bound() {
        let c = TwoFluidConfig::new(1.0, 1.0, 3.0, 1.0, poly(1.0, 2.0), poly(1.0, 2.0)).unwrap();
        let err = build_profile(&c).unwrap_err().to_string();
        assert!(err.contains("upper slab") && err.contains("< 2"), "{err}");
        let ok = TwoFluidConfig::new(1.0, 1.0, 1.9, 1.0, poly(1.0, 2.0), poly(1.0, 2.0)).unwrap();
        assert!(build_profile(&ok).is_ok());
    }

    #[test]
    fn pressure_continuity_and_enthalpy_constancy() {
        let c = TwoFluidConfig::new(2.0, 0.7, 0.4, 1.3, poly(2.0, 1.6), poly(0.8, 1.2)).unwrap();
        let p = build_profile(&c).unwrap();
        let pm = c.law_minus.pressure(c.rho0_minus).unwrap();
        let pp = c.law_plus.pressure(p.rho0_plus).unwrap();
        assert!((pp - pm).abs() <= 1e-12 * pm);
        for side in [Side::Lower, Side::Upper] {
            let law = c.law(side);
            let c0 = law.enthalpy(p.interface_density(side)).unwrap();
            let xs: Vec<f64> = match side {
                Side::Lower => (0..=20).map(|i| -0.7 * i as f64 / 20.0).collect(),
                Side::Upper => (0..=20).map(|i| 0.4 * i as f64 / 20.0).collect(),
            };
            for x in xs {
                let h = law.enthalpy(p.rho0_side(x, side).unwrap()).unwrap() + c.g * x;
                assert!((h - c0).abs() <= 1e-10 * (1.0 + c0.abs()), "side {side:?} x {x}");
            }
        }
    }

    #[test]
    fn jet_matches_closed_form_derivative() {
        let c = TwoFluidConfig::new(1.5, 1.0, 0.5, 1.2, poly(2.0, 1.4), iso(0.9)).unwrap();
        let p = build_profile(&c).unwrap();
        for (x, side) in [(-0.3, Side::Lower), (0.2, Side::Upper)] {
            let j = p.rho0_jet::<5>(x, side);
            assert_relative_eq!(j.value(), p.rho0_side(x, side).unwrap(), max_relative = 1e-14);
            assert_relative_eq!(j.derivative(1), p.drho0_side(x, side).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn config_json_rejects_unknown_and_missing() {
        let ok = r#"{"g":1,"m":1,"ell":1,"rho0_minus":1,"law_minus":{"kind":"isothermal","K":2},"law_plus":{"kind":"isothermal","K":1}}"#;
        let c: TwoFluidConfig = serde_json::from_str(ok).unwrap();
        assert_eq!(c, TwoFluidConfig::reference_isothermal());
        let missing = r#"{"m":1,"ell":1,"rho0_minus":1,"law_minus":{"kind":"isothermal","K":2},"law_plus":{"kind":"isothermal","K":1}}"#;
        let err = serde_json::from_str::<TwoFluidConfig>(missing).unwrap_err().to_string();
        assert!(err.contains("`g`"), "{err}");
        let neg = ok.replace("\"g\":1", "\"g\":-1");
        assert!(serde_json::from_str::<TwoFluidConfig>(&neg).is_err());
    }

    fn random_config() -> impl Strategy<Value = TwoFluidConfig> {
        (0.2f64..3.0, 0.3f64..2.0, 0.5f64..3.0, 0.5f64..3.0, 1.0f64..2.0, 1.0f64..2.0).prop_map(
            |(g, rho, km, kp, gm, gp)| {
                TwoFluidConfig::new(g, 1.0, 0.5, rho, poly(km, gm), poly(kp, gp)).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn instability_iff_positive_jump(c in random_config()) {
            let r = check_instability(&c).unwrap();
            prop_assert_eq!(r.unstable, r.jump > 0.0);
            if c.law_minus.gamma() != c.law_plus.gamma() || r.jump.abs() > 1e-12 {
                prop_assert_eq!(r.unstable, r.regime.holds);
            }
        }

        #[test]
        fn enthalpy_ode_residual(c in random_config(), s in 0.05f64..0.95) {
            if let Ok(p) = build_profile(&c) {
                for (x, side) in [(-s * c.m, Side::Lower), (s * c.ell, Side::Upper)] {
                    let law = c.law(side);
                    let d = 1e-5;
                    let hp = law.enthalpy(p.rho0_side(x + d, side).unwrap()).unwrap();
                    let hm = law.enthalpy(p.rho0_side(x - d, side).unwrap()).unwrap();
                    prop_assert!(((hp - hm) / (2.0 * d) + c.g).abs() <= 1e-6 * c.g);
                }
            }
        }

        #[test]
        fn isothermal_density_scaling(scale in 0.1f64..10.0, x in -0.99f64..0.99) {
            prop_assume!(x != 0.0);
            let base = TwoFluidConfig::reference_isothermal();
            let scaled = TwoFluidConfig { rho0_minus: scale, ..base };
            let p0 = build_profile(&base).unwrap();
            let p1 = build_profile(&scaled).unwrap();
            prop_assert!((p1.rho0(x).unwrap() - scale * p0.rho0(x).unwrap()).abs() <= 1e-12 * scale * p0.rho0(x).unwrap());
            prop_assert!((p1.jump - scale * p0.jump).abs() <= 1e-12 * scale);
        }
    }
}
