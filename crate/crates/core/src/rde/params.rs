//! Scenario parameters: nonlinearity, forcing, noise profile, grid and step.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::state::Grid;

/// A function of `x` used for `h`, the spatial part of `g`, the source term
/// of `f`, and the certificate bounds `ψᵢ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialProfile {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude · exp(−((x − center)/width)²)`.
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

impl SpatialProfile {
    /// `exp(−x²)`.
    pub fn unit_gaussian() -> Self {
        SpatialProfile::Gaussian {
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            SpatialProfile::Zero => 0.0,
            SpatialProfile::Constant { value } => value,
            SpatialProfile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let y = (x - center) / width;
                amplitude * (-y * y).exp()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            SpatialProfile::Zero => true,
            SpatialProfile::Constant { value } => value == 0.0,
            SpatialProfile::Gaussian { amplitude, .. } => amplitude == 0.0,
        }
    }
}

/// Time factor `γ(t)` of the forcing `g(x, t) = a(x)·γ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemporalProfile {
    Zero,
    Constant {
        value: f64,
    },
    /// `sin(2πt/period)`.
    Periodic {
        period: f64,
    },
    /// `min(1, e^{rate·t})`: bounded, and vanishing into the past.
    Saturating {
        rate: f64,
    },
    /// `e^{−rate·t}`: grows into the past.
    PastGrowing {
        rate: f64,
    },
}

/// Bound `γ(s)² ≤ scale·e^{rate·s}` valid for all `s ≤ until`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub scale: f64,
    pub rate: f64,
    pub until: f64,
}

impl TemporalProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TemporalProfile::Zero => 0.0,
            TemporalProfile::Constant { value } => value,
            TemporalProfile::Periodic { period } => (std::f64::consts::TAU * t / period).sin(),
            TemporalProfile::Saturating { rate } => (rate * t).exp().min(1.0),
            TemporalProfile::PastGrowing { rate } => (-rate * t).exp(),
        }
    }

    pub fn period(&self) -> Option<f64> {
        match *self {
            TemporalProfile::Periodic { period } => Some(period),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, TemporalProfile::Zero | TemporalProfile::Constant { value: 0.0 })
    }

    pub fn envelope(&self) -> Envelope {
        let everywhere = f64::INFINITY;
        match *self {
            TemporalProfile::Zero => Envelope {
                scale: 0.0,
                rate: 0.0,
                until: everywhere,
            },
            TemporalProfile::Constant { value } => Envelope {
                scale: value * value,
                rate: 0.0,
                until: everywhere,
            },
            TemporalProfile::Periodic { .. } => Envelope {
                scale: 1.0,
                rate: 0.0,
                until: everywhere,
            },
            TemporalProfile::Saturating { rate } => Envelope {
                scale: 1.0,
                rate: 2.0 * rate,
                until: 0.0,
            },
            TemporalProfile::PastGrowing { rate } => Envelope {
                scale: 1.0,
                rate: -2.0 * rate,
                until: everywhere,
            },
        }
    }

    /// Points where `γ` is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            TemporalProfile::Saturating { .. } => vec![0.0],
            _ => Vec::new(),
        }
    }
}

/// `f(x, s) = Σ cₖ sᵏ + b(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub coeffs: Vec<f64>,
    #[serde(default = "zero_profile")]
    pub source: SpatialProfile,
}

fn zero_profile() -> SpatialProfile {
    SpatialProfile::Zero
}

impl Nonlinearity {
    /// `−s³`.
    pub fn negative_cubic() -> Self {
        Self {
            coeffs: vec![0.0, 0.0, 0.0, -1.0],
            source: SpatialProfile::Zero,
        }
    }

    pub fn zero() -> Self {
        Self {
            coeffs: Vec::new(),
            source: SpatialProfile::Zero,
        }
    }

    #[inline]
    pub fn poly(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn value(&self, x: f64, s: f64) -> f64 {
        self.poly(s) + self.source.value(x)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0) && self.source.is_zero()
    }
}

impl Default for Nonlinearity {
    fn default() -> Self {
        Self::negative_cubic()
    }
}

/// Constants in the structural conditions on `f`:
///
/// ```text
/// f(x, s)·s  ≤ −α₁|s|ᵖ + ψ₁(x)
/// |f(x, s)|  ≤  α₂|s|ᵖ⁻¹ + ψ₂(x)
/// ∂f/∂s      ≤  α₃
/// |∂f/∂x|    ≤  ψ₃(x)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FCertificate {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    #[serde(default = "zero_profile")]
    pub psi1: SpatialProfile,
    #[serde(default = "zero_profile")]
    pub psi2: SpatialProfile,
    #[serde(default = "zero_profile")]
    pub psi3: SpatialProfile,
}

impl Default for FCertificate {
    /// Constants for `−s³` with `p = 4`.
    fn default() -> Self {
        Self {
            alpha1: 1.0,
            alpha2: 1.0,
            alpha3: 0.0,
            psi1: SpatialProfile::Zero,
            psi2: SpatialProfile::Zero,
            psi3: SpatialProfile::Zero,
        }
    }
}

/// Everything that defines one reaction–diffusion scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RdParams {
    pub lambda: f64,
    pub p: f64,
    pub f: Nonlinearity,
    pub certificate: FCertificate,
    /// `a(x)` in `g(x, t) = a(x)·γ(t)`.
    pub g_space: SpatialProfile,
    /// `γ(t)`.
    pub g_time: TemporalProfile,
    pub h: SpatialProfile,
    pub ell: f64,
    /// Interior node count `J`.
    pub interior: usize,
    /// Solver step.
    pub dt: f64,
    /// Solver steps per path step; driving paths have step `dt·substeps`.
    pub substeps: usize,
    /// Implicitness of the linear part: 1/2 is Crank–Nicolson, 1 backward Euler.
    pub theta: f64,
    /// Blow-up guard on `‖v‖²`.
    pub blowup: f64,
    /// Length of the past used for `z(ω)` and for the noise integral in the
    /// absorbing radius.
    pub ou_window: f64,
}

impl Default for RdParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            p: 4.0,
            f: Nonlinearity::negative_cubic(),
            certificate: FCertificate::default(),
            g_space: SpatialProfile::unit_gaussian(),
            g_time: TemporalProfile::Saturating { rate: 0.5 },
            h: SpatialProfile::unit_gaussian(),
            ell: 16.0,
            interior: 319,
            dt: 1e-3,
            substeps: 1,
            theta: 0.5,
            blowup: 1e12,
            ou_window: 40.0,
        }
    }
}

impl RdParams {
    /// Default scenario with `g(x, t) = exp(−x²)·sin(2πt/T)`.
    pub fn periodic(period: f64) -> Self {
        Self {
            g_time: TemporalProfile::Periodic { period },
            ..Self::default()
        }
    }

    /// `f = g = h = 0`: the linear heat-type part alone.
    pub fn linear_only() -> Self {
        Self {
            f: Nonlinearity::zero(),
            g_space: SpatialProfile::Zero,
            g_time: TemporalProfile::Zero,
            h: SpatialProfile::Zero,
            ..Self::default()
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.ell, self.interior)
    }

    /// Step of the driving paths.
    pub fn dt_path(&self) -> f64 {
        self.dt * self.substeps as f64
    }

    /// Same scenario with `dx/2` and `dt/4`, driven by the same paths.
    pub fn refined(&self) -> Self {
        Self {
            interior: 2 * self.interior + 1,
            dt: self.dt / 4.0,
            substeps: self.substeps * 4,
            ..self.clone()
        }
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            bad.push(format!("lambda: must be positive, got {}", self.lambda));
        }
        if !(self.p >= 2.0) {
            bad.push(format!("p: must be ≥ 2, got {}", self.p));
        }
        if !(self.ell > 0.0) {
            bad.push(format!("ell: must be positive, got {}", self.ell));
        }
        if self.interior < 3 {
            bad.push(format!("interior: need at least 3 nodes, got {}", self.interior));
        }
        if !(self.dt > 0.0) {
            bad.push(format!("dt: must be positive, got {}", self.dt));
        }
        if self.substeps == 0 {
            bad.push("substeps: must be ≥ 1".to_string());
        }
        if !(0.5..=1.0).contains(&self.theta) {
            bad.push(format!("theta: must lie in [0.5, 1], got {}", self.theta));
        }
        if !(self.blowup > 0.0) {
            bad.push("blowup: must be positive".to_string());
        }
        if !(self.ou_window > 0.0) {
            bad.push("ou_window: must be positive".to_string());
        }
        if let SpatialProfile::Gaussian { width, .. } = self.h {
            if !(width > 0.0) {
                bad.push("h.width: must be positive".to_string());
            }
        }
        if let TemporalProfile::Periodic { period } = self.g_time {
            if !(period > 0.0) {
                bad.push("g_time.period: must be positive".to_string());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(crate::error::Error::Config(bad))
        }
    }

    pub(crate) fn require_valid(&self) -> Result<()> {
        self.validate()?;
        if self.dt_path() <= 0.0 {
            return Err(invalid("path step must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_round_trips_through_toml() {
        let p = RdParams::periodic(2.0);
        let text = toml::to_string(&p).unwrap();
        let back: RdParams = toml::from_str(&text).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let p: RdParams = toml::from_str("lambda = 2.0\n[g_time]\nkind = \"periodic\"\nperiod = 3.0\n").unwrap();
        assert_eq!(p.lambda, 2.0);
        assert_eq!(p.g_time.period(), Some(3.0));
        assert_eq!(p.interior, 319);
    }

    #[test]
    fn validation_lists_all_problems() {
        let p = RdParams {
            lambda: -1.0,
            dt: 0.0,
            ..RdParams::default()
        };
        match p.validate() {
            Err(crate::error::Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn horner() {
        let f = Nonlinearity {
            coeffs: vec![1.0, -2.0, 0.0, 3.0],
            source: SpatialProfile::Zero,
        };
        assert_eq!(f.poly(2.0), 1.0 - 4.0 + 24.0);
        assert_eq!(Nonlinearity::negative_cubic().poly(-2.0), 8.0);
    }

    #[test]
    fn refined_keeps_path_step() {
        let p = RdParams::default();
        let r = p.refined();
        assert!((r.dt_path() - p.dt_path()).abs() < 1e-18);
        assert!((r.grid().unwrap().dx() - p.grid().unwrap().dx() / 2.0).abs() < 1e-15);
    }
}
