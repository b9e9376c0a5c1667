//! Scalar cocycles with closed-form pullback attractors.
//!
//! [`ScalarLinearSDE`] is `du = (−λu + g(t)) dt + dω`, advanced by an
//! exponential integrator that is exact on the piecewise-linear path, so its
//! cocycle residuals are pure rounding. Its attractor is the singleton
//!
//! ```text
//! ξ(τ, ω) = ∫₋∞^τ e^{−λ(τ−s)} g(s) ds + z(ω).
//! ```
//!
//! [`BistableODE`] is the autonomous `u' = u − u³` with attractor `[−1, 1]`.

use serde::{Deserialize, Serialize};

use crate::cocycle::{check_aligned, Cocycle, FamilySpec, QuasiSolution};
use crate::error::{invalid, Result};
use crate::setops::PointCloud;
use crate::wiener::{grid_index, ou_value, WienerPath};

/// Time-dependent scalar forcing with closed-form exponential convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forcing {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude · sin(frequency · t + phase)`.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl Forcing {
    /// `sin(2πt/T)`.
    pub fn periodic(period: f64) -> Self {
        Forcing::Sinusoid {
            amplitude: 1.0,
            frequency: std::f64::consts::TAU / period,
            phase: 0.0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Forcing::Zero => 0.0,
            Forcing::Constant { value } => value,
            Forcing::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * t + phase).sin(),
        }
    }

    pub fn period(&self) -> Option<f64> {
        match *self {
            Forcing::Sinusoid { frequency, .. } if frequency != 0.0 => Some(std::f64::consts::TAU / frequency.abs()),
            _ => None,
        }
    }

    /// `∫ₐᵇ e^{−λ(b−r)} g(r) dr`.
    pub fn step_integral(&self, a: f64, b: f64, lambda: f64) -> f64 {
        match *self {
            Forcing::Zero => 0.0,
            Forcing::Constant { value } => value * -(-lambda * (b - a)).exp_m1() / lambda,
            Forcing::Sinusoid {
                amplitude,
                frequency: nu,
                phase,
            } => {
                let den = lambda * lambda + nu * nu;
                let prim = |r: f64| {
                    let arg = nu * r + phase;
                    lambda * arg.sin() - nu * arg.cos()
                };
                amplitude * (prim(b) - (-lambda * (b - a)).exp() * prim(a)) / den
            }
        }
    }

    /// `∫₋∞^τ e^{−λ(τ−s)} g(s) ds`.
    pub fn past_convolution(&self, tau: f64, lambda: f64) -> f64 {
        match *self {
            Forcing::Zero => 0.0,
            Forcing::Constant { value } => value / lambda,
            Forcing::Sinusoid {
                amplitude,
                frequency: nu,
                phase,
            } => {
                let arg = nu * tau + phase;
                amplitude * (lambda * arg.sin() - nu * arg.cos()) / (lambda * lambda + nu * nu)
            }
        }
    }
}

/// `du = (−λu + g(t)) dt + dω` (noise optional).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarLinearSDE {
    pub lambda: f64,
    pub forcing: Forcing,
    pub noise_on: bool,
    /// Step of the driving paths.
    pub dt: f64,
}

impl ScalarLinearSDE {
    pub fn new(lambda: f64, forcing: Forcing, noise_on: bool, dt: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(dt > 0.0) {
            return Err(invalid("lambda and dt must be positive"));
        }
        Ok(Self {
            lambda,
            forcing,
            noise_on,
            dt,
        })
    }

    /// Closed-form attractor point `ξ(τ, ω)`.
    pub fn attractor_point(&self, tau: f64, omega: &WienerPath) -> Result<f64> {
        linear_attractor_point(tau, omega, self)
    }

    pub fn quasi_solution(&self) -> QuasiSolution<f64> {
        let sys = self.clone();
        QuasiSolution::new(move |tau, omega| sys.attractor_point(tau, omega))
    }

    /// Balls of radius `2|ξ(τ, ω)| + 1` around 0: pullback absorbing.
    pub fn absorbing_family(&self, spacing: f64) -> FamilySpec<f64> {
        let sys = self.clone();
        FamilySpec::ball(
            "linear-absorbing",
            0.0,
            move |tau, omega| 2.0 * sys.attractor_point(tau, omega).map(f64::abs).unwrap_or(f64::INFINITY) + 1.0,
            move |c, r| interval_sample(*c, r, spacing),
        )
    }
}

/// `u(τ + t)` from `u(τ) = u0` driven by `ω`.
pub fn linear_evolve(t: f64, tau: f64, omega: &WienerPath, u0: f64, sys: &ScalarLinearSDE) -> Result<f64> {
    if omega.dt() != sys.dt {
        return Err(invalid(format!(
            "path step {} differs from system step {}",
            omega.dt(),
            sys.dt
        )));
    }
    let n = grid_index(t, sys.dt)?;
    if n < 0 {
        return Err(invalid("t must be non-negative"));
    }
    if n == 0 {
        return Ok(u0);
    }
    let n = n as usize;
    let lambda = sys.lambda;
    let decay = (-lambda * sys.dt).exp();
    let weight = -(-lambda * sys.dt).exp_m1() / (lambda * sys.dt);
    let mut u = u0;
    if sys.noise_on {
        let w = omega.covering(omega.t_min(), t)?;
        let v = w.values();
        let o = w.origin_index();
        for k in 0..n {
            let a = tau + k as f64 * sys.dt;
            let b = tau + (k + 1) as f64 * sys.dt;
            u = decay * u + sys.forcing.step_integral(a, b, lambda) + weight * (v[o + k + 1] - v[o + k]);
        }
    } else {
        for k in 0..n {
            let a = tau + k as f64 * sys.dt;
            let b = tau + (k + 1) as f64 * sys.dt;
            u = decay * u + sys.forcing.step_integral(a, b, lambda);
        }
    }
    Ok(u)
}

/// `ξ(τ, ω)`: closed-form deterministic convolution plus `z(ω)` when noise
/// is on. Fails with a quality error when the path's left window is too short.
pub fn linear_attractor_point(tau: f64, omega: &WienerPath, sys: &ScalarLinearSDE) -> Result<f64> {
    let det = sys.forcing.past_convolution(tau, sys.lambda);
    if sys.noise_on {
        Ok(det + ou_value(omega, sys.lambda)?.value())
    } else {
        Ok(det)
    }
}

impl Cocycle for ScalarLinearSDE {
    type State = f64;

    fn evolve(&self, t: f64, tau: f64, omega: &WienerPath, x: &f64) -> Result<f64> {
        linear_evolve(t, tau, omega, *x, self)
    }

    fn time_step(&self) -> f64 {
        self.dt
    }

    fn period(&self) -> Option<f64> {
        self.forcing.period()
    }

    fn name(&self) -> String {
        "linear-sde".into()
    }
}

/// `u' = u − u³`, solved in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BistableODE {
    /// Grid quantum for durations (the flow itself is exact for any `t`).
    pub dt: f64,
}

impl Default for BistableODE {
    fn default() -> Self {
        Self { dt: 1e-3 }
    }
}

/// `u(t) = u0 / sqrt(e^{−2t} + u0²(1 − e^{−2t}))`, the closed form of
/// `u0 eᵗ / sqrt(1 + u0²(e^{2t} − 1))` rearranged to avoid overflow.
pub fn bistable_evolve(t: f64, u0: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid("t must be non-negative"));
    }
    if u0 == 0.0 {
        return Ok(0.0);
    }
    let e = (-2.0 * t).exp();
    Ok(u0 / (e + u0 * u0 * -(-2.0 * t).exp_m1()).sqrt())
}

impl Cocycle for BistableODE {
    type State = f64;

    fn evolve(&self, t: f64, _tau: f64, _omega: &WienerPath, x: &f64) -> Result<f64> {
        check_aligned(t, self.dt, "t")?;
        if t == 0.0 {
            return Ok(*x);
        }
        bistable_evolve(t, *x)
    }

    fn time_step(&self) -> f64 {
        self.dt
    }

    fn name(&self) -> String {
        "bistable".into()
    }
}

/// Lattice `c − r, c − r + h, …, c + r` (endpoints included) joined as a chain.
pub fn interval_sample(c: f64, r: f64, spacing: f64) -> PointCloud<f64> {
    if !(r > 0.0) {
        return PointCloud::singleton(c);
    }
    let n = ((2.0 * r / spacing).ceil() as usize).max(1);
    let pts = (0..=n).map(|k| c - r + 2.0 * r * k as f64 / n as f64).collect();
    PointCloud::chain(pts)
}

/// Fixed interval `[−r, r]` as a ball family.
pub fn fixed_interval_family(r: f64, spacing: f64) -> FamilySpec<f64> {
    FamilySpec::ball(
        format!("ball-{r}"),
        0.0,
        move |_, _| r,
        move |c, r| interval_sample(*c, r, spacing),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        // composite Simpson
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let x = a + k as f64 * h;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn step_integrals_match_quadrature() {
        let lambda = 0.7;
        for g in [
            Forcing::Constant { value: 2.5 },
            Forcing::Sinusoid {
                amplitude: 1.3,
                frequency: 2.0,
                phase: 0.4,
            },
        ] {
            let (a, b) = (0.3, 1.1);
            let exact = g.step_integral(a, b, lambda);
            let num = quad(|r| (-lambda * (b - r)).exp() * g.value(r), a, b, 2000);
            assert!((exact - num).abs() < 1e-12, "{g:?}");
        }
    }

    #[test]
    fn linear_zero_duration_is_identity() {
        let sys = ScalarLinearSDE::new(1.0, Forcing::Constant { value: 1.0 }, true, 0.01).unwrap();
        let w = WienerPath::sample(1, -40.0, 1.0, 0.01).unwrap();
        assert_eq!(linear_evolve(0.0, 3.0, &w, 0.123, &sys).unwrap(), 0.123);
    }

    #[test]
    fn linear_steady_gain() {
        let sys = ScalarLinearSDE::new(1.0, Forcing::Constant { value: 1.0 }, false, 0.01).unwrap();
        let w = WienerPath::zero(-1.0, 1.0, 0.01).unwrap();
        let u = linear_evolve(40.0, 0.0, &w, 0.0, &sys).unwrap();
        assert!((u - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_attractor_closed_forms() {
        let w = WienerPath::zero(-1.0, 1.0, 0.01).unwrap();
        let c = ScalarLinearSDE::new(1.0, Forcing::Constant { value: 1.0 }, false, 0.01).unwrap();
        assert_eq!(linear_attractor_point(5.0, &w, &c).unwrap(), 1.0);
        let s = ScalarLinearSDE::new(
            1.0,
            Forcing::Sinusoid {
                amplitude: 1.0,
                frequency: 1.0,
                phase: 0.0,
            },
            false,
            0.01,
        )
        .unwrap();
        for tau in [-2.0, 0.0, 0.7, 3.0_f64] {
            let expect = (tau.sin() - tau.cos()) / 2.0;
            assert!((linear_attractor_point(tau, &w, &s).unwrap() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_attractor_needs_left_window() {
        let sys = ScalarLinearSDE::new(1.0, Forcing::Zero, true, 0.01).unwrap();
        let short = WienerPath::from_fn(-1.0, 1.0, 0.01, |s| s * s).unwrap();
        assert!(linear_attractor_point(0.0, &short, &sys).is_err());
    }

    #[test]
    fn bistable_closed_form() {
        assert_eq!(bistable_evolve(5.0, 0.0).unwrap(), 0.0);
        assert!((bistable_evolve(10.0, 2.0).unwrap() - 1.0).abs() < 1e-6);
        let u = bistable_evolve(50.0, -0.5).unwrap();
        assert!((u + 1.0).abs() < 1e-12 && u < 0.0);
        // matches the unrearranged formula where it does not overflow
        let (t, u0): (f64, f64) = (1.3, 0.4);
        let direct = u0 * t.exp() / (1.0 + u0 * u0 * ((2.0 * t).exp() - 1.0)).sqrt();
        assert!((bistable_evolve(t, u0).unwrap() - direct).abs() < 1e-14);
        // solves u' = u − u³
        let h = 1e-6;
        let d = (bistable_evolve(t + h, u0).unwrap() - bistable_evolve(t - h, u0).unwrap()) / (2.0 * h);
        let u = bistable_evolve(t, u0).unwrap();
        assert!((d - (u - u * u * u)).abs() < 1e-8);
    }

    #[test]
    fn interval_sample_spacing() {
        let c = interval_sample(0.0, 5.0, 0.5);
        assert_eq!(c.len(), 21);
        assert_eq!(c.points()[0], -5.0);
        assert_eq!(c.points()[20], 5.0);
        assert!(c.points().contains(&0.0));
        assert_eq!(c.edges().len(), 20);
    }
}
