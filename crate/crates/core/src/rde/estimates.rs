//! Structural checks and a-priori bounds: conditions on `f`, forcing
//! integrability, the absorbing radius `L(τ, ω)` and tail mass.

use std::sync::Arc;

use crate::cocycle::FamilySpec;
use crate::error::{invalid, Error, Result};
use crate::wiener::{grid_index, WienerPath};

use super::params::{FCertificate, Nonlinearity, SpatialProfile, TemporalProfile};
use super::solver::{ball_sample, RdCocycle};
use super::state::{Grid, StateVector};

/// Worst margins of the four conditions on `f` over a sample grid; each is
/// `right side − left side`, so non-negative means satisfied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FMargins {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
}

impl FMargins {
    pub fn min(&self) -> f64 {
        self.f1.min(self.f2).min(self.f3).min(self.f4)
    }
}

/// Margins below this are violations.
pub const F_MARGIN_TOLERANCE: f64 = -1e-8;

/// Uniform `(x, s)` sample on `[−ℓ, ℓ] × [−s_max, s_max]`, both including 0.
pub fn f_sample_grid(ell: f64, nx: usize, s_max: f64, ns: usize) -> (Vec<f64>, Vec<f64>) {
    let sym = |m: f64, n: usize| -> Vec<f64> {
        let n = n.max(1);
        (-(n as i64)..=n as i64).map(|k| m * k as f64 / n as f64).collect()
    };
    (sym(ell, nx), sym(s_max, ns))
}

/// Checks the four structural conditions on `f` at every `(x, s)` of the
/// sample, with derivatives taken by central differences.
pub fn verify_f_conditions(f: &Nonlinearity, cert: &FCertificate, p: f64, xs: &[f64], ss: &[f64]) -> Result<FMargins> {
    if xs.is_empty() || ss.is_empty() {
        return Err(invalid("empty sample grid"));
    }
    let mut worst = FMargins {
        f1: f64::INFINITY,
        f2: f64::INFINITY,
        f3: f64::INFINITY,
        f4: f64::INFINITY,
    };
    let mut witness: [(f64, f64); 4] = [(0.0, 0.0); 4];
    for &x in xs {
        for &s in ss {
            let fv = f.value(x, s);
            let m1 = -cert.alpha1 * s.abs().powf(p) + cert.psi1.value(x) - fv * s;
            let m2 = cert.alpha2 * s.abs().powf(p - 1.0) + cert.psi2.value(x) - fv.abs();
            let hs = 1e-5 * s.abs().max(1.0);
            let dfds = (f.value(x, s + hs) - f.value(x, s - hs)) / (2.0 * hs);
            let m3 = cert.alpha3 - dfds;
            let hx = 1e-5 * x.abs().max(1.0);
            let dfdx = (f.value(x + hx, s) - f.value(x - hx, s)) / (2.0 * hx);
            let m4 = cert.psi3.value(x) - dfdx.abs();
            for (k, (m, w)) in [
                (m1, &mut worst.f1),
                (m2, &mut worst.f2),
                (m3, &mut worst.f3),
                (m4, &mut worst.f4),
            ]
            .into_iter()
            .enumerate()
            {
                if m < *w {
                    *w = m;
                    witness[k] = (x, s);
                }
            }
        }
    }
    let names = ["f1", "f2", "f3", "f4"];
    let vals = [worst.f1, worst.f2, worst.f3, worst.f4];
    if let Some(k) = (0..4)
        .filter(|&k| vals[k] < F_MARGIN_TOLERANCE)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
    {
        return Err(Error::ConditionViolated {
            condition: names[k],
            x: witness[k].0,
            s: witness[k].1,
            margin: vals[k],
        });
    }
    Ok(worst)
}

/// `e^{−λτ}∫₋∞^τ e^{λs} γ(s)² ds` with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PastIntegral {
    pub value: f64,
    pub tail: f64,
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, max_step: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut n = ((b - a) / max_step).ceil() as usize;
    n += n % 2;
    let n = n.max(2);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `e^{−λτ}∫₋∞^τ e^{λs} γ(s)² ds`, normalized so that it stays bounded for
/// large `τ`. Fails with [`Error::Divergent`] when `γ²` grows into the past
/// at rate `λ` or faster.
pub fn weighted_past_integral(gamma: &TemporalProfile, lambda: f64, tau: f64) -> Result<PastIntegral> {
    weighted_past_integral_with_step(gamma, lambda, tau, 0.01)
}

pub fn weighted_past_integral_with_step(
    gamma: &TemporalProfile,
    lambda: f64,
    tau: f64,
    max_step: f64,
) -> Result<PastIntegral> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    let env = gamma.envelope();
    if env.scale == 0.0 || gamma.is_zero() {
        return Ok(PastIntegral { value: 0.0, tail: 0.0 });
    }
    let decay = lambda + env.rate;
    if !(decay > 0.0) {
        return Err(Error::Divergent(format!(
            "e^{{λs}}‖g(·,s)‖² does not decay as s → −∞ (λ = {lambda}, growth rate {})",
            -env.rate
        )));
    }
    let step = match gamma.period() {
        Some(t) => max_step.min(t / 64.0),
        None => max_step,
    };
    let start = tau.min(env.until) - 40.0 / decay;
    let tail = env.scale * ((decay * start) - lambda * tau).exp() / decay;
    let mut cuts = vec![start];
    cuts.extend(gamma.kinks().into_iter().filter(|&k| k > start && k < tau));
    cuts.push(tau);
    let f = |s: f64| (lambda * (s - tau)).exp() * gamma.value(s).powi(2);
    let value = cuts.windows(2).map(|w| simpson(f, w[0], w[1], step)).sum();
    Ok(PastIntegral { value, tail })
}

/// Forcing integrability: `∫₋∞^τ e^{λs}‖g(·, s)‖² ds` (unnormalized) on the
/// grid of `sys`.
pub fn check_g_integrability(
    g_space: &SpatialProfile,
    g_time: &TemporalProfile,
    grid: &Grid,
    lambda: f64,
    tau: f64,
) -> Result<f64> {
    let a = StateVector::from_fn(grid, |x| g_space.value(x)).l2_norm_sq();
    if a == 0.0 {
        return Ok(0.0);
    }
    let pi = weighted_past_integral(g_time, lambda, tau)?;
    Ok(a * pi.value * (lambda * tau).exp())
}

/// The three pieces of the absorbing radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusTerms {
    /// `z(ω)`.
    pub z: f64,
    /// `e^{−λτ}∫₋∞^τ e^{λs}‖g(·, s)‖² ds`.
    pub forcing: f64,
    /// `∫₋∞⁰ e^{λs}|z(θₛω)|ᵖ ds`.
    pub noise: f64,
    /// Truncation estimate of `noise`.
    pub noise_tail: f64,
}

impl RadiusTerms {
    /// `L(τ, ω) = β(1 + z²) + β·forcing + β·noise`.
    pub fn absorbing(&self, beta: f64) -> f64 {
        beta * (1.0 + self.z * self.z) + beta * self.forcing + beta * self.noise
    }

    /// Same bound for the transformed variable `v`, without the `z²` term.
    pub fn energy(&self, beta: f64) -> f64 {
        beta * (1.0 + self.forcing + self.noise)
    }
}

/// `∫₋∞⁰ e^{λs}|z(θₛω)|ᵖ ds` by Simpson's rule on each path cell, with the
/// mid-cell value of `z` from the exact half-step update.
pub fn noise_integral(sys: &RdCocycle, omega: &WienerPath, half_cells: usize) -> Result<(f64, f64)> {
    let p = sys.params();
    let dt = omega.dt();
    let lambda = p.lambda;
    let n = grid_index((p.ou_window / dt).ceil() * dt, dt)? as usize;
    let start = omega.shift(-(n as f64) * dt)?;
    let ou = sys.ou(&start)?;
    let sub = 2 * half_cells.max(1);
    let zs = ou.forward_values(n, sub)?;
    let h = dt / sub as f64;
    let s0 = -(n as f64) * dt;
    let g = |j: usize| (lambda * (s0 + j as f64 * h)).exp() * zs[j].abs().powf(p.p);
    let mut sum = 0.0;
    for k in 0..(zs.len() - 1) / 2 {
        let j = 2 * k;
        sum += g(j) + 4.0 * g(j + 1) + g(j + 2);
    }
    let value = sum * h / 3.0;
    let zmax = zs.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let tail = (lambda * s0).exp() * zmax.powf(p.p) / lambda;
    Ok((value, tail))
}

/// Components of `L(τ, ω)` for `sys`.
pub fn radius_terms(sys: &RdCocycle, tau: f64, omega: &WienerPath) -> Result<RadiusTerms> {
    let p = sys.params();
    let z = sys.ou(omega)?.value();
    let a = sys.forcing_profile().l2_norm_sq();
    let forcing = if a == 0.0 {
        0.0
    } else {
        a * weighted_past_integral(&p.g_time, p.lambda, tau)?.value
    };
    let (noise, noise_tail) = noise_integral(sys, omega, 1)?;
    Ok(RadiusTerms {
        z,
        forcing,
        noise,
        noise_tail,
    })
}

/// `L(τ, ω)`.
pub fn absorbing_radius(sys: &RdCocycle, tau: f64, omega: &WienerPath, beta: f64) -> Result<f64> {
    Ok(radius_terms(sys, tau, omega)?.absorbing(beta))
}

/// Calibrated constant `β` of the absorbing radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingRadius {
    pub beta: f64,
}

/// Safety factor applied on top of the largest observed ratio.
pub const BETA_SAFETY: f64 = 2.0;

impl AbsorbingRadius {
    /// Smallest `β` covering every observed `‖u‖²/L₁` (with `L₁` the radius
    /// at `β = 1`), times [`BETA_SAFETY`].
    pub fn calibrate(ratios: impl IntoIterator<Item = f64>) -> Result<Self> {
        let m = ratios.into_iter().fold(f64::NEG_INFINITY, f64::max);
        if !(m > 0.0) || !m.is_finite() {
            return Err(invalid("calibration needs finite positive ratios"));
        }
        Ok(Self { beta: BETA_SAFETY * m })
    }

    pub fn value(&self, sys: &RdCocycle, tau: f64, omega: &WienerPath) -> Result<f64> {
        absorbing_radius(sys, tau, omega, self.beta)
    }

    /// Balls of radius `sqrt(L(τ, ω))` around 0.
    pub fn family(&self, sys: &RdCocycle) -> FamilySpec<StateVector> {
        let beta = self.beta;
        let sys_r = Arc::new(sys.clone());
        let dirs: Arc<Vec<StateVector>> = Arc::new(sys.directions().to_vec());
        FamilySpec::ball(
            format!("absorbing-beta-{beta}"),
            sys.zero_state(),
            move |tau, omega| {
                absorbing_radius(&sys_r, tau, omega, beta)
                    .map(f64::sqrt)
                    .unwrap_or(f64::INFINITY)
            },
            move |c, r| ball_sample(&dirs, c, r),
        )
    }
}

/// `∫_{|x| ≥ K} u² dx` on the grid.
pub fn tail_mass(u: &StateVector, k: f64) -> Result<f64> {
    let ell = u.ell();
    if !(k > 0.0) || k >= ell {
        return Err(invalid(format!("tail radius must lie in (0, {ell}), got {k}")));
    }
    let dx = u.dx();
    let cut = k - 1e-9 * dx;
    Ok(dx
        * u.values()
            .iter()
            .enumerate()
            .filter(|(j, _)| u.x(*j).abs() >= cut)
            .map(|(_, v)| v * v)
            .sum::<f64>())
}
