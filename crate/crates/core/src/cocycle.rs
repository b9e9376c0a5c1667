//! Two-parameter cocycles over `(ℝ, θ₁)` and `(Ω, θ₂)`.
//!
//! The initial-time parameter uses `θ₁,ₜ(τ) = τ + t`; the noise parameter is
//! a [`WienerPath`] shifted by [`WienerPath::shift`]. A system implements
//! [`Cocycle::evolve`], i.e. `Φ(t, τ, ω, x)` where `ω` is the path as seen
//! from the initial time `τ`. The axioms
//!
//! ```text
//! Φ(0, τ, ω, ·) = id
//! Φ(t + s, τ, ω, ·) = Φ(t, τ + s, θ₂,ₛω, ·) ∘ Φ(s, τ, ω, ·)
//! ```
//!
//! are checked on samples by [`check_identity`] and [`check_cocycle`].

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::setops::{hausdorff, semidist, MetricState, PointCloud};
use crate::wiener::{grid_index, WienerPath};

/// The shift `θ₁,ₜ(h) = h + t` on initial times.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TimeShift;

impl TimeShift {
    #[inline]
    pub fn apply(self, h: f64, t: f64) -> f64 {
        h + t
    }
}

/// A continuous cocycle `Φ(t, τ, ω, x)`.
///
/// Implementations must be pure: the engine calls `evolve` from many
/// threads and relies on identical inputs giving identical outputs.
pub trait Cocycle: Send + Sync {
    type State: MetricState;

    /// `Φ(t, τ, ω, x)` for `t ≥ 0`, a multiple of [`time_step`](Self::time_step).
    fn evolve(&self, t: f64, tau: f64, omega: &WienerPath, x: &Self::State) -> Result<Self::State>;

    /// `Φ(t, τ, ω, ·)` applied to many initial states. Results are in input order.
    fn evolve_batch(&self, t: f64, tau: f64, omega: &WienerPath, xs: &[Self::State]) -> Vec<Result<Self::State>> {
        xs.par_iter().map(|x| self.evolve(t, tau, omega, x)).collect()
    }

    /// Grid quantum for durations and shifts.
    fn time_step(&self) -> f64;

    /// Period of the deterministic forcing, if any.
    fn period(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> String;
}

pub(crate) fn check_aligned(t: f64, dt: f64, what: &str) -> Result<()> {
    grid_index(t, dt)
        .map(|_| ())
        .map_err(|_| invalid(format!("{what} = {t} is not a multiple of the time step {dt}")))
}

/// One `(τ, ω, x)` triple for axiom checks.
#[derive(Debug, Clone)]
pub struct CocycleSample<S> {
    pub tau: f64,
    pub omega: WienerPath,
    pub x: S,
}

/// Largest absolute and relative distance observed in a check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub absolute: f64,
    pub relative: f64,
}

impl Residual {
    fn observe(&mut self, dist: f64, reference_norm: f64) {
        let rel = if reference_norm > f64::EPSILON {
            dist / reference_norm
        } else {
            dist
        };
        self.absolute = self.absolute.max(dist);
        self.relative = self.relative.max(rel);
    }

    fn merge(self, other: Self) -> Self {
        Self {
            absolute: self.absolute.max(other.absolute),
            relative: self.relative.max(other.relative),
        }
    }
}

/// Structured outcome of a sampled check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub check: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualRecord {
    pub fn new(check: impl Into<String>, samples: usize, max_residual: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            samples,
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
        }
    }
}

fn reduce<S, F>(samples: &[S], f: F) -> Result<Residual>
where
    S: Sync,
    F: Fn(&S) -> Result<Residual> + Sync,
{
    if samples.is_empty() {
        return Err(invalid("no samples"));
    }
    samples
        .par_iter()
        .map(&f)
        .try_reduce(Residual::default, |a, b| Ok(a.merge(b)))
}

/// `max d(Φ(0, τ, ω, x), x)`.
pub fn check_identity<C: Cocycle>(sys: &C, samples: &[CocycleSample<C::State>]) -> Result<Residual> {
    reduce(samples, |s| {
        let y = sys.evolve(0.0, s.tau, &s.omega, &s.x)?;
        let mut r = Residual::default();
        r.observe(y.distance(&s.x), s.x.norm());
        Ok(r)
    })
}

/// `max d(Φ(t+s, τ, ω, x), Φ(t, τ+s, θₛω, Φ(s, τ, ω, x)))`.
pub fn check_cocycle<C: Cocycle>(sys: &C, t: f64, s: f64, samples: &[CocycleSample<C::State>]) -> Result<Residual> {
    let dt = sys.time_step();
    check_aligned(t, dt, "t")?;
    check_aligned(s, dt, "s")?;
    if t < 0.0 || s < 0.0 {
        return Err(invalid("durations must be non-negative"));
    }
    reduce(samples, |smp| {
        let direct = sys.evolve(t + s, smp.tau, &smp.omega, &smp.x)?;
        let mid = sys.evolve(s, smp.tau, &smp.omega, &smp.x)?;
        let shifted = smp.omega.shift(s)?;
        let composed = sys.evolve(t, smp.tau + s, &shifted, &mid)?;
        let mut r = Residual::default();
        r.observe(direct.distance(&composed), direct.norm());
        Ok(r)
    })
}

/// `max d(Φ(t, τ+T, ω, x), Φ(t, τ, ω, x))`.
pub fn check_periodic<C: Cocycle>(
    sys: &C,
    period: f64,
    t: f64,
    samples: &[CocycleSample<C::State>],
) -> Result<Residual> {
    reduce(samples, |s| {
        let a = sys.evolve(t, s.tau + period, &s.omega, &s.x)?;
        let b = sys.evolve(t, s.tau, &s.omega, &s.x)?;
        let mut r = Residual::default();
        r.observe(a.distance(&b), b.norm());
        Ok(r)
    })
}

/// Largest ratio `d(Φ(t,τ,ω,x), Φ(t,τ,ω,y)) / d(x, y)` over paired samples:
/// an empirical continuity modulus.
pub fn check_continuity<C: Cocycle>(sys: &C, t: f64, pairs: &[(CocycleSample<C::State>, C::State)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(invalid("no samples"));
    }
    pairs
        .par_iter()
        .map(|(s, y)| {
            let d_in = s.x.distance(y);
            if d_in == 0.0 {
                return Ok(0.0);
            }
            let a = sys.evolve(t, s.tau, &s.omega, &s.x)?;
            let b = sys.evolve(t, s.tau, &s.omega, y)?;
            Ok(a.distance(&b) / d_in)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

type SectionFn<S> = Arc<dyn Fn(f64, &WienerPath) -> PointCloud<S> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(f64, &WienerPath) -> f64 + Send + Sync>;
type Sampler<S> = Arc<dyn Fn(&S, f64) -> PointCloud<S> + Send + Sync>;

#[derive(Clone)]
enum Shape<S> {
    Cloud {
        section: SectionFn<S>,
        norm_bound: ScalarFn,
    },
    Ball {
        center: S,
        radius: ScalarFn,
        sampler: Sampler<S>,
    },
}

/// A family `D = {D(τ, ω)}` of nonempty sets, represented by finite samples
/// plus a bound on the norm of each section.
///
/// Translations `D_T(τ, ω) = D(τ + T, ω)` are recorded symbolically, and a
/// translation by `−T` directly after one by `T` cancels it, so round trips
/// give back the original family without any arithmetic on `τ`.
#[derive(Clone)]
pub struct FamilySpec<S> {
    label: String,
    shape: Shape<S>,
    shifts: Vec<f64>,
    inflation: f64,
}

impl<S> fmt::Debug for FamilySpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilySpec")
            .field("label", &self.label)
            .field("shifts", &self.shifts)
            .field("inflation", &self.inflation)
            .finish_non_exhaustive()
    }
}

impl<S: MetricState + 'static> FamilySpec<S> {
    /// Family given by an explicit section rule and norm bound.
    pub fn from_fn(
        label: impl Into<String>,
        section: impl Fn(f64, &WienerPath) -> PointCloud<S> + Send + Sync + 'static,
        norm_bound: impl Fn(f64, &WienerPath) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            shape: Shape::Cloud {
                section: Arc::new(section),
                norm_bound: Arc::new(norm_bound),
            },
            shifts: Vec::new(),
            inflation: 0.0,
        }
    }

    /// The same cloud for every `(τ, ω)`.
    pub fn constant(label: impl Into<String>, cloud: PointCloud<S>) -> Self {
        let bound = cloud.max_norm();
        Self::from_fn(label, move |_, _| cloud.clone(), move |_, _| bound)
    }

    /// Closed balls `B(center, r(τ, ω))`; `sampler(center, r)` produces the
    /// finite sample used as the section.
    pub fn ball(
        label: impl Into<String>,
        center: S,
        radius: impl Fn(f64, &WienerPath) -> f64 + Send + Sync + 'static,
        sampler: impl Fn(&S, f64) -> PointCloud<S> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            shape: Shape::Ball {
                center,
                radius: Arc::new(radius),
                sampler: Arc::new(sampler),
            },
            shifts: Vec::new(),
            inflation: 0.0,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Initial time after applying recorded translations.
    fn effective_tau(&self, tau: f64) -> f64 {
        self.shifts.iter().rev().fold(tau, |acc, o| acc + o)
    }

    /// Sampled section `D(τ, ω)`.
    pub fn section(&self, tau: f64, omega: &WienerPath) -> PointCloud<S> {
        let tau = self.effective_tau(tau);
        match &self.shape {
            Shape::Cloud { section, .. } => section(tau, omega),
            Shape::Ball {
                center,
                radius,
                sampler,
            } => sampler(center, radius(tau, omega)),
        }
    }

    /// Upper bound on `‖D(τ, ω)‖ = sup ‖x‖`.
    pub fn norm_bound(&self, tau: f64, omega: &WienerPath) -> f64 {
        let tau = self.effective_tau(tau);
        let b = match &self.shape {
            Shape::Cloud { norm_bound, .. } => norm_bound(tau, omega),
            Shape::Ball { center, radius, .. } => center.norm() + radius(tau, omega),
        };
        b + self.inflation
    }

    /// Radius of a ball family at `(τ, ω)`, if this is one.
    pub fn radius(&self, tau: f64, omega: &WienerPath) -> Option<f64> {
        match &self.shape {
            Shape::Ball { radius, .. } => Some(radius(self.effective_tau(tau), omega) + self.inflation),
            Shape::Cloud { .. } => None,
        }
    }

    /// How far `x` lies outside `D(τ, ω)`: exact for balls, distance to the
    /// sample for cloud families.
    pub fn excess(&self, tau: f64, omega: &WienerPath, x: &S) -> f64 {
        let tau_eff = self.effective_tau(tau);
        let raw = match &self.shape {
            Shape::Ball { center, radius, .. } => x.distance(center) - radius(tau_eff, omega),
            Shape::Cloud { section, .. } => section(tau_eff, omega)
                .points()
                .iter()
                .map(|p| p.distance(x))
                .fold(f64::INFINITY, f64::min),
        };
        (raw - self.inflation).max(0.0)
    }

    /// Largest [`excess`](Self::excess) over `xs`, evaluating the section
    /// rule once.
    pub fn max_excess(&self, tau: f64, omega: &WienerPath, xs: &[S]) -> f64 {
        let tau_eff = self.effective_tau(tau);
        let raw = match &self.shape {
            Shape::Ball { center, radius, .. } => {
                let r = radius(tau_eff, omega);
                xs.iter()
                    .map(|x| x.distance(center) - r)
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            Shape::Cloud { section, .. } => {
                let sec = section(tau_eff, omega);
                xs.iter()
                    .map(|x| sec.points().iter().map(|p| p.distance(x)).fold(f64::INFINITY, f64::min))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        };
        (raw - self.inflation).max(0.0)
    }

    /// `D_T(τ, ω) = D(τ + T, ω)`.
    pub fn translate(&self, t: f64) -> Self {
        let mut out = self.clone();
        if t == 0.0 {
            return out;
        }
        if out.shifts.last() == Some(&-t) {
            out.shifts.pop();
        } else {
            out.shifts.push(t);
        }
        out
    }

    /// Same sections, norm bound (and ball radius) enlarged by `eps`.
    pub fn inflate(&self, eps: f64) -> Self {
        let mut out = self.clone();
        out.inflation += eps;
        out.label = format!("{}+{eps}", self.label);
        out
    }
}

/// `translate_family(D, T)`.
pub fn translate_family<S: MetricState + 'static>(family: &FamilySpec<S>, t: f64) -> FamilySpec<S> {
    family.translate(t)
}

/// Section-wise equality at the given parameters: `B(τ, ω) = D(τ, ω)` for
/// each listed `(τ, ω)`, up to `tol` in Hausdorff distance.
pub fn families_equal_on<S: MetricState + 'static>(
    a: &FamilySpec<S>,
    b: &FamilySpec<S>,
    params: &[(f64, WienerPath)],
    tol: f64,
) -> Result<bool> {
    for (tau, omega) in params {
        let d = hausdorff(&a.section(*tau, omega), &b.section(*tau, omega))?;
        if d > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `e^{λs} ‖D(τ + s, θₛω)‖²` along a descending grid of `s ≤ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
}

impl DecayProfile {
    /// Largest `value(s) / value(s₀)` over `s ≤ s_cut`, with `s₀` the first grid point.
    pub fn max_ratio_beyond(&self, s_cut: f64) -> f64 {
        let reference = self.values[0];
        self.s
            .iter()
            .zip(&self.values)
            .filter(|(s, _)| **s <= s_cut)
            .map(|(_, v)| if reference > 0.0 { v / reference } else { *v })
            .fold(0.0, f64::max)
    }

    /// Whether the profile drops below `ratio × value(s₀)` for every `s ≤ s_cut`.
    pub fn decays_below(&self, s_cut: f64, ratio: f64) -> bool {
        self.s.iter().any(|s| *s <= s_cut) && self.max_ratio_beyond(s_cut) <= ratio
    }
}

pub fn check_dlambda_membership<S: MetricState + 'static>(
    family: &FamilySpec<S>,
    lambda: f64,
    tau: f64,
    omega: &WienerPath,
    s_grid: &[f64],
) -> Result<DecayProfile> {
    if s_grid.is_empty() || s_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("s_grid must be nonempty and strictly descending"));
    }
    let values = s_grid
        .iter()
        .map(|&s| {
            let w = omega.shift(s)?;
            let r = family.norm_bound(tau + s, &w);
            Ok((lambda * s).exp() * r * r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayProfile {
        s: s_grid.to_vec(),
        values,
    })
}

type QuasiFn<S> = Arc<dyn Fn(f64, &WienerPath) -> Result<S> + Send + Sync>;
type OrbitFn<S> = Arc<dyn Fn(f64, f64, &WienerPath) -> Result<S> + Send + Sync>;

/// `ξ(τ, ω)` with `Φ(t, τ, ω, ξ(τ, ω)) = ξ(t + τ, θₜω)`.
pub struct QuasiSolution<S> {
    values: QuasiFn<S>,
}

impl<S> Clone for QuasiSolution<S> {
    fn clone(&self) -> Self {
        Self {
            values: Arc::clone(&self.values),
        }
    }
}

impl<S> QuasiSolution<S> {
    pub fn new(f: impl Fn(f64, &WienerPath) -> Result<S> + Send + Sync + 'static) -> Self {
        Self { values: Arc::new(f) }
    }

    pub fn at(&self, tau: f64, omega: &WienerPath) -> Result<S> {
        (self.values)(tau, omega)
    }
}

/// `ψ(t, s, ω)` with `Φ(t, τ + s, θ_τω, ψ(τ, s, ω)) = ψ(t + τ, s, ω)`.
pub struct CompleteOrbit<S> {
    values: OrbitFn<S>,
    pub bounding_family: Option<FamilySpec<S>>,
}

impl<S: Clone> Clone for CompleteOrbit<S> {
    fn clone(&self) -> Self {
        Self {
            values: Arc::clone(&self.values),
            bounding_family: self.bounding_family.clone(),
        }
    }
}

impl<S> CompleteOrbit<S> {
    pub fn new(f: impl Fn(f64, f64, &WienerPath) -> Result<S> + Send + Sync + 'static) -> Self {
        Self {
            values: Arc::new(f),
            bounding_family: None,
        }
    }

    pub fn at(&self, t: f64, s: f64, omega: &WienerPath) -> Result<S> {
        (self.values)(t, s, omega)
    }
}

/// `ψ(t, s, ω) = ξ(t + s, θₜω)`.
pub fn orbit_from_quasi<S: 'static>(xi: &QuasiSolution<S>) -> CompleteOrbit<S> {
    let xi = QuasiSolution::clone(xi);
    CompleteOrbit::new(move |t, s, omega| {
        let w = omega.shift(t)?;
        xi.at(t + s, &w)
    })
}

/// `ξˢ(τ, ω) = ψ(τ − s, s, θ_{s−τ}ω)`.
pub fn quasi_from_orbit<S: 'static>(psi: &CompleteOrbit<S>, s: f64) -> QuasiSolution<S> {
    let values = Arc::clone(&psi.values);
    QuasiSolution::new(move |tau, omega| {
        let w = omega.shift(s - tau)?;
        values(tau - s, s, &w)
    })
}

/// Residual of the quasi-solution identity over `(t, τ, ω)` samples.
pub fn check_quasi_solution<C: Cocycle>(
    sys: &C,
    xi: &QuasiSolution<C::State>,
    samples: &[(f64, f64, WienerPath)],
) -> Result<Residual> {
    reduce(samples, |(t, tau, omega)| {
        let lhs = sys.evolve(*t, *tau, omega, &xi.at(*tau, omega)?)?;
        let rhs = xi.at(t + tau, &omega.shift(*t)?)?;
        let mut r = Residual::default();
        r.observe(lhs.distance(&rhs), rhs.norm());
        Ok(r)
    })
}

/// Residual of the complete-orbit identity over `(t, τ, s, ω)` samples.
pub fn check_orbit<C: Cocycle>(
    sys: &C,
    psi: &CompleteOrbit<C::State>,
    samples: &[(f64, f64, f64, WienerPath)],
) -> Result<Residual> {
    reduce(samples, |(t, tau, s, omega)| {
        let start = psi.at(*tau, *s, omega)?;
        let lhs = sys.evolve(*t, tau + s, &omega.shift(*tau)?, &start)?;
        let rhs = psi.at(t + tau, *s, omega)?;
        let mut r = Residual::default();
        r.observe(lhs.distance(&rhs), rhs.norm());
        Ok(r)
    })
}

/// Forward and backward Hausdorff excess between `Φ(t, τ, ω, A(τ, ω))` and
/// `A(τ + t, θₜω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceExcess {
    /// `d(Φ A(τ, ω), A(τ + t, θₜω))`: small for positively invariant families.
    pub forward: f64,
    /// `d(A(τ + t, θₜω), Φ A(τ, ω))`: small for quasi-invariant families.
    pub backward: f64,
}

impl InvarianceExcess {
    pub fn is_invariant(&self, tol: f64) -> bool {
        self.forward <= tol && self.backward <= tol
    }
}

pub fn check_invariance<C: Cocycle>(
    sys: &C,
    family: &FamilySpec<C::State>,
    t: f64,
    tau: f64,
    omega: &WienerPath,
) -> Result<InvarianceExcess>
where
    C::State: 'static,
{
    let start = family.section(tau, omega);
    let images = sys
        .evolve_batch(t, tau, omega, start.points())
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::InitialPoint {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let image = PointCloud::new(images);
    let target = family.section(tau + t, &omega.shift(t)?);
    Ok(InvarianceExcess {
        forward: semidist(&image, &target)?,
        backward: semidist(&target, &image)?,
    })
}
