//! Pullback engine.
//!
//! Everything here is built on one primitive, the pullback ensemble
//!
//! ```text
//! E(t) = Φ(t, τ − t, θ₋ₜω, D(τ − t, θ₋ₜω)),
//! ```
//!
//! evaluated on an increasing schedule of `t`. Ω-limit sets are the limit of
//! `E(t)` along the schedule, declared once consecutive ensembles stay within
//! `convergence_tol` in Hausdorff distance for `stall_limit` steps.

use serde::{Deserialize, Serialize};

use super::{hausdorff, semidist, MetricState, PointCloud};
use crate::cocycle::{check_aligned, Cocycle, FamilySpec};
use crate::error::{invalid, Error, Result};
use crate::wiener::WienerPath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PullbackSchedule {
    pub t_values: Vec<f64>,
    pub convergence_tol: f64,
    pub stall_limit: usize,
}

impl PullbackSchedule {
    pub fn new(t_values: Vec<f64>, convergence_tol: f64, stall_limit: usize) -> Result<Self> {
        if t_values.is_empty() {
            return Err(invalid("empty schedule"));
        }
        if t_values.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || t_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("schedule times must be non-negative and strictly increasing"));
        }
        if !(convergence_tol > 0.0) || stall_limit == 0 {
            return Err(invalid("convergence_tol must be positive and stall_limit ≥ 1"));
        }
        Ok(Self {
            t_values,
            convergence_tol,
            stall_limit,
        })
    }

    /// `t = start, start + step, …, end`.
    pub fn linear(start: f64, step: f64, end: f64, convergence_tol: f64, stall_limit: usize) -> Result<Self> {
        if !(step > 0.0) {
            return Err(invalid("step must be positive"));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        Self::new(
            (0..=n).map(|k| start + k as f64 * step).collect(),
            convergence_tol,
            stall_limit,
        )
    }

    /// Re-runs the constructor checks (for deserialized schedules).
    pub fn validate(&self) -> Result<()> {
        Self::new(self.t_values.clone(), self.convergence_tol, self.stall_limit).map(|_| ())
    }

    pub(crate) fn check_grid(&self, dt: f64) -> Result<()> {
        self.t_values
            .iter()
            .try_for_each(|&t| check_aligned(t, dt, "scheduled t"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineOptions {
    /// Points closer than this are merged in every output cloud.
    pub dedup_tol: f64,
    /// When set, edges whose images are farther apart than this are bisected
    /// in the initial section and the midpoint is evolved too.
    pub refine: Option<f64>,
    /// Cap on initial points per ensemble, refinement included.
    pub max_points: usize,
    pub max_refine_rounds: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            dedup_tol: 1e-6,
            refine: None,
            max_points: 4096,
            max_refine_rounds: 64,
        }
    }
}

/// Result of [`Engine::omega_limit`]. Non-convergence is reported, not raised.
#[derive(Debug, Clone)]
pub struct OmegaLimit<S> {
    pub cloud: PointCloud<S>,
    pub converged: bool,
    /// `(t, Hausdorff distance to the previous ensemble)`; the first entry is `NaN`.
    pub trace: Vec<(f64, f64)>,
    pub ensembles: Vec<PointCloud<S>>,
}

/// Result of [`Engine::detect_absorbing`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Absorption {
    /// Smallest scheduled `t` from which every later ensemble stays inside.
    pub entry_time: Option<f64>,
    /// `(t, largest excess of the ensemble over the absorbing section)`.
    pub excess_trace: Vec<(f64, f64)>,
}

impl Absorption {
    /// Entry time from a `(t, excess)` trace: the earliest scheduled time
    /// after which every excess is at most `slack`.
    pub fn from_trace(excess_trace: Vec<(f64, f64)>, slack: f64) -> Self {
        let mut entry_time = None;
        for &(t, e) in excess_trace.iter().rev() {
            if e > slack {
                break;
            }
            entry_time = Some(t);
        }
        Self {
            entry_time,
            excess_trace,
        }
    }

    /// Scheduled times at or after entry where the ensemble was outside
    /// (always zero when `entry_time` is set; kept for reports).
    pub fn post_entry_violations(&self, slack: f64) -> usize {
        match self.entry_time {
            Some(te) => self.excess_trace.iter().filter(|(t, e)| *t >= te && *e > slack).count(),
            None => self.excess_trace.len(),
        }
    }
}

/// Pullback computations for one cocycle.
pub struct Engine<'a, C: Cocycle> {
    sys: &'a C,
    opts: EngineOptions,
}

impl<'a, C> Engine<'a, C>
where
    C: Cocycle,
    C::State: 'static,
{
    pub fn new(sys: &'a C) -> Self {
        Self::with_options(sys, EngineOptions::default())
    }

    pub fn with_options(sys: &'a C, opts: EngineOptions) -> Self {
        Self { sys, opts }
    }

    pub fn options(&self) -> &EngineOptions {
        &self.opts
    }

    pub fn system(&self) -> &C {
        self.sys
    }

    fn evolve_all(
        &self,
        t: f64,
        tau: f64,
        omega: &WienerPath,
        xs: &[C::State],
        offset: usize,
    ) -> Result<Vec<C::State>> {
        self.sys
            .evolve_batch(t, tau, omega, xs)
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                r.map_err(|e| Error::InitialPoint {
                    index: offset + i,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    /// `Φ(t, τ − t, θ₋ₜω, D(τ − t, θ₋ₜω))`, deduplicated.
    pub fn pullback_ensemble(
        &self,
        family: &FamilySpec<C::State>,
        tau: f64,
        omega: &WienerPath,
        t: f64,
    ) -> Result<PointCloud<C::State>> {
        check_aligned(t, self.sys.time_step(), "t")?;
        if t < 0.0 {
            return Err(invalid("pullback time must be non-negative"));
        }
        if t == 0.0 {
            return Ok(family.section(tau, omega));
        }
        let start = tau - t;
        let w = omega.shift(-t)?;
        let section = family.section(start, &w);
        if section.is_empty() {
            return Err(invalid(format!("family {} has an empty section", family.label())));
        }
        let mut init = section.points().to_vec();
        let mut edges = section.edges().to_vec();
        let mut images = self.evolve_all(t, start, &w, &init, 0)?;

        if let Some(res) = self.opts.refine {
            for _ in 0..self.opts.max_refine_rounds {
                let room = self.opts.max_points.saturating_sub(init.len());
                let split: Vec<usize> = edges
                    .iter()
                    .enumerate()
                    .filter(|(_, &(a, b))| {
                        images[a].distance(&images[b]) > res
                            && init[a].distance(&init[b]) > 1e-14 * (1.0 + init[a].norm())
                    })
                    .map(|(i, _)| i)
                    .take(room)
                    .collect();
                if split.is_empty() {
                    break;
                }
                let mids: Vec<C::State> = split
                    .iter()
                    .map(|&e| {
                        let (a, b) = edges[e];
                        init[a].midpoint(&init[b])
                    })
                    .collect();
                let new_images = self.evolve_all(t, start, &w, &mids, init.len())?;
                for ((e, m), img) in split.into_iter().zip(mids).zip(new_images) {
                    let idx = init.len();
                    let (a, b) = edges[e];
                    init.push(m);
                    images.push(img);
                    edges[e] = (a, idx);
                    edges.push((idx, b));
                }
            }
        }
        Ok(PointCloud::with_edges(images, edges)?.dedup(self.opts.dedup_tol))
    }

    pub fn omega_limit(
        &self,
        family: &FamilySpec<C::State>,
        tau: f64,
        omega: &WienerPath,
        schedule: &PullbackSchedule,
    ) -> Result<OmegaLimit<C::State>> {
        schedule.check_grid(self.sys.time_step())?;
        let mut trace = Vec::new();
        let mut ensembles: Vec<PointCloud<C::State>> = Vec::new();
        let mut streak = 0;
        let mut converged = false;
        for &t in &schedule.t_values {
            let e = self.pullback_ensemble(family, tau, omega, t)?;
            let d = match ensembles.last() {
                Some(prev) => hausdorff(prev, &e)?,
                None => f64::NAN,
            };
            trace.push((t, d));
            ensembles.push(e);
            if d <= schedule.convergence_tol {
                streak += 1;
            } else {
                streak = 0;
            }
            if streak >= schedule.stall_limit {
                converged = true;
                break;
            }
        }
        Ok(OmegaLimit {
            cloud: ensembles.last().cloned().expect("nonempty schedule"),
            converged,
            trace,
            ensembles,
        })
    }

    pub fn detect_absorbing(
        &self,
        absorbing: &FamilySpec<C::State>,
        family: &FamilySpec<C::State>,
        tau: f64,
        omega: &WienerPath,
        schedule: &PullbackSchedule,
        slack: f64,
    ) -> Result<Absorption> {
        schedule.check_grid(self.sys.time_step())?;
        let mut excess_trace = Vec::with_capacity(schedule.t_values.len());
        for &t in &schedule.t_values {
            let e = self.pullback_ensemble(family, tau, omega, t)?;
            excess_trace.push((t, absorbing.max_excess(tau, omega, e.points())));
        }
        Ok(Absorption::from_trace(excess_trace, slack))
    }

    /// Ω-limit of the absorbing family: the attractor section `A(τ, ω)`.
    pub fn attractor_section(
        &self,
        absorbing: &FamilySpec<C::State>,
        tau: f64,
        omega: &WienerPath,
        schedule: &PullbackSchedule,
    ) -> Result<OmegaLimit<C::State>> {
        self.omega_limit(absorbing, tau, omega, schedule)
    }

    /// `d(E(t), A)` along the schedule.
    pub fn attraction_trace(
        &self,
        attractor: &PointCloud<C::State>,
        family: &FamilySpec<C::State>,
        tau: f64,
        omega: &WienerPath,
        schedule: &PullbackSchedule,
    ) -> Result<Vec<f64>> {
        schedule.check_grid(self.sys.time_step())?;
        schedule
            .t_values
            .iter()
            .map(|&t| semidist(&self.pullback_ensemble(family, tau, omega, t)?, attractor))
            .collect()
    }

    /// Hausdorff distance between the attractor sections at `τ` and `τ + T`.
    pub fn periodicity_distance(
        &self,
        absorbing: &FamilySpec<C::State>,
        tau: f64,
        period: f64,
        omega: &WienerPath,
        schedule: &PullbackSchedule,
    ) -> Result<f64> {
        let a = self.attractor_section(absorbing, tau, omega, schedule)?;
        let b = self.attractor_section(absorbing, tau + period, omega, schedule)?;
        hausdorff(&a.cloud, &b.cloud)
    }

    /// Union of the Ω-limits of `families`, and its Hausdorff distance to the
    /// attractor section computed from `absorbing`.
    pub fn union_omega_limits(
        &self,
        absorbing: &FamilySpec<C::State>,
        families: &[FamilySpec<C::State>],
        tau: f64,
        omega: &WienerPath,
        schedule: &PullbackSchedule,
    ) -> Result<(PointCloud<C::State>, f64)> {
        let mut union: Option<PointCloud<C::State>> = None;
        for f in families {
            let om = self.omega_limit(f, tau, omega, schedule)?;
            union = Some(match union {
                None => om.cloud,
                Some(u) => u.union(&om.cloud),
            });
        }
        let union = union.ok_or_else(|| invalid("no families"))?.dedup(self.opts.dedup_tol);
        let att = self.attractor_section(absorbing, tau, omega, schedule)?;
        let excess = hausdorff(&union, &att.cloud)?;
        Ok((union, excess))
    }
}

/// Clustering summary of a sequence of pullback ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub cluster_count: usize,
    /// Largest distance of a point to its cluster centre (whole union).
    pub max_radius: f64,
    /// Largest distance from a point of the last ensemble to the nearest
    /// centre built from the earlier ensembles.
    pub max_tail_gap: f64,
    /// `max_tail_gap ≤ cluster_tol`.
    pub tail_covered: bool,
}

fn greedy_centres<S: MetricState>(points: &[&S], tol: f64) -> (Vec<S>, f64) {
    let mut centres: Vec<S> = Vec::new();
    let mut radius: f64 = 0.0;
    for p in points {
        match centres
            .iter()
            .map(|c| c.distance(p))
            .enumerate()
            .find(|(_, d)| *d <= tol)
        {
            Some((_, d)) => radius = radius.max(d),
            None => centres.push((*p).clone()),
        }
    }
    (centres, radius)
}

/// Greedy clustering of the union of `ensembles` at radius `cluster_tol`,
/// plus a check that the last ensemble is covered by clusters of the earlier
/// ones (a finite stand-in for a convergent subsequence).
pub fn compactness_diagnostic<S: MetricState>(
    ensembles: &[PointCloud<S>],
    cluster_tol: f64,
) -> Result<CompactnessReport> {
    if ensembles.len() < 3 {
        return Err(invalid("need at least 3 ensembles"));
    }
    let all: Vec<&S> = ensembles.iter().flat_map(|e| e.points()).collect();
    let (centres, max_radius) = greedy_centres(&all, cluster_tol);
    let (head, tail) = ensembles.split_at(ensembles.len() - 1);
    let head_pts: Vec<&S> = head.iter().flat_map(|e| e.points()).collect();
    let (head_centres, _) = greedy_centres(&head_pts, cluster_tol);
    let max_tail_gap = tail[0]
        .points()
        .iter()
        .map(|p| head_centres.iter().map(|c| c.distance(p)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(CompactnessReport {
        cluster_count: centres.len(),
        max_radius,
        max_tail_gap,
        tail_covered: max_tail_gap <= cluster_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        assert!(PullbackSchedule::new(vec![], 1e-3, 1).is_err());
        assert!(PullbackSchedule::new(vec![1.0, 1.0], 1e-3, 1).is_err());
        assert!(PullbackSchedule::new(vec![-1.0, 1.0], 1e-3, 1).is_err());
        assert!(PullbackSchedule::new(vec![1.0, 2.0], 0.0, 1).is_err());
        let s = PullbackSchedule::linear(5.0, 5.0, 20.0, 1e-3, 2).unwrap();
        assert_eq!(s.t_values, vec![5.0, 10.0, 15.0, 20.0]);
    }

    #[test]
    fn compactness_of_fixed_sets() {
        let e = PointCloud::new(vec![0.0, 1.0, 2.0]);
        let r = compactness_diagnostic(&[e.clone(), e.clone(), e], 1e-6).unwrap();
        assert_eq!(r.cluster_count, 3);
        assert_eq!(r.max_radius, 0.0);
        assert!(r.tail_covered);
    }

    #[test]
    fn compactness_flags_escaping_tail() {
        let ens: Vec<_> = (0..4).map(|k| PointCloud::singleton(k as f64)).collect();
        let r = compactness_diagnostic(&ens, 0.1).unwrap();
        assert!(!r.tail_covered);
        assert_eq!(r.cluster_count, 4);
        assert!(compactness_diagnostic(&ens[..2], 0.1).is_err());
    }

    #[test]
    fn post_entry_violations_counted() {
        let a = Absorption {
            entry_time: Some(2.0),
            excess_trace: vec![(1.0, 3.0), (2.0, 0.0), (3.0, 0.0)],
        };
        assert_eq!(a.post_entry_violations(0.0), 0);
        let none = Absorption {
            entry_time: None,
            excess_trace: vec![(1.0, 3.0)],
        };
        assert_eq!(none.post_entry_violations(0.0), 1);
    }
}
