//! One pipeline per experiment kind.
//!
//! Each pipeline fans out over seeds with [`ensemble_over_paths`], records
//! per-seed values, and turns the declared tolerances into checks. Seed `s`
//! drives the path `WienerPath::sample(s, …)`; any further randomness comes
//! from `stream_rng(s, i)`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, ExperimentKind, SystemConfig};
use super::ensemble::ensemble_over_paths;
use super::output::{write_cloud_file, write_table_file, Coordinates};
use super::report::{ExperimentReport, SeedRecord};
use crate::cocycle::{
    check_cocycle, check_continuity, check_dlambda_membership, check_identity, check_invariance, check_orbit,
    check_periodic, check_quasi_solution, orbit_from_quasi, Cocycle, CocycleSample, FamilySpec, ResidualRecord,
};
use crate::error::{invalid, Result};
use crate::rde::{radius_terms, tail_mass, AbsorbingRadius, RdCocycle, StateVector};
use crate::setops::{compactness_diagnostic, hausdorff, Absorption, Engine, PointCloud};
use crate::testbeds::{bistable_evolve, fixed_interval_family, interval_sample, BistableODE, ScalarLinearSDE};
use crate::wiener::{ou_value, stream_rng, WienerPath};

/// Validates `cfg`, runs its pipeline, and writes `report.json` (plus
/// columnar files) when an output directory is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let ctx = Ctx::new(cfg);
    let mut report = match (&cfg.system, cfg.kind) {
        (SystemConfig::Linear(s), ExperimentKind::Axioms) => axioms(&ctx, s, scalar_sample, false)?,
        (SystemConfig::Bistable(b), ExperimentKind::Axioms) => axioms(&ctx, b, scalar_sample, false)?,
        (SystemConfig::Rd(p), ExperimentKind::Axioms) => {
            let sys = RdCocycle::new(p.clone())?;
            let dirs = sys.directions().to_vec();
            axioms(&ctx, &sys, move |rng| rd_sample(&dirs, rng), true)?
        }

        (SystemConfig::Linear(s), ExperimentKind::Attractor) => {
            let xi = |tau: f64, w: &WienerPath| Ok(PointCloud::singleton(s.attractor_point(tau, w)?));
            let k = s.absorbing_family(cfg.sampling.spacing);
            attractor(&ctx, s, scalar_options(cfg), &k, &interval_families(cfg), Some(&xi))?
        }
        (SystemConfig::Bistable(b), ExperimentKind::Attractor) => {
            let reference = |_: f64, _: &WienerPath| Ok(interval_sample(0.0, 1.0, 1e-3));
            let k = fixed_interval_family(2.0, cfg.sampling.spacing);
            attractor(
                &ctx,
                b,
                scalar_options(cfg),
                &k,
                &interval_families(cfg),
                Some(&reference),
            )?
        }
        (SystemConfig::Rd(p), ExperimentKind::Attractor) => {
            let sys = RdCocycle::new(p.clone())?;
            let cal = calibrate_beta(&sys, cfg)?;
            let fams = ball_families(&sys, cfg);
            let mut r = attractor(&ctx, &sys, cfg.engine.clone(), &cal.radius.family(&sys), &fams, None)?;
            cal.annotate(&mut r);
            r
        }

        (SystemConfig::Linear(s), ExperimentKind::Absorbing) => {
            let k = s.absorbing_family(cfg.sampling.spacing);
            absorbing(
                &ctx,
                s,
                scalar_options(cfg),
                &k,
                &interval_families(cfg),
                s.lambda,
                None,
            )?
        }
        (SystemConfig::Bistable(b), ExperimentKind::Absorbing) => {
            let k = fixed_interval_family(2.0, cfg.sampling.spacing);
            absorbing(&ctx, b, scalar_options(cfg), &k, &interval_families(cfg), 2.0, None)?
        }
        (SystemConfig::Rd(p), ExperimentKind::Absorbing) => {
            let sys = RdCocycle::new(p.clone())?;
            let cal = calibrate_beta(&sys, cfg)?;
            let beta = cal.radius.beta;
            let h = sys.h_state();
            let v_ratio = |tau: f64, w: &WienerPath, us: &[StateVector]| -> Result<f64> {
                let terms = radius_terms(&sys, tau, w)?;
                let lv = terms.energy(beta);
                Ok(us
                    .iter()
                    .map(|u| u.axpy(-terms.z, &h).l2_norm_sq() / lv)
                    .fold(0.0, f64::max))
            };
            let fams = ball_families(&sys, cfg);
            let mut r = absorbing(
                &ctx,
                &sys,
                cfg.engine.clone(),
                &cal.radius.family(&sys),
                &fams,
                p.lambda,
                Some(&v_ratio),
            )?;
            cal.annotate(&mut r);
            r
        }

        (SystemConfig::Rd(p), ExperimentKind::Tails) => {
            let sys = RdCocycle::new(p.clone())?;
            tails(&ctx, &sys)?
        }

        (SystemConfig::Linear(s), ExperimentKind::Periodicity) => {
            let period = s.forcing.period().ok_or_else(|| invalid("forcing is not periodic"))?;
            let k = s.absorbing_family(cfg.sampling.spacing);
            periodicity(&ctx, s, scalar_options(cfg), &k, period)?
        }
        (SystemConfig::Bistable(b), ExperimentKind::Periodicity) => {
            let k = fixed_interval_family(2.0, cfg.sampling.spacing);
            periodicity(&ctx, b, scalar_options(cfg), &k, 1.0)?
        }
        (SystemConfig::Rd(p), ExperimentKind::Periodicity) => {
            let sys = RdCocycle::new(p.clone())?;
            let period = sys.period().ok_or_else(|| invalid("forcing is not periodic"))?;
            let cal = calibrate_beta(&sys, cfg)?;
            let mut r = periodicity(&ctx, &sys, cfg.engine.clone(), &cal.radius.family(&sys), period)?;
            cal.annotate(&mut r);
            r
        }

        (SystemConfig::Linear(s), ExperimentKind::Oracle) => linear_oracle(&ctx, s)?,
        (SystemConfig::Bistable(b), ExperimentKind::Oracle) => bistable_oracle(&ctx, b)?,
        (s, k) => return Err(invalid(format!("no {} pipeline for the {} system", k.name(), s.name()))),
    };
    report.finalize();
    report.wall_time_s = start.elapsed().as_secs_f64();
    if let Some(dir) = &ctx.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), report.to_json())?;
    }
    Ok(report)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    out: Option<PathBuf>,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Self {
            cfg,
            out: cfg.output.clone(),
        }
    }

    fn path(&self, seed: u64) -> Result<WienerPath> {
        let s = &self.cfg.sampling;
        WienerPath::sample(seed, s.path_t_min, s.path_t_max, self.cfg.system.dt_path())
    }

    fn report(&self) -> ExperimentReport {
        let mut r = ExperimentReport::new(
            self.cfg.kind.name(),
            self.cfg.system.name(),
            self.cfg.hash(),
            self.cfg.seeds.clone(),
        );
        r.note("schedule", format!("{:?}", self.cfg.schedule.t_values));
        r
    }

    fn out_dir(&self) -> Option<&Path> {
        self.out.as_deref()
    }

    fn tol(&self, configured: Option<f64>, default: f64) -> f64 {
        configured.unwrap_or(default)
    }
}

/// Stores per-seed records and returns the successful values in seed order.
fn collect<T>(
    report: &mut ExperimentReport,
    results: BTreeMap<u64, Result<T, String>>,
    fill: impl Fn(&T, &mut SeedRecord),
) -> Vec<(u64, T)> {
    let mut ok = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(v) => {
                let mut rec = SeedRecord::ok();
                fill(&v, &mut rec);
                report.per_seed.insert(seed, rec);
                ok.push((seed, v));
            }
            Err(e) => {
                report.per_seed.insert(seed, SeedRecord::failed(e));
            }
        }
    }
    ok
}

/// Adds `<key>.max` and `<key>.mean` for every per-seed key.
fn aggregate_seed_values(report: &mut ExperimentReport) {
    let mut acc: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
    for rec in report.per_seed.values() {
        for (k, v) in &rec.values {
            let e = acc.entry(k.clone()).or_insert((f64::NEG_INFINITY, 0.0, 0));
            e.0 = e.0.max(*v);
            e.1 += v;
            e.2 += 1;
        }
    }
    for (k, (max, sum, n)) in acc {
        report.set_aggregate(format!("{k}.max"), max);
        report.set_aggregate(format!("{k}.mean"), sum / n as f64);
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn scalar_options(cfg: &ExperimentConfig) -> crate::setops::EngineOptions {
    let mut o = cfg.engine.clone();
    if o.refine.is_none() {
        o.refine = Some(cfg.sampling.spacing);
    }
    o
}

fn interval_families(cfg: &ExperimentConfig) -> Vec<FamilySpec<f64>> {
    cfg.sampling
        .family_radii
        .iter()
        .map(|&r| fixed_interval_family(r, cfg.sampling.spacing))
        .collect()
}

fn ball_families(sys: &RdCocycle, cfg: &ExperimentConfig) -> Vec<FamilySpec<StateVector>> {
    cfg.sampling
        .family_radii
        .iter()
        .map(|&r| sys.fixed_ball_family(r))
        .collect()
}

fn scalar_sample(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let x = rng.gen_range(-3.0..3.0);
    (x, x + rng.gen_range(-1e-3..1e-3))
}

fn rd_sample(dirs: &[StateVector], rng: &mut ChaCha8Rng) -> (StateVector, StateVector) {
    let mut x = dirs[0].scaled(0.0);
    let mut y = x.clone();
    for d in dirs {
        let c = rng.gen_range(-5.0..5.0);
        x = x.axpy(c, d);
        y = y.axpy(c + rng.gen_range(-1e-3..1e-3), d);
    }
    (x, y)
}

/// A random grid-aligned offset in `[-span, span]`.
fn grid_offset(rng: &mut ChaCha8Rng, dt: f64, span: f64) -> f64 {
    let k = (span / dt).round() as i64;
    rng.gen_range(-k..=k) as f64 * dt
}

// ---------------------------------------------------------------- axioms

#[derive(Debug, Clone)]
struct AxiomOutcome {
    identity: f64,
    cocycle: f64,
    periodic: Option<f64>,
    continuity: f64,
}

fn axioms<C, F>(ctx: &Ctx, sys: &C, sample: F, relative: bool) -> Result<ExperimentReport>
where
    C: Cocycle,
    C::State: 'static,
    F: Fn(&mut ChaCha8Rng) -> (C::State, C::State) + Sync,
{
    let cfg = ctx.cfg;
    let dt = sys.time_step();
    let t = cfg.sampling.t.unwrap_or(64.0 * dt);
    let s = cfg.sampling.s.unwrap_or(64.0 * dt);
    let n = cfg.sampling.samples_per_seed;
    let results = ensemble_over_paths(&cfg.seeds, cfg.workers, |seed| {
        let base = ctx.path(seed)?;
        let mut samples = Vec::with_capacity(n);
        let mut pairs = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = stream_rng(seed, i as u64);
            let tau = grid_offset(&mut rng, dt, 5.0);
            let omega = base.shift(grid_offset(&mut rng, dt, 5.0))?;
            let (x, y) = sample(&mut rng);
            let smp = CocycleSample { tau, omega, x };
            pairs.push((smp.clone(), y));
            samples.push(smp);
        }
        let pick = |r: crate::cocycle::Residual| if relative { r.relative } else { r.absolute };
        let periodic = match sys.period() {
            Some(p) => Some(pick(check_periodic(sys, p, t, &samples)?)),
            None => None,
        };
        Ok(AxiomOutcome {
            identity: pick(check_identity(sys, &samples)?),
            cocycle: pick(check_cocycle(sys, t, s, &samples)?),
            periodic,
            continuity: check_continuity(sys, t, &pairs)?,
        })
    })?;
    let mut report = ctx.report();
    let ok = collect(&mut report, results, |o, rec| {
        rec.insert("identity", o.identity);
        rec.insert("cocycle", o.cocycle);
        if let Some(p) = o.periodic {
            rec.insert("periodic", p);
        }
        rec.insert("continuity_modulus", o.continuity);
    });
    let total = ok.len() * n;
    let default = if relative { 1e-8 } else { 1e-12 };
    report.note("residual", if relative { "relative" } else { "absolute" });
    report.note("t", t);
    report.note("s", s);
    report.add_check(ResidualRecord::new(
        "identity",
        total,
        max_of(ok.iter().map(|(_, o)| o.identity)),
        ctx.tol(cfg.tolerances.identity, 0.0),
    ));
    report.add_check(ResidualRecord::new(
        "cocycle",
        total,
        max_of(ok.iter().map(|(_, o)| o.cocycle)),
        ctx.tol(cfg.tolerances.cocycle, default),
    ));
    if sys.period().is_some() {
        report.add_check(ResidualRecord::new(
            "periodic",
            total,
            max_of(ok.iter().filter_map(|(_, o)| o.periodic)),
            ctx.tol(cfg.tolerances.periodic, default),
        ));
    }
    aggregate_seed_values(&mut report);
    Ok(report)
}

// ------------------------------------------------------------- attractor

type Reference<'r, S> = &'r (dyn Fn(f64, &WienerPath) -> Result<PointCloud<S>> + Sync);

#[derive(Debug, Clone, Default)]
struct SectionOutcome {
    error: Option<f64>,
    union_excess: f64,
    converged: bool,
    points: usize,
    compact_gap: Option<f64>,
}

fn attractor<C>(
    ctx: &Ctx,
    sys: &C,
    opts: crate::setops::EngineOptions,
    k: &FamilySpec<C::State>,
    families: &[FamilySpec<C::State>],
    reference: Option<Reference<'_, C::State>>,
) -> Result<ExperimentReport>
where
    C: Cocycle,
    C::State: Coordinates + 'static,
{
    let cfg = ctx.cfg;
    let schedule = &cfg.schedule;
    let results = ensemble_over_paths(&cfg.seeds, cfg.workers, |seed| {
        let omega = ctx.path(seed)?;
        let engine = Engine::with_options(sys, opts.clone());
        let mut outs = Vec::with_capacity(cfg.taus.len());
        for (i, &tau) in cfg.taus.iter().enumerate() {
            let att = engine.attractor_section(k, tau, &omega, schedule)?;
            let error = match reference {
                Some(f) => Some(hausdorff(&att.cloud, &f(tau, &omega)?)?),
                None => None,
            };
            let mut union: Option<PointCloud<C::State>> = None;
            let mut converged = att.converged;
            for f in families {
                let om = engine.omega_limit(f, tau, &omega, schedule)?;
                converged &= om.converged;
                union = Some(match union {
                    None => om.cloud,
                    Some(u) => u.union(&om.cloud),
                });
            }
            let union_excess = match union {
                Some(u) => hausdorff(&u.dedup(opts.dedup_tol), &att.cloud)?,
                None => 0.0,
            };
            let compact_gap = if att.ensembles.len() >= 3 {
                Some(compactness_diagnostic(&att.ensembles, schedule.convergence_tol)?.max_tail_gap)
            } else {
                None
            };
            if let Some(dir) = ctx.out_dir() {
                write_cloud_file(dir, &format!("attractor_seed{seed}_tau{i}.dat"), &att.cloud)?;
                let rows: Vec<Vec<f64>> = att.trace.iter().map(|(t, d)| vec![*t, *d]).collect();
                write_table_file(
                    dir,
                    &format!("omega_trace_seed{seed}_tau{i}.dat"),
                    &["t", "hausdorff_step"],
                    &rows,
                )?;
            }
            outs.push(SectionOutcome {
                error,
                union_excess,
                converged,
                points: att.cloud.len(),
                compact_gap,
            });
        }
        Ok(outs)
    })?;
    let mut report = ctx.report();
    let ok = collect(&mut report, results, |outs, rec| {
        for (i, o) in outs.iter().enumerate() {
            if let Some(e) = o.error {
                rec.insert(format!("attractor_error.tau{i}"), e);
            }
            rec.insert(format!("union_excess.tau{i}"), o.union_excess);
            rec.insert(format!("converged.tau{i}"), if o.converged { 1.0 } else { 0.0 });
            rec.insert(format!("section_points.tau{i}"), o.points as f64);
            if let Some(g) = o.compact_gap {
                rec.insert(format!("compactness_gap.tau{i}"), g);
            }
        }
    });
    let all: Vec<&SectionOutcome> = ok.iter().flat_map(|(_, v)| v.iter()).collect();
    if reference.is_some() {
        let default = if matches!(cfg.system, SystemConfig::Bistable(_)) {
            5e-2
        } else {
            1e-4
        };
        report.add_check(ResidualRecord::new(
            "attractor",
            all.len(),
            max_of(all.iter().filter_map(|o| o.error)),
            ctx.tol(cfg.tolerances.attractor, default),
        ));
    }
    if !families.is_empty() {
        report.add_check(ResidualRecord::new(
            "union",
            all.len(),
            max_of(all.iter().map(|o| o.union_excess)),
            ctx.tol(cfg.tolerances.union, 2.0 * schedule.convergence_tol),
        ));
    }
    report.set_aggregate(
        "unconverged_sections",
        all.iter().filter(|o| !o.converged).count() as f64,
    );
    aggregate_seed_values(&mut report);
    Ok(report)
}

// ------------------------------------------------------------- absorbing

type VRatio<'r, S> = &'r (dyn Fn(f64, &WienerPath, &[S]) -> Result<f64> + Sync);

#[derive(Debug, Clone)]
struct AbsorbOutcome {
    /// `(tau index, radius, absorption)`.
    runs: Vec<(usize, f64, Absorption)>,
    /// Same as `runs` for `‖u − h z‖² ≤ L_v`, with excess `ratio − 1`.
    energy: Vec<Absorption>,
    /// One decay profile per initial time.
    profiles: Vec<crate::cocycle::DecayProfile>,
}

fn decay_grid(lambda: f64) -> Vec<f64> {
    let end = -20.0 / lambda;
    let step = 0.5 / lambda;
    let n = (end / -step).round() as usize;
    (0..=n).map(|k| -(k as f64) * step).collect()
}

fn absorbing<C>(
    ctx: &Ctx,
    sys: &C,
    opts: crate::setops::EngineOptions,
    k: &FamilySpec<C::State>,
    families: &[FamilySpec<C::State>],
    lambda: f64,
    v_ratio: Option<VRatio<'_, C::State>>,
) -> Result<ExperimentReport>
where
    C: Cocycle,
    C::State: 'static,
{
    let cfg = ctx.cfg;
    let schedule = &cfg.schedule;
    let radii = &cfg.sampling.family_radii;
    let s_grid = decay_grid(lambda);
    let results = ensemble_over_paths(&cfg.seeds, cfg.workers, |seed| {
        let omega = ctx.path(seed)?;
        let engine = Engine::with_options(sys, opts.clone());
        let mut runs = Vec::new();
        let mut energy = Vec::new();
        let mut profiles = Vec::new();
        for (i, &tau) in cfg.taus.iter().enumerate() {
            for (f, &r) in families.iter().zip(radii) {
                let mut trace = Vec::with_capacity(schedule.t_values.len());
                let mut clouds = Vec::with_capacity(schedule.t_values.len());
                for &t in &schedule.t_values {
                    let e = engine.pullback_ensemble(f, tau, &omega, t)?;
                    trace.push((t, k.max_excess(tau, &omega, e.points())));
                    clouds.push(e);
                }
                let a = Absorption::from_trace(trace, 0.0);
                if let Some(vr) = v_ratio {
                    let vt = clouds
                        .iter()
                        .zip(&schedule.t_values)
                        .map(|(c, &t)| Ok((t, vr(tau, &omega, c.points())? - 1.0)))
                        .collect::<Result<Vec<_>>>()?;
                    energy.push(Absorption::from_trace(vt, 0.0));
                }
                if let Some(dir) = ctx.out_dir() {
                    let rows: Vec<Vec<f64>> = a.excess_trace.iter().map(|(t, e)| vec![*t, *e]).collect();
                    write_table_file(
                        dir,
                        &format!("excess_seed{seed}_tau{i}_r{r}.dat"),
                        &["t", "excess"],
                        &rows,
                    )?;
                }
                runs.push((i, r, a));
            }
            let profile = check_dlambda_membership(k, lambda, tau, &omega, &s_grid)?;
            if let Some(dir) = ctx.out_dir() {
                let rows: Vec<Vec<f64>> = profile
                    .s
                    .iter()
                    .zip(&profile.values)
                    .map(|(s, v)| vec![*s, *v])
                    .collect();
                write_table_file(
                    dir,
                    &format!("decay_seed{seed}_tau{i}.dat"),
                    &["s", "weighted_sq_radius"],
                    &rows,
                )?;
            }
            profiles.push(profile);
        }
        Ok(AbsorbOutcome { runs, energy, profiles })
    })?;
    let s_cut = -14.0 / lambda;
    let mut report = ctx.report();
    let ok = collect(&mut report, results, |o, rec| {
        for (i, r, a) in &o.runs {
            if let Some(te) = a.entry_time {
                rec.insert(format!("entry_time.tau{i}.r{r}"), te);
            }
            rec.insert(format!("violations.tau{i}.r{r}"), a.post_entry_violations(0.0) as f64);
        }
        for (j, a) in o.energy.iter().enumerate() {
            if let Some(te) = a.entry_time {
                rec.insert(format!("energy_entry_time.run{j}"), te);
            }
        }
        for (i, p) in o.profiles.iter().enumerate() {
            rec.insert(format!("decay_ratio.tau{i}"), p.max_ratio_beyond(s_cut));
        }
    });
    let runs: Vec<&Absorption> = ok.iter().flat_map(|(_, o)| o.runs.iter().map(|(_, _, a)| a)).collect();
    let missing = runs.iter().filter(|a| a.entry_time.is_none()).count();
    let violations: usize = runs.iter().map(|a| a.post_entry_violations(0.0)).sum();
    report.add_check(ResidualRecord::new("entry_recorded", runs.len(), missing as f64, 0.0));
    report.add_check(ResidualRecord::new(
        "post_entry_violations",
        runs.len(),
        violations as f64,
        0.0,
    ));
    report.set_aggregate(
        "entry_time.max",
        runs.iter().filter_map(|a| a.entry_time).fold(0.0, f64::max),
    );
    if v_ratio.is_some() {
        let energy: Vec<&Absorption> = ok.iter().flat_map(|(_, o)| o.energy.iter()).collect();
        let bad = energy
            .iter()
            .map(|a| {
                if a.entry_time.is_none() {
                    1
                } else {
                    a.post_entry_violations(0.0)
                }
            })
            .sum::<usize>();
        report.add_check(ResidualRecord::new("energy_ball", energy.len(), bad as f64, 0.0));
    }

    // Seed-averaged decay profile per initial time.
    let mut pooled_worst: f64 = 0.0;
    let mut seed_worst: f64 = 0.0;
    for i in 0..cfg.taus.len() {
        let profiles: Vec<&crate::cocycle::DecayProfile> = ok.iter().map(|(_, o)| &o.profiles[i]).collect();
        if profiles.is_empty() {
            continue;
        }
        let mean: Vec<f64> = (0..s_grid.len())
            .map(|j| profiles.iter().map(|p| p.values[j]).sum::<f64>() / profiles.len() as f64)
            .collect();
        let pooled = crate::cocycle::DecayProfile {
            s: s_grid.clone(),
            values: mean,
        };
        pooled_worst = pooled_worst.max(pooled.max_ratio_beyond(s_cut));
        seed_worst = seed_worst.max(max_of(profiles.iter().map(|p| p.max_ratio_beyond(s_cut))));
        if let Some(dir) = ctx.out_dir() {
            let rows: Vec<Vec<f64>> = pooled.s.iter().zip(&pooled.values).map(|(s, v)| vec![*s, *v]).collect();
            write_table_file(
                dir,
                &format!("decay_pooled_tau{i}.dat"),
                &["s", "weighted_sq_radius"],
                &rows,
            )?;
        }
    }
    report.set_aggregate("decay_ratio.pooled", pooled_worst);
    report.set_aggregate("decay_ratio.worst_seed", seed_worst);
    report.note("decay_cut", s_cut);
    report.add_check(ResidualRecord::new(
        "decay",
        ok.len(),
        pooled_worst,
        ctx.tol(cfg.tolerances.decay_ratio, 1e-6),
    ));
    aggregate_seed_values(&mut report);
    Ok(report)
}

// ----------------------------------------------------------- calibration

/// Calibrated `β` together with the data behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub radius: AbsorbingRadius,
    /// Largest observed ratio before the safety factor.
    pub max_ratio: f64,
    pub configured: bool,
}

impl Calibration {
    fn annotate(&self, report: &mut ExperimentReport) {
        report.set_aggregate("beta", self.radius.beta);
        report.set_aggregate("beta_max_ratio", self.max_ratio);
        report.note("beta_source", if self.configured { "configured" } else { "calibrated" });
        report.note("beta_note", "calibrated constant standing in for the existential one");
    }
}

/// `β` for the absorbing radius of `sys`: the configured value, or the
/// largest ratio `max(‖u‖²/L₁, ‖u − h z(ω)‖²/L_{v,1})` over the
/// calibration seeds, initial times, fixed balls, and pullback times
/// `t ≥ settle`, times the safety factor. `L₁` is the radius at `β = 1`.
pub fn calibrate_beta(sys: &RdCocycle, cfg: &ExperimentConfig) -> Result<Calibration> {
    if let Some(beta) = cfg.calibration.beta {
        return Ok(Calibration {
            radius: AbsorbingRadius { beta },
            max_ratio: f64::NAN,
            configured: true,
        });
    }
    let c = &cfg.calibration;
    let ts: Vec<f64> = {
        let late: Vec<f64> = cfg
            .schedule
            .t_values
            .iter()
            .copied()
            .filter(|t| *t >= c.settle)
            .collect();
        if late.is_empty() {
            vec![*cfg.schedule.t_values.last().expect("nonempty schedule")]
        } else {
            late
        }
    };
    let h = sys.h_state();
    let families = ball_families(sys, cfg);
    let results = ensemble_over_paths(&c.seeds, cfg.workers, |seed| {
        let s = &cfg.sampling;
        let omega = WienerPath::sample(seed, s.path_t_min, s.path_t_max, sys.dt_path())?;
        let engine = Engine::with_options(sys, cfg.engine.clone());
        let mut m: f64 = 0.0;
        for &tau in &cfg.taus {
            let terms = radius_terms(sys, tau, &omega)?;
            let (l1, lv1) = (terms.absorbing(1.0), terms.energy(1.0));
            for f in &families {
                for &t in &ts {
                    for u in engine.pullback_ensemble(f, tau, &omega, t)?.points() {
                        m = m.max(u.l2_norm_sq() / l1).max(u.axpy(-terms.z, &h).l2_norm_sq() / lv1);
                    }
                }
            }
        }
        Ok(m)
    })?;
    let mut ratios = Vec::with_capacity(results.len());
    for (seed, r) in results {
        ratios.push(r.map_err(|e| invalid(format!("calibration seed {seed}: {e}")))?);
    }
    let max_ratio = max_of(ratios);
    if !(max_ratio > 0.0) {
        return Err(invalid("calibration observed no positive ratio"));
    }
    Ok(Calibration {
        radius: AbsorbingRadius {
            beta: c.safety * max_ratio,
        },
        max_ratio,
        configured: false,
    })
}

// ----------------------------------------------------------------- tails

#[derive(Debug, Clone)]
struct TailOutcome {
    fraction: f64,
    norm: f64,
    norm_wide: f64,
}

fn tails(ctx: &Ctx, sys: &RdCocycle) -> Result<ExperimentReport> {
    let cfg = ctx.cfg;
    let tc = &cfg.tails;
    let p = sys.params();
    let k_tail = tc.k_fraction * p.ell;
    let mut wide_params = p.clone();
    wide_params.ell = 2.0 * p.ell;
    wide_params.interior = 2 * p.interior + 1;
    let wide = RdCocycle::new(wide_params)?;
    let ball = sys.fixed_ball_family(tc.radius);
    let tau = cfg.taus[0];
    let results = ensemble_over_paths(&cfg.seeds, cfg.workers, |seed| {
        let omega = ctx.path(seed)?;
        let engine = Engine::with_options(sys, cfg.engine.clone());
        let e = engine.pullback_ensemble(&ball, tau, &omega, tc.t)?;
        let mut fraction: f64 = 0.0;
        for u in e.points() {
            let total = u.l2_norm_sq();
            if total > 0.0 {
                fraction = fraction.max(tail_mass(u, k_tail)? / total);
            }
        }
        let w = omega.shift(-tc.t)?;
        let u = sys.cocycle_phi(tc.t, tau - tc.t, &w, &sys.zero_state())?;
        let uw = wide.cocycle_phi(tc.t, tau - tc.t, &w, &wide.zero_state())?;
        if let Some(dir) = ctx.out_dir() {
            write_cloud_file(dir, &format!("tails_seed{seed}.dat"), &e)?;
        }
        Ok(TailOutcome {
            fraction,
            norm: u.l2_norm(),
            norm_wide: uw.l2_norm(),
        })
    })?;
    let mut report = ctx.report();
    let ok = collect(&mut report, results, |o, rec| {
        rec.insert("tail_fraction", o.fraction);
        rec.insert("singleton_norm", o.norm);
        rec.insert("singleton_norm_wide", o.norm_wide);
    });
    report.add_check(ResidualRecord::new(
        "tail_fraction",
        ok.len(),
        max_of(ok.iter().map(|(_, o)| o.fraction)),
        ctx.tol(cfg.tolerances.tail_fraction, 1e-3),
    ));
    let stats = |xs: Vec<f64>| {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    if !ok.is_empty() {
        let (m1, s1) = stats(ok.iter().map(|(_, o)| o.norm).collect());
        let (m2, s2) = stats(ok.iter().map(|(_, o)| o.norm_wide).collect());
        let dm = (m2 - m1).abs() / m1;
        let ds = if s1 > 0.0 {
            (s2 - s1).abs() / s1
        } else {
            (s2 - s1).abs()
        };
        report.set_aggregate("singleton_norm.mean", m1);
        report.set_aggregate("singleton_norm.std", s1);
        report.set_aggregate("singleton_norm_wide.mean", m2);
        report.set_aggregate("singleton_norm_wide.std", s2);
        report.add_check(ResidualRecord::new(
            "truncation",
            ok.len(),
            dm.max(ds),
            ctx.tol(cfg.tolerances.truncation, 1e-2),
        ));
    }
    report.note("tail_radius", k_tail);
    aggregate_seed_values(&mut report);
    Ok(report)
}

// ----------------------------------------------------------- periodicity

fn periodicity<C>(
    ctx: &Ctx,
    sys: &C,
    opts: crate::setops::EngineOptions,
    k: &FamilySpec<C::State>,
    period: f64,
) -> Result<ExperimentReport>
where
    C: Cocycle,
    C::State: 'static,
{
    let cfg = ctx.cfg;
    let results = ensemble_over_paths(&cfg.seeds, cfg.workers, |seed| {
        let omega = ctx.path(seed)?;
        let engine = Engine::with_options(sys, opts.clone());
        cfg.taus
            .iter()
            .map(|&tau| engine.periodicity_distance(k, tau, period, &omega, &cfg.schedule))
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut report = ctx.report();
    let ok = collect(&mut report, results, |ds, rec| {
        for (i, d) in ds.iter().enumerate() {
            rec.insert(format!("periodicity_distance.tau{i}"), *d);
        }
    });
    let default = match cfg.system {
        SystemConfig::Linear(_) => 1e-6,
        SystemConfig::Rd(_) => 2e-2,
        SystemConfig::Bistable(_) => 2.0 * cfg.schedule.convergence_tol,
    };
    report.note("period", period);
    report.add_check(ResidualRecord::new(
        "periodicity",
        ok.len() * cfg.taus.len(),
        max_of(ok.iter().flat_map(|(_, v)| v.iter().copied())),
        ctx.tol(cfg.tolerances.periodicity, default),
    ));
    aggregate_seed_values(&mut report);
    Ok(report)
}

// --------------------------------------------------------------- oracles

/// The path on the half step, linearly interpolated.
fn midpoint_refined(w: &WienerPath) -> Result<WienerPath> {
    let v = w.values();
    let mut out = Vec::with_capacity(2 * v.len() - 1);
    for pair in v.windows(2) {
        out.push(pair[0]);
        out.push(0.5 * (pair[0] + pair[1]));
    }
    out.push(*v.last().expect("nonempty path"));
    WienerPath::from_values(w.t_min(), w.dt() / 2.0, out)
}

#[derive(Debug, Clone)]
struct LinearOracleOutcome {
    quasi: f64,
    orbit: f64,
    invariance: f64,
    refinement: f64,
    periodic: Option<f64>,
}

fn linear_oracle(ctx: &Ctx, sys: &ScalarLinearSDE) -> Result<ExperimentReport> {
    let cfg = ctx.cfg;
    let dt = sys.dt;
    let n = cfg.sampling.samples_per_seed;
    let xi = sys.quasi_solution();
    let psi = orbit_from_quasi(&xi);
    let results = ensemble_over_paths(&cfg.seeds, cfg.workers, |seed| {
        let base = ctx.path(seed)?;
        let mut q = Vec::with_capacity(n);
        let mut o = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = stream_rng(seed, i as u64);
            let t = grid_offset(&mut rng, dt, 2.0).abs();
            let tau = grid_offset(&mut rng, dt, 5.0);
            let s = grid_offset(&mut rng, dt, 5.0);
            q.push((t, tau, base.clone()));
            o.push((t, tau, s, base.clone()));
        }
        let quasi = check_quasi_solution(sys, &xi, &q)?.absolute;
        let orbit = check_orbit(sys, &psi, &o)?.absolute;
        let singleton = {
            let s2 = sys.clone();
            FamilySpec::from_fn(
                "xi",
                move |tau, w| PointCloud::singleton(s2.attractor_point(tau, w).unwrap_or(f64::NAN)),
                |_, _| f64::INFINITY,
            )
        };
        let mut invariance: f64 = 0.0;
        let mut refinement: f64 = 0.0;
        let mut periodic: Option<f64> = None;
        for &tau in &cfg.taus {
            let ex = check_invariance(sys, &singleton, 1.0, tau, &base)?;
            invariance = invariance.max(ex.forward).max(ex.backward);
            if sys.noise_on {
                let fine = midpoint_refined(&base)?;
                let a = ou_value(&base, sys.lambda)?.value();
                let b = ou_value(&fine, sys.lambda)?.value();
                refinement = refinement.max((a - b).abs());
            }
            if let Some(p) = sys.forcing.period() {
                let d = (sys.forcing.past_convolution(tau + p, sys.lambda)
                    - sys.forcing.past_convolution(tau, sys.lambda))
                .abs();
                periodic = Some(periodic.unwrap_or(0.0).max(d));
            }
        }
        Ok(LinearOracleOutcome {
            quasi,
            orbit,
            invariance,
            refinement,
            periodic,
        })
    })?;
    let mut report = ctx.report();
    let ok = collect(&mut report, results, |o, rec| {
        rec.insert("quasi_solution", o.quasi);
        rec.insert("orbit", o.orbit);
        rec.insert("invariance", o.invariance);
        rec.insert("refinement", o.refinement);
        if let Some(p) = o.periodic {
            rec.insert("periodic_deterministic", p);
        }
    });
    let total = ok.len() * n;
    let qtol = ctx.tol(cfg.tolerances.quasi_solution, 1e-6);
    report.add_check(ResidualRecord::new(
        "quasi_solution",
        total,
        max_of(ok.iter().map(|(_, o)| o.quasi)),
        qtol,
    ));
    report.add_check(ResidualRecord::new(
        "orbit",
        total,
        max_of(ok.iter().map(|(_, o)| o.orbit)),
        qtol,
    ));
    report.add_check(ResidualRecord::new(
        "invariance",
        ok.len() * cfg.taus.len(),
        max_of(ok.iter().map(|(_, o)| o.invariance)),
        ctx.tol(cfg.tolerances.invariance, 1e-4),
    ));
    report.add_check(ResidualRecord::new(
        "refinement",
        ok.len() * cfg.taus.len(),
        max_of(ok.iter().map(|(_, o)| o.refinement)),
        1e-5,
    ));
    if sys.forcing.period().is_some() {
        report.add_check(ResidualRecord::new(
            "periodic_deterministic",
            ok.len() * cfg.taus.len(),
            max_of(ok.iter().filter_map(|(_, o)| o.periodic)),
            1e-12,
        ));
    }
    aggregate_seed_values(&mut report);
    Ok(report)
}

fn bistable_oracle(ctx: &Ctx, sys: &BistableODE) -> Result<ExperimentReport> {
    let cfg = ctx.cfg;
    let n = cfg.sampling.samples_per_seed;
    let results = ensemble_over_paths(&cfg.seeds, cfg.workers, |seed| {
        let omega = ctx.path(seed)?;
        let engine = Engine::with_options(sys, scalar_options(cfg));
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let mut rng = stream_rng(seed, i as u64);
            let mut u0: f64 = rng.gen_range(-3.0..3.0);
            if u0 == 0.0 {
                u0 = 1.0;
            }
            let fam = FamilySpec::constant("point", PointCloud::singleton(u0));
            let om = engine.omega_limit(&fam, 0.0, &omega, &cfg.schedule)?;
            worst = worst.max(hausdorff(&om.cloud, &PointCloud::singleton(u0.signum()))?);
        }
        Ok(worst)
    })?;
    let mut report = ctx.report();
    let ok = collect(&mut report, results, |w, rec| rec.insert("sign_limit_error", *w));
    report.add_check(ResidualRecord::new(
        "sign_limit",
        ok.len() * n,
        max_of(ok.iter().map(|(_, w)| *w)),
        ctx.tol(cfg.tolerances.attractor, 5e-2),
    ));
    let closed_form = (bistable_evolve(10.0, 2.0)? - 1.0).abs();
    report.add_check(ResidualRecord::new("closed_form", 1, closed_form, 1e-6));
    aggregate_seed_values(&mut report);
    Ok(report)
}
