//! Pathwise solver for the transformed equation
//!
//! ```text
//! ∂v/∂t + λv − Δv = f(x, v + h z(θₜω)) + g(x, t) + z(θₜω) Δh
//! ```
//!
//! and the random cocycle `u = v + h z` built on it.

use std::sync::Arc;

use rayon::prelude::*;

use crate::cocycle::{check_aligned, Cocycle, FamilySpec};
use crate::error::{invalid, Error, Result};
use crate::setops::PointCloud;
use crate::wiener::{grid_index, OuProcess, WienerPath};

use super::params::RdParams;
use super::state::{Grid, StateVector};
use super::tridiag::ConstTridiagonal;

/// Norms recorded after each monitored step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRecord {
    pub t: f64,
    /// `‖v‖²`.
    pub v_l2_sq: f64,
    /// `‖∇v‖²`.
    pub v_grad_sq: f64,
    /// `‖v + h z‖ₚᵖ`.
    pub u_lp_p: f64,
    /// `‖vⁿ⁺¹‖² − ‖vⁿ‖² + 2dt(λ‖v^θ‖² + ‖∇v^θ‖²) − 2dt(Fⁿ, v^θ)`;
    /// zero at the initial record.
    pub energy_residual: f64,
    /// Magnitude of the terms entering `energy_residual`.
    pub energy_scale: f64,
}

/// Monitor output of one [`solve_v`](RdCocycle::solve_v) run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    pub records: Vec<MonitorRecord>,
}

/// One row of [`energy_monitor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub v_l2_sq: f64,
    pub v_grad_sq: f64,
    pub u_lp_p: f64,
}

/// `(t, ‖v‖², ‖∇v‖², ‖v + hz‖ₚᵖ)` per monitored step.
pub fn energy_monitor(trace: &EnergyTrace) -> Vec<EnergySample> {
    trace
        .records
        .iter()
        .map(|r| EnergySample {
            t: r.t,
            v_l2_sq: r.v_l2_sq,
            v_grad_sq: r.v_grad_sq,
            u_lp_p: r.u_lp_p,
        })
        .collect()
}

impl EnergyTrace {
    /// Largest `energy_residual / energy_scale`; the discrete energy
    /// inequality holds when this is at most rounding level.
    pub fn max_relative_energy_residual(&self) -> f64 {
        self.records
            .iter()
            .skip(1)
            .map(|r| r.energy_residual / r.energy_scale.max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when every step satisfies the discrete energy inequality up to
    /// `rel_tol` of its scale.
    pub fn energy_inequality_holds(&self, rel_tol: f64) -> bool {
        self.records
            .iter()
            .all(|r| r.energy_residual <= rel_tol * r.energy_scale)
    }

    pub fn write_columns<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,v_l2_sq,v_grad_sq,u_lp_p,energy_residual")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e}",
                r.t, r.v_l2_sq, r.v_grad_sq, r.u_lp_p, r.energy_residual
            )?;
        }
        Ok(())
    }
}

/// Result of [`RdCocycle::solve_v`].
#[derive(Debug, Clone)]
pub struct VSolution {
    pub v: StateVector,
    pub trace: Option<EnergyTrace>,
}

/// The reaction–diffusion cocycle on a truncated interval.
#[derive(Debug, Clone)]
pub struct RdCocycle {
    params: RdParams,
    grid: Grid,
    h: Vec<f64>,
    lap_h: Vec<f64>,
    a: Vec<f64>,
    source: Vec<f64>,
    tri: ConstTridiagonal,
    directions: Arc<Vec<StateVector>>,
}

impl RdCocycle {
    pub fn new(params: RdParams) -> Result<Self> {
        params.require_valid()?;
        let grid = params.grid()?;
        let dx = grid.dx();
        let n = grid.nodes();
        let sample = |prof: &super::params::SpatialProfile| {
            let mut v: Vec<f64> = (0..n).map(|j| prof.value(grid.x(j))).collect();
            v[0] = 0.0;
            v[n - 1] = 0.0;
            v
        };
        let h = sample(&params.h);
        let a = sample(&params.g_space);
        let source = sample(&params.f.source);
        let mut lap_h = vec![0.0; n];
        for j in 1..n - 1 {
            lap_h[j] = (h[j - 1] - 2.0 * h[j] + h[j + 1]) / (dx * dx);
        }
        let th = params.theta * params.dt;
        let tri = ConstTridiagonal::new(
            grid.interior,
            1.0 + th * (params.lambda + 2.0 / (dx * dx)),
            -th / (dx * dx),
        );
        let directions = Arc::new(ball_directions(&grid));
        Ok(Self {
            params,
            grid,
            h,
            lap_h,
            a,
            source,
            tri,
            directions,
        })
    }

    pub fn params(&self) -> &RdParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Step of the driving paths.
    pub fn dt_path(&self) -> f64 {
        self.params.dt_path()
    }

    /// `h` on the grid (boundary pinned to 0).
    pub fn h_state(&self) -> StateVector {
        StateVector::from_raw(self.h.clone(), self.grid.dx())
    }

    /// Spatial factor of `g` on the grid.
    pub fn forcing_profile(&self) -> StateVector {
        StateVector::from_raw(self.a.clone(), self.grid.dx())
    }

    pub fn zero_state(&self) -> StateVector {
        StateVector::zeros(&self.grid)
    }

    fn check_state(&self, x: &StateVector) -> Result<()> {
        if x.len() != self.grid.nodes() {
            return Err(invalid(format!(
                "state has {} nodes, grid has {}",
                x.len(),
                self.grid.nodes()
            )));
        }
        Ok(())
    }

    fn check_path(&self, omega: &WienerPath) -> Result<()> {
        let d = self.dt_path();
        if (omega.dt() - d).abs() > 1e-12 * d {
            return Err(invalid(format!(
                "path step {} differs from dt·substeps = {d}",
                omega.dt()
            )));
        }
        Ok(())
    }

    /// `z(ω)` with the configured past window.
    pub fn ou(&self, omega: &WienerPath) -> Result<OuProcess> {
        self.check_path(omega)?;
        let back = (self.params.ou_window / omega.dt()).ceil() * omega.dt();
        let w = omega.covering(-back, omega.t_max().max(0.0))?;
        OuProcess::new(&w, self.params.lambda)
    }

    /// `z(θ_{j·dt}ω)` for every solver step over `path_steps` path steps.
    fn z_sequence(&self, omega: &WienerPath, path_steps: usize) -> Result<Vec<f64>> {
        self.ou(omega)?.forward_values(path_steps, self.params.substeps)
    }

    /// Advances `v` from time `tau` over `zs.len() − 1` solver steps.
    fn integrate(
        &self,
        tau: f64,
        zs: &[f64],
        v: &mut [f64],
        mut monitor: Option<&mut Vec<MonitorRecord>>,
    ) -> Result<()> {
        let p = &self.params;
        let n_int = self.grid.interior;
        let dx = self.grid.dx();
        let inv_dx2 = 1.0 / (dx * dx);
        let dt = p.dt;
        let lambda = p.lambda;
        let explicit = (1.0 - p.theta) * dt;
        let steps = zs.len().saturating_sub(1);
        let mut rhs = vec![0.0; n_int];
        let mut force = if monitor.is_some() {
            vec![0.0; n_int]
        } else {
            Vec::new()
        };
        let mut old = if monitor.is_some() { v.to_vec() } else { Vec::new() };
        let mut last_norm = l2_sq(v, dx);

        if let Some(m) = monitor.as_deref_mut() {
            m.push(self.record(tau, v, zs[0], 0.0, 1.0));
        }

        for n in 0..steps {
            let t_n = tau + n as f64 * dt;
            let z = zs[n];
            let gamma = p.g_time.value(t_n);
            for i in 0..n_int {
                let j = i + 1;
                let vj = v[j];
                let lap = (v[j - 1] - 2.0 * vj + v[j + 1]) * inv_dx2;
                let u = vj + self.h[j] * z;
                let fj = p.f.poly(u) + self.source[j] + self.a[j] * gamma + z * self.lap_h[j];
                if !force.is_empty() {
                    force[i] = fj;
                }
                rhs[i] = vj + explicit * (lap - lambda * vj) + dt * fj;
            }
            self.tri.solve_in_place(&mut rhs);
            if monitor.is_some() {
                old.copy_from_slice(v);
            }
            v[1..=n_int].copy_from_slice(&rhs);

            let check = monitor.is_some() || n % 32 == 31 || n + 1 == steps;
            if check {
                let norm = l2_sq(v, dx);
                if !norm.is_finite() || norm > p.blowup {
                    return Err(Error::Solver {
                        step: n + 1,
                        time: t_n + dt,
                        reason: if norm.is_finite() {
                            format!("‖v‖² = {norm:e} exceeds the blow-up guard {:e}", p.blowup)
                        } else {
                            "non-finite state".into()
                        },
                        last_finite_norm: Some(last_norm.sqrt()),
                    });
                }
                last_norm = norm;
            }
            if let Some(m) = monitor.as_deref_mut() {
                let (res, scale) = self.energy_step(&old, v, &force);
                m.push(self.record(t_n + dt, v, zs[n + 1], res, scale));
            }
        }
        Ok(())
    }

    fn record(&self, t: f64, v: &[f64], z: f64, res: f64, scale: f64) -> MonitorRecord {
        let dx = self.grid.dx();
        let u_lp_p = dx
            * v.iter()
                .zip(&self.h)
                .map(|(vj, hj)| (vj + hj * z).abs().powf(self.params.p))
                .sum::<f64>();
        MonitorRecord {
            t,
            v_l2_sq: l2_sq(v, dx),
            v_grad_sq: grad_sq(v, dx),
            u_lp_p,
            energy_residual: res,
            energy_scale: scale,
        }
    }

    fn energy_step(&self, old: &[f64], new: &[f64], force: &[f64]) -> (f64, f64) {
        let p = &self.params;
        let dx = self.grid.dx();
        let th = p.theta;
        let mid: Vec<f64> = old.iter().zip(new).map(|(a, b)| (1.0 - th) * a + th * b).collect();
        let e_old = l2_sq(old, dx);
        let e_new = l2_sq(new, dx);
        let dissip = 2.0 * p.dt * (p.lambda * l2_sq(&mid, dx) + grad_sq(&mid, dx));
        let work = 2.0 * p.dt * dx * force.iter().zip(&mid[1..]).map(|(f, m)| f * m).sum::<f64>();
        let res = e_new - e_old + dissip - work;
        let scale = 1e-300 + e_old + e_new + dissip + work.abs();
        (res, scale)
    }

    /// Advances the transformed equation from `tau` to `t_end` along the
    /// absolute-time path `omega` (so the noise seen at time `t` is `θₜω`).
    pub fn solve_v(
        &self,
        tau: f64,
        t_end: f64,
        omega: &WienerPath,
        v0: &StateVector,
        monitor: bool,
    ) -> Result<VSolution> {
        self.check_state(v0)?;
        self.check_path(omega)?;
        let d = self.dt_path();
        let k0 = grid_index(tau, d).map_err(|_| invalid(format!("tau = {tau} is not on the path grid")))?;
        let k1 = grid_index(t_end, d).map_err(|_| invalid(format!("t_end = {t_end} is not on the path grid")))?;
        if k1 < k0 {
            return Err(invalid("t_end must not precede tau"));
        }
        let rel = omega.shift(tau)?;
        self.advance(tau, &rel, (k1 - k0) as usize, v0, monitor)
    }

    fn advance(
        &self,
        tau: f64,
        rel: &WienerPath,
        path_steps: usize,
        v0: &StateVector,
        monitor: bool,
    ) -> Result<VSolution> {
        let zs = self.z_sequence(rel, path_steps)?;
        let mut v = v0.values().to_vec();
        let mut records = Vec::new();
        self.integrate(tau, &zs, &mut v, monitor.then_some(&mut records))?;
        Ok(VSolution {
            v: StateVector::from_raw(v, self.grid.dx()),
            trace: monitor.then_some(EnergyTrace { records }),
        })
    }

    fn phi_with(&self, tau: f64, zs: &[f64], u0: &StateVector) -> Result<StateVector> {
        let z0 = zs[0];
        let mut v: Vec<f64> = u0.values().iter().zip(&self.h).map(|(u, h)| u - h * z0).collect();
        self.integrate(tau, zs, &mut v, None)?;
        let zt = *zs.last().unwrap();
        for (vj, hj) in v.iter_mut().zip(&self.h) {
            *vj += hj * zt;
        }
        Ok(StateVector::from_raw(v, self.grid.dx()))
    }

    fn path_steps(&self, t: f64) -> Result<usize> {
        check_aligned(t, self.dt_path(), "t")?;
        let n = grid_index(t, self.dt_path())?;
        if n < 0 {
            return Err(invalid("t must be non-negative"));
        }
        Ok(n as usize)
    }

    /// `Φ(t, τ, ω, u0)`: subtract `h z(ω)`, solve the transformed equation
    /// over `[τ, τ + t]`, add `h z(θₜω)` back.
    pub fn cocycle_phi(&self, t: f64, tau: f64, omega: &WienerPath, u0: &StateVector) -> Result<StateVector> {
        self.check_state(u0)?;
        let n = self.path_steps(t)?;
        if n == 0 {
            return Ok(u0.clone());
        }
        let zs = self.z_sequence(omega, n)?;
        self.phi_with(tau, &zs, u0)
    }

    /// `Φ(t, τ, ω, u0)` together with the monitor trace of `v`.
    pub fn cocycle_phi_monitored(
        &self,
        t: f64,
        tau: f64,
        omega: &WienerPath,
        u0: &StateVector,
    ) -> Result<(StateVector, EnergyTrace)> {
        self.check_state(u0)?;
        let n = self.path_steps(t)?;
        let zs = self.z_sequence(omega, n)?;
        let z0 = zs[0];
        let v0 = StateVector::from_raw(
            u0.values().iter().zip(&self.h).map(|(u, h)| u - h * z0).collect(),
            self.grid.dx(),
        );
        let mut v = v0.values().to_vec();
        let mut records = Vec::new();
        self.integrate(tau, &zs, &mut v, Some(&mut records))?;
        let zt = *zs.last().unwrap();
        for (vj, hj) in v.iter_mut().zip(&self.h) {
            *vj += hj * zt;
        }
        Ok((StateVector::from_raw(v, self.grid.dx()), EnergyTrace { records }))
    }

    /// Unit directions used to sample balls: sine modes 1 and 2 and the
    /// normalized `exp(−x²)` bump.
    pub fn directions(&self) -> &[StateVector] {
        &self.directions
    }

    /// Center plus `center ± r·e` for each direction, joined radially.
    pub fn ball_sample(&self, center: &StateVector, r: f64) -> PointCloud<StateVector> {
        ball_sample(&self.directions, center, r)
    }

    /// Fixed ball of radius `r` around 0.
    pub fn fixed_ball_family(&self, r: f64) -> FamilySpec<StateVector> {
        let dirs = Arc::clone(&self.directions);
        FamilySpec::ball(
            format!("ball-{r}"),
            self.zero_state(),
            move |_, _| r,
            move |c, r| ball_sample(&dirs, c, r),
        )
    }
}

fn l2_sq(v: &[f64], dx: f64) -> f64 {
    dx * v.iter().map(|x| x * x).sum::<f64>()
}

fn grad_sq(v: &[f64], dx: f64) -> f64 {
    v.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / dx
}

fn ball_directions(grid: &Grid) -> Vec<StateVector> {
    let l = grid.ell;
    let pi = std::f64::consts::PI;
    let raw = [
        StateVector::from_fn(grid, |x| (pi * (x + l) / (2.0 * l)).sin()),
        StateVector::from_fn(grid, |x| (pi * (x + l) / l).sin()),
        StateVector::from_fn(grid, |x| (-x * x).exp()),
    ];
    raw.into_iter()
        .map(|d| {
            let n = d.l2_norm();
            d.scaled(1.0 / n)
        })
        .collect()
}

pub(crate) fn ball_sample(dirs: &[StateVector], center: &StateVector, r: f64) -> PointCloud<StateVector> {
    if !(r > 0.0) {
        return PointCloud::singleton(center.clone());
    }
    let mut pts = vec![center.clone()];
    let mut edges = Vec::new();
    for d in dirs {
        for sign in [1.0, -1.0] {
            pts.push(center.axpy(sign * r, d));
            edges.push((0, pts.len() - 1));
        }
    }
    PointCloud::with_edges(pts, edges).expect("radial edges index existing points")
}

impl Cocycle for RdCocycle {
    type State = StateVector;

    fn evolve(&self, t: f64, tau: f64, omega: &WienerPath, x: &StateVector) -> Result<StateVector> {
        self.cocycle_phi(t, tau, omega, x)
    }

    /// Shares the `z` sequence across initial states.
    fn evolve_batch(&self, t: f64, tau: f64, omega: &WienerPath, xs: &[StateVector]) -> Vec<Result<StateVector>> {
        let n = match self.path_steps(t) {
            Ok(n) => n,
            Err(e) => return xs.iter().map(|_| Err(clone_err(&e))).collect(),
        };
        if n == 0 {
            return xs.iter().map(|x| self.check_state(x).map(|_| x.clone())).collect();
        }
        let zs = match self.z_sequence(omega, n) {
            Ok(z) => z,
            Err(e) => return xs.iter().map(|_| Err(clone_err(&e))).collect(),
        };
        xs.par_iter()
            .map(|x| {
                self.check_state(x)?;
                self.phi_with(tau, &zs, x)
            })
            .collect()
    }

    fn time_step(&self) -> f64 {
        self.dt_path()
    }

    fn period(&self) -> Option<f64> {
        if self.params.g_space.is_zero() {
            None
        } else {
            self.params.g_time.period()
        }
    }

    fn name(&self) -> String {
        "reaction-diffusion".into()
    }
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(m.clone()),
        Error::Quality { what, bound, tolerance } => Error::Quality {
            what: what.clone(),
            bound: *bound,
            tolerance: *tolerance,
        },
        other => Error::InvalidArgument(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setops::MetricState;

    fn small(params: RdParams) -> RdCocycle {
        RdCocycle::new(RdParams {
            ell: 4.0,
            interior: 79,
            dt: 1e-2,
            ..params
        })
        .unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let sys = small(RdParams::linear_only());
        let w = WienerPath::zero(-1.0, 1.0, sys.dt_path()).unwrap();
        let out = sys.solve_v(0.0, 2.0, &w, &sys.zero_state(), true).unwrap();
        assert_eq!(out.v.l2_norm(), 0.0);
        assert!(energy_monitor(out.trace.as_ref().unwrap())
            .iter()
            .all(|r| r.v_l2_sq == 0.0));
    }

    #[test]
    fn zero_duration_is_identity() {
        let sys = small(RdParams::default());
        let w = WienerPath::sample(4, -50.0, 1.0, sys.dt_path()).unwrap();
        let u0 = StateVector::from_fn(sys.grid(), |x| x.sin());
        assert_eq!(sys.cocycle_phi(0.0, 0.3, &w, &u0).unwrap(), u0);
    }

    #[test]
    fn linear_part_decays_monotonically() {
        let sys = small(RdParams::linear_only());
        let w = WienerPath::zero(-1.0, 1.0, sys.dt_path()).unwrap();
        let v0 = StateVector::from_fn(sys.grid(), |x| 1.0 + x.cos());
        let out = sys.solve_v(0.0, 1.0, &w, &v0, true).unwrap();
        let tr = out.trace.unwrap();
        assert!(tr.records.windows(2).all(|w| w[1].v_l2_sq < w[0].v_l2_sq));
    }

    #[test]
    fn energy_inequality_on_stochastic_run() {
        for theta in [0.5, 1.0] {
            let sys = small(RdParams {
                theta,
                ..RdParams::default()
            });
            let w = WienerPath::sample(9, -50.0, 3.0, sys.dt_path()).unwrap();
            let u0 = StateVector::from_fn(sys.grid(), |x| 3.0 * (-x * x / 4.0).exp());
            let (_, tr) = sys.cocycle_phi_monitored(3.0, -1.0, &w, &u0).unwrap();
            assert!(
                tr.energy_inequality_holds(1e-12),
                "{}",
                tr.max_relative_energy_residual()
            );
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let sys = small(RdParams {
            f: super::super::params::Nonlinearity {
                coeffs: vec![0.0, 0.0, 0.0, 1.0],
                source: super::super::params::SpatialProfile::Zero,
            },
            ..RdParams::linear_only()
        });
        let w = WienerPath::zero(-1.0, 10.0, sys.dt_path()).unwrap();
        let u0 = StateVector::from_fn(sys.grid(), |x| 5.0 * (-x * x).exp());
        match sys.cocycle_phi(10.0, 0.0, &w, &u0) {
            Err(Error::Solver { last_finite_norm, .. }) => assert!(last_finite_norm.unwrap().is_finite()),
            other => panic!("expected solver failure, got {other:?}"),
        }
    }

    #[test]
    fn batch_matches_single() {
        let sys = small(RdParams::default());
        let w = WienerPath::sample(2, -50.0, 2.0, sys.dt_path()).unwrap();
        let xs: Vec<_> = sys.ball_sample(&sys.zero_state(), 2.0).into_points();
        let batch = sys.evolve_batch(1.0, 0.5, &w, &xs);
        for (x, b) in xs.iter().zip(batch) {
            assert_eq!(sys.evolve(1.0, 0.5, &w, x).unwrap(), b.unwrap());
        }
    }

    #[test]
    fn ball_sample_radius() {
        let sys = small(RdParams::default());
        let c = sys.ball_sample(&sys.zero_state(), 3.0);
        assert_eq!(c.len(), 7);
        for p in c.points().iter().skip(1) {
            assert!((p.norm() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_mismatched_path_step() {
        let sys = small(RdParams::default());
        let w = WienerPath::sample(2, -50.0, 2.0, 0.5).unwrap();
        assert!(sys.cocycle_phi(1.0, 0.0, &w, &sys.zero_state()).is_err());
    }
}
