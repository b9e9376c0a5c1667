//! Pullback attractors of non-autonomous random dynamical systems, computed.
//!
//! The crate is organised around a two-parameter cocycle `Φ(t, τ, ω, x)`:
//! `τ` is the initial time (the deterministic parameter, shifted by
//! `θ₁,ₜ(τ) = τ + t`) and `ω` is a two-sided Wiener path (the noise
//! parameter, shifted by `θ₂,ₜω(·) = ω(· + t) − ω(t)`).
//!
//! * [`wiener`]: sampled two-sided paths, the shift group, the stationary
//!   Ornstein–Uhlenbeck process `z(θₜω)`.
//! * [`cocycle`]: the [`Cocycle`] trait, axiom checks, set families and
//!   their translations, complete orbits and quasi-solutions.
//! * [`setops`]: point clouds, Hausdorff semi-distance, and the pullback
//!   engine (Ω-limit sets, absorbing detection, attractor sections).
//! * [`rde`]: the stochastic reaction–diffusion cocycle on a truncated
//!   interval, with energy, absorbing-radius and tail monitors.
//! * [`testbeds`]: scalar systems with closed-form attractors.
//! * [`harness`]: configuration, seeded ensembles, experiment pipelines and
//!   report persistence behind the `pullback` binary.

// NaN must fail every range check, so `!(x > 0.0)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod error;
pub mod harness;
pub mod rde;
pub mod setops;
pub mod testbeds;
pub mod wiener;

pub use cocycle::{Cocycle, FamilySpec, TimeShift};
pub use error::{Error, Result};
pub use setops::{Engine, EngineOptions, MetricState, PointCloud, PullbackSchedule};
pub use wiener::{OuProcess, WienerPath};
