//! Stochastic reaction–diffusion equation
//!
//! ```text
//! du + (λu − Δu) dt = (f(x, u) + g(x, t)) dt + h(x) dω
//! ```
//!
//! on `[−ℓ, ℓ]` with homogeneous Dirichlet conditions. The noise is removed
//! by `v = u − h z(θₜω)` with `z` the stationary Ornstein–Uhlenbeck process,
//! and the resulting random PDE is solved pathwise by a θ-scheme: implicit
//! in `λ − Δ`, explicit in everything else.

mod estimates;
mod params;
mod solver;
mod state;
mod tridiag;

pub use estimates::{
    absorbing_radius, check_g_integrability, f_sample_grid, noise_integral, radius_terms, tail_mass,
    verify_f_conditions, weighted_past_integral, weighted_past_integral_with_step, AbsorbingRadius, FMargins,
    PastIntegral, RadiusTerms, BETA_SAFETY, F_MARGIN_TOLERANCE,
};
pub use params::{Envelope, FCertificate, Nonlinearity, RdParams, SpatialProfile, TemporalProfile};
pub use solver::{energy_monitor, EnergySample, EnergyTrace, MonitorRecord, RdCocycle, VSolution};
pub use state::{Grid, StateVector};
pub use tridiag::ConstTridiagonal;
