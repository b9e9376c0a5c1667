//! Uniform grids on `[−ℓ, ℓ]` and discretized fields with Dirichlet ends.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::setops::MetricState;

/// `J` interior nodes on `[−ℓ, ℓ]`; nodes `x_j = −ℓ + j·dx`, `j = 0..=J+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub ell: f64,
    pub interior: usize,
}

impl Grid {
    pub fn new(ell: f64, interior: usize) -> Result<Self> {
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(invalid(format!("half-width must be positive, got {ell}")));
        }
        if interior < 1 {
            return Err(invalid("grid needs at least one interior node"));
        }
        Ok(Self { ell, interior })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.ell / (self.interior + 1) as f64
    }

    /// Number of nodes including both boundary nodes.
    pub fn nodes(&self) -> usize {
        self.interior + 2
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.ell + j as f64 * self.dx()
    }

    /// Same domain, twice the resolution.
    pub fn refined(&self) -> Self {
        Self {
            ell: self.ell,
            interior: 2 * self.interior + 1,
        }
    }
}

/// Field values on a [`Grid`] with both boundary values exactly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    values: Vec<f64>,
    dx: f64,
}

impl StateVector {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; grid.nodes()],
            dx: grid.dx(),
        }
    }

    /// Samples `f` at the interior nodes.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        let mut v = Self::zeros(grid);
        for j in 1..=grid.interior {
            v.values[j] = f(grid.x(j));
        }
        v
    }

    /// Wraps node values; the boundary entries must be 0.
    pub fn from_values(values: Vec<f64>, dx: f64) -> Result<Self> {
        if values.len() < 3 {
            return Err(invalid("a state needs at least three nodes"));
        }
        if values[0] != 0.0 || values[values.len() - 1] != 0.0 {
            return Err(invalid("boundary values must be exactly 0"));
        }
        if !(dx > 0.0) {
            return Err(invalid("dx must be positive"));
        }
        Ok(Self { values, dx })
    }

    pub(crate) fn from_raw(values: Vec<f64>, dx: f64) -> Self {
        Self { values, dx }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Half-width `ℓ` of the underlying grid.
    pub fn ell(&self) -> f64 {
        0.5 * (self.values.len() - 1) as f64 * self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.ell() + j as f64 * self.dx
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.dx * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `‖∇v‖²` by forward differences.
    pub fn h1_seminorm_sq(&self) -> f64 {
        let s: f64 = self.values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        s / self.dx
    }

    pub fn h1_seminorm(&self) -> f64 {
        self.h1_seminorm_sq().sqrt()
    }

    /// `‖v‖_p^p`.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        self.dx * self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.lp_norm_pow(p).powf(1.0 / p)
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.dx * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Self { values, dx: self.dx }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|a| c * a).collect(),
            dx: self.dx,
        }
    }

    /// Restriction of a state on `grid.refined()` back to `grid` (every
    /// other node).
    pub fn coarsen(&self) -> Result<Self> {
        let n = self.values.len();
        if n.is_multiple_of(2) {
            return Err(invalid("cannot coarsen a grid with an even node count"));
        }
        Ok(Self {
            values: self.values.iter().step_by(2).copied().collect(),
            dx: 2.0 * self.dx,
        })
    }
}

impl MetricState for StateVector {
    fn distance(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (self.dx * s).sqrt()
    }

    fn norm(&self) -> f64 {
        self.l2_norm()
    }

    fn midpoint(&self, other: &Self) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        Self { values, dx: self.dx }
    }
}
