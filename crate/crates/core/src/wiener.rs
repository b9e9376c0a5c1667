//! Two-sided Wiener paths and the stationary Ornstein–Uhlenbeck process.
//!
//! A [`WienerPath`] is the piecewise-linear interpolant of a Brownian path on
//! a uniform grid, anchored so that `ω(0) = 0`. Sampled paths are windows onto
//! an infinite, reproducible sequence of increments: the increment on grid
//! interval `i` depends only on `(seed, i)`, so widening the window never
//! changes values that were already visible.
//!
//! The shift `θₜω(·) = ω(· + t) − ω(t)` is restricted to grid multiples and
//! is exact: shifting only moves the anchor, node values are recomputed from
//! the underlying sequence, so `θₛ∘θₜ` and `θₛ₊ₜ` agree bit for bit.
//!
//! The Ornstein–Uhlenbeck value `z(ω) = −λ∫₋∞⁰ e^{λs} ω(s) ds` is integrated
//! exactly over each cell of the interpolant. The same interpolant gives the
//! exact one-step update `z(θ_{t+δ}ω) = e^{−λδ} z(θₜω) + Δω (1 − e^{−λδ})/(λδ)`,
//! so quadrature and recursion agree up to truncation and rounding, both
//! tracked in [`OuProcess::tail_bound`].

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

/// Increments are drawn in blocks; each block has its own RNG stream.
const BLOCK: usize = 4096;

/// Truncation tolerance used by [`ou_value`] and friends.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

const FORWARD_STREAM: u64 = 0x5eed_f0f0;
const BACKWARD_STREAM: u64 = 0x5eed_b0b0;

/// splitmix64 finalizer.
pub(crate) fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stable stream key for `(seed, index)` pairs.
pub fn stream_key(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Deterministic RNG for trajectory `index` of ensemble member `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, index))
}

/// Integer grid index of `t`, or an error when `t` is not a multiple of `dt`.
pub fn grid_index(t: f64, dt: f64) -> Result<i64> {
    if !(dt > 0.0) || !t.is_finite() {
        return Err(invalid(format!("cannot align t = {t} to dt = {dt}")));
    }
    let q = t / dt;
    let k = q.round();
    if (q - k).abs() > 1e-6 {
        return Err(invalid(format!("t = {t} is not a multiple of dt = {dt}")));
    }
    Ok(k as i64)
}

fn standard_normals(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n.div_ceil(BLOCK) * BLOCK);
    let mut block = 0u64;
    while out.len() < n {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_key(seed ^ stream, block));
        out.extend((0..BLOCK).map(|_| rng.sample::<f64, _>(StandardNormal)));
        block += 1;
    }
    out.truncate(n);
    out
}

#[derive(Debug, Clone)]
enum Source {
    Zero,
    Seeded(u64),
    /// Finite table: `base[i]` is the (unanchored) value at absolute index `start + i`.
    Injected {
        base: Arc<[f64]>,
        start: i64,
    },
}

impl Source {
    /// Unanchored values at absolute indices `a..=b`.
    fn fetch(&self, dt: f64, a: i64, b: i64) -> Result<Vec<f64>> {
        debug_assert!(a <= b);
        let n = (b - a + 1) as usize;
        match self {
            Source::Zero => Ok(vec![0.0; n]),
            Source::Injected { base, start } => {
                let end = start + base.len() as i64 - 1;
                if a < *start || b > end {
                    return Err(invalid(format!(
                        "injected path covers indices [{start}, {end}], requested [{a}, {b}]"
                    )));
                }
                let lo = (a - start) as usize;
                Ok(base[lo..lo + n].to_vec())
            }
            Source::Seeded(seed) => {
                let sd = dt.sqrt();
                let mut out = vec![0.0; n];
                if a < 0 {
                    let depth = (-a) as usize;
                    let z = standard_normals(*seed, BACKWARD_STREAM, depth);
                    let mut acc = 0.0;
                    for (k, zk) in z.iter().enumerate() {
                        acc += zk * sd;
                        let idx = -(k as i64) - 1;
                        if idx <= b {
                            out[(idx - a) as usize] = acc;
                        }
                    }
                }
                if b > 0 {
                    let depth = b as usize;
                    let z = standard_normals(*seed, FORWARD_STREAM, depth);
                    let mut acc = 0.0;
                    for (k, zk) in z.iter().enumerate() {
                        acc += zk * sd;
                        let idx = k as i64 + 1;
                        if idx >= a {
                            out[(idx - a) as usize] = acc;
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    fn extendable(&self) -> bool {
        !matches!(self, Source::Injected { .. })
    }
}

/// A two-sided path on the uniform grid `k·dt`, anchored at `ω(0) = 0`.
#[derive(Debug, Clone)]
pub struct WienerPath {
    source: Source,
    dt: f64,
    /// Absolute index of relative time 0 in the source.
    origin: i64,
    /// Relative index of the first node (≤ 0).
    k_min: i64,
    values: Arc<[f64]>,
}

impl WienerPath {
    fn build(source: Source, dt: f64, origin: i64, k_min: i64, k_max: i64) -> Result<Self> {
        if k_min > 0 || k_max < 0 {
            return Err(invalid("window must contain t = 0"));
        }
        let raw = source.fetch(dt, origin + k_min, origin + k_max)?;
        let anchor = raw[(-k_min) as usize];
        let values: Arc<[f64]> = raw.into_iter().map(|v| v - anchor).collect();
        Ok(Self {
            source,
            dt,
            origin,
            k_min,
            values,
        })
    }

    fn window_indices(t_min: f64, t_max: f64, dt: f64) -> Result<(i64, i64)> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("dt_path must be positive, got {dt}")));
        }
        if !(t_min <= 0.0 && 0.0 <= t_max) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(invalid(format!(
                "window [{t_min}, {t_max}] must satisfy t_min ≤ 0 ≤ t_max"
            )));
        }
        let snap = |q: f64, outward: fn(f64) -> f64| {
            if (q - q.round()).abs() < 1e-6 {
                q.round()
            } else {
                outward(q)
            }
        };
        let k_min = snap(t_min / dt, f64::floor) as i64;
        let k_max = snap(t_max / dt, f64::ceil) as i64;
        Ok((k_min.min(0), k_max.max(0)))
    }

    /// Samples a Brownian path on `[t_min, t_max]` with Gaussian increments of
    /// variance `dt`. Window ends are rounded outward to the grid.
    pub fn sample(seed: u64, t_min: f64, t_max: f64, dt: f64) -> Result<Self> {
        let (a, b) = Self::window_indices(t_min, t_max, dt)?;
        Self::build(Source::Seeded(seed), dt, 0, a, b)
    }

    /// The identically zero path.
    pub fn zero(t_min: f64, t_max: f64, dt: f64) -> Result<Self> {
        let (a, b) = Self::window_indices(t_min, t_max, dt)?;
        Self::build(Source::Zero, dt, 0, a, b)
    }

    /// Wraps explicit node values starting at `t_min`. The result is
    /// re-anchored so that its value at 0 is exactly 0; it cannot be extended.
    pub fn from_values(t_min: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("empty path"));
        }
        let start = grid_index(t_min, dt)?;
        let end = start + values.len() as i64 - 1;
        if start > 0 || end < 0 {
            return Err(invalid("values must cover t = 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("path values must be finite"));
        }
        let source = Source::Injected {
            base: values.into(),
            start,
        };
        Self::build(source, dt, 0, start, end)
    }

    /// Samples `f` at the grid nodes of `[t_min, t_max]`.
    pub fn from_fn(t_min: f64, t_max: f64, dt: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let (a, b) = Self::window_indices(t_min, t_max, dt)?;
        let values = (a..=b).map(|k| f(k as f64 * dt)).collect();
        Self::from_values(a as f64 * dt, dt, values)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_min(&self) -> f64 {
        self.k_min as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.k_max() as f64 * self.dt
    }

    pub(crate) fn k_min(&self) -> i64 {
        self.k_min
    }

    pub(crate) fn k_max(&self) -> i64 {
        self.k_min + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Node values, first entry at `t_min`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Position of `t = 0` inside [`values`](Self::values).
    pub fn origin_index(&self) -> usize {
        (-self.k_min) as usize
    }

    /// Seed of the underlying increment sequence, if sampled.
    pub fn seed(&self) -> Option<u64> {
        match self.source {
            Source::Seeded(s) => Some(s),
            _ => None,
        }
    }

    /// Offset (in grid steps) of this path's anchor relative to the sampled
    /// path it was derived from.
    pub fn origin_offset(&self) -> i64 {
        self.origin
    }

    /// Whether the window can be widened (sampled and zero paths).
    pub fn is_extendable(&self) -> bool {
        self.source.extendable()
    }

    /// Value at a relative grid index.
    pub(crate) fn at_index(&self, k: i64) -> Option<f64> {
        if k < self.k_min || k > self.k_max() {
            None
        } else {
            Some(self.values[(k - self.k_min) as usize])
        }
    }

    /// Value at grid time `t`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let k = grid_index(t, self.dt)?;
        self.at_index(k)
            .ok_or_else(|| invalid(format!("t = {t} outside [{}, {}]", self.t_min(), self.t_max())))
    }

    /// Node times, aligned with [`values`](Self::values).
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (self.k_min..=self.k_max()).map(move |k| k as f64 * self.dt)
    }

    /// Increments `ω(t_{k+1}) − ω(t_k)` over the window.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `θₜω`. Sampled and zero paths keep their relative window (extending
    /// the underlying sequence as needed); injected paths keep the same
    /// absolute nodes, so `t` must lie inside the window.
    pub fn shift(&self, t: f64) -> Result<Self> {
        let m = grid_index(t, self.dt)?;
        if m == 0 {
            return Ok(self.clone());
        }
        if self.is_extendable() {
            Self::build(self.source.clone(), self.dt, self.origin + m, self.k_min, self.k_max())
        } else {
            Self::build(
                self.source.clone(),
                self.dt,
                self.origin + m,
                self.k_min - m,
                self.k_max() - m,
            )
        }
    }

    /// Same path restricted or extended to exactly `[t_min, t_max]`.
    pub fn with_window(&self, t_min: f64, t_max: f64) -> Result<Self> {
        let (a, b) = Self::window_indices(t_min, t_max, self.dt)?;
        if a == self.k_min && b == self.k_max() {
            return Ok(self.clone());
        }
        Self::build(self.source.clone(), self.dt, self.origin, a, b)
    }

    /// Smallest window containing both the current one and `[t_min, t_max]`.
    pub fn covering(&self, t_min: f64, t_max: f64) -> Result<Self> {
        if t_min >= self.t_min() - 0.5 * self.dt && t_max <= self.t_max() + 0.5 * self.dt {
            return Ok(self.clone());
        }
        self.with_window(t_min.min(self.t_min()), t_max.max(self.t_max()))
    }

    /// Writes the path as `time,value` rows behind a `#` header.
    pub fn write_columns<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# wiener-path v1")?;
        match &self.source {
            Source::Seeded(s) => writeln!(w, "# source=seeded seed={s}")?,
            Source::Zero => writeln!(w, "# source=zero")?,
            Source::Injected { .. } => writeln!(w, "# source=injected")?,
        }
        writeln!(w, "# dt_path={}", self.dt)?;
        writeln!(w, "# t_min={}", self.t_min())?;
        writeln!(w, "# t_max={}", self.t_max())?;
        writeln!(w, "# origin_offset={}", self.origin)?;
        writeln!(w, "time,value")?;
        for (t, v) in self.times().zip(self.values.iter()) {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }

    /// Reads a file produced by [`write_columns`](Self::write_columns).
    /// Sampled paths are regenerated from their seed and checked bit for bit
    /// against the stored values, so the result stays extendable.
    pub fn read_columns<R: BufRead>(r: R) -> Result<Self> {
        let mut source = None;
        let mut dt = None;
        let mut origin = 0i64;
        let mut values = Vec::new();
        let mut first_time = None;
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if let Some(h) = line.strip_prefix('#') {
                for kv in h.split_whitespace() {
                    let Some((k, v)) = kv.split_once('=') else {
                        continue;
                    };
                    let bad = |_| Error::Parse(format!("bad header value {kv}"));
                    match k {
                        "source" => source = Some(v.to_string()),
                        "seed" => {
                            source = Some(format!(
                                "seeded:{}",
                                v.parse::<u64>().map_err(|_| Error::Parse(kv.into()))?
                            ))
                        }
                        "dt_path" => dt = Some(v.parse::<f64>().map_err(bad)?),
                        "origin_offset" => origin = v.parse().map_err(|_| Error::Parse(kv.into()))?,
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() || line.starts_with("time") {
                continue;
            }
            let (t, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("expected `time,value`, got {line:?}")))?;
            let t: f64 = t.parse().map_err(|_| Error::Parse(format!("bad time {t:?}")))?;
            let v: f64 = v.parse().map_err(|_| Error::Parse(format!("bad value {v:?}")))?;
            first_time.get_or_insert(t);
            values.push(v);
        }
        let dt = dt.ok_or_else(|| Error::Parse("missing dt_path header".into()))?;
        let t0 = first_time.ok_or_else(|| Error::Parse("no data rows".into()))?;
        let k_min = grid_index(t0, dt)?;
        let k_max = k_min + values.len() as i64 - 1;
        let source = source.unwrap_or_else(|| "injected".into());
        if let Some(seed) = source.strip_prefix("seeded:") {
            let seed: u64 = seed.parse().map_err(|_| Error::Parse("bad seed".into()))?;
            let path = Self::build(Source::Seeded(seed), dt, origin, k_min, k_max)?;
            let same = path.values.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits());
            if !same {
                return Err(Error::Parse(
                    "stored values do not match the regenerated seeded path".into(),
                ));
            }
            Ok(path)
        } else if source == "zero" {
            Self::build(Source::Zero, dt, origin, k_min, k_max)
        } else {
            Self::from_values(t0, dt, values)
        }
    }
}

/// Stationary Ornstein–Uhlenbeck value `z(ω)` for one path and rate.
#[derive(Debug, Clone)]
pub struct OuProcess {
    lambda: f64,
    z0: f64,
    tail_bound: f64,
    path: WienerPath,
}

/// Exact integral of `−λ e^{λs} ω(s)` over the piecewise-linear path on
/// `[t_min, 0]`, with a truncation-plus-rounding error estimate.
fn ou_quadrature(path: &WienerPath, lambda: f64) -> (f64, f64) {
    let dt = path.dt();
    let v = path.values();
    let o = path.origin_index();
    let w = -(-lambda * dt).exp_m1() / (lambda * dt);
    let t_min = path.t_min();
    let boundary = (lambda * t_min).exp() * v[0];
    let mut sum = 0.0;
    let mut abs_sum = boundary.abs();
    // Largest weights first: walk from the origin into the past.
    for k in (0..o).rev() {
        let rel = (k as i64 + path.k_min() + 1) as f64 * dt;
        let term = (v[k + 1] - v[k]) * (lambda * rel).exp();
        sum += term;
        abs_sum += (w * term).abs();
    }
    let z = boundary + w * sum;
    let max_abs = v[..=o].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let truncation = (lambda * t_min).exp() * max_abs;
    let rounding = 2.0 * f64::EPSILON * (o as f64 + 2.0) * abs_sum;
    (z, truncation + rounding)
}

impl OuProcess {
    /// `z(ω)` with the default tail tolerance.
    pub fn new(path: &WienerPath, lambda: f64) -> Result<Self> {
        Self::with_tolerance(path, lambda, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn with_tolerance(path: &WienerPath, lambda: f64, tolerance: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("OU rate must be positive, got {lambda}")));
        }
        let (z0, tail_bound) = ou_quadrature(path, lambda);
        if !(tail_bound <= tolerance) {
            return Err(Error::Quality {
                what: format!("z(ω) left window t_min = {}", path.t_min()),
                bound: tail_bound,
                tolerance,
            });
        }
        Ok(Self {
            lambda,
            z0,
            tail_bound,
            path: path.clone(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `z(ω)`.
    pub fn value(&self) -> f64 {
        self.z0
    }

    /// Estimated error of [`value`](Self::value) (truncation plus rounding).
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn path(&self) -> &WienerPath {
        &self.path
    }

    /// `z(θₜω)` for `t = j·dt/substeps`, `j = 0..=steps·substeps`, by the
    /// exact update on the interpolant. The path is extended when needed.
    pub fn forward_values(&self, steps: usize, substeps: usize) -> Result<Vec<f64>> {
        if substeps == 0 {
            return Err(invalid("substeps must be ≥ 1"));
        }
        let dt = self.path.dt();
        let path = self.path.covering(self.path.t_min(), steps as f64 * dt)?;
        let o = path.origin_index();
        let v = path.values();
        if o + steps >= v.len() {
            return Err(invalid("path window too short for the requested horizon"));
        }
        let delta = dt / substeps as f64;
        let decay = (-self.lambda * delta).exp();
        let weight = -(-self.lambda * delta).exp_m1() / (self.lambda * delta);
        let mut out = Vec::with_capacity(steps * substeps + 1);
        let mut z = self.z0;
        out.push(z);
        for k in 0..steps {
            let inc = (v[o + k + 1] - v[o + k]) / substeps as f64;
            for _ in 0..substeps {
                z = decay * z + weight * inc;
                out.push(z);
            }
        }
        Ok(out)
    }
}

/// `z(ω) = −λ∫₋∞⁰ e^{λs} ω(s) ds`, truncated at the path's left end.
pub fn ou_value(path: &WienerPath, lambda: f64) -> Result<OuProcess> {
    OuProcess::new(path, lambda)
}

/// `z(θₜω)` at ascending grid times, seeded by [`ou_value`] at the first
/// time and advanced by the exact one-step update.
pub fn ou_trajectory(path: &WienerPath, lambda: f64, times: &[f64]) -> Result<Vec<f64>> {
    let Some(&t0) = times.first() else {
        return Ok(Vec::new());
    };
    let dt = path.dt();
    let k0 = grid_index(t0, dt)?;
    let mut rel = Vec::with_capacity(times.len());
    let mut prev = k0;
    for &t in times {
        let k = grid_index(t, dt)?;
        if k < prev {
            return Err(invalid("times must be ascending"));
        }
        prev = k;
        rel.push((k - k0) as usize);
    }
    let horizon = *rel.last().unwrap();
    let shifted = path.shift(t0)?;
    let ou = OuProcess::new(&shifted, lambda)?;
    let zs = ou.forward_values(horizon, 1)?;
    Ok(rel.into_iter().map(|j| zs[j]).collect())
}

/// `e^{λs} |z(θₛω)|^p` over a descending grid of non-positive times.
pub fn temperedness_profile(path: &WienerPath, lambda: f64, p: f64, s_grid: &[f64]) -> Result<Vec<f64>> {
    if s_grid.windows(2).any(|w| w[1] > w[0]) || s_grid.iter().any(|&s| s > 0.0) {
        return Err(invalid("s_grid must be descending and ≤ 0"));
    }
    let ascending: Vec<f64> = s_grid.iter().rev().copied().collect();
    let mut z = ou_trajectory(path, lambda, &ascending)?;
    z.reverse();
    Ok(s_grid
        .iter()
        .zip(z)
        .map(|(&s, z)| (lambda * s).exp() * z.abs().powf(p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchored_at_zero() {
        for seed in [0, 1, 99] {
            let p = WienerPath::sample(seed, -3.0, 2.0, 0.01).unwrap();
            assert_eq!(p.value_at(0.0).unwrap(), 0.0);
            assert_eq!(p.len(), 501);
            assert_eq!(p.origin_index(), 300);
        }
    }

    #[test]
    fn window_extension_is_append_only() {
        let a = WienerPath::sample(7, -10.0, 10.0, 0.01).unwrap();
        let b = WienerPath::sample(7, -20.0, 10.0, 0.01).unwrap();
        let off = b.origin_index() - a.origin_index();
        for (i, v) in a.values().iter().enumerate() {
            assert_eq!(v.to_bits(), b.values()[i + off].to_bits());
        }
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(WienerPath::sample(0, -1.0, 1.0, 0.0).is_err());
        assert!(WienerPath::sample(0, -1.0, 1.0, -0.1).is_err());
        assert!(WienerPath::sample(0, 1.0, 2.0, 0.1).is_err());
        assert!(WienerPath::sample(0, 0.5, -0.5, 0.1).is_err());
    }

    #[test]
    fn increment_statistics() {
        let dt = 0.01;
        let p = WienerPath::sample(3, -50.0, 50.0, dt).unwrap();
        let inc = p.increments();
        let n = inc.len() as f64;
        assert!(n >= 1e4);
        let mean = inc.iter().sum::<f64>() / n;
        let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 4.0 * dt.sqrt() / n.sqrt(), "mean {mean}");
        assert!((var - dt).abs() <= 0.05 * dt, "variance {var}");
    }

    #[test]
    fn shift_identity_and_group_law() {
        let p = WienerPath::sample(11, -5.0, 5.0, 0.01).unwrap();
        let same = p.shift(0.0).unwrap();
        assert_eq!(same.values(), p.values());
        let a = p.shift(1.5).unwrap().shift(-0.7).unwrap();
        let b = p.shift(0.8).unwrap();
        assert_eq!(a.t_min(), b.t_min());
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.value_at(0.0).unwrap(), 0.0);
    }

    #[test]
    fn shift_matches_definition() {
        let p = WienerPath::sample(5, -5.0, 5.0, 0.01).unwrap();
        let t = 1.25;
        let q = p.shift(t).unwrap();
        let wt = p.value_at(t).unwrap();
        for s in [-2.0, -0.5, 0.0, 0.3, 3.0] {
            let expect = p.value_at(s + t).unwrap() - wt;
            assert!((q.value_at(s).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_path_is_shift_invariant() {
        let p = WienerPath::from_fn(-4.0, 4.0, 0.01, |s| s).unwrap();
        for t in [-1.0, 0.5, 2.0] {
            let q = p.shift(t).unwrap();
            for s in [-1.0, 0.0, 1.0] {
                assert!((q.value_at(s).unwrap() - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn off_grid_shift_rejected() {
        let p = WienerPath::sample(1, -1.0, 1.0, 0.01).unwrap();
        assert!(matches!(p.shift(0.005), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn injected_shift_outside_window_rejected() {
        let p = WienerPath::from_fn(-1.0, 1.0, 0.1, |s| s).unwrap();
        assert!(p.shift(2.0).is_err());
        assert!(p.with_window(-5.0, 1.0).is_err());
    }

    #[test]
    fn ou_zero_path() {
        let p = WienerPath::zero(-40.0, 0.0, 0.01).unwrap();
        let ou = ou_value(&p, 1.0).unwrap();
        assert_eq!(ou.value(), 0.0);
        assert_eq!(ou_trajectory(&p, 1.0, &[0.0, 1.0, 2.0]).unwrap(), vec![0.0; 3]);
        let prof = temperedness_profile(&p, 1.0, 2.0, &[-1.0, -2.0]).unwrap();
        assert_eq!(prof, vec![0.0, 0.0]);
    }

    #[test]
    fn ou_linear_path_closed_form() {
        // −λ∫₋∞⁰ e^{λτ} τ dτ = 1/λ; antiderivative e^{λτ}(τ/λ − 1/λ²).
        let lambda: f64 = 2.0;
        let t_min: f64 = -30.0;
        let antideriv = |t: f64| (lambda * t).exp() * (t / lambda - 1.0 / lambda.powi(2));
        let oracle = -lambda * (antideriv(0.0) - antideriv(t_min));
        assert!((oracle - 0.5).abs() < 1e-20_f64.max(1e-12));
        let p = WienerPath::from_fn(t_min, 0.0, 0.001, |s| s).unwrap();
        let ou = OuProcess::with_tolerance(&p, lambda, 1e-6).unwrap();
        assert!((ou.value() - oracle).abs() < 1e-10, "{}", ou.value());
    }

    #[test]
    fn ou_insufficient_window_is_quality_error() {
        let p = WienerPath::sample(2, -1.0, 0.0, 0.01).unwrap();
        assert!(matches!(ou_value(&p, 1.0), Err(Error::Quality { .. })));
    }

    #[test]
    fn ou_single_time_matches_value() {
        let p = WienerPath::sample(4, -40.0, 5.0, 0.01).unwrap();
        let z = ou_trajectory(&p, 1.0, &[0.0]).unwrap();
        assert_eq!(z[0], ou_value(&p, 1.0).unwrap().value());
    }

    #[test]
    fn columns_round_trip() {
        let p = WienerPath::sample(9, -2.0, 1.0, 0.01).unwrap().shift(0.5).unwrap();
        let mut buf = Vec::new();
        p.write_columns(&mut buf).unwrap();
        let q = WienerPath::read_columns(buf.as_slice()).unwrap();
        assert_eq!(q.seed(), Some(9));
        assert_eq!(q.origin_offset(), p.origin_offset());
        for (a, b) in p.values().iter().zip(q.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let inj = WienerPath::from_fn(-1.0, 1.0, 0.1, |s| s.sin()).unwrap();
        let mut buf = Vec::new();
        inj.write_columns(&mut buf).unwrap();
        let back = WienerPath::read_columns(buf.as_slice()).unwrap();
        assert_eq!(back.values(), inj.values());
    }

    #[test]
    fn tampered_seeded_file_rejected() {
        let p = WienerPath::sample(9, -1.0, 1.0, 0.1).unwrap();
        let mut buf = Vec::new();
        p.write_columns(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("\n0.1,", "\n0.1,1");
        assert!(WienerPath::read_columns(text.as_bytes()).is_err());
    }
}
