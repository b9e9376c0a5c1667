//! Point-cloud set calculus.
//!
//! Sets are finite samples ([`PointCloud`]) of states in a metric space. The
//! Hausdorff semi-distance `d(C, B) = sup_{x∈C} inf_{y∈B} d(x, y)` measures
//! how far `C` sticks out of `B`; it is asymmetric, and `max(d(C, B), d(B, C))`
//! is the Hausdorff distance.
//!
//! A cloud can carry *edges*: index pairs marking segments of the underlying
//! continuum it samples (a lattice on an interval, radii of a ball). The
//! [`Engine`] uses them to refine pullback images where neighbouring samples
//! have drifted apart.

mod engine;

pub use engine::{
    compactness_diagnostic, Absorption, CompactnessReport, Engine, EngineOptions, OmegaLimit, PullbackSchedule,
};

use crate::error::{invalid, Result};

/// A state space element with a metric, a norm, and midpoints (for refinement).
pub trait MetricState: Clone + Send + Sync {
    fn distance(&self, other: &Self) -> f64;
    fn norm(&self) -> f64;
    fn midpoint(&self, other: &Self) -> Self;
}

impl MetricState for f64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }

    fn norm(&self) -> f64 {
        self.abs()
    }

    fn midpoint(&self, other: &Self) -> Self {
        0.5 * (self + other)
    }
}

/// Euclidean vectors.
impl MetricState for Vec<f64> {
    fn distance(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn norm(&self) -> f64 {
        self.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    fn midpoint(&self, other: &Self) -> Self {
        self.iter().zip(other).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

/// Finite sample of a set, with optional connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<S> {
    points: Vec<S>,
    edges: Vec<(usize, usize)>,
}

impl<S: MetricState> PointCloud<S> {
    pub fn new(points: Vec<S>) -> Self {
        Self {
            points,
            edges: Vec::new(),
        }
    }

    pub fn singleton(x: S) -> Self {
        Self::new(vec![x])
    }

    /// Cloud whose consecutive points are joined by edges.
    pub fn chain(points: Vec<S>) -> Self {
        let edges = (1..points.len()).map(|i| (i - 1, i)).collect();
        Self { points, edges }
    }

    pub fn with_edges(points: Vec<S>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if edges.iter().any(|&(a, b)| a >= points.len() || b >= points.len()) {
            return Err(invalid("edge index out of range"));
        }
        Ok(Self { points, edges })
    }

    pub fn points(&self) -> &[S] {
        &self.points
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn into_points(self) -> Vec<S> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(MetricState::norm).fold(0.0, f64::max)
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.max(a.distance(b));
            }
        }
        d
    }

    /// Union of two clouds; edges are kept and re-indexed.
    pub fn union(&self, other: &Self) -> Self {
        let n = self.points.len();
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(a, b)| (a + n, b + n)));
        Self { points, edges }
    }

    /// Greedy deduplication: a point is dropped when it lies within `tol` of
    /// an earlier kept point. Edges are redirected to the kept representative.
    pub fn dedup(&self, tol: f64) -> Self {
        let mut kept: Vec<S> = Vec::new();
        let mut rep = Vec::with_capacity(self.points.len());
        for p in &self.points {
            match kept.iter().position(|k| k.distance(p) <= tol) {
                Some(i) => rep.push(i),
                None => {
                    rep.push(kept.len());
                    kept.push(p.clone());
                }
            }
        }
        let mut edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| (rep[a].min(rep[b]), rep[a].max(rep[b])))
            .filter(|(a, b)| a != b)
            .collect();
        edges.sort_unstable();
        edges.dedup();
        Self { points: kept, edges }
    }
}

/// `d(C, B) = max_{x∈C} min_{y∈B} d(x, y)`.
pub fn semidist<S: MetricState>(c: &PointCloud<S>, b: &PointCloud<S>) -> Result<f64> {
    if c.is_empty() || b.is_empty() {
        return Err(invalid("semi-distance of an empty cloud"));
    }
    Ok(c.points
        .iter()
        .map(|x| b.points.iter().map(|y| x.distance(y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}

/// Symmetric Hausdorff distance.
pub fn hausdorff<S: MetricState>(a: &PointCloud<S>, b: &PointCloud<S>) -> Result<f64> {
    Ok(semidist(a, b)?.max(semidist(b, a)?))
}

/// Whether `D` lies in the open `eps`-neighbourhood of `B`.
pub fn eps_neighborhood_contains<S: MetricState>(b: &PointCloud<S>, d: &PointCloud<S>, eps: f64) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    Ok(semidist(d, b)? < eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn semidist_examples() {
        let b = PointCloud::new(vec![0.0, 1.0]);
        assert_eq!(semidist(&b, &b).unwrap(), 0.0);
        assert_eq!(semidist(&b, &PointCloud::singleton(0.0)).unwrap(), 1.0);
        assert_eq!(semidist(&PointCloud::singleton(0.0), &b).unwrap(), 0.0);
        let c = PointCloud::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]]);
        assert_eq!(semidist(&c, &PointCloud::singleton(vec![0.0, 0.0])).unwrap(), 5.0);
    }

    #[test]
    fn empty_cloud_rejected() {
        let e: PointCloud<f64> = PointCloud::new(vec![]);
        assert!(semidist(&e, &PointCloud::singleton(1.0)).is_err());
        assert!(semidist(&PointCloud::singleton(1.0), &e).is_err());
    }

    #[test]
    fn eps_neighborhood_examples() {
        let b = PointCloud::singleton(1.0);
        let d = PointCloud::singleton(1.5);
        assert!(eps_neighborhood_contains(&b, &b, 1e-9).unwrap());
        assert!(!eps_neighborhood_contains(&b, &d, 0.4).unwrap());
        assert!(eps_neighborhood_contains(&b, &d, 0.6).unwrap());
        assert!(eps_neighborhood_contains(&b, &d, 0.0).is_err());
    }

    #[test]
    fn dedup_merges_and_redirects_edges() {
        let c = PointCloud::chain(vec![0.0, 1e-9, 1.0, 1.0 + 1e-9, 2.0]);
        let d = c.dedup(1e-6);
        assert_eq!(d.points(), &[0.0, 1.0, 2.0]);
        assert_eq!(d.edges(), &[(0, 1), (1, 2)]);
    }

    fn cloud() -> impl Strategy<Value = PointCloud<f64>> {
        prop::collection::vec(-10.0f64..10.0, 1..12).prop_map(PointCloud::new)
    }

    proptest! {
        #[test]
        fn semidist_triangle(a in cloud(), b in cloud(), c in cloud()) {
            let ac = semidist(&a, &c).unwrap();
            let ab = semidist(&a, &b).unwrap();
            let bc = semidist(&b, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn enlarging_target_never_increases(c in cloud(), b in cloud(), extra in cloud()) {
            let before = semidist(&c, &b).unwrap();
            let after = semidist(&c, &b.union(&extra)).unwrap();
            prop_assert!(after <= before);
        }
    }
}
