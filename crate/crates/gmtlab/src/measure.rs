//! Discrete measures: weighted point clouds with a spatial index.
//!
//! A [`DiscreteMeasure`] is immutable after construction and safe to share
//! across threads. Ball masses are exact (open balls, strict inequality);
//! growth constants are reported over a finite radius window on a geometric
//! grid, since discrete atoms make the r→0 limit degenerate.

use crate::error::{Error, Result};
use crate::numeric::{csum, dist, geometric_grid, NeumaierSum};
use crate::spatial::KdTree;
use serde::{Deserialize, Serialize};

/// Ratio of consecutive radii in growth-constant scans.
pub const RADIUS_GRID_RATIO: f64 = 1.189207115002721; // 2^(1/4)

/// What to do with coincident points at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoincidentPolicy {
    /// Reject the input (default): atoms stacked at one location have no
    /// continuum analogue.
    Reject,
    /// Merge stacks into a single atom carrying the summed weight.
    Merge,
}

/// A nonnegative finite measure given by atoms `weights[i]` at `points[i]`.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>, // row-major, len = n * dim
    weights: Vec<f64>,
    total_mass: f64,
    index: KdTree,
}

impl DiscreteMeasure {
    /// Builds a measure, validating every invariant. Points must be
    /// pairwise distinct under `CoincidentPolicy::Reject`.
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        Self::with_policy(dim, points, weights, CoincidentPolicy::Reject)
    }

    pub fn with_policy(
        dim: usize,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        policy: CoincidentPolicy,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMeasure(format!(
                    "non-finite coordinate at point {i}"
                )));
            }
            coords.extend_from_slice(p);
        }
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "weight {w} at index {i} is not a finite nonnegative real"
                )));
            }
        }
        Self::from_flat(dim, coords, weights, policy)
    }

    /// Same as [`DiscreteMeasure::new`] but takes row-major flat coordinates.
    pub fn from_flat(
        dim: usize,
        mut coords: Vec<f64>,
        mut weights: Vec<f64>,
        policy: CoincidentPolicy,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        if coords.len() != weights.len() * dim {
            return Err(Error::InvalidMeasure(format!(
                "coordinate buffer holds {} values, expected {}",
                coords.len(),
                weights.len() * dim
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite coordinate".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("negative or non-finite weight".into()));
        }

        let n = weights.len();
        // detect exact coordinate duplicates via a lexicographic sort
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            coords[a * dim..(a + 1) * dim]
                .partial_cmp(&coords[b * dim..(b + 1) * dim])
                .unwrap()
        });
        let mut drop = vec![false; n];
        let mut any_dup = false;
        for w in order.windows(2) {
            let (a, b) = (w[0], w[1]);
            if coords[a * dim..(a + 1) * dim] == coords[b * dim..(b + 1) * dim] {
                match policy {
                    CoincidentPolicy::Reject => {
                        return Err(Error::CoincidentPoints(a.min(b), a.max(b)))
                    }
                    CoincidentPolicy::Merge => {
                        // merge later occurrence into the earlier one
                        let (keep, gone) = (a.min(b), a.max(b));
                        weights[keep] += weights[gone];
                        weights[gone] = 0.0;
                        drop[gone] = true;
                        any_dup = true;
                    }
                }
            }
        }
        if any_dup {
            let mut new_coords = Vec::with_capacity(coords.len());
            let mut new_weights = Vec::new();
            for i in 0..n {
                if !drop[i] {
                    new_coords.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                    new_weights.push(weights[i]);
                }
            }
            coords = new_coords;
            weights = new_weights;
        }

        let total_mass = csum(weights.iter().copied());
        let index = KdTree::build(dim, &coords);
        Ok(Self {
            dim,
            coords,
            weights,
            total_mass,
            index,
        })
    }

    /// The empty measure on R^dim.
    pub fn empty(dim: usize) -> Self {
        Self::from_flat(dim, Vec::new(), Vec::new(), CoincidentPolicy::Reject).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn points_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn index(&self) -> &KdTree {
        &self.index
    }

    /// μ(B(x, r)) for the open ball, exact for the atom set.
    ///
    /// Summation is compensated and runs in ascending point order, so the
    /// result is bit-reproducible.
    pub fn ball_mass(&self, center: &[f64], radius: f64) -> f64 {
        assert!(radius > 0.0, "ball radius must be positive");
        let hits = self.index.query_ball(center, radius);
        csum(hits.into_iter().map(|i| self.weights[i]))
    }

    /// Smallest positive distance between two distinct atoms, `None` for
    /// fewer than two points.
    pub fn min_spacing(&self) -> Option<f64> {
        if self.len() < 2 {
            return None;
        }
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            if let Some(d) = self.index.nearest_distance(self.point(i), Some(i)) {
                best = best.min(d);
            }
        }
        Some(best)
    }

    /// Diameter of the support (0 for fewer than two points).
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(dist(self.point(i), self.point(j)));
            }
        }
        best
    }

    /// Rescaled measure x ↦ x/λ with weights divided by λ^s; sends
    /// μ(B(x,r)) to μ(B(x/λ, r/λ))·λ^{-s}, the exact scale action on the
    /// growth ratio.
    pub fn rescale(&self, lambda: f64, s: f64) -> Self {
        let coords: Vec<f64> = self.coords.iter().map(|c| c / lambda).collect();
        let factor = lambda.powf(-s);
        let weights: Vec<f64> = self.weights.iter().map(|w| w * factor).collect();
        Self::from_flat(self.dim, coords, weights, CoincidentPolicy::Reject).unwrap()
    }

    /// Restriction of the measure to the atoms listed in `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(keep.len() * self.dim);
        let mut weights = Vec::with_capacity(keep.len());
        for &i in keep {
            coords.extend_from_slice(self.point(i));
            weights.push(self.weights[i]);
        }
        Self::from_flat(self.dim, coords, weights, CoincidentPolicy::Reject).unwrap()
    }
}

/// Outcome of a growth-constant scan over a radius window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthReport {
    /// The extremal ratio μ(B(x,r))/r^s found over the window (max for
    /// upper bounds, min for lower bounds).
    pub constant: f64,
    /// (center, radius, ratio) attaining the constant.
    pub witness: Option<(Vec<f64>, f64, f64)>,
    pub scale_window: (f64, f64),
    /// Set for lower-density scans with an empty measure: no testable
    /// balls, verdict carries no information.
    pub vacuous: bool,
}

impl GrowthReport {
    fn vacuous(window: (f64, f64)) -> Self {
        Self {
            constant: 0.0,
            witness: None,
            scale_window: window,
            vacuous: true,
        }
    }
}

/// Sampling plan for growth scans.
#[derive(Clone, Debug)]
pub enum CenterPlan {
    /// All support points plus midpoints of pairs closer than twice the
    /// radius-window floor (the default).
    SupportAndCloseMidpoints,
    /// Support points only (AD-regularity lower bounds quantify over
    /// supp μ).
    SupportOnly,
    /// Explicit list.
    Explicit(Vec<Vec<f64>>),
}

fn plan_centers(mu: &DiscreteMeasure, plan: &CenterPlan, r_min: f64) -> Vec<Vec<f64>> {
    match plan {
        CenterPlan::SupportOnly => mu.points_iter().map(|p| p.to_vec()).collect(),
        CenterPlan::Explicit(cs) => cs.clone(),
        CenterPlan::SupportAndCloseMidpoints => {
            let mut centers: Vec<Vec<f64>> = mu.points_iter().map(|p| p.to_vec()).collect();
            let cutoff = 2.0 * r_min;
            for i in 0..mu.len() {
                for j in mu.index().query_ball(mu.point(i), cutoff) {
                    if j > i {
                        let mid: Vec<f64> = mu
                            .point(i)
                            .iter()
                            .zip(mu.point(j))
                            .map(|(a, b)| 0.5 * (a + b))
                            .collect();
                        centers.push(mid);
                    }
                }
            }
            centers
        }
    }
}

/// Largest μ(B(x,r))/r^s over the window: a lower bound for the true
/// niceness constant Λ.
///
/// Rejects r_min ≤ 0 — an atom forces the ratio to +∞ as r→0, so the
/// constant is only meaningful over a positive window.
pub fn niceness_constant(
    mu: &DiscreteMeasure,
    s: f64,
    plan: &CenterPlan,
    r_min: f64,
    r_max: f64,
) -> Result<GrowthReport> {
    if !(r_min > 0.0) || !(r_max > r_min) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if mu.is_empty() {
        return Ok(GrowthReport {
            constant: 0.0,
            witness: None,
            scale_window: (r_min, r_max),
            vacuous: false,
        });
    }
    let centers = plan_centers(mu, plan, r_min);
    if centers.is_empty() {
        return Err(Error::EmptyInput("no centers in sampling plan".into()));
    }
    let radii = geometric_grid(r_min, r_max, RADIUS_GRID_RATIO);
    let mut best = 0.0_f64;
    let mut witness = None;
    for c in &centers {
        for &r in &radii {
            let ratio = mu.ball_mass(c, r) / r.powf(s);
            if ratio > best {
                best = ratio;
                witness = Some((c.clone(), r, ratio));
            }
        }
    }
    Ok(GrowthReport {
        constant: best,
        witness,
        scale_window: (r_min, r_max),
        vacuous: false,
    })
}

/// Default radius-window floor: twice the minimum inter-point spacing.
pub fn default_r_min(mu: &DiscreteMeasure) -> Option<f64> {
    mu.min_spacing().map(|h| 2.0 * h)
}

/// Smallest μ(B(x,r))/r^s over support-centered balls (the AD-regularity
/// lower-density scan). `pass` requires constant ≥ 1/Λ together with a
/// niceness constant ≤ Λ over the same window.
pub fn ad_regularity_check(
    mu: &DiscreteMeasure,
    s: f64,
    lambda: f64,
    r_min: f64,
    r_max: f64,
) -> Result<(GrowthReport, bool)> {
    if !(r_min > 0.0) || !(r_max > r_min) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter("Λ must be positive".into()));
    }
    if mu.is_empty() {
        return Ok((GrowthReport::vacuous((r_min, r_max)), false));
    }
    let radii = geometric_grid(r_min, r_max, RADIUS_GRID_RATIO);
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for i in 0..mu.len() {
        let c = mu.point(i);
        for &r in &radii {
            let ratio = mu.ball_mass(c, r) / r.powf(s);
            if ratio < worst {
                worst = ratio;
                witness = Some((c.to_vec(), r, ratio));
            }
        }
    }
    let lower = GrowthReport {
        constant: worst,
        witness,
        scale_window: (r_min, r_max),
        vacuous: false,
    };
    let upper = niceness_constant(mu, s, &CenterPlan::SupportAndCloseMidpoints, r_min, r_max)?;
    let pass = lower.constant >= 1.0 / lambda && upper.constant <= lambda;
    Ok((lower, pass))
}

/// The pairwise energy Σ_{i≠j} w_i w_j |x_i − x_j|^{-(s-1)}, the discrete
/// counterpart of the double integral of |x−y|^{1-s}.
///
/// Errors out on a zero off-diagonal distance with the offending pair.
pub fn energy(mu: &DiscreteMeasure, s: f64) -> Result<f64> {
    let n = mu.len();
    let expo = s - 1.0;
    let mut acc = NeumaierSum::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = dist(mu.point(i), mu.point(j));
            if d == 0.0 {
                return Err(Error::CoincidentPoints(i.min(j), i.max(j)));
            }
            acc.add(mu.weight(i) * mu.weight(j) * d.powf(-expo));
        }
    }
    Ok(acc.value())
}

/// Σ_{i≠k} w_i w_k (x_{i,j} − x_{k,j})² / |x_i − x_k|^{s+1} for one
/// coordinate j. Summing over j recovers `energy` exactly, since
/// Σ_j (x_j − y_j)² = |x − y|².
pub fn coordinate_energy(mu: &DiscreteMeasure, s: f64, axis: usize) -> Result<f64> {
    if axis >= mu.dim() {
        return Err(Error::InvalidParameter(format!(
            "axis {axis} out of range for dim {}",
            mu.dim()
        )));
    }
    let n = mu.len();
    let mut acc = NeumaierSum::new();
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let d = dist(mu.point(i), mu.point(k));
            if d == 0.0 {
                return Err(Error::CoincidentPoints(i.min(k), i.max(k)));
            }
            let dj = mu.point(i)[axis] - mu.point(k)[axis];
            acc.add(mu.weight(i) * mu.weight(k) * dj * dj * d.powf(-(s + 1.0)));
        }
    }
    Ok(acc.value())
}
