//! Small numeric building blocks shared across the crate.
//!
//! All bulk summations in the crate go through [`NeumaierSum`] in a fixed,
//! deterministic order, so results are reproducible regardless of thread
//! count.

/// Compensated (Neumaier/Kahan) accumulator.
///
/// Neumaier's variant also handles the case where the next term is larger
/// than the running sum, which plain Kahan gets wrong.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn csum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Euclidean distance between two points given as coordinate slices.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Squared Euclidean distance.
#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Euclidean norm of a vector.
#[inline]
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Geometric grid from `lo` to `hi` (inclusive ends) with the given ratio.
///
/// The last point is clamped to `hi` so the grid always covers the full
/// interval.
pub fn geometric_grid(lo: f64, hi: f64, ratio: f64) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && ratio > 1.0);
    let mut out = Vec::new();
    let mut r = lo;
    while r < hi * (1.0 - 1e-12) {
        out.push(r);
        r *= ratio;
    }
    out.push(hi);
    out
}

/// Relative difference |a-b| / max(|a|, |b|), zero when both are zero.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
