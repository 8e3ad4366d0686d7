//! Static k-d tree over a flat point array.
//!
//! Supports the two queries the crate needs: all points strictly inside an
//! open ball, and the nearest-neighbor distance. Query results are
//! identical (as index sets) to brute-force scans; a property test in
//! `measure` pins this.

/// A balanced k-d tree storing indices into an external coordinate array.
#[derive(Clone, Debug)]
pub struct KdTree {
    dim: usize,
    // node layout: perm[lo..hi] with the median at the split position,
    // recursing on (lo, split) and (split+1, hi)
    perm: Vec<u32>,
    coords: Vec<f64>,
}

impl KdTree {
    /// Builds the tree. `coords` is row-major: point `i` occupies
    /// `coords[i*dim..(i+1)*dim]`.
    pub fn build(dim: usize, coords: &[f64]) -> Self {
        assert!(dim >= 1);
        assert_eq!(coords.len() % dim, 0);
        let n = coords.len() / dim;
        let mut perm: Vec<u32> = (0..n as u32).collect();
        let mut tree = Self {
            dim,
            perm: Vec::new(),
            coords: coords.to_vec(),
        };
        if n > 0 {
            tree.sort_span(&mut perm, 0);
        }
        tree.perm = perm;
        tree
    }

    fn coord(&self, idx: u32, axis: usize) -> f64 {
        self.coords[idx as usize * self.dim + axis]
    }

    fn sort_span(&self, span: &mut [u32], depth: usize) {
        if span.len() <= 1 {
            return;
        }
        let axis = depth % self.dim;
        let mid = span.len() / 2;
        // ties broken by index so the structure is deterministic
        span.select_nth_unstable_by(mid, |&a, &b| {
            self.coord(a, axis)
                .partial_cmp(&self.coord(b, axis))
                .unwrap()
                .then(a.cmp(&b))
        });
        let (lo, rest) = span.split_at_mut(mid);
        let (_, hi) = rest.split_at_mut(1);
        self.sort_span(lo, depth + 1);
        self.sort_span(hi, depth + 1);
    }

    /// Indices of all points with |p - center| < radius (open ball),
    /// ascending.
    pub fn query_ball(&self, center: &[f64], radius: f64) -> Vec<usize> {
        assert_eq!(center.len(), self.dim);
        let mut out = Vec::new();
        if !self.perm.is_empty() && radius > 0.0 {
            self.ball_rec(&self.perm, 0, center, radius * radius, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn ball_rec(&self, span: &[u32], depth: usize, center: &[f64], r_sq: f64, out: &mut Vec<usize>) {
        if span.is_empty() {
            return;
        }
        let axis = depth % self.dim;
        let mid = span.len() / 2;
        let pivot = span[mid];
        let d_sq: f64 = (0..self.dim)
            .map(|a| {
                let d = self.coord(pivot, a) - center[a];
                d * d
            })
            .sum();
        if d_sq < r_sq {
            out.push(pivot as usize);
        }
        let gap = center[axis] - self.coord(pivot, axis);
        if gap < 0.0 || gap * gap < r_sq {
            self.ball_rec(&span[..mid], depth + 1, center, r_sq, out);
        }
        if gap > 0.0 || gap * gap < r_sq {
            self.ball_rec(&span[mid + 1..], depth + 1, center, r_sq, out);
        }
    }

    /// Distance from `query` to the nearest indexed point, `None` when the
    /// tree is empty. `skip` excludes one index (used for self-exclusion).
    pub fn nearest_distance(&self, query: &[f64], skip: Option<usize>) -> Option<f64> {
        if self.perm.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        self.nearest_rec(&self.perm, 0, query, skip, &mut best);
        if best.is_finite() {
            Some(best.sqrt())
        } else {
            None
        }
    }

    fn nearest_rec(&self, span: &[u32], depth: usize, query: &[f64], skip: Option<usize>, best_sq: &mut f64) {
        if span.is_empty() {
            return;
        }
        let axis = depth % self.dim;
        let mid = span.len() / 2;
        let pivot = span[mid];
        if Some(pivot as usize) != skip {
            let d_sq: f64 = (0..self.dim)
                .map(|a| {
                    let d = self.coord(pivot, a) - query[a];
                    d * d
                })
                .sum();
            if d_sq < *best_sq {
                *best_sq = d_sq;
            }
        }
        let gap = query[axis] - self.coord(pivot, axis);
        let (near, far) = if gap <= 0.0 {
            (&span[..mid], &span[mid + 1..])
        } else {
            (&span[mid + 1..], &span[..mid])
        };
        self.nearest_rec(near, depth + 1, query, skip, best_sq);
        if gap * gap < *best_sq {
            self.nearest_rec(far, depth + 1, query, skip, best_sq);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::dist;

    fn brute_ball(coords: &[f64], dim: usize, c: &[f64], r: f64) -> Vec<usize> {
        (0..coords.len() / dim)
            .filter(|&i| dist(&coords[i * dim..(i + 1) * dim], c) < r)
            .collect()
    }

    #[test]
    fn ball_query_matches_brute_force() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=3 {
            let n = 200;
            let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let tree = KdTree::build(dim, &coords);
            for _ in 0..200 {
                let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.2..1.2)).collect();
                let r = rng.gen_range(0.01..1.5);
                assert_eq!(tree.query_ball(&c, r), brute_ball(&coords, dim, &c, r));
            }
        }
    }

    #[test]
    fn nearest_matches_brute_force() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let dim = 2;
        let n = 150;
        let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tree = KdTree::build(dim, &coords);
        for _ in 0..200 {
            let q = [rng.gen_range(-1.3..1.3), rng.gen_range(-1.3..1.3)];
            let brute = (0..n)
                .map(|i| dist(&coords[i * dim..(i + 1) * dim], &q))
                .fold(f64::INFINITY, f64::min);
            let got = tree.nearest_distance(&q, None).unwrap();
            assert!((got - brute).abs() <= 1e-15 * brute.max(1.0));
        }
    }

    #[test]
    fn empty_tree() {
        let tree = KdTree::build(2, &[]);
        assert!(tree.query_ball(&[0.0, 0.0], 1.0).is_empty());
        assert!(tree.nearest_distance(&[0.0, 0.0], None).is_none());
    }
}
