//! Reference measures with known analytic structure.
//!
//! Every generator is deterministic in its parameters, so emitted files are
//! bit-reproducible. These measures are the ground truth the rest of the
//! crate is tested against.

use crate::error::{Error, Result};
use crate::measure::{CoincidentPolicy, DiscreteMeasure};

/// Hard cap on generated points, to keep desk-scale runs desk-scale.
pub const POINT_CAP: usize = 4_000_000;

/// Uniform grid on the coordinate s-plane through the origin, spacing `h`,
/// extent `L`, each atom carrying weight h^s. Ball masses approximate the
/// s-dimensional Hausdorff measure of the plane up to O(h) boundary error.
pub fn plane_measure(dim: usize, s_int: usize, h: f64, extent: f64) -> Result<DiscreteMeasure> {
    if s_int == 0 || s_int > dim {
        return Err(Error::InvalidParameter(format!(
            "plane dimension must satisfy 1 <= s <= d, got s={s_int}, d={dim}"
        )));
    }
    if !(h > 0.0) || h > extent {
        return Err(Error::InvalidParameter("need 0 < h <= extent".into()));
    }
    let per_axis = (extent / h).round().max(1.0) as usize;
    let count = per_axis
        .checked_pow(s_int as u32)
        .filter(|&c| c <= POINT_CAP)
        .ok_or_else(|| Error::ResourceLimit(format!("plane grid exceeds {POINT_CAP} points")))?;
    let w = h.powi(s_int as i32);
    let mut coords = Vec::with_capacity(count * dim);
    let offset = (per_axis as f64 - 1.0) / 2.0;
    let mut idx = vec![0usize; s_int];
    loop {
        for axis in 0..dim {
            if axis < s_int {
                coords.push((idx[axis] as f64 - offset) * h);
            } else {
                coords.push(0.0);
            }
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == s_int {
                return DiscreteMeasure::from_flat(
                    dim,
                    coords,
                    vec![w; count],
                    CoincidentPolicy::Reject,
                );
            }
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// The 2^d-corner self-similar Cantor measure at depth `levels`: atoms at
/// the depth-n cell centers of the iterated corner construction on the
/// unit cube, with contraction `lambda` per level and equal weights
/// 2^{-d·n}. Its effective dimension is s = d·log 2 / log(1/λ).
pub fn cantor_measure(dim: usize, lambda: f64, levels: u32) -> Result<DiscreteMeasure> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::InvalidParameter(
            "contraction must lie in (0, 1/2)".into(),
        ));
    }
    if levels == 0 {
        return Err(Error::InvalidParameter("need at least one level".into()));
    }
    if dim == 0 || dim > 10 {
        return Err(Error::InvalidParameter("dim must be in 1..=10".into()));
    }
    let branches = 1usize << dim;
    let count = branches
        .checked_pow(levels)
        .filter(|&c| c <= POINT_CAP)
        .ok_or_else(|| Error::ResourceLimit(format!("cantor set exceeds {POINT_CAP} points")))?;

    // cell origins by breadth-first refinement
    let mut origins: Vec<Vec<f64>> = vec![vec![0.0; dim]];
    let mut side = 1.0;
    for _ in 0..levels {
        let shift = (1.0 - lambda) * side;
        let mut next = Vec::with_capacity(origins.len() * branches);
        for o in &origins {
            for corner in 0..branches {
                let mut c = o.clone();
                for (axis, coord) in c.iter_mut().enumerate() {
                    if corner >> axis & 1 == 1 {
                        *coord += shift;
                    }
                }
                next.push(c);
            }
        }
        origins = next;
        side *= lambda;
    }
    let w = (branches as f64).powi(-(levels as i32));
    let mut coords = Vec::with_capacity(count * dim);
    for o in &origins {
        for &c in o {
            coords.push(c + side / 2.0);
        }
    }
    DiscreteMeasure::from_flat(dim, coords, vec![w; count], CoincidentPolicy::Reject)
}

/// Dimension of the Cantor construction: d·log2/log(1/λ).
pub fn cantor_dimension(dim: usize, lambda: f64) -> f64 {
    dim as f64 * 2f64.ln() / (1.0 / lambda).ln()
}

/// Exact quantile discretization of the arcsine law on the segment
/// [-1,1] × {0} in R²: atoms at x_k = -cos((k - 1/2)π/N) with weight 1/N.
pub fn arcsine_measure(n: usize) -> Result<DiscreteMeasure> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two atoms".into()));
    }
    let mut coords = Vec::with_capacity(2 * n);
    for k in 1..=n {
        let theta = (k as f64 - 0.5) * std::f64::consts::PI / n as f64;
        coords.push(-theta.cos());
        coords.push(0.0);
    }
    DiscreteMeasure::from_flat(2, coords, vec![1.0 / n as f64; n], CoincidentPolicy::Reject)
}

/// Arcsine cumulative distribution (1/π)(arcsin x + π/2) on [-1,1].
pub fn arcsine_cdf(x: f64) -> f64 {
    (x.clamp(-1.0, 1.0).asin() + std::f64::consts::FRAC_PI_2) / std::f64::consts::PI
}

/// Equal-area concentric-ring quadrature of Lebesgue measure on the unit
/// disc: roughly `n_target` atoms, total mass exactly π (each ring carries
/// π/M). Ring populations are even, so the point set is antipodally
/// symmetric and the center of mass vanishes.
pub fn disc_lebesgue(n_target: usize) -> Result<DiscreteMeasure> {
    if n_target == 0 {
        return Err(Error::InvalidParameter("need at least one atom".into()));
    }
    if n_target > POINT_CAP {
        return Err(Error::ResourceLimit(format!("cap is {POINT_CAP} points")));
    }
    let rings = ((n_target as f64 / 6.0).sqrt().round() as usize).max(1);
    let ring_mass = std::f64::consts::PI / rings as f64;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for i in 0..rings {
        // ring i covers radii [sqrt(i/M), sqrt((i+1)/M)); atoms sit at the
        // equal-area median radius
        let rho = ((i as f64 + 0.5) / rings as f64).sqrt();
        let mut count = ((n_target as f64) * (2 * i + 1) as f64 / (rings * rings) as f64).round()
            as usize;
        count = count.max(6);
        count += count % 2; // even count => exact antipodal symmetry
        let w = ring_mass / count as f64;
        // stagger alternate rings so points don't align radially
        let phase = if i % 2 == 0 { 0.0 } else { std::f64::consts::PI / count as f64 };
        for j in 0..count {
            let phi = phase + 2.0 * std::f64::consts::PI * j as f64 / count as f64;
            coords.push(rho * phi.cos());
            coords.push(rho * phi.sin());
            weights.push(w);
        }
    }
    DiscreteMeasure::from_flat(2, coords, weights, CoincidentPolicy::Reject)
}

/// N equally spaced atoms of weight 1/N on the segment [0,1] embedded on
/// the first coordinate axis of R^dim.
pub fn segment_measure(n: usize, dim: usize) -> Result<DiscreteMeasure> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two atoms".into()));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dim must be >= 1".into()));
    }
    let h = 1.0 / n as f64;
    let mut coords = Vec::with_capacity(n * dim);
    for i in 0..n {
        coords.push((i as f64 + 0.5) * h);
        coords.extend(std::iter::repeat(0.0).take(dim - 1));
    }
    DiscreteMeasure::from_flat(dim, coords, vec![h; n], CoincidentPolicy::Reject)
}
