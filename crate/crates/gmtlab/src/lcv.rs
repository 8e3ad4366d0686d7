//! Local-weak-convexity diagnostics and Carleson packing constants.
//!
//! For a discrete measure, supp(μ) is the point set, so "the open ball
//! B((x+y)/2, δℓ(Q)) misses the support" is exactly "the nearest support
//! point to the midpoint sits at distance ≥ δℓ(Q)" — an exact test, not
//! an approximation. Exhaustive pair scans are quadratic per cube; over a
//! pair budget the scan falls back to farthest-point sampling, which can
//! only miss witnesses, so sampled non-flags are labeled one-sided.

use crate::error::{Error, Result};
use crate::lattice::{CubeAddress, DensityTable};
use crate::measure::DiscreteMeasure;
use crate::numeric::NeumaierSum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A δ-non-LCV witness: two support points whose midpoint clears the
/// support by at least δ·ℓ(Q).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LcvWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub midpoint: Vec<f64>,
    /// Distance from the midpoint to the nearest support point.
    pub clearance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LcvFlag {
    pub cube: CubeAddress,
    pub witness: LcvWitness,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LcvReport {
    pub delta: f64,
    pub flags: Vec<LcvFlag>,
    /// Cubes whose pair scan was sampled rather than exhaustive: their
    /// absence from `flags` means "no witness found", not "LCV".
    pub sampled_cubes: Vec<CubeAddress>,
}

/// Farthest-point subsample of the point indices (greedy 2-approximation
/// of the max-dispersion subset), seeded at the first index.
fn farthest_point_sample(mu: &DiscreteMeasure, idx: &[usize], target: usize) -> Vec<usize> {
    if idx.len() <= target {
        return idx.to_vec();
    }
    let mut chosen = vec![idx[0]];
    let mut dist_to_set: Vec<f64> = idx
        .iter()
        .map(|&i| crate::numeric::dist(mu.point(i), mu.point(idx[0])))
        .collect();
    while chosen.len() < target {
        let (k, _) = dist_to_set
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let next = idx[k];
        chosen.push(next);
        for (j, &i) in idx.iter().enumerate() {
            let d = crate::numeric::dist(mu.point(i), mu.point(next));
            if d < dist_to_set[j] {
                dist_to_set[j] = d;
            }
        }
    }
    chosen
}

/// Flags the populated cubes that are δ-non-LCV, with witnesses.
///
/// For each cube the scan runs over support-point pairs in the closed
/// triple; all pairs when count² fits the budget, otherwise pairs of a
/// farthest-point sample (those cubes are listed in `sampled_cubes`).
pub fn non_lcv_cubes(
    mu: &DiscreteMeasure,
    table: &DensityTable,
    delta: f64,
    pair_budget: usize,
) -> Result<LcvReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter("delta must lie in (0,1)".into()));
    }
    let lattice = &table.lattice;
    let cubes = table.cubes();
    let rows: Vec<(Option<LcvFlag>, Option<CubeAddress>)> = cubes
        .par_iter()
        .map(|q| {
            let side = q.side();
            let center = lattice.center(q);
            // candidates in the closed triple (circumscribed-ball prefilter)
            let r = 1.5 * side * (lattice.dim as f64).sqrt() + side * 1e-9;
            let mut inside: Vec<usize> = mu
                .index()
                .query_ball(&center, r)
                .into_iter()
                .filter(|&i| lattice.in_closed_triple(q, mu.point(i)))
                .collect();
            inside.sort_unstable();
            if inside.len() < 2 {
                return (None, None);
            }
            let mut sampled = None;
            if inside.len() * inside.len() > pair_budget {
                let target = (pair_budget as f64).sqrt().floor().max(2.0) as usize;
                inside = farthest_point_sample(mu, &inside, target);
                sampled = Some(q.clone());
            }
            let threshold = delta * side;
            for (a, &i) in inside.iter().enumerate() {
                for &j in &inside[a + 1..] {
                    let mid: Vec<f64> = mu
                        .point(i)
                        .iter()
                        .zip(mu.point(j))
                        .map(|(p, s)| 0.5 * (p + s))
                        .collect();
                    let clearance = mu
                        .index()
                        .nearest_distance(&mid, None)
                        .unwrap_or(f64::INFINITY);
                    if clearance >= threshold {
                        return (
                            Some(LcvFlag {
                                cube: q.clone(),
                                witness: LcvWitness {
                                    x: mu.point(i).to_vec(),
                                    y: mu.point(j).to_vec(),
                                    midpoint: mid,
                                    clearance,
                                },
                            }),
                            sampled,
                        );
                    }
                }
            }
            (None, sampled)
        })
        .collect();
    let mut flags = Vec::new();
    let mut sampled_cubes = Vec::new();
    for (flag, sampled) in rows {
        if let Some(f) = flag {
            flags.push(f);
        }
        if let Some(q) = sampled {
            sampled_cubes.push(q);
        }
    }
    Ok(LcvReport {
        delta,
        flags,
        sampled_cubes,
    })
}

/// Σ ℓ(Q)^s over family members contained in P, divided by ℓ(P)^s.
pub fn carleson_packing(family: &[CubeAddress], parent: &CubeAddress, s: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for q in family {
        if q.is_contained_in(parent) {
            acc.add(q.side().powf(s));
        }
    }
    acc.value() / parent.side().powf(s)
}

/// The empirical Carleson constant: sup of the packing ratio over a list
/// of ancestors.
pub fn carleson_constant(family: &[CubeAddress], parents: &[CubeAddress], s: f64) -> f64 {
    parents
        .iter()
        .map(|p| carleson_packing(family, p, s))
        .fold(0.0, f64::max)
}

/// CSV export of an LCV report: cube address, witness pair, clearance.
pub fn lcv_csv(report: &LcvReport) -> String {
    let mut out = String::from("level,coords,x,y,midpoint,clearance\n");
    for f in &report.flags {
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{:?},{:.17e}\n",
            f.cube.level,
            f.cube.coords,
            f.witness.x,
            f.witness.y,
            f.witness.midpoint,
            f.witness.clearance
        ));
    }
    out.replace(['[', ']'], "\"")
}
