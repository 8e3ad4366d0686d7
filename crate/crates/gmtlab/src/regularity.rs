//! Senior cubes, ε-regular cubes, and the domination chain on the dyadic
//! cube graph.
//!
//! The cube graph is infinite, but ν(Q) = D_μ(3Q)^p μ(3Q) vanishes off the
//! populated table, so maximizer searches only rank populated candidates.
//! Distances come from the closed-form graph distance (BFS-validated in
//! the lattice tests). Quantified statements are truncated to the level
//! window and, for regularity, to a graph radius `r_graph`; reports carry
//! both truncations.

use crate::error::{Error, Result};
use crate::lattice::{CubeAddress, DensityTable};
use crate::numeric::NeumaierSum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Degree bound 2^d + 2d + 1 of the cube graph.
pub fn cube_degree_bound(dim: usize) -> usize {
    (1 << dim) + 2 * dim + 1
}

/// Smallest integer M with (2^d + 2d + 1)·2^{-M} < 1.
pub fn default_m_exponent(dim: usize) -> u32 {
    let mut m = 0u32;
    while cube_degree_bound(dim) as f64 * 2f64.powi(-(m as i32)) >= 1.0 {
        m += 1;
    }
    m
}

/// One cube's seniority verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubeSeniority {
    pub cube: CubeAddress,
    pub nu: f64,
    /// Index (into the analysis's cube list) of the maximizer of
    /// ν(Q')2^{-M·d(Q,Q')}.
    pub maximizer: usize,
    pub maximizer_distance: u64,
    pub senior: bool,
    /// Senior cubes within `r_guard` levels of the window boundary may be
    /// spuriously senior (the untruncated graph could dominate them).
    pub boundary_suspect: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubeSeniorityAnalysis {
    pub entries: Vec<CubeSeniority>,
    pub m_exponent: f64,
    pub p: f64,
    pub r_guard: u32,
}

impl CubeSeniorityAnalysis {
    pub fn senior_cubes(&self) -> impl Iterator<Item = &CubeSeniority> {
        self.entries.iter().filter(|e| e.senior)
    }
}

/// ν(Q) = D_μ(3Q)^p μ(3Q) over the populated cubes, in table order.
pub fn cube_nu(table: &DensityTable, p: f64) -> Vec<(CubeAddress, f64)> {
    table
        .iter()
        .map(|(q, mass, density)| (q, density.powf(p) * mass))
        .collect()
}

/// Senior cubes for ν(Q) = D(3Q)^p μ(3Q).
///
/// Candidates are scanned in decreasing ν with two prunes: a candidate
/// whose ν cannot strictly beat the running best even at distance 0 stops
/// the scan, and the level gap |k−k'| (a distance lower bound) skips
/// candidates cheaply before the exact distance is computed. Ties keep
/// the incumbent, so every cube whose own ν attains the max is its own
/// maximizer.
pub fn senior_cubes(
    table: &DensityTable,
    p: f64,
    m_exponent: f64,
    r_guard: u32,
) -> CubeSeniorityAnalysis {
    let nu = cube_nu(table, p);
    let lattice = &table.lattice;
    let decay = 2f64.powf(-m_exponent);
    // scan order: ν descending, table order within ties
    let mut order: Vec<usize> = (0..nu.len()).collect();
    order.sort_by(|&a, &b| nu[b].1.partial_cmp(&nu[a].1).unwrap().then(a.cmp(&b)));

    let rows: Vec<(usize, u64)> = (0..nu.len())
        .into_par_iter()
        .map(|i| {
            let (qi, nui) = &nu[i];
            let mut best_val = *nui;
            let mut best = (i, 0u64);
            for &j in &order {
                let (qj, nuj) = &nu[j];
                if *nuj <= best_val {
                    break; // attenuation can only shrink the candidate
                }
                if j == i {
                    continue;
                }
                let level_gap = qi.level.abs_diff(qj.level);
                if *nuj * decay.powi(level_gap as i32) <= best_val {
                    continue;
                }
                let d = lattice.graph_distance_exact(qi, qj);
                let cand = *nuj * decay.powi(d as i32);
                if cand > best_val {
                    best_val = cand;
                    best = (j, d);
                }
            }
            best
        })
        .collect();

    let (k_min, k_max) = lattice.level_window();
    let entries: Vec<CubeSeniority> = nu
        .iter()
        .zip(&rows)
        .enumerate()
        .map(|(i, ((q, v), &(maximizer, dist)))| {
            let senior = maximizer == i;
            let boundary_gap = (q.level - k_min).min(k_max - q.level).max(0) as u32;
            CubeSeniority {
                cube: q.clone(),
                nu: *v,
                maximizer,
                maximizer_distance: dist,
                senior,
                boundary_suspect: senior && boundary_gap < r_guard,
            }
        })
        .collect();
    CubeSeniorityAnalysis {
        entries,
        m_exponent,
        p,
        r_guard,
    }
}

/// ε-regular cubes among the populated cubes: Q passes when every
/// populated Q' with d(Q,Q') ≤ r_graph satisfies
/// D(3Q') ≤ 2^{ε·d(Q,Q')}D(3Q). Unpopulated cubes have zero density and
/// can never violate; populated cubes all have D(3Q) > 0.
pub fn epsilon_regular_cubes(
    table: &DensityTable,
    epsilon: f64,
    r_graph: u64,
) -> Result<Vec<CubeAddress>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let cubes: Vec<(CubeAddress, f64)> = table.iter().map(|(q, _, d)| (q, d)).collect();
    let lattice = &table.lattice;
    let growth = 2f64.powf(epsilon);
    let regular: Vec<CubeAddress> = cubes
        .par_iter()
        .filter_map(|(q, dq)| {
            for (q2, d2) in &cubes {
                let level_gap = q2.level.abs_diff(q.level) as u64;
                if level_gap > r_graph {
                    continue;
                }
                // the level gap lower-bounds the distance, so a candidate
                // already inside the growth envelope there can never
                // violate (same float comparison as the final test)
                if *d2 <= growth.powi(level_gap as i32) * dq * (1.0 + 1e-12) {
                    continue;
                }
                let d = lattice.graph_distance_exact(q, q2);
                if d > r_graph {
                    continue;
                }
                if *d2 > growth.powi(d as i32) * dq * (1.0 + 1e-12) {
                    return None;
                }
            }
            Some(q.clone())
        })
        .collect();
    let mut regular = regular;
    regular.sort();
    Ok(regular)
}

/// Full §-style chain verdict: seniors of ν = D^p μ(3Q) are
/// (M+s)/(p+1)-regular, and they dominate the total ν mass within the
/// geometric-series constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainReport {
    pub m_exponent: f64,
    pub p: f64,
    pub epsilon: f64,
    pub r_graph: u64,
    pub senior_count: usize,
    pub boundary_suspect_count: usize,
    /// Senior cubes that failed the (M+s)/(p+1)-regularity test (must be
    /// empty).
    pub regularity_violations: Vec<CubeAddress>,
    pub total_nu: f64,
    pub senior_nu: f64,
    pub domination_ratio: f64,
    /// 1/(1 − 2^{-M}(2^d+2d+1)).
    pub series_bound: f64,
    pub subordination_violations: usize,
    pub vacuous: bool,
}

pub fn senior_regular_chain_check(
    table: &DensityTable,
    p: f64,
    m_exponent: f64,
    r_graph: u64,
    r_guard: u32,
) -> Result<ChainReport> {
    let dim = table.lattice.dim;
    let s = table.s;
    let epsilon = (m_exponent + s) / (p + 1.0);
    let degree = cube_degree_bound(dim) as f64;
    let decay = 2f64.powf(-m_exponent);
    let series_bound = if decay * degree < 1.0 {
        1.0 / (1.0 - decay * degree)
    } else {
        f64::INFINITY
    };
    if table.is_empty() {
        return Ok(ChainReport {
            m_exponent,
            p,
            epsilon,
            r_graph,
            senior_count: 0,
            boundary_suspect_count: 0,
            regularity_violations: Vec::new(),
            total_nu: 0.0,
            senior_nu: 0.0,
            domination_ratio: 1.0,
            series_bound,
            subordination_violations: 0,
            vacuous: true,
        })
    }
    let analysis = senior_cubes(table, p, m_exponent, r_guard);
    let regular = epsilon_regular_cubes(table, epsilon, r_graph)?;
    let regular_set: std::collections::BTreeSet<&CubeAddress> = regular.iter().collect();
    let mut regularity_violations = Vec::new();
    let mut senior_nu = NeumaierSum::new();
    let mut total_nu = NeumaierSum::new();
    let mut subordination_violations = 0;
    for e in &analysis.entries {
        total_nu.add(e.nu);
        if e.senior {
            senior_nu.add(e.nu);
            if !regular_set.contains(&e.cube) {
                regularity_violations.push(e.cube.clone());
            }
        }
        let star = &analysis.entries[e.maximizer];
        let bound = star.nu * decay.powi(e.maximizer_distance as i32);
        if e.nu > bound * (1.0 + 1e-12) {
            subordination_violations += 1;
        }
    }
    let total_nu = total_nu.value();
    let senior_nu = senior_nu.value();
    let domination_ratio = if total_nu == 0.0 {
        1.0
    } else {
        total_nu / senior_nu
    };
    Ok(ChainReport {
        m_exponent,
        p,
        epsilon,
        r_graph,
        senior_count: analysis.senior_cubes().count(),
        boundary_suspect_count: analysis.entries.iter().filter(|e| e.boundary_suspect).count(),
        regularity_violations,
        total_nu,
        senior_nu,
        domination_ratio,
        series_bound,
        subordination_violations,
        vacuous: false,
    })
}

/// CSV export of a seniority analysis: cube address, ν, maximizer pointer.
pub fn seniority_csv(analysis: &CubeSeniorityAnalysis) -> String {
    let mut out = String::from("level,coords,nu,senior,maximizer_level,maximizer_coords,distance,boundary_suspect\n");
    for e in &analysis.entries {
        let star = &analysis.entries[e.maximizer];
        out.push_str(&format!(
            "{},{:?},{:.17e},{},{},{:?},{},{}\n",
            e.cube.level,
            e.cube.coords,
            e.nu,
            e.senior,
            star.cube.level,
            star.cube.coords,
            e.maximizer_distance,
            e.boundary_suspect,
        ));
    }
    out.replace(['[', ']'], "\"")
}
