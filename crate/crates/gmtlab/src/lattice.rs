//! Dyadic cube addressing over a level window, the cube graph, and
//! per-cube densities.
//!
//! Cubes are half-open boxes `offset + 2^k·(coords + [0,1)^d)` addressed by
//! integer level and coordinates. The graph joins each cube to its children,
//! its parent, and the 2d face-adjacent cubes of the same side length, so
//! the vertex degree is at most 2^d + 2d + 1. The lattice is conceptually
//! bi-infinite; all quantified statements are truncated to the level window
//! and report it.

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::numeric::NeumaierSum;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_LATTICE_ID: AtomicU64 = AtomicU64::new(1);

/// Address of one dyadic cube: side length 2^level, lower corner at
/// `offset + 2^level · coords`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeAddress {
    pub level: i32,
    pub coords: Vec<i64>,
    pub lattice_id: u64,
}

impl CubeAddress {
    pub fn parent(&self) -> CubeAddress {
        CubeAddress {
            level: self.level + 1,
            coords: self.coords.iter().map(|c| c.div_euclid(2)).collect(),
            lattice_id: self.lattice_id,
        }
    }

    /// Ancestor at `level >= self.level`.
    pub fn ancestor(&self, level: i32) -> CubeAddress {
        assert!(level >= self.level);
        let shift = (level - self.level) as u32;
        CubeAddress {
            level,
            coords: self
                .coords
                .iter()
                .map(|c| c.div_euclid(1i64 << shift))
                .collect(),
            lattice_id: self.lattice_id,
        }
    }

    /// Whether `self` is contained in `other` (dyadic inclusion).
    pub fn is_contained_in(&self, other: &CubeAddress) -> bool {
        self.lattice_id == other.lattice_id
            && self.level <= other.level
            && self.ancestor(other.level).coords == other.coords
    }

    pub fn side(&self) -> f64 {
        2f64.powi(self.level)
    }
}

/// A translated dyadic lattice restricted to levels `k_min..=k_max`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicLattice {
    pub dim: usize,
    pub offset: Vec<f64>,
    pub k_min: i32,
    pub k_max: i32,
    id: u64,
}

impl DyadicLattice {
    pub fn new(dim: usize, offset: Vec<f64>, k_min: i32, k_max: i32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        if offset.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: offset.len(),
            });
        }
        if k_min > k_max {
            return Err(Error::InvalidParameter(format!(
                "empty level window [{k_min}, {k_max}]"
            )));
        }
        Ok(Self {
            dim,
            offset,
            k_min,
            k_max,
            id: NEXT_LATTICE_ID.fetch_add(1, Ordering::Relaxed),
        })
    }

    /// Window fitted to a measure: the top level covers the diameter, the
    /// bottom level tracks the minimum spacing, clamped to `max_levels`.
    /// A nonzero `jitter` translates the lattice to keep atoms off dyadic
    /// faces.
    pub fn fit(mu: &DiscreteMeasure, max_levels: u32, jitter: f64) -> Result<Self> {
        if mu.is_empty() {
            return Self::new(mu.dim(), vec![jitter; mu.dim()], 0, 0);
        }
        let diam = mu.diameter().max(f64::MIN_POSITIVE);
        let k_max = diam.log2().ceil() as i32 + 1;
        let k_min = match mu.min_spacing() {
            Some(h) if h > 0.0 => (h.log2().floor() as i32).min(k_max),
            _ => k_max,
        };
        let k_min = k_min.max(k_max - (max_levels as i32 - 1));
        Self::new(mu.dim(), vec![jitter; mu.dim()], k_min, k_max)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn level_window(&self) -> (i32, i32) {
        (self.k_min, self.k_max)
    }

    pub fn contains_level(&self, k: i32) -> bool {
        (self.k_min..=self.k_max).contains(&k)
    }

    /// The unique level-k cube whose half-open box contains `x` (points on
    /// dyadic faces land in the upper cube, by lower-inclusiveness).
    pub fn cube_of_point(&self, x: &[f64], level: i32) -> Result<CubeAddress> {
        if !self.contains_level(level) {
            return Err(Error::InvalidParameter(format!(
                "level {level} outside window [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let side = 2f64.powi(level);
        let coords = x
            .iter()
            .zip(&self.offset)
            .map(|(xi, oi)| ((xi - oi) / side).floor() as i64)
            .collect();
        Ok(CubeAddress {
            level,
            coords,
            lattice_id: self.id,
        })
    }

    pub fn center(&self, q: &CubeAddress) -> Vec<f64> {
        let side = q.side();
        q.coords
            .iter()
            .zip(&self.offset)
            .map(|(c, o)| o + side * (*c as f64 + 0.5))
            .collect()
    }

    /// Whether `x` lies in the open concentric triple 3Q.
    pub fn in_open_triple(&self, q: &CubeAddress, x: &[f64]) -> bool {
        let side = q.side();
        let half = 1.5 * side;
        self.center(q)
            .iter()
            .zip(x)
            .all(|(c, xi)| (xi - c).abs() < half)
    }

    /// Whether `x` lies in the closed triple 3̄Q.
    pub fn in_closed_triple(&self, q: &CubeAddress, x: &[f64]) -> bool {
        let side = q.side();
        let half = 1.5 * side;
        self.center(q)
            .iter()
            .zip(x)
            .all(|(c, xi)| (xi - c).abs() <= half)
    }

    /// Whether `x` lies in the half-open cube Q itself.
    pub fn in_cube(&self, q: &CubeAddress, x: &[f64]) -> bool {
        let side = q.side();
        q.coords
            .iter()
            .zip(&self.offset)
            .zip(x)
            .all(|((c, o), xi)| {
                let lo = o + side * *c as f64;
                (lo..lo + side).contains(xi)
            })
    }

    /// Graph neighbors within the window, in deterministic order: children
    /// (lexicographic corners), parent, then ±e_j face neighbors.
    pub fn graph_neighbors(&self, q: &CubeAddress) -> Vec<CubeAddress> {
        let mut out = Vec::with_capacity((1 << self.dim) + 2 * self.dim + 1);
        if q.level - 1 >= self.k_min {
            for corner in 0..(1u32 << self.dim) {
                let coords = q
                    .coords
                    .iter()
                    .enumerate()
                    .map(|(axis, c)| 2 * c + (corner >> axis & 1) as i64)
                    .collect();
                out.push(CubeAddress {
                    level: q.level - 1,
                    coords,
                    lattice_id: q.lattice_id,
                });
            }
        }
        if q.level + 1 <= self.k_max {
            out.push(q.parent());
        }
        for axis in 0..self.dim {
            for step in [1i64, -1] {
                let mut coords = q.coords.clone();
                coords[axis] += step;
                out.push(CubeAddress {
                    level: q.level,
                    coords,
                    lattice_id: q.lattice_id,
                });
            }
        }
        out
    }

    /// Breadth-first graph distance in the window graph, truncated at
    /// `cutoff`; `None` when the cutoff is exceeded.
    pub fn graph_distance(&self, a: &CubeAddress, b: &CubeAddress, cutoff: u32) -> Option<u32> {
        if a == b {
            return Some(0);
        }
        let mut seen: HashSet<CubeAddress> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(a.clone());
        queue.push_back((a.clone(), 0u32));
        while let Some((q, d)) = queue.pop_front() {
            if d == cutoff {
                continue;
            }
            for nb in self.graph_neighbors(&q) {
                if nb == *b {
                    return Some(d + 1);
                }
                if seen.insert(nb.clone()) {
                    queue.push_back((nb, d + 1));
                }
            }
        }
        None
    }

    /// Exact graph distance via the canonical up-across-down path shape:
    /// d(Q,Q') = min over peak levels k of the vertical cost plus the L1
    /// distance of the level-k ancestors. Agrees with BFS (property-tested)
    /// and runs in O(d · window height).
    pub fn graph_distance_exact(&self, a: &CubeAddress, b: &CubeAddress) -> u64 {
        let lo = a.level.max(b.level);
        let mut best = u64::MAX;
        let mut pa = a.ancestor(lo);
        let mut pb = b.ancestor(lo);
        let mut k = lo;
        loop {
            let vertical = (k - a.level) as u64 + (k - b.level) as u64;
            if vertical >= best {
                break;
            }
            let horizontal: u64 = pa
                .coords
                .iter()
                .zip(&pb.coords)
                .map(|(x, y)| x.abs_diff(*y))
                .sum();
            best = best.min(vertical + horizontal);
            if k == self.k_max {
                break;
            }
            k += 1;
            pa = pa.parent();
            pb = pb.parent();
        }
        best
    }

    /// μ(3Q) and the density μ(3Q)/ℓ(Q)^s.
    pub fn density(&self, mu: &DiscreteMeasure, q: &CubeAddress, s: f64) -> (f64, f64) {
        let side = q.side();
        let center = self.center(q);
        // index prefilter with the circumscribed ball, then the exact box test
        let r = 1.5 * side * (self.dim as f64).sqrt() + side * 1e-9;
        let mut acc = NeumaierSum::new();
        for i in mu.index().query_ball(&center, r) {
            if self.in_open_triple(q, mu.point(i)) {
                acc.add(mu.weight(i));
            }
        }
        let mass = acc.value();
        (mass, mass / side.powf(s))
    }
}

/// All cubes in the window whose open triple carries mass, with masses and
/// densities.
#[derive(Clone, Debug)]
pub struct DensityTable {
    pub lattice: DyadicLattice,
    pub s: f64,
    entries: BTreeMap<(i32, Vec<i64>), (f64, f64)>,
}

impl DensityTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, q: &CubeAddress) -> Option<(f64, f64)> {
        if q.lattice_id != self.lattice.id {
            return None;
        }
        self.entries.get(&(q.level, q.coords.clone())).copied()
    }

    /// Density with the table's convention; 0 for cubes not in the table.
    pub fn density(&self, q: &CubeAddress) -> f64 {
        self.get(q).map_or(0.0, |(_, d)| d)
    }

    pub fn iter(&self) -> impl Iterator<Item = (CubeAddress, f64, f64)> + '_ {
        let id = self.lattice.id;
        self.entries.iter().map(move |((level, coords), (m, d))| {
            (
                CubeAddress {
                    level: *level,
                    coords: coords.clone(),
                    lattice_id: id,
                },
                *m,
                *d,
            )
        })
    }

    pub fn cubes(&self) -> Vec<CubeAddress> {
        self.iter().map(|(q, _, _)| q).collect()
    }

    /// CSV export: `level,c0,...,c{d-1},mass_3q,density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level");
        for axis in 0..self.lattice.dim {
            out.push_str(&format!(",c{axis}"));
        }
        out.push_str(",mass_3q,density\n");
        for (q, m, d) in self.iter() {
            out.push_str(&q.level.to_string());
            for c in &q.coords {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push_str(&format!(",{m:.17e},{d:.17e}\n"));
        }
        out
    }
}

/// Builds the density table by point-to-cube bucketing followed by 3Q
/// aggregation over the 3^d cube neighborhood of each point's own cube.
pub fn populated_cubes(
    mu: &DiscreteMeasure,
    lattice: &DyadicLattice,
    s: f64,
    cube_cap: usize,
) -> Result<DensityTable> {
    let dim = lattice.dim;
    if mu.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: mu.dim(),
        });
    }
    let mut entries: BTreeMap<(i32, Vec<i64>), NeumaierSum> = BTreeMap::new();
    let mut stencil: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..dim {
        stencil = stencil
            .into_iter()
            .flat_map(|prefix| {
                [-1i64, 0, 1].into_iter().map(move |d| {
                    let mut v = prefix.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
    }
    for level in lattice.k_min..=lattice.k_max {
        for i in 0..mu.len() {
            let w = mu.weight(i);
            if w == 0.0 {
                continue;
            }
            let x = mu.point(i);
            let own = lattice.cube_of_point(x, level)?;
            for offsets in &stencil {
                let coords: Vec<i64> = own
                    .coords
                    .iter()
                    .zip(offsets)
                    .map(|(c, o)| c + o)
                    .collect();
                let q = CubeAddress {
                    level,
                    coords,
                    lattice_id: lattice.id,
                };
                if lattice.in_open_triple(&q, x) {
                    entries
                        .entry((q.level, q.coords))
                        .or_default()
                        .add(w);
                    if entries.len() > cube_cap {
                        return Err(Error::ResourceLimit(format!(
                            "density table exceeds {cube_cap} cubes; shrink the level window"
                        )));
                    }
                }
            }
        }
    }
    let entries = entries
        .into_iter()
        .filter_map(|((level, coords), acc)| {
            let mass = acc.value();
            if mass > 0.0 {
                let density = mass / 2f64.powi(level).powf(s);
                Some(((level, coords), (mass, density)))
            } else {
                None
            }
        })
        .collect();
    Ok(DensityTable {
        lattice: lattice.clone(),
        s,
        entries,
    })
}

/// Per-level lookup index over a density table's cubes, used by the graph
/// algorithms to enumerate populated cubes level by level.
pub struct LevelIndex {
    pub by_level: HashMap<i32, Vec<CubeAddress>>,
}

impl LevelIndex {
    pub fn build(table: &DensityTable) -> Self {
        let mut by_level: HashMap<i32, Vec<CubeAddress>> = HashMap::new();
        for (q, _, _) in table.iter() {
            by_level.entry(q.level).or_default().push(q);
        }
        Self { by_level }
    }
}
