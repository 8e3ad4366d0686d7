//! The discrete regularized transform T_{μ,δ}, the reflectionless
//! bilinear form, and L²(μ) operator norms.
//!
//! The diagonal term always contributes 0 (K_δ(0) = 0 for the transform;
//! the pairing excludes i = j outright as the discrete surrogate for
//! diffuseness of μ — stacked atoms have no continuum analogue and would
//! make every pairing infinite).

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::measure::DiscreteMeasure;
use crate::numeric::{norm, NeumaierSum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How a transform was evaluated, with the certified accuracy when it was
/// accelerated.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum Accuracy {
    Direct,
    Tree {
        theta: f64,
        /// Certified bound on the absolute Euclidean error of any single
        /// output vector.
        max_abs_error: f64,
    },
}

/// Values of T_{μ,δ}(f) at the requested points, flattened row-major with
/// `codomain` components per point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransformResult {
    pub values: Vec<f64>,
    pub codomain: usize,
    pub delta: f64,
    pub accuracy: Accuracy,
}

impl TransformResult {
    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.codomain..(i + 1) * self.codomain]
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.codomain
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest Euclidean norm over the evaluation points.
    pub fn max_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| norm(self.value(i)))
            .fold(0.0, f64::max)
    }
}

/// T_{μ,δ}(f)(x_i) = Σ_j K_δ(x_i − x_j) f_j w_j at every support point,
/// by direct summation. Rows are independent, so the parallel result is
/// bit-identical to the sequential one.
pub fn apply_transform(
    mu: &DiscreteMeasure,
    kernel: &KernelSpec,
    delta: f64,
    f: &[f64],
) -> Result<TransformResult> {
    let eval: Vec<&[f64]> = mu.points_iter().collect();
    apply_transform_at(mu, kernel, delta, f, &eval)
}

/// Same sum evaluated at arbitrary points.
pub fn apply_transform_at(
    mu: &DiscreteMeasure,
    kernel: &KernelSpec,
    delta: f64,
    f: &[f64],
    eval_points: &[&[f64]],
) -> Result<TransformResult> {
    check_transform_args(mu, kernel, delta, f)?;
    let d = mu.dim();
    let dc = kernel.codomain();
    let rows: Vec<Vec<f64>> = eval_points
        .par_iter()
        .map(|x| {
            let mut acc = vec![NeumaierSum::new(); dc];
            let mut diff = vec![0.0; d];
            let mut kv = vec![0.0; dc];
            for j in 0..mu.len() {
                let fw = f[j] * mu.weight(j);
                if fw == 0.0 {
                    continue;
                }
                let y = mu.point(j);
                for (t, (a, b)) in diff.iter_mut().zip(x.iter().zip(y)) {
                    *t = a - b;
                }
                kernel.eval_regularized(delta, &diff, &mut kv);
                for (a, k) in acc.iter_mut().zip(&kv) {
                    a.add(k * fw);
                }
            }
            acc.iter().map(|a| a.value()).collect()
        })
        .collect();
    let mut values = Vec::with_capacity(rows.len() * dc);
    for row in rows {
        values.extend(row);
    }
    Ok(TransformResult {
        values,
        codomain: dc,
        delta,
        accuracy: Accuracy::Direct,
    })
}

pub(crate) fn check_transform_args(
    mu: &DiscreteMeasure,
    kernel: &KernelSpec,
    delta: f64,
    f: &[f64],
) -> Result<()> {
    if kernel.dim != mu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: kernel.dim,
        });
    }
    if f.len() != mu.len() {
        return Err(Error::InvalidParameter(format!(
            "f has {} values for {} support points",
            f.len(),
            mu.len()
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    Ok(())
}

/// ⟨T(fμ), φ⟩_μ = Σ_{i≠j} K(x_i − x_j) · ½[f_j φ_i − φ_j f_i] w_i w_j,
/// one component per kernel component. Uses the unregularized kernel; the
/// diagonal is excluded.
pub fn bilinear_pairing(
    mu: &DiscreteMeasure,
    kernel: &KernelSpec,
    f: &[f64],
    phi: &[f64],
) -> Result<Vec<f64>> {
    if kernel.dim != mu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: kernel.dim,
        });
    }
    if f.len() != mu.len() || phi.len() != mu.len() {
        return Err(Error::InvalidParameter(
            "f and phi must be valued on the support".into(),
        ));
    }
    let d = mu.dim();
    let dc = kernel.codomain();
    let n = mu.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let wi = mu.weight(i);
            let mut acc = vec![NeumaierSum::new(); dc];
            if wi == 0.0 {
                return acc.iter().map(|a| a.value()).collect();
            }
            let xi = mu.point(i);
            let mut diff = vec![0.0; d];
            let mut kv = vec![0.0; dc];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let h = 0.5 * (f[j] * phi[i] - phi[j] * f[i]) * mu.weight(j);
                if h == 0.0 {
                    continue;
                }
                let y = mu.point(j);
                for (t, (a, b)) in diff.iter_mut().zip(xi.iter().zip(y)) {
                    *t = a - b;
                }
                kernel
                    .eval(&diff, &mut kv)
                    .expect("distinct support points");
                for (a, k) in acc.iter_mut().zip(&kv) {
                    a.add(k * h);
                }
            }
            acc.iter().map(|a| a.value() * wi).collect()
        })
        .collect();
    let mut out = vec![NeumaierSum::new(); dc];
    for row in rows {
        for (a, v) in out.iter_mut().zip(row) {
            a.add(v);
        }
    }
    Ok(out.iter().map(|a| a.value()).collect())
}

/// A mean-zero test function materialized on the support, with its
/// certified Lipschitz bound. Builders live in [`crate::oscillation`].
#[derive(Clone, Debug)]
pub struct DictionaryFunction {
    pub id: String,
    pub values: Vec<f64>,
    pub lip_bound: f64,
}

/// Result of scanning a dictionary for the largest reflectionless defect.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectReport {
    /// max over the dictionary of |⟨T(fμ), 1⟩_μ| — a lower bound for the
    /// true supremum defect.
    pub max_defect: f64,
    pub argmax_id: String,
    pub per_function: Vec<(String, f64)>,
}

/// Max over a dictionary of mean-zero Lipschitz functions of the pairing
/// against the constant 1 on the support within B(0, R). Functions must
/// have μ-mean zero to 1e-12·total mass; their Lipschitz certificates are
/// the builders' responsibility.
pub fn reflectionless_defect(
    mu: &DiscreteMeasure,
    kernel: &KernelSpec,
    dictionary: &[DictionaryFunction],
    window_radius: f64,
) -> Result<DefectReport> {
    if dictionary.is_empty() {
        return Err(Error::EmptyInput("defect dictionary".into()));
    }
    let origin = vec![0.0; mu.dim()];
    let phi: Vec<f64> = (0..mu.len())
        .map(|i| {
            if crate::numeric::dist(mu.point(i), &origin) < window_radius {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let tol = 1e-12 * mu.total_mass().max(f64::MIN_POSITIVE);
    let mut per_function = Vec::with_capacity(dictionary.len());
    let mut best = f64::NEG_INFINITY;
    let mut argmax = String::new();
    for f in dictionary {
        if f.values.len() != mu.len() {
            return Err(Error::InvalidParameter(format!(
                "dictionary function {} not valued on the support",
                f.id
            )));
        }
        let mean: f64 = crate::numeric::csum(
            f.values
                .iter()
                .zip(mu.weights())
                .map(|(v, w)| v * w),
        );
        if mean.abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "dictionary function {} has μ-mean {mean:.3e} beyond tolerance {tol:.3e}",
                f.id
            )));
        }
        let pairing = bilinear_pairing(mu, kernel, &f.values, &phi)?;
        let defect = norm(&pairing);
        per_function.push((f.id.clone(), defect));
        if defect > best {
            best = defect;
            argmax = f.id.clone();
        }
    }
    Ok(DefectReport {
        max_defect: best,
        argmax_id: argmax,
        per_function,
    })
}

/// Same contract as [`reflectionless_defect`], with all dictionary
/// pairings accumulated in a single sweep over point pairs (the kernel is
/// evaluated once per pair). Combining the (i,j) and (j,i) terms by
/// antisymmetry, ⟨T(fμ),1⟩_μ = Σ_{i<j} K(x_i−x_j)(f_j − f_i) w_i w_j;
/// `window_radius` restricts the constant test function to B(0, R).
pub fn reflectionless_defect_batch(
    mu: &DiscreteMeasure,
    kernel: &KernelSpec,
    dictionary: &[DictionaryFunction],
    window_radius: f64,
) -> Result<DefectReport> {
    if dictionary.is_empty() {
        return Err(Error::EmptyInput("defect dictionary".into()));
    }
    let n = mu.len();
    let dc = kernel.codomain();
    let d = mu.dim();
    let m = dictionary.len();
    let origin = vec![0.0; d];
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            if crate::numeric::dist(mu.point(i), &origin) < window_radius {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let tol = 1e-12 * mu.total_mass().max(f64::MIN_POSITIVE);
    for f in dictionary {
        if f.values.len() != n {
            return Err(Error::InvalidParameter(format!(
                "dictionary function {} not valued on the support",
                f.id
            )));
        }
        let mean = crate::numeric::csum(f.values.iter().zip(mu.weights()).map(|(v, w)| v * w));
        if mean.abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "dictionary function {} has μ-mean {mean:.3e} beyond tolerance {tol:.3e}",
                f.id
            )));
        }
    }
    // rows[i] holds Σ_{j>i} over the dictionary × components
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![NeumaierSum::new(); m * dc];
            let wi = mu.weight(i);
            if wi == 0.0 {
                return acc.iter().map(|a| a.value()).collect();
            }
            let xi = mu.point(i);
            let mut diff = vec![0.0; d];
            let mut kv = vec![0.0; dc];
            for j in (i + 1)..n {
                let wj = mu.weight(j);
                if wj == 0.0 {
                    continue;
                }
                for (t, (a, b)) in diff.iter_mut().zip(xi.iter().zip(mu.point(j))) {
                    *t = a - b;
                }
                kernel.eval(&diff, &mut kv).expect("distinct points");
                let w = wi * wj;
                for (k, f) in dictionary.iter().enumerate() {
                    // the (i,j) and (j,i) halves combine to f_j φ_i − φ_j f_i
                    let h = (f.values[j] * phi[i] - phi[j] * f.values[i]) * w;
                    if h == 0.0 {
                        continue;
                    }
                    for c in 0..dc {
                        acc[k * dc + c].add(kv[c] * h);
                    }
                }
            }
            acc.iter().map(|a| a.value()).collect()
        })
        .collect();
    let mut totals = vec![NeumaierSum::new(); m * dc];
    for row in rows {
        for (t, v) in totals.iter_mut().zip(row) {
            t.add(v);
        }
    }
    let mut per_function = Vec::with_capacity(m);
    let mut best = f64::NEG_INFINITY;
    let mut argmax = String::new();
    for (k, f) in dictionary.iter().enumerate() {
        let comp: Vec<f64> = (0..dc).map(|c| totals[k * dc + c].value()).collect();
        let defect = norm(&comp);
        per_function.push((f.id.clone(), defect));
        if defect > best {
            best = defect;
            argmax = f.id.clone();
        }
    }
    Ok(DefectReport {
        max_defect: best,
        argmax_id: argmax,
        per_function,
    })
}

/// One power-iteration verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaNorm {
    pub delta: f64,
    pub norm: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorNormReport {
    pub per_delta: Vec<DeltaNorm>,
    /// sup over the δ grid — the discrete stand-in for sup_{δ>0}.
    pub sup: f64,
}

/// Default δ grid: geometric, from half the minimum spacing to the
/// diameter, ratio 2. Below the minimum spacing K_δ equals K on all
/// off-diagonal pairs, so the floor saturates the sup.
pub fn default_delta_grid(mu: &DiscreteMeasure) -> Vec<f64> {
    match (mu.min_spacing(), mu.diameter()) {
        (Some(h), diam) if diam > h => crate::numeric::geometric_grid(0.5 * h, diam, 2.0),
        (Some(h), _) => vec![0.5 * h],
        _ => vec![1.0],
    }
}

/// L²(μ)→L²(μ) operator norm of T_{μ,δ} for each δ, via power iteration
/// on T*T in the weighted inner product, matrix-free.
pub fn operator_norm(
    mu: &DiscreteMeasure,
    kernel: &KernelSpec,
    delta_grid: &[f64],
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<OperatorNormReport> {
    if mu.is_empty() {
        return Err(Error::EmptyInput("operator norm of the empty measure".into()));
    }
    if delta_grid.is_empty() {
        return Err(Error::EmptyInput("delta grid".into()));
    }
    let mut per_delta = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        per_delta.push(power_iteration(mu, kernel, delta, tol, max_iter, seed)?);
    }
    let sup = per_delta.iter().map(|d| d.norm).fold(0.0, f64::max);
    Ok(OperatorNormReport { per_delta, sup })
}

fn weighted_dot(mu: &DiscreteMeasure, a: &[f64], b: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for i in 0..mu.len() {
        acc.add(mu.weight(i) * a[i] * b[i]);
    }
    acc.value()
}

/// Applies S = T*T to a scalar function on the support.
fn apply_normal_operator(
    mu: &DiscreteMeasure,
    kernel: &KernelSpec,
    delta: f64,
    v: &[f64],
) -> Vec<f64> {
    let n = mu.len();
    let d = mu.dim();
    let dc = kernel.codomain();
    // u = T v, a d'-vector per point
    let u: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = mu.point(i);
            let mut acc = vec![NeumaierSum::new(); dc];
            let mut diff = vec![0.0; d];
            let mut kv = vec![0.0; dc];
            for j in 0..n {
                let fw = v[j] * mu.weight(j);
                if fw == 0.0 {
                    continue;
                }
                for (t, (a, b)) in diff.iter_mut().zip(xi.iter().zip(mu.point(j))) {
                    *t = a - b;
                }
                kernel.eval_regularized(delta, &diff, &mut kv);
                for (a, k) in acc.iter_mut().zip(&kv) {
                    a.add(k * fw);
                }
            }
            acc.iter().map(|a| a.value()).collect()
        })
        .collect();
    // w = T* u; by antisymmetry K(x_j - x_i) = -K(x_i - x_j)
    (0..n)
        .into_par_iter()
        .map(|j| {
            let xj = mu.point(j);
            let mut acc = NeumaierSum::new();
            let mut diff = vec![0.0; d];
            let mut kv = vec![0.0; dc];
            for i in 0..n {
                let wi = mu.weight(i);
                if wi == 0.0 {
                    continue;
                }
                for (t, (a, b)) in diff.iter_mut().zip(mu.point(i).iter().zip(xj)) {
                    *t = a - b;
                }
                kernel.eval_regularized(delta, &diff, &mut kv);
                let dot: f64 = kv.iter().zip(&u[i]).map(|(a, b)| a * b).sum();
                acc.add(wi * dot);
            }
            acc.value()
        })
        .collect()
}

fn power_iteration(
    mu: &DiscreteMeasure,
    kernel: &KernelSpec,
    delta: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<DeltaNorm> {
    use rand::prelude::*;
    let n = mu.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            if mu.weight(i) > 0.0 {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    let vnorm = weighted_dot(mu, &v, &v).sqrt();
    if vnorm == 0.0 {
        // all atoms weightless: the operator is trivial
        return Ok(DeltaNorm {
            delta,
            norm: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    v.iter_mut().for_each(|x| *x /= vnorm);
    let mut lambda_prev = f64::NAN;
    for it in 1..=max_iter {
        let sv = apply_normal_operator(mu, kernel, delta, &v);
        let lambda = weighted_dot(mu, &sv, &v); // Rayleigh quotient, ||v||_μ = 1
        let sv_norm = weighted_dot(mu, &sv, &sv).sqrt();
        if sv_norm == 0.0 {
            return Ok(DeltaNorm {
                delta,
                norm: 0.0,
                iterations: it,
                residual: 0.0,
            });
        }
        let residual = if lambda_prev.is_nan() {
            f64::INFINITY
        } else {
            (lambda - lambda_prev).abs() / lambda.abs().max(f64::MIN_POSITIVE)
        };
        if residual <= tol {
            return Ok(DeltaNorm {
                delta,
                norm: lambda.max(0.0).sqrt(),
                iterations: it,
                residual,
            });
        }
        lambda_prev = lambda;
        v = sv;
        v.iter_mut().for_each(|x| *x /= sv_norm);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: lambda_prev,
    })
}

/// Dense matrix B with B[(i,c), j] = √w_i · K_δ(x_i − x_j)_c · √w_j, whose
/// largest singular value equals the L²(μ) operator norm. Test suites pit
/// an SVD of this matrix against the power iteration.
pub fn dense_weighted_matrix(
    mu: &DiscreteMeasure,
    kernel: &KernelSpec,
    delta: f64,
) -> nalgebra::DMatrix<f64> {
    let n = mu.len();
    let d = mu.dim();
    let dc = kernel.codomain();
    let sqrt_w: Vec<f64> = mu.weights().iter().map(|w| w.sqrt()).collect();
    let mut m = nalgebra::DMatrix::zeros(n * dc, n);
    let mut diff = vec![0.0; d];
    let mut kv = vec![0.0; dc];
    for i in 0..n {
        for j in 0..n {
            for (t, (a, b)) in diff.iter_mut().zip(mu.point(i).iter().zip(mu.point(j))) {
                *t = a - b;
            }
            kernel.eval_regularized(delta, &diff, &mut kv);
            for c in 0..dc {
                m[(i * dc + c, j)] = sqrt_w[i] * kv[c] * sqrt_w[j];
            }
        }
    }
    m
}
