//! Calderón–Zygmund kernels and their δ-regularizations.
//!
//! A kernel here is an antisymmetric, (−s)-homogeneous map
//! K: R^d \ {0} → R^{d'} with |K(x)| ≤ |x|^{-s} and a Hölder-smooth
//! profile. The regularized kernel K_δ multiplies K by
//! (|x|/max(|x|,δ))^{s+α} and sets K_δ(0) = 0, which makes it a total
//! function bounded by δ^{-s}.

use crate::error::{Error, Result};
use crate::numeric::norm;
use std::fmt;
use std::sync::Arc;

/// Signature of a user-supplied kernel evaluator: writes K(x) into `out`.
pub type CustomEval = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum KernelVariant {
    /// K(x) = x / |x|^{s+1}, vector-valued with d' = d.
    Riesz,
    /// K(z) = z̄ / z² in C ≅ R² (d = 2, s = 1), returned as (Re, Im).
    PlanarConjugate,
    /// Arbitrary evaluator; the caller asserts conditions (i)–(iv).
    Custom(CustomEval),
}

impl fmt::Debug for KernelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Riesz => write!(f, "Riesz"),
            Self::PlanarConjugate => write!(f, "PlanarConjugate"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// An s-dimensional CZ kernel acting in R^dim with values in R^{codomain}.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    pub s: f64,
    pub dim: usize,
    /// Hölder order of x ↦ |x|^{s+α}K(x); 1 for the built-in variants.
    pub alpha: f64,
    pub variant: KernelVariant,
    codomain: usize,
}

impl KernelSpec {
    /// The s-Riesz transform kernel x/|x|^{s+1}.
    pub fn riesz(dim: usize, s: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        if !(s > 0.0 && s < dim as f64) {
            return Err(Error::InvalidParameter(format!(
                "need s in (0, d), got s={s}, d={dim}"
            )));
        }
        Ok(Self {
            s,
            dim,
            alpha: 1.0,
            variant: KernelVariant::Riesz,
            codomain: dim,
        })
    }

    /// The planar kernel z̄/z², the 1-dimensional CZO on R².
    pub fn planar_conjugate() -> Self {
        Self {
            s: 1.0,
            dim: 2,
            alpha: 1.0,
            variant: KernelVariant::PlanarConjugate,
            codomain: 2,
        }
    }

    pub fn custom(dim: usize, s: f64, alpha: f64, codomain: usize, eval: CustomEval) -> Result<Self> {
        if dim == 0 || codomain == 0 {
            return Err(Error::InvalidParameter("dimensions must be >= 1".into()));
        }
        if !(s > 0.0 && s < dim as f64) || !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(
                "need s in (0,d) and alpha in (0,1]".into(),
            ));
        }
        Ok(Self {
            s,
            dim,
            alpha,
            variant: KernelVariant::Custom(eval),
            codomain,
        })
    }

    pub fn codomain(&self) -> usize {
        self.codomain
    }

    /// K(x) for x ≠ 0. Errors at the origin, where the kernel is
    /// undefined; use [`KernelSpec::eval_regularized`] for a total
    /// function.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.codomain);
        let r2: f64 = x.iter().map(|c| c * c).sum();
        if r2 == 0.0 {
            return Err(Error::InvalidParameter(
                "kernel evaluated at the origin".into(),
            ));
        }
        match &self.variant {
            KernelVariant::Riesz => {
                let scale = r2.powf(-(self.s + 1.0) / 2.0);
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = xi * scale;
                }
            }
            KernelVariant::PlanarConjugate => {
                // z̄/z² = z̄³/|z|⁴
                let (a, b) = (x[0], -x[1]); // z̄ = a + ib
                let (re2, im2) = (a * a - b * b, 2.0 * a * b);
                let (re3, im3) = (re2 * a - im2 * b, re2 * b + im2 * a);
                let inv = 1.0 / (r2 * r2);
                out[0] = re3 * inv;
                out[1] = im3 * inv;
            }
            KernelVariant::Custom(f) => f(x, out),
        }
        Ok(())
    }

    /// Convenience allocation form of [`KernelSpec::eval`].
    pub fn eval_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.codomain];
        self.eval(x, &mut out)?;
        Ok(out)
    }

    /// K_δ(x): equals K(x) for |x| ≥ δ, tapers by (|x|/δ)^{s+α} inside,
    /// and vanishes at the origin.
    pub fn eval_regularized(&self, delta: f64, x: &[f64], out: &mut [f64]) {
        debug_assert!(delta > 0.0);
        let r2: f64 = x.iter().map(|c| c * c).sum();
        if r2 == 0.0 {
            out.fill(0.0);
            return;
        }
        self.eval(x, out).expect("nonzero x");
        let r = r2.sqrt();
        if r < delta {
            let taper = (r / delta).powf(self.s + self.alpha);
            for o in out.iter_mut() {
                *o *= taper;
            }
        }
    }

    pub fn eval_regularized_vec(&self, delta: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.codomain];
        self.eval_regularized(delta, x, &mut out);
        out
    }

    /// Certified bound on the q-th directional derivative:
    /// sup{ |∂_u^q K(x)| : |u| = 1, |x| ≥ r }, when one is known.
    ///
    /// For the Riesz kernel, writing K = x·|x|^{-2λ} with 2λ = s+1 and
    /// expanding |x+τu|^{-2λ} in Gegenbauer polynomials gives
    /// |∂_u^q K(x)| ≤ q!·(C_q^λ(1) + C_{q-1}^λ(1)) / |x|^{s+q} with
    /// C_q^λ(1) = binom(q+s, q). The planar kernel admits the analogous
    /// complex-Leibniz bound q!(2q+1)/|x|^{1+q}. Custom kernels return
    /// `None` (callers must fall back to direct summation).
    pub fn derivative_bound(&self, q: u32, r: f64) -> Option<f64> {
        assert!(r > 0.0);
        match &self.variant {
            KernelVariant::Riesz => {
                let mut q_fact = 1.0_f64;
                for j in 1..=q {
                    q_fact *= j as f64;
                }
                let c = gegenbauer_peak(q, self.s) + if q > 0 { gegenbauer_peak(q - 1, self.s) } else { 0.0 };
                Some(q_fact * c / r.powf(self.s + q as f64))
            }
            KernelVariant::PlanarConjugate => {
                let mut q_fact = 1.0_f64;
                for j in 1..=q {
                    q_fact *= j as f64;
                }
                Some(q_fact * (2 * q + 1) as f64 / r.powf(1.0 + q as f64))
            }
            KernelVariant::Custom(_) => None,
        }
    }
}

/// C_q^λ(1) = binom(q + 2λ − 1, q) with 2λ = s + 1, i.e. ∏_{j≤q} (s+j)/j.
fn gegenbauer_peak(q: u32, s: f64) -> f64 {
    let mut acc = 1.0;
    for j in 1..=q {
        acc *= (s + j as f64) / j as f64;
    }
    acc
}

/// Samples the kernel conditions (i), (ii), (iv) and the regularized
/// bounds on `samples` random points; returns the worst slack observed.
/// Used by the test suites; tolerances live at the call sites.
pub struct KernelAudit {
    pub max_size_excess: f64,        // max |K(x)|·|x|^s − 1 over samples
    pub max_antisymmetry_defect: f64, // max |K(x) + K(−x)|
    pub max_homogeneity_rel: f64,    // max rel. error of K(λx) = λ^{-s}K(x)
    pub max_regularized_excess: f64, // max |K_δ(x)|·δ^s − 1
}

pub fn audit_kernel(kernel: &KernelSpec, samples: usize, seed: u64) -> KernelAudit {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut audit = KernelAudit {
        max_size_excess: f64::NEG_INFINITY,
        max_antisymmetry_defect: 0.0,
        max_homogeneity_rel: 0.0,
        max_regularized_excess: f64::NEG_INFINITY,
    };
    let d = kernel.dim;
    for _ in 0..samples {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let r = norm(&x);
        if r < 1e-9 {
            continue;
        }
        let neg: Vec<f64> = x.iter().map(|c| -c).collect();
        let kx = kernel.eval_vec(&x).unwrap();
        let kneg = kernel.eval_vec(&neg).unwrap();
        audit.max_size_excess = audit.max_size_excess.max(norm(&kx) * r.powf(kernel.s) - 1.0);
        let anti: Vec<f64> = kx.iter().zip(&kneg).map(|(a, b)| a + b).collect();
        audit.max_antisymmetry_defect = audit
            .max_antisymmetry_defect
            .max(norm(&anti) / norm(&kx).max(1e-300));
        let lambda = rng.gen_range(0.1..10.0);
        let scaled: Vec<f64> = x.iter().map(|c| c * lambda).collect();
        let kscaled = kernel.eval_vec(&scaled).unwrap();
        let expect = lambda.powf(-kernel.s);
        let homo: Vec<f64> = kscaled
            .iter()
            .zip(&kx)
            .map(|(a, b)| a - b * expect)
            .collect();
        audit.max_homogeneity_rel = audit
            .max_homogeneity_rel
            .max(norm(&homo) / (norm(&kx) * expect).max(1e-300));
        let delta = rng.gen_range(0.01..3.0);
        let kd = kernel.eval_regularized_vec(delta, &x);
        audit.max_regularized_excess = audit
            .max_regularized_excess
            .max(norm(&kd) * delta.powf(kernel.s) - 1.0);
    }
    audit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rel_diff;
    use proptest::prelude::*;
    use rand::Rng as _;
    use rand::SeedableRng as _;

    #[test]
    fn riesz_formula() {
        let k = KernelSpec::riesz(2, 1.0).unwrap();
        let v = k.eval_vec(&[3.0, 4.0]).unwrap();
        assert!((v[0] - 0.12).abs() < 1e-15);
        assert!((v[1] - 0.16).abs() < 1e-15);
    }

    #[test]
    fn planar_conjugate_at_i() {
        // z = i: z̄/z² = (−i)/(−1) = i
        let k = KernelSpec::planar_conjugate();
        let v = k.eval_vec(&[0.0, 1.0]).unwrap();
        assert!(v[0].abs() < 1e-15);
        assert!((v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn origin_is_an_error_but_regularized_is_zero() {
        let k = KernelSpec::riesz(2, 1.5).unwrap();
        assert!(k.eval_vec(&[0.0, 0.0]).is_err());
        assert_eq!(k.eval_regularized_vec(0.5, &[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn regularized_matches_both_branches() {
        // riesz d=1... the spec's worked example: d=1, s=0.5, α=1, δ=1:
        // at x=0.5 both routes give 0.5
        let k = KernelSpec::riesz(1, 0.5).unwrap();
        let v = k.eval_regularized_vec(1.0, &[0.5]);
        assert!((v[0] - 0.5).abs() < 1e-15);
        // outside the taper K_δ = K exactly
        let x = [0.7, -0.2];
        let k2 = KernelSpec::riesz(2, 1.3).unwrap();
        assert_eq!(k2.eval_regularized_vec(0.3, &x), k2.eval_vec(&x).unwrap());
    }

    #[test]
    fn audits_pass_for_builtin_kernels() {
        for kernel in [
            KernelSpec::riesz(1, 0.5).unwrap(),
            KernelSpec::riesz(2, 1.0).unwrap(),
            KernelSpec::riesz(2, 1.5).unwrap(),
            KernelSpec::riesz(3, 2.0).unwrap(),
            KernelSpec::planar_conjugate(),
        ] {
            let audit = audit_kernel(&kernel, 20_000, 11);
            assert!(audit.max_size_excess <= 1e-12, "{:?}", kernel.variant);
            assert!(audit.max_antisymmetry_defect <= 1e-14);
            assert!(audit.max_homogeneity_rel <= 1e-12);
            assert!(audit.max_regularized_excess <= 1e-12);
        }
    }

    #[test]
    fn derivative_bound_q0_is_size_bound() {
        let k = KernelSpec::riesz(2, 1.5).unwrap();
        let b = k.derivative_bound(0, 2.0).unwrap();
        assert!(rel_diff(b, 2f64.powf(-1.5)) < 1e-14);
    }

    /// Finite-difference audit of the certified first-derivative bound.
    #[test]
    fn derivative_bound_dominates_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for kernel in [KernelSpec::riesz(2, 1.4).unwrap(), KernelSpec::planar_conjugate()] {
            for _ in 0..500 {
                let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let r = norm(&x);
                if r < 0.3 {
                    continue;
                }
                let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let u = [theta.cos(), theta.sin()];
                let h = 1e-6;
                let xp = [x[0] + h * u[0], x[1] + h * u[1]];
                let xm = [x[0] - h * u[0], x[1] - h * u[1]];
                let kp = kernel.eval_vec(&xp).unwrap();
                let km = kernel.eval_vec(&xm).unwrap();
                let deriv: Vec<f64> = kp.iter().zip(&km).map(|(a, b)| (a - b) / (2.0 * h)).collect();
                let bound = kernel.derivative_bound(1, r - h).unwrap();
                assert!(
                    norm(&deriv) <= bound * (1.0 + 1e-4),
                    "|∂K| = {} > {}",
                    norm(&deriv),
                    bound
                );
            }
        }
    }

    proptest! {
        /// |K_δ(x)| is nonincreasing in δ for fixed x ≠ 0.
        #[test]
        fn regularization_monotone_in_delta(seed in 0u64..300) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let k = KernelSpec::riesz(2, rng.gen_range(0.3..1.9)).unwrap();
            let x = [rng.gen_range(-1.0..1.0f64).max(1e-3), rng.gen_range(-1.0..1.0)];
            let mut deltas: Vec<f64> = (0..8).map(|_| rng.gen_range(1e-3..4.0)).collect();
            deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let norms: Vec<f64> = deltas
                .iter()
                .map(|&d| norm(&k.eval_regularized_vec(d, &x)))
                .collect();
            prop_assert!(norms.windows(2).all(|w| w[0] >= w[1] - 1e-15));
        }
    }
}
