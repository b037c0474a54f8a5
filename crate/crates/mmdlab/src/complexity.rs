//! Empirical Gaussian/Rademacher complexity, Rademacher chaos, and the
//! Lipschitz seminorm bounds that feed the concentration formulas.
//!
//! A class member g contributes the flattened vector vec(g(X)) ∈ ℝ^{nd};
//! the Gaussian complexity is E_Z sup_g |⟨Z, vec(g(X))⟩|/n over a standard
//! normal Z ∈ ℝ^{nd}, and the Rademacher version replaces Z with ±1 signs.
//! Coefficient streams are keyed by (seed, replicate) only, never by the
//! class, so enlarging a class with the same seed can only increase the
//! estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_classes::FiniteFunctionClass;
use crate::kernels::{Kernel, KernelConstants};
use crate::rng::{derived_rng, tags};
use crate::samples::SampleMatrix;
use crate::sampling::Sampler;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// A Monte-Carlo complexity estimate. `std_error` is zero on exact
/// (enumerated) paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub inner_replicates: usize,
    pub outer_replicates: usize,
    /// The master seed the estimate was drawn under (echoed verbatim on
    /// exact-enumeration paths, where it does not influence the value).
    pub seed: u64,
}

fn validate_class_values(class_values: &[SampleMatrix]) -> Result<(usize, usize)> {
    let first = class_values
        .first()
        .ok_or_else(|| Error::argument("complexity needs a non-empty class"))?;
    let shape = (first.n(), first.dim());
    for (i, m) in class_values.iter().enumerate() {
        if (m.n(), m.dim()) != shape {
            return Err(Error::argument(format!(
                "class value {i} has shape {}x{}, expected {}x{}",
                m.n(),
                m.dim(),
                shape.0,
                shape.1
            )));
        }
    }
    Ok(shape)
}

fn sup_abs_inner_product(coeffs: &[f64], class_values: &[SampleMatrix], n: usize) -> f64 {
    let mut best = 0.0f64;
    for member in class_values {
        let dot: f64 = coeffs
            .iter()
            .zip(member.as_flat())
            .map(|(c, s)| c * s)
            .sum();
        best = best.max(dot.abs());
    }
    best / n as f64
}

fn summarize(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Empirical Gaussian complexity of the set {vec(g(X))} ⊂ ℝ^{nd}:
/// the replicate average of sup_g |⟨Z, vec(g(X))⟩|/n.
pub fn empirical_gaussian_complexity(
    class_values: &[SampleMatrix],
    replicates: usize,
    seed: u64,
) -> Result<ComplexityEstimate> {
    let (n, d) = validate_class_values(class_values)?;
    if replicates == 0 {
        return Err(Error::argument("complexity needs replicates >= 1"));
    }
    let nd = n * d;
    let mut coeffs = vec![0.0; nd];
    let mut values = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let mut rng = derived_rng(seed, tags::GAUSSIAN_COEFF, r as u64);
        for c in coeffs.iter_mut() {
            *c = StandardNormal.sample(&mut rng);
        }
        values.push(sup_abs_inner_product(&coeffs, class_values, n));
    }
    let (mean, std_error) = summarize(&values);
    Ok(ComplexityEstimate {
        mean,
        std_error,
        inner_replicates: replicates,
        outer_replicates: 1,
        seed,
    })
}

/// Cutoff below which the Rademacher complexity enumerates all sign patterns.
pub const RADEMACHER_EXACT_CUTOFF: usize = 20;

/// Empirical Rademacher complexity. For nd ≤ 20 the expectation is computed
/// exactly over all 2^{nd} sign patterns (std_error 0); otherwise sampled.
pub fn empirical_rademacher_complexity(
    class_values: &[SampleMatrix],
    replicates: usize,
    seed: u64,
) -> Result<ComplexityEstimate> {
    let (n, d) = validate_class_values(class_values)?;
    if replicates == 0 {
        return Err(Error::argument("complexity needs replicates >= 1"));
    }
    if n * d <= RADEMACHER_EXACT_CUTOFF {
        let mut est = empirical_rademacher_complexity_exact(class_values)?;
        est.seed = seed;
        return Ok(est);
    }
    empirical_rademacher_complexity_sampled(class_values, replicates, seed)
}

/// Exact Rademacher complexity by enumerating all 2^{nd} sign patterns.
/// Only feasible for nd ≤ 20 or so.
pub fn empirical_rademacher_complexity_exact(
    class_values: &[SampleMatrix],
) -> Result<ComplexityEstimate> {
    let (n, d) = validate_class_values(class_values)?;
    let nd = n * d;
    if nd > 30 {
        return Err(Error::argument(format!(
            "exact enumeration over 2^{nd} patterns is infeasible"
        )));
    }
    let patterns = 1usize << nd;
    let mut total = 0.0f64;
    let mut coeffs = vec![0.0f64; nd];
    for mask in 0..patterns {
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
        }
        total += sup_abs_inner_product(&coeffs, class_values, n);
    }
    Ok(ComplexityEstimate {
        mean: total / patterns as f64,
        std_error: 0.0,
        inner_replicates: patterns,
        outer_replicates: 1,
        seed: 0,
    })
}

/// Monte-Carlo Rademacher complexity, regardless of nd.
pub fn empirical_rademacher_complexity_sampled(
    class_values: &[SampleMatrix],
    replicates: usize,
    seed: u64,
) -> Result<ComplexityEstimate> {
    let (n, d) = validate_class_values(class_values)?;
    if replicates == 0 {
        return Err(Error::argument("complexity needs replicates >= 1"));
    }
    let nd = n * d;
    let mut coeffs = vec![0.0; nd];
    let mut values = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let mut rng = derived_rng(seed, tags::RADEMACHER_COEFF, r as u64);
        for c in coeffs.iter_mut() {
            *c = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        values.push(sup_abs_inner_product(&coeffs, class_values, n));
    }
    let (mean, std_error) = summarize(&values);
    Ok(ComplexityEstimate {
        mean,
        std_error,
        inner_replicates: replicates,
        outer_replicates: 1,
        seed,
    })
}

/// Rademacher chaos of {k(f(X_i), f(X_j)) | f in class}: the replicate
/// average of sup_f |(2/(n(n-1))) Σ_{i<j} ρ_i ρ_j k∘f(X_i, X_j)|.
pub fn empirical_rademacher_chaos(
    kernel: &Kernel,
    feature_class: &FiniteFunctionClass,
    x: &SampleMatrix,
    replicates: usize,
    seed: u64,
) -> Result<ComplexityEstimate> {
    let n = x.n();
    if n < 2 {
        return Err(Error::argument("rademacher chaos needs n >= 2"));
    }
    if replicates == 0 {
        return Err(Error::argument("complexity needs replicates >= 1"));
    }
    let grams: Result<Vec<nalgebra::DMatrix<f64>>> = feature_class
        .members()
        .iter()
        .map(|f| kernel.gram_matrix(&f.apply(x)?))
        .collect();
    let grams = grams?;
    let denom = n as f64 * (n as f64 - 1.0);
    let mut signs = vec![0.0f64; n];
    let mut values = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let mut rng = derived_rng(seed, tags::CHAOS_COEFF, r as u64);
        for s in signs.iter_mut() {
            *s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let mut best = 0.0f64;
        for gram in &grams {
            let mut off_diag = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off_diag += signs[i] * signs[j] * gram[(i, j)];
                }
            }
            best = best.max((2.0 * off_diag).abs() / denom);
        }
        values.push(best);
    }
    let (mean, std_error) = summarize(&values);
    Ok(ComplexityEstimate {
        mean,
        std_error,
        inner_replicates: replicates,
        outer_replicates: 1,
        seed,
    })
}

/// E_X[G_n(class(X))]: an outer Monte-Carlo average over fresh n-row draws
/// of the empirical Gaussian complexity.
///
/// The inner coefficient streams are shared across outer draws (they are
/// keyed by (seed, inner replicate) exactly as in
/// [`empirical_gaussian_complexity`]), so the spread of the per-draw means
/// isolates the data variation: a point-mass sampler yields a between-draw
/// variance component of exactly zero. The combined standard error adds the
/// between component (divided by the outer count) and the average inner
/// variance.
pub fn expected_complexity(
    class: &FiniteFunctionClass,
    sampler: &dyn Sampler,
    n: usize,
    outer_replicates: usize,
    inner_replicates: usize,
    seed: u64,
) -> Result<ComplexityEstimate> {
    if n == 0 {
        return Err(Error::argument("expected complexity needs n >= 1"));
    }
    if outer_replicates == 0 || inner_replicates == 0 {
        return Err(Error::argument("replicate counts must be >= 1"));
    }
    if sampler.dim() != class.input_dim() {
        return Err(Error::argument(format!(
            "sampler dim {} does not match class input dim {}",
            sampler.dim(),
            class.input_dim()
        )));
    }
    let nd = n * class.output_dim();
    let mut coeff_rows = Vec::with_capacity(inner_replicates);
    for r in 0..inner_replicates {
        let mut rng = derived_rng(seed, tags::GAUSSIAN_COEFF, r as u64);
        let mut row = vec![0.0; nd];
        for c in row.iter_mut() {
            *c = StandardNormal.sample(&mut rng);
        }
        coeff_rows.push(row);
    }
    let mut outer_means = Vec::with_capacity(outer_replicates);
    let mut within_sum = 0.0;
    for o in 0..outer_replicates {
        let mut rng = derived_rng(seed, tags::OUTER_SAMPLE, o as u64);
        let x = sampler.sample_matrix(n, &mut rng);
        let class_values = class.apply_all(&x)?;
        let inner: Vec<f64> = coeff_rows
            .iter()
            .map(|z| sup_abs_inner_product(z, &class_values, n))
            .collect();
        let (mean, se) = summarize(&inner);
        outer_means.push(mean);
        within_sum += se * se;
    }
    let r_outer = outer_replicates as f64;
    let mean = outer_means.iter().sum::<f64>() / r_outer;
    let between = if outer_replicates > 1 {
        outer_means
            .iter()
            .map(|m| (m - mean) * (m - mean))
            .sum::<f64>()
            / (r_outer - 1.0)
    } else {
        0.0
    };
    let within = within_sum / r_outer;
    Ok(ComplexityEstimate {
        mean,
        std_error: (between / r_outer + within).sqrt(),
        inner_replicates,
        outer_replicates,
        seed,
    })
}

/// Lipschitz seminorm bounds (M_Lip, J_Lip, M) of a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormBounds {
    pub m_lip: f64,
    pub j_lip: f64,
    pub m_bound: f64,
}

/// Seminorms of an order-m U-statistic inherited from its kernel function:
/// M_Lip ≤ L·m/n, J_Lip ≤ L·m²/n, M ≤ B·m/n.
pub fn u_statistic_seminorm_bounds(
    kernel_lipschitz: f64,
    kernel_bound: f64,
    order: usize,
    n: usize,
) -> Result<SeminormBounds> {
    if order == 0 {
        return Err(Error::argument("u-statistic order must be >= 1"));
    }
    if order > n {
        return Err(Error::argument(format!(
            "u-statistic order {order} exceeds sample size {n}"
        )));
    }
    if kernel_lipschitz.is_nan()
        || kernel_lipschitz < 0.0
        || kernel_bound.is_nan()
        || kernel_bound < 0.0
    {
        return Err(Error::argument("seminorm inputs must be >= 0"));
    }
    let m = order as f64;
    let nf = n as f64;
    Ok(SeminormBounds {
        m_lip: kernel_lipschitz * m / nf,
        j_lip: kernel_lipschitz * m * m / nf,
        m_bound: kernel_bound * m / nf,
    })
}

/// Seminorms of the MMD kernel function h: M_Lip(h) ≤ √2·l and
/// M(h) ≤ 2·min{4ν, lb}. J_Lip mirrors M_Lip: it is the L fed to the
/// order-2 scaling lemma, which never bounds J_Lip(h) separately.
pub fn mmd_kernel_seminorm_bounds(constants: &KernelConstants) -> Result<SeminormBounds> {
    let min_term = constants.min_term();
    if !min_term.is_finite() {
        return Err(Error::config("min{4nu, lb} must be finite"));
    }
    let m_lip = std::f64::consts::SQRT_2 * constants.lipschitz();
    Ok(SeminormBounds {
        m_lip,
        j_lip: m_lip,
        m_bound: 2.0 * min_term,
    })
}

/// Empirical probe of the M_Lip(h) bound: the max over random
/// (z₁, z₁', z₂) of |h(z₁,z₂) − h(z₁',z₂)| / ‖z₁ − z₁'‖. A running max, so
/// it is monotone non-decreasing in `trials` for a fixed seed.
pub fn seminorm_probe(
    kernel: &Kernel,
    domain_sampler: &dyn Sampler,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::argument("probe needs trials >= 1"));
    }
    let d = domain_sampler.dim();
    kernel.check_point_dim(d)?;
    let mut x1 = vec![0.0; d];
    let mut y1 = vec![0.0; d];
    let mut x1b = vec![0.0; d];
    let mut y1b = vec![0.0; d];
    let mut x2 = vec![0.0; d];
    let mut y2 = vec![0.0; d];
    let mut max_ratio = 0.0f64;
    for t in 0..trials {
        let mut rng = derived_rng(seed, tags::PROBE, t as u64);
        let mut rejections = 0;
        loop {
            domain_sampler.fill(&mut rng, &mut x1);
            domain_sampler.fill(&mut rng, &mut y1);
            domain_sampler.fill(&mut rng, &mut x1b);
            domain_sampler.fill(&mut rng, &mut y1b);
            domain_sampler.fill(&mut rng, &mut x2);
            domain_sampler.fill(&mut rng, &mut y2);
            if x1 != x1b || y1 != y1b {
                break;
            }
            rejections += 1;
            if rejections >= 100 {
                return Err(Error::argument(
                    "domain sampler produced 100 consecutive degenerate draws",
                ));
            }
        }
        let dist = x1
            .iter()
            .zip(&x1b)
            .chain(y1.iter().zip(&y1b))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let h_a = kernel.eval_unchecked(&x1, &x2) + kernel.eval_unchecked(&y1, &y2)
            - kernel.eval_unchecked(&x1, &y2)
            - kernel.eval_unchecked(&y1, &x2);
        let h_b = kernel.eval_unchecked(&x1b, &x2) + kernel.eval_unchecked(&y1b, &y2)
            - kernel.eval_unchecked(&x1b, &y2)
            - kernel.eval_unchecked(&y1b, &x2);
        max_ratio = max_ratio.max((h_a - h_b).abs() / dist);
    }
    Ok(max_ratio)
}
