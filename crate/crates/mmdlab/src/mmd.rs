//! Squared-MMD estimators and population oracles.
//!
//! The U-statistic estimate averages
//!
//!   h(z_i, z_j) = k(x_i,x_j) + k(y_i,y_j) - k(x_i,y_j) - k(y_i,x_j)
//!
//! over ordered pairs i ≠ j and is unbiased (it may go negative). The
//! V-statistic averages over all index pairs including i = j, is biased
//! and non-negative, and differs from the U-statistic by at most
//! 8ν/(n-1). Population values come from a closed form for Gaussian
//! kernel + Gaussian data, or from a seeded Monte-Carlo oracle otherwise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::rng::{derived_rng, tags};
use crate::samples::SampleMatrix;
use crate::sampling::Sampler;

pub use crate::sampling::GaussianDistSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    UStatistic,
    VStatistic,
    ClosedForm,
    MonteCarlo,
}

/// One squared-MMD value with its provenance. `std_error` is populated by
/// Monte-Carlo estimators only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmdEstimate {
    pub value: f64,
    pub estimator: EstimatorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

/// The order-2 U-statistic kernel of the squared MMD:
/// k(x_i,x_j) + k(y_i,y_j) - k(x_i,y_j) - k(y_i,x_j).
pub fn h_term(kernel: &Kernel, xi: &[f64], yi: &[f64], xj: &[f64], yj: &[f64]) -> Result<f64> {
    let d = xi.len();
    if yi.len() != d || xj.len() != d || yj.len() != d {
        return Err(Error::argument("h term needs four vectors of equal dim"));
    }
    kernel.check_point_dim(d)?;
    Ok(h_term_unchecked(kernel, xi, yi, xj, yj))
}

fn h_term_unchecked(kernel: &Kernel, xi: &[f64], yi: &[f64], xj: &[f64], yj: &[f64]) -> f64 {
    kernel.eval_unchecked(xi, xj) + kernel.eval_unchecked(yi, yj)
        - kernel.eval_unchecked(xi, yj)
        - kernel.eval_unchecked(yi, xj)
}

/// Strip composite layers by mapping the samples through the feature chain,
/// so Gram assembly always runs on a base kernel.
fn lower_composite(
    kernel: &Kernel,
    x: SampleMatrix,
    y: SampleMatrix,
) -> Result<(&Kernel, SampleMatrix, SampleMatrix)> {
    let mut k = kernel;
    let mut x = x;
    let mut y = y;
    while let Kernel::Composite { base, feature } = k {
        x = feature.apply(&x)?;
        y = feature.apply(&y)?;
        k = base;
    }
    Ok((k, x, y))
}

fn check_paired_inputs(kernel: &Kernel, x: &SampleMatrix, y: &SampleMatrix, min_n: usize) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::argument(format!(
            "sample dims differ: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    if x.n() != y.n() {
        return Err(Error::argument(format!(
            "paired estimators need equal sample counts, got {} and {}",
            x.n(),
            y.n()
        )));
    }
    if x.n() < min_n {
        return Err(Error::argument(format!(
            "estimator needs at least {min_n} samples per side, got {}",
            x.n()
        )));
    }
    kernel.check_point_dim(x.dim())
}

/// Unbiased U-statistic estimate of the squared MMD:
/// (1/(n(n-1))) Σ_{i≠j} h(z_i, z_j). Needs n ≥ 2; may be negative.
pub fn mmd_u_squared(kernel: &Kernel, x: &SampleMatrix, y: &SampleMatrix) -> Result<MmdEstimate> {
    check_paired_inputs(kernel, x, y, 2)?;
    let (base, x, y) = lower_composite(kernel, x.clone(), y.clone())?;
    let kxx = base.gram_matrix(&x)?;
    let kyy = base.gram_matrix(&y)?;
    let kxy = base.cross_gram(&x, &y)?;
    let n = x.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += kxx[(i, j)] + kyy[(i, j)] - 2.0 * kxy[(i, j)];
            }
        }
    }
    Ok(MmdEstimate {
        value: sum / (n as f64 * (n as f64 - 1.0)),
        estimator: EstimatorKind::UStatistic,
        std_error: None,
    })
}

/// Biased V-statistic estimate:
/// (1/n²) Σ_{i,j} [k(x_i,x_j) + k(y_i,y_j) - 2k(x_i,y_j)] ≥ 0. Needs n ≥ 1.
pub fn mmd_v_squared(kernel: &Kernel, x: &SampleMatrix, y: &SampleMatrix) -> Result<MmdEstimate> {
    check_paired_inputs(kernel, x, y, 1)?;
    let (base, x, y) = lower_composite(kernel, x.clone(), y.clone())?;
    let kxx = base.gram_matrix(&x)?;
    let kyy = base.gram_matrix(&y)?;
    let kxy = base.cross_gram(&x, &y)?;
    let n = x.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            sum += kxx[(i, j)] + kyy[(i, j)] - 2.0 * kxy[(i, j)];
        }
    }
    Ok(MmdEstimate {
        // the V-statistic is a squared RKHS norm; clamp roundoff
        value: (sum / (n as f64 * n as f64)).max(0.0),
        estimator: EstimatorKind::VStatistic,
        std_error: None,
    })
}

/// E exp(-‖W‖²/s) for W ~ N(m, S):
/// det(I + 2S/s)^{-1/2} · exp(-mᵀ(sI + 2S)⁻¹m), computed in the log domain
/// through a Cholesky factor of sI + 2S (positive definite for s > 0, S PSD).
fn gaussian_expectation_term(
    s: f64,
    mean_diff: &nalgebra::DVector<f64>,
    cov_sum: &nalgebra::DMatrix<f64>,
) -> Result<f64> {
    let d = mean_diff.len();
    let m = nalgebra::DMatrix::identity(d, d) * s + cov_sum * 2.0;
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::internal("sI + 2S not positive definite"))?;
    let log_det: f64 = (0..d).map(|i| chol.l()[(i, i)].ln()).sum::<f64>() * 2.0;
    let solved = chol.solve(mean_diff);
    let quad = mean_diff.dot(&solved);
    Ok((0.5 * (d as f64 * s.ln() - log_det) - quad).exp())
}

/// Closed-form population squared MMD under a Gaussian kernel with
/// bandwidth `sigma` between Gaussian distributions P and Q:
///
///   γ² = T(P,P) + T(Q,Q) - 2T(P,Q),
///   T(a,b) = E exp(-‖W‖²/σ²), W ~ N(μ_a - μ_b, Σ_a + Σ_b).
pub fn population_mmd_squared_gaussian_closed_form(
    sigma: f64,
    p: &GaussianDistSpec,
    q: &GaussianDistSpec,
) -> Result<MmdEstimate> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::argument("closed form needs sigma > 0"));
    }
    if p.dim() != q.dim() {
        return Err(Error::argument("distributions must share a dimension"));
    }
    let s = sigma * sigma;
    let zero = nalgebra::DVector::zeros(p.dim());
    let t_pp = gaussian_expectation_term(s, &zero, &(p.cov() * 2.0))?;
    let t_qq = gaussian_expectation_term(s, &zero, &(q.cov() * 2.0))?;
    let t_pq = gaussian_expectation_term(s, &(p.mean() - q.mean()), &(p.cov() + q.cov()))?;
    let value = t_pp + t_qq - 2.0 * t_pq;
    if value < -1e-12 {
        return Err(Error::internal(format!(
            "closed-form population MMD came out {value:.3e} < -1e-12"
        )));
    }
    Ok(MmdEstimate {
        value: value.max(0.0),
        estimator: EstimatorKind::ClosedForm,
        std_error: None,
    })
}

const MC_PAIRS_PER_BATCH: usize = 8192;

/// Monte-Carlo population oracle. Draws m observations per side, pairs them
/// into ⌊m/2⌋ disjoint blocks, and averages the unbiased per-block h terms
/// (the linear-time form of the U-statistic: a complete pairwise sum at
/// oracle-scale m would cost O(m²)). `std_error` is the h-term sample
/// standard deviation over √⌊m/2⌋. The seed is split into fixed-size batch
/// substreams, so the result is bit-identical no matter how many workers run.
pub fn population_mmd_squared_monte_carlo(
    kernel: &Kernel,
    sampler_p: &dyn Sampler,
    sampler_q: &dyn Sampler,
    m: usize,
    seed: u64,
) -> Result<MmdEstimate> {
    if m < 2 {
        return Err(Error::argument("monte-carlo oracle needs m >= 2"));
    }
    if sampler_p.dim() != sampler_q.dim() {
        return Err(Error::argument("samplers must share a dimension"));
    }
    kernel.check_point_dim(sampler_p.dim())?;
    let pairs = m / 2;
    let batches = pairs.div_ceil(MC_PAIRS_PER_BATCH);
    let d = sampler_p.dim();
    let partials: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = derived_rng(seed, tags::MC_BATCH, b as u64);
            let count = MC_PAIRS_PER_BATCH.min(pairs - b * MC_PAIRS_PER_BATCH);
            let mut xi = vec![0.0; d];
            let mut xj = vec![0.0; d];
            let mut yi = vec![0.0; d];
            let mut yj = vec![0.0; d];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..count {
                sampler_p.fill(&mut rng, &mut xi);
                sampler_p.fill(&mut rng, &mut xj);
                sampler_q.fill(&mut rng, &mut yi);
                sampler_q.fill(&mut rng, &mut yj);
                let h = h_term_unchecked(kernel, &xi, &yi, &xj, &yj);
                sum += h;
                sum_sq += h * h;
            }
            (sum, sum_sq)
        })
        .collect();
    // sequential reduce in batch order keeps the float sums deterministic
    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let t = pairs as f64;
    let mean = sum / t;
    let std_error = if pairs > 1 {
        let var = ((sum_sq - sum * sum / t) / (t - 1.0)).max(0.0);
        Some((var / t).sqrt())
    } else {
        None
    };
    Ok(MmdEstimate {
        value: mean,
        estimator: EstimatorKind::MonteCarlo,
        std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_relative_eq;

    const EXP_NEG_1: f64 = 0.36787944117144233;
    // exp(-1) - exp(-9)
    const HAND_H: f64 = 0.36775603136735563;

    fn gauss1() -> Kernel {
        Kernel::gaussian(1.0).unwrap()
    }

    #[test]
    fn h_term_cancels_when_sides_coincide() {
        let k = gauss1();
        assert_eq!(
            h_term(&k, &[0.3], &[0.3], &[-1.2], &[-1.2]).unwrap(),
            0.0
        );
    }

    #[test]
    fn h_term_hand_expansion() {
        let k = gauss1();
        let h = h_term(&k, &[0.0], &[2.0], &[1.0], &[3.0]).unwrap();
        assert_relative_eq!(h, HAND_H, epsilon = 1e-12);
    }

    #[test]
    fn h_term_is_symmetric_in_the_pair() {
        let k = Kernel::laplacian(1.3).unwrap();
        let mut rng = rng_from_seed(5);
        use rand::Rng;
        for _ in 0..200 {
            let zi: [f64; 4] = rng.random();
            let zj: [f64; 4] = rng.random();
            let a = h_term(&k, &zi[..2], &zi[2..], &zj[..2], &zj[2..]).unwrap();
            let b = h_term(&k, &zj[..2], &zj[2..], &zi[..2], &zi[2..]).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn u_statistic_zero_on_identical_samples() {
        let k = gauss1();
        let x = SampleMatrix::from_column(&[0.1, 0.7, -1.3]).unwrap();
        let est = mmd_u_squared(&k, &x, &x).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.estimator, EstimatorKind::UStatistic);
    }

    #[test]
    fn u_statistic_n2_hand_example() {
        let k = gauss1();
        let x = SampleMatrix::from_column(&[0.0, 1.0]).unwrap();
        let y = SampleMatrix::from_column(&[2.0, 3.0]).unwrap();
        let est = mmd_u_squared(&k, &x, &y).unwrap();
        assert!((est.value - HAND_H).abs() <= 1e-9);
    }

    #[test]
    fn u_statistic_needs_two_samples_and_equal_n() {
        let k = gauss1();
        let one = SampleMatrix::from_column(&[0.0]).unwrap();
        let two = SampleMatrix::from_column(&[0.0, 1.0]).unwrap();
        assert!(mmd_u_squared(&k, &one, &one).is_err());
        assert!(mmd_u_squared(&k, &two, &one).is_err());
    }

    #[test]
    fn v_statistic_single_point_hand_example() {
        let k = gauss1();
        let x = SampleMatrix::from_column(&[0.0]).unwrap();
        let y = SampleMatrix::from_column(&[1.0]).unwrap();
        let est = mmd_v_squared(&k, &x, &y).unwrap();
        assert_relative_eq!(est.value, 2.0 - 2.0 * EXP_NEG_1, epsilon = 1e-12);
        assert_relative_eq!(est.value, 1.2642411176571153, epsilon = 1e-12);
    }

    #[test]
    fn v_statistic_zero_on_identical_samples() {
        let k = gauss1();
        let x = SampleMatrix::from_column(&[0.4, -0.9]).unwrap();
        assert_eq!(mmd_v_squared(&k, &x, &x).unwrap().value, 0.0);
    }

    #[test]
    fn u_v_gap_bounded_by_8nu_over_n_minus_1() {
        let k = gauss1();
        let nu = 1.0;
        let mut rng = rng_from_seed(77);
        use rand_distr::{Distribution, StandardNormal};
        for n in [2usize, 5, 20] {
            for _ in 0..50 {
                let draw = |rng: &mut _| {
                    SampleMatrix::from_column(
                        &(0..n)
                            .map(|_| StandardNormal.sample(rng))
                            .collect::<Vec<f64>>(),
                    )
                    .unwrap()
                };
                let x = draw(&mut rng);
                let y = draw(&mut rng);
                let u = mmd_u_squared(&k, &x, &y).unwrap().value;
                let v = mmd_v_squared(&k, &x, &y).unwrap().value;
                assert!((u - v).abs() <= 8.0 * nu / (n as f64 - 1.0) + 1e-10);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn u_v_gap_property(
            x in proptest::collection::vec(-3.0f64..3.0, 3..12),
            y in proptest::collection::vec(-3.0f64..3.0, 3..12),
            sigma in 0.3f64..3.0,
        ) {
            let n = x.len().min(y.len());
            let k = Kernel::gaussian(sigma).unwrap();
            let xm = SampleMatrix::from_column(&x[..n]).unwrap();
            let ym = SampleMatrix::from_column(&y[..n]).unwrap();
            let u = mmd_u_squared(&k, &xm, &ym).unwrap().value;
            let v = mmd_v_squared(&k, &xm, &ym).unwrap().value;
            proptest::prop_assert!((u - v).abs() <= 8.0 / (n as f64 - 1.0) + 1e-10);
            proptest::prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn swapping_sides_leaves_estimators_unchanged() {
        let k = Kernel::laplacian(0.8).unwrap();
        let x = SampleMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, -1.0], vec![0.3, 0.4]])
            .unwrap();
        let y = SampleMatrix::from_rows(vec![vec![2.0, 0.0], vec![-1.0, 1.5], vec![0.0, 0.0]])
            .unwrap();
        let u_xy = mmd_u_squared(&k, &x, &y).unwrap().value;
        let u_yx = mmd_u_squared(&k, &y, &x).unwrap().value;
        assert!((u_xy - u_yx).abs() <= 1e-12);
        let v_xy = mmd_v_squared(&k, &x, &y).unwrap().value;
        let v_yx = mmd_v_squared(&k, &y, &x).unwrap().value;
        assert!((v_xy - v_yx).abs() <= 1e-12);
    }

    #[test]
    fn composite_kernel_matches_premapped_evaluation() {
        let feature = crate::function_classes::FunctionMap::scaling(1, 2.0).unwrap();
        let k = gauss1().compose(feature.clone()).unwrap();
        let x = SampleMatrix::from_column(&[0.0, 0.5, 1.0]).unwrap();
        let y = SampleMatrix::from_column(&[0.2, -0.3, 0.9]).unwrap();
        let direct = mmd_u_squared(&k, &x, &y).unwrap().value;
        let mapped = mmd_u_squared(
            &gauss1(),
            &feature.apply(&x).unwrap(),
            &feature.apply(&y).unwrap(),
        )
        .unwrap()
        .value;
        assert!((direct - mapped).abs() <= 1e-12);
    }

    #[test]
    fn closed_form_zero_when_distributions_coincide() {
        let p = GaussianDistSpec::new(vec![0.3], vec![vec![1.7]]).unwrap();
        let est = population_mmd_squared_gaussian_closed_form(1.0, &p, &p).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.estimator, EstimatorKind::ClosedForm);
    }

    #[test]
    fn closed_form_hand_value_1d() {
        // sigma=1, P = N(0,1), Q = N(1,1): 2/sqrt(5) · (1 - exp(-1/5))
        let p = GaussianDistSpec::standard(1);
        let q = GaussianDistSpec::new(vec![1.0], vec![vec![1.0]]).unwrap();
        let est = population_mmd_squared_gaussian_closed_form(1.0, &p, &q).unwrap();
        let expected = 2.0 / 5.0f64.sqrt() * (1.0 - (-0.2f64).exp());
        assert_relative_eq!(est.value, expected, epsilon = 1e-14);
        assert_relative_eq!(est.value, 0.16213214333913084, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_2d_correlated_quadrature_value() {
        // frozen from two independent routes (exact matrix identity and
        // 40-point tensor Gauss-Hermite quadrature, agreeing to 13 digits)
        let p = GaussianDistSpec::new(
            vec![0.2, -0.1],
            vec![vec![1.5, 0.4], vec![0.4, 0.9]],
        )
        .unwrap();
        let q = GaussianDistSpec::new(
            vec![-0.3, 0.5],
            vec![vec![0.7, -0.2], vec![-0.2, 1.1]],
        )
        .unwrap();
        let est = population_mmd_squared_gaussian_closed_form(1.3, &p, &q).unwrap();
        assert_relative_eq!(est.value, 0.08610090016721882, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_rejects_bad_sigma() {
        let p = GaussianDistSpec::standard(1);
        assert!(population_mmd_squared_gaussian_closed_form(0.0, &p, &p).is_err());
        assert!(population_mmd_squared_gaussian_closed_form(-1.0, &p, &p).is_err());
    }

    #[test]
    fn monte_carlo_oracle_is_deterministic() {
        let k = gauss1();
        let p = GaussianDistSpec::standard(1);
        let q = GaussianDistSpec::new(vec![0.6], vec![vec![1.0]]).unwrap();
        let a = population_mmd_squared_monte_carlo(&k, &p, &q, 40_000, 9).unwrap();
        let b = population_mmd_squared_monte_carlo(&k, &p, &q, 40_000, 9).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.unwrap().to_bits(), b.std_error.unwrap().to_bits());
    }

    #[test]
    fn monte_carlo_oracle_matches_closed_form() {
        let k = gauss1();
        let p = GaussianDistSpec::standard(1);
        let q = GaussianDistSpec::new(vec![1.0], vec![vec![1.0]]).unwrap();
        let exact = population_mmd_squared_gaussian_closed_form(1.0, &p, &q)
            .unwrap()
            .value;
        let mc = population_mmd_squared_monte_carlo(&k, &p, &q, 400_000, 4).unwrap();
        let se = mc.std_error.unwrap();
        assert!(
            (mc.value - exact).abs() <= 3.0 * se,
            "mc {} vs exact {} (3se = {})",
            mc.value,
            exact,
            3.0 * se
        );
    }

    #[test]
    fn monte_carlo_oracle_centers_on_zero_for_equal_distributions() {
        let k = gauss1();
        let p = GaussianDistSpec::standard(2);
        let mc = population_mmd_squared_monte_carlo(&k, &p, &p, 200_000, 3).unwrap();
        assert!(mc.value.abs() <= 3.0 * mc.std_error.unwrap());
    }

    #[test]
    fn monte_carlo_oracle_rejects_tiny_m() {
        let k = gauss1();
        let p = GaussianDistSpec::standard(1);
        assert!(population_mmd_squared_monte_carlo(&k, &p, &p, 1, 0).is_err());
    }
}
