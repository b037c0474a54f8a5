//! Distribution specifications and seeded samplers.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::function_classes::FunctionMap;
use crate::samples::SampleMatrix;

/// A source of i.i.d. observations. Implementations must draw a fixed
/// number of RNG variates per observation so that seeded streams stay
/// aligned no matter how calls are batched.
pub trait Sampler: Send + Sync {
    fn dim(&self) -> usize;

    /// Draw one observation into `out` (length `dim`).
    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]);

    /// Draw an n-row sample matrix.
    fn sample_matrix(&self, n: usize, rng: &mut ChaCha8Rng) -> SampleMatrix {
        let d = self.dim();
        let mut data = vec![0.0; n * d];
        for row in data.chunks_exact_mut(d) {
            self.fill(rng, row);
        }
        SampleMatrix::from_flat(n, d, data).expect("samplers produce finite draws")
    }
}

/// A multivariate Gaussian N(mean, cov) with a validated symmetric PSD
/// covariance. Doubles as the oracle input for closed-form population MMD.
#[derive(Debug, Clone)]
pub struct GaussianDistSpec {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    // cov = factor * factor^T, built from the spectral decomposition so
    // singular covariances (point masses, degenerate directions) sample fine
    factor: DMatrix<f64>,
}

impl GaussianDistSpec {
    pub fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::argument("gaussian spec needs dimension >= 1"));
        }
        if cov.len() != d || cov.iter().any(|row| row.len() != d) {
            return Err(Error::argument(format!(
                "covariance must be {d}x{d} to match the mean"
            )));
        }
        let mean = DVector::from_vec(mean);
        let cov = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
        Self::from_parts(mean, cov)
    }

    pub fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::argument("covariance shape does not match mean"));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::argument("gaussian spec entries must be finite"));
        }
        let scale = cov.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..d {
            for j in (i + 1)..d {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale.max(1.0) {
                    return Err(Error::argument("covariance must be symmetric to 1e-12"));
                }
            }
        }
        // Symmetrize before the eigendecomposition so roundoff in the input
        // cannot leak into complex arithmetic.
        let sym = (cov.clone() + cov.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        if min_eig < -1e-10 * scale.max(1.0) {
            return Err(Error::argument(format!(
                "covariance is not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        let sqrt_vals = DVector::from_iterator(d, eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()));
        let mut factor = eig.eigenvectors;
        for j in 0..d {
            factor.column_mut(j).scale_mut(sqrt_vals[j]);
        }
        Ok(Self { mean, cov: sym, factor })
    }

    /// Standard normal N(0, I_dim).
    pub fn standard(dim: usize) -> Self {
        Self::from_parts(DVector::zeros(dim), DMatrix::identity(dim, dim))
            .expect("identity covariance is PSD")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Distribution of A·X + c for X ~ N(mean, cov): the affine pushforward
    /// N(A·mean + c, A·cov·Aᵀ).
    pub fn affine_image(&self, matrix: &DMatrix<f64>, offset: &DVector<f64>) -> Result<Self> {
        if matrix.ncols() != self.dim() {
            return Err(Error::argument(format!(
                "affine map expects input dim {}, distribution has {}",
                matrix.ncols(),
                self.dim()
            )));
        }
        if matrix.nrows() != offset.len() {
            return Err(Error::argument("affine offset length must match output dim"));
        }
        let mean = matrix * &self.mean + offset;
        let cov = matrix * &self.cov * matrix.transpose();
        Self::from_parts(mean, cov)
    }
}

impl Sampler for GaussianDistSpec {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let d = self.dim();
        let mut z = vec![0.0; d];
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.mean[i];
            for (j, zj) in z.iter().enumerate() {
                acc += self.factor[(i, j)] * zj;
            }
            *o = acc;
        }
    }
}

/// A degenerate distribution concentrated at one point.
#[derive(Debug, Clone)]
pub struct PointMass {
    point: Vec<f64>,
}

impl PointMass {
    pub fn new(point: Vec<f64>) -> Result<Self> {
        if point.is_empty() || point.iter().any(|v| !v.is_finite()) {
            return Err(Error::argument("point mass needs a finite non-empty point"));
        }
        Ok(Self { point })
    }
}

impl Sampler for PointMass {
    fn dim(&self) -> usize {
        self.point.len()
    }

    fn fill(&self, _rng: &mut ChaCha8Rng, out: &mut [f64]) {
        out.copy_from_slice(&self.point);
    }
}

/// Uniform distribution on an axis-aligned box.
#[derive(Debug, Clone)]
pub struct UniformBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl UniformBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::argument("box bounds must be non-empty and equal length"));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !a.is_finite() || !b.is_finite() || a > b)
        {
            return Err(Error::argument("box bounds must be finite with lo <= hi"));
        }
        Ok(Self { lo, hi })
    }

    /// The symmetric box [-half_width, half_width]^dim.
    pub fn centered(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }
}

impl Sampler for UniformBox {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *o = self.lo[i] + u * (self.hi[i] - self.lo[i]);
        }
    }
}

/// The pushforward of a base sampler through a function map: draws
/// `map(base_draw)`.
#[derive(Clone)]
pub struct MappedSampler {
    base: Arc<dyn Sampler>,
    map: FunctionMap,
}

impl MappedSampler {
    pub fn new(base: Arc<dyn Sampler>, map: FunctionMap) -> Result<Self> {
        if base.dim() != map.input_dim() {
            return Err(Error::argument(format!(
                "sampler dim {} does not match map input dim {}",
                base.dim(),
                map.input_dim()
            )));
        }
        Ok(Self { base, map })
    }
}

impl Sampler for MappedSampler {
    fn dim(&self) -> usize {
        self.map.output_dim()
    }

    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let mut raw = vec![0.0; self.base.dim()];
        self.base.fill(rng, &mut raw);
        let mapped = self.map.apply_row(&raw);
        out.copy_from_slice(&mapped);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derived_rng, tags};

    #[test]
    fn gaussian_rejects_asymmetric_and_indefinite_cov() {
        assert!(GaussianDistSpec::new(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(GaussianDistSpec::new(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
    }

    #[test]
    fn gaussian_accepts_singular_cov() {
        let spec = GaussianDistSpec::new(vec![1.0], vec![vec![0.0]]).unwrap();
        let mut rng = derived_rng(0, tags::GENERIC, 0);
        let m = spec.sample_matrix(4, &mut rng);
        for row in m.rows() {
            assert_eq!(row, &[1.0]);
        }
    }

    #[test]
    fn gaussian_sample_moments_match_spec() {
        let spec = GaussianDistSpec::new(
            vec![1.0, -2.0],
            vec![vec![2.0, 0.6], vec![0.6, 1.0]],
        )
        .unwrap();
        let mut rng = derived_rng(11, tags::GENERIC, 0);
        let n = 200_000;
        let m = spec.sample_matrix(n, &mut rng);
        let mut mean = [0.0f64; 2];
        let mut cov = [[0.0f64; 2]; 2];
        for row in m.rows() {
            mean[0] += row[0];
            mean[1] += row[1];
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        for row in m.rows() {
            let dx = row[0] - mean[0];
            let dy = row[1] - mean[1];
            cov[0][0] += dx * dx;
            cov[0][1] += dx * dy;
            cov[1][1] += dy * dy;
        }
        for r in cov.iter_mut() {
            for v in r.iter_mut() {
                *v /= (n - 1) as f64;
            }
        }
        assert!((mean[0] - 1.0).abs() < 0.02);
        assert!((mean[1] + 2.0).abs() < 0.02);
        assert!((cov[0][0] - 2.0).abs() < 0.05);
        assert!((cov[0][1] - 0.6).abs() < 0.05);
        assert!((cov[1][1] - 1.0).abs() < 0.05);
    }

    #[test]
    fn affine_image_pushes_mean_and_cov() {
        let spec = GaussianDistSpec::standard(2);
        let a = DMatrix::from_row_slice(1, 2, &[2.0, -1.0]);
        let c = DVector::from_vec(vec![3.0]);
        let img = spec.affine_image(&a, &c).unwrap();
        assert_eq!(img.dim(), 1);
        assert!((img.mean()[0] - 3.0).abs() < 1e-15);
        assert!((img.cov()[(0, 0)] - 5.0).abs() < 1e-12);
    }
}
