//! Reproducing kernels with evaluation, composition, and certified
//! boundedness/Lipschitz constants.
//!
//! The certified constants are (l, ν, b):
//!   - l: Lipschitz constant of u ↦ k(u₁,u) − k(u₂,u), uniformly over u₁,u₂;
//!   - ν: bound on sup_u k(u,u);
//!   - b: diameter of the support, when the caller declares one.
//!
//! Gaussian: l = 2√2·e^(-1/2)/|σ|, ν = 1.  Laplacian: l = 2√d/σ, ν = 1.
//! Translation invariant with an l_t-Lipschitz profile peaking at ν_t:
//! l = 2·l_t, ν = ν_t.  Composition with an L_f-Lipschitz feature map
//! multiplies l by L_f and shrinks the diameter to L_f·b.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_classes::{FunctionMap, FunctionMapConfig};
use crate::samples::SampleMatrix;

/// A translation-invariant profile function k̃: ℝ^d → ℝ.
pub type KernelProfile = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// User-supplied translation-invariant profile k̃ with user-certified
/// constants: k(u,u') = k̃(u-u'), k̃ is `profile_lipschitz`-Lipschitz and
/// k̃(0) ≤ `profile_peak`.
#[derive(Clone)]
pub struct TranslationInvariantKernel {
    dim: usize,
    profile: KernelProfile,
    profile_peak: f64,
    profile_lipschitz: f64,
}

impl fmt::Debug for TranslationInvariantKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TranslationInvariantKernel")
            .field("dim", &self.dim)
            .field("profile_peak", &self.profile_peak)
            .field("profile_lipschitz", &self.profile_lipschitz)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Kernel {
    /// k(u,u') = exp(-σ⁻²‖u-u'‖²), σ ≠ 0.
    Gaussian { sigma: f64 },
    /// k(u,u') = exp(-σ⁻¹‖u-u'‖₁), σ > 0.
    Laplacian { sigma: f64 },
    TranslationInvariant(TranslationInvariantKernel),
    /// k∘f(u,u') = k(f(u), f(u')).
    Composite {
        base: Box<Kernel>,
        feature: FunctionMap,
    },
}

impl Kernel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if sigma == 0.0 || !sigma.is_finite() {
            return Err(Error::argument("gaussian kernel needs sigma != 0"));
        }
        Ok(Kernel::Gaussian { sigma })
    }

    pub fn laplacian(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::argument("laplacian kernel needs sigma > 0"));
        }
        Ok(Kernel::Laplacian { sigma })
    }

    pub fn translation_invariant(
        dim: usize,
        profile: KernelProfile,
        profile_peak: f64,
        profile_lipschitz: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("translation-invariant kernel needs dim >= 1"));
        }
        if !profile_peak.is_finite() || profile_peak < 0.0 {
            return Err(Error::config(
                "translation-invariant kernel needs a finite non-negative profile peak",
            ));
        }
        if !profile_lipschitz.is_finite() || profile_lipschitz < 0.0 {
            return Err(Error::config(
                "translation-invariant kernel needs a finite non-negative profile Lipschitz constant",
            ));
        }
        Ok(Kernel::TranslationInvariant(TranslationInvariantKernel {
            dim,
            profile,
            profile_peak,
            profile_lipschitz,
        }))
    }

    /// k ∘ f: evaluates the base kernel on feature-mapped points.
    pub fn compose(self, feature: FunctionMap) -> Result<Self> {
        if let Some(expected) = self.input_dim() {
            if feature.output_dim() != expected {
                return Err(Error::argument(format!(
                    "feature output dim {} does not match kernel input dim {expected}",
                    feature.output_dim()
                )));
            }
        }
        Ok(Kernel::Composite {
            base: Box::new(self),
            feature,
        })
    }

    /// The dimension the kernel expects, when it has one. Gaussian and
    /// Laplacian kernels accept points of any dimension.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            Kernel::Gaussian { .. } | Kernel::Laplacian { .. } => None,
            Kernel::TranslationInvariant(k) => Some(k.dim),
            Kernel::Composite { feature, .. } => Some(feature.input_dim()),
        }
    }

    pub fn check_point_dim(&self, dim: usize) -> Result<()> {
        match self.input_dim() {
            Some(expected) if expected != dim => Err(Error::argument(format!(
                "kernel expects dim {expected}, got {dim}"
            ))),
            _ => Ok(()),
        }
    }

    /// k(u, u2). Validates dimensions; use [`Kernel::eval_unchecked`] in
    /// loops that have already validated them.
    pub fn eval(&self, u: &[f64], u2: &[f64]) -> Result<f64> {
        if u.len() != u2.len() {
            return Err(Error::argument(format!(
                "point dims differ: {} vs {}",
                u.len(),
                u2.len()
            )));
        }
        self.check_point_dim(u.len())?;
        Ok(self.eval_unchecked(u, u2))
    }

    /// k(u, u2) without dimension checks.
    pub fn eval_unchecked(&self, u: &[f64], u2: &[f64]) -> f64 {
        match self {
            Kernel::Gaussian { sigma } => {
                let sq: f64 = u
                    .iter()
                    .zip(u2)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (-sq / (sigma * sigma)).exp()
            }
            Kernel::Laplacian { sigma } => {
                let l1: f64 = u.iter().zip(u2).map(|(a, b)| (a - b).abs()).sum();
                (-l1 / sigma).exp()
            }
            Kernel::TranslationInvariant(k) => {
                let diff: Vec<f64> = u.iter().zip(u2).map(|(a, b)| a - b).collect();
                (k.profile)(&diff)
            }
            Kernel::Composite { base, feature } => {
                base.eval_unchecked(&feature.apply_row(u), &feature.apply_row(u2))
            }
        }
    }

    /// Certified constants for points of dimension `dim`; `support_diameter`,
    /// when declared by the caller, populates b.
    pub fn certified_constants(
        &self,
        dim: usize,
        support_diameter: Option<f64>,
    ) -> Result<KernelConstants> {
        if dim == 0 {
            return Err(Error::argument("dim must be >= 1"));
        }
        self.check_point_dim(dim)?;
        if let Some(b) = support_diameter {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::argument("support diameter must be finite and >= 0"));
            }
        }
        match self {
            Kernel::Gaussian { sigma } => KernelConstants::new(
                2.0 * std::f64::consts::SQRT_2 * (-0.5f64).exp() / sigma.abs(),
                Some(1.0),
                support_diameter,
            ),
            Kernel::Laplacian { sigma } => KernelConstants::new(
                2.0 * (dim as f64).sqrt() / sigma,
                Some(1.0),
                support_diameter,
            ),
            Kernel::TranslationInvariant(k) => KernelConstants::new(
                2.0 * k.profile_lipschitz,
                Some(k.profile_peak),
                support_diameter,
            ),
            Kernel::Composite { base, feature } => {
                let feature_lipschitz = feature.lipschitz_bound();
                let inner = base.certified_constants(feature.output_dim(), None)?;
                let image_diameter = support_diameter.map(|b| feature_lipschitz * b);
                let diameter = match (inner.support_diameter(), image_diameter) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                KernelConstants::new(
                    inner.lipschitz() * feature_lipschitz,
                    inner.value_bound(),
                    diameter,
                )
            }
        }
    }

    /// Symmetric n×n matrix of pairwise kernel values.
    pub fn gram_matrix(&self, points: &SampleMatrix) -> Result<DMatrix<f64>> {
        self.check_point_dim(points.dim())?;
        let n = points.n();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval_unchecked(points.row(i), points.row(j));
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        Ok(gram)
    }

    /// n×m matrix of values k(x_i, y_j).
    pub fn cross_gram(&self, x: &SampleMatrix, y: &SampleMatrix) -> Result<DMatrix<f64>> {
        if x.dim() != y.dim() {
            return Err(Error::argument(format!(
                "sample dims differ: {} vs {}",
                x.dim(),
                y.dim()
            )));
        }
        self.check_point_dim(x.dim())?;
        let mut gram = DMatrix::zeros(x.n(), y.n());
        for i in 0..x.n() {
            for j in 0..y.n() {
                gram[(i, j)] = self.eval_unchecked(x.row(i), y.row(j));
            }
        }
        Ok(gram)
    }
}

/// Certified (l, ν, b). At least one of ν and b must be present, otherwise
/// the concentration bounds that consume min{4ν, l·b} would be vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    lipschitz: f64,
    value_bound: Option<f64>,
    support_diameter: Option<f64>,
}

impl KernelConstants {
    pub fn new(lipschitz: f64, value_bound: Option<f64>, support_diameter: Option<f64>) -> Result<Self> {
        if !lipschitz.is_finite() || lipschitz < 0.0 {
            return Err(Error::argument("lipschitz constant must be finite and >= 0"));
        }
        if let Some(nu) = value_bound {
            if !nu.is_finite() || nu < 0.0 {
                return Err(Error::argument("value bound must be finite and >= 0"));
            }
        }
        if let Some(b) = support_diameter {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::argument("support diameter must be finite and >= 0"));
            }
        }
        if value_bound.is_none() && support_diameter.is_none() {
            return Err(Error::config(
                "boundedness assumption needs a value bound or a support diameter",
            ));
        }
        Ok(Self {
            lipschitz,
            value_bound,
            support_diameter,
        })
    }

    /// l, the Lipschitz constant of k(u,·) − k(u',·).
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// ν, the bound on sup k(u,u), when certified.
    pub fn value_bound(&self) -> Option<f64> {
        self.value_bound
    }

    /// b, the support diameter, when certified.
    pub fn support_diameter(&self) -> Option<f64> {
        self.support_diameter
    }

    /// min{4ν, l·b} with an absent term treated as +∞. Finite by
    /// construction: at least one of ν and b is present.
    pub fn min_term(&self) -> f64 {
        let from_value = self.value_bound.map_or(f64::INFINITY, |nu| 4.0 * nu);
        let from_diameter = self
            .support_diameter
            .map_or(f64::INFINITY, |b| self.lipschitz * b);
        from_value.min(from_diameter)
    }
}

/// JSON-facing kernel description: `{"kind":"gaussian","sigma":1.0}` etc.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Gaussian { sigma: f64 },
    Laplacian { sigma: f64 },
    Composite {
        base: Box<KernelConfig>,
        feature: FunctionMapConfig,
    },
}

impl KernelConfig {
    pub fn build(&self) -> Result<Kernel> {
        match self {
            KernelConfig::Gaussian { sigma } => Kernel::gaussian(*sigma),
            KernelConfig::Laplacian { sigma } => Kernel::laplacian(*sigma),
            KernelConfig::Composite { base, feature } => {
                base.build()?.compose(feature.build()?)
            }
        }
    }
}
