//! JSON-facing experiment configuration.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimators::MinimaxOrientation;
use crate::function_classes::ClassConfig;
use crate::kernels::KernelConfig;
use crate::sampling::{GaussianDistSpec, PointMass, Sampler, UniformBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Coverage,
    Decay,
    ExcessRisk,
    KernelAudit,
}

/// One marginal distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistConfig {
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    PointMass {
        point: Vec<f64>,
    },
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl DistConfig {
    pub fn standard_gaussian(dim: usize) -> Self {
        DistConfig::Gaussian {
            mean: vec![0.0; dim],
            cov: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Sampler>> {
        Ok(match self {
            DistConfig::Gaussian { mean, cov } => {
                Arc::new(GaussianDistSpec::new(mean.clone(), cov.clone())?)
            }
            DistConfig::PointMass { point } => Arc::new(PointMass::new(point.clone())?),
            DistConfig::UniformBox { lo, hi } => Arc::new(UniformBox::new(lo.clone(), hi.clone())?),
        })
    }

    pub fn as_gaussian(&self) -> Option<Result<GaussianDistSpec>> {
        match self {
            DistConfig::Gaussian { mean, cov } => {
                Some(GaussianDistSpec::new(mean.clone(), cov.clone()))
            }
            _ => None,
        }
    }
}

/// The X (noise) and Y (data) marginals.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub x: DistConfig,
    pub y: DistConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityReplicates {
    pub outer: usize,
    pub inner: usize,
}

impl Default for ComplexityReplicates {
    fn default() -> Self {
        // the bound consumes E[G_n]; these defaults keep its Monte-Carlo
        // error well below the bound's own slack
        ComplexityReplicates { outer: 50, inner: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    MinMmd,
    Minimax,
}

/// Which corollary an excess-risk run verifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcessRiskTarget {
    Corollary1,
    Corollary2,
}

/// Population-oracle selection. `Auto` takes the closed form when the
/// kernel is Gaussian, the data marginals Gaussian, and every map affine;
/// otherwise the seeded Monte-Carlo oracle with `samples` draws per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleChoice {
    Auto,
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub choice: OracleChoice,
    pub samples: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            choice: OracleChoice::Auto,
            samples: 1_000_000,
        }
    }
}

/// Kernel-audit settings: probe dimensions and box half-width.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub dims: Vec<usize>,
    pub half_width: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            dims: vec![1, 2, 5],
            half_width: 3.0,
        }
    }
}

/// Output paths. All writes are atomic; omitted paths are skipped.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_json: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_csv: Option<String>,
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// May be omitted in the file when the CLI names the experiment kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    pub kernel: KernelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_class: Option<ClassConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_class: Option<ClassConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Strictly increasing sample-size ladder for decay runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ladder: Option<Vec<usize>>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Monte-Carlo trial count; kernel audits read it as the probe count.
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub complexity: ComplexityReplicates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<FitKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<MinimaxOrientation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ExcessRiskTarget>,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

impl ExperimentConfig {
    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind
            .ok_or_else(|| Error::config("experiment kind is not set"))
    }

    pub fn require_n(&self) -> Result<usize> {
        let n = self
            .n
            .ok_or_else(|| Error::config("experiment needs the sample size n"))?;
        if n < 2 {
            return Err(Error::config("experiment needs n >= 2"));
        }
        Ok(n)
    }

    pub fn require_data(&self) -> Result<&DataConfig> {
        self.data
            .as_ref()
            .ok_or_else(|| Error::config("experiment needs a data section"))
    }

    pub fn validate_common(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("experiment needs trials >= 1"));
        }
        if self.delta.is_nan() || self.delta <= 0.0 || self.delta >= 1.0 {
            return Err(Error::config("delta must lie in (0,1)"));
        }
        if self.complexity.outer == 0 || self.complexity.inner == 0 {
            return Err(Error::config("complexity replicate counts must be >= 1"));
        }
        if self.oracle.samples < 2 {
            return Err(Error::config("oracle sample count must be >= 2"));
        }
        Ok(())
    }

    /// The decay ladder: at least 4 strictly increasing values spanning an
    /// 8x range.
    pub fn require_ladder(&self) -> Result<&[usize]> {
        let ladder = self
            .n_ladder
            .as_deref()
            .ok_or_else(|| Error::config("decay experiment needs an n_ladder"))?;
        if ladder.len() < 4 {
            return Err(Error::config("n_ladder needs at least 4 sizes"));
        }
        if ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("n_ladder must be strictly increasing"));
        }
        if ladder[0] < 2 {
            return Err(Error::config("n_ladder entries must be >= 2"));
        }
        if (ladder[ladder.len() - 1] as f64) < 8.0 * ladder[0] as f64 {
            return Err(Error::config("n_ladder must span at least an 8x range"));
        }
        Ok(ladder)
    }
}
