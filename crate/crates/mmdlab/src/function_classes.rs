//! Finite function classes: the generators and adversarial feature maps
//! the estimators and complexity measures range over.
//!
//! Everything here is an explicit, finite list of parametric maps. Infinite
//! parametric families enter only through [`GridClassSpec`], an explicit
//! parameter grid standing in as an ε-net; the shallow-net covering bound
//! quantifies how fine such a net must be.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derived_rng, tags};
use crate::samples::SampleMatrix;

/// Element-wise activation for shallow networks. Both variants are
/// 1-Lipschitz; a different declared constant can be supplied on the
/// network itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Default Lipschitz constant (1 for both relu and tanh).
    pub fn default_lipschitz(&self) -> f64 {
        1.0
    }
}

/// A parametric map between Euclidean spaces.
#[derive(Debug, Clone)]
pub enum FunctionMap {
    Identity {
        dim: usize,
    },
    Affine {
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
    },
    ShallowNet {
        hidden_weights: DMatrix<f64>,
        hidden_bias: DVector<f64>,
        output_weights: DMatrix<f64>,
        output_bias: DVector<f64>,
        activation: Activation,
        /// Declared Lipschitz constant of the activation.
        activation_lipschitz: f64,
    },
    /// outer ∘ inner, built by [`FunctionMap::composed`].
    Composed {
        outer: Box<FunctionMap>,
        inner: Box<FunctionMap>,
    },
}

impl FunctionMap {
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::argument("identity map needs dim >= 1"));
        }
        Ok(FunctionMap::Identity { dim })
    }

    pub fn affine(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let rows = matrix.len();
        if rows == 0 || matrix[0].is_empty() {
            return Err(Error::argument("affine matrix must be non-empty"));
        }
        let cols = matrix[0].len();
        if matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::argument("affine matrix rows must have equal length"));
        }
        if offset.len() != rows {
            return Err(Error::argument(format!(
                "affine offset length {} must equal output dim {rows}",
                offset.len()
            )));
        }
        let m = DMatrix::from_fn(rows, cols, |i, j| matrix[i][j]);
        let c = DVector::from_vec(offset);
        if m.iter().chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::argument("affine parameters must be finite"));
        }
        Ok(FunctionMap::Affine { matrix: m, offset: c })
    }

    /// Pure scaling map x ↦ a·x on `dim` coordinates.
    pub fn scaling(dim: usize, factor: f64) -> Result<Self> {
        FunctionMap::affine(
            (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { factor } else { 0.0 }).collect())
                .collect(),
            vec![0.0; dim],
        )
    }

    /// Shift map x ↦ x + offset.
    pub fn shift(offset: Vec<f64>) -> Result<Self> {
        let dim = offset.len();
        FunctionMap::affine(
            (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            offset,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn shallow_net(
        hidden_weights: Vec<Vec<f64>>,
        hidden_bias: Vec<f64>,
        output_weights: Vec<Vec<f64>>,
        output_bias: Vec<f64>,
        activation: Activation,
        activation_lipschitz: Option<f64>,
    ) -> Result<Self> {
        let d1 = hidden_weights.len();
        if d1 == 0 || hidden_weights[0].is_empty() {
            return Err(Error::argument("hidden weights must be non-empty"));
        }
        let d0 = hidden_weights[0].len();
        if hidden_weights.iter().any(|r| r.len() != d0) || hidden_bias.len() != d1 {
            return Err(Error::argument("hidden layer shapes are inconsistent"));
        }
        let d_out = output_weights.len();
        if d_out == 0 || output_weights.iter().any(|r| r.len() != d1) || output_bias.len() != d_out
        {
            return Err(Error::argument("output layer shapes are inconsistent"));
        }
        let l_sigma = activation_lipschitz.unwrap_or_else(|| activation.default_lipschitz());
        if !l_sigma.is_finite() || l_sigma <= 0.0 {
            return Err(Error::argument("activation Lipschitz constant must be positive"));
        }
        Ok(FunctionMap::ShallowNet {
            hidden_weights: DMatrix::from_fn(d1, d0, |i, j| hidden_weights[i][j]),
            hidden_bias: DVector::from_vec(hidden_bias),
            output_weights: DMatrix::from_fn(d_out, d1, |i, j| output_weights[i][j]),
            output_bias: DVector::from_vec(output_bias),
            activation,
            activation_lipschitz: l_sigma,
        })
    }

    /// outer ∘ inner. Fails unless inner's output dim feeds outer's input dim.
    pub fn composed(outer: FunctionMap, inner: FunctionMap) -> Result<Self> {
        if outer.input_dim() != inner.output_dim() {
            return Err(Error::argument(format!(
                "cannot compose: inner output dim {} vs outer input dim {}",
                inner.output_dim(),
                outer.input_dim()
            )));
        }
        Ok(FunctionMap::Composed {
            outer: Box::new(outer),
            inner: Box::new(inner),
        })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FunctionMap::Identity { dim } => *dim,
            FunctionMap::Affine { matrix, .. } => matrix.ncols(),
            FunctionMap::ShallowNet { hidden_weights, .. } => hidden_weights.ncols(),
            FunctionMap::Composed { inner, .. } => inner.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            FunctionMap::Identity { dim } => *dim,
            FunctionMap::Affine { matrix, .. } => matrix.nrows(),
            FunctionMap::ShallowNet { output_weights, .. } => output_weights.nrows(),
            FunctionMap::Composed { outer, .. } => outer.output_dim(),
        }
    }

    /// Apply to a single observation. The row length must equal `input_dim`;
    /// callers validate once per matrix via [`FunctionMap::apply`].
    pub fn apply_row(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FunctionMap::Identity { .. } => x.to_vec(),
            FunctionMap::Affine { matrix, offset } => {
                let mut out = vec![0.0; matrix.nrows()];
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = offset[i];
                    for (j, xj) in x.iter().enumerate() {
                        acc += matrix[(i, j)] * xj;
                    }
                    *o = acc;
                }
                out
            }
            FunctionMap::ShallowNet {
                hidden_weights,
                hidden_bias,
                output_weights,
                output_bias,
                activation,
                ..
            } => {
                let d1 = hidden_weights.nrows();
                let mut hidden = vec![0.0; d1];
                for (i, h) in hidden.iter_mut().enumerate() {
                    let mut acc = hidden_bias[i];
                    for (j, xj) in x.iter().enumerate() {
                        acc += hidden_weights[(i, j)] * xj;
                    }
                    *h = activation.apply(acc);
                }
                let mut out = vec![0.0; output_weights.nrows()];
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = output_bias[i];
                    for (j, hj) in hidden.iter().enumerate() {
                        acc += output_weights[(i, j)] * hj;
                    }
                    *o = acc;
                }
                out
            }
            FunctionMap::Composed { outer, inner } => outer.apply_row(&inner.apply_row(x)),
        }
    }

    /// Row-wise application: row i of the result is `self(X_i)`.
    pub fn apply(&self, x: &SampleMatrix) -> Result<SampleMatrix> {
        if x.dim() != self.input_dim() {
            return Err(Error::argument(format!(
                "map expects input dim {}, samples have dim {}",
                self.input_dim(),
                x.dim()
            )));
        }
        let d_out = self.output_dim();
        let mut data = Vec::with_capacity(x.n() * d_out);
        for row in x.rows() {
            data.extend_from_slice(&self.apply_row(row));
        }
        SampleMatrix::from_flat(x.n(), d_out, data)
    }

    /// A certified Lipschitz bound: 1 for the identity, the spectral norm
    /// for affine maps, ‖W₂‖₂·l_σ·‖W₁‖₂ for shallow nets, and the product
    /// of the factors' bounds for compositions.
    pub fn lipschitz_bound(&self) -> f64 {
        match self {
            FunctionMap::Identity { .. } => 1.0,
            FunctionMap::Affine { matrix, .. } => spectral_norm(matrix),
            FunctionMap::ShallowNet {
                hidden_weights,
                output_weights,
                activation_lipschitz,
                ..
            } => spectral_norm(output_weights) * activation_lipschitz * spectral_norm(hidden_weights),
            FunctionMap::Composed { outer, inner } => {
                outer.lipschitz_bound() * inner.lipschitz_bound()
            }
        }
    }

    /// The map as an affine pair (A, c) when it is one; used to keep
    /// population oracles in closed form for affine chains.
    pub fn as_affine(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        match self {
            FunctionMap::Identity { dim } => {
                Some((DMatrix::identity(*dim, *dim), DVector::zeros(*dim)))
            }
            FunctionMap::Affine { matrix, offset } => Some((matrix.clone(), offset.clone())),
            FunctionMap::ShallowNet { .. } => None,
            FunctionMap::Composed { outer, inner } => {
                let (a2, c2) = outer.as_affine()?;
                let (a1, c1) = inner.as_affine()?;
                let offset = &a2 * &c1 + c2;
                Some((a2 * a1, offset))
            }
        }
    }
}

/// Largest singular value via power iteration on AᵀA. Deterministic: the
/// start vector comes from a fixed seed, capped at 1000 iterations with
/// relative tolerance 1e-10.
pub fn spectral_norm(matrix: &DMatrix<f64>) -> f64 {
    const MAX_ITERS: usize = 1000;
    const REL_TOL: f64 = 1e-10;
    let (rows, cols) = matrix.shape();
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut rng = derived_rng(0, tags::SPECTRAL_START, (rows * 0x1_0000 + cols) as u64);
    let mut v = DVector::from_fn(cols, |_, _| StandardNormal.sample(&mut rng));
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= norm;
    let mut estimate = 0.0f64;
    for _ in 0..MAX_ITERS {
        let av = matrix * &v;
        let new_estimate = av.norm();
        if new_estimate == 0.0 {
            return 0.0;
        }
        let w = matrix.transpose() * av;
        let w_norm = w.norm();
        if w_norm == 0.0 {
            return new_estimate;
        }
        v = w / w_norm;
        if (new_estimate - estimate).abs() <= REL_TOL * new_estimate.max(f64::MIN_POSITIVE) {
            return new_estimate;
        }
        estimate = new_estimate;
    }
    estimate
}

/// A non-empty, dimension-consistent list of maps.
#[derive(Debug, Clone)]
pub struct FiniteFunctionClass {
    members: Vec<FunctionMap>,
    label: String,
}

impl FiniteFunctionClass {
    pub fn new(members: Vec<FunctionMap>, label: impl Into<String>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::config("function class must be non-empty"));
        }
        let d_in = members[0].input_dim();
        let d_out = members[0].output_dim();
        for (i, m) in members.iter().enumerate() {
            if m.input_dim() != d_in || m.output_dim() != d_out {
                return Err(Error::config(format!(
                    "class member {i} has dims {}->{}; expected {}->{}",
                    m.input_dim(),
                    m.output_dim(),
                    d_in,
                    d_out
                )));
            }
        }
        Ok(Self { members, label: label.into() })
    }

    /// The singleton class containing only the identity on `dim` coordinates.
    pub fn identity_singleton(dim: usize) -> Result<Self> {
        Self::new(vec![FunctionMap::identity(dim)?], "identity")
    }

    pub fn members(&self) -> &[FunctionMap] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, i: usize) -> &FunctionMap {
        &self.members[i]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn input_dim(&self) -> usize {
        self.members[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.members[0].output_dim()
    }

    /// Apply every member to the same sample matrix.
    pub fn apply_all(&self, x: &SampleMatrix) -> Result<Vec<SampleMatrix>> {
        self.members.iter().map(|m| m.apply(x)).collect()
    }
}

/// F ∘ G = { f ∘ g } with |F|·|G| members in row-major order: the member at
/// index f·|G| + g is f ∘ g.
pub fn compose_classes(
    outer: &FiniteFunctionClass,
    inner: &FiniteFunctionClass,
) -> Result<FiniteFunctionClass> {
    if inner.output_dim() != outer.input_dim() {
        return Err(Error::argument(format!(
            "cannot compose classes: inner output dim {} vs outer input dim {}",
            inner.output_dim(),
            outer.input_dim()
        )));
    }
    let mut members = Vec::with_capacity(outer.len() * inner.len());
    for f in outer.members() {
        for g in inner.members() {
            members.push(FunctionMap::composed(f.clone(), g.clone())?);
        }
    }
    FiniteFunctionClass::new(
        members,
        format!("{}.{}", outer.label(), inner.label()),
    )
}

/// Parametric grid families materializable into explicit classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFamily {
    /// g_θ(x) = x + θ
    Shift,
    /// g_θ(x) = θ ⊙ x (coordinate-wise scaling)
    Scale,
}

/// A parametric family together with an explicit parameter grid, the user's
/// declared ε-net over the continuum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridClassSpec {
    pub family: GridFamily,
    pub grid: Vec<Vec<f64>>,
    /// Optional declared parameter box (lo, hi); every grid point must lie inside.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter_box: Option<(Vec<f64>, Vec<f64>)>,
}

impl GridClassSpec {
    /// One member per grid point, order preserved.
    pub fn materialize(&self) -> Result<FiniteFunctionClass> {
        if self.grid.is_empty() {
            return Err(Error::config("grid class needs a non-empty parameter grid"));
        }
        let dim = self.grid[0].len();
        if dim == 0 {
            return Err(Error::config("grid parameters must be non-empty vectors"));
        }
        if self.grid.iter().any(|p| p.len() != dim) {
            return Err(Error::config("grid parameters must share a dimension"));
        }
        if let Some((lo, hi)) = &self.parameter_box {
            if lo.len() != dim || hi.len() != dim {
                return Err(Error::config("parameter box dims must match the grid"));
            }
            for (i, p) in self.grid.iter().enumerate() {
                if p.iter().zip(lo).any(|(v, l)| v < l) || p.iter().zip(hi).any(|(v, h)| v > h) {
                    return Err(Error::config(format!(
                        "grid point {i} lies outside the declared parameter box"
                    )));
                }
            }
        }
        let members: Result<Vec<FunctionMap>> = self
            .grid
            .iter()
            .map(|theta| match self.family {
                GridFamily::Shift => FunctionMap::shift(theta.clone()),
                GridFamily::Scale => {
                    let mut matrix = vec![vec![0.0; dim]; dim];
                    for (i, row) in matrix.iter_mut().enumerate() {
                        row[i] = theta[i];
                    }
                    FunctionMap::affine(matrix, vec![0.0; dim])
                }
            })
            .collect();
        FiniteFunctionClass::new(
            members?,
            match self.family {
                GridFamily::Shift => "shift_grid",
                GridFamily::Scale => "scale_grid",
            },
        )
    }
}

/// Natural log of the shallow-net covering number bound
///
///   N(ε) ≤ (16·B²·(Bx+1)·√d₀·d₁/ε)^(d₀d₁+2d₁+1) · l_σ^(d₀d₁+d₁) / d₁! ,
///
/// evaluated entirely in the log domain (the factorial via summed logs) so
/// large widths stay finite.
pub fn shallow_net_log_covering_bound(
    d0: usize,
    d1: usize,
    weight_bound: f64,
    input_radius: f64,
    activation_lipschitz: f64,
    eps: f64,
) -> Result<f64> {
    if d0 == 0 || d1 == 0 {
        return Err(Error::argument("network dims must be positive"));
    }
    if [weight_bound, input_radius, activation_lipschitz]
        .iter()
        .any(|v| v.is_nan() || *v <= 0.0)
    {
        return Err(Error::argument("covering bound parameters must be positive"));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::argument("covering radius eps must be positive"));
    }
    let d0f = d0 as f64;
    let d1f = d1 as f64;
    let exponent = d0f * d1f + 2.0 * d1f + 1.0;
    let base = 16.0 * weight_bound * weight_bound * (input_radius + 1.0) * d0f.sqrt() * d1f / eps;
    let log_factorial: f64 = (2..=d1).map(|k| (k as f64).ln()).sum();
    Ok(exponent * base.ln() + (d0f * d1f + d1f) * activation_lipschitz.ln() - log_factorial)
}

/// JSON-facing description of a single map.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionMapConfig {
    Identity {
        dim: usize,
    },
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    ShallowNet {
        hidden_weights: Vec<Vec<f64>>,
        hidden_bias: Vec<f64>,
        output_weights: Vec<Vec<f64>>,
        output_bias: Vec<f64>,
        activation: Activation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        activation_lipschitz: Option<f64>,
    },
}

impl FunctionMapConfig {
    pub fn build(&self) -> Result<FunctionMap> {
        match self {
            FunctionMapConfig::Identity { dim } => FunctionMap::identity(*dim),
            FunctionMapConfig::Affine { matrix, offset } => {
                FunctionMap::affine(matrix.clone(), offset.clone())
            }
            FunctionMapConfig::ShallowNet {
                hidden_weights,
                hidden_bias,
                output_weights,
                output_bias,
                activation,
                activation_lipschitz,
            } => FunctionMap::shallow_net(
                hidden_weights.clone(),
                hidden_bias.clone(),
                output_weights.clone(),
                output_bias.clone(),
                *activation,
                *activation_lipschitz,
            ),
        }
    }
}

/// JSON-facing description of a whole class: a singleton identity, an
/// explicit member list, or a parameter grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassConfig {
    Identity {
        dim: usize,
    },
    Explicit {
        members: Vec<FunctionMapConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Grid {
        family: GridFamily,
        grid: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

impl ClassConfig {
    pub fn build(&self) -> Result<FiniteFunctionClass> {
        match self {
            ClassConfig::Identity { dim } => FiniteFunctionClass::identity_singleton(*dim),
            ClassConfig::Explicit { members, label } => {
                let maps: Result<Vec<FunctionMap>> = members.iter().map(|m| m.build()).collect();
                FiniteFunctionClass::new(maps?, label.clone().unwrap_or_else(|| "class".into()))
            }
            ClassConfig::Grid { family, grid, label } => {
                let spec = GridClassSpec {
                    family: *family,
                    grid: grid.clone(),
                    parameter_box: None,
                };
                let class = spec.materialize()?;
                match label {
                    Some(l) => FiniteFunctionClass::new(class.members().to_vec(), l.clone()),
                    None => Ok(class),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derived_rng, tags};
    use approx::assert_relative_eq;

    #[test]
    fn identity_apply_is_identity() {
        let m = FunctionMap::identity(2).unwrap();
        let x = SampleMatrix::from_rows(vec![vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        assert_eq!(m.apply(&x).unwrap(), x);
    }

    #[test]
    fn affine_apply_hand_example() {
        // 2x + 1 on rows {0, 1} -> {1, 3}
        let m = FunctionMap::affine(vec![vec![2.0]], vec![1.0]).unwrap();
        let x = SampleMatrix::from_column(&[0.0, 1.0]).unwrap();
        let y = m.apply(&x).unwrap();
        assert_eq!(y.row(0), &[1.0]);
        assert_eq!(y.row(1), &[3.0]);
    }

    #[test]
    fn shallow_net_hand_forward_pass() {
        // 2*relu(x - 0.5) on rows {0, 1} -> {0, 1}
        let m = FunctionMap::shallow_net(
            vec![vec![1.0]],
            vec![-0.5],
            vec![vec![2.0]],
            vec![0.0],
            Activation::Relu,
            None,
        )
        .unwrap();
        let x = SampleMatrix::from_column(&[0.0, 1.0]).unwrap();
        let y = m.apply(&x).unwrap();
        assert_eq!(y.row(0), &[0.0]);
        assert_eq!(y.row(1), &[1.0]);
    }

    #[test]
    fn apply_dim_mismatch_is_an_error() {
        let m = FunctionMap::identity(2).unwrap();
        let x = SampleMatrix::from_column(&[1.0]).unwrap();
        assert!(m.apply(&x).is_err());
    }

    #[test]
    fn apply_commutes_with_row_concatenation() {
        let m = FunctionMap::affine(vec![vec![1.0, -1.0], vec![0.5, 2.0]], vec![0.1, -0.2]).unwrap();
        let a = SampleMatrix::from_rows(vec![vec![1.0, 2.0], vec![0.0, -1.0]]).unwrap();
        let b = SampleMatrix::from_rows(vec![vec![3.0, 4.0]]).unwrap();
        let stacked = m.apply(&a.vstack(&b).unwrap()).unwrap();
        let parts = m.apply(&a).unwrap().vstack(&m.apply(&b).unwrap()).unwrap();
        assert_eq!(stacked, parts);
    }

    #[test]
    fn grid_materialization() {
        let spec = GridClassSpec {
            family: GridFamily::Shift,
            grid: vec![vec![-1.0], vec![0.0], vec![1.0]],
            parameter_box: None,
        };
        let class = spec.materialize().unwrap();
        assert_eq!(class.len(), 3);
        let x = SampleMatrix::from_column(&[0.0]).unwrap();
        assert_eq!(class.get(0).apply(&x).unwrap().row(0), &[-1.0]);
        assert_eq!(class.get(2).apply(&x).unwrap().row(0), &[1.0]);

        let scale = GridClassSpec {
            family: GridFamily::Scale,
            grid: vec![
                vec![1.0, 1.0],
                vec![1.0, 2.0],
                vec![2.0, 1.0],
                vec![2.0, 2.0],
            ],
            parameter_box: None,
        };
        assert_eq!(scale.materialize().unwrap().len(), 4);
    }

    #[test]
    fn empty_grid_is_a_config_error() {
        let spec = GridClassSpec {
            family: GridFamily::Shift,
            grid: vec![],
            parameter_box: None,
        };
        assert!(matches!(spec.materialize(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn grid_outside_parameter_box_rejected() {
        let spec = GridClassSpec {
            family: GridFamily::Shift,
            grid: vec![vec![2.0]],
            parameter_box: Some((vec![-1.0], vec![1.0])),
        };
        assert!(spec.materialize().is_err());
    }

    #[test]
    fn compose_classes_cardinality_and_order() {
        let f = FiniteFunctionClass::new(
            vec![
                FunctionMap::scaling(1, 2.0).unwrap(),
                FunctionMap::scaling(1, 3.0).unwrap(),
            ],
            "F",
        )
        .unwrap();
        let g = GridClassSpec {
            family: GridFamily::Shift,
            grid: vec![vec![-1.0], vec![0.0], vec![1.0]],
            parameter_box: None,
        }
        .materialize()
        .unwrap();
        let fg = compose_classes(&f, &g).unwrap();
        assert_eq!(fg.len(), 6);
        // row-major: member 4 = f_1 ∘ g_1 = 3·(x + 0)
        let x = SampleMatrix::from_column(&[1.0]).unwrap();
        assert_eq!(fg.get(4).apply(&x).unwrap().row(0), &[3.0]);
    }

    #[test]
    fn compose_identity_equals_inner_class() {
        let f = FiniteFunctionClass::identity_singleton(1).unwrap();
        let g = GridClassSpec {
            family: GridFamily::Shift,
            grid: vec![vec![-1.0], vec![0.0], vec![1.0]],
            parameter_box: None,
        }
        .materialize()
        .unwrap();
        let fg = compose_classes(&f, &g).unwrap();
        assert_eq!(fg.len(), 3);
        let x = SampleMatrix::from_column(&[0.25]).unwrap();
        for i in 0..3 {
            assert_eq!(
                fg.get(i).apply(&x).unwrap(),
                g.get(i).apply(&x).unwrap()
            );
        }
    }

    #[test]
    fn composition_hand_example() {
        // f(y) = 2y after g(x) = x + 1, applied to 0, gives 2
        let f = FunctionMap::scaling(1, 2.0).unwrap();
        let g = FunctionMap::shift(vec![1.0]).unwrap();
        let fg = FunctionMap::composed(f, g).unwrap();
        assert_eq!(fg.apply_row(&[0.0]), vec![2.0]);
    }

    #[test]
    fn compose_apply_equals_sequential_apply() {
        let f = FiniteFunctionClass::new(
            vec![FunctionMap::affine(vec![vec![1.0, 0.5]], vec![0.2]).unwrap()],
            "F",
        )
        .unwrap();
        let g = FiniteFunctionClass::new(
            vec![FunctionMap::affine(
                vec![vec![2.0], vec![-1.0]],
                vec![0.0, 1.0],
            )
            .unwrap()],
            "G",
        )
        .unwrap();
        let fg = compose_classes(&f, &g).unwrap();
        let x = SampleMatrix::from_column(&[0.3, -0.7, 1.1]).unwrap();
        let direct = fg.get(0).apply(&x).unwrap();
        let seq = f.get(0).apply(&g.get(0).apply(&x).unwrap()).unwrap();
        for i in 0..x.n() {
            assert_relative_eq!(direct.row(i)[0], seq.row(i)[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn lipschitz_bounds() {
        assert_eq!(FunctionMap::identity(3).unwrap().lipschitz_bound(), 1.0);
        // largest singular value of diag(3, 4) is 4
        let a = FunctionMap::affine(vec![vec![3.0, 0.0], vec![0.0, 4.0]], vec![0.0, 0.0]).unwrap();
        assert_relative_eq!(a.lipschitz_bound(), 4.0, epsilon = 1e-9);
        // ||W1|| = 2, ||W2|| = 3, relu => 6
        let net = FunctionMap::shallow_net(
            vec![vec![2.0]],
            vec![0.0],
            vec![vec![3.0]],
            vec![0.0],
            Activation::Relu,
            None,
        )
        .unwrap();
        assert_relative_eq!(net.lipschitz_bound(), 6.0, epsilon = 1e-9);
    }

    #[test]
    fn spectral_norm_matches_singular_values() {
        // [[1, 2], [3, 4]] has largest singular value 5.46498570421904
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(spectral_norm(&m), 5.464985704219043, epsilon = 1e-8);
        let zero = DMatrix::zeros(3, 2);
        assert_eq!(spectral_norm(&zero), 0.0);
    }

    #[test]
    fn members_respect_their_lipschitz_bound() {
        // 1e4 random pairs per member, ratio must stay below the certified bound
        let members = vec![
            FunctionMap::affine(vec![vec![1.5, -0.3], vec![0.7, 2.1]], vec![0.1, 0.2]).unwrap(),
            FunctionMap::shallow_net(
                vec![vec![0.8, -1.2], vec![0.3, 0.9], vec![-0.5, 0.4]],
                vec![0.1, -0.2, 0.0],
                vec![vec![1.1, -0.7, 0.2]],
                vec![0.3],
                Activation::Tanh,
                None,
            )
            .unwrap(),
        ];
        let mut rng = derived_rng(3, tags::GENERIC, 0);
        for m in &members {
            let bound = m.lipschitz_bound();
            let d = m.input_dim();
            for _ in 0..10_000 {
                let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let y: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let dist: f64 = x
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if dist == 0.0 {
                    continue;
                }
                let fx = m.apply_row(&x);
                let fy = m.apply_row(&y);
                let img: f64 = fx
                    .iter()
                    .zip(&fy)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(
                    img <= bound * dist * (1.0 + 1e-9),
                    "ratio {} exceeds bound {}",
                    img / dist,
                    bound
                );
            }
        }
    }

    #[test]
    fn covering_bound_hand_values() {
        // base = 16·1·2·1·1/32 = 1: every log term vanishes
        let v = shallow_net_log_covering_bound(1, 1, 1.0, 1.0, 1.0, 32.0).unwrap();
        assert_relative_eq!(v, 0.0, epsilon = 1e-12);
        // eps = 16 halves the radius: base 2, exponent 4
        let v = shallow_net_log_covering_bound(1, 1, 1.0, 1.0, 1.0, 16.0).unwrap();
        assert_relative_eq!(v, 2.772588722239781, epsilon = 1e-12);
    }

    #[test]
    fn covering_bound_wide_layer_stays_finite() {
        let v = shallow_net_log_covering_bound(5, 170, 2.0, 3.0, 1.0, 0.1).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn covering_bound_monotone_decreasing_in_eps() {
        let mut prev = f64::INFINITY;
        for eps in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let v = shallow_net_log_covering_bound(2, 3, 1.5, 2.0, 1.0, eps).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn covering_bound_rejects_bad_eps() {
        assert!(shallow_net_log_covering_bound(1, 1, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(shallow_net_log_covering_bound(1, 1, 1.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn class_config_round_trip() {
        let json = r#"{"kind":"grid","family":"shift","grid":[[-1.0],[0.0],[1.0]]}"#;
        let cfg: ClassConfig = serde_json::from_str(json).unwrap();
        let class = cfg.build().unwrap();
        assert_eq!(class.len(), 3);

        let json = r#"{"kind":"explicit","members":[{"kind":"affine","matrix":[[2.0]],"offset":[1.0]}]}"#;
        let cfg: ClassConfig = serde_json::from_str(json).unwrap();
        let class = cfg.build().unwrap();
        assert_eq!(class.len(), 1);
    }
}
