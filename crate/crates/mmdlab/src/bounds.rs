//! Closed-form concentration and generalization bounds.
//!
//! All logs are natural. With l, ν, b the certified kernel constants,
//! min = min{4ν, lb} (absent terms +∞), and gc_* Gaussian-complexity
//! expectations:
//!
//!   uniform deviation, expectation:      32√π·l·(gc_FG + gc_F)
//!   uniform deviation, prob ≥ 1-δ:       16√π·l·(gc_FG + gc_F) + 4·min·√(ln(2/δ)/n)
//!   U-statistic large deviation:         2·ν_sup·√(2·ln(2/δ)/⌊n/2⌋)
//!   kernel-class constant C★:            2√chaos + 2√(ν/n) + √(18·ν·ln(2/δ)/n)
//!   empirical-measure MMD:               √(2ν/n)·(1 + √ln(1/δ))
//!   min-MMD excess risk:                 32√π·l·gc_G + 8·min·√(ln(2/δ)/n)
//!   min-max (GAN) excess risk:           32√π·l·(gc_F + gc_FG) + 8·min·√(ln(2/δ)/n)

use serde::{Deserialize, Serialize};

use crate::complexity::ComplexityEstimate;
use crate::error::{Error, Result};
use crate::kernels::KernelConstants;

/// Everything a bound formula can consume. Formulas check for the fields
/// they need and reject anything missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// l, Lipschitz constant of k(u,·) - k(u',·).
    pub lipschitz: f64,
    /// ν, bound on sup k(u,u).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_bound: Option<f64>,
    /// b, support diameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_diameter: Option<f64>,
    pub n: usize,
    pub delta: f64,
    /// E[G_n(F∘G(X))]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gc_fg: Option<f64>,
    /// E[G_n(F(Y))]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gc_f: Option<f64>,
    /// E[G_n(G(X))]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gc_g: Option<f64>,
    /// Expected Rademacher chaos of the kernel class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chaos: Option<f64>,
}

impl BoundInputs {
    pub fn from_constants(constants: &KernelConstants, n: usize, delta: f64) -> Self {
        BoundInputs {
            lipschitz: constants.lipschitz(),
            value_bound: constants.value_bound(),
            support_diameter: constants.support_diameter(),
            n,
            delta,
            gc_fg: None,
            gc_f: None,
            gc_g: None,
            chaos: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::argument("bounds need n >= 2"));
        }
        check_delta_open(self.delta)?;
        if !self.lipschitz.is_finite() || self.lipschitz < 0.0 {
            return Err(Error::argument("lipschitz constant must be finite and >= 0"));
        }
        for (name, v) in [
            ("value_bound", self.value_bound),
            ("support_diameter", self.support_diameter),
            ("gc_fg", self.gc_fg),
            ("gc_f", self.gc_f),
            ("gc_g", self.gc_g),
            ("chaos", self.chaos),
        ] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::argument(format!("{name} must be finite and >= 0")));
                }
            }
        }
        Ok(())
    }

    /// min{4ν, l·b}; configuration error when both ν and b are absent.
    pub fn min_term(&self) -> Result<f64> {
        let from_value = self.value_bound.map_or(f64::INFINITY, |nu| 4.0 * nu);
        let from_diameter = self
            .support_diameter
            .map_or(f64::INFINITY, |b| self.lipschitz * b);
        let m = from_value.min(from_diameter);
        if !m.is_finite() {
            return Err(Error::config(
                "min{4nu, lb} is infinite: certify a value bound or a support diameter",
            ));
        }
        Ok(m)
    }

    fn require(&self, field: Option<f64>, name: &str) -> Result<f64> {
        field.ok_or_else(|| Error::config(format!("bound needs the {name} complexity input")))
    }
}

fn check_delta_open(delta: f64) -> Result<()> {
    if delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::argument(format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    Ok(())
}

const SQRT_PI: f64 = 1.7724538509055159;

/// Identifies which formula produced a report value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFormula {
    Theorem1Expectation,
    Theorem1HighProbability,
    GrettonDeviation,
    FukumizuCstar,
    EmpiricalMeasure,
    EmpiricalMeasureExcess,
    Corollary1,
    Corollary2,
}

/// One evaluated bound: the formula, its inputs, and the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub formula: BoundFormula,
    pub inputs: BoundInputs,
    pub value: f64,
    /// Standard error of the complexity estimates feeding the bound, when
    /// they were Monte-Carlo; carried as metadata for conservative use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity_std_error: Option<f64>,
}

/// The uniform deviation bounds over (f, g):
/// (expectation bound, probability ≥ 1-δ bound). Needs gc_fg and gc_f.
pub fn theorem1_bounds(inputs: &BoundInputs) -> Result<(f64, f64)> {
    inputs.validate()?;
    let gc_fg = inputs.require(inputs.gc_fg, "gc_fg")?;
    let gc_f = inputs.require(inputs.gc_f, "gc_f")?;
    let min_term = inputs.min_term()?;
    let gc_sum = gc_fg + gc_f;
    let expectation = 32.0 * SQRT_PI * inputs.lipschitz * gc_sum;
    let tail = 4.0 * min_term * ((2.0 / inputs.delta).ln() / inputs.n as f64).sqrt();
    let high_probability = 16.0 * SQRT_PI * inputs.lipschitz * gc_sum + tail;
    Ok((expectation, high_probability))
}

/// Large deviation bound for the U-statistic of a fixed kernel:
/// 2·ν_sup·√(2·ln(2/δ)/⌊n/2⌋), ν_sup = sup_{u,u'} k(u,u').
pub fn gretton_deviation_bound(value_sup: f64, n: usize, delta: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::argument("deviation bound needs n >= 2"));
    }
    check_delta_open(delta)?;
    if !value_sup.is_finite() || value_sup < 0.0 {
        return Err(Error::argument("kernel sup must be finite and >= 0"));
    }
    let half = (n / 2) as f64;
    Ok(2.0 * value_sup * (2.0 * (2.0 / delta).ln() / half).sqrt())
}

/// One-sided kernel-class constant
/// C★ = 2√chaos + 2√(ν/n) + √(18·ν·ln(2/δ)/n).
pub fn fukumizu_cstar(chaos: f64, value_bound: f64, n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::argument("C-star needs n >= 1"));
    }
    check_delta_open(delta)?;
    if chaos.is_nan() || chaos < 0.0 || value_bound.is_nan() || value_bound < 0.0 {
        return Err(Error::argument("chaos and value bound must be >= 0"));
    }
    let nf = n as f64;
    Ok(2.0 * chaos.sqrt()
        + 2.0 * (value_bound / nf).sqrt()
        + (18.0 * value_bound * (2.0 / delta).ln() / nf).sqrt())
}

/// Two-sided kernel-class bound C★(X) + C★(Y), with possibly different
/// chaos estimates per side.
pub fn fukumizu_two_sided(
    chaos_x: f64,
    chaos_y: f64,
    value_bound: f64,
    n: usize,
    delta: f64,
) -> Result<f64> {
    Ok(fukumizu_cstar(chaos_x, value_bound, n, delta)?
        + fukumizu_cstar(chaos_y, value_bound, n, delta)?)
}

/// MMD between a distribution and its n-point empirical measure:
/// √(2ν/n)·(1 + √ln(1/δ)). Valid for δ up to and including 1.
pub fn empirical_measure_bound(value_bound: f64, n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::argument("empirical-measure bound needs n >= 1"));
    }
    if delta.is_nan() || delta <= 0.0 || delta > 1.0 {
        return Err(Error::argument(format!(
            "delta must lie in (0,1], got {delta}"
        )));
    }
    if !value_bound.is_finite() || value_bound < 0.0 {
        return Err(Error::argument("value bound must be finite and >= 0"));
    }
    Ok((2.0 * value_bound / n as f64).sqrt() * (1.0 + (1.0 / delta).ln().sqrt()))
}

/// The excess-risk form of the empirical-measure bound: twice the
/// one-measure value, from the triangle-inequality argument.
pub fn empirical_measure_excess_bound(value_bound: f64, n: usize, delta: f64) -> Result<f64> {
    Ok(2.0 * empirical_measure_bound(value_bound, n, delta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorollaryKind {
    Corollary1,
    Corollary2,
}

/// Excess-risk bounds for the fitted estimators.
/// `Corollary1` (min-MMD fit): 32√π·l·gc_G + 8·min·√(ln(2/δ)/n).
/// `Corollary2` (min-max fit): 32√π·l·(gc_F + gc_FG) + 8·min·√(ln(2/δ)/n).
pub fn corollary_bounds(which: CorollaryKind, inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let min_term = inputs.min_term()?;
    let gc = match which {
        CorollaryKind::Corollary1 => inputs.require(inputs.gc_g, "gc_g")?,
        CorollaryKind::Corollary2 => {
            inputs.require(inputs.gc_f, "gc_f")? + inputs.require(inputs.gc_fg, "gc_fg")?
        }
    };
    let tail = 8.0 * min_term * ((2.0 / inputs.delta).ln() / inputs.n as f64).sqrt();
    Ok(32.0 * SQRT_PI * inputs.lipschitz * gc + tail)
}

/// Combined standard error of the complexity estimates a bound consumed.
pub fn combined_complexity_std_error(estimates: &[&ComplexityEstimate]) -> f64 {
    estimates
        .iter()
        .map(|e| e.std_error * e.std_error)
        .sum::<f64>()
        .sqrt()
}
