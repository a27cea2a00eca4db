//! Linear and Tchebychev scalarizations and the reciprocal weight transform.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum(weights) == 1`.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain(
                "weight vector needs at least one entry".into(),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Domain(format!(
                "weights must be finite and >= 0, got {w}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!("weights must sum to 1, got {sum}")));
        }
        Ok(WeightVector(weights))
    }

    /// Divides by the l1 norm. Fails on negative, non-finite or all-zero input.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        if let Some(w) = raw.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Domain(format!(
                "weights must be finite and >= 0, got {w}"
            )));
        }
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::Domain(
                "cannot normalize an all-zero weight vector".into(),
            ));
        }
        Self::new(raw.into_iter().map(|w| w / sum).collect())
    }

    /// Uniform weights `1/K`.
    pub fn uniform(k: usize) -> Self {
        WeightVector(vec![1.0 / k.max(1) as f64; k.max(1)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn min_weight(&self) -> f64 {
        self.0.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Deref for WeightVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        WeightVector::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Vec<f64> {
        w.0
    }
}

/// The anchor `z*` subtracted inside the Tchebychev scalarization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferencePoint(pub Vec<f64>);

impl ReferencePoint {
    pub fn zeros(k: usize) -> Self {
        ReferencePoint(vec![0.0; k])
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|z| !z.is_finite()) {
            return Err(Error::Domain("reference point must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scalarization {
    #[serde(rename = "linear", alias = "lin")]
    Linear,
    #[serde(rename = "tch", alias = "tchebychev")]
    Tchebychev,
}

impl Scalarization {
    pub fn name(self) -> &'static str {
        match self {
            Scalarization::Linear => "linear",
            Scalarization::Tchebychev => "tch",
        }
    }
}

impl fmt::Display for Scalarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scalarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Scalarization::Linear),
            "tch" | "tchebychev" => Ok(Scalarization::Tchebychev),
            other => Err(Error::Config(format!(
                "unknown scalarization {other:?}, expected linear or tch"
            ))),
        }
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Contract(format!(
            "{what} has length {got}, expected {want}"
        )));
    }
    Ok(())
}

/// `sum_k lambda_k f_k`
pub fn linear_scalarize(lambda: &[f64], f: &[f64]) -> Result<f64> {
    check_len("objective vector", f.len(), lambda.len())?;
    Ok(linear_unchecked(lambda, f))
}

/// `min_k lambda_k (f_k - z_k)`
pub fn tchebychev_scalarize(lambda: &[f64], f: &[f64], z: &[f64]) -> Result<f64> {
    check_len("objective vector", f.len(), lambda.len())?;
    check_len("reference point", z.len(), lambda.len())?;
    Ok(tchebychev_unchecked(lambda, f, z))
}

#[inline]
pub(crate) fn linear_unchecked(lambda: &[f64], f: &[f64]) -> f64 {
    lambda.iter().zip(f).map(|(l, v)| l * v).sum()
}

#[inline]
pub(crate) fn tchebychev_unchecked(lambda: &[f64], f: &[f64], z: &[f64]) -> f64 {
    lambda
        .iter()
        .zip(f)
        .zip(z)
        .map(|((l, v), z)| l * (v - z))
        .fold(f64::INFINITY, f64::min)
}

/// Dispatches on `kind`; `z` is ignored for the linear case.
pub fn scalarize(kind: Scalarization, lambda: &[f64], f: &[f64], z: &[f64]) -> Result<f64> {
    match kind {
        Scalarization::Linear => linear_scalarize(lambda, f),
        Scalarization::Tchebychev => tchebychev_scalarize(lambda, f, z),
    }
}

/// Reciprocal weights renormalized to the simplex. Undefined for any zero weight.
pub fn transform_weights(lambda: &WeightVector) -> Result<WeightVector> {
    if let Some(w) = lambda.iter().find(|w| **w <= 0.0) {
        return Err(Error::Domain(format!(
            "reciprocal transform needs strictly positive weights, got {w}"
        )));
    }
    let recip: Vec<f64> = lambda.iter().map(|w| 1.0 / w).collect();
    WeightVector::normalized(recip)
}
