use crate::error::{Error, Result};

use super::FeatureVector;

/// Dimensions whose training standard deviation falls below this are left
/// untouched by the scaler.
pub const MIN_STD: f64 = 1e-12;

/// Per-dimension z-score standardization (population statistics).
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[FeatureVector]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: rows.len(),
            });
        }
        let dim = rows[0].values.len();
        if let Some(bad) = rows.iter().find(|r| r.values.len() != dim) {
            return Err(Error::LayoutMismatch(format!(
                "scaler rows of length {dim} and {}",
                bad.values.len()
            )));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(&row.values) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(&row.values).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Scaler { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_in_place(&self, values: &mut [f64]) {
        for ((v, m), s) in values.iter_mut().zip(&self.mean).zip(&self.std) {
            if *s >= MIN_STD {
                *v = (*v - m) / s;
            }
        }
    }

    pub fn apply(&self, x: &FeatureVector) -> Result<FeatureVector> {
        if x.values.len() != self.dim() {
            return Err(Error::LayoutMismatch(format!(
                "scaler expects {} dims, vector has {}",
                self.dim(),
                x.values.len()
            )));
        }
        let mut out = x.clone();
        self.apply_in_place(&mut out.values);
        Ok(out)
    }
}
