//! Per-symbol probability tables over a modulation alphabet.

use crate::error::{Error, Result};

/// Row-stochastic `N × |A|` table; row `m` is the distribution of symbol `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolBeliefs {
    q: usize,
    probs: Vec<f64>,
}

impl SymbolBeliefs {
    pub fn uniform(n: usize, q: usize) -> Self {
        Self {
            q,
            probs: vec![1.0 / q as f64; n * q],
        }
    }

    /// Builds a table from nonnegative weights, normalizing every row.
    pub fn from_weights(q: usize, weights: Vec<f64>) -> Result<Self> {
        if q == 0 || !weights.len().is_multiple_of(q) {
            return Err(Error::LengthMismatch {
                expected: q.max(1) * (weights.len() / q.max(1)),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::NonFinite("belief weights"));
        }
        let mut out = Self { q, probs: weights };
        for row in out.probs.chunks_mut(q) {
            let s: f64 = row.iter().sum();
            if s <= 0.0 {
                return Err(Error::InvalidArgument("belief row has zero mass".into()));
            }
            row.iter_mut().for_each(|p| *p /= s);
        }
        Ok(out)
    }

    /// Builds a table from unnormalized log weights, one row per symbol.
    pub fn from_log_weights(q: usize, logs: &[f64]) -> Result<Self> {
        if q == 0 || !logs.len().is_multiple_of(q) {
            return Err(Error::LengthMismatch {
                expected: q.max(1) * (logs.len() / q.max(1)),
                actual: logs.len(),
            });
        }
        let mut probs = vec![0.0; logs.len()];
        for (dst, src) in probs.chunks_mut(q).zip(logs.chunks(q)) {
            normalize_log_row(src, dst)?;
        }
        Ok(Self { q, probs })
    }

    pub fn n(&self) -> usize {
        self.probs.len() / self.q
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.probs[m * self.q..(m + 1) * self.q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.q)
    }

    /// Largest entrywise difference to another table of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Argmax per row; ties go to the lowest alphabet index.
    pub fn argmax(&self) -> Vec<usize> {
        self.rows()
            .map(|row| {
                let mut best = 0;
                for (i, &p) in row.iter().enumerate().skip(1) {
                    if p > row[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

/// Writes `exp(src - max) / Σ` into `dst`.
pub(crate) fn normalize_log_row(src: &[f64], dst: &mut [f64]) -> Result<()> {
    let max = src.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NonFinite("log belief row"));
    }
    let mut s = 0.0;
    for (d, &v) in dst.iter_mut().zip(src) {
        *d = (v - max).exp();
        s += *d;
    }
    dst.iter_mut().for_each(|d| *d /= s);
    Ok(())
}
