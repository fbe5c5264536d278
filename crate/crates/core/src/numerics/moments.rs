use serde::{Deserialize, Serialize};

use super::SymMatrix;
use crate::error::{Error, Result};

/// Divisor convention for second moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarMode {
    /// Divide by `n - 1`.
    Unbiased,
    /// Maximum likelihood: divide by `n`.
    Ml,
}

impl VarMode {
    fn min_len(self) -> usize {
        match self {
            VarMode::Unbiased => 2,
            VarMode::Ml => 1,
        }
    }

    fn divisor(self, n: usize) -> f64 {
        match self {
            VarMode::Unbiased => (n - 1) as f64,
            VarMode::Ml => n as f64,
        }
    }
}

pub fn column_mean(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Domain("mean of an empty vector".into()));
    }
    Ok(x.iter().sum::<f64>() / x.len() as f64)
}

pub fn column_var(x: &[f64], mode: VarMode) -> Result<f64> {
    check_len(x.len(), mode)?;
    let mean = column_mean(x)?;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(ss / mode.divisor(x.len()))
}

/// Covariance matrix of `cols`, each of which is one variable observed on the
/// same `n` units.
///
/// Both modes share the centred cross-product sums, so
/// `unbiased == ml * n / (n - 1)` entry by entry.
pub fn cov_matrix(cols: &[&[f64]], mode: VarMode) -> Result<SymMatrix> {
    let m = cols.len();
    if m == 0 {
        return Err(Error::Dimension("covariance of zero variables".into()));
    }
    let n = cols[0].len();
    if let Some(bad) = cols.iter().position(|c| c.len() != n) {
        return Err(Error::Dimension(format!(
            "variable {} has length {}, expected {n}",
            bad + 1,
            cols[bad].len()
        )));
    }
    check_len(n, mode)?;

    let centred: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / n as f64;
            c.iter().map(|v| v - mean).collect()
        })
        .collect();
    let div = mode.divisor(n);
    let mut out = SymMatrix::zeros(m);
    for a in 0..m {
        for b in a..m {
            let s: f64 = centred[a]
                .iter()
                .zip(&centred[b])
                .map(|(x, y)| x * y)
                .sum();
            out.set_sym(a, b, s / div);
        }
    }
    Ok(out)
}

fn check_len(n: usize, mode: VarMode) -> Result<()> {
    if n < mode.min_len() {
        return Err(Error::Domain(format!(
            "{mode:?} variance needs at least {} values, got {n}",
            mode.min_len()
        )));
    }
    Ok(())
}
