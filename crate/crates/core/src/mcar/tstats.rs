use crate::datamodel::{response_matrix, ColumnRoles, Dataset};
use crate::error::{Error, Result};

/// Pairwise `T` statistics between complete column `u` and response
/// indicator `v`, row-major in `u` (the ordering `(1,1), …, (1,q), (2,1), …`).
#[derive(Debug, Clone, PartialEq)]
pub struct TStats {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    /// Unbiased U-statistic form.
    pub t: Vec<f64>,
    /// Plug-in form `X̄·R̄ − mean(X·R)`.
    pub t_biased: Vec<f64>,
}

impl TStats {
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.t[u * self.q + v]
    }

    pub fn get_biased(&self, u: usize, v: usize) -> f64 {
        self.t_biased[u * self.q + v]
    }
}

/// Returns `(t, t_biased)` for one complete column and one response column.
///
/// `t_biased = X̄·R̄ − mean(X·R) = −(1/n) Σ (Xᵢ − X̄) Rᵢ` is evaluated on
/// centred values, and `t = t_biased · n/(n−1)`, which equals
/// `Σ_{i≠j} XᵢRⱼ / (n(n−1)) − Σ XᵢRᵢ / n`.
pub fn compute_t(x: &[f64], r: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if r.len() != n {
        return Err(Error::Dimension(format!(
            "complete column has {n} rows, response column {}",
            r.len()
        )));
    }
    if n < 2 {
        return Err(Error::Domain(format!("T statistic needs n >= 2, got {n}")));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let t_biased = -x.iter().zip(r).map(|(xi, ri)| (xi - mean) * ri).sum::<f64>() / nf;
    Ok((t_biased * (nf / (nf - 1.0)), t_biased))
}

pub fn t_matrix(ds: &Dataset, roles: &ColumnRoles) -> Result<TStats> {
    let resp = response_matrix(ds, roles)?;
    let (p, q, n) = (roles.p(), roles.q(), ds.n_rows());
    let mut t = Vec::with_capacity(p * q);
    let mut t_biased = Vec::with_capacity(p * q);
    for &xj in roles.complete() {
        for v in 0..q {
            let (a, b) = compute_t(ds.column(xj), resp.column(v))?;
            t.push(a);
            t_biased.push(b);
        }
    }
    Ok(TStats {
        p,
        q,
        n,
        t,
        t_biased,
    })
}
