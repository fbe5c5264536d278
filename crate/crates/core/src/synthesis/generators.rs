use rand::Rng;
use rand_distr::{Exp1, Gamma, StandardNormal};

use super::{DistributionSpec, Margin};
use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{chi2_quantile, RngStream};

fn default_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("V{j}")).collect()
}

/// `n × d` i.i.d. standard normal draws, filled row by row.
pub fn gen_std_normal(n: usize, d: usize, rng: &mut RngStream) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::Dimension(format!("cannot generate a {n} x {d} sample")));
    }
    let mut cols = vec![Vec::with_capacity(n); d];
    for _ in 0..n {
        for col in cols.iter_mut() {
            col.push(rng.sample(StandardNormal));
        }
    }
    Dataset::complete(cols, default_names(d))
}

/// Clayton copula sample via the gamma-frailty construction: with
/// `V ~ Gamma(1/θ, 1)` and i.i.d. `Eᵢ ~ Exp(1)`, the vector
/// `Uᵢ = (1 + Eᵢ/V)^(-1/θ)` has the Clayton copula. Margins are applied by
/// inverse CDF.
pub fn gen_clayton(n: usize, spec: &DistributionSpec, rng: &mut RngStream) -> Result<Dataset> {
    let (d, theta, margins) = match spec {
        DistributionSpec::Clayton { dim, theta, margins } => (*dim, *theta, margins),
        _ => return Err(Error::Spec("gen_clayton needs a clayton distribution".into())),
    };
    spec.validate()?;
    if n == 0 {
        return Err(Error::Dimension("cannot generate an empty sample".into()));
    }
    let frailty = Gamma::new(1.0 / theta, 1.0)
        .map_err(|e| Error::Spec(format!("invalid Clayton parameter {theta}: {e}")))?;
    // Keeps u strictly inside (0, 1) so that every inverse CDF is finite.
    let hi = 1.0 - f64::EPSILON / 2.0;
    let mut cols = vec![Vec::with_capacity(n); d];
    for _ in 0..n {
        let v: f64 = rng.sample(frailty);
        for (col, margin) in cols.iter_mut().zip(margins) {
            let e: f64 = rng.sample(Exp1);
            let u = (1.0 + e / v).powf(-1.0 / theta).clamp(f64::MIN_POSITIVE, hi);
            col.push(apply_margin(*margin, u)?);
        }
    }
    Dataset::complete(cols, default_names(d))
}

fn apply_margin(margin: Margin, u: f64) -> Result<f64> {
    Ok(match margin {
        Margin::Uniform => u,
        Margin::Exp => -(-u).ln_1p(),
        Margin::Chisq4 => chi2_quantile(u, 4.0)?,
    })
}

/// Kendall's τ-a by direct pair counting, O(n²).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    let mut score: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let s = (x[i] - x[j]).signum() * (y[i] - y[j]).signum();
            score += s as i64;
        }
    }
    score as f64 / (n * (n - 1) / 2) as f64
}
