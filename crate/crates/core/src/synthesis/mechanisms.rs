use rand::seq::index::sample_weighted;
use rand::Rng;

use super::MeanRule;
use crate::datamodel::{ColumnRoles, Dataset};
use crate::error::{Error, Result};
use crate::numerics::{ranks, RngStream};

/// Default pairing: incomplete column `v` is controlled by complete column
/// `v mod p`.
pub fn default_controls(p: usize, q: usize) -> Vec<usize> {
    (0..q).map(|v| v % p.max(1)).collect()
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Spec(format!("probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn control_column<'a>(ds: &'a Dataset, roles: &ColumnRoles, controls: &[usize], v: usize) -> Result<&'a [f64]> {
    if controls.len() != roles.q() {
        return Err(Error::Spec(format!(
            "{} control columns for {} incomplete columns",
            controls.len(),
            roles.q()
        )));
    }
    let k = controls[v];
    let j = *roles.complete().get(k).ok_or_else(|| {
        Error::Spec(format!("control {k} is not a complete column (p = {})", roles.p()))
    })?;
    Ok(ds.column(j))
}

/// Bernoulli masking of every incomplete column with per-row probabilities.
fn mask_bernoulli(
    ds: &Dataset,
    roles: &ColumnRoles,
    rng: &mut RngStream,
    mut prob: impl FnMut(usize, usize) -> Result<Vec<f64>>,
) -> Result<Dataset> {
    let mut out = ds.clone();
    for (v, &j) in roles.incomplete().iter().enumerate() {
        let probs = prob(v, j)?;
        let drop: Vec<bool> = probs.iter().map(|&p| rng.random::<f64>() < p).collect();
        out.mask_cells(j, |i| drop[i]);
    }
    Ok(out)
}

/// Each incomplete cell missing independently with probability `p`.
pub fn apply_mcar(ds: &Dataset, roles: &ColumnRoles, p: f64, rng: &mut RngStream) -> Result<Dataset> {
    check_prob(p)?;
    let n = ds.n_rows();
    mask_bernoulli(ds, roles, rng, |_, _| Ok(vec![p; n]))
}

/// Group rates `(p_low, p_high)` with `p_high = x · p_low` and mean `p`:
/// `p_low = 2p/(x+1)`, `p_high = 2px/(x+1)`.
pub fn one_to_x_rates(p: f64, x: f64) -> Result<(f64, f64)> {
    check_prob(p)?;
    if !(x >= 1.0 && x.is_finite()) {
        return Err(Error::Spec(format!("odds must be at least 1, got {x}")));
    }
    let low = 2.0 * p / (x + 1.0);
    let high = 2.0 * p * x / (x + 1.0);
    if high > 1.0 {
        return Err(Error::Spec(format!(
            "prob {p} with odds {x} needs a missingness rate of {high} above the median"
        )));
    }
    Ok((low, high))
}

fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// MAR "1 to x": rows whose control value is strictly above the control's
/// median are masked with `p_high`, the rest with `p_low`.
pub fn apply_mar_1_to_x(
    ds: &Dataset,
    roles: &ColumnRoles,
    p: f64,
    x: f64,
    controls: &[usize],
    rng: &mut RngStream,
) -> Result<Dataset> {
    let (low, high) = one_to_x_rates(p, x)?;
    mask_bernoulli(ds, roles, rng, |v, _| {
        let c = control_column(ds, roles, controls, v)?;
        let med = median(c);
        Ok(c.iter().map(|&cv| if cv > med { high } else { low }).collect())
    })
}

/// MAR rank: exactly `round(n·p)` cells per incomplete column, drawn without
/// replacement with weights equal to the ranks of the control column.
pub fn apply_mar_rank(
    ds: &Dataset,
    roles: &ColumnRoles,
    p: f64,
    controls: &[usize],
    rng: &mut RngStream,
) -> Result<Dataset> {
    check_prob(p)?;
    let n = ds.n_rows();
    let m = ((n as f64) * p).round() as usize;
    let mut out = ds.clone();
    for (v, &j) in roles.incomplete().iter().enumerate() {
        let weights = ranks(control_column(ds, roles, controls, v)?);
        let chosen = sample_weighted(rng, n, |i| weights[i], m.min(n))
            .map_err(|e| Error::Spec(format!("weighted sampling failed: {e}")))?;
        let mut drop = vec![false; n];
        for i in chosen.iter() {
            drop[i] = true;
        }
        out.mask_cells(j, |i| drop[i]);
    }
    Ok(out)
}

/// MAR mean: per incomplete column, `p_high` where the control is strictly
/// greater than its mean and `p_low` otherwise.
pub fn apply_mar_mean(
    ds: &Dataset,
    roles: &ColumnRoles,
    rules: &[MeanRule],
    rng: &mut RngStream,
) -> Result<Dataset> {
    if rules.len() != roles.q() {
        return Err(Error::Spec(format!(
            "{} MAR-mean rules for {} incomplete columns",
            rules.len(),
            roles.q()
        )));
    }
    for r in rules {
        check_prob(r.p_high)?;
        check_prob(r.p_low)?;
    }
    let controls: Vec<usize> = rules.iter().map(|r| r.control).collect();
    mask_bernoulli(ds, roles, rng, |v, _| {
        let c = control_column(ds, roles, &controls, v)?;
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        Ok(c.iter()
            .map(|&cv| if cv > mean { rules[v].p_high } else { rules[v].p_low })
            .collect())
    })
}
