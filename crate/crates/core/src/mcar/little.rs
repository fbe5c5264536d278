use super::em::{em_mvn, patterns, EmOptions};
use super::{check_alpha, Method, TestResult};
use crate::datamodel::{response_matrix, ColumnRoles, Dataset};
use crate::error::{Error, Result};
use crate::numerics::{chi2_sf, cov_matrix, VarMode};

/// Little's `d²` for univariate nonresponse, in closed form over the
/// complete columns:
///
/// `d² = n R̄²(1−R̄) L Σ̃⁻¹ Lᵀ + n R̄(1−R̄)² L′ Σ̃⁻¹ L′ᵀ`
///
/// where `L` (`L′`) is the mean of the complete columns over rows with the
/// incomplete value observed (missing) minus the overall mean, and
/// `Σ̃ = Cov_ML(X) · R̄(1−R̄)`. Referred to `χ²` with `p` degrees of freedom.
pub fn d2_univariate(ds: &Dataset, roles: &ColumnRoles, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    if roles.q() != 1 {
        return Err(Error::Dimension(format!(
            "the closed-form d² needs exactly one incomplete column, got {}",
            roles.q()
        )));
    }
    let resp = response_matrix(ds, roles)?;
    let r = resp.column(0);
    let n = ds.n_rows();
    let n_obs = r.iter().filter(|&&v| v == 1.0).count();
    if n_obs == 0 || n_obs == n {
        return Err(Error::ZeroVariance(format!(
            "column '{}' must have both observed and missing rows",
            ds.names()[roles.incomplete()[0]]
        )));
    }
    let nf = n as f64;
    let r_bar = n_obs as f64 / nf;

    let xs: Vec<&[f64]> = roles.complete().iter().map(|&j| ds.column(j)).collect();
    let sigma = cov_matrix(&xs, VarMode::Ml)?.scaled(r_bar * (1.0 - r_bar));
    let inv = sigma
        .inverse()
        .map_err(|e| e.singular_in("the ML covariance of the complete columns"))?;

    let mut l_obs = Vec::with_capacity(xs.len());
    let mut l_mis = Vec::with_capacity(xs.len());
    for x in &xs {
        let mean = x.iter().sum::<f64>() / nf;
        let (mut s_obs, mut s_mis) = (0.0, 0.0);
        for (xi, ri) in x.iter().zip(r) {
            if *ri == 1.0 {
                s_obs += xi - mean;
            } else {
                s_mis += xi - mean;
            }
        }
        l_obs.push(s_obs / n_obs as f64);
        l_mis.push(s_mis / (n - n_obs) as f64);
    }

    let statistic = nf * r_bar * r_bar * (1.0 - r_bar) * inv.quad_form(&l_obs)
        + nf * r_bar * (1.0 - r_bar) * (1.0 - r_bar) * inv.quad_form(&l_mis);
    let df = roles.p();
    let p_value = chi2_sf(statistic.max(0.0), df as f64)?;
    Ok(TestResult::new(Method::D2Univariate, statistic, df, p_value, alpha)
        .note("n", n)
        .note("observed", n_obs)
        .note("missing", n - n_obs))
}

/// Little's general `d²` over every column of the dataset:
///
/// `d² = Σ_j n_j (ȳ_j − μ̂_j) Σ̂_j⁻¹ (ȳ_j − μ̂_j)ᵀ`
///
/// summed over missingness patterns `j`, with `(μ̂, Σ̂)` the EM estimates
/// restricted to the variables observed in the pattern, and
/// `df = Σ_j p_j − d`. Rows with nothing observed are dropped.
pub fn d2_general(ds: &Dataset, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let pats = patterns(ds);
    if pats.len() < 2 {
        return Err(Error::SinglePattern);
    }
    let fit = em_mvn(ds, &EmOptions::default())?;
    let d = ds.n_cols();
    let mut statistic = 0.0;
    let mut observed_vars = 0;
    for pat in &pats {
        let k = pat.obs.len();
        observed_vars += k;
        let rows = pat.rows.len() as f64;
        let diff: Vec<f64> = pat
            .obs
            .iter()
            .map(|&j| pat.rows.iter().map(|&i| ds.column(j)[i]).sum::<f64>() / rows - fit.mean[j])
            .collect();
        let inv = fit
            .cov
            .submatrix(&pat.obs)
            .inverse()
            .map_err(|e| e.singular_in("a pattern block of the EM covariance"))?;
        statistic += rows * inv.quad_form(&diff);
        debug_assert_eq!(diff.len(), k);
    }
    if observed_vars <= d {
        return Err(Error::Domain(format!(
            "Little's test has {} degrees of freedom for these patterns",
            observed_vars as i64 - d as i64
        )));
    }
    let df = observed_vars - d;
    let p_value = chi2_sf(statistic.max(0.0), df as f64)?;
    Ok(TestResult::new(Method::D2General, statistic, df, p_value, alpha)
        .note("patterns", pats.len())
        .note("em_iterations", fit.iterations)
        .note("em_converged", fit.converged)
        .note("em_ridge", fit.ridge_applied))
}
