use serde::{Deserialize, Serialize};

use super::{check_alpha, t_matrix, Method, TStats, TestResult};
use crate::datamodel::{response_matrix, ColumnRoles, Dataset};
use crate::error::{Error, Result};
use crate::numerics::{chi2_sf, column_var, cov_matrix, kronecker, normal_cdf, SymMatrix, VarMode};

/// Estimated covariance of the stacked `T` vector: `Cov(X) ⊗ Cov(R)`, both
/// factors in the requested mode. With one incomplete column this is
/// `Cov(X)·Var(R)`.
///
/// Fails with [`Error::SingularMatrix`] when the product is not positive
/// definite (a constant complete column, a response column that is all
/// zeros or all ones, or perfectly correlated columns).
pub fn sigma_hat(ds: &Dataset, roles: &ColumnRoles, mode: VarMode) -> Result<SymMatrix> {
    let sigma = sigma_unchecked(ds, roles, mode)?;
    sigma.eigen_pd().map_err(|e| e.singular_in("the covariance estimate of T"))?;
    Ok(sigma)
}

fn sigma_unchecked(ds: &Dataset, roles: &ColumnRoles, mode: VarMode) -> Result<SymMatrix> {
    let resp = response_matrix(ds, roles)?;
    let xs: Vec<&[f64]> = roles.complete().iter().map(|&j| ds.column(j)).collect();
    let rs: Vec<&[f64]> = (0..resp.q()).map(|v| resp.column(v)).collect();
    Ok(kronecker(&cov_matrix(&xs, mode)?, &cov_matrix(&rs, mode)?))
}

/// Algebraically equivalent ways of evaluating `A_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnRoute {
    /// `n · Tᵀ Σ̂⁻¹ T` with the unbiased `T` and covariance.
    Unbiased,
    /// `n · T̃ᵀ Σ̃⁻¹ T̃` with the plug-in `T̃` and the ML covariance.
    MaxLikelihood,
    /// Sum of squares of `Σ̂^{-1/2} · √n T`.
    InvSqrtComponents,
}

fn check_sizes(ds: &Dataset, roles: &ColumnRoles) -> Result<()> {
    if roles.p() == 0 {
        return Err(Error::NoCompleteColumns);
    }
    if roles.q() == 0 {
        return Err(Error::NoIncompleteColumns);
    }
    if ds.n_rows() < 3 {
        return Err(Error::Domain(format!("A_n needs n >= 3, got {}", ds.n_rows())));
    }
    Ok(())
}

pub fn a_n_statistic(ds: &Dataset, roles: &ColumnRoles, route: AnRoute) -> Result<f64> {
    check_sizes(ds, roles)?;
    let ts = t_matrix(ds, roles)?;
    let n = ds.n_rows() as f64;
    let ctx = "the covariance estimate of T";
    Ok(match route {
        AnRoute::Unbiased => {
            let inv = sigma_unchecked(ds, roles, VarMode::Unbiased)?
                .inverse()
                .map_err(|e| e.singular_in(ctx))?;
            n * inv.quad_form(&ts.t)
        }
        AnRoute::MaxLikelihood => {
            let inv = sigma_unchecked(ds, roles, VarMode::Ml)?
                .inverse()
                .map_err(|e| e.singular_in(ctx))?;
            n * inv.quad_form(&ts.t_biased)
        }
        AnRoute::InvSqrtComponents => components(ds, roles, &ts)?.iter().map(|a| a * a).sum(),
    })
}

/// The standardized vector `Σ̂^{-1/2} · √n T`, ordered like [`TStats::t`].
/// Asymptotically standard normal under MCAR.
pub fn a_n_components(ds: &Dataset, roles: &ColumnRoles) -> Result<Vec<f64>> {
    check_sizes(ds, roles)?;
    let ts = t_matrix(ds, roles)?;
    components(ds, roles, &ts)
}

fn components(ds: &Dataset, roles: &ColumnRoles, ts: &TStats) -> Result<Vec<f64>> {
    let root = sigma_unchecked(ds, roles, VarMode::Unbiased)?
        .inv_sqrt()
        .map_err(|e| e.singular_in("the covariance estimate of T"))?;
    let sqrt_n = (ds.n_rows() as f64).sqrt();
    let scaled: Vec<f64> = ts.t.iter().map(|t| t * sqrt_n).collect();
    Ok(root.mul_vec(&scaled))
}

/// The `A_n` test of MCAR, referred to `χ²` with `p·q` degrees of freedom.
pub fn a_n_test(ds: &Dataset, roles: &ColumnRoles, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_sizes(ds, roles)?;
    let ts = t_matrix(ds, roles)?;
    let sigma = sigma_unchecked(ds, roles, VarMode::Unbiased)?;
    let eig = sigma
        .eigen_pd()
        .map_err(|e| e.singular_in("the covariance estimate of T"))?;
    let n = ds.n_rows() as f64;
    let statistic = (n * eig.compose(|l| 1.0 / l).quad_form(&ts.t)).max(0.0);
    let df = ts.p * ts.q;
    let p_value = chi2_sf(statistic, df as f64)?;

    let sqrt_n = n.sqrt();
    let scaled: Vec<f64> = ts.t.iter().map(|t| t * sqrt_n).collect();
    let comps = eig.compose(|l| 1.0 / l.sqrt()).mul_vec(&scaled);
    let cond = eig.values[eig.values.len() - 1] / eig.values[0];

    let mut result = TestResult::new(Method::An, statistic, df, p_value, alpha)
        .note("n", ds.n_rows())
        .note("p", ts.p)
        .note("q", ts.q)
        .note("condition_number", cond);
    for u in 0..ts.p {
        for v in 0..ts.q {
            result = result.note(&format!("component_{}_{}", u + 1, v + 1), comps[u * ts.q + v]);
        }
    }
    Ok(result)
}

fn dn_inputs(ds: &Dataset, roles: &ColumnRoles) -> Result<(f64, f64, f64, f64)> {
    if roles.p() != 1 || roles.q() != 1 {
        return Err(Error::Dimension(format!(
            "D_n needs exactly one complete and one incomplete column, got {} and {}",
            roles.p(),
            roles.q()
        )));
    }
    let n = ds.n_rows();
    if n < 3 {
        return Err(Error::Domain(format!("D_n needs n >= 3, got {n}")));
    }
    let resp = response_matrix(ds, roles)?;
    let x = ds.column(roles.complete()[0]);
    let r = resp.column(0);
    let (t, _) = super::compute_t(x, r)?;
    let sx = column_var(x, VarMode::Unbiased)?.sqrt();
    let sr = column_var(r, VarMode::Unbiased)?.sqrt();
    if sx == 0.0 {
        return Err(Error::ZeroVariance(format!(
            "complete column '{}' is constant",
            ds.names()[roles.complete()[0]]
        )));
    }
    if sr == 0.0 {
        return Err(Error::ZeroVariance(format!(
            "column '{}' is either fully observed or fully missing",
            ds.names()[roles.incomplete()[0]]
        )));
    }
    Ok((n as f64, t, sx, sr))
}

/// `D_n = √n · T / (S_X · S_R)` with unbiased standard deviations.
pub fn d_n_statistic(ds: &Dataset, roles: &ColumnRoles) -> Result<f64> {
    let (n, t, sx, sr) = dn_inputs(ds, roles)?;
    Ok(n.sqrt() * t / (sx * sr))
}

/// Two-sided normal test on `D_n`: reject when `|D_n| ≥ Φ⁻¹(1 − α/2)`,
/// equivalently when `2(1 − Φ(|D_n|)) ≤ α`.
pub fn d_n_test(ds: &Dataset, roles: &ColumnRoles, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let (n, t, sx, sr) = dn_inputs(ds, roles)?;
    let d = n.sqrt() * t / (sx * sr);
    let p_value = (2.0 * normal_cdf(-d.abs())).min(1.0);
    Ok(TestResult::new(Method::Dn, d, 1, p_value, alpha)
        .note("n", n)
        .note("t", t)
        .note("sd_x", sx)
        .note("sd_r", sr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal_quantile;

    fn bivariate(x: Vec<f64>, observed: Vec<bool>) -> (Dataset, ColumnRoles) {
        let n = x.len();
        let ds = Dataset::new(
            vec![x, vec![0.0; n]],
            vec![vec![true; n], observed],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let roles = ColumnRoles::new(&ds, vec![0], vec![1]).unwrap();
        (ds, roles)
    }

    #[test]
    fn sigma_hand_case() {
        let (ds, roles) = bivariate(vec![1.0, 2.0, 3.0], vec![true, true, false]);
        let s = sigma_hat(&ds, &roles, VarMode::Unbiased).unwrap();
        assert!((s.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        let ml = sigma_hat(&ds, &roles, VarMode::Ml).unwrap();
        assert!((s.get(0, 0) - ml.get(0, 0) * 2.25).abs() < 1e-15);
    }

    #[test]
    fn constant_response_is_singular() {
        let (ds, roles) = bivariate(vec![1.0, 2.0, 3.0, 4.0], vec![true; 4]);
        let err = sigma_hat(&ds, &roles, VarMode::Unbiased).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
        assert!(matches!(
            a_n_test(&ds, &roles, 0.05).unwrap_err(),
            Error::SingularMatrix { .. }
        ));
    }

    #[test]
    fn zero_statistic_when_means_coincide() {
        let (ds, roles) = bivariate(vec![1.0, 2.0, 1.0, 2.0], vec![true, false, false, true]);
        let res = a_n_test(&ds, &roles, 0.05).unwrap();
        assert!(res.statistic.abs() < 1e-15);
        assert_eq!(res.p_value, 1.0);
        assert!(!res.reject);
    }

    #[test]
    fn hand_case_statistics() {
        let (ds, roles) = bivariate(vec![1.0, 2.0, 3.0], vec![true, true, false]);
        let a = a_n_test(&ds, &roles, 0.05).unwrap();
        assert!((a.statistic - 2.25).abs() < 1e-13);
        assert_eq!(a.df, 1);
        assert!((a.p_value - chi2_sf(2.25, 1.0).unwrap()).abs() < 1e-15);
        let d = d_n_test(&ds, &roles, 0.05).unwrap();
        assert!((d.statistic - 1.5).abs() < 1e-13);
    }

    #[test]
    fn d_n_sign_equivariance() {
        let x = vec![0.3, -1.2, 2.2, 0.9, 1.7, -0.4];
        let obs = vec![true, false, true, true, false, true];
        let (ds, roles) = bivariate(x.clone(), obs.clone());
        let (neg, _) = bivariate(x.iter().map(|v| -v).collect(), obs);
        let a = d_n_test(&ds, &roles, 0.05).unwrap();
        let b = d_n_test(&neg, &roles, 0.05).unwrap();
        assert!((a.statistic + b.statistic).abs() < 1e-14);
        assert!((a.p_value - b.p_value).abs() < 1e-15);
    }

    #[test]
    fn d_n_rejection_region_matches_quantile() {
        let x = vec![0.1, 0.2, 0.3, 0.4, 5.0, 6.0, 7.0, 8.0];
        let obs = vec![true, true, true, true, false, false, false, true];
        let (ds, roles) = bivariate(x, obs);
        for alpha in [0.01, 0.05, 0.1, 0.5] {
            let res = d_n_test(&ds, &roles, alpha).unwrap();
            let crit = normal_quantile(1.0 - alpha / 2.0).unwrap();
            assert_eq!(res.reject, res.statistic.abs() >= crit, "alpha {alpha}");
        }
    }

    #[test]
    fn d_n_errors() {
        let (ds, roles) = bivariate(vec![1.0, 2.0, 3.0], vec![true; 3]);
        assert!(matches!(d_n_test(&ds, &roles, 0.05).unwrap_err(), Error::ZeroVariance(_)));
        let (ds, roles) = bivariate(vec![2.0; 3], vec![true, false, true]);
        assert!(matches!(d_n_test(&ds, &roles, 0.05).unwrap_err(), Error::ZeroVariance(_)));

        let ds = Dataset::new(
            vec![vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 1.0], vec![1.0; 3]],
            vec![vec![true; 3], vec![true; 3], vec![false, true, true]],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let roles = ColumnRoles::infer(&ds).unwrap();
        assert!(matches!(d_n_test(&ds, &roles, 0.05).unwrap_err(), Error::Dimension(_)));
    }

    #[test]
    fn alpha_one_always_rejects() {
        let (ds, roles) = bivariate(vec![1.0, 2.0, 1.0, 2.0], vec![true, false, false, true]);
        assert!(a_n_test(&ds, &roles, 1.0).unwrap().reject);
        assert!(a_n_test(&ds, &roles, 0.0).is_err());
    }
}
