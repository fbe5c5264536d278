use std::collections::BTreeMap;

use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{SymEigen, SymMatrix};

#[derive(Debug, Clone, Copy)]
pub struct EmOptions {
    /// Stop once the log-likelihood increases by less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

/// Maximum likelihood estimate of a multivariate normal from incomplete data.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub mean: Vec<f64>,
    pub cov: SymMatrix,
    /// Observed-data log-likelihood of every visited iterate, starting with
    /// the initial guess.
    pub loglik_trace: Vec<f64>,
    /// Number of EM updates applied.
    pub iterations: usize,
    pub converged: bool,
    /// Set when a singular observed block had to be regularised.
    pub ridge_applied: bool,
}

impl EmFit {
    /// Conditional mean of the missing entries given the observed ones;
    /// observed entries are returned unchanged.
    pub fn impute_row(&self, row: &[Option<f64>]) -> Result<Vec<f64>> {
        let obs: Vec<usize> = (0..row.len()).filter(|&j| row[j].is_some()).collect();
        let mis: Vec<usize> = (0..row.len()).filter(|&j| row[j].is_none()).collect();
        let mut out: Vec<f64> = row
            .iter()
            .enumerate()
            .map(|(j, v)| v.unwrap_or(self.mean[j]))
            .collect();
        if mis.is_empty() || obs.is_empty() {
            return Ok(out);
        }
        let (inv, _, _) = invert_block(&self.cov.submatrix(&obs))?;
        let resid: Vec<f64> = obs.iter().map(|&j| out[j] - self.mean[j]).collect();
        let w = inv.mul_vec(&resid);
        for &m in &mis {
            out[m] += obs.iter().zip(&w).map(|(&o, wi)| self.cov.get(m, o) * wi).sum::<f64>();
        }
        Ok(out)
    }
}

/// Rows sharing one observation pattern.
pub(crate) struct Pattern {
    pub obs: Vec<usize>,
    pub mis: Vec<usize>,
    pub rows: Vec<usize>,
}

/// Groups rows by observation pattern, dropping rows with nothing observed.
/// Patterns are ordered by their mask for determinism.
pub(crate) fn patterns(ds: &Dataset) -> Vec<Pattern> {
    let d = ds.n_cols();
    let mut groups: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for i in 0..ds.n_rows() {
        let key: Vec<bool> = (0..d).map(|j| ds.is_observed(i, j)).collect();
        if key.iter().any(|&o| o) {
            groups.entry(key).or_default().push(i);
        }
    }
    groups
        .into_iter()
        .rev()
        .map(|(key, rows)| Pattern {
            obs: (0..d).filter(|&j| key[j]).collect(),
            mis: (0..d).filter(|&j| !key[j]).collect(),
            rows,
        })
        .collect()
}

/// Inverse and log-determinant of an observed-block covariance. A singular
/// block gets `1e-8 · trace / k` added to its diagonal once; the flag
/// reports whether that happened.
fn invert_block(block: &SymMatrix) -> Result<(SymMatrix, f64, bool)> {
    let finish = |eig: SymEigen| {
        let ln_det = eig.values.iter().map(|l| l.ln()).sum::<f64>();
        (eig.compose(|l| 1.0 / l), ln_det)
    };
    match block.eigen_pd() {
        Ok(eig) => {
            let (inv, ln_det) = finish(eig);
            Ok((inv, ln_det, false))
        }
        Err(_) => {
            let k = block.order();
            let ridge = 1e-8 * block.trace() / k as f64;
            let mut ridged = block.clone();
            for i in 0..k {
                ridged.set_sym(i, i, block.get(i, i) + ridge);
            }
            let eig = ridged
                .eigen_pd()
                .map_err(|e| e.singular_in("an observed-block covariance during EM"))?;
            let (inv, ln_det) = finish(eig);
            Ok((inv, ln_det, true))
        }
    }
}

/// EM for the mean and covariance of a multivariate normal with missing
/// values.
///
/// The E-step replaces missing entries by their conditional means given the
/// observed entries and adds the conditional covariance of the missing block
/// to the cross-products; the M-step takes the ML moments of the completed
/// sufficient statistics. Rows without any observed value carry no
/// information and are ignored. Without missing cells the ML moments are
/// returned after a single update.
pub fn em_mvn(ds: &Dataset, opts: &EmOptions) -> Result<EmFit> {
    let d = ds.n_cols();
    let pats = patterns(ds);
    let n: usize = pats.iter().map(|p| p.rows.len()).sum();
    if n <= d {
        return Err(Error::Dimension(format!(
            "EM needs more rows with observed data than columns ({n} <= {d})"
        )));
    }
    for j in 0..d {
        if ds.missing_count(j) == ds.n_rows() {
            return Err(Error::EmptyColumn(ds.names()[j].clone()));
        }
    }

    // Start from available-case means and variances.
    let mut mean = vec![0.0; d];
    let mut var = vec![0.0; d];
    for j in 0..d {
        let vals: Vec<f64> = (0..ds.n_rows()).filter_map(|i| ds.value(i, j)).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        mean[j] = m;
        var[j] = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64;
    }
    let mut cov = SymMatrix::diagonal(&var);

    let complete_data = pats.len() == 1 && pats[0].mis.is_empty();
    let mut trace = Vec::new();
    let mut ridge_applied = false;
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..=opts.max_iter {
        let (ll, next_mean, next_cov, ridged) = em_step(ds, &pats, n, &mean, &cov)?;
        ridge_applied |= ridged;
        if complete_data {
            // The first M-step is already the exact ML estimate.
            mean = next_mean;
            cov = next_cov;
            iterations = 1;
            let (ll, _, _, _) = em_step(ds, &pats, n, &mean, &cov)?;
            trace.push(ll);
            converged = true;
            break;
        }
        if let Some(&prev) = trace.last() {
            if ll - prev < opts.tol {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if iterations == opts.max_iter {
            break;
        }
        mean = next_mean;
        cov = next_cov;
        iterations += 1;
    }

    Ok(EmFit {
        mean,
        cov,
        loglik_trace: trace,
        iterations,
        converged,
        ridge_applied,
    })
}

/// One EM pass: returns the observed-data log-likelihood at `(mean, cov)`
/// and the updated parameters.
fn em_step(
    ds: &Dataset,
    pats: &[Pattern],
    n: usize,
    mean: &[f64],
    cov: &SymMatrix,
) -> Result<(f64, Vec<f64>, SymMatrix, bool)> {
    let d = mean.len();
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut ll = 0.0;
    let mut ridged = false;
    let mut sum = vec![0.0; d];
    let mut cross = vec![vec![0.0; d]; d];

    for pat in pats {
        let (inv, ln_det, r) = invert_block(&cov.submatrix(&pat.obs))?;
        ridged |= r;
        let k = pat.obs.len();
        // Regression of the missing block on the observed block.
        let coef: Vec<Vec<f64>> = pat
            .mis
            .iter()
            .map(|&m| {
                (0..k)
                    .map(|a| (0..k).map(|b| cov.get(m, pat.obs[b]) * inv.get(b, a)).sum())
                    .collect()
            })
            .collect();
        let cond_cov: Vec<Vec<f64>> = pat
            .mis
            .iter()
            .enumerate()
            .map(|(a, &ma)| {
                pat.mis
                    .iter()
                    .map(|&mb| {
                        cov.get(ma, mb)
                            - (0..k).map(|c| coef[a][c] * cov.get(pat.obs[c], mb)).sum::<f64>()
                    })
                    .collect()
            })
            .collect();

        let mut full = vec![0.0; d];
        let mut resid = vec![0.0; k];
        for &i in &pat.rows {
            for (c, &o) in pat.obs.iter().enumerate() {
                let v = ds.column(o)[i];
                full[o] = v;
                resid[c] = v - mean[o];
            }
            ll -= 0.5 * (k as f64 * ln_2pi + ln_det + inv.quad_form(&resid));
            for (a, &m) in pat.mis.iter().enumerate() {
                full[m] = mean[m] + coef[a].iter().zip(&resid).map(|(w, e)| w * e).sum::<f64>();
            }
            for a in 0..d {
                sum[a] += full[a];
                for b in a..d {
                    cross[a][b] += full[a] * full[b];
                }
            }
        }
        let rows = pat.rows.len() as f64;
        // `mis` is ascending, so b >= a fills the upper triangle.
        for (a, &ma) in pat.mis.iter().enumerate() {
            for (b, &mb) in pat.mis.iter().enumerate().skip(a) {
                cross[ma][mb] += rows * cond_cov[a][b];
            }
        }
    }

    let nf = n as f64;
    let next_mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let mut next_cov = SymMatrix::zeros(d);
    for a in 0..d {
        for b in a..d {
            next_cov.set_sym(a, b, cross[a][b] / nf - next_mean[a] * next_mean[b]);
        }
    }
    Ok((ll, next_mean, next_cov, ridged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{cov_matrix, RngStream, VarMode};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn correlated_normal(n: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
        let mut cols = vec![Vec::with_capacity(n); 3];
        for _ in 0..n {
            let z: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            cols[0].push(1.0 + z[0]);
            cols[1].push(-2.0 + 0.6 * z[0] + 0.8 * z[1]);
            cols[2].push(0.5 * z[1] - 0.3 * z[0] + z[2]);
        }
        cols
    }

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("v{j}")).collect()
    }

    #[test]
    fn complete_data_gives_ml_moments_in_one_iteration() {
        let mut rng = RngStream::new(11, &[]);
        let cols = correlated_normal(40, &mut rng);
        let ds = Dataset::complete(cols.clone(), names(3)).unwrap();
        let fit = em_mvn(&ds, &EmOptions::default()).unwrap();
        assert_eq!(fit.iterations, 1);
        assert!(fit.converged);
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        let ml = cov_matrix(&refs, VarMode::Ml).unwrap();
        for a in 0..3 {
            let m = cols[a].iter().sum::<f64>() / 40.0;
            assert!((fit.mean[a] - m).abs() < 1e-12);
            for b in 0..3 {
                assert!((fit.cov.get(a, b) - ml.get(a, b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn loglik_is_monotone_under_mcar() {
        let mut rng = RngStream::new(12, &[]);
        let cols = correlated_normal(200, &mut rng);
        let mut mask = vec![vec![true; 200]; 3];
        for col in mask.iter_mut().skip(1) {
            for m in col.iter_mut() {
                *m = rng.random::<f64>() >= 0.2;
            }
        }
        let ds = Dataset::new(cols, mask, names(3)).unwrap();
        let fit = em_mvn(&ds, &EmOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations > 1 && fit.iterations < 500);
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn single_missing_cell_imputes_regression_prediction() {
        let mut rng = RngStream::new(13, &[]);
        let mut cols = correlated_normal(30, &mut rng);
        cols.truncate(2);
        let mut mask = vec![vec![true; 30]; 2];
        mask[1][7] = false;
        let ds = Dataset::new(cols.clone(), mask, names(2)).unwrap();
        let fit = em_mvn(&ds, &EmOptions { tol: 1e-14, max_iter: 5000 }).unwrap();
        let x = cols[0][7];
        let want = fit.mean[1] + fit.cov.get(1, 0) / fit.cov.get(0, 0) * (x - fit.mean[0]);
        let got = fit.impute_row(&[Some(x), None]).unwrap();
        assert!((got[1] - want).abs() < 1e-12);
        assert_eq!(got[0], x);

        // At convergence the mean of y equals the mean of the completed column.
        let mut completed = cols[1].clone();
        completed[7] = got[1];
        let m = completed.iter().sum::<f64>() / 30.0;
        assert!((fit.mean[1] - m).abs() < 1e-8);
    }

    #[test]
    fn rejects_too_few_rows_and_empty_columns() {
        let ds = Dataset::new(
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![vec![true, true], vec![true, false]],
            names(2),
        )
        .unwrap();
        assert!(matches!(em_mvn(&ds, &EmOptions::default()).unwrap_err(), Error::Dimension(_)));
        let ds = Dataset::new(
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.0; 4]],
            vec![vec![true; 4], vec![false; 4]],
            names(2),
        )
        .unwrap();
        assert!(matches!(em_mvn(&ds, &EmOptions::default()).unwrap_err(), Error::EmptyColumn(_)));
    }

    #[test]
    fn patterns_drop_all_missing_rows() {
        let ds = Dataset::new(
            vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]],
            vec![vec![true, false, true], vec![false, false, true]],
            names(2),
        )
        .unwrap();
        let pats = patterns(&ds);
        assert_eq!(pats.len(), 2);
        assert_eq!(pats[0].obs, vec![0, 1]);
        assert_eq!(pats[0].rows, vec![2]);
        assert_eq!(pats[1].obs, vec![0]);
        assert_eq!(pats[1].rows, vec![0]);
    }
}
