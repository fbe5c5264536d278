//! Monte-Carlo engine for empirical size and power over scenario grids.
//!
//! Every replication draws from its own random stream, keyed by the master
//! seed, a hash of the scenario and the replication index, so results do not
//! depend on how replications are scheduled across threads.

mod report;
mod scenario_file;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{read_results_csv, result_rows, write_results_csv, ResultRow};
pub use scenario_file::{parse_scenarios, ScenarioFile};

use crate::datamodel::ColumnRoles;
use crate::error::{Error, Result};
use crate::mcar::TestKind;
use crate::numerics::{chi2_cdf, fnv1a64, RngStream};
use crate::synthesis::{DistributionSpec, MechanismSpec};

/// Default number of replications per cell.
pub const DEFAULT_REPLICATIONS: usize = 2000;
/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.05;

const PURPOSE_GENERATE: u64 = 1;
const PURPOSE_AMPUTATE: u64 = 2;
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// One simulation cell. The data columns are `X1..Xp` (complete) followed by
/// `Y1..Yq` (amputated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub distribution: DistributionSpec,
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub mechanism: MechanismSpec,
    pub tests: Vec<TestKind>,
    pub replications: usize,
    pub alpha: f64,
    pub master_seed: u64,
}

/// The fields that determine the data of a cell. Replication count, level
/// and test selection are left out so that changing them reuses the same
/// draws.
#[derive(Serialize)]
struct CellKey<'a> {
    label: &'a str,
    distribution: &'a DistributionSpec,
    p: usize,
    q: usize,
    n: usize,
    mechanism: &'a MechanismSpec,
}

/// Parses labels of the form `1X2Y` into `(p, q)`.
pub fn parse_label(label: &str) -> Option<(usize, usize)> {
    let rest = label.strip_suffix('Y')?;
    let (p, q) = rest.split_once('X')?;
    Some((p.parse().ok()?, q.parse().ok()?))
}

impl Scenario {
    /// Std-normal MCAR scenario named after its dimensions, e.g. `1X2Y`.
    pub fn new(p: usize, q: usize, n: usize, mechanism: MechanismSpec) -> Self {
        Scenario {
            label: format!("{p}X{q}Y"),
            distribution: DistributionSpec::StdNormal { dim: p + q },
            p,
            q,
            n,
            mechanism,
            tests: vec![TestKind::An, TestKind::D2],
            replications: DEFAULT_REPLICATIONS,
            alpha: DEFAULT_ALPHA,
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((lp, lq)) = parse_label(&self.label) {
            if (lp, lq) != (self.p, self.q) {
                return Err(Error::Spec(format!(
                    "label '{}' does not match p = {}, q = {}",
                    self.label, self.p, self.q
                )));
            }
        }
        if self.p == 0 || self.q == 0 {
            return Err(Error::Spec("p and q must both be at least 1".into()));
        }
        self.distribution.validate()?;
        if self.distribution.dim() != self.p + self.q {
            return Err(Error::Spec(format!(
                "distribution.dim is {}, expected p + q = {}",
                self.distribution.dim(),
                self.p + self.q
            )));
        }
        if self.n < 3 {
            return Err(Error::Spec(format!("n must be at least 3, got {}", self.n)));
        }
        if self.replications == 0 {
            return Err(Error::Spec("replications must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Spec(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.tests.is_empty() {
            return Err(Error::Spec("tests must name at least one test".into()));
        }
        for t in &self.tests {
            t.check_dims(self.p, self.q)
                .map_err(|e| Error::Spec(format!("tests: {e}")))?;
        }
        self.mechanism.validate(self.p, self.q)
    }

    /// Stable 64-bit hash of the data-defining fields.
    pub fn cell_hash(&self) -> u64 {
        let key = CellKey {
            label: &self.label,
            distribution: &self.distribution,
            p: self.p,
            q: self.q,
            n: self.n,
            mechanism: &self.mechanism,
        };
        let bytes = serde_json::to_vec(&key).expect("scenario key serializes");
        fnv1a64(&bytes)
    }

    pub fn column_names(&self) -> Vec<String> {
        (1..=self.p)
            .map(|j| format!("X{j}"))
            .chain((1..=self.q).map(|v| format!("Y{v}")))
            .collect()
    }

    /// Complete data and its amputated copy for replication `r`.
    pub fn replicate(&self, r: u64) -> Result<(crate::datamodel::Dataset, crate::datamodel::Dataset)> {
        let hash = self.cell_hash();
        let mut gen = RngStream::new(self.master_seed, &[hash, r, PURPOSE_GENERATE]);
        let mut amp = RngStream::new(self.master_seed, &[hash, r, PURPOSE_AMPUTATE]);
        let full = self.distribution.generate(self.n, self.column_names(), &mut gen)?;
        let roles = ColumnRoles::leading(self.p, self.q);
        let amputated = self.mechanism.apply(&full, &roles, &mut amp)?;
        Ok((full, amputated))
    }
}

/// Rejection counts for one test in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestTally {
    pub test: TestKind,
    pub rejection_count: usize,
    pub valid_count: usize,
    pub degenerate_count: usize,
    pub rejection_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub scenario: Scenario,
    pub tallies: Vec<TestTally>,
    /// KS distance between the A_n values and χ²_{pq}; present for MCAR
    /// cells that run A_n.
    pub ks_distance_vs_chi2: Option<f64>,
}

impl CellResult {
    pub fn tally(&self, test: TestKind) -> Option<&TestTally> {
        self.tallies.iter().find(|t| t.test == test)
    }
}

/// Wilson score interval for `k` successes out of `n` at 95%.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let phat = k as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Kolmogorov–Smirnov distance between a sample's empirical CDF and `cdf`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn is_degenerate(e: &Error) -> bool {
    // Little's test can run out of degrees of freedom for unlucky patterns.
    e.is_degenerate_data() || matches!(e, Error::Domain(_))
}

/// Per test: `Some((reject, statistic))` or `None` when degenerate.
type Outcome = Vec<Option<(bool, f64)>>;

fn run_replication(s: &Scenario, r: u64) -> Result<Outcome> {
    let (_, data) = s.replicate(r)?;
    let roles = ColumnRoles::leading(s.p, s.q);
    s.tests
        .iter()
        .map(|t| match t.run(&data, &roles, s.alpha) {
            Ok(res) => Ok(Some((res.reject, res.statistic))),
            Err(e) if is_degenerate(&e) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

fn run_outcomes(s: &Scenario, workers: usize) -> Result<Vec<Outcome>> {
    s.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Spec(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| {
        (0..s.replications as u64)
            .into_par_iter()
            .map(|r| run_replication(s, r))
            .collect()
    })
}

/// Runs every replication of `s` on `workers` threads and tallies
/// rejections. The result does not depend on `workers`.
pub fn run_cell(s: &Scenario, workers: usize) -> Result<CellResult> {
    let outcomes = run_outcomes(s, workers)?;
    let mut tallies = Vec::with_capacity(s.tests.len());
    for (k, &test) in s.tests.iter().enumerate() {
        let valid: Vec<(bool, f64)> = outcomes.iter().filter_map(|o| o[k]).collect();
        if valid.is_empty() {
            return Err(Error::AllDegenerate(s.replications));
        }
        let rejections = valid.iter().filter(|(rej, _)| *rej).count();
        let (ci_low, ci_high) = wilson_interval(rejections, valid.len());
        tallies.push(TestTally {
            test,
            rejection_count: rejections,
            valid_count: valid.len(),
            degenerate_count: s.replications - valid.len(),
            rejection_rate: rejections as f64 / valid.len() as f64,
            ci_low,
            ci_high,
        });
    }
    let ks_distance_vs_chi2 = match (&s.mechanism, s.tests.iter().position(|&t| t == TestKind::An)) {
        (MechanismSpec::Mcar { .. }, Some(k)) => {
            let stats: Vec<f64> = outcomes.iter().filter_map(|o| o[k]).map(|(_, a)| a).collect();
            let df = (s.p * s.q) as f64;
            Some(ks_distance(&stats, |x| chi2_cdf(x, df).unwrap_or(f64::NAN)))
        }
        _ => None,
    };
    Ok(CellResult {
        scenario: s.clone(),
        tallies,
        ks_distance_vs_chi2,
    })
}

/// Grid of values for one scenario field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    MissProb(Vec<f64>),
    N(Vec<usize>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::MissProb(v) => v.len(),
            Sweep::N(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One scenario per grid point of `sweep`, in grid order.
pub fn expand_grid(base: &Scenario, sweep: &Sweep) -> Result<Vec<Scenario>> {
    if sweep.is_empty() {
        return Err(Error::Spec("sweep must contain at least one value".into()));
    }
    let cells: Vec<Scenario> = match sweep {
        Sweep::MissProb(probs) => probs
            .iter()
            .map(|&p| {
                Ok(Scenario {
                    mechanism: base.mechanism.with_prob(p)?,
                    ..base.clone()
                })
            })
            .collect::<Result<_>>()?,
        Sweep::N(ns) => ns.iter().map(|&n| Scenario { n, ..base.clone() }).collect(),
    };
    for c in &cells {
        c.validate()?;
    }
    Ok(cells)
}

/// Runs one cell per grid point of `sweep`.
pub fn run_grid(base: &Scenario, sweep: &Sweep, workers: usize) -> Result<Vec<CellResult>> {
    expand_grid(base, sweep)?
        .iter()
        .map(|s| run_cell(s, workers))
        .collect()
}

/// A_n values of the non-degenerate replications of an MCAR scenario.
pub fn a_n_null_sample(s: &Scenario, workers: usize) -> Result<Vec<f64>> {
    if !matches!(s.mechanism, MechanismSpec::Mcar { .. }) {
        return Err(Error::Spec("the null check needs an mcar mechanism".into()));
    }
    let s = Scenario {
        tests: vec![TestKind::An],
        ..s.clone()
    };
    let stats: Vec<f64> = run_outcomes(&s, workers)?
        .into_iter()
        .filter_map(|o| o[0].map(|(_, a)| a))
        .collect();
    if stats.is_empty() {
        return Err(Error::AllDegenerate(s.replications));
    }
    Ok(stats)
}

/// KS distance between the A_n values of an MCAR scenario and χ²_{pq}.
pub fn null_distribution_check(s: &Scenario, workers: usize) -> Result<f64> {
    let stats = a_n_null_sample(s, workers)?;
    let df = (s.p * s.q) as f64;
    Ok(ks_distance(&stats, |x| chi2_cdf(x, df).unwrap_or(f64::NAN)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(prob: f64) -> Scenario {
        Scenario {
            replications: 40,
            master_seed: 7,
            ..Scenario::new(1, 2, 60, MechanismSpec::Mcar { prob })
        }
    }

    #[test]
    fn label_parsing() {
        assert_eq!(parse_label("1X2Y"), Some((1, 2)));
        assert_eq!(parse_label("12X3Y"), Some((12, 3)));
        assert_eq!(parse_label("custom"), None);
        let mut s = small(0.1);
        s.label = "2X2Y".into();
        assert!(s.validate().is_err());
        s.label = "anything".into();
        assert!(s.validate().is_ok());
    }

    #[test]
    fn validation_names_the_field() {
        let mut s = small(0.1);
        s.distribution = DistributionSpec::StdNormal { dim: 4 };
        assert!(s.validate().unwrap_err().to_string().contains("distribution.dim"));
        let mut s = small(0.1);
        s.replications = 0;
        assert!(s.validate().unwrap_err().to_string().contains("replications"));
        let mut s = small(0.1);
        s.tests = vec![TestKind::Dn];
        assert!(s.validate().is_err());
    }

    #[test]
    fn wilson_interval_values() {
        let (lo, hi) = wilson_interval(100, 2000);
        assert!((lo - 0.041_281_2).abs() < 1e-6, "{lo}");
        assert!((hi - 0.060_444_1).abs() < 1e-6, "{hi}");
        assert_eq!(wilson_interval(0, 10).0, 0.0);
        assert!(wilson_interval(10, 10).1 > 1.0 - 1e-12);
    }

    #[test]
    fn ks_distance_of_exact_quantiles() {
        let n = 1000;
        let sample: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&sample, |x| x);
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let s = small(0.15);
        assert_eq!(run_cell(&s, 1).unwrap(), run_cell(&s, 4).unwrap());
    }

    #[test]
    fn alpha_one_rejects_every_valid_replication() {
        let s = Scenario { alpha: 1.0, ..small(0.1) };
        let cell = run_cell(&s, 2).unwrap();
        for t in &cell.tallies {
            assert_eq!(t.rejection_count, t.valid_count);
            assert_eq!(t.valid_count + t.degenerate_count, s.replications);
        }
    }

    #[test]
    fn tiny_missingness_is_degenerate_not_rejected() {
        let s = Scenario {
            replications: 30,
            ..Scenario::new(1, 1, 5, MechanismSpec::Mcar { prob: 0.02 })
        };
        match run_cell(&s, 1) {
            Ok(cell) => {
                let t = &cell.tallies[0];
                assert!(t.degenerate_count > 0);
                assert_eq!(t.valid_count + t.degenerate_count, 30);
            }
            Err(e) => assert!(matches!(e, Error::AllDegenerate(30))),
        }
        let s = Scenario {
            replications: 5,
            ..Scenario::new(1, 1, 5, MechanismSpec::Mcar { prob: 0.0 })
        };
        assert!(matches!(run_cell(&s, 1), Err(Error::AllDegenerate(5))));
    }

    #[test]
    fn grid_points_get_distinct_hashes() {
        let base = small(0.1);
        let cells = expand_grid(&base, &Sweep::MissProb(vec![0.03, 0.06, 0.09])).unwrap();
        let mut hashes: Vec<u64> = cells.iter().map(Scenario::cell_hash).collect();
        hashes.extend(
            expand_grid(&base, &Sweep::N(vec![30, 40]))
                .unwrap()
                .iter()
                .map(Scenario::cell_hash),
        );
        let mut uniq = hashes.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert_eq!(uniq.len(), hashes.len());
        assert!(expand_grid(&base, &Sweep::N(vec![])).is_err());
    }

    #[test]
    fn hash_ignores_replications_and_tests() {
        let a = small(0.1);
        let b = Scenario {
            replications: 9,
            tests: vec![TestKind::An],
            alpha: 0.1,
            ..a.clone()
        };
        assert_eq!(a.cell_hash(), b.cell_hash());
        let c = Scenario { n: 61, ..a.clone() };
        assert_ne!(a.cell_hash(), c.cell_hash());
    }

    #[test]
    fn singleton_grid_equals_cell() {
        let s = small(0.12);
        let grid = run_grid(&s, &Sweep::MissProb(vec![0.12]), 2).unwrap();
        assert_eq!(grid, vec![run_cell(&s, 1).unwrap()]);
    }

    #[test]
    fn null_check_requires_mcar() {
        let mut s = small(0.1);
        s.mechanism = MechanismSpec::MarRank { prob: 0.1, controls: None };
        assert!(null_distribution_check(&s, 1).is_err());
    }
}
