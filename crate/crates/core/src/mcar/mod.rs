//! MCAR tests: the U-statistic based `A_n` (general case), `D_n`
//! (one complete, one incomplete column) and Little's `d²` benchmark.
//!
//! Every test is a pure function of an immutable [`Dataset`](crate::datamodel::Dataset).
//! Rows in which every incomplete column is missing are kept for `A_n`:
//! their response indicators are simply zero. Little's general test drops
//! rows with no observed value at all, as its pattern-wise formulation
//! requires.
//!
//! The `A_n` calibration assumes finite fourth moments of the complete
//! columns; this cannot be checked from data.

mod an;
mod em;
mod little;
mod tstats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use an::{a_n_components, a_n_statistic, a_n_test, d_n_statistic, d_n_test, sigma_hat, AnRoute};
pub use em::{em_mvn, EmFit, EmOptions};
pub use little::{d2_general, d2_univariate};
pub use tstats::{compute_t, t_matrix, TStats};

use crate::error::{Error, Result};

/// Which test produced a [`TestResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    An,
    Dn,
    D2Univariate,
    D2General,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::An => "an",
            Method::Dn => "dn",
            Method::D2Univariate => "d2_univariate",
            Method::D2General => "d2_general",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Test selection as used by the harness and the CLI. `D2` picks the
/// closed-form univariate statistic when there is a single incomplete column
/// and the EM-based general statistic otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    An,
    Dn,
    D2,
    D2Univariate,
    D2General,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::An => "an",
            TestKind::Dn => "dn",
            TestKind::D2 => "d2",
            TestKind::D2Univariate => "d2_univariate",
            TestKind::D2General => "d2_general",
        }
    }

    /// Checks that the test is defined for `p` complete and `q` incomplete
    /// columns.
    pub fn check_dims(self, p: usize, q: usize) -> Result<()> {
        let ok = match self {
            TestKind::Dn => p == 1 && q == 1,
            TestKind::D2Univariate => q == 1,
            _ => true,
        };
        if p == 0 {
            return Err(Error::NoCompleteColumns);
        }
        if q == 0 {
            return Err(Error::NoIncompleteColumns);
        }
        if !ok {
            return Err(Error::Dimension(format!(
                "test '{}' is not defined for {p} complete and {q} incomplete columns",
                self.as_str()
            )));
        }
        Ok(())
    }

    pub fn run(
        self,
        ds: &crate::datamodel::Dataset,
        roles: &crate::datamodel::ColumnRoles,
        alpha: f64,
    ) -> Result<TestResult> {
        match self {
            TestKind::An => a_n_test(ds, roles, alpha),
            TestKind::Dn => d_n_test(ds, roles, alpha),
            TestKind::D2Univariate => d2_univariate(ds, roles, alpha),
            TestKind::D2General => d2_general(ds, alpha),
            TestKind::D2 if roles.q() == 1 => d2_univariate(ds, roles, alpha),
            TestKind::D2 => d2_general(ds, alpha),
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "an" | "a_n" => Ok(TestKind::An),
            "dn" | "d_n" => Ok(TestKind::Dn),
            "d2" | "little" => Ok(TestKind::D2),
            "d2_univariate" => Ok(TestKind::D2Univariate),
            "d2_general" => Ok(TestKind::D2General),
            other => Err(Error::Spec(format!(
                "unknown test '{other}' (expected an, dn, d2, d2_univariate, d2_general)"
            ))),
        }
    }
}

/// Outcome of one test at level `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: Method,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub diagnostics: BTreeMap<String, String>,
}

impl TestResult {
    pub(crate) fn new(method: Method, statistic: f64, df: usize, p_value: f64, alpha: f64) -> Self {
        TestResult {
            method,
            statistic,
            df,
            p_value,
            alpha,
            reject: p_value <= alpha,
            diagnostics: BTreeMap::new(),
        }
    }

    pub(crate) fn note(mut self, key: &str, value: impl ToString) -> Self {
        self.diagnostics.insert(key.to_string(), value.to_string());
        self
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}
