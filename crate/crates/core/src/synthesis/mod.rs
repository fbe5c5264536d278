//! Synthetic data: multivariate standard normal and Clayton copula samples,
//! and amputation mechanisms that delete values from complete data.

mod generators;
mod mechanisms;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use generators::{gen_clayton, gen_std_normal, kendall_tau};
pub use mechanisms::{
    apply_mar_1_to_x, apply_mar_mean, apply_mar_rank, apply_mcar, default_controls,
    one_to_x_rates,
};

use crate::datamodel::{ColumnRoles, Dataset};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Marginal law applied to a uniform copula coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Margin {
    /// Exponential with rate 1.
    Exp,
    /// Chi-squared with 4 degrees of freedom.
    Chisq4,
    Uniform,
}

impl Margin {
    pub fn as_str(self) -> &'static str {
        match self {
            Margin::Exp => "exp",
            Margin::Chisq4 => "chisq4",
            Margin::Uniform => "uniform",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(Margin::Exp),
            "chisq4" => Ok(Margin::Chisq4),
            "uniform" => Ok(Margin::Uniform),
            other => Err(Error::Spec(format!(
                "unknown margin '{other}' (expected exp, chisq4, uniform)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Independent N(0, 1) columns.
    StdNormal { dim: usize },
    /// Clayton copula with parameter `theta` (Kendall's τ = θ/(θ+2)) and
    /// one margin per column.
    Clayton {
        dim: usize,
        theta: f64,
        margins: Vec<Margin>,
    },
}

impl DistributionSpec {
    pub fn clayton(dim: usize, theta: f64, margin: Margin) -> Self {
        DistributionSpec::Clayton {
            dim,
            theta,
            margins: vec![margin; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::StdNormal { dim } | DistributionSpec::Clayton { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::StdNormal { dim } if *dim == 0 => {
                Err(Error::Spec("distribution.dim must be at least 1".into()))
            }
            DistributionSpec::StdNormal { .. } => Ok(()),
            DistributionSpec::Clayton { dim, theta, margins } => {
                if *dim < 2 {
                    return Err(Error::Spec("distribution.dim must be at least 2 for a copula".into()));
                }
                if !(*theta > 0.0 && theta.is_finite()) {
                    return Err(Error::Spec(format!(
                        "distribution.theta must be positive, got {theta}"
                    )));
                }
                if margins.len() != *dim {
                    return Err(Error::Spec(format!(
                        "distribution.margins has {} entries, expected {dim}",
                        margins.len()
                    )));
                }
                Ok(())
            }
        }
    }

    /// Draws `n` fully observed rows with the given column names.
    pub fn generate(&self, n: usize, names: Vec<String>, rng: &mut RngStream) -> Result<Dataset> {
        self.validate()?;
        if names.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{} column names for a {}-dimensional distribution",
                names.len(),
                self.dim()
            )));
        }
        let ds = match self {
            DistributionSpec::StdNormal { dim } => gen_std_normal(n, *dim, rng)?,
            DistributionSpec::Clayton { .. } => gen_clayton(n, self, rng)?,
        };
        Dataset::complete((0..ds.n_cols()).map(|j| ds.column(j).to_vec()).collect(), names)
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::StdNormal { .. } => f.write_str("std_normal"),
            DistributionSpec::Clayton { theta, margins, .. } => {
                let mut kinds: Vec<&str> = margins.iter().map(|m| m.as_str()).collect();
                kinds.dedup();
                write!(f, "clayton({theta})_{}", kinds.join("+"))
            }
        }
    }
}

/// Probabilities for one incomplete column under the MAR-mean mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanRule {
    /// Position of the controlling column among the complete columns.
    pub control: usize,
    /// Missingness probability where the control exceeds its mean.
    pub p_high: f64,
    /// Missingness probability elsewhere.
    pub p_low: f64,
}

/// Rules used for MAR-mean when none are given: with one complete and two
/// incomplete columns, `Y1` is missing with 0.12 / 0.06 and `Y2` with
/// 0.02 / 0.175 above / below the mean of `X1`.
pub const DEFAULT_MEAN_RULES: [MeanRule; 2] = [
    MeanRule {
        control: 0,
        p_high: 0.12,
        p_low: 0.06,
    },
    MeanRule {
        control: 0,
        p_high: 0.02,
        p_low: 0.175,
    },
];

fn default_odds() -> f64 {
    9.0
}

/// Amputation mechanism applied to the incomplete columns.
///
/// Control columns are given as positions among the complete columns; when
/// omitted, incomplete column `v` is controlled by complete column
/// `v mod p` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismSpec {
    /// Every cell missing independently with probability `prob`.
    Mcar { prob: f64 },
    /// Cells paired with a control value above the control's median are
    /// `odds` times as likely to be missing; overall rate `prob`.
    #[serde(rename = "mar_1_to_x")]
    MarOneToX {
        prob: f64,
        #[serde(default = "default_odds")]
        odds: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        controls: Option<Vec<usize>>,
    },
    /// Exactly `round(n·prob)` cells per column, drawn without replacement
    /// with weights equal to the ranks of the control column.
    MarRank {
        prob: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        controls: Option<Vec<usize>>,
    },
    /// Bernoulli missingness at `p_high` / `p_low` depending on whether the
    /// control exceeds its mean.
    MarMean {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rules: Option<Vec<MeanRule>>,
    },
}

impl MechanismSpec {
    pub fn name(&self) -> String {
        match self {
            MechanismSpec::Mcar { .. } => "mcar".into(),
            MechanismSpec::MarOneToX { odds, .. } => format!("mar_1_to_{odds}"),
            MechanismSpec::MarRank { .. } => "mar_rank".into(),
            MechanismSpec::MarMean { .. } => "mar_mean".into(),
        }
    }

    /// The swept missingness probability, if the mechanism has one.
    pub fn prob(&self) -> Option<f64> {
        match self {
            MechanismSpec::Mcar { prob }
            | MechanismSpec::MarOneToX { prob, .. }
            | MechanismSpec::MarRank { prob, .. } => Some(*prob),
            MechanismSpec::MarMean { .. } => None,
        }
    }

    pub fn with_prob(&self, p: f64) -> Result<Self> {
        let mut out = self.clone();
        match &mut out {
            MechanismSpec::Mcar { prob }
            | MechanismSpec::MarOneToX { prob, .. }
            | MechanismSpec::MarRank { prob, .. } => *prob = p,
            MechanismSpec::MarMean { .. } => {
                return Err(Error::Spec(
                    "mechanism.kind mar_mean has no missingness probability to sweep".into(),
                ))
            }
        }
        Ok(out)
    }

    fn resolved_rules(&self, q: usize) -> Result<Vec<MeanRule>> {
        match self {
            MechanismSpec::MarMean { rules: Some(r) } => Ok(r.clone()),
            MechanismSpec::MarMean { rules: None } if q == DEFAULT_MEAN_RULES.len() => {
                Ok(DEFAULT_MEAN_RULES.to_vec())
            }
            MechanismSpec::MarMean { rules: None } => Err(Error::Spec(format!(
                "mechanism.rules must be given for mar_mean with {q} incomplete columns \
                 (defaults exist only for 2)"
            ))),
            _ => unreachable!("rules requested for a mechanism without rules"),
        }
    }

    /// Checks parameters against `p` complete and `q` incomplete columns.
    pub fn validate(&self, p: usize, q: usize) -> Result<()> {
        let check_prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Spec(format!("mechanism.{name} must lie in [0, 1], got {v}")))
            }
        };
        let check_controls = |controls: &Option<Vec<usize>>| match controls {
            Some(c) if c.len() != q => Err(Error::Spec(format!(
                "mechanism.controls has {} entries, expected {q}",
                c.len()
            ))),
            Some(c) => match c.iter().find(|&&k| k >= p) {
                Some(k) => Err(Error::Spec(format!(
                    "mechanism.controls entry {k} is not a complete column (p = {p})"
                ))),
                None => Ok(()),
            },
            None => Ok(()),
        };
        match self {
            MechanismSpec::Mcar { prob } => check_prob("prob", *prob),
            MechanismSpec::MarOneToX { prob, odds, controls } => {
                check_prob("prob", *prob)?;
                one_to_x_rates(*prob, *odds)?;
                check_controls(controls)
            }
            MechanismSpec::MarRank { prob, controls } => {
                check_prob("prob", *prob)?;
                check_controls(controls)
            }
            MechanismSpec::MarMean { .. } => {
                let rules = self.resolved_rules(q)?;
                if rules.len() != q {
                    return Err(Error::Spec(format!(
                        "mechanism.rules has {} entries, expected {q}",
                        rules.len()
                    )));
                }
                for r in &rules {
                    check_prob("rules.p_high", r.p_high)?;
                    check_prob("rules.p_low", r.p_low)?;
                    if r.control >= p {
                        return Err(Error::Spec(format!(
                            "mechanism.rules control {} is not a complete column (p = {p})",
                            r.control
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Amputates the incomplete columns of `ds`. Complete columns are never
    /// touched.
    pub fn apply(&self, ds: &Dataset, roles: &ColumnRoles, rng: &mut RngStream) -> Result<Dataset> {
        self.validate(roles.p(), roles.q())?;
        let controls = |c: &Option<Vec<usize>>| {
            c.clone()
                .unwrap_or_else(|| default_controls(roles.p(), roles.q()))
        };
        match self {
            MechanismSpec::Mcar { prob } => apply_mcar(ds, roles, *prob, rng),
            MechanismSpec::MarOneToX {
                prob,
                odds,
                controls: c,
            } => apply_mar_1_to_x(ds, roles, *prob, *odds, &controls(c), rng),
            MechanismSpec::MarRank { prob, controls: c } => {
                apply_mar_rank(ds, roles, *prob, &controls(c), rng)
            }
            MechanismSpec::MarMean { .. } => {
                apply_mar_mean(ds, roles, &self.resolved_rules(roles.q())?, rng)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_json_round_trip() {
        let mechs = [
            MechanismSpec::Mcar { prob: 0.12 },
            MechanismSpec::MarOneToX {
                prob: 0.1,
                odds: 9.0,
                controls: Some(vec![0, 0]),
            },
            MechanismSpec::MarRank {
                prob: 0.2,
                controls: None,
            },
            MechanismSpec::MarMean { rules: None },
        ];
        for m in mechs {
            let text = serde_json::to_string(&m).unwrap();
            let back: MechanismSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, m, "{text}");
        }
        let m: MechanismSpec = serde_json::from_str(r#"{"kind":"mar_1_to_x","prob":0.1}"#).unwrap();
        assert_eq!(m.name(), "mar_1_to_9");
        let err = serde_json::from_str::<MechanismSpec>(r#"{"kind":"mnar","prob":0.1}"#);
        assert!(err.is_err());

        let d = DistributionSpec::clayton(3, 1.0, Margin::Chisq4);
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<DistributionSpec>(&text).unwrap(), d);
        assert_eq!(d.to_string(), "clayton(1)_chisq4");
    }

    #[test]
    fn validation() {
        assert!(MechanismSpec::Mcar { prob: 1.5 }.validate(1, 2).is_err());
        let m = MechanismSpec::MarOneToX {
            prob: 0.6,
            odds: 9.0,
            controls: None,
        };
        assert!(m.validate(1, 2).is_err(), "p_high = 1.08 must be rejected");
        let m = MechanismSpec::MarRank {
            prob: 0.1,
            controls: Some(vec![1]),
        };
        assert!(m.validate(1, 1).is_err());
        assert!(MechanismSpec::MarMean { rules: None }.validate(1, 2).is_ok());
        assert!(MechanismSpec::MarMean { rules: None }.validate(2, 3).is_err());
        assert!(DistributionSpec::clayton(3, 0.0, Margin::Exp).validate().is_err());
        assert!(DistributionSpec::StdNormal { dim: 0 }.validate().is_err());
        assert!(MechanismSpec::MarMean { rules: None }.with_prob(0.1).is_err());
    }
}
