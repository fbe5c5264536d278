use serde::{Deserialize, Serialize};

use super::{parse_label, Scenario, Sweep, DEFAULT_ALPHA, DEFAULT_REPLICATIONS};
use crate::error::{Error, Result};
use crate::mcar::TestKind;
use crate::synthesis::{DistributionSpec, MechanismSpec};

fn default_tests() -> Vec<TestKind> {
    vec![TestKind::An, TestKind::D2]
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

/// On-disk scenario: the [`Scenario`] fields plus an optional sweep. `p` and
/// `q` may be omitted when the label has the form `1X2Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub label: String,
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub q: Option<usize>,
    pub n: usize,
    pub mechanism: MechanismSpec,
    #[serde(default = "default_tests")]
    pub tests: Vec<TestKind>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<(Scenario, Option<Sweep>)> {
        let from_label = parse_label(&self.label);
        let dim = |given: Option<usize>, pick: fn((usize, usize)) -> usize, name: &str| {
            given.or(from_label.map(pick)).ok_or_else(|| {
                Error::Spec(format!(
                    "{name} is missing and label '{}' does not have the form <p>X<q>Y",
                    self.label
                ))
            })
        };
        let p = dim(self.p, |(p, _)| p, "p")?;
        let q = dim(self.q, |(_, q)| q, "q")?;
        let s = Scenario {
            label: self.label,
            distribution: self.distribution,
            p,
            q,
            n: self.n,
            mechanism: self.mechanism,
            tests: self.tests,
            replications: self.replications,
            alpha: self.alpha,
            master_seed: self.master_seed,
        };
        s.validate()?;
        Ok((s, self.sweep))
    }
}

/// Parses a scenario document holding one object or an array of objects.
pub fn parse_scenarios(text: &str) -> Result<Vec<(Scenario, Option<Sweep>)>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Spec(format!("scenario JSON: {e}")))?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        other => vec![other],
    };
    if items.is_empty() {
        return Err(Error::Spec("scenario file contains no scenarios".into()));
    }
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let file: ScenarioFile = serde_json::from_value(item)
                .map_err(|e| Error::Spec(format!("scenario {}: {e}", i + 1)))?;
            file.into_scenario()
                .map_err(|e| Error::Spec(format!("scenario {}: {e}", i + 1)))
        })
        .collect()
}
