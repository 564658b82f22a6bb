use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    AnalyzeGraph,
    AnalyzeMatrix,
    CheckSequence,
    SimulateRai,
    SimulateHk,
    SimulateAltafini,
    SolveFixedpoint,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::AnalyzeGraph,
        ScenarioKind::AnalyzeMatrix,
        ScenarioKind::CheckSequence,
        ScenarioKind::SimulateRai,
        ScenarioKind::SimulateHk,
        ScenarioKind::SimulateAltafini,
        ScenarioKind::SolveFixedpoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::AnalyzeGraph => "analyze_graph",
            ScenarioKind::AnalyzeMatrix => "analyze_matrix",
            ScenarioKind::CheckSequence => "check_sequence",
            ScenarioKind::SimulateRai => "simulate_rai",
            ScenarioKind::SimulateHk => "simulate_hk",
            ScenarioKind::SimulateAltafini => "simulate_altafini",
            ScenarioKind::SolveFixedpoint => "solve_fixedpoint",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Artifact file names, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    pub parameters: Value,
    #[serde(default)]
    pub outputs: Outputs,
}

impl Scenario {
    /// Parses and checks the envelope; kind-specific parameters are checked by the runner.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        let obj = raw.as_object().ok_or_else(|| CliError::Schema("scenario must be a JSON object".into()))?;
        match obj.get("schema_version").and_then(Value::as_u64) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => return Err(CliError::Schema(format!("unsupported schema_version {v}"))),
            None => return Err(CliError::Schema("missing integer field schema_version".into())),
        }
        if let Some(kind) = obj.get("kind").and_then(Value::as_str) {
            if ScenarioKind::parse(kind).is_none() {
                return Err(CliError::UnknownKind(kind.to_string()));
            }
        }
        let scenario: Scenario = serde_json::from_value(raw).map_err(|e| CliError::Schema(e.to_string()))?;
        if scenario.name.is_empty() || !scenario.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(CliError::Schema(format!("name {:?} must be nonempty and use [A-Za-z0-9_-]", scenario.name)));
        }
        if !scenario.parameters.is_object() {
            return Err(CliError::Schema("parameters must be a JSON object".into()));
        }
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios serialize")
    }
}
