//! JSON documents for scenarios and games.
//!
//! ```json
//! {"version": 1, "population": 10000, "growth_rate": 0.1,
//!  "firms": [{"name": "a", "share": 0.6, "loyalty": 0.8, "leave_rate": 0.02},
//!            {"name": "b", "share": 0.4, "loyalty": 0.8, "leave_rate": 0.02}]}
//! ```
//!
//! Unknown fields are rejected. `population` defaults to 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::game::{GameSpec, LossCurve, PeerAccess, TradScheme};
use crate::market::MarketScenario;

pub const SCENARIO_VERSION: u32 = 1;

/// A JSON document that failed to deserialize.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", field.as_ref().map(|f| format!("field `{f}`: ")).unwrap_or_default())]
pub struct ParseFailure {
    /// Dotted path of the offending field, when known.
    pub field: Option<String>,
    pub message: String,
}

/// Deserializes `bytes`, reporting the path of the field that failed.
pub fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> std::result::Result<T, ParseFailure> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let message = err.into_inner().to_string();
        let mut field = if path == "." || path == "?" { String::new() } else { path };
        // Missing fields are reported at their parent's path.
        if let Some(name) = message.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
            field = if field.is_empty() { name.to_string() } else { format!("{field}.{name}") };
        }
        ParseFailure { field: (!field.is_empty()).then_some(field), message }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmEntry {
    pub name: String,
    pub share: f64,
    pub loyalty: f64,
    pub leave_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<f64>,
    pub firms: Vec<FirmEntry>,
    pub growth_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_weight: Option<f64>,
}

impl ScenarioDocument {
    pub fn from_json(text: &str) -> std::result::Result<Self, ParseFailure> {
        parse_json(text.as_bytes())
    }

    /// Compact JSON with a fixed field order.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario documents always serialize")
    }

    pub fn to_scenario(&self) -> Result<MarketScenario> {
        if self.version != SCENARIO_VERSION {
            return Err(Error::InvalidScenario(Violation::field(
                "version",
                format!("unsupported version {}, expected {SCENARIO_VERSION}", self.version),
            )));
        }
        let mut scenario = MarketScenario::new(
            self.firms.iter().map(|f| f.share).collect(),
            self.firms.iter().map(|f| f.loyalty).collect(),
            self.firms.iter().map(|f| f.leave_rate).collect(),
            self.growth_rate,
        )?;
        if let Some(p) = self.population {
            scenario = scenario.with_population(p)?;
        }
        if let Some(w) = self.quality_weight {
            scenario = scenario.with_quality_weight(w)?;
        }
        Ok(scenario)
    }

    /// Names firms `firm_1`, `firm_2`, ... when no names are given.
    pub fn from_scenario(scenario: &MarketScenario, names: Option<&[String]>) -> Self {
        let firms = (0..scenario.n())
            .map(|i| FirmEntry {
                name: names
                    .and_then(|n| n.get(i).cloned())
                    .unwrap_or_else(|| format!("firm_{}", i + 1)),
                share: scenario.shares()[i],
                loyalty: scenario.loyalty()[i],
                leave_rate: scenario.leave_rate()[i],
            })
            .collect();
        Self {
            version: SCENARIO_VERSION,
            population: (scenario.population() != 1.0).then_some(scenario.population()),
            firms,
            growth_rate: scenario.growth_rate(),
            quality_weight: (scenario.quality_weight() != 1.0).then_some(scenario.quality_weight()),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.firms.iter().map(|f| f.name.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveEntry {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessEntry {
    #[default]
    ContributionGated,
    SharedPool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradEntry {
    pub self_gain: f64,
    pub peer_gain: f64,
    #[serde(default)]
    pub access: AccessEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub scenario: ScenarioDocument,
    pub dataset_sizes: Vec<u64>,
    pub curves: Vec<CurveEntry>,
    pub trad: TradEntry,
    pub grid_points: usize,
}

impl GameDocument {
    pub fn from_json(text: &str) -> std::result::Result<Self, ParseFailure> {
        parse_json(text.as_bytes())
    }

    pub fn to_spec(&self) -> Result<GameSpec> {
        let scenario = self.scenario.to_scenario()?;
        let curves = self
            .curves
            .iter()
            .map(|c| LossCurve::new(c.a, c.b, c.c))
            .collect::<Result<Vec<_>>>()?;
        let access = match self.trad.access {
            AccessEntry::ContributionGated => PeerAccess::ContributionGated,
            AccessEntry::SharedPool => PeerAccess::SharedPool,
        };
        let trad = TradScheme::with_access(self.trad.self_gain, self.trad.peer_gain, access)?;
        GameSpec::new(scenario, self.dataset_sizes.clone(), curves, trad, self.grid_points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = r#"{"version":1,"firms":[
        {"name":"a","share":0.6,"loyalty":0.8,"leave_rate":0.02},
        {"name":"b","share":0.4,"loyalty":0.8,"leave_rate":0.02}],"growth_rate":0.1}"#;

    #[test]
    fn parses_and_validates() {
        let doc = ScenarioDocument::from_json(WORKED).unwrap();
        let s = doc.to_scenario().unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.population(), 1.0);
        assert_eq!(doc.names(), vec!["a", "b"]);
    }

    #[test]
    fn rejects_unknown_and_missing_fields() {
        let err = ScenarioDocument::from_json(&WORKED.replace("\"growth_rate\"", "\"growth\"")).unwrap_err();
        assert!(err.to_string().contains("growth"), "{err}");
        let err = ScenarioDocument::from_json(&WORKED.replace("\"loyalty\":0.8,", "")).unwrap_err();
        assert!(err.to_string().contains("loyalty"), "{err}");
    }

    #[test]
    fn parse_failures_carry_paths() {
        let err = ScenarioDocument::from_json(&WORKED.replace("\"loyalty\":0.8,", "")).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("firms[0].loyalty"));
        let err = ScenarioDocument::from_json(&WORKED.replace("0.6", "\"x\"")).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("firms[0].share"));
        let err = ScenarioDocument::from_json("{").unwrap_err();
        assert_eq!(err.field, None);
    }

    #[test]
    fn rejects_other_versions() {
        let doc = ScenarioDocument::from_json(&WORKED.replace("\"version\":1", "\"version\":2")).unwrap();
        assert!(matches!(doc.to_scenario(), Err(Error::InvalidScenario(v)) if v.field == "version"));
    }

    #[test]
    fn canonical_round_trip() {
        let doc = ScenarioDocument::from_json(WORKED).unwrap();
        let again = ScenarioDocument::from_json(&doc.to_canonical_json()).unwrap();
        assert_eq!(doc, again);
        let rebuilt = ScenarioDocument::from_scenario(&doc.to_scenario().unwrap(), Some(&doc.names()));
        assert_eq!(rebuilt, doc);
    }

    #[test]
    fn game_document() {
        let text = format!(
            r#"{{"scenario":{WORKED},"dataset_sizes":[100,100],
               "curves":[{{"a":1,"b":0.5}},{{"a":1,"b":0.5,"c":0}}],
               "trad":{{"self_gain":1,"peer_gain":0.5}},"grid_points":5}}"#
        );
        let spec = GameDocument::from_json(&text).unwrap().to_spec().unwrap();
        assert_eq!(spec.n(), 2);
        assert_eq!(spec.trad().access(), PeerAccess::ContributionGated);
    }
}
