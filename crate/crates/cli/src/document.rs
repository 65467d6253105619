//! JSON scenario documents.

use std::fmt;

use serde::Deserialize;

use msl_core::agents::AgentSpec;
use msl_core::experiments::{Output, Scenario, ScenarioCheck, SeedRange};
use msl_core::market::{Generator, MarketConfig};
use msl_core::shift::{Interval, ShiftSchedule};
use msl_core::simplex::{SimplexVector, DEFAULT_STRATEGY_FLOOR};

/// A schema violation, anchored to a position when the parser knows one.
#[derive(Debug)]
pub struct DocumentError {
    pub position: Option<(usize, usize)>,
    pub message: String,
}

impl fmt::Display for DocumentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.position {
            Some((line, column)) => write!(f, "{line}:{column}: {}", self.message),
            None => write!(f, " {}", self.message),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketDocument {
    pub states: usize,
    /// Defaults to `min(0.01, smallest entry of any distribution)`.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Stationary distribution; exclusive with `schedule`.
    #[serde(default)]
    pub q: Option<SimplexVector>,
    #[serde(default)]
    pub schedule: Option<Vec<Interval>>,
    /// Required with `q`; must equal the schedule's total duration if given with it.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub initial_wealths: Option<Vec<f64>>,
    #[serde(default)]
    pub strategy_floor: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub market: MarketDocument,
    pub agents: Vec<AgentSpec>,
    pub seeds: SeedRange,
    #[serde(default)]
    pub outputs: Vec<Output>,
    #[serde(default)]
    pub checks: Vec<ScenarioCheck>,
}

fn plain(message: impl ToString) -> DocumentError {
    DocumentError {
        position: None,
        message: message.to_string(),
    }
}

impl ScenarioDocument {
    pub fn parse(text: &str) -> Result<ScenarioDocument, DocumentError> {
        serde_json::from_str(text).map_err(|e| DocumentError {
            position: Some((e.line(), e.column())),
            message: e.to_string(),
        })
    }

    pub fn into_scenario(self) -> Result<Scenario, DocumentError> {
        let market = self.market;
        let (generator, horizon) = match (market.q, market.schedule) {
            (Some(q), None) => {
                let horizon = market
                    .horizon
                    .ok_or_else(|| plain("market.horizon is required with market.q"))?;
                (Generator::Stationary(q), horizon)
            }
            (None, Some(intervals)) => {
                let schedule = ShiftSchedule::new(intervals).map_err(plain)?;
                let total = schedule.total_duration();
                if market.horizon.is_some_and(|h| h != total) {
                    return Err(plain(format!(
                        "market.horizon differs from the schedule's total duration {total}"
                    )));
                }
                (Generator::Shift(schedule), total)
            }
            _ => return Err(plain("market needs exactly one of q and schedule")),
        };
        let smallest = generator
            .distributions()
            .iter()
            .map(|d| d.min())
            .fold(f64::INFINITY, f64::min);
        let config = MarketConfig {
            states: market.states,
            delta: market.delta.unwrap_or(smallest.min(0.01)),
            generator,
            horizon,
            agents: self.agents,
            initial_wealths: market.initial_wealths,
            seed: self.seeds.base,
            strategy_floor: market.strategy_floor.unwrap_or(DEFAULT_STRATEGY_FLOOR),
        };
        let scenario = Scenario {
            name: self.name,
            description: self.description,
            config,
            seeds: self.seeds,
            outputs: self.outputs,
            checks: self.checks,
            full_scale: None,
        };
        scenario.validate().map_err(plain)?;
        Ok(scenario)
    }
}
