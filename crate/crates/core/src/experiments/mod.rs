//! Scenario catalog, multi-seed runs, survival-time sweeps and the
//! statistics and artifacts they produce.

mod catalog;
mod plot;
mod runner;
pub mod stats;
mod sweep;

pub use catalog::{
    builtin, builtin_names, builtin_scenarios, builtin_sweep, builtin_sweeps, perturbed_truth,
};
pub use plot::{render_histogram_svg, render_lines_svg};
pub use runner::{
    run_scenario, run_seed, write_artifacts, RunOptions, ScenarioRun, SeedRun, TraceFormat,
};
pub use stats::{sliding_window_mean, wealth_distribution, WealthHistogram};
pub use sweep::{run_sweep, write_sweep_artifacts, SweepPoint, SweepResult, SweepSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketConfig;
use crate::regret::{PowerLawFit, SurvivalTime};

/// Runs use seeds `base, base + 1, ..., base + count - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub base: u64,
    pub count: usize,
}

impl SeedRange {
    pub fn iter(&self) -> impl Iterator<Item = u64> {
        let base = self.base;
        (0..self.count as u64).map(move |i| base.wrapping_add(i))
    }
}

/// A statistic a scenario asks for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stat", rename_all = "snake_case", deny_unknown_fields)]
pub enum Output {
    /// Seed-averaged trailing-window wealth shares, thinned to `points`.
    WindowedWealth {
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_points")]
        points: usize,
    },
    TerminalWealth,
    /// Mean regret curve at log-spaced checkpoints.
    Regret,
    /// Pooled wealth histogram over steps in `(from * T, to * T]`.
    WealthDistribution {
        from: f64,
        to: f64,
    },
    /// Pooled wealth histogram over the first `steps` steps.
    EarlyWealthDistribution {
        steps: usize,
    },
    /// Survival time of each agent's seed-averaged share.
    SurvivalTime,
}

fn default_window() -> usize {
    stats::DEFAULT_WINDOW
}

fn default_points() -> usize {
    500
}

/// Pass/fail statements attached to a scenario and reported in its summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioCheck {
    /// At least `min_fraction` of seeds end with the agent's share above `level`.
    TerminalWealthAbove {
        agent: usize,
        level: f64,
        min_fraction: f64,
    },
    /// The seed-mean terminal share exceeds `level`.
    MeanTerminalWealthAbove { agent: usize, level: f64 },
    /// At least `min_fraction` of seeds have `regret / T >= min_rate`.
    RegretRate {
        agent: usize,
        min_rate: f64,
        min_fraction: f64,
    },
    /// Over the first `steps` steps, at least `min_fraction` of (seed, step)
    /// samples have the agent's share above `level`.
    EarlyShareAbove {
        agent: usize,
        steps: usize,
        level: f64,
        min_fraction: f64,
    },
}

impl ScenarioCheck {
    pub fn agent(&self) -> usize {
        match self {
            ScenarioCheck::TerminalWealthAbove { agent, .. }
            | ScenarioCheck::MeanTerminalWealthAbove { agent, .. }
            | ScenarioCheck::RegretRate { agent, .. }
            | ScenarioCheck::EarlyShareAbove { agent, .. } => *agent,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ScenarioCheck::TerminalWealthAbove {
                agent,
                level,
                min_fraction,
            } => {
                format!("terminal share of agent {agent} > {level} in >= {min_fraction} of seeds")
            }
            ScenarioCheck::MeanTerminalWealthAbove { agent, level } => {
                format!("mean terminal share of agent {agent} > {level}")
            }
            ScenarioCheck::RegretRate {
                agent,
                min_rate,
                min_fraction,
            } => {
                format!("regret/T of agent {agent} >= {min_rate:.6} in >= {min_fraction} of seeds")
            }
            ScenarioCheck::EarlyShareAbove {
                agent,
                steps,
                level,
                min_fraction,
            } => {
                format!("share of agent {agent} > {level} in >= {min_fraction} of samples over the first {steps} steps")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Horizon and seed count used when a paper-scale run is requested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullScale {
    pub horizon: usize,
    pub seeds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    /// `config.seed` is ignored; each run takes its seed from `seeds`.
    pub config: MarketConfig,
    pub seeds: SeedRange,
    pub outputs: Vec<Output>,
    pub checks: Vec<ScenarioCheck>,
    pub full_scale: Option<FullScale>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::invalid("scenario name must not be empty"));
        }
        if self.seeds.count == 0 {
            return Err(Error::invalid("a scenario needs at least one seed"));
        }
        self.config.validate()?;
        let agents = self.config.agents.len();
        for check in &self.checks {
            if check.agent() >= agents {
                return Err(Error::invalid(format!(
                    "check refers to agent {} of {agents}",
                    check.agent()
                )));
            }
        }
        for output in &self.outputs {
            match output {
                Output::WindowedWealth { window, .. } if *window == 0 => {
                    return Err(Error::invalid("window must be positive"));
                }
                Output::WealthDistribution { from, to }
                    if !(0.0 <= *from && from < to && *to <= 1.0) =>
                {
                    return Err(Error::invalid(format!(
                        "distribution range ({from}, {to}] is not within (0, 1]"
                    )));
                }
                Output::EarlyWealthDistribution { steps } if *steps == 0 => {
                    return Err(Error::invalid(
                        "early distribution needs a positive step count",
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The same scenario at another horizon. Shift schedules are rescaled so
    /// every interval keeps its share of the horizon.
    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        self.config = rescale_horizon(&self.config, horizon)?;
        Ok(self)
    }

    pub fn with_seeds(mut self, seeds: SeedRange) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn at_full_scale(self) -> Result<Self> {
        match self.full_scale {
            Some(full) => {
                let seeds = SeedRange {
                    base: self.seeds.base,
                    count: full.seeds,
                };
                Ok(self.with_horizon(full.horizon)?.with_seeds(seeds))
            }
            None => Ok(self),
        }
    }
}

/// Copy of `config` with a new horizon; interval lengths are scaled in
/// proportion, rounding so they still add up to `horizon`.
pub fn rescale_horizon(config: &MarketConfig, horizon: usize) -> Result<MarketConfig> {
    use crate::market::Generator;
    use crate::shift::{Interval, ShiftSchedule};

    if horizon == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    let mut out = config.clone();
    out.horizon = horizon;
    if let Generator::Shift(schedule) = &config.generator {
        let old = schedule.total_duration() as f64;
        let n = schedule.intervals().len();
        if horizon < n {
            return Err(Error::invalid(format!(
                "horizon {horizon} is shorter than the {n} shift intervals"
            )));
        }
        let mut intervals = Vec::with_capacity(n);
        let mut acc = 0.0;
        let mut start = 0usize;
        for (i, interval) in schedule.intervals().iter().enumerate() {
            acc += interval.duration as f64;
            let end = if i + 1 == n {
                horizon
            } else {
                ((acc / old) * horizon as f64).round() as usize
            };
            let end = end.max(start + 1).min(horizon - (n - 1 - i));
            intervals.push(Interval {
                duration: end - start,
                distribution: interval.distribution.clone(),
            });
            start = end;
        }
        out.generator = Generator::Shift(ShiftSchedule::new(intervals)?);
    }
    Ok(out)
}

/// Summary of one scenario over all its seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub name: String,
    pub description: String,
    pub horizon: usize,
    pub seeds: SeedRange,
    pub agents: Vec<String>,
    /// Per agent.
    pub terminal_wealth: Vec<Distribution>,
    /// Per agent, against the interval benchmark when the generator shifts.
    pub regret: Vec<Distribution>,
    pub regret_curve: Option<RegretCurve>,
    pub windowed_wealth: Option<WindowedWealth>,
    pub wealth_distributions: Vec<RangeHistograms>,
    pub survival: Option<Vec<SurvivalTime>>,
    pub fitted_exponents: Vec<NamedFit>,
    pub conservation: Conservation,
    pub checks: Vec<CheckResult>,
}

impl SummaryStats {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Ordered by seed.
    pub per_seed: Vec<f64>,
}

impl Distribution {
    pub fn from_samples(per_seed: Vec<f64>) -> Self {
        let mean = stats::mean(&per_seed);
        let min = per_seed.iter().copied().fold(f64::INFINITY, f64::min);
        let max = per_seed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Distribution {
            mean,
            min,
            max,
            per_seed,
        }
    }

    pub fn fraction(&self, pred: impl Fn(f64) -> bool) -> f64 {
        self.per_seed.iter().filter(|x| pred(**x)).count() as f64 / self.per_seed.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    pub t: Vec<usize>,
    /// `mean[agent][i]` is the seed-mean regret at `t[i]`.
    pub mean: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedWealth {
    pub window: usize,
    pub t: Vec<usize>,
    /// `mean[agent][i]` is the windowed seed-mean share at `t[i]`.
    pub mean: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeHistograms {
    /// Steps `first..=last`.
    pub first: usize,
    pub last: usize,
    pub agents: Vec<WealthHistogram>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: PowerLawFit,
}

/// Worst accounting errors over every step of every seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conservation {
    pub max_price_error: f64,
    pub max_wealth_error: f64,
    pub max_identity_residual: f64,
    pub min_floor_slack: Option<f64>,
    pub clamp_events: u64,
}

impl Default for Conservation {
    fn default() -> Self {
        Conservation {
            max_price_error: 0.0,
            max_wealth_error: 0.0,
            max_identity_residual: 0.0,
            min_floor_slack: None,
            clamp_events: 0,
        }
    }
}

impl Conservation {
    pub fn absorb(&mut self, other: &Conservation) {
        self.max_price_error = self.max_price_error.max(other.max_price_error);
        self.max_wealth_error = self.max_wealth_error.max(other.max_wealth_error);
        self.max_identity_residual = self.max_identity_residual.max(other.max_identity_residual);
        self.min_floor_slack = match (self.min_floor_slack, other.min_floor_slack) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.clamp_events += other.clamp_events;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Generator;

    #[test]
    fn rescaling_keeps_interval_shares() {
        let prop7 = builtin("prop7").unwrap();
        let config = rescale_horizon(&prop7.config, 30_000).unwrap();
        let Generator::Shift(schedule) = &config.generator else {
            panic!("prop7 shifts")
        };
        let lengths: Vec<usize> = schedule.intervals().iter().map(|i| i.duration).collect();
        assert_eq!(lengths, vec![20_000, 10_000]);
        assert!(rescale_horizon(&prop7.config, 1).is_err());
        let tiny = rescale_horizon(&prop7.config, 2).unwrap();
        assert_eq!(tiny.horizon, 2);
        tiny.validate().unwrap();
    }

    #[test]
    fn seed_range_iterates_in_order() {
        let seeds: Vec<u64> = SeedRange { base: 7, count: 3 }.iter().collect();
        assert_eq!(seeds, vec![7, 8, 9]);
    }

    #[test]
    fn output_documents_round_trip() {
        let outputs: Vec<Output> = serde_json::from_str(
            r#"[{"stat":"windowed_wealth"},{"stat":"wealth_distribution","from":0.5,"to":1.0},{"stat":"terminal_wealth"}]"#,
        )
        .unwrap();
        assert_eq!(
            outputs[0],
            Output::WindowedWealth {
                window: 10_000,
                points: 500
            }
        );
        assert!(serde_json::from_str::<Output>(r#"{"stat":"windowed_wealth","x":1}"#).is_err());
    }
}
