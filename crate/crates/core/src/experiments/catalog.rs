//! Built-in scenarios and sweeps.

use crate::agents::AgentSpec;
use crate::error::{Error, Result};
use crate::market::{Generator, MarketConfig};
use crate::shift::{Interval, ShiftSchedule};
use crate::simplex::{SimplexVector, DEFAULT_STRATEGY_FLOOR};

use super::{FullScale, Output, Scenario, ScenarioCheck, SeedRange, SweepSpec};

const BASE_SEED: u64 = 20_250_101;

fn sv(w: &[f64]) -> SimplexVector {
    SimplexVector::new(w.to_vec()).expect("catalog vectors are valid distributions")
}

fn models(ws: &[[f64; 2]]) -> Vec<SimplexVector> {
    ws.iter().map(|w| sv(w)).collect()
}

fn stationary(q: [f64; 2], horizon: usize, agents: Vec<AgentSpec>) -> MarketConfig {
    MarketConfig::stationary(sv(&q), horizon, agents, BASE_SEED)
}

/// Two-state schedule alternating `(p, 1-p)` and `(1-p, p)` over blocks
/// whose lengths are the given fractions of `horizon`.
fn alternating(p: f64, horizon: usize, fractions: &[f64]) -> ShiftSchedule {
    let mut intervals = Vec::with_capacity(fractions.len());
    let mut start = 0usize;
    let mut acc = 0.0;
    for (i, f) in fractions.iter().enumerate() {
        acc += f;
        let end = if i + 1 == fractions.len() {
            horizon
        } else {
            (acc * horizon as f64).round() as usize
        };
        let q = if i % 2 == 0 {
            [p, 1.0 - p]
        } else {
            [1.0 - p, p]
        };
        intervals.push(Interval {
            duration: end - start,
            distribution: sv(&q),
        });
        start = end;
    }
    ShiftSchedule::new(intervals).expect("catalog schedules are valid")
}

fn shifted(schedule: ShiftSchedule, agents: Vec<AgentSpec>) -> MarketConfig {
    MarketConfig {
        states: 2,
        delta: 0.01,
        horizon: schedule.total_duration(),
        generator: Generator::Shift(schedule),
        agents,
        initial_wealths: None,
        seed: BASE_SEED,
        strategy_floor: DEFAULT_STRATEGY_FLOOR,
    }
}

fn seeds(count: usize) -> SeedRange {
    SeedRange {
        base: BASE_SEED,
        count,
    }
}

fn wealth_outputs() -> Vec<Output> {
    vec![
        Output::WindowedWealth {
            window: super::stats::DEFAULT_WINDOW,
            points: 500,
        },
        Output::TerminalWealth,
        Output::Regret,
        Output::WealthDistribution { from: 0.5, to: 1.0 },
        Output::SurvivalTime,
    ]
}

fn regret_outputs() -> Vec<Output> {
    vec![Output::TerminalWealth, Output::Regret]
}

const FIG2_MODELS: [[f64; 2]; 3] = [[0.8, 0.2], [0.7, 0.3], [0.6, 0.4]];
const FIG2_WIDE_MODELS: [[f64; 2]; 4] = [[0.8, 0.2], [0.7, 0.3], [0.6, 0.4], [0.5, 0.5]];

/// Probability of the favored state in the shift construction.
const SHIFT_P: f64 = 0.75;

fn shift_support() -> Vec<SimplexVector> {
    models(&[[SHIFT_P, 1.0 - SHIFT_P], [1.0 - SHIFT_P, SHIFT_P]])
}

fn noisy(eta: f64, name: &str) -> Scenario {
    Scenario {
        name: name.into(),
        description: format!(
            "Bayesian with eta = {eta} noisy updates over the true model (0.7, 0.3) and (0.6, 0.4)"
        ),
        config: stationary(
            [0.7, 0.3],
            100_000,
            vec![AgentSpec::NoisyBayes {
                models: models(&[[0.7, 0.3], [0.6, 0.4]]),
                prior: None,
                eta,
            }],
        ),
        seeds: seeds(50),
        outputs: regret_outputs(),
        checks: vec![],
        full_scale: Some(FullScale {
            horizon: 1_000_000,
            seeds: 50,
        }),
    }
}

fn robust_blocks(name: &str, fractions: &[f64], description: &str) -> Scenario {
    let horizon = 160_000;
    let config = if fractions.len() == 1 {
        let mut c = stationary([SHIFT_P, 1.0 - SHIFT_P], horizon, vec![]);
        c.agents = vec![AgentSpec::RobustBayes {
            models: shift_support(),
            prior: None,
        }];
        c
    } else {
        shifted(
            alternating(SHIFT_P, horizon, fractions),
            vec![AgentSpec::RobustBayes {
                models: shift_support(),
                prior: None,
            }],
        )
    };
    Scenario {
        name: name.into(),
        description: description.into(),
        config,
        seeds: seeds(50),
        outputs: regret_outputs(),
        checks: vec![],
        full_scale: Some(FullScale {
            horizon: 1_600_000,
            seeds: 50,
        }),
    }
}

/// Every built-in scenario, in catalog order. Names are unique.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let fig1_bayes = AgentSpec::Bayes {
        models: models(&[[0.8, 0.2], [0.9, 0.1], [0.3, 0.7]]),
        prior: None,
    };
    let fig1_ucb = AgentSpec::Ucb {
        models: models(&[[0.7, 0.3], [0.9, 0.1], [0.3, 0.7]]),
    };
    let mut fig1_outputs = wealth_outputs();
    fig1_outputs.push(Output::EarlyWealthDistribution { steps: 10_000 });

    let prop7_horizon = 90_000;
    let prop7_schedule = alternating(SHIFT_P, prop7_horizon, &[2.0 / 3.0, 1.0 / 3.0]);

    vec![
        Scenario {
            name: "fig1".into(),
            description: "Bayesian whose prior misses the truth (0.7, 0.3) against UCB over actions containing it"
                .into(),
            config: stationary([0.7, 0.3], 100_000, vec![fig1_bayes, fig1_ucb]),
            seeds: seeds(20),
            outputs: fig1_outputs,
            checks: vec![
                ScenarioCheck::MeanTerminalWealthAbove { agent: 1, level: 0.9 },
                ScenarioCheck::EarlyShareAbove { agent: 0, steps: 10_000, level: 0.5, min_fraction: 0.3 },
            ],
            full_scale: Some(FullScale { horizon: 1_000_000, seeds: 1 }),
        },
        Scenario {
            name: "fig2a".into(),
            description: "Two Bayesians with the truth in support; the second also considers (0.5, 0.5)".into(),
            config: stationary(
                [0.7, 0.3],
                100_000,
                vec![
                    AgentSpec::Bayes { models: models(&FIG2_MODELS), prior: None },
                    AgentSpec::Bayes { models: models(&FIG2_WIDE_MODELS), prior: None },
                ],
            ),
            seeds: seeds(20),
            outputs: wealth_outputs(),
            checks: vec![],
            full_scale: Some(FullScale { horizon: 1_000_000, seeds: 1 }),
        },
        Scenario {
            name: "fig2b".into(),
            description: "Two UCB learners over the model sets of fig2a".into(),
            config: stationary(
                [0.7, 0.3],
                100_000,
                vec![
                    AgentSpec::Ucb { models: models(&FIG2_MODELS) },
                    AgentSpec::Ucb { models: models(&FIG2_WIDE_MODELS) },
                ],
            ),
            seeds: seeds(20),
            outputs: wealth_outputs(),
            checks: vec![],
            full_scale: Some(FullScale { horizon: 1_000_000, seeds: 1 }),
        },
        Scenario {
            name: "fig2c".into(),
            description: "Bayesian against UCB, both over (0.8, 0.2), (0.7, 0.3), (0.6, 0.4)".into(),
            config: stationary(
                [0.7, 0.3],
                100_000,
                vec![
                    AgentSpec::Bayes { models: models(&FIG2_MODELS), prior: None },
                    AgentSpec::Ucb { models: models(&FIG2_MODELS) },
                ],
            ),
            seeds: seeds(50),
            outputs: wealth_outputs(),
            checks: vec![ScenarioCheck::TerminalWealthAbove { agent: 0, level: 0.9, min_fraction: 0.95 }],
            full_scale: Some(FullScale { horizon: 1_000_000, seeds: 1 }),
        },
        Scenario {
            name: "prop7".into(),
            description: "Standard Bayesian over {(3/4, 1/4), (1/4, 3/4)} with one shift at 2T/3".into(),
            config: shifted(
                prop7_schedule.clone(),
                vec![AgentSpec::Bayes { models: shift_support(), prior: None }],
            ),
            seeds: seeds(50),
            outputs: regret_outputs(),
            checks: vec![ScenarioCheck::RegretRate { agent: 0, min_rate: 1.0 / 23.0, min_fraction: 0.9 }],
            full_scale: Some(FullScale { horizon: 900_000, seeds: 50 }),
        },
        robust_blocks(
            "thm8_stationary",
            &[1.0],
            "Robust Bayesian over {(3/4, 1/4), (1/4, 3/4)} with no shift",
        ),
        robust_blocks(
            "thm8_shift",
            &[2.0 / 3.0, 1.0 / 3.0],
            "Robust Bayesian in the prop7 construction: one shift at 2T/3",
        ),
        robust_blocks(
            "thm8_shift4",
            &[0.25, 0.25, 0.25, 0.25],
            "Robust Bayesian over four equal alternating blocks",
        ),
        Scenario {
            name: "thm2".into(),
            description: "Fixed agent playing the truth (0.7, 0.3)".into(),
            config: stationary([0.7, 0.3], 10_000, vec![AgentSpec::Fixed { alpha: sv(&[0.7, 0.3]) }]),
            seeds: seeds(500),
            outputs: regret_outputs(),
            checks: vec![],
            full_scale: None,
        },
        Scenario {
            name: "lemma1".into(),
            description: "Fixed agent playing (0.5, 0.5) under (0.75, 0.25)".into(),
            config: stationary([0.75, 0.25], 10_000, vec![AgentSpec::Fixed { alpha: sv(&[0.5, 0.5]) }]),
            seeds: seeds(500),
            outputs: regret_outputs(),
            checks: vec![],
            full_scale: None,
        },
        noisy(0.1, "thm5"),
        noisy(0.05, "thm5_eta005"),
    ]
}

pub fn builtin_names() -> Vec<String> {
    builtin_scenarios().into_iter().map(|s| s.name).collect()
}

pub fn builtin(name: &str) -> Result<Scenario> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::invalid(format!("no built-in scenario named {name:?}")))
}

/// `(q_0 - eps, q_1 + eps)`: total-variation distance `eps` from `truth`,
/// tilted toward the second state.
pub fn perturbed_truth(truth: &SimplexVector, eps: f64) -> Result<SimplexVector> {
    if truth.len() != 2 {
        return Err(Error::Unsupported(
            "tilted perturbations are defined for two states".into(),
        ));
    }
    SimplexVector::new(vec![truth[0] - eps, truth[1] + eps])
}

pub const SWEEP_EPS: [f64; 4] = [0.02, 0.04, 0.08, 0.16];

/// Survival-time sweeps of an inaccurate Bayesian against competitors with
/// constant, logarithmic and square-root regret.
pub fn builtin_sweeps() -> Vec<SweepSpec> {
    let truth = sv(&[0.5, 0.5]);
    vec![
        SweepSpec {
            name: "obs1".into(),
            description: "against the fixed truth player (constant regret)".into(),
            truth: truth.clone(),
            competitor: AgentSpec::Fixed {
                alpha: truth.clone(),
            },
            initial_share: 0.9,
            eps: SWEEP_EPS.to_vec(),
            seeds: seeds(100),
            max_horizon: 200_000,
            stop_share: 0.2,
            target_exponent: -2.0,
            slope_band: (-2.5, -1.5),
        },
        SweepSpec {
            name: "obs2".into(),
            description: "against UCB over (0.5, 0.5), (0.9, 0.1), (0.1, 0.9) (logarithmic regret)"
                .into(),
            truth: truth.clone(),
            competitor: AgentSpec::Ucb {
                models: models(&[[0.5, 0.5], [0.9, 0.1], [0.1, 0.9]]),
            },
            initial_share: 0.5,
            eps: SWEEP_EPS.to_vec(),
            seeds: seeds(100),
            max_horizon: 4_000_000,
            stop_share: 0.2,
            target_exponent: -3.0,
            slope_band: (-3.5, -2.5),
        },
        SweepSpec {
            name: "obs3".into(),
            description: "against projected gradient descent on [0.2, 0.8]^2 (square-root regret)"
                .into(),
            truth: truth.clone(),
            competitor: AgentSpec::Ogd {
                step_constant: OBS3_STEP_CONSTANT,
                floor: Some(OBS3_DOMAIN_FLOOR),
            },
            // The learner starts at the uniform strategy, which is the truth.
            initial_share: 0.6,
            eps: SWEEP_EPS.to_vec(),
            seeds: seeds(100),
            max_horizon: 4_000_000,
            stop_share: 0.2,
            target_exponent: -4.0,
            slope_band: (-4.7, -3.3),
        },
    ]
}

pub const OBS3_STEP_CONSTANT: f64 = 0.5;
pub const OBS3_DOMAIN_FLOOR: f64 = 0.2;

pub fn builtin_sweep(name: &str) -> Result<SweepSpec> {
    builtin_sweeps()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::invalid(format!("no built-in sweep named {name:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::relative_entropy;
    use std::collections::HashSet;

    #[test]
    fn names_are_unique_and_scenarios_valid() {
        let all = builtin_scenarios();
        let names: HashSet<_> = all.iter().map(|s| s.name.clone()).collect();
        assert_eq!(names.len(), all.len());
        for s in &all {
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
        for required in [
            "fig1",
            "fig2a",
            "fig2b",
            "fig2c",
            "prop7",
            "thm8_stationary",
            "thm8_shift",
        ] {
            assert!(names.contains(required), "{required}");
        }
        let sweeps: HashSet<_> = builtin_sweeps().into_iter().map(|s| s.name).collect();
        assert_eq!(
            sweeps,
            ["obs1", "obs2", "obs3"]
                .into_iter()
                .map(String::from)
                .collect()
        );
    }

    #[test]
    fn prop7_schedule_matches_construction() {
        let s = builtin("prop7").unwrap();
        let Generator::Shift(schedule) = &s.config.generator else {
            panic!()
        };
        assert_eq!(schedule.intervals()[0].duration, 60_000);
        assert_eq!(schedule.intervals()[1].duration, 30_000);
        assert_eq!(
            schedule.intervals()[1].distribution.as_slice(),
            &[0.25, 0.75]
        );
    }

    #[test]
    fn perturbation_sits_between_pinsker_bounds() {
        let truth = sv(&[0.5, 0.5]);
        for eps in SWEEP_EPS {
            let q = perturbed_truth(&truth, eps).unwrap();
            let kl = relative_entropy(&truth, &q);
            // 2 eps^2 <= I <= 2 eps^2 / delta with delta = min_s q_s.
            assert!(kl >= 2.0 * eps * eps);
            assert!(kl <= 2.0 * eps * eps / 0.5);
            assert!((kl - 2.0 * eps * eps) / kl < 0.06);
        }
        assert!(perturbed_truth(&truth, 0.6).is_err());
    }
}
