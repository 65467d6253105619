//! Regret accounting against the best fixed strategy in hindsight, plus the
//! survival statistics built on top of it. All quantities are in nats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::RunOutcome;
use crate::simplex::SimplexVector;

/// `U^t(alpha) = log alpha_s` for the realized state `s`.
pub fn step_utility(alpha: &SimplexVector, state: usize) -> f64 {
    let a = alpha[state];
    if a <= 0.0 {
        f64::NEG_INFINITY
    } else {
        a.ln()
    }
}

pub fn cumulative_utility(history: &[SimplexVector], states: &[usize]) -> Result<f64> {
    if history.len() != states.len() {
        return Err(Error::invalid(
            "strategy history and state sequence differ in length",
        ));
    }
    Ok(history
        .iter()
        .zip(states)
        .map(|(a, &s)| step_utility(a, s))
        .sum())
}

/// Benchmark value `sum_s n_s log(n_s / T)` for the given state counts.
pub fn hindsight_value(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|n| **n > 0)
        .map(|&n| {
            let n = n as f64;
            n * (n / total).ln()
        })
        .sum()
}

/// The best fixed strategy in hindsight is the empirical distribution.
/// Unobserved states get weight zero; the benchmark is not a playable
/// strategy, so it is exempt from any floor.
pub fn hindsight_best(states: &[usize], num_states: usize) -> Result<(SimplexVector, f64)> {
    if states.is_empty() {
        return Err(Error::invalid("hindsight benchmark of an empty sequence"));
    }
    let mut counts = vec![0u64; num_states];
    for &s in states {
        if s >= num_states {
            return Err(Error::invalid(format!("state {s} out of range")));
        }
        counts[s] += 1;
    }
    let total = states.len() as f64;
    let best = SimplexVector::normalized(counts.iter().map(|&n| n as f64 / total).collect())?;
    Ok((best, hindsight_value(&counts)))
}

/// `max_alpha sum_t U^t(alpha) - sum_t U^t(alpha_t)`.
pub fn regret(history: &[SimplexVector], states: &[usize]) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::invalid("regret of an empty history"));
    }
    let (_, bench) = hindsight_best(states, history[0].len())?;
    Ok(bench - cumulative_utility(history, states)?)
}

/// Expected regret of always playing `alpha` for `steps` steps under `q`:
/// `steps * I_q(alpha) + (S - 1) / 2`, the second term being the large-sample
/// expected regret of playing `q` itself.
pub fn expected_constant_strategy_regret(
    q: &SimplexVector,
    alpha: &SimplexVector,
    steps: usize,
) -> f64 {
    steps as f64 * crate::market::relative_entropy(q, alpha) + (q.len() as f64 - 1.0) / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentAccount {
    pub cumulative_utility: f64,
    pub regret: f64,
    pub terminal_wealth: f64,
    pub log_wealth: f64,
    pub initial_log_wealth: f64,
}

/// Per-agent regret and the pairwise regret-difference matrix of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub benchmark: f64,
    pub agents: Vec<AgentAccount>,
    /// `regret_differences[n][m] = R^n - R^m`.
    pub regret_differences: Vec<Vec<f64>>,
}

impl RegretLedger {
    pub fn from_outcome(outcome: &RunOutcome) -> Self {
        let benchmark = hindsight_value(&outcome.state_counts);
        let agents: Vec<AgentAccount> = (0..outcome.cumulative_utility.len())
            .map(|n| AgentAccount {
                cumulative_utility: outcome.cumulative_utility[n],
                regret: benchmark - outcome.cumulative_utility[n],
                terminal_wealth: outcome.wealths[n],
                log_wealth: outcome.log_wealths[n],
                initial_log_wealth: outcome.initial_log_wealths[n],
            })
            .collect();
        let regret_differences = agents
            .iter()
            .map(|a| agents.iter().map(|b| a.regret - b.regret).collect())
            .collect();
        RegretLedger {
            benchmark,
            agents,
            regret_differences,
        }
    }

    /// Largest `|R^n - R^m + log r^{nm}_T - log r^{nm}_0|` over agent pairs.
    /// Zero up to rounding, since prices cancel out of wealth ratios.
    pub fn identity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (n, a) in self.agents.iter().enumerate() {
            for (m, b) in self.agents.iter().enumerate().skip(n + 1) {
                let ratio_change =
                    (a.log_wealth - b.log_wealth) - (a.initial_log_wealth - b.initial_log_wealth);
                worst = worst.max((self.regret_differences[n][m] + ratio_change).abs());
            }
        }
        worst
    }

    pub fn to_json(&self) -> serde_json::Value {
        let agents: Vec<_> = self
            .agents
            .iter()
            .map(|a| {
                serde_json::json!({
                    "cumulative_utility": a.cumulative_utility,
                    "regret": a.regret,
                    "terminal_wealth": a.terminal_wealth,
                })
            })
            .collect();
        serde_json::json!({
            "benchmark": self.benchmark,
            "agents": agents,
            "regret_differences": self.regret_differences,
        })
    }
}

/// Regret gap beyond which agent `n` must hold less than `wealth` relative
/// to agent `m`: once `R^n - R^m > log(r^{nm}_0 / wealth)`, `w^n < wealth`.
pub fn vanishing_threshold(initial_log_ratio: f64, wealth: f64) -> f64 {
    initial_log_ratio - wealth.ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Survival {
    Survives,
    Vanishes,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalThresholds {
    pub min_seeds: usize,
    /// Minimum fraction of seeds ending above the wealth threshold to survive.
    pub survive_fraction: f64,
    /// Median terminal wealth below which the agent is said to vanish.
    pub vanish_median: f64,
}

impl Default for SurvivalThresholds {
    fn default() -> Self {
        SurvivalThresholds {
            min_seeds: 100,
            survive_fraction: 0.95,
            vanish_median: 1e-3,
        }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Finite-horizon reading of survive/vanish over a set of seeds.
///
/// Compares the end of the run with the start of its last decade (one tenth
/// of the horizon): surviving requires the above-`threshold` fraction to be
/// high and not falling, vanishing requires a tiny and still falling median.
pub fn classify_survival(
    trajectories: &[Vec<f64>],
    threshold: f64,
    limits: &SurvivalThresholds,
) -> Result<Survival> {
    if trajectories.len() < limits.min_seeds {
        return Err(Error::invalid(format!(
            "survival needs at least {} seeds, got {}",
            limits.min_seeds,
            trajectories.len()
        )));
    }
    let len = trajectories[0].len();
    if len == 0 || trajectories.iter().any(|t| t.len() != len) {
        return Err(Error::invalid(
            "wealth trajectories must be nonempty and of equal length",
        ));
    }
    let last = len - 1;
    let decade = len / 10;
    let fraction_above = |i: usize| {
        trajectories.iter().filter(|t| t[i] > threshold).count() as f64 / trajectories.len() as f64
    };
    let median_at = |i: usize| median(trajectories.iter().map(|t| t[i]).collect());

    let end_fraction = fraction_above(last);
    if end_fraction >= limits.survive_fraction && end_fraction >= fraction_above(decade) {
        return Ok(Survival::Survives);
    }
    let end_median = median_at(last);
    if end_median < limits.vanish_median && end_median < median_at(decade) {
        return Ok(Survival::Vanishes);
    }
    Ok(Survival::Inconclusive)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalTime {
    pub tau: usize,
    /// The series still ends at or above one half.
    pub censored: bool,
}

/// Last index at which the mean share is at least one half; index 0 is the
/// initial share. Transient dips before the final decline do not end
/// survival. Zero if the share is never above one half after the start.
pub fn survival_time(mean_wealth: &[f64]) -> SurvivalTime {
    let tau = mean_wealth.iter().rposition(|w| *w >= 0.5).unwrap_or(0);
    let censored = mean_wealth.last().is_some_and(|w| *w >= 0.5);
    SurvivalTime { tau, censored }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return Err(Error::invalid(format!(
            "power-law fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::invalid("power-law fit needs positive values"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "power-law fit needs at least two distinct x values",
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        1.0 - residual / syy
    };
    Ok(PowerLawFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Least-squares fit `y = a + b x`; returns `(a, b)`.
pub fn fit_line(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::invalid("line fit needs at least 2 points"));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("line fit needs distinct x values"));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let b = sxy / sxx;
    Ok((mean_y - b * mean_x, b))
}
