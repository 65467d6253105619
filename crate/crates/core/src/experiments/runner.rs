//! Multi-seed execution of a scenario and its artifacts.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Generator, Market, MarketConfig, RunOutcome, RunRecord};
use crate::regret::{hindsight_value, survival_time, RegretLedger};

use super::plot::{render_histogram_svg, render_lines_svg};
use super::stats::{log_checkpoints, sliding_window_mean, thin_indices, WealthHistogram};
use super::{
    CheckResult, Conservation, Distribution, Output, RangeHistograms, RegretCurve, Scenario,
    ScenarioCheck, SummaryStats, WindowedWealth,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Full traces are kept for this many leading seeds.
    pub traces: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { traces: 1 }
    }
}

/// What one seed produced.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub outcome: RunOutcome,
    /// Per agent, at the horizon.
    pub regret: Vec<f64>,
    /// `regret_curve[i][agent]` at the `i`-th requested checkpoint.
    pub regret_curve: Vec<Vec<f64>>,
    /// Per agent, shares at `t = 0..=T`; empty unless requested.
    pub wealth: Vec<Vec<f64>>,
    pub record: Option<RunRecord>,
    pub identity_residual: f64,
}

/// Last step of each stationary interval.
fn interval_ends(config: &MarketConfig) -> Vec<usize> {
    match &config.generator {
        Generator::Stationary(_) => vec![config.horizon],
        Generator::Shift(schedule) => schedule
            .boundaries()
            .into_iter()
            .map(|(_, end)| end)
            .collect(),
    }
}

/// Runs `config` once. Regret is measured against the best fixed strategy of
/// each stationary interval, which for a stationary market is the usual
/// hindsight benchmark.
pub fn run_seed(
    config: &MarketConfig,
    checkpoints: &[usize],
    keep_wealth: bool,
    keep_record: bool,
) -> Result<SeedRun> {
    let seed = config.seed;
    let wrap = |e: Error| Error::Seed {
        seed,
        source: Box::new(e),
    };
    let mut market = Market::new(config).map_err(wrap)?;
    let agents = config.agents.len();
    let ends = interval_ends(config);
    let mut counts = vec![vec![0u64; config.states]; ends.len()];
    let mut interval = 0;
    let mut wealth: Vec<Vec<f64>> = if keep_wealth {
        config
            .initial_wealths()
            .iter()
            .map(|w| {
                let mut v = Vec::with_capacity(config.horizon + 1);
                v.push(*w);
                v
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut record = keep_record.then(|| RunRecord::start(config));
    let mut regret_curve = Vec::with_capacity(checkpoints.len());
    let mut next_checkpoint = checkpoints.iter().peekable();
    let regret_now = |market: &Market, counts: &[Vec<u64>]| -> Vec<f64> {
        let bench: f64 = counts.iter().map(|c| hindsight_value(c)).sum();
        market
            .cumulative_utility()
            .iter()
            .map(|u| bench - u)
            .collect()
    };

    while !market.is_finished() {
        let view = market.step().map_err(wrap)?;
        let t = view.t;
        while t > ends[interval] {
            interval += 1;
        }
        counts[interval][view.state] += 1;
        for (series, w) in wealth.iter_mut().zip(view.wealths) {
            series.push(*w);
        }
        if let Some(r) = record.as_mut() {
            r.push(&view);
        }
        while next_checkpoint.peek().is_some_and(|c| **c == t) {
            next_checkpoint.next();
            regret_curve.push(regret_now(&market, &counts));
        }
    }
    let outcome = market.outcome();
    let regret = regret_now(&market, &counts);
    if let Some(r) = record.as_mut() {
        r.outcome = outcome.clone();
    }
    debug_assert_eq!(regret.len(), agents);
    let identity_residual = RegretLedger::from_outcome(&outcome).identity_residual();
    Ok(SeedRun {
        seed,
        outcome,
        regret,
        regret_curve,
        wealth,
        record,
        identity_residual,
    })
}

/// Summary plus the traces kept for the leading seeds.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub summary: SummaryStats,
    pub traces: Vec<RunRecord>,
}

struct Accumulator {
    seeds: usize,
    terminal: Vec<Vec<f64>>,
    regret: Vec<Vec<f64>>,
    curve_sum: Vec<Vec<f64>>,
    wealth_sum: Vec<Vec<f64>>,
    ranges: Vec<(usize, usize)>,
    histograms: Vec<Vec<WealthHistogram>>,
    early: Vec<(u64, u64)>,
    conservation: Conservation,
    traces: Vec<RunRecord>,
}

/// Steps `first..=last` that an output's range covers.
fn output_range(output: &Output, horizon: usize) -> Option<(usize, usize)> {
    match output {
        Output::WealthDistribution { from, to } => {
            let first = ((from * horizon as f64).floor() as usize + 1).min(horizon);
            let last = ((to * horizon as f64).floor() as usize).clamp(first, horizon);
            Some((first, last))
        }
        Output::EarlyWealthDistribution { steps } => Some((1, (*steps).min(horizon))),
        _ => None,
    }
}

impl Accumulator {
    fn new(scenario: &Scenario, checkpoints: usize, keep_wealth: bool) -> Self {
        let agents = scenario.config.agents.len();
        let horizon = scenario.config.horizon;
        let ranges: Vec<(usize, usize)> = scenario
            .outputs
            .iter()
            .filter_map(|o| output_range(o, horizon))
            .collect();
        Accumulator {
            seeds: 0,
            terminal: vec![Vec::new(); agents],
            regret: vec![Vec::new(); agents],
            curve_sum: vec![vec![0.0; checkpoints]; agents],
            wealth_sum: if keep_wealth {
                vec![vec![0.0; horizon + 1]; agents]
            } else {
                Vec::new()
            },
            histograms: vec![vec![WealthHistogram::default(); agents]; ranges.len()],
            ranges,
            early: vec![(0, 0); scenario.checks.len()],
            conservation: Conservation::default(),
            traces: Vec::new(),
        }
    }

    fn add(&mut self, scenario: &Scenario, run: SeedRun) -> Result<()> {
        self.seeds += 1;
        for (n, w) in run.outcome.wealths.iter().enumerate() {
            self.terminal[n].push(*w);
            self.regret[n].push(run.regret[n]);
        }
        for (i, values) in run.regret_curve.iter().enumerate() {
            for (n, r) in values.iter().enumerate() {
                self.curve_sum[n][i] += r;
            }
        }
        for (sum, series) in self.wealth_sum.iter_mut().zip(&run.wealth) {
            for (acc, w) in sum.iter_mut().zip(series) {
                *acc += w;
            }
        }
        for ((first, last), hists) in self.ranges.iter().zip(self.histograms.iter_mut()) {
            for (hist, series) in hists.iter_mut().zip(&run.wealth) {
                hist.accumulate(series, *first..*last + 1)?;
            }
        }
        for (check, (above, total)) in scenario.checks.iter().zip(self.early.iter_mut()) {
            if let ScenarioCheck::EarlyShareAbove {
                agent,
                steps,
                level,
                ..
            } = check
            {
                let last = (*steps).min(scenario.config.horizon);
                let window = &run.wealth[*agent][1..=last];
                *above += window.iter().filter(|w| **w > *level).count() as u64;
                *total += window.len() as u64;
            }
        }
        self.conservation.absorb(&Conservation {
            max_price_error: run.outcome.max_price_error,
            max_wealth_error: run.outcome.max_wealth_error,
            max_identity_residual: run.identity_residual,
            min_floor_slack: run.outcome.min_floor_slack,
            clamp_events: run.outcome.clamp_events,
        });
        if let Some(record) = run.record {
            self.traces.push(record);
        }
        Ok(())
    }
}

fn needs_wealth(scenario: &Scenario) -> bool {
    scenario.outputs.iter().any(|o| {
        matches!(
            o,
            Output::WindowedWealth { .. }
                | Output::WealthDistribution { .. }
                | Output::EarlyWealthDistribution { .. }
                | Output::SurvivalTime
        )
    }) || scenario
        .checks
        .iter()
        .any(|c| matches!(c, ScenarioCheck::EarlyShareAbove { .. }))
}

fn evaluate(check: &ScenarioCheck, summary: &SummaryStats, early: (u64, u64)) -> CheckResult {
    let horizon = summary.horizon as f64;
    let (passed, detail) = match check {
        ScenarioCheck::TerminalWealthAbove {
            agent,
            level,
            min_fraction,
        } => {
            let f = summary.terminal_wealth[*agent].fraction(|w| w > *level);
            (f >= *min_fraction, format!("fraction {f:.4}"))
        }
        ScenarioCheck::MeanTerminalWealthAbove { agent, level } => {
            let m = summary.terminal_wealth[*agent].mean;
            (m > *level, format!("mean {m:.6}"))
        }
        ScenarioCheck::RegretRate {
            agent,
            min_rate,
            min_fraction,
        } => {
            let f = summary.regret[*agent].fraction(|r| r / horizon >= *min_rate);
            let mean_rate = summary.regret[*agent].mean / horizon;
            (
                f >= *min_fraction,
                format!("fraction {f:.4}, mean regret/T {mean_rate:.6}"),
            )
        }
        ScenarioCheck::EarlyShareAbove { min_fraction, .. } => {
            let f = if early.1 == 0 {
                0.0
            } else {
                early.0 as f64 / early.1 as f64
            };
            (
                f >= *min_fraction,
                format!("fraction {f:.4} of {} samples", early.1),
            )
        }
    };
    CheckResult {
        name: check.label(),
        passed,
        detail,
    }
}

/// Runs every seed of `scenario` and reduces the results in seed order, so
/// the summary does not depend on how seeds were scheduled.
pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> Result<ScenarioRun> {
    scenario.validate()?;
    let horizon = scenario.config.horizon;
    let wants_curve = scenario.outputs.contains(&Output::Regret);
    let checkpoints = if wants_curve {
        log_checkpoints(horizon, 20)
    } else {
        Vec::new()
    };
    let keep_wealth = needs_wealth(scenario);
    let mut acc = Accumulator::new(scenario, checkpoints.len(), keep_wealth);

    let seeds: Vec<(usize, u64)> = scenario.seeds.iter().enumerate().collect();
    let batch = rayon::current_num_threads().max(1);
    for chunk in seeds.chunks(batch) {
        let runs = chunk
            .par_iter()
            .map(|&(index, seed)| {
                let mut config = scenario.config.clone();
                config.seed = seed;
                run_seed(&config, &checkpoints, keep_wealth, index < options.traces)
            })
            .collect::<Result<Vec<_>>>()?;
        for run in runs {
            acc.add(scenario, run)?;
        }
    }

    let n = acc.seeds as f64;
    let agents: Vec<String> = scenario
        .config
        .agents
        .iter()
        .map(|a| a.kind().to_string())
        .collect();
    let mean_wealth: Vec<Vec<f64>> = acc
        .wealth_sum
        .iter()
        .map(|s| s.iter().map(|x| x / n).collect())
        .collect();

    let regret_curve = wants_curve.then(|| RegretCurve {
        t: checkpoints.clone(),
        mean: acc
            .curve_sum
            .iter()
            .map(|s| s.iter().map(|x| x / n).collect())
            .collect(),
    });
    let mut windowed_wealth = None;
    let mut survival = None;
    for output in &scenario.outputs {
        match output {
            Output::WindowedWealth { window, points } => {
                let window = (*window).min(horizon);
                let idx = thin_indices(horizon, *points);
                let mean = mean_wealth
                    .iter()
                    .map(|series| {
                        let smooth = sliding_window_mean(&series[1..], window)?;
                        Ok(idx.iter().map(|&i| smooth[i]).collect())
                    })
                    .collect::<Result<Vec<Vec<f64>>>>()?;
                windowed_wealth = Some(WindowedWealth {
                    window,
                    t: idx.iter().map(|i| i + 1).collect(),
                    mean,
                });
            }
            Output::SurvivalTime => {
                survival = Some(mean_wealth.iter().map(|s| survival_time(s)).collect());
            }
            _ => {}
        }
    }
    let wealth_distributions = acc
        .ranges
        .iter()
        .zip(acc.histograms)
        .map(|(&(first, last), agents)| RangeHistograms {
            first,
            last,
            agents,
        })
        .collect();

    let mut summary = SummaryStats {
        name: scenario.name.clone(),
        description: scenario.description.clone(),
        horizon,
        seeds: scenario.seeds,
        agents,
        terminal_wealth: acc
            .terminal
            .into_iter()
            .map(Distribution::from_samples)
            .collect(),
        regret: acc
            .regret
            .into_iter()
            .map(Distribution::from_samples)
            .collect(),
        regret_curve,
        windowed_wealth,
        wealth_distributions,
        survival,
        fitted_exponents: Vec::new(),
        conservation: acc.conservation,
        checks: Vec::new(),
    };
    summary.checks = scenario
        .checks
        .iter()
        .zip(&acc.early)
        .map(|(check, early)| evaluate(check, &summary, *early))
        .collect();
    Ok(ScenarioRun {
        summary,
        traces: acc.traces,
    })
}

/// Writes `summary.json`, one `trace_<seed>` file per kept trace and
/// `plot_<name>.svg` into `dir`.
pub fn write_artifacts(run: &ScenarioRun, dir: &Path, format: TraceFormat) -> Result<()> {
    fs::create_dir_all(dir)?;
    let summary = &run.summary;
    fs::write(dir.join("summary.json"), summary.to_json_string()?)?;
    for (record, seed) in run.traces.iter().zip(summary.seeds.iter()) {
        match format {
            TraceFormat::Csv => {
                let file = fs::File::create(dir.join(format!("trace_{seed}.csv")))?;
                record.write_csv(BufWriter::new(file))?;
            }
            TraceFormat::Json => {
                fs::write(
                    dir.join(format!("trace_{seed}.json")),
                    serde_json::to_string(&record.to_json())? + "\n",
                )?;
            }
        }
    }
    fs::write(
        dir.join(format!("plot_{}.svg", summary.name)),
        render_summary(summary),
    )?;
    Ok(())
}

fn render_summary(summary: &SummaryStats) -> String {
    let label = |n: usize| format!("agent {n} ({})", summary.agents[n]);
    if let Some(w) = &summary.windowed_wealth {
        let series: Vec<(String, Vec<(f64, f64)>)> = w
            .mean
            .iter()
            .enumerate()
            .map(|(n, ys)| {
                (
                    label(n),
                    w.t.iter()
                        .map(|t| *t as f64)
                        .zip(ys.iter().copied())
                        .collect(),
                )
            })
            .collect();
        let title = format!(
            "{}: wealth share, trailing mean over {} steps",
            summary.name, w.window
        );
        return render_lines_svg(&title, "step", &series);
    }
    if let Some(c) = &summary.regret_curve {
        let series: Vec<(String, Vec<(f64, f64)>)> = c
            .mean
            .iter()
            .enumerate()
            .map(|(n, ys)| {
                (
                    label(n),
                    c.t.iter()
                        .map(|t| (*t as f64).ln())
                        .zip(ys.iter().copied())
                        .collect(),
                )
            })
            .collect();
        return render_lines_svg(
            &format!("{}: mean regret (nats)", summary.name),
            "ln t",
            &series,
        );
    }
    let mut hist = WealthHistogram::default();
    let terminal = &summary.terminal_wealth[0].per_seed;
    // Terminal shares are always in [0, 1].
    let _ = hist.accumulate(terminal, 0..terminal.len());
    render_histogram_svg(
        &format!("{}: terminal share of agent 0", summary.name),
        &hist.counts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{builtin, SeedRange};
    use crate::regret::regret;
    use crate::shift::shifted_regret;
    use approx::assert_relative_eq;

    fn small(name: &str, horizon: usize, seeds: usize) -> Scenario {
        builtin(name)
            .unwrap()
            .with_horizon(horizon)
            .unwrap()
            .with_seeds(SeedRange {
                base: 11,
                count: seeds,
            })
    }

    #[test]
    fn single_agent_wealth_is_constant_one() {
        let run = run_scenario(&small("thm5", 2_000, 3), &RunOptions::default()).unwrap();
        let s = &run.summary;
        assert!(s.terminal_wealth[0].per_seed.iter().all(|w| *w == 1.0));
        let mut scenario = small("thm2", 500, 2);
        scenario.outputs = vec![
            Output::WindowedWealth {
                window: 50,
                points: 20,
            },
            Output::WealthDistribution { from: 0.0, to: 1.0 },
            Output::SurvivalTime,
        ];
        let s = run_scenario(&scenario, &RunOptions::default())
            .unwrap()
            .summary;
        assert!(s.windowed_wealth.unwrap().mean[0].iter().all(|w| *w == 1.0));
        let hist = &s.wealth_distributions[0].agents[0];
        assert_eq!(hist.counts[99], hist.samples);
        assert_eq!(hist.mean, 1.0);
    }

    #[test]
    fn seed_regret_matches_trace() {
        let scenario = small("fig2c", 3_000, 1);
        let mut config = scenario.config.clone();
        config.seed = 5;
        let run = run_seed(&config, &[1000, 3000], true, true).unwrap();
        let record = run.record.as_ref().unwrap();
        for n in 0..2 {
            let r = regret(&record.strategy_history(n), &record.realized).unwrap();
            assert_relative_eq!(run.regret[n], r, epsilon = 1e-8);
            assert_relative_eq!(run.regret_curve[1][n], r, epsilon = 1e-8);
            assert_eq!(run.wealth[n][1..], record.wealth_series(n)[..]);
        }
        assert!(run.identity_residual < 1e-9);
    }

    #[test]
    fn shifted_regret_uses_interval_benchmark() {
        let scenario = small("prop7", 900, 1);
        let mut config = scenario.config.clone();
        config.seed = 8;
        let run = run_seed(&config, &[], false, true).unwrap();
        let record = run.record.unwrap();
        let Generator::Shift(schedule) = &config.generator else {
            panic!()
        };
        let expected =
            shifted_regret(&record.strategy_history(0), schedule, &record.realized).unwrap();
        assert_relative_eq!(run.regret[0], expected, epsilon = 1e-8);
    }

    #[test]
    fn distribution_mean_matches_time_average() {
        let mut scenario = small("fig2a", 2_000, 2);
        scenario.outputs = vec![Output::WealthDistribution { from: 0.0, to: 1.0 }];
        let run = run_scenario(&scenario, &RunOptions { traces: 2 }).unwrap();
        let hist = &run.summary.wealth_distributions[0].agents[1];
        let average: f64 = run
            .traces
            .iter()
            .map(|r| r.wealth_series(1).iter().sum::<f64>())
            .sum::<f64>()
            / (2.0 * 2_000.0);
        assert!((hist.mean - average).abs() < 1e-9);
    }

    #[test]
    fn artifacts_are_reproducible() {
        let scenario = small("fig1", 3_000, 3);
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for dir in &dirs {
            let run = run_scenario(&scenario, &RunOptions { traces: 2 }).unwrap();
            write_artifacts(&run, dir.path(), TraceFormat::Csv).unwrap();
        }
        let mut names: Vec<String> = fs::read_dir(dirs[0].path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(
            names,
            vec![
                "plot_fig1.svg",
                "summary.json",
                "trace_11.csv",
                "trace_12.csv"
            ]
        );
        for name in names {
            let a = fs::read(dirs[0].path().join(&name)).unwrap();
            let b = fs::read(dirs[1].path().join(&name)).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }

    #[test]
    fn trace_csv_header() {
        let scenario = small("fig2c", 10, 1);
        let run = run_scenario(&scenario, &RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        run.traces[0].write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t,realized_state,wealth_0,wealth_1,alpha_0_0,alpha_0_1,alpha_1_0,alpha_1_1"
        );
        assert_eq!(text.lines().count(), 11);
    }
}
