//! Market mechanics: state sampling, price clearing, wealth evolution and
//! the relative-entropy utilities the rest of the crate is built on.
//!
//! Wealth is tracked as per-agent log shares. Prices clear against the
//! linear shares, and after every step the log shares are renormalized with
//! a log-sum-exp so rounding never accumulates into the conservation law.

use std::io::Write;

use log::debug;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{self, AgentSpec, Strategy};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::shift::ShiftSchedule;
use crate::simplex::{
    log_sum_exp, SimplexVector, ARITHMETIC_TOL, CONSTRUCTION_TOL, DEFAULT_STRATEGY_FLOOR,
};

/// Draws a state by inverse CDF over states in index order. Consumes exactly
/// one `u64` from `rng`.
pub fn sample_state<R: Rng + ?Sized>(q: &SimplexVector, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (s, p) in q.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return s;
        }
    }
    // u landed in the rounding gap above the last partial sum.
    q.iter().rposition(|p| *p > 0.0).unwrap_or(q.len() - 1)
}

/// Prices at which every Arrow security clears: `p_s = sum_n alpha^n_s w^n`.
pub fn clearing_prices(strategies: &[SimplexVector], wealths: &[f64]) -> Result<SimplexVector> {
    if strategies.len() != wealths.len() || strategies.is_empty() {
        return Err(Error::invalid(format!(
            "{} strategies for {} wealths",
            strategies.len(),
            wealths.len()
        )));
    }
    let states = strategies[0].len();
    if strategies.iter().any(|a| a.len() != states) {
        return Err(Error::invalid(
            "strategies disagree on the number of states",
        ));
    }
    let mut prices = vec![0.0; states];
    for (alpha, w) in strategies.iter().zip(wealths) {
        for (p, a) in prices.iter_mut().zip(alpha.iter()) {
            *p += a * w;
        }
    }
    SimplexVector::with_tolerance(prices, ARITHMETIC_TOL)
}

/// One step of wealth evolution: `w'^n = alpha^n_s w^n / p_s`.
pub fn update_wealths(
    strategies: &[SimplexVector],
    wealths: &[f64],
    prices: &SimplexVector,
    state: usize,
) -> Result<Vec<f64>> {
    if strategies.len() != wealths.len() {
        return Err(Error::invalid("mismatched agent counts"));
    }
    if state >= prices.len() {
        return Err(Error::invalid(format!("state {state} out of range")));
    }
    let price = prices[state];
    if price <= 0.0 {
        return Err(Error::DegenerateMarket { step: 0, state });
    }
    Ok(strategies
        .iter()
        .zip(wealths)
        .map(|(alpha, w)| alpha[state] * w / price)
        .collect())
}

/// `sum_t log(alpha^n_{s_t,t} / alpha^m_{s_t,t}) + log r0`.
///
/// Returns `-inf` if agent `n` ever put zero weight on a realized state
/// (it has vanished), `+inf` if only agent `m` did.
pub fn log_wealth_ratio(
    history_n: &[SimplexVector],
    history_m: &[SimplexVector],
    states: &[usize],
    initial_ratio: f64,
) -> Result<f64> {
    if history_n.len() != states.len() || history_m.len() != states.len() {
        return Err(Error::invalid(
            "strategy histories and state sequence differ in length",
        ));
    }
    if initial_ratio <= 0.0 {
        return Err(Error::invalid("initial wealth ratio must be positive"));
    }
    let mut total = initial_ratio.ln();
    let mut m_vanished = false;
    for ((a_n, a_m), &s) in history_n.iter().zip(history_m).zip(states) {
        if a_n[s] <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if a_m[s] <= 0.0 {
            m_vanished = true;
            continue;
        }
        total += (a_n[s] / a_m[s]).ln();
    }
    Ok(if m_vanished { f64::INFINITY } else { total })
}

/// Relative entropy `I_q(alpha) = sum_s q_s ln(q_s / alpha_s)` in nats.
/// Infinite when `alpha` misses part of the support of `q`.
pub fn relative_entropy(q: &SimplexVector, alpha: &SimplexVector) -> f64 {
    let mut total = 0.0;
    for (qs, a) in q.iter().zip(alpha.iter()) {
        if *qs <= 0.0 {
            continue;
        }
        if *a <= 0.0 {
            return f64::INFINITY;
        }
        total += qs * (qs / a).ln();
    }
    total.max(0.0)
}

/// Where states come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Stationary(SimplexVector),
    Shift(ShiftSchedule),
}

impl Generator {
    pub fn distributions(&self) -> Vec<&SimplexVector> {
        match self {
            Generator::Stationary(q) => vec![q],
            Generator::Shift(schedule) => schedule
                .intervals()
                .iter()
                .map(|i| &i.distribution)
                .collect(),
        }
    }

    fn schedule(&self, horizon: usize) -> ShiftSchedule {
        match self {
            Generator::Stationary(q) => ShiftSchedule::stationary(q.clone(), horizon),
            Generator::Shift(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub states: usize,
    /// Lower bound on every entry of the state distributions and of Bayesian models.
    pub delta: f64,
    pub generator: Generator,
    pub horizon: usize,
    pub agents: Vec<AgentSpec>,
    /// Equal shares when absent.
    pub initial_wealths: Option<Vec<f64>>,
    pub seed: u64,
    pub strategy_floor: f64,
}

impl MarketConfig {
    pub fn stationary(q: SimplexVector, horizon: usize, agents: Vec<AgentSpec>, seed: u64) -> Self {
        let delta = q.min().min(0.01);
        MarketConfig {
            states: q.len(),
            delta,
            generator: Generator::Stationary(q),
            horizon,
            agents,
            initial_wealths: None,
            seed,
            strategy_floor: DEFAULT_STRATEGY_FLOOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.states < 2 {
            return Err(Error::invalid("a market needs at least 2 states"));
        }
        if !(self.delta > 0.0 && self.delta * self.states as f64 <= 1.0) {
            return Err(Error::invalid(format!(
                "delta {} must lie in (0, 1/S]",
                self.delta
            )));
        }
        if !(self.strategy_floor > 0.0 && self.strategy_floor * (self.states as f64) < 1.0) {
            return Err(Error::invalid(format!(
                "strategy floor {} must lie in (0, 1/S)",
                self.strategy_floor
            )));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        for q in self.generator.distributions() {
            if q.len() != self.states {
                return Err(Error::invalid(format!(
                    "state distribution {q:?} does not have {} entries",
                    self.states
                )));
            }
            q.check_floor(self.delta)?;
        }
        if let Generator::Shift(schedule) = &self.generator {
            if schedule.total_duration() != self.horizon {
                return Err(Error::invalid(format!(
                    "shift schedule covers {} steps but the horizon is {}",
                    schedule.total_duration(),
                    self.horizon
                )));
            }
        }
        if self.agents.is_empty() {
            return Err(Error::invalid("a market needs at least one agent"));
        }
        for (i, spec) in self.agents.iter().enumerate() {
            spec.validate(self.states, self.delta)
                .map_err(|e| Error::invalid(format!("agent {i}: {e}")))?;
        }
        if let Some(w) = &self.initial_wealths {
            if w.len() != self.agents.len() {
                return Err(Error::invalid("one initial wealth per agent is required"));
            }
            if w.iter().any(|x| !x.is_finite() || *x <= 0.0) {
                return Err(Error::invalid("initial wealths must be positive"));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > CONSTRUCTION_TOL {
                return Err(Error::invalid(format!(
                    "initial wealths sum to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }

    pub fn initial_wealths(&self) -> Vec<f64> {
        match &self.initial_wealths {
            Some(w) => w.clone(),
            None => vec![1.0 / self.agents.len() as f64; self.agents.len()],
        }
    }

    /// The full state sequence this config produces.
    pub fn state_sequence(&self) -> Vec<usize> {
        let mut rng = rng::substream(self.seed, rng::STATES_LABEL);
        let schedule = self.generator.schedule(self.horizon);
        crate::shift::generate_shifted_states(&schedule, &mut rng)
    }
}

enum StateSource {
    Sampled {
        rng: StreamRng,
        schedule: ShiftSchedule,
        interval: usize,
        remaining: usize,
    },
    Fixed(Vec<usize>),
}

impl StateSource {
    fn next(&mut self, t: usize) -> usize {
        match self {
            StateSource::Sampled {
                rng,
                schedule,
                interval,
                remaining,
            } => {
                while *remaining == 0 {
                    *interval += 1;
                    *remaining = schedule.intervals()[*interval].duration;
                }
                *remaining -= 1;
                sample_state(&schedule.intervals()[*interval].distribution, rng)
            }
            StateSource::Fixed(states) => states[t],
        }
    }
}

/// What a single step produced.
#[derive(Debug)]
pub struct StepView<'a> {
    /// 1-based index of the step that just cleared.
    pub t: usize,
    pub state: usize,
    pub prices: &'a [f64],
    pub strategies: &'a [SimplexVector],
    /// Shares after the update.
    pub wealths: &'a [f64],
    pub log_wealths: &'a [f64],
}

/// Neumaier-compensated running sum; long runs accumulate 10^5-10^6 terms.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// A market that advances one step at a time.
///
/// Log wealth is kept as `initial + utility - offset`, where `offset` sums
/// the log prices and normalizers common to all agents, so wealth ratios
/// and utility differences agree up to a single rounding.
pub struct Market {
    states: usize,
    horizon: usize,
    floor: f64,
    agents: Vec<Box<dyn Strategy>>,
    source: StateSource,
    log_wealths: Vec<f64>,
    initial_log_wealths: Vec<f64>,
    wealths: Vec<f64>,
    prices: Vec<f64>,
    strategies: Vec<SimplexVector>,
    cumulative_utility: Vec<f64>,
    utility: Vec<CompensatedSum>,
    offset: CompensatedSum,
    counts: Vec<u64>,
    t: usize,
    clamp_events: u64,
    max_price_error: f64,
    max_wealth_error: f64,
    min_floor_slack: Option<f64>,
}

impl Market {
    pub fn new(config: &MarketConfig) -> Result<Self> {
        config.validate()?;
        let needs_sequence = config.agents.iter().any(AgentSpec::needs_full_sequence);
        let schedule = config.generator.schedule(config.horizon);
        let (source, sequence) = if needs_sequence {
            let seq = config.state_sequence();
            (StateSource::Fixed(seq.clone()), Some(seq))
        } else {
            let rng = rng::substream(config.seed, rng::STATES_LABEL);
            let first = schedule.intervals()[0].duration;
            (
                StateSource::Sampled {
                    rng,
                    schedule,
                    interval: 0,
                    remaining: first,
                },
                None,
            )
        };
        let agents = config
            .agents
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let ctx = agents::BuildContext {
                    states: config.states,
                    floor: config.strategy_floor,
                    seed: rng::substream_seed(config.seed, &rng::agent_label(i)),
                    sequence: sequence.as_deref(),
                };
                agents::build(spec, &ctx)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(config, agents, source))
    }

    /// A market driven by a fixed state sequence instead of the generator.
    pub fn with_states(config: &MarketConfig, states: Vec<usize>) -> Result<Self> {
        config.validate()?;
        if states.len() != config.horizon {
            return Err(Error::invalid(
                "state sequence length must equal the horizon",
            ));
        }
        if states.iter().any(|s| *s >= config.states) {
            return Err(Error::invalid("state index out of range"));
        }
        let agents = config
            .agents
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let ctx = agents::BuildContext {
                    states: config.states,
                    floor: config.strategy_floor,
                    seed: rng::substream_seed(config.seed, &rng::agent_label(i)),
                    sequence: Some(&states),
                };
                agents::build(spec, &ctx)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(config, agents, StateSource::Fixed(states)))
    }

    fn assemble(
        config: &MarketConfig,
        agents: Vec<Box<dyn Strategy>>,
        source: StateSource,
    ) -> Self {
        let wealths = config.initial_wealths();
        let log_wealths: Vec<f64> = wealths.iter().map(|w| w.ln()).collect();
        let uniform = SimplexVector::uniform(config.states).expect("validated state count");
        Market {
            states: config.states,
            horizon: config.horizon,
            floor: config.strategy_floor,
            strategies: vec![uniform; agents.len()],
            agents,
            source,
            initial_log_wealths: log_wealths.clone(),
            log_wealths,
            wealths,
            prices: vec![0.0; config.states],
            cumulative_utility: vec![0.0; config.agents.len()],
            utility: vec![CompensatedSum::default(); config.agents.len()],
            offset: CompensatedSum::default(),
            counts: vec![0; config.states],
            t: 0,
            clamp_events: 0,
            max_price_error: 0.0,
            max_wealth_error: 0.0,
            min_floor_slack: None,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.horizon
    }

    /// Completed steps.
    pub fn time(&self) -> usize {
        self.t
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn wealths(&self) -> &[f64] {
        &self.wealths
    }

    pub fn log_wealths(&self) -> &[f64] {
        &self.log_wealths
    }

    pub fn initial_log_wealths(&self) -> &[f64] {
        &self.initial_log_wealths
    }

    /// Per-agent `sum_t log alpha^n_{s_t}` so far.
    pub fn cumulative_utility(&self) -> &[f64] {
        &self.cumulative_utility
    }

    pub fn state_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    /// Smallest weight-floor slack reported by any agent so far.
    pub fn min_floor_slack(&self) -> Option<f64> {
        self.min_floor_slack
    }

    /// Largest `|sum p - 1|` and `|sum w - 1|` seen so far.
    pub fn conservation_errors(&self) -> (f64, f64) {
        (self.max_price_error, self.max_wealth_error)
    }

    pub fn step(&mut self) -> Result<StepView<'_>> {
        if self.is_finished() {
            return Err(Error::invalid("market already reached its horizon"));
        }
        let t = self.t + 1;
        for (i, agent) in self.agents.iter_mut().enumerate() {
            let alpha = agent.next_strategy(t).map_err(|e| Error::Agent {
                agent: i,
                step: t,
                source: Box::new(e),
            })?;
            if alpha.len() != self.states {
                return Err(Error::Agent {
                    agent: i,
                    step: t,
                    source: Box::new(Error::invalid("strategy has the wrong number of states")),
                });
            }
            let buf = &mut self.strategies[i];
            buf.as_mut_slice().copy_from_slice(alpha.as_slice());
            if buf.clamp_to_floor(self.floor) {
                self.clamp_events += 1;
                debug!(
                    "step {t}: strategy of agent {i} clamped to floor {}",
                    self.floor
                );
            }
        }

        self.prices.iter_mut().for_each(|p| *p = 0.0);
        for (alpha, w) in self.strategies.iter().zip(&self.wealths) {
            for (p, a) in self.prices.iter_mut().zip(alpha.iter()) {
                *p += a * w;
            }
        }
        let state = self.source.next(self.t);
        let price = self.prices[state];
        if price <= 0.0 {
            return Err(Error::DegenerateMarket { step: t, state });
        }
        self.offset.add(price.ln());
        let offset = self.offset.value();
        for (n, alpha) in self.strategies.iter().enumerate() {
            self.utility[n].add(alpha[state].ln());
            self.cumulative_utility[n] = self.utility[n].value();
            self.log_wealths[n] = self.initial_log_wealths[n] + self.cumulative_utility[n] - offset;
        }
        let norm = log_sum_exp(&self.log_wealths);
        self.offset.add(norm);
        let offset = self.offset.value();
        for (n, (lw, w)) in self
            .log_wealths
            .iter_mut()
            .zip(self.wealths.iter_mut())
            .enumerate()
        {
            *lw = self.initial_log_wealths[n] + self.cumulative_utility[n] - offset;
            *w = lw.exp();
        }
        self.counts[state] += 1;
        for (i, agent) in self.agents.iter_mut().enumerate() {
            agent.observe(state).map_err(|e| Error::Agent {
                agent: i,
                step: t,
                source: Box::new(e),
            })?;
            if let Some(slack) = agent.floor_slack() {
                self.min_floor_slack = Some(self.min_floor_slack.map_or(slack, |m| m.min(slack)));
            }
        }

        let price_sum: f64 = self.prices.iter().sum();
        let wealth_sum: f64 = self.wealths.iter().sum();
        self.max_price_error = self.max_price_error.max((price_sum - 1.0).abs());
        self.max_wealth_error = self.max_wealth_error.max((wealth_sum - 1.0).abs());
        self.t = t;
        Ok(StepView {
            t,
            state,
            prices: &self.prices,
            strategies: &self.strategies,
            wealths: &self.wealths,
            log_wealths: &self.log_wealths,
        })
    }

    /// Accounting of the market as it stands.
    pub fn outcome(&self) -> RunOutcome {
        RunOutcome {
            steps: self.t,
            state_counts: self.counts.clone(),
            cumulative_utility: self.cumulative_utility.clone(),
            initial_log_wealths: self.initial_log_wealths.clone(),
            log_wealths: self.log_wealths.clone(),
            wealths: self.wealths.clone(),
            clamp_events: self.clamp_events,
            max_price_error: self.max_price_error,
            max_wealth_error: self.max_wealth_error,
            min_floor_slack: self.min_floor_slack,
        }
    }
}

/// End-of-run accounting, enough to build a regret ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub steps: usize,
    pub state_counts: Vec<u64>,
    pub cumulative_utility: Vec<f64>,
    pub initial_log_wealths: Vec<f64>,
    pub log_wealths: Vec<f64>,
    pub wealths: Vec<f64>,
    pub clamp_events: u64,
    pub max_price_error: f64,
    pub max_wealth_error: f64,
    /// Present when some agent reports a weight floor.
    pub min_floor_slack: Option<f64>,
}

/// Runs a market to its horizon, handing every step to `observer`.
pub fn run_market_with<F>(config: &MarketConfig, mut observer: F) -> Result<RunOutcome>
where
    F: FnMut(&StepView<'_>),
{
    let mut market = Market::new(config)?;
    while !market.is_finished() {
        let view = market.step()?;
        observer(&view);
    }
    Ok(market.outcome())
}

/// Market state at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketSnapshot {
    pub t: usize,
    pub wealths: Vec<f64>,
    pub prices: SimplexVector,
    pub strategies: Vec<SimplexVector>,
    pub realized_state: usize,
}

/// Full per-step trace of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub agents: usize,
    pub states: usize,
    pub realized: Vec<usize>,
    /// `wealths[(t-1) * agents + n]`, shares after step `t`.
    pub wealths: Vec<f64>,
    /// `strategies[((t-1) * agents + n) * states + s]`.
    pub strategies: Vec<f64>,
    /// `prices[(t-1) * states + s]`.
    pub prices: Vec<f64>,
    pub initial_wealths: Vec<f64>,
    pub outcome: RunOutcome,
}

impl RunRecord {
    /// Empty record for `config`; fill it with [`RunRecord::push`] and set
    /// `outcome` when the run ends.
    pub fn start(config: &MarketConfig) -> Self {
        let (agents, states) = (config.agents.len(), config.states);
        RunRecord {
            agents,
            states,
            realized: Vec::with_capacity(config.horizon),
            wealths: Vec::with_capacity(config.horizon * agents),
            strategies: Vec::with_capacity(config.horizon * agents * states),
            prices: Vec::with_capacity(config.horizon * states),
            initial_wealths: config.initial_wealths(),
            outcome: RunOutcome {
                steps: 0,
                state_counts: vec![0; states],
                cumulative_utility: vec![0.0; agents],
                initial_log_wealths: vec![0.0; agents],
                log_wealths: vec![0.0; agents],
                wealths: vec![0.0; agents],
                clamp_events: 0,
                max_price_error: 0.0,
                max_wealth_error: 0.0,
                min_floor_slack: None,
            },
        }
    }

    pub fn push(&mut self, view: &StepView<'_>) {
        self.realized.push(view.state);
        self.wealths.extend_from_slice(view.wealths);
        for alpha in view.strategies {
            self.strategies.extend_from_slice(alpha.as_slice());
        }
        self.prices.extend_from_slice(view.prices);
    }

    pub fn len(&self) -> usize {
        self.realized.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realized.is_empty()
    }

    pub fn snapshot(&self, t: usize) -> MarketSnapshot {
        assert!(
            t >= 1 && t <= self.len(),
            "step {t} outside 1..={}",
            self.len()
        );
        let i = t - 1;
        let (n, s) = (self.agents, self.states);
        MarketSnapshot {
            t,
            wealths: self.wealths[i * n..(i + 1) * n].to_vec(),
            prices: SimplexVector::from_raw(self.prices[i * s..(i + 1) * s].to_vec()),
            strategies: (0..n)
                .map(|a| {
                    let start = (i * n + a) * s;
                    SimplexVector::from_raw(self.strategies[start..start + s].to_vec())
                })
                .collect(),
            realized_state: self.realized[i],
        }
    }

    /// Wealth share of `agent` after each step.
    pub fn wealth_series(&self, agent: usize) -> Vec<f64> {
        self.wealths
            .iter()
            .skip(agent)
            .step_by(self.agents)
            .copied()
            .collect()
    }

    /// Strategy history of `agent`, one vector per step.
    pub fn strategy_history(&self, agent: usize) -> Vec<SimplexVector> {
        (0..self.len())
            .map(|i| {
                let start = (i * self.agents + agent) * self.states;
                SimplexVector::from_raw(self.strategies[start..start + self.states].to_vec())
            })
            .collect()
    }

    /// CSV with columns `t, realized_state, wealth_<n>..., alpha_<n>_<s>...`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = String::from("t,realized_state");
        for n in 0..self.agents {
            header.push_str(&format!(",wealth_{n}"));
        }
        for n in 0..self.agents {
            for s in 0..self.states {
                header.push_str(&format!(",alpha_{n}_{s}"));
            }
        }
        writeln!(out, "{header}")?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            line.push_str(&format!("{},{}", i + 1, self.realized[i]));
            for w in &self.wealths[i * self.agents..(i + 1) * self.agents] {
                line.push_str(&format!(",{w:?}"));
            }
            let start = i * self.agents * self.states;
            for a in &self.strategies[start..start + self.agents * self.states] {
                line.push_str(&format!(",{a:?}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// The same rows as [`RunRecord::write_csv`], as a JSON document.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = (1..=self.len())
            .map(|t| {
                let snap = self.snapshot(t);
                serde_json::json!({
                    "t": t,
                    "realized_state": snap.realized_state,
                    "wealths": snap.wealths,
                    "strategies": snap.strategies,
                })
            })
            .collect();
        serde_json::json!({ "agents": self.agents, "states": self.states, "steps": rows })
    }
}

/// Runs a market to its horizon and keeps the whole trace.
pub fn run_market(config: &MarketConfig) -> Result<RunRecord> {
    let mut record = RunRecord::start(config);
    let outcome = run_market_with(config, |view| record.push(view))?;
    record.outcome = outcome;
    Ok(record)
}
