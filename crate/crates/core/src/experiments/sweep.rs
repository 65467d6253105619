//! Survival time of an inaccurate Bayesian as a function of its error.
//!
//! For each error size, all seeds advance in lockstep so the seed-mean share
//! is available step by step; a point stops early once that mean has fallen
//! below `stop_share`.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::AgentSpec;
use crate::error::{Error, Result};
use crate::market::{relative_entropy, Market, MarketConfig};
use crate::regret::{fit_power_law, survival_time, PowerLawFit, RegretLedger, SurvivalTime};
use crate::simplex::SimplexVector;

use super::catalog::perturbed_truth;
use super::plot::render_lines_svg;
use super::stats::thin_indices;
use super::{Conservation, SeedRange};

/// Steps every seed advances between reductions.
const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub name: String,
    pub description: String,
    /// Two-state truth; the Bayesian's only model is `perturbed_truth(truth, eps)`.
    pub truth: SimplexVector,
    pub competitor: AgentSpec,
    /// Starting share of the inaccurate Bayesian.
    pub initial_share: f64,
    pub eps: Vec<f64>,
    pub seeds: SeedRange,
    pub max_horizon: usize,
    pub stop_share: f64,
    pub target_exponent: f64,
    /// Accepted range of the fitted log-log slope.
    pub slope_band: (f64, f64),
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::invalid("the error grid is empty"));
        }
        if self.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::invalid("error sizes must be positive"));
        }
        if !(self.initial_share > 0.0 && self.initial_share < 1.0) {
            return Err(Error::invalid("initial share must lie in (0, 1)"));
        }
        if !(self.stop_share > 0.0 && self.stop_share < 0.5) {
            return Err(Error::invalid("stop share must lie in (0, 1/2)"));
        }
        if self.seeds.count == 0 || self.max_horizon == 0 {
            return Err(Error::invalid("a sweep needs seeds and a positive horizon"));
        }
        for &eps in &self.eps {
            self.config(eps, self.seeds.base)?.validate()?;
        }
        Ok(())
    }

    /// Market for one grid point and seed: the inaccurate Bayesian is agent 0.
    pub fn config(&self, eps: f64, seed: u64) -> Result<MarketConfig> {
        let model = perturbed_truth(&self.truth, eps)?;
        let bayes = AgentSpec::Bayes {
            models: vec![model],
            prior: None,
        };
        let mut config = MarketConfig::stationary(
            self.truth.clone(),
            self.max_horizon,
            vec![bayes, self.competitor.clone()],
            seed,
        );
        config.initial_wealths = Some(vec![self.initial_share, 1.0 - self.initial_share]);
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub eps: f64,
    /// `I_q(q')` of the Bayesian's model.
    pub relative_entropy: f64,
    pub survival: SurvivalTime,
    pub steps_run: usize,
    /// Seed-mean share of the Bayesian, thinned; `(t, share)`.
    pub mean_share: Vec<(usize, f64)>,
    pub conservation: Conservation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub name: String,
    pub description: String,
    pub seeds: SeedRange,
    pub points: Vec<SweepPoint>,
    /// Fit of `tau` against `eps`; absent if some point has `tau = 0`.
    pub fit: Option<PowerLawFit>,
    pub target_exponent: f64,
    pub slope_band: (f64, f64),
}

impl SweepResult {
    pub fn slope_in_band(&self) -> bool {
        self.fit
            .is_some_and(|f| f.slope >= self.slope_band.0 && f.slope <= self.slope_band.1)
    }

    pub fn conservation(&self) -> Conservation {
        let mut c = Conservation::default();
        for p in &self.points {
            c.absorb(&p.conservation);
        }
        c
    }
}

fn run_point(spec: &SweepSpec, eps: f64) -> Result<SweepPoint> {
    let seeds: Vec<u64> = spec.seeds.iter().collect();
    let mut markets = seeds
        .iter()
        .map(|&seed| {
            Market::new(&spec.config(eps, seed)?).map_err(|e| Error::Seed {
                seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = markets.len() as f64;
    let mut mean = vec![spec.initial_share];
    let mut t = 0;
    while t < spec.max_horizon {
        let steps = CHUNK.min(spec.max_horizon - t);
        let shares = markets
            .par_iter_mut()
            .zip(seeds.par_iter())
            .map(|(market, &seed)| {
                let mut out = Vec::with_capacity(steps);
                for _ in 0..steps {
                    let view = market.step().map_err(|e| Error::Seed {
                        seed,
                        source: Box::new(e),
                    })?;
                    out.push(view.wealths[0]);
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        // Seed order keeps the sum independent of scheduling.
        let start = mean.len();
        for i in 0..steps {
            mean.push(shares.iter().map(|s| s[i]).sum::<f64>() / n);
        }
        t += steps;
        if let Some(offset) = mean[start..].iter().position(|m| *m < spec.stop_share) {
            mean.truncate(start + offset + 1);
            break;
        }
    }
    let steps_run = mean.len() - 1;
    let mut conservation = Conservation::default();
    for market in &markets {
        let outcome = market.outcome();
        let ledger = RegretLedger::from_outcome(&outcome);
        conservation.absorb(&Conservation {
            max_price_error: outcome.max_price_error,
            max_wealth_error: outcome.max_wealth_error,
            max_identity_residual: ledger.identity_residual(),
            min_floor_slack: outcome.min_floor_slack,
            clamp_events: outcome.clamp_events,
        });
    }
    let mean_share = thin_indices(mean.len(), 400)
        .into_iter()
        .map(|i| (i, mean[i]))
        .collect();
    Ok(SweepPoint {
        eps,
        relative_entropy: relative_entropy(&spec.truth, &perturbed_truth(&spec.truth, eps)?),
        survival: survival_time(&mean),
        steps_run,
        mean_share,
        conservation,
    })
}

/// Runs every grid point with the same seeds and fits `tau ~ eps^slope`.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut points = Vec::with_capacity(spec.eps.len());
    for &eps in &spec.eps {
        let point = run_point(spec, eps)?;
        log::info!(
            "{} eps={eps}: tau={} censored={} after {} steps",
            spec.name,
            point.survival.tau,
            point.survival.censored,
            point.steps_run
        );
        points.push(point);
    }
    let samples: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.eps, p.survival.tau as f64))
        .collect();
    let fit = fit_power_law(&samples).ok();
    Ok(SweepResult {
        name: spec.name.clone(),
        description: spec.description.clone(),
        seeds: spec.seeds,
        points,
        fit,
        target_exponent: spec.target_exponent,
        slope_band: spec.slope_band,
    })
}

/// `point_<eps>.json` per grid point, `exponent.json` and `plot_<name>.svg`.
pub fn write_sweep_artifacts(result: &SweepResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for point in &result.points {
        let path = dir.join(format!("point_{}.json", point.eps));
        fs::write(path, serde_json::to_string_pretty(point)? + "\n")?;
    }
    let exponent = serde_json::json!({
        "name": result.name,
        "eps": result.points.iter().map(|p| p.eps).collect::<Vec<_>>(),
        "tau": result.points.iter().map(|p| p.survival.tau).collect::<Vec<_>>(),
        "censored": result.points.iter().map(|p| p.survival.censored).collect::<Vec<_>>(),
        "fit": result.fit,
        "target_exponent": result.target_exponent,
        "slope_band": [result.slope_band.0, result.slope_band.1],
        "slope_in_band": result.slope_in_band(),
    });
    fs::write(
        dir.join("exponent.json"),
        serde_json::to_string_pretty(&exponent)? + "\n",
    )?;
    let series: Vec<(String, Vec<(f64, f64)>)> = result
        .points
        .iter()
        .map(|p| {
            let pts = p.mean_share.iter().map(|(t, w)| (*t as f64, *w)).collect();
            (format!("eps={}", p.eps), pts)
        })
        .collect();
    let svg = render_lines_svg(
        &format!("{}: mean share of the inaccurate Bayesian", result.name),
        "step",
        &series,
    );
    fs::write(dir.join(format!("plot_{}.svg", result.name)), svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::builtin_sweep;

    fn small(name: &str) -> SweepSpec {
        let mut spec = builtin_sweep(name).unwrap();
        spec.seeds.count = 8;
        spec.eps = vec![0.16, 0.32];
        spec.max_horizon = 20_000;
        spec
    }

    #[test]
    fn larger_error_dies_sooner() {
        let result = run_sweep(&small("obs1")).unwrap();
        let (a, b) = (&result.points[0], &result.points[1]);
        assert!(
            a.survival.tau > b.survival.tau,
            "{:?} vs {:?}",
            a.survival,
            b.survival
        );
        assert!(!a.survival.censored);
        assert!(result.fit.is_none());
        assert!(result.conservation().max_wealth_error < 1e-9);
    }

    #[test]
    fn sweeps_are_deterministic() {
        let spec = small("obs1");
        assert_eq!(run_sweep(&spec).unwrap(), run_sweep(&spec).unwrap());
    }

    #[test]
    fn empty_grid_is_rejected() {
        let mut spec = small("obs1");
        spec.eps.clear();
        assert!(run_sweep(&spec).is_err());
    }
}
