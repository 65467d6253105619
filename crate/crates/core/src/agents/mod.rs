//! Investment strategies. Every learner implements [`Strategy`]: it is
//! asked for its investment vector before a step clears and is told the
//! realized state afterwards, so it can only ever condition on the past.

mod bayes;
mod noisy;
mod ogd;
mod robust;
mod ucb;

pub use bayes::{bayes_predict, bayes_update, BayesAgent, BayesState};
pub use noisy::{noisy_bayes_update, NoisyBayesAgent, NoisyBayesState};
pub use ogd::{ogd_step, project_to_floored_simplex, OgdAgent, DEFAULT_STEP_CONSTANT};
pub use robust::{
    regularization, robust_bayes_update, robust_floor, RobustBayesAgent, RobustBayesState,
};
pub use ucb::{ucb_step, UcbAgent, UcbState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::SimplexVector;

pub trait Strategy: Send {
    /// Investment vector for step `t` (1-based). By then the agent has been
    /// shown the states of steps `1..t` through [`Strategy::observe`] and
    /// nothing else.
    fn next_strategy(&mut self, t: usize) -> Result<&SimplexVector>;

    /// The state realized at the step that just cleared.
    fn observe(&mut self, state: usize) -> Result<()>;

    /// Back to the initial state; `seed` reseeds any internal randomness.
    fn reset(&mut self, seed: u64);

    /// For learners that guarantee a lower bound on their posterior weights:
    /// smallest weight minus the bound, as of the last observation.
    fn floor_slack(&self) -> Option<f64> {
        None
    }
}

/// Declarative description of an agent, as found in scenario documents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentSpec {
    Fixed {
        alpha: SimplexVector,
    },
    Bayes {
        models: Vec<SimplexVector>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<Vec<f64>>,
    },
    NoisyBayes {
        models: Vec<SimplexVector>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<Vec<f64>>,
        eta: f64,
    },
    RobustBayes {
        models: Vec<SimplexVector>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<Vec<f64>>,
    },
    Ucb {
        models: Vec<SimplexVector>,
    },
    Ogd {
        #[serde(default = "default_step_constant")]
        step_constant: f64,
        /// Projection floor; the market's strategy floor when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        floor: Option<f64>,
    },
    /// Plays the final empirical distribution from the first step. Not
    /// implementable: it is handed the whole state sequence up front.
    Magic {},
}

fn default_step_constant() -> f64 {
    DEFAULT_STEP_CONSTANT
}

impl AgentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            AgentSpec::Fixed { .. } => "fixed",
            AgentSpec::Bayes { .. } => "bayes",
            AgentSpec::NoisyBayes { .. } => "noisy_bayes",
            AgentSpec::RobustBayes { .. } => "robust_bayes",
            AgentSpec::Ucb { .. } => "ucb",
            AgentSpec::Ogd { .. } => "ogd",
            AgentSpec::Magic {} => "magic",
        }
    }

    pub fn needs_full_sequence(&self) -> bool {
        matches!(self, AgentSpec::Magic {})
    }

    /// Checks the spec against a market with `states` states and model floor `delta`.
    pub fn validate(&self, states: usize, delta: f64) -> Result<()> {
        let check_models = |models: &[SimplexVector], prior: &Option<Vec<f64>>| -> Result<()> {
            if models.is_empty() {
                return Err(Error::invalid("at least one model is required"));
            }
            for m in models {
                if m.len() != states {
                    return Err(Error::invalid(format!(
                        "model {m:?} does not have {states} entries"
                    )));
                }
                m.check_floor(delta)?;
            }
            if let Some(p) = prior {
                check_prior(p, models.len())?;
            }
            Ok(())
        };
        match self {
            AgentSpec::Fixed { alpha } => {
                if alpha.len() != states {
                    return Err(Error::invalid(format!(
                        "alpha does not have {states} entries"
                    )));
                }
                if alpha.min() <= 0.0 {
                    return Err(Error::invalid("a fixed strategy must have full support"));
                }
                Ok(())
            }
            AgentSpec::Bayes { models, prior } | AgentSpec::RobustBayes { models, prior } => {
                check_models(models, prior)
            }
            AgentSpec::NoisyBayes { models, prior, eta } => {
                if states != 2 || models.len() != 2 {
                    return Err(Error::Unsupported(
                        "noisy Bayesian updates need two states and two models".into(),
                    ));
                }
                if !(*eta >= 0.0 && *eta < 1.0) {
                    return Err(Error::invalid(format!("eta {eta} must lie in [0, 1)")));
                }
                check_models(models, prior)
            }
            AgentSpec::Ucb { models } => check_models(models, &None),
            AgentSpec::Ogd {
                step_constant,
                floor,
            } => {
                if !(*step_constant > 0.0 && step_constant.is_finite()) {
                    return Err(Error::invalid("the step constant must be positive"));
                }
                if let Some(f) = floor {
                    if !(*f > 0.0 && *f * (states as f64) < 1.0) {
                        return Err(Error::invalid(format!(
                            "OGD floor {f} must lie in (0, 1/S)"
                        )));
                    }
                }
                Ok(())
            }
            AgentSpec::Magic {} => Ok(()),
        }
    }
}

pub(crate) fn check_prior(prior: &[f64], models: usize) -> Result<()> {
    if prior.len() != models {
        return Err(Error::invalid(format!(
            "{} prior weights for {models} models",
            prior.len()
        )));
    }
    if prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid("prior weights must be nonnegative"));
    }
    let sum: f64 = prior.iter().sum();
    if (sum - 1.0).abs() > crate::simplex::CONSTRUCTION_TOL {
        return Err(Error::invalid(format!("prior weights sum to {sum}, not 1")));
    }
    Ok(())
}

/// What an agent may know when it is built.
pub struct BuildContext<'a> {
    pub states: usize,
    /// Market-wide strategy floor.
    pub floor: f64,
    /// Seed of this agent's own random substream.
    pub seed: u64,
    /// The full state sequence, only for hindsight agents.
    pub sequence: Option<&'a [usize]>,
}

pub fn build(spec: &AgentSpec, ctx: &BuildContext<'_>) -> Result<Box<dyn Strategy>> {
    Ok(match spec {
        AgentSpec::Fixed { alpha } => Box::new(FixedAgent::new(alpha.clone())?),
        AgentSpec::Bayes { models, prior } => Box::new(BayesAgent::new(BayesState::new(
            models.clone(),
            prior.clone(),
        )?)),
        AgentSpec::NoisyBayes { models, prior, eta } => {
            let state =
                NoisyBayesState::new(models[0].clone(), models[1].clone(), prior.clone(), *eta)?;
            Box::new(NoisyBayesAgent::new(state, ctx.seed))
        }
        AgentSpec::RobustBayes { models, prior } => Box::new(RobustBayesAgent::new(
            RobustBayesState::new(models.clone(), prior.clone())?,
        )),
        AgentSpec::Ucb { models } => Box::new(UcbAgent::new(models.clone())?),
        AgentSpec::Ogd {
            step_constant,
            floor,
        } => Box::new(OgdAgent::new(
            ctx.states,
            *step_constant,
            floor.unwrap_or(ctx.floor),
        )?),
        AgentSpec::Magic {} => {
            let sequence = ctx
                .sequence
                .ok_or_else(|| Error::invalid("the magic agent needs the full state sequence"))?;
            Box::new(magic_strategy(sequence, ctx.states, ctx.floor)?)
        }
    })
}

/// Plays the same vector every step.
#[derive(Clone, Debug)]
pub struct FixedAgent {
    alpha: SimplexVector,
}

pub fn fixed_strategy(alpha: SimplexVector) -> Result<FixedAgent> {
    FixedAgent::new(alpha)
}

impl FixedAgent {
    pub fn new(alpha: SimplexVector) -> Result<Self> {
        if alpha.min() <= 0.0 {
            return Err(Error::invalid("a fixed strategy must have full support"));
        }
        Ok(FixedAgent { alpha })
    }
}

impl Strategy for FixedAgent {
    fn next_strategy(&mut self, _t: usize) -> Result<&SimplexVector> {
        Ok(&self.alpha)
    }

    fn observe(&mut self, _state: usize) -> Result<()> {
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {}
}

/// Hindsight oracle playing the final empirical distribution every step.
#[derive(Clone, Debug)]
pub struct MagicAgent {
    empirical: SimplexVector,
}

impl MagicAgent {
    pub fn empirical(&self) -> &SimplexVector {
        &self.empirical
    }
}

/// Builds the hindsight oracle for `sequence`. States that never occur are
/// lifted to `floor` so the strategy keeps full support.
pub fn magic_strategy(sequence: &[usize], states: usize, floor: f64) -> Result<MagicAgent> {
    if sequence.is_empty() {
        return Err(Error::invalid(
            "the magic agent needs a nonempty state sequence",
        ));
    }
    let (mut empirical, _) = crate::regret::hindsight_best(sequence, states)?;
    empirical.clamp_to_floor(floor);
    Ok(MagicAgent { empirical })
}

impl Strategy for MagicAgent {
    fn next_strategy(&mut self, _t: usize) -> Result<&SimplexVector> {
        Ok(&self.empirical)
    }

    fn observe(&mut self, _state: usize) -> Result<()> {
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {}
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sv(w: &[f64]) -> SimplexVector {
        SimplexVector::new(w.to_vec()).unwrap()
    }

    #[test]
    fn fixed_agent_never_changes() {
        let mut agent = fixed_strategy(sv(&[0.5, 0.5])).unwrap();
        let first = agent.next_strategy(1).unwrap().clone();
        for t in 2..1000 {
            agent.observe(t % 2).unwrap();
        }
        assert_eq!(agent.next_strategy(1_000_000).unwrap(), &first);
        assert!(fixed_strategy(sv(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn magic_agent_counts() {
        let seq = [0, 0, 1, 0, 1, 0, 0, 1, 0, 0];
        let agent = magic_strategy(&seq, 2, 1e-6).unwrap();
        assert_relative_eq!(agent.empirical()[0], 0.7, epsilon = 1e-15);
        let uniform = magic_strategy(&[0, 1, 2, 1, 2, 0], 3, 1e-6).unwrap();
        assert_relative_eq!(uniform.empirical()[2], 1.0 / 3.0, epsilon = 1e-15);
        let clamped = magic_strategy(&[0, 0, 0], 2, 1e-6).unwrap();
        assert_eq!(clamped.empirical()[1], 1e-6);
        assert!(magic_strategy(&[], 2, 1e-6).is_err());
    }

    #[test]
    fn spec_json_shapes() {
        let spec: AgentSpec =
            serde_json::from_str(r#"{"kind":"bayes","models":[[0.8,0.2],[0.7,0.3]]}"#).unwrap();
        assert_eq!(spec.kind(), "bayes");
        let ogd: AgentSpec = serde_json::from_str(r#"{"kind":"ogd"}"#).unwrap();
        assert_eq!(
            ogd,
            AgentSpec::Ogd {
                step_constant: DEFAULT_STEP_CONSTANT,
                floor: None
            }
        );
        assert!(serde_json::from_str::<AgentSpec>(
            r#"{"kind":"ucb","models":[[0.5,0.5]],"extra":1}"#
        )
        .is_err());
        assert!(serde_json::from_str::<AgentSpec>(r#"{"kind":"oracle"}"#).is_err());
        let magic: AgentSpec = serde_json::from_str(r#"{"kind":"magic"}"#).unwrap();
        assert_eq!(
            serde_json::to_string(&magic).unwrap(),
            r#"{"kind":"magic"}"#
        );
    }

    #[test]
    fn spec_validation() {
        let noisy = AgentSpec::NoisyBayes {
            models: vec![sv(&[0.2, 0.3, 0.5]); 2],
            prior: None,
            eta: 0.1,
        };
        assert!(matches!(
            noisy.validate(3, 0.01),
            Err(Error::Unsupported(_))
        ));
        let bayes = AgentSpec::Bayes {
            models: vec![sv(&[0.999, 0.001])],
            prior: None,
        };
        assert!(bayes.validate(2, 0.01).is_err());
        let bad_prior = AgentSpec::Bayes {
            models: vec![sv(&[0.5, 0.5])],
            prior: Some(vec![0.5]),
        };
        assert!(bad_prior.validate(2, 0.01).is_err());
    }
}
