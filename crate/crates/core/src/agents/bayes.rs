use crate::error::{Error, Result};
use crate::simplex::{log_sum_exp, SimplexVector};

use super::{check_prior, Strategy};

/// Posterior over a finite set of models, kept as normalized log weights.
#[derive(Clone, Debug, PartialEq)]
pub struct BayesState {
    models: Vec<SimplexVector>,
    log_weights: Vec<f64>,
}

impl BayesState {
    /// Uniform prior when `prior` is `None`.
    pub fn new(models: Vec<SimplexVector>, prior: Option<Vec<f64>>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::invalid("a Bayesian needs at least one model"));
        }
        let states = models[0].len();
        if models.iter().any(|m| m.len() != states) {
            return Err(Error::invalid("models disagree on the number of states"));
        }
        if models.iter().any(|m| m.min() <= 0.0) {
            return Err(Error::invalid("Bayesian models must have full support"));
        }
        let prior = match prior {
            Some(p) => {
                check_prior(&p, models.len())?;
                p
            }
            None => vec![1.0 / models.len() as f64; models.len()],
        };
        let mut log_weights: Vec<f64> = prior.iter().map(|p| p.ln()).collect();
        let norm = log_sum_exp(&log_weights);
        log_weights.iter_mut().for_each(|w| *w -= norm);
        Ok(BayesState {
            models,
            log_weights,
        })
    }

    pub fn models(&self) -> &[SimplexVector] {
        &self.models
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    /// `log(lambda^k / lambda^l)`.
    pub fn log_odds(&self, k: usize, l: usize) -> f64 {
        self.log_weights[k] - self.log_weights[l]
    }

    /// Bayes rule in place: add `log theta^k_s`, renormalize.
    pub fn update(&mut self, state: usize) {
        for (w, m) in self.log_weights.iter_mut().zip(&self.models) {
            *w += m[state].ln();
        }
        let norm = log_sum_exp(&self.log_weights);
        self.log_weights.iter_mut().for_each(|w| *w -= norm);
    }

    /// Writes the posterior-predictive distribution into `out`.
    pub(crate) fn predict_into(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (lw, m) in self.log_weights.iter().zip(&self.models) {
            let w = lw.exp();
            if w == 0.0 {
                continue;
            }
            for (x, p) in out.iter_mut().zip(m.iter()) {
                *x += w * p;
            }
        }
        let sum: f64 = out.iter().sum();
        out.iter_mut().for_each(|x| *x /= sum);
    }
}

pub fn bayes_update(state: &BayesState, observed: usize) -> BayesState {
    let mut next = state.clone();
    next.update(observed);
    next
}

/// Posterior-predictive `sum_k lambda^k theta^k`. A Bayesian invests exactly this.
pub fn bayes_predict(state: &BayesState) -> SimplexVector {
    let mut out = vec![0.0; state.models[0].len()];
    state.predict_into(&mut out);
    SimplexVector::from_raw(out)
}

/// A Bayesian that bets its beliefs.
#[derive(Clone, Debug)]
pub struct BayesAgent {
    initial: BayesState,
    state: BayesState,
    prediction: SimplexVector,
}

impl BayesAgent {
    pub fn new(state: BayesState) -> Self {
        let prediction = bayes_predict(&state);
        BayesAgent {
            initial: state.clone(),
            state,
            prediction,
        }
    }

    pub fn state(&self) -> &BayesState {
        &self.state
    }
}

impl Strategy for BayesAgent {
    fn next_strategy(&mut self, _t: usize) -> Result<&SimplexVector> {
        self.state.predict_into(self.prediction.as_mut_slice());
        Ok(&self.prediction)
    }

    fn observe(&mut self, state: usize) -> Result<()> {
        self.state.update(state);
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {
        self.state = self.initial.clone();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn sv(w: &[f64]) -> SimplexVector {
        SimplexVector::new(w.to_vec()).unwrap()
    }

    fn two_models() -> Vec<SimplexVector> {
        vec![sv(&[0.7, 0.3]), sv(&[0.3, 0.7])]
    }

    #[test]
    fn one_step_posterior() {
        let state = BayesState::new(two_models(), None).unwrap();
        let next = bayes_update(&state, 0);
        let w = next.weights();
        // (0.35, 0.15) normalized.
        assert_relative_eq!(w[0], 0.7, epsilon = 1e-15);
        assert_relative_eq!(w[1], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn point_mass_prior_is_absorbing() {
        let mut state = BayesState::new(two_models(), Some(vec![1.0, 0.0])).unwrap();
        for s in [1, 1, 1, 0, 1] {
            state.update(s);
        }
        assert_eq!(state.weights(), vec![1.0, 0.0]);
        assert_eq!(bayes_predict(&state).as_slice(), &[0.7, 0.3]);
    }

    #[test]
    fn prediction_examples() {
        let point = BayesState::new(two_models(), Some(vec![0.0, 1.0])).unwrap();
        assert_eq!(bayes_predict(&point).as_slice(), &[0.3, 0.7]);
        let even = BayesState::new(two_models(), None).unwrap();
        assert_relative_eq!(bayes_predict(&even)[0], 0.5, epsilon = 1e-15);
        let tilted = BayesState::new(two_models(), Some(vec![0.7, 0.3])).unwrap();
        assert_relative_eq!(bayes_predict(&tilted)[0], 0.58, epsilon = 1e-15);
    }

    #[test]
    fn log_odds_match_count_formula() {
        let models = vec![sv(&[0.8, 0.2]), sv(&[0.7, 0.3]), sv(&[0.6, 0.4])];
        let prior = vec![0.5, 0.3, 0.2];
        let mut rng = substream(17, "test");
        for _ in 0..50 {
            let seq: Vec<usize> = (0..20).map(|_| rng.gen_range(0..2)).collect();
            let mut state = BayesState::new(models.clone(), Some(prior.clone())).unwrap();
            for &s in &seq {
                state.update(s);
            }
            // Brute force: product of likelihoods times prior, then normalize.
            let mut joint: Vec<f64> = prior.clone();
            for &s in &seq {
                for (j, m) in joint.iter_mut().zip(&models) {
                    *j *= m[s];
                }
            }
            let total: f64 = joint.iter().sum();
            let counts = [
                seq.iter().filter(|s| **s == 0).count() as f64,
                seq.iter().filter(|s| **s == 1).count() as f64,
            ];
            for k in 0..3 {
                assert_relative_eq!(state.weights()[k], joint[k] / total, max_relative = 1e-12);
                for l in 0..3 {
                    let formula = (prior[k] / prior[l]).ln()
                        + (0..2)
                            .map(|s| counts[s] * (models[k][s] / models[l][s]).ln())
                            .sum::<f64>();
                    assert_relative_eq!(state.log_odds(k, l), formula, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn log_space_survives_long_runs() {
        let mut state = BayesState::new(two_models(), None).unwrap();
        for _ in 0..100_000 {
            state.update(0);
        }
        assert!(state.log_odds(1, 0).is_finite());
        assert_relative_eq!(
            state.log_odds(1, 0),
            100_000.0 * (3.0f64 / 7.0).ln(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn reset_restores_prior() {
        let mut agent = BayesAgent::new(BayesState::new(two_models(), None).unwrap());
        agent.observe(0).unwrap();
        agent.reset(0);
        assert_relative_eq!(agent.next_strategy(1).unwrap()[0], 0.5, epsilon = 1e-15);
    }
}
