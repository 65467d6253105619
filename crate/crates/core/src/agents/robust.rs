use crate::error::{Error, Result};
use crate::simplex::SimplexVector;

use super::{check_prior, Strategy};

/// `eps_t = t^-2`.
pub fn regularization(t: usize) -> f64 {
    let t = t as f64;
    1.0 / (t * t)
}

/// Lower bound every weight satisfies after the update at step `t`:
/// `eps_t / (1 + K eps_t)`.
pub fn robust_floor(t: usize, models: usize) -> f64 {
    let eps = regularization(t);
    eps / (1.0 + models as f64 * eps)
}

/// Posterior of the regularized Bayesian. Weights are stored linearly: the
/// regularization keeps them above `t^-2 / (1 + K t^-2)`, far from underflow,
/// and the floor can then be checked exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustBayesState {
    models: Vec<SimplexVector>,
    weights: Vec<f64>,
}

impl RobustBayesState {
    pub fn new(models: Vec<SimplexVector>, prior: Option<Vec<f64>>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::invalid("a Bayesian needs at least one model"));
        }
        let states = models[0].len();
        if models.iter().any(|m| m.len() != states || m.min() <= 0.0) {
            return Err(Error::invalid(
                "models must share the state count and have full support",
            ));
        }
        let weights = match prior {
            Some(p) => {
                check_prior(&p, models.len())?;
                p
            }
            None => vec![1.0 / models.len() as f64; models.len()],
        };
        Ok(RobustBayesState { models, weights })
    }

    /// Replaces the weights; they must already form a probability vector.
    pub fn with_weights(models: Vec<SimplexVector>, weights: Vec<f64>) -> Result<Self> {
        Self::new(models, Some(weights))
    }

    pub fn models(&self) -> &[SimplexVector] {
        &self.models
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Plain Bayes step followed by `(w + eps_t) / (1 + K eps_t)`.
    pub fn update(&mut self, state: usize, t: usize) {
        let mut total = 0.0;
        for (w, m) in self.weights.iter_mut().zip(&self.models) {
            *w *= m[state];
            total += *w;
        }
        let eps = regularization(t);
        let scale = 1.0 + self.models.len() as f64 * eps;
        for w in &mut self.weights {
            *w = (*w / total + eps) / scale;
        }
    }

    /// Applies only the regularization step to already-updated weights.
    pub fn regularize(weights: &[f64], t: usize) -> Vec<f64> {
        let eps = regularization(t);
        let scale = 1.0 + weights.len() as f64 * eps;
        weights.iter().map(|w| (w + eps) / scale).collect()
    }

    pub(crate) fn predict_into(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (w, m) in self.weights.iter().zip(&self.models) {
            for (x, p) in out.iter_mut().zip(m.iter()) {
                *x += w * p;
            }
        }
        let sum: f64 = out.iter().sum();
        out.iter_mut().for_each(|x| *x /= sum);
    }

    pub fn predict(&self) -> SimplexVector {
        let mut out = vec![0.0; self.models[0].len()];
        self.predict_into(&mut out);
        SimplexVector::from_raw(out)
    }
}

/// The update at step `t >= 1` after observing `observed`.
pub fn robust_bayes_update(
    state: &RobustBayesState,
    observed: usize,
    t: usize,
) -> Result<RobustBayesState> {
    if t == 0 {
        return Err(Error::invalid("the robust update is indexed from step 1"));
    }
    if observed >= state.models[0].len() {
        return Err(Error::invalid(format!("state {observed} out of range")));
    }
    let mut next = state.clone();
    next.update(observed, t);
    Ok(next)
}

#[derive(Clone, Debug)]
pub struct RobustBayesAgent {
    initial: RobustBayesState,
    state: RobustBayesState,
    /// Steps observed so far; never reset by distribution shifts.
    t: usize,
    prediction: SimplexVector,
}

impl RobustBayesAgent {
    pub fn new(state: RobustBayesState) -> Self {
        let prediction = state.predict();
        RobustBayesAgent {
            initial: state.clone(),
            state,
            t: 0,
            prediction,
        }
    }

    pub fn state(&self) -> &RobustBayesState {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.t
    }
}

impl Strategy for RobustBayesAgent {
    fn next_strategy(&mut self, _t: usize) -> Result<&SimplexVector> {
        self.state.predict_into(self.prediction.as_mut_slice());
        Ok(&self.prediction)
    }

    fn observe(&mut self, state: usize) -> Result<()> {
        self.t += 1;
        self.state.update(state, self.t);
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {
        self.state = self.initial.clone();
        self.t = 0;
    }

    fn floor_slack(&self) -> Option<f64> {
        if self.t == 0 {
            return None;
        }
        let min = self
            .state
            .weights
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Some(min - robust_floor(self.t, self.state.models.len()))
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

    #[test]
    fn regularization_example() {
        let out = RobustBayesState::regularize(&[0.999, 0.001], 10);
        assert_relative_eq!(out[0], 1.009 / 1.02, epsilon = 1e-15);
        assert_relative_eq!(out[1], 0.011 / 1.02, epsilon = 1e-15);
        assert_relative_eq!(out[0], 0.989_215_686_274_509_8, epsilon = 1e-12);
        assert_relative_eq!(out[1], 0.010_784_313_725_490_196, epsilon = 1e-12);
    }

    #[test]
    fn regularization_vanishes_for_late_steps() {
        let out = RobustBayesState::regularize(&[0.6, 0.3, 0.1], 1_000_000);
        assert_relative_eq!(out[0], 0.6, epsilon = 1e-11);
        assert_relative_eq!(out[2], 0.1, epsilon = 1e-11);
    }

    #[test]
    fn uniform_stays_uniform() {
        for t in [1, 2, 10, 1000] {
            let out = RobustBayesState::regularize(&[0.25; 4], t);
            for w in out {
                assert_relative_eq!(w, 0.25, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn floor_holds_exactly_after_every_update() {
        let models = vec![sv(&[0.75, 0.25]), sv(&[0.25, 0.75]), sv(&[0.5, 0.5])];
        let mut state = RobustBayesState::new(models, None).unwrap();
        let mut rng = substream(4, "states");
        for t in 1..=50_000 {
            let s = usize::from(rng.gen::<f64>() >= 0.75);
            state = robust_bayes_update(&state, s, t).unwrap();
            let floor = robust_floor(t, 3);
            assert!(state.weights().iter().all(|w| *w >= floor), "step {t}");
            assert!((state.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(robust_bayes_update(&state, 0, 0).is_err());
    }

    #[test]
    fn matches_plain_bayes_then_regularize() {
        let models = vec![sv(&[0.7, 0.3]), sv(&[0.3, 0.7])];
        let state = RobustBayesState::new(models.clone(), Some(vec![0.6, 0.4])).unwrap();
        let next = robust_bayes_update(&state, 1, 3).unwrap();
        let plain = [
            0.6 * 0.3 / (0.6 * 0.3 + 0.4 * 0.7),
            0.4 * 0.7 / (0.6 * 0.3 + 0.4 * 0.7),
        ];
        let expected = RobustBayesState::regularize(&plain, 3);
        assert_relative_eq!(next.weights()[0], expected[0], epsilon = 1e-15);
        assert_relative_eq!(next.weights()[1], expected[1], epsilon = 1e-15);
    }
}
