use rand::Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::simplex::SimplexVector;

use super::{check_prior, Strategy};

/// Two-model Bayesian whose every update over- or under-weights the new
/// observation against the prior by a random `eta_t = +-eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyBayesState {
    theta_a: SimplexVector,
    theta_b: SimplexVector,
    /// `log P_t(theta_a) / P_t(theta_b)`.
    log_odds: f64,
    eta: f64,
}

impl NoisyBayesState {
    pub fn new(
        theta_a: SimplexVector,
        theta_b: SimplexVector,
        prior: Option<Vec<f64>>,
        eta: f64,
    ) -> Result<Self> {
        if theta_a.len() != 2 || theta_b.len() != 2 {
            return Err(Error::Unsupported(
                "noisy Bayesian updates are defined for two states".into(),
            ));
        }
        if theta_a.min() <= 0.0 || theta_b.min() <= 0.0 {
            return Err(Error::invalid("models must have full support"));
        }
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::invalid(format!("eta {eta} must lie in [0, 1)")));
        }
        let log_odds = match prior {
            Some(p) => {
                check_prior(&p, 2)?;
                if p[0] == 0.0 || p[1] == 0.0 {
                    return Err(Error::invalid(
                        "noisy Bayesian prior must give both models positive weight",
                    ));
                }
                (p[0] / p[1]).ln()
            }
            None => 0.0,
        };
        Ok(NoisyBayesState {
            theta_a,
            theta_b,
            log_odds,
            eta,
        })
    }

    pub fn log_odds(&self) -> f64 {
        self.log_odds
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Log-likelihood ratio `log theta_a(s) / theta_b(s)` of one observation.
    pub fn log_likelihood_ratio(&self, state: usize) -> f64 {
        (self.theta_a[state] / self.theta_b[state]).ln()
    }

    /// Posterior weight on `theta_a`.
    pub fn weight_a(&self) -> f64 {
        1.0 / (1.0 + (-self.log_odds).exp())
    }

    /// `(1 + eta_t) L(s) + (1 - eta_t) * log_odds` for a given sign of the noise.
    pub fn apply(&mut self, state: usize, eta_t: f64) {
        self.log_odds =
            (1.0 + eta_t) * self.log_likelihood_ratio(state) + (1.0 - eta_t) * self.log_odds;
    }

    pub(crate) fn predict_into(&self, out: &mut [f64]) {
        let a = self.weight_a();
        for (s, x) in out.iter_mut().enumerate() {
            *x = a * self.theta_a[s] + (1.0 - a) * self.theta_b[s];
        }
    }

    pub fn predict(&self) -> SimplexVector {
        let mut out = vec![0.0; 2];
        self.predict_into(&mut out);
        SimplexVector::from_raw(out)
    }
}

/// Draws `eta_t` (one generator draw) and applies the noisy recursion.
/// Returns the new state and the `eta_t` used.
pub fn noisy_bayes_update<R: Rng + ?Sized>(
    state: &NoisyBayesState,
    observed: usize,
    rng: &mut R,
) -> Result<(NoisyBayesState, f64)> {
    if observed >= 2 {
        return Err(Error::Unsupported(format!(
            "state {observed} in a two-state market"
        )));
    }
    let eta_t = if rng.gen::<bool>() {
        state.eta
    } else {
        -state.eta
    };
    let mut next = state.clone();
    next.apply(observed, eta_t);
    Ok((next, eta_t))
}

#[derive(Clone, Debug)]
pub struct NoisyBayesAgent {
    initial: NoisyBayesState,
    state: NoisyBayesState,
    rng: StreamRng,
    prediction: SimplexVector,
}

impl NoisyBayesAgent {
    pub fn new(state: NoisyBayesState, seed: u64) -> Self {
        let prediction = state.predict();
        NoisyBayesAgent {
            initial: state.clone(),
            state,
            rng: StreamRng::seed_from_u64(seed),
            prediction,
        }
    }

    pub fn state(&self) -> &NoisyBayesState {
        &self.state
    }
}

impl Strategy for NoisyBayesAgent {
    fn next_strategy(&mut self, _t: usize) -> Result<&SimplexVector> {
        self.state.predict_into(self.prediction.as_mut_slice());
        Ok(&self.prediction)
    }

    fn observe(&mut self, state: usize) -> Result<()> {
        if state >= 2 {
            return Err(Error::Unsupported(format!(
                "state {state} in a two-state market"
            )));
        }
        let eta_t = if self.rng.gen::<bool>() {
            self.state.eta
        } else {
            -self.state.eta
        };
        self.state.apply(state, eta_t);
        Ok(())
    }

    fn reset(&mut self, seed: u64) {
        self.state = self.initial.clone();
        self.rng = StreamRng::seed_from_u64(seed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::BayesState;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn sv(w: &[f64]) -> SimplexVector {
        SimplexVector::new(w.to_vec()).unwrap()
    }

    #[test]
    fn zero_noise_reduces_to_bayes() {
        let (a, b) = (sv(&[0.7, 0.3]), sv(&[0.6, 0.4]));
        let mut noisy = NoisyBayesState::new(a.clone(), b.clone(), None, 0.0).unwrap();
        let mut exact = BayesState::new(vec![a, b], None).unwrap();
        let mut rng = substream(5, "noise");
        let mut states = substream(5, "states");
        for _ in 0..5000 {
            let s = usize::from(states.gen::<f64>() >= 0.7);
            noisy = noisy_bayes_update(&noisy, s, &mut rng).unwrap().0;
            exact.update(s);
            assert_relative_eq!(noisy.log_odds(), exact.log_odds(0, 1), epsilon = 1e-9);
        }
    }

    #[test]
    fn recursion_matches_unrolled_sum() {
        let state0 = NoisyBayesState::new(
            sv(&[0.7, 0.3]),
            sv(&[0.4, 0.6]),
            Some(vec![0.25, 0.75]),
            0.1,
        )
        .unwrap();
        let mut rng = substream(8, "noise");
        let mut states = substream(8, "states");
        let mut state = state0.clone();
        let mut lr = Vec::new();
        let mut etas = Vec::new();
        for _ in 0..200 {
            let s = usize::from(states.gen::<f64>() >= 0.7);
            let (next, eta_t) = noisy_bayes_update(&state, s, &mut rng).unwrap();
            state = next;
            lr.push(state0.log_likelihood_ratio(s));
            etas.push(eta_t);
        }
        let t = lr.len();
        let decay = |from: usize| etas[from..t].iter().map(|e| 1.0 - e).product::<f64>();
        // log_odds_t = sum_i (1 + eta_i) L_i prod_{j>i} (1 - eta_j) + log_odds_0 prod_j (1 - eta_j)
        let unrolled: f64 = (0..t)
            .map(|i| (1.0 + etas[i]) * lr[i] * decay(i + 1))
            .sum::<f64>()
            + state0.log_odds() * decay(0);
        assert_relative_eq!(state.log_odds(), unrolled, epsilon = 1e-9);

        // The prior's weight is (1 - eta)^{n+} (1 + eta)^{n-}.
        let plus = etas.iter().filter(|e| **e > 0.0).count() as i32;
        assert_relative_eq!(
            decay(0),
            0.9f64.powi(plus) * 1.1f64.powi(t as i32 - plus),
            max_relative = 1e-12
        );

        // Z_t = sum_i L_i prod_{j>i} (1 - eta_j) obeys Z_{t+1} = (1 - eta_{t+1}) Z_t + L_{t+1}.
        let z = |n: usize| {
            (0..n)
                .map(|i| lr[i] * etas[i + 1..n].iter().map(|e| 1.0 - e).product::<f64>())
                .sum::<f64>()
        };
        for n in 1..t {
            assert_relative_eq!(z(n + 1), (1.0 - etas[n]) * z(n) + lr[n], epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_more_than_two_states() {
        let m = sv(&[0.2, 0.3, 0.5]);
        assert!(matches!(
            NoisyBayesState::new(m.clone(), m, None, 0.1),
            Err(Error::Unsupported(_))
        ));
        let state = NoisyBayesState::new(sv(&[0.7, 0.3]), sv(&[0.4, 0.6]), None, 0.1).unwrap();
        assert!(noisy_bayes_update(&state, 2, &mut substream(1, "x")).is_err());
    }

    #[test]
    fn emitted_strategy_stays_inside_the_floor() {
        let mut agent = NoisyBayesAgent::new(
            NoisyBayesState::new(sv(&[0.7, 0.3]), sv(&[0.4, 0.6]), None, 0.1).unwrap(),
            3,
        );
        for t in 1..20_000 {
            let alpha = agent.next_strategy(t).unwrap();
            assert!(alpha.min() >= 1e-6 && alpha.min() <= 1.0 - 1e-6);
            agent.observe(t % 3 / 2).unwrap();
        }
    }
}
