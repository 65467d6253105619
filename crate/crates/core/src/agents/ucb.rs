use crate::error::{Error, Result};
use crate::simplex::SimplexVector;

use super::Strategy;

/// UCB1 bookkeeping over a fixed set of candidate strategies.
#[derive(Clone, Debug, PartialEq)]
pub struct UcbState {
    pulls: Vec<u64>,
    mean_reward: Vec<f64>,
    steps: u64,
}

impl UcbState {
    pub fn new(arms: usize) -> Self {
        UcbState {
            pulls: vec![0; arms],
            mean_reward: vec![0.0; arms],
            steps: 0,
        }
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    pub fn mean_reward(&self) -> &[f64] {
        &self.mean_reward
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// First unpulled arm in index order, else the highest
    /// `mean + sqrt(2 ln t / n)`; ties go to the lowest index.
    pub fn select(&self) -> usize {
        if let Some(arm) = self.pulls.iter().position(|n| *n == 0) {
            return arm;
        }
        let log_t = (self.steps as f64).ln();
        let mut best = 0;
        let mut best_index = f64::NEG_INFINITY;
        for (arm, (&n, &mean)) in self.pulls.iter().zip(&self.mean_reward).enumerate() {
            let index = mean + (2.0 * log_t / n as f64).sqrt();
            if index > best_index {
                best = arm;
                best_index = index;
            }
        }
        best
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.pulls[arm] += 1;
        self.mean_reward[arm] += (reward - self.mean_reward[arm]) / self.pulls[arm] as f64;
        self.steps += 1;
    }
}

/// Maps `log theta_s` onto `[0, 1]` using the smallest entry of any model.
#[derive(Clone, Copy, Debug)]
struct RewardScale {
    log_floor: f64,
}

impl RewardScale {
    fn new(models: &[SimplexVector]) -> Self {
        let floor = models
            .iter()
            .map(SimplexVector::min)
            .fold(f64::INFINITY, f64::min);
        RewardScale {
            log_floor: floor.ln(),
        }
    }

    fn reward(&self, probability: f64) -> f64 {
        if self.log_floor == 0.0 {
            return 1.0;
        }
        (probability.ln() - self.log_floor) / -self.log_floor
    }
}

/// Credits the arm played at the last step with its reward at `last`, if
/// any, then picks the arm for the coming step.
pub fn ucb_step(
    state: &UcbState,
    models: &[SimplexVector],
    last: Option<(usize, usize)>,
) -> (usize, UcbState) {
    let mut next = state.clone();
    if let Some((arm, observed)) = last {
        let scale = RewardScale::new(models);
        next.record(arm, scale.reward(models[arm][observed]));
    }
    (next.select(), next)
}

/// Bandit investor: each step it invests according to one candidate model.
#[derive(Clone, Debug)]
pub struct UcbAgent {
    models: Vec<SimplexVector>,
    scale: RewardScale,
    state: UcbState,
    chosen: usize,
}

impl UcbAgent {
    pub fn new(models: Vec<SimplexVector>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::invalid("UCB needs at least one model"));
        }
        if models.iter().any(|m| m.min() <= 0.0) {
            return Err(Error::invalid("UCB models must have full support"));
        }
        let scale = RewardScale::new(&models);
        let state = UcbState::new(models.len());
        Ok(UcbAgent {
            models,
            scale,
            state,
            chosen: 0,
        })
    }

    pub fn state(&self) -> &UcbState {
        &self.state
    }
}

impl Strategy for UcbAgent {
    fn next_strategy(&mut self, _t: usize) -> Result<&SimplexVector> {
        self.chosen = self.state.select();
        Ok(&self.models[self.chosen])
    }

    fn observe(&mut self, state: usize) -> Result<()> {
        let reward = self.scale.reward(self.models[self.chosen][state]);
        self.state.record(self.chosen, reward);
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {
        self.state = UcbState::new(self.models.len());
        self.chosen = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{relative_entropy, sample_state};
    use crate::rng::substream;

    fn sv(w: &[f64]) -> SimplexVector {
        SimplexVector::new(w.to_vec()).unwrap()
    }

    fn play(models: &[SimplexVector], q: &SimplexVector, steps: usize, seed: u64) -> UcbState {
        let mut agent = UcbAgent::new(models.to_vec()).unwrap();
        let mut rng = substream(seed, "states");
        for t in 1..=steps {
            agent.next_strategy(t).unwrap();
            agent.observe(sample_state(q, &mut rng)).unwrap();
        }
        agent.state().clone()
    }

    #[test]
    fn pulls_each_arm_first() {
        let models = vec![sv(&[0.7, 0.3]), sv(&[0.9, 0.1]), sv(&[0.3, 0.7])];
        let mut state = UcbState::new(3);
        let mut order = Vec::new();
        let mut last = None;
        for _ in 0..3 {
            let (arm, next) = ucb_step(&state, &models, last);
            order.push(arm);
            last = Some((arm, 0));
            state = next;
        }
        assert_eq!(order, vec![0, 1, 2]);
        assert_eq!(state.pulls().iter().sum::<u64>(), 2);
    }

    #[test]
    fn single_model_always_played() {
        let models = vec![sv(&[0.6, 0.4])];
        let state = play(&models, &sv(&[0.5, 0.5]), 1000, 1);
        assert_eq!(state.pulls(), &[1000]);
    }

    #[test]
    fn counts_sum_to_steps() {
        let models = vec![sv(&[0.8, 0.2]), sv(&[0.7, 0.3]), sv(&[0.6, 0.4])];
        let state = play(&models, &sv(&[0.7, 0.3]), 5000, 2);
        assert_eq!(state.pulls().iter().sum::<u64>(), state.steps());
        assert_eq!(state.steps(), 5000);
    }

    #[test]
    fn rewards_are_normalized() {
        let models = vec![sv(&[0.9, 0.1]), sv(&[0.5, 0.5])];
        let scale = RewardScale::new(&models);
        assert!((scale.reward(0.1) - 0.0).abs() < 1e-15);
        assert!((scale.reward(1.0) - 1.0).abs() < 1e-15);
        assert!(scale.reward(0.5) > 0.0 && scale.reward(0.5) < 1.0);
    }

    #[test]
    fn suboptimal_pulls_grow_logarithmically() {
        let q = sv(&[0.7, 0.3]);
        let models = vec![q.clone(), sv(&[0.3, 0.7])];
        let steps = 100_000;
        let state = play(&models, &q, steps, 3);
        let scale = RewardScale::new(&models);
        // Gap in normalized reward units.
        let gap = relative_entropy(&q, &models[1]) / -scale.log_floor;
        let bound = 50.0 * (steps as f64).ln() / (gap * gap);
        assert!(
            (state.pulls()[1] as f64) < bound,
            "pulls {} bound {bound}",
            state.pulls()[1]
        );
        assert!(state.pulls()[0] as f64 > 0.95 * steps as f64);
    }

    #[test]
    fn figure_one_action_set_concentrates_on_truth() {
        let q = sv(&[0.7, 0.3]);
        let models = vec![sv(&[0.7, 0.3]), sv(&[0.9, 0.1]), sv(&[0.3, 0.7])];
        let state = play(&models, &q, 200_000, 4);
        let share = state.pulls()[0] as f64 / state.steps() as f64;
        assert!(share > 0.9, "share of correct model {share}");
    }
}
