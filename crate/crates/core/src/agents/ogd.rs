use crate::error::{Error, Result};
use crate::simplex::SimplexVector;

use super::Strategy;

pub const DEFAULT_STEP_CONSTANT: f64 = 0.1;

/// Euclidean projection of `y` onto `{x : x_s >= floor, sum x = 1}`.
///
/// Shifts by the floor and projects onto the simplex of mass
/// `1 - S * floor` with the sort-and-threshold method.
pub fn project_to_floored_simplex(y: &[f64], floor: f64) -> Vec<f64> {
    let n = y.len();
    let mass = 1.0 - floor * n as f64;
    let shifted: Vec<f64> = y.iter().map(|v| v - floor).collect();
    let mut sorted = shifted.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - mass) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut x: Vec<f64> = shifted
        .iter()
        .map(|v| (v - theta).max(0.0) + floor)
        .collect();
    let sum: f64 = x.iter().sum();
    // Absorb rounding into the largest coordinate.
    let largest = (0..n).max_by(|a, b| x[*a].total_cmp(&x[*b])).unwrap_or(0);
    x[largest] += 1.0 - sum;
    x
}

/// One projected gradient step `alpha - (c / sqrt(t)) g`.
pub fn ogd_step(
    alpha: &SimplexVector,
    gradient: &[f64],
    step_constant: f64,
    t: usize,
    floor: f64,
) -> Result<SimplexVector> {
    if gradient.len() != alpha.len() {
        return Err(Error::invalid("gradient has the wrong dimension"));
    }
    if t == 0 {
        return Err(Error::invalid("gradient steps are indexed from 1"));
    }
    let rate = step_constant / (t as f64).sqrt();
    let y: Vec<f64> = alpha
        .iter()
        .zip(gradient)
        .map(|(a, g)| a - rate * g)
        .collect();
    Ok(SimplexVector::from_raw(project_to_floored_simplex(
        &y, floor,
    )))
}

/// Online projected gradient descent on the loss `-log alpha_s`.
#[derive(Clone, Debug)]
pub struct OgdAgent {
    alpha: SimplexVector,
    step_constant: f64,
    floor: f64,
    t: usize,
    gradient: Vec<f64>,
}

impl OgdAgent {
    /// Starts from the uniform vector.
    pub fn new(states: usize, step_constant: f64, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor * (states as f64) < 1.0) {
            return Err(Error::invalid(format!(
                "floor {floor} must lie in (0, 1/S)"
            )));
        }
        Ok(OgdAgent {
            alpha: SimplexVector::uniform(states)?,
            step_constant,
            floor,
            t: 0,
            gradient: vec![0.0; states],
        })
    }

    pub fn alpha(&self) -> &SimplexVector {
        &self.alpha
    }
}

impl Strategy for OgdAgent {
    fn next_strategy(&mut self, _t: usize) -> Result<&SimplexVector> {
        Ok(&self.alpha)
    }

    fn observe(&mut self, state: usize) -> Result<()> {
        self.t += 1;
        self.gradient.iter_mut().for_each(|g| *g = 0.0);
        self.gradient[state] = -1.0 / self.alpha[state];
        self.alpha = ogd_step(
            &self.alpha,
            &self.gradient,
            self.step_constant,
            self.t,
            self.floor,
        )?;
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {
        let states = self.alpha.len();
        self.alpha = SimplexVector::uniform(states).expect("state count validated at construction");
        self.t = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::Strategy;
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let alpha = SimplexVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let next = ogd_step(&alpha, &[0.0; 3], 0.1, 1, 1e-6).unwrap();
        for s in 0..3 {
            assert_relative_eq!(next[s], alpha[s], epsilon = 1e-15);
        }
    }

    #[test]
    fn repeated_state_drifts_to_floor() {
        let floor = 1e-3;
        let mut agent = OgdAgent::new(2, 0.1, floor).unwrap();
        let mut previous = agent.alpha()[0];
        for _ in 0..20_000 {
            agent.observe(0).unwrap();
            let now = agent.alpha()[0];
            assert!(now >= previous);
            previous = now;
        }
        assert_relative_eq!(agent.alpha()[1], floor, epsilon = 1e-12);
    }

    #[test]
    fn projection_examples() {
        let x = project_to_floored_simplex(&[2.5, 0.5], 1e-6);
        assert_relative_eq!(x[0], 1.0 - 1e-6, epsilon = 1e-15);
        let y = project_to_floored_simplex(&[0.7, 0.5], 0.0);
        assert_relative_eq!(y[0], 0.6, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn projection_lands_on_floored_simplex(y in proptest::collection::vec(-5.0f64..5.0, 2..6), floor in 0.0f64..0.1) {
            let x = project_to_floored_simplex(&y, floor);
            prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(x.iter().all(|v| *v >= floor - 1e-12));
        }

        #[test]
        fn projection_is_closest_point(y in proptest::collection::vec(-2.0f64..2.0, 3), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            // Compare against a random feasible point: the projection is never farther.
            let floor = 0.01;
            let x = project_to_floored_simplex(&y, floor);
            let (a, b) = (a.min(1.0 - 3.0 * floor), b);
            let p0 = floor + a;
            let p1 = floor + (1.0 - 3.0 * floor - a) * b;
            let z = [p0, p1, 1.0 - p0 - p1];
            let dist = |v: &[f64]| v.iter().zip(&y).map(|(u, w)| (u - w).powi(2)).sum::<f64>();
            prop_assert!(dist(&x) <= dist(&z) + 1e-9);
        }
    }
}
