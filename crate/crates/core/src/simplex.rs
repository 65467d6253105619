//! Probability vectors over market states.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|sum - 1|` for vectors supplied from outside.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance on `|sum - 1|` after chains of arithmetic.
pub const ARITHMETIC_TOL: f64 = 1e-9;
/// Default lower bound on every entry of an emitted strategy.
pub const DEFAULT_STRATEGY_FLOOR: f64 = 1e-6;

/// A probability vector over `S >= 2` states.
///
/// Used for the state distribution, investment strategies, prices,
/// posterior-predictive forecasts and empirical frequencies. Entries may be
/// zero unless the vector is checked with [`SimplexVector::check_floor`].
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, CONSTRUCTION_TOL)
    }

    pub fn with_tolerance(weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::invalid(format!(
                "simplex vector needs at least 2 entries, got {}",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!(
                "simplex entry {w} is not a nonnegative number"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::invalid(format!(
                "simplex entries sum to {sum}, not 1"
            )));
        }
        Ok(SimplexVector(weights))
    }

    /// Validates and additionally requires every entry to be at least `floor`.
    pub fn with_floor(weights: Vec<f64>, floor: f64) -> Result<Self> {
        let v = Self::new(weights)?;
        v.check_floor(floor)?;
        Ok(v)
    }

    /// Divides by the sum. Fails on negative entries or a zero sum.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(
                "cannot normalize a vector with negative or non-finite entries",
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::invalid("cannot normalize a vector with zero mass"));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::with_tolerance(weights, ARITHMETIC_TOL)
    }

    pub fn uniform(states: usize) -> Result<Self> {
        if states < 2 {
            return Err(Error::invalid("simplex vector needs at least 2 entries"));
        }
        Ok(SimplexVector(vec![1.0 / states as f64; states]))
    }

    /// All mass on `state`.
    pub fn point_mass(states: usize, state: usize) -> Result<Self> {
        if states < 2 || state >= states {
            return Err(Error::invalid(format!("no state {state} among {states}")));
        }
        let mut w = vec![0.0; states];
        w[state] = 1.0;
        Ok(SimplexVector(w))
    }

    pub fn check_floor(&self, floor: f64) -> Result<()> {
        match self.0.iter().position(|w| *w < floor) {
            Some(s) => Err(Error::invalid(format!(
                "entry {s} = {} is below the floor {floor}",
                self.0[s]
            ))),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Raises every entry to at least `floor` and takes the excess mass
    /// proportionally from the entries above it. Returns whether anything
    /// changed.
    pub fn clamp_to_floor(&mut self, floor: f64) -> bool {
        clamp_slice(&mut self.0, floor)
    }

    /// Unchecked constructor for vectors produced by code in this crate that
    /// already guarantees the simplex invariant.
    pub(crate) fn from_raw(weights: Vec<f64>) -> Self {
        debug_assert!(weights.len() >= 2);
        debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() <= ARITHMETIC_TOL);
        SimplexVector(weights)
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// See [`SimplexVector::clamp_to_floor`]. Requires `floor * len < 1`.
pub(crate) fn clamp_slice(w: &mut [f64], floor: f64) -> bool {
    if w.iter().all(|x| *x >= floor) {
        return false;
    }
    // Entries pinned at the floor can grow in number as mass is removed,
    // so iterate until the set is stable (at most `len` rounds).
    let n = w.len();
    let mut pinned = vec![false; n];
    loop {
        let mut changed = false;
        for (i, x) in w.iter().enumerate() {
            if !pinned[i] && *x < floor {
                pinned[i] = true;
                changed = true;
            }
        }
        let pinned_count = pinned.iter().filter(|p| **p).count();
        let free_mass: f64 = w
            .iter()
            .zip(&pinned)
            .filter(|(_, p)| !**p)
            .map(|(x, _)| *x)
            .sum();
        let target = 1.0 - floor * pinned_count as f64;
        for (x, p) in w.iter_mut().zip(&pinned) {
            if *p {
                *x = floor;
            } else if free_mass > 0.0 {
                *x *= target / free_mass;
            }
        }
        if !changed || pinned_count == n {
            break;
        }
    }
    true
}

impl Index<usize> for SimplexVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl fmt::Debug for SimplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        SimplexVector::new(weights)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(v: SimplexVector) -> Vec<f64> {
        v.0
    }
}

/// Total variation distance, `0.5 * sum |p_s - q_s|`.
pub fn total_variation(p: &SimplexVector, q: &SimplexVector) -> f64 {
    0.5 * p
        .iter()
        .zip(q.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

/// Numerically stable `log(sum(exp(x)))`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_vectors() {
        assert!(SimplexVector::new(vec![1.0]).is_err());
        assert!(SimplexVector::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexVector::new(vec![1.5, -0.5]).is_err());
        assert!(SimplexVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(SimplexVector::with_floor(vec![0.999, 0.001], 0.01).is_err());
        assert!(SimplexVector::new(vec![0.7, 0.3]).is_ok());
    }

    #[test]
    fn construction_tolerance_is_tight() {
        assert!(SimplexVector::new(vec![0.5, 0.5 + 5e-13]).is_ok());
        assert!(SimplexVector::new(vec![0.5, 0.5 + 5e-12]).is_err());
    }

    #[test]
    fn deserialization_validates() {
        let ok: SimplexVector = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(ok.as_slice(), &[0.25, 0.75]);
        assert!(serde_json::from_str::<SimplexVector>("[0.25, 0.25]").is_err());
    }

    #[test]
    fn clamp_lifts_small_entries() {
        let mut v = SimplexVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(v.clamp_to_floor(0.01));
        assert_eq!(v[1], 0.01);
        assert_eq!(v[2], 0.01);
        assert!((v[0] - 0.98).abs() < 1e-15);
        assert!(!v.clamp_to_floor(0.01));
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0);
    }

    proptest! {
        #[test]
        fn clamp_keeps_simplex_and_floor(raw in proptest::collection::vec(0.0f64..1.0, 2..8), floor in 1e-6f64..0.05) {
            prop_assume!(raw.iter().sum::<f64>() > 0.0);
            let mut v = SimplexVector::normalized(raw).unwrap();
            v.clamp_to_floor(floor);
            let sum: f64 = v.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(v.min() >= floor * (1.0 - 1e-12));
        }
    }
}
