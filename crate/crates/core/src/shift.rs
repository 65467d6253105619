//! Piecewise-stationary state generation and the benchmark that knows the
//! intervals in advance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::sample_state;
use crate::regret::{cumulative_utility, hindsight_best};
use crate::simplex::SimplexVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub duration: usize,
    pub distribution: SimplexVector,
}

/// Consecutive intervals, each drawing states i.i.d. from its own distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct ShiftSchedule {
    intervals: Vec<Interval>,
}

impl ShiftSchedule {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::invalid(
                "a shift schedule needs at least one interval",
            ));
        }
        let states = intervals[0].distribution.len();
        for (i, interval) in intervals.iter().enumerate() {
            if interval.duration == 0 {
                return Err(Error::invalid(format!("interval {i} has zero duration")));
            }
            if interval.distribution.len() != states {
                return Err(Error::invalid(format!(
                    "interval {i} has a different number of states"
                )));
            }
        }
        Ok(ShiftSchedule { intervals })
    }

    pub fn stationary(q: SimplexVector, horizon: usize) -> Self {
        ShiftSchedule {
            intervals: vec![Interval {
                duration: horizon,
                distribution: q,
            }],
        }
    }

    /// Validates that every distribution respects `floor`.
    pub fn check_floor(&self, floor: f64) -> Result<()> {
        self.intervals
            .iter()
            .try_for_each(|i| i.distribution.check_floor(floor))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn total_duration(&self) -> usize {
        self.intervals.iter().map(|i| i.duration).sum()
    }

    /// `(start, end)` step ranges of the intervals, end exclusive.
    pub fn boundaries(&self) -> Vec<(usize, usize)> {
        let mut start = 0;
        self.intervals
            .iter()
            .map(|i| {
                let range = (start, start + i.duration);
                start += i.duration;
                range
            })
            .collect()
    }
}

impl TryFrom<Vec<Interval>> for ShiftSchedule {
    type Error = Error;

    fn try_from(intervals: Vec<Interval>) -> Result<Self> {
        ShiftSchedule::new(intervals)
    }
}

impl From<ShiftSchedule> for Vec<Interval> {
    fn from(s: ShiftSchedule) -> Self {
        s.intervals
    }
}

/// One draw per step; interval `i` samples from `q_i`.
pub fn generate_shifted_states<R: Rng + ?Sized>(
    schedule: &ShiftSchedule,
    rng: &mut R,
) -> Vec<usize> {
    let mut states = Vec::with_capacity(schedule.total_duration());
    for interval in schedule.intervals() {
        for _ in 0..interval.duration {
            states.push(sample_state(&interval.distribution, rng));
        }
    }
    states
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalBenchmark {
    pub value: f64,
    /// Hindsight maximizer of each interval.
    pub maximizers: Vec<SimplexVector>,
}

/// Sum over intervals of the best fixed strategy's utility on that interval.
pub fn interval_benchmark(schedule: &ShiftSchedule, states: &[usize]) -> Result<IntervalBenchmark> {
    if states.len() != schedule.total_duration() {
        return Err(Error::invalid(format!(
            "{} states for a schedule of {} steps",
            states.len(),
            schedule.total_duration()
        )));
    }
    let num_states = schedule.intervals()[0].distribution.len();
    let mut value = 0.0;
    let mut maximizers = Vec::with_capacity(schedule.intervals().len());
    for (start, end) in schedule.boundaries() {
        let (best, v) = hindsight_best(&states[start..end], num_states)?;
        value += v;
        maximizers.push(best);
    }
    Ok(IntervalBenchmark { value, maximizers })
}

/// Interval benchmark minus the realized utility of `history`.
pub fn shifted_regret(
    history: &[SimplexVector],
    schedule: &ShiftSchedule,
    states: &[usize],
) -> Result<f64> {
    if history.len() != states.len() {
        return Err(Error::invalid(
            "strategy history and state sequence differ in length",
        ));
    }
    let bench = interval_benchmark(schedule, states)?;
    Ok(bench.value - cumulative_utility(history, states)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn sv(w: &[f64]) -> SimplexVector {
        SimplexVector::new(w.to_vec()).unwrap()
    }

    fn two_block(p: f64, t: usize) -> ShiftSchedule {
        let t1 = 2 * t / 3;
        ShiftSchedule::new(vec![
            Interval {
                duration: t1,
                distribution: sv(&[p, 1.0 - p]),
            },
            Interval {
                duration: t - t1,
                distribution: sv(&[1.0 - p, p]),
            },
        ])
        .unwrap()
    }

    #[test]
    fn rejects_empty_and_zero_duration() {
        assert!(ShiftSchedule::new(vec![]).is_err());
        assert!(ShiftSchedule::new(vec![Interval {
            duration: 0,
            distribution: sv(&[0.5, 0.5])
        }])
        .is_err());
    }

    #[test]
    fn schedule_round_trips_through_json() {
        let s = two_block(0.75, 30);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.starts_with("[{\"duration\":20"));
        assert_eq!(serde_json::from_str::<ShiftSchedule>(&text).unwrap(), s);
        assert!(serde_json::from_str::<ShiftSchedule>(
            "[{\"duration\":3,\"distribution\":[0.5,0.5],\"x\":1}]"
        )
        .is_err());
    }

    #[test]
    fn equal_blocks_match_stationary_sampling() {
        let q = sv(&[0.3, 0.7]);
        let split = ShiftSchedule::new(vec![
            Interval {
                duration: 400,
                distribution: q.clone(),
            },
            Interval {
                duration: 600,
                distribution: q.clone(),
            },
        ])
        .unwrap();
        let whole = ShiftSchedule::stationary(q, 1000);
        let a = generate_shifted_states(&split, &mut substream(9, "states"));
        let b = generate_shifted_states(&whole, &mut substream(9, "states"));
        assert_eq!(a, b);
    }

    #[test]
    fn block_frequencies_follow_each_interval() {
        let t = 90_000;
        let schedule = two_block(0.75, t);
        let states = generate_shifted_states(&schedule, &mut substream(11, "states"));
        for ((start, end), expected) in schedule.boundaries().into_iter().zip([0.75, 0.25]) {
            let n = (end - start) as f64;
            let freq = states[start..end].iter().filter(|s| **s == 0).count() as f64 / n;
            let sigma = (expected * (1.0 - expected) / n).sqrt();
            assert!(
                (freq - expected).abs() < 3.0 * sigma,
                "block freq {freq} vs {expected}"
            );
        }
    }

    #[test]
    fn single_interval_equals_hindsight() {
        let states = [0, 1, 1, 0, 0, 0, 1];
        let schedule = ShiftSchedule::stationary(sv(&[0.5, 0.5]), states.len());
        let bench = interval_benchmark(&schedule, &states).unwrap();
        let (_, v) = hindsight_best(&states, 2).unwrap();
        assert_relative_eq!(bench.value, v);
    }

    #[test]
    fn disjoint_blocks_score_zero() {
        let schedule = ShiftSchedule::new(vec![
            Interval {
                duration: 3,
                distribution: sv(&[0.5, 0.5]),
            },
            Interval {
                duration: 2,
                distribution: sv(&[0.5, 0.5]),
            },
        ])
        .unwrap();
        let bench = interval_benchmark(&schedule, &[0, 0, 0, 1, 1]).unwrap();
        assert_eq!(bench.value, 0.0);
        assert_eq!(bench.maximizers[1].as_slice(), &[0.0, 1.0]);
        assert!(interval_benchmark(&schedule, &[0, 1]).is_err());
    }

    #[test]
    fn block_oracle_has_zero_shifted_regret() {
        let schedule = two_block(0.75, 300);
        let states = generate_shifted_states(&schedule, &mut substream(2, "states"));
        let bench = interval_benchmark(&schedule, &states).unwrap();
        let mut history = Vec::new();
        for ((start, end), best) in schedule.boundaries().into_iter().zip(&bench.maximizers) {
            history.extend(std::iter::repeat(best.clone()).take(end - start));
        }
        assert!(shifted_regret(&history, &schedule, &states).unwrap().abs() < 1e-9);
    }

    #[test]
    fn finer_benchmark_dominates() {
        for seed in 0..20 {
            let schedule = two_block(0.75, 600);
            let states = generate_shifted_states(&schedule, &mut substream(seed, "states"));
            let fine = interval_benchmark(&schedule, &states).unwrap().value;
            let (_, coarse) = hindsight_best(&states, 2).unwrap();
            assert!(fine >= coarse - 1e-9);
        }
    }
}
