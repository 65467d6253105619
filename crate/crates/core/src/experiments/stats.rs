//! Statistics over wealth traces.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 10_000;
pub const HISTOGRAM_BINS: usize = 100;

/// Causal trailing mean: entry `i` averages `series[i + 1 - window ..= i]`,
/// or the whole prefix while fewer than `window` entries exist.
pub fn sliding_window_mean(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::invalid("sliding window over an empty series"));
    }
    if window == 0 || window > series.len() {
        return Err(Error::invalid(format!(
            "window {window} must lie in [1, {}]",
            series.len()
        )));
    }
    let mut out = Vec::with_capacity(series.len());
    // Prefix sums keep the running mean free of accumulated drift.
    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for x in series {
        acc += x;
        prefix.push(acc);
    }
    for i in 0..series.len() {
        let start = (i + 1).saturating_sub(window);
        out.push((prefix[i + 1] - prefix[start]) / (i + 1 - start) as f64);
    }
    Ok(out)
}

/// Pooled wealth-share samples on `[0, 1]` in equal-width bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WealthHistogram {
    pub counts: Vec<u64>,
    pub samples: u64,
    /// Exact mean of the pooled samples, not the binned approximation.
    pub mean: f64,
    #[serde(skip)]
    sum: f64,
}

impl Default for WealthHistogram {
    fn default() -> Self {
        WealthHistogram {
            counts: vec![0; HISTOGRAM_BINS],
            samples: 0,
            mean: 0.0,
            sum: 0.0,
        }
    }
}

impl WealthHistogram {
    fn bin(share: f64) -> usize {
        ((share * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
    }

    /// Adds `series[range]`.
    pub fn accumulate(&mut self, series: &[f64], range: Range<usize>) -> Result<()> {
        if range.start > range.end || range.end > series.len() {
            return Err(Error::invalid(format!(
                "range {range:?} does not fit a series of length {}",
                series.len()
            )));
        }
        let mut sum = 0.0;
        for &share in &series[range.clone()] {
            self.counts[Self::bin(share)] += 1;
            sum += share;
        }
        self.sum += sum;
        self.samples += range.len() as u64;
        self.mean = if self.samples == 0 {
            0.0
        } else {
            self.sum / self.samples as f64
        };
        Ok(())
    }

    /// Fraction of samples in bins at or above `share`.
    pub fn mass_above(&self, share: f64) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        let from = Self::bin(share);
        self.counts[from..].iter().sum::<u64>() as f64 / self.samples as f64
    }
}

/// Histogram of one agent's shares pooled over `traces` and the steps in `range`.
pub fn wealth_distribution(traces: &[&[f64]], range: Range<usize>) -> Result<WealthHistogram> {
    let mut hist = WealthHistogram::default();
    for series in traces {
        hist.accumulate(series, range.clone())?;
    }
    Ok(hist)
}

/// Indices `0, ..., len - 1` thinned to at most `points` entries, always
/// keeping the last.
pub fn thin_indices(len: usize, points: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    if points == 0 || len <= points {
        return (0..len).collect();
    }
    let stride = len.div_ceil(points);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    idx
}

/// Roughly log-spaced checkpoints in `1..=horizon`, always including `horizon`.
pub fn log_checkpoints(horizon: usize, per_decade: usize) -> Vec<usize> {
    let mut points = Vec::new();
    if horizon == 0 {
        return points;
    }
    let ratio = 10f64.powf(1.0 / per_decade.max(1) as f64);
    let mut x = 1.0f64;
    while (x as usize) < horizon {
        let t = x.round() as usize;
        if points.last() != Some(&t) {
            points.push(t);
        }
        x *= ratio;
    }
    points.push(horizon);
    points
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}
