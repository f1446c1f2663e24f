//! ADWIN adaptive windowing change detector.
//!
//! The window is stored as an exponential histogram: row `i` holds buckets that
//! each summarize `2^i` consecutive inputs, at most [`MAX_BUCKETS_PER_ROW`]
//! per row. Cut tests only look at bucket boundaries.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_BUCKETS_PER_ROW: usize = 5;
/// Cut tests run when the window width is a multiple of this.
pub const CHECK_CLOCK: u64 = 32;
pub const DEFAULT_DELTA: f64 = 0.002;
/// Smallest sub-window (in samples) on either side of a candidate cut.
pub const MIN_SUB_WINDOW: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DriftError {
    #[error("OutOfRange: ADWIN input {0} is outside [0, 1]")]
    OutOfRange(f64),
}

/// ADWIN cut threshold for sub-windows of `n0` and `n1` samples.
///
/// With `m = 1 / (1/n0 + 1/n1)`:
/// `sqrt((2/m) * var * ln(2/delta')) + (2 / (3m)) * ln(2/delta')`.
pub fn cut_threshold(n0: u64, n1: u64, window_variance: f64, delta_prime: f64) -> f64 {
    let m = 1.0 / (1.0 / n0 as f64 + 1.0 / n1 as f64);
    let log_term = (2.0 / delta_prime).ln();
    ((2.0 / m) * window_variance * log_term).sqrt() + (2.0 / (3.0 * m)) * log_term
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Bucket {
    count: u64,
    sum: f64,
    /// Sum of squared deviations from the bucket mean.
    m2: f64,
}

impl Bucket {
    fn merge(a: Bucket, b: Bucket) -> Bucket {
        let count = a.count + b.count;
        let (na, nb) = (a.count as f64, b.count as f64);
        let diff = a.sum / na - b.sum / nb;
        Bucket {
            count,
            sum: a.sum + b.sum,
            m2: a.m2 + b.m2 + diff * diff * na * nb / count as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adwin {
    delta: f64,
    /// `rows[i]` holds buckets of size `2^i`, oldest at the front.
    rows: Vec<VecDeque<Bucket>>,
    width: u64,
    total: f64,
    m2: f64,
    detections: u64,
}

impl Default for Adwin {
    fn default() -> Self {
        Adwin::new(DEFAULT_DELTA)
    }
}

impl Adwin {
    pub fn new(delta: f64) -> Self {
        assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
        Adwin {
            delta,
            rows: Vec::new(),
            width: 0,
            total: 0.0,
            m2: 0.0,
            detections: 0,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn mean(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.total / self.width as f64
        }
    }

    /// Population variance of the retained window.
    pub fn variance(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            (self.m2 / self.width as f64).max(0.0)
        }
    }

    pub fn bucket_count(&self) -> usize {
        self.rows.iter().map(VecDeque::len).sum()
    }

    /// Number of updates that reported a change.
    pub fn detections(&self) -> u64 {
        self.detections
    }

    /// Feeds one value. Returns `true` when a change was detected and the
    /// older part of the window was dropped.
    pub fn update(&mut self, value: f64) -> Result<bool, DriftError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(DriftError::OutOfRange(value));
        }
        self.insert(value);
        if self.width.is_multiple_of(CHECK_CLOCK) {
            Ok(self.detect_now())
        } else {
            Ok(false)
        }
    }

    /// Convenience for 0/1 error signals.
    pub fn update_error(&mut self, error: bool) -> bool {
        self.update(if error { 1.0 } else { 0.0 })
            .expect("0/1 input is in range")
    }

    /// Like [`Adwin::update_error`], but only reports changes where the
    /// retained (recent) error rate is higher than before the cut.
    pub fn update_error_increase(&mut self, error: bool) -> bool {
        let before = self.mean();
        self.update_error(error) && self.mean() > before
    }

    fn insert(&mut self, value: f64) {
        if self.width > 0 {
            let old_mean = self.mean();
            let new_mean = (self.total + value) / (self.width + 1) as f64;
            self.m2 += (value - old_mean) * (value - new_mean);
        }
        self.width += 1;
        self.total += value;
        if self.rows.is_empty() {
            self.rows
                .push(VecDeque::with_capacity(MAX_BUCKETS_PER_ROW + 1));
        }
        self.rows[0].push_back(Bucket {
            count: 1,
            sum: value,
            m2: 0.0,
        });
        self.compress();
    }

    fn compress(&mut self) {
        let mut row = 0;
        while row < self.rows.len() && self.rows[row].len() > MAX_BUCKETS_PER_ROW {
            let a = self.rows[row].pop_front().expect("row over capacity");
            let b = self.rows[row].pop_front().expect("row over capacity");
            if row + 1 == self.rows.len() {
                self.rows
                    .push(VecDeque::with_capacity(MAX_BUCKETS_PER_ROW + 1));
            }
            self.rows[row + 1].push_back(Bucket::merge(a, b));
            row += 1;
        }
    }

    /// Runs the cut test now, independent of the check clock.
    pub fn detect_now(&mut self) -> bool {
        let mut changed = false;
        while self.find_cut() {
            self.drop_oldest();
            changed = true;
        }
        if changed {
            self.detections += 1;
        }
        changed
    }

    /// Scans bucket boundaries from oldest to newest for a split whose
    /// sub-window means differ by at least the cut threshold.
    fn find_cut(&self) -> bool {
        if self.width < 2 * MIN_SUB_WINDOW {
            return false;
        }
        let variance = self.variance();
        let delta_prime = self.delta / (self.width as f64).ln();
        let mut n0 = 0u64;
        let mut sum0 = 0.0;
        for row in self.rows.iter().rev() {
            for bucket in row {
                n0 += bucket.count;
                sum0 += bucket.sum;
                let n1 = self.width - n0;
                if n1 < MIN_SUB_WINDOW {
                    return false;
                }
                if n0 < MIN_SUB_WINDOW {
                    continue;
                }
                let mean0 = sum0 / n0 as f64;
                let mean1 = (self.total - sum0) / n1 as f64;
                if (mean0 - mean1).abs() >= cut_threshold(n0, n1, variance, delta_prime) {
                    return true;
                }
            }
        }
        false
    }

    fn drop_oldest(&mut self) {
        while self.rows.last().is_some_and(VecDeque::is_empty) {
            self.rows.pop();
        }
        if let Some(top) = self.rows.last_mut() {
            top.pop_front();
        }
        while self.rows.last().is_some_and(VecDeque::is_empty) {
            self.rows.pop();
        }
        self.recompute_totals();
    }

    fn recompute_totals(&mut self) {
        let merged = self
            .rows
            .iter()
            .flat_map(|r| r.iter().copied())
            .reduce(Bucket::merge);
        match merged {
            Some(b) => {
                self.width = b.count;
                self.total = b.sum;
                self.m2 = b.m2;
            }
            None => {
                self.width = 0;
                self.total = 0.0;
                self.m2 = 0.0;
            }
        }
    }
}
