//! Monte Carlo summaries.

use serde::Serialize;

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// A Monte Carlo point estimate with its uncertainty and provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateResult {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_reps: u64,
    pub seed: u64,
    /// Replicates that hit a resource or horizon limit.
    pub n_flagged: u64,
}

impl EstimateResult {
    /// Half-width of the interval `estimate +- k * std_error`.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error
    }
}

/// Mean, standard error `s / sqrt(n)` and 95% normal interval. Sums are
/// compensated, so the result does not depend on how `samples` was produced
/// as long as its order is fixed.
pub fn summarize(samples: &[f64], seed: u64) -> Result<EstimateResult> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "summarize needs at least 2 samples".into(),
        ));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().copied().collect::<NeumaierSum>().total() / n;
    let ss = samples
        .iter()
        .map(|x| (x - mean).powi(2))
        .collect::<NeumaierSum>()
        .total();
    let std_error = (ss / (n - 1.0)).sqrt() / n.sqrt();
    Ok(EstimateResult {
        estimate: mean,
        std_error,
        ci_lo: mean - Z95 * std_error,
        ci_hi: mean + Z95 * std_error,
        n_reps: samples.len() as u64,
        seed,
        n_flagged: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_error() {
        let r = summarize(&[0.25; 10], 1).unwrap();
        assert_eq!(r.estimate, 0.25);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(r.ci_lo, r.ci_hi);
    }

    #[test]
    fn two_point_hand_arithmetic() {
        let r = summarize(&[0.0, 1.0], 9).unwrap();
        assert_eq!(r.estimate, 0.5);
        assert!((r.std_error - 0.5).abs() < 1e-15);
        assert!(r.ci_lo <= r.estimate && r.estimate <= r.ci_hi);
        assert_eq!(r.seed, 9);
        assert_eq!(r.n_reps, 2);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = NeumaierSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.total(), 1000.0);
    }

    #[test]
    fn rejects_single_sample() {
        assert!(summarize(&[1.0], 0).is_err());
    }
}
