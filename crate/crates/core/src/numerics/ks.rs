//! Kolmogorov-Smirnov distances.

use crate::error::{Error, Result};

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `sup |F_n - F|` against a reference cdf.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "KS needs at least 2 samples".into(),
        ));
    }
    let xs = sorted(samples);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// `sup |F_n - G_m|` between two empirical cdfs. Ties are handled by
/// advancing both samples past a shared value before comparing.
pub fn ks_two_sample(x_samples: &[f64], y_samples: &[f64]) -> Result<f64> {
    if x_samples.len() < 2 || y_samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "KS needs at least 2 samples per side".into(),
        ));
    }
    let xs = sorted(x_samples);
    let ys = sorted(y_samples);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Asymptotic `alpha = 0.01` threshold for the two-sample statistic.
pub fn two_sample_threshold(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.63 * ((n + m) / (n * m)).sqrt()
}

/// Asymptotic `alpha = 0.01` threshold for the one-sample statistic.
pub fn one_sample_threshold(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::rng_stream;
    use rand::Rng;

    #[test]
    fn exact_quantiles_give_half_step() {
        let n = 200;
        let xs: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let d = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn null_draws_stay_below_threshold() {
        let mut rng = rng_stream(2024, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let d = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d < one_sample_threshold(xs.len()), "d = {d}");
    }

    #[test]
    fn identical_arrays_have_zero_distance() {
        let xs = [3.0, 1.0, 2.0, 2.0, 5.0];
        assert_eq!(ks_two_sample(&xs, &xs).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_arrays_have_unit_distance() {
        let d = ks_two_sample(&[0.0, 1.0], &[2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn too_few_samples() {
        assert!(ks_one_sample(&[1.0], |x| x).is_err());
        assert!(ks_two_sample(&[1.0, 2.0], &[1.0]).is_err());
    }
}
