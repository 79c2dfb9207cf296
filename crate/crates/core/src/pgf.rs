//! Offspring laws and their probability generating functions.
//!
//! Besides `f(s)` every law exposes its survival complement
//! `1 - f(1 - t)` and the shape function
//! `psi(s) = 1/(1 - f(s)) - 1/(m (1 - s))`, both evaluated without
//! subtractive cancellation near `s = 1`:
//!
//! * finite pmfs: `1 - f(s) = (1 - s) R(s)` and `psi(s) = U(s) / (m R(s))`
//!   with tail-sum polynomials `R` and `U`, so `psi` is a ratio of
//!   polynomials with nonnegative coefficients;
//! * Poisson: `psi` depends only on `u = lambda (1 - s)` and is taken from
//!   its Bernoulli series for small `u`;
//! * linear-fractional: `psi` is the constant `p / (1 - p0)`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson as PoissonDist};

use crate::error::{Error, Result};

/// Largest supported index of a finite pmf.
pub const MAX_FINITE_SUPPORT: usize = 64;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const POISSON_INVERSION_MAX: f64 = 10.0;
const POISSON_SERIES_MAX_U: f64 = 0.1;

/// Probability vector on `{0, ..., K}` with cached moments and tail sums.
/// Cloning shares the tables.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePmf {
    inner: Arc<FiniteTables>,
}

#[derive(Debug, PartialEq)]
struct FiniteTables {
    weights: Vec<f64>,
    cdf: Vec<f64>,
    /// `tails[j] = P(xi > j)`, the coefficients of `R`.
    tails: Vec<f64>,
    /// `upper[i] = sum_{j > i} tails[j]`, the coefficients of `U`.
    upper: Vec<f64>,
    mean: f64,
    fact2: f64,
}

impl FinitePmf {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter(
                "finite pmf needs at least one weight".into(),
            ));
        }
        if weights.len() > MAX_FINITE_SUPPORT + 1 {
            return Err(Error::InvalidParameter(format!(
                "finite pmf support {} exceeds the cap K <= {MAX_FINITE_SUPPORT}",
                weights.len() - 1
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "finite pmf weights must be nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "finite pmf weights sum to {total}, not 1"
            )));
        }
        let k = weights.len();
        let mut tails = vec![0.0; k.saturating_sub(1)];
        let mut acc = 0.0;
        for j in (0..k.saturating_sub(1)).rev() {
            acc += weights[j + 1];
            tails[j] = acc;
        }
        let mut upper = vec![0.0; tails.len().saturating_sub(1)];
        let mut acc = 0.0;
        for i in (0..upper.len()).rev() {
            acc += tails[i + 1];
            upper[i] = acc;
        }
        let mut cdf = Vec::with_capacity(k);
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cdf.push(acc);
        }
        let mean: f64 = weights.iter().enumerate().map(|(z, w)| z as f64 * w).sum();
        let fact2: f64 = weights
            .iter()
            .enumerate()
            .map(|(z, w)| (z * z.saturating_sub(1)) as f64 * w)
            .sum();
        if !(mean > 0.0) {
            return Err(Error::InvalidParameter(
                "offspring mean must be positive (f'(1) > 0)".into(),
            ));
        }
        Ok(Self {
            inner: Arc::new(FiniteTables {
                weights,
                cdf,
                tails,
                upper,
                mean,
                fact2,
            }),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.inner.weights
    }

    pub fn max_support(&self) -> usize {
        self.inner.weights.len() - 1
    }

    fn horner(coef: &[f64], s: f64) -> f64 {
        coef.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonLaw {
    lambda: f64,
}

impl PoissonLaw {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// `f[0] = p0`, `f[k] = (1 - p0)(1 - p) p^{k-1}` for `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFractional {
    p0: f64,
    p: f64,
}

impl LinearFractional {
    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// A probability measure on the nonnegative integers, identified with its
/// generating function.
#[derive(Debug, Clone, PartialEq)]
pub enum OffspringLaw {
    Finite(FinitePmf),
    Poisson(PoissonLaw),
    LinearFractional(LinearFractional),
}

fn check_unit(s: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{what} needs an argument in [0, 1], got {s}"
        )))
    }
}

/// `1/(1 - e^{-u}) - 1/u` for `u > 0`.
fn poisson_shape(u: f64) -> f64 {
    if u <= POISSON_SERIES_MAX_U {
        let u2 = u * u;
        0.5 + u
            * (1.0 / 12.0
                + u2 * (-1.0 / 720.0
                    + u2 * (1.0 / 30_240.0 + u2 * (-1.0 / 1_209_600.0 + u2 / 47_900_160.0))))
    } else {
        let one_minus = -(-u).exp_m1();
        (u - one_minus) / (u * one_minus)
    }
}

impl OffspringLaw {
    pub fn finite(weights: Vec<f64>) -> Result<Self> {
        FinitePmf::new(weights).map(OffspringLaw::Finite)
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Poisson needs lambda > 0, got {lambda}"
            )));
        }
        Ok(OffspringLaw::Poisson(PoissonLaw { lambda }))
    }

    pub fn linear_fractional(p0: f64, p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p0) {
            return Err(Error::InvalidParameter(format!(
                "linear-fractional needs p0 in [0, 1), got {p0}"
            )));
        }
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "linear-fractional needs p in [0, 1), got {p}"
            )));
        }
        Ok(OffspringLaw::LinearFractional(LinearFractional { p0, p }))
    }

    /// Point mass at `k`.
    pub fn deterministic(k: usize) -> Result<Self> {
        let mut w = vec![0.0; k + 1];
        w[k] = 1.0;
        Self::finite(w)
    }

    /// `f(s)` for `s` in `[0, 1]`.
    pub fn pgf_eval(&self, s: f64) -> Result<f64> {
        check_unit(s, "pgf")?;
        Ok(self.pgf_unchecked(s))
    }

    pub(crate) fn pgf_unchecked(&self, s: f64) -> f64 {
        match self {
            OffspringLaw::Finite(f) => FinitePmf::horner(&f.inner.weights, s),
            OffspringLaw::Poisson(p) => (p.lambda * (s - 1.0)).exp(),
            OffspringLaw::LinearFractional(lf) => {
                lf.p0 + (1.0 - lf.p0) * (1.0 - lf.p) * s / (1.0 - lf.p * s)
            }
        }
    }

    /// `1 - f(1 - t)`: the probability that one individual's line survives
    /// one more generation when each child's line survives with probability
    /// `t`.
    pub fn survival_step(&self, t: f64) -> f64 {
        match self {
            OffspringLaw::Finite(f) => t * FinitePmf::horner(&f.inner.tails, 1.0 - t),
            OffspringLaw::Poisson(p) => -(-p.lambda * t).exp_m1(),
            OffspringLaw::LinearFractional(lf) => (1.0 - lf.p0) * t / ((1.0 - lf.p) + lf.p * t),
        }
    }

    /// Mean `f'(1)`.
    pub fn mean(&self) -> f64 {
        match self {
            OffspringLaw::Finite(f) => f.inner.mean,
            OffspringLaw::Poisson(p) => p.lambda,
            OffspringLaw::LinearFractional(lf) => (1.0 - lf.p0) / (1.0 - lf.p),
        }
    }

    /// `f''(1) = E[xi (xi - 1)]`.
    pub fn second_factorial_moment(&self) -> f64 {
        match self {
            OffspringLaw::Finite(f) => f.inner.fact2,
            OffspringLaw::Poisson(p) => p.lambda * p.lambda,
            OffspringLaw::LinearFractional(lf) => {
                2.0 * (1.0 - lf.p0) * lf.p / ((1.0 - lf.p) * (1.0 - lf.p))
            }
        }
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_factorial_moment() + m - m * m
    }

    /// Raw fourth moment `E[xi^4]`.
    pub fn fourth_moment(&self) -> f64 {
        match self {
            OffspringLaw::Finite(f) => f
                .weights()
                .iter()
                .enumerate()
                .map(|(z, w)| (z as f64).powi(4) * w)
                .sum(),
            OffspringLaw::Poisson(p) => {
                let l = p.lambda;
                l * (1.0 + l * (7.0 + l * (6.0 + l)))
            }
            OffspringLaw::LinearFractional(lf) => {
                let p = lf.p;
                (1.0 - lf.p0) * (1.0 + p * (11.0 + p * (11.0 + p))) / (1.0 - p).powi(4)
            }
        }
    }

    /// `psi(1) = f''(1) / (2 f'(1)^2)`.
    pub fn shape_at_one(&self) -> f64 {
        let m = self.mean();
        self.second_factorial_moment() / (2.0 * m * m)
    }

    /// Shape function `psi(s)` on `[0, 1]`, continuously extended at 1.
    pub fn shape(&self, s: f64) -> Result<f64> {
        check_unit(s, "shape function")?;
        let v = match self {
            OffspringLaw::Finite(f) => {
                let r = FinitePmf::horner(&f.inner.tails, s);
                if r <= 0.0 {
                    return Err(Error::Degenerate(s));
                }
                FinitePmf::horner(&f.inner.upper, s) / (f.inner.mean * r)
            }
            OffspringLaw::Poisson(p) => {
                if s == 1.0 {
                    0.5
                } else {
                    poisson_shape(p.lambda * (1.0 - s))
                }
            }
            OffspringLaw::LinearFractional(lf) => lf.p / (1.0 - lf.p0),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Degenerate(s))
        }
    }

    /// `psi(1 - t)`, avoiding the rounding of forming `1 - t`.
    pub fn shape_complement(&self, t: f64) -> Result<f64> {
        check_unit(t, "shape function")?;
        match self {
            OffspringLaw::Poisson(p) => {
                if t == 0.0 {
                    Ok(0.5)
                } else {
                    Ok(poisson_shape(p.lambda * t))
                }
            }
            _ => self.shape(1.0 - t),
        }
    }

    /// One offspring count.
    pub fn sample_offspring<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            OffspringLaw::Finite(f) => {
                let u: f64 = rng.random();
                f.inner.cdf.iter().position(|&c| u < c).unwrap_or_else(|| {
                    // u landed in the rounding gap above the last cdf value.
                    f.inner.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
                }) as u64
            }
            OffspringLaw::Poisson(p) => sample_poisson(p.lambda, rng),
            OffspringLaw::LinearFractional(lf) => {
                if rng.random::<f64>() < lf.p0 {
                    0
                } else {
                    1 + sample_geometric_failures(lf.p, rng)
                }
            }
        }
    }

    /// Total offspring of `count` independent individuals.
    pub fn sample_total<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> u64 {
        if count == 0 {
            return 0;
        }
        match self {
            OffspringLaw::Poisson(p) => sample_poisson(p.lambda * count as f64, rng),
            OffspringLaw::LinearFractional(lf) => {
                let parents = if lf.p0 == 0.0 {
                    count
                } else {
                    Binomial::new(count, 1.0 - lf.p0)
                        .expect("valid p0")
                        .sample(rng)
                };
                if parents == 0 || lf.p == 0.0 {
                    return parents;
                }
                // Sum of `parents` geometric tails is negative binomial, drawn
                // as a gamma-mixed Poisson.
                let rate = Gamma::new(parents as f64, lf.p / (1.0 - lf.p))
                    .expect("positive shape")
                    .sample(rng);
                parents + sample_poisson(rate, rng)
            }
            OffspringLaw::Finite(f) => {
                let mut remaining = count;
                let mut mass_left = 1.0;
                let mut total = 0u64;
                let last = f.inner.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
                for (z, &w) in f.inner.weights.iter().enumerate() {
                    if remaining == 0 {
                        break;
                    }
                    if z == last {
                        total += z as u64 * remaining;
                        break;
                    }
                    if w == 0.0 {
                        continue;
                    }
                    let prob = (w / mass_left).clamp(0.0, 1.0);
                    let n = Binomial::new(remaining, prob)
                        .expect("probability")
                        .sample(rng);
                    total += z as u64 * n;
                    remaining -= n;
                    mass_left -= w;
                }
                total
            }
        }
    }
}

/// Exact Poisson draw: sequential inversion for small means, the
/// rejection sampler of `rand_distr` otherwise.
pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda <= POISSON_INVERSION_MAX {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-lambda).exp();
        let mut c = p;
        while u >= c && p > 0.0 {
            k += 1;
            p *= lambda / k as f64;
            c += p;
        }
        k
    } else {
        PoissonDist::new(lambda).expect("positive mean").sample(rng) as u64
    }
}

/// Failures before the first success when each trial fails with
/// probability `p`.
fn sample_geometric_failures<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p == 0.0 {
        return 0;
    }
    let u: f64 = 1.0 - rng.random::<f64>();
    (u.ln() / p.ln()).floor() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::rng_stream;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn lf(p0: f64, p: f64) -> OffspringLaw {
        OffspringLaw::linear_fractional(p0, p).unwrap()
    }

    fn pmf(w: &[f64]) -> OffspringLaw {
        OffspringLaw::finite(w.to_vec()).unwrap()
    }

    #[test]
    fn pgf_examples() {
        let p1 = OffspringLaw::poisson(1.0).unwrap();
        assert_eq!(p1.pgf_eval(1.0).unwrap(), 1.0);
        assert!(close(p1.pgf_eval(0.0).unwrap(), 0.367_879_4, 1e-7));
        assert_eq!(lf(0.3, 0.2).pgf_eval(0.0).unwrap(), 0.3);
        assert!(p1.pgf_eval(1.5).is_err());
        assert!(p1.pgf_eval(-0.1).is_err());
    }

    #[test]
    fn moment_examples() {
        assert_eq!(OffspringLaw::poisson(1.1).unwrap().mean(), 1.1);
        assert!(close(lf(0.3, 0.2).mean(), 0.875, 1e-15));
        assert_eq!(pmf(&[0.25, 0.5, 0.25]).mean(), 1.0);

        assert_eq!(
            OffspringLaw::poisson(2.0)
                .unwrap()
                .second_factorial_moment(),
            4.0
        );
        assert!(close(lf(0.3, 0.2).second_factorial_moment(), 0.4375, 1e-15));
        assert_eq!(pmf(&[0.25, 0.5, 0.25]).second_factorial_moment(), 0.5);

        assert!(close(
            OffspringLaw::poisson(1.0).unwrap().variance(),
            1.0,
            1e-15
        ));
        assert!(close(pmf(&[0.25, 0.5, 0.25]).variance(), 0.5, 1e-15));
        assert_eq!(pmf(&[0.0, 1.0]).variance(), 0.0);
    }

    #[test]
    fn shape_examples() {
        let one = pmf(&[0.0, 1.0]);
        assert_eq!(one.shape(0.5).unwrap(), 0.0);
        let l = lf(0.3, 0.2);
        for &s in &[0.0, 0.5, 0.99, 1.0] {
            assert!(close(l.shape(s).unwrap(), 0.285_714_3, 1e-7));
        }
        // direct evaluation of the defining difference, away from s = 1
        for &s in &[0.0, 0.5, 0.99] {
            let f = l.pgf_eval(s).unwrap();
            let direct = 1.0 / (1.0 - f) - 1.0 / (l.mean() * (1.0 - s));
            assert!(close(direct, 0.2 / 0.7, 1e-9));
        }
        assert_eq!(OffspringLaw::poisson(1.0).unwrap().shape(1.0).unwrap(), 0.5);
    }

    #[test]
    fn shape_at_one_examples() {
        assert_eq!(OffspringLaw::poisson(2.0).unwrap().shape_at_one(), 0.5);
        assert_eq!(pmf(&[0.25, 0.5, 0.25]).shape_at_one(), 0.25);
        assert_eq!(pmf(&[0.0, 1.0]).shape_at_one(), 0.0);
    }

    #[test]
    fn finite_shape_is_continuous_at_one() {
        let law = pmf(&[0.2, 0.3, 0.1, 0.4]);
        let near = law.shape(1.0 - 1e-9).unwrap();
        assert!(close(near, law.shape_at_one(), 1e-8));
        assert!(close(law.shape(1.0).unwrap(), law.shape_at_one(), 1e-15));
    }

    #[test]
    fn poisson_shape_branches_agree() {
        // series and closed form meet at u = 0.1
        let below = poisson_shape(POISSON_SERIES_MAX_U);
        let above = poisson_shape(POISSON_SERIES_MAX_U * (1.0 + 1e-12));
        assert!(close(below, above, 1e-13));
        let law = OffspringLaw::poisson(1.3).unwrap();
        for &t in &[1e-12, 1e-6, 0.01, 0.5] {
            let a = law.shape_complement(t).unwrap();
            let b = law.shape(1.0 - t).unwrap();
            assert!(close(a, b, 1e-9), "t = {t}");
        }
    }

    #[test]
    fn validation() {
        assert!(OffspringLaw::finite(vec![]).is_err());
        assert!(OffspringLaw::finite(vec![0.5, 0.6]).is_err());
        assert!(
            OffspringLaw::finite(vec![1.0]).is_err(),
            "mean 0 is rejected"
        );
        assert!(OffspringLaw::finite(vec![-0.1, 1.1]).is_err());
        let mut big = vec![0.0; MAX_FINITE_SUPPORT + 2];
        big[1] = 1.0;
        assert!(OffspringLaw::finite(big).is_err());
        let mut ok = vec![0.0; MAX_FINITE_SUPPORT + 1];
        ok[MAX_FINITE_SUPPORT] = 1.0;
        assert!(OffspringLaw::finite(ok).is_ok());
        assert!(OffspringLaw::poisson(0.0).is_err());
        assert!(OffspringLaw::linear_fractional(1.0, 0.2).is_err());
        assert!(OffspringLaw::linear_fractional(0.2, 1.0).is_err());
    }

    #[test]
    fn sampling_examples() {
        let mut rng = rng_stream(1, 0);
        let one = pmf(&[0.0, 1.0]);
        assert!((0..1000).all(|_| one.sample_offspring(&mut rng) == 1));
        let dying = lf(1.0 - 1e-12, 0.5);
        assert!((0..10_000).all(|_| dying.sample_offspring(&mut rng) == 0));

        let law = OffspringLaw::poisson(1.05).unwrap();
        let n = 1_000_000;
        let sum: u64 = (0..n).map(|_| law.sample_offspring(&mut rng)).sum();
        let mean = sum as f64 / n as f64;
        assert!(
            (mean - 1.05).abs() < 4.0 * (1.05f64 / n as f64).sqrt(),
            "{mean}"
        );
    }

    fn check_moments_by_sampling(law: &OffspringLaw, seed: u64) {
        let mut rng = rng_stream(seed, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| law.sample_offspring(&mut rng) as f64)
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (var / n as f64).sqrt();
        assert!(
            (mean - law.mean()).abs() < 5.0 * se_mean,
            "{law:?}: mean {mean}"
        );
        // se of the sample variance: sqrt((mu4 - sigma^4) / n)
        let mu4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        let se_var = ((mu4 - var * var) / n as f64).sqrt();
        assert!(
            (var - law.variance()).abs() < 5.0 * se_var,
            "{law:?}: var {var}"
        );
    }

    #[test]
    fn moments_by_sampling() {
        check_moments_by_sampling(&OffspringLaw::poisson(1.05).unwrap(), 3);
        check_moments_by_sampling(&OffspringLaw::poisson(14.0).unwrap(), 4);
        check_moments_by_sampling(&lf(0.3, 0.2), 5);
        check_moments_by_sampling(&pmf(&[0.1, 0.3, 0.2, 0.4]), 6);
    }

    #[test]
    fn totals_match_individual_sums() {
        // Both routes estimate E[sum of 40 offspring]; compare means.
        let laws = [
            OffspringLaw::poisson(1.1).unwrap(),
            lf(0.4, 0.3),
            pmf(&[0.3, 0.2, 0.5]),
        ];
        for (i, law) in laws.iter().enumerate() {
            let mut rng = rng_stream(100 + i as u64, 0);
            let n = 200_000;
            let totals: Vec<f64> = (0..n)
                .map(|_| law.sample_total(40, &mut rng) as f64)
                .collect();
            let mean = totals.iter().sum::<f64>() / n as f64;
            let se = (40.0 * law.variance() / n as f64).sqrt();
            assert!(
                (mean - 40.0 * law.mean()).abs() < 5.0 * se,
                "{law:?}: {mean}"
            );
            let var = totals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!(
                (var / (40.0 * law.variance()) - 1.0).abs() < 0.03,
                "{law:?}: {var}"
            );
        }
    }

    #[test]
    fn fourth_moment_matches_direct_sum() {
        // pmf summation as the oracle
        let l = 1.05f64;
        let mut p = (-l).exp();
        let mut direct = 0.0;
        for k in 1..200 {
            p *= l / k as f64;
            direct += (k as f64).powi(4) * p;
        }
        let got = OffspringLaw::poisson(l).unwrap().fourth_moment();
        assert!(close(got, direct, 1e-12 * direct));

        let (p0, q) = (0.3, 0.2);
        let mut direct = 0.0;
        for k in 1..400 {
            direct += (k as f64).powi(4) * (1.0 - p0) * (1.0 - q) * q.powi(k - 1);
        }
        assert!(close(lf(p0, q).fourth_moment(), direct, 1e-12 * direct));
    }

    fn arb_law() -> impl Strategy<Value = OffspringLaw> {
        prop_oneof![
            (0.05f64..8.0).prop_map(|l| OffspringLaw::poisson(l).unwrap()),
            (0.0f64..0.95, 0.0f64..0.95).prop_map(|(a, b)| lf(a, b)),
            proptest::collection::vec(0.0f64..1.0, 2..12).prop_filter_map("mean > 0", |w| {
                let total: f64 = w.iter().sum();
                if total <= 0.0 {
                    return None;
                }
                OffspringLaw::finite(w.iter().map(|x| x / total).collect()).ok()
            }),
        ]
    }

    proptest! {
        #[test]
        fn pgf_monotone_convex(law in arb_law()) {
            let n = 1000;
            let f0 = law.pgf_eval(0.0).unwrap();
            let vals: Vec<f64> = (0..n).map(|i| law.pgf_eval(i as f64 / n as f64).unwrap()).collect();
            for w in vals.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-15);
            }
            for w in vals.windows(3) {
                prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-12);
            }
            for v in &vals[1..] {
                prop_assert!(*v >= f0 - 1e-15 && *v < 1.0);
            }
        }

        #[test]
        fn shape_bounds(law in arb_law()) {
            let lo = 0.5 * law.shape(0.0).unwrap();
            let hi = 2.0 * law.shape_at_one();
            for i in 0..=200 {
                let s = i as f64 / 200.0;
                let v = law.shape(s).unwrap();
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "s = {}: {} not in [{}, {}]", s, v, lo, hi);
            }
        }

        #[test]
        fn shape_identity(law in arb_law()) {
            let m = law.mean();
            for i in 0..=999 {
                let s = i as f64 / 1000.0;
                let f = law.pgf_eval(s).unwrap();
                let psi = law.shape(s).unwrap();
                let lhs = psi * (1.0 - f) * m * (1.0 - s) + (1.0 - f) - m * (1.0 - s);
                prop_assert!(lhs.abs() < 1e-10, "s = {}: {}", s, lhs);
            }
        }

        #[test]
        fn survival_step_is_complement(law in arb_law(), t in 0.0f64..=1.0) {
            let direct = 1.0 - law.pgf_eval(1.0 - t).unwrap();
            prop_assert!((law.survival_step(t) - direct).abs() < 1e-13);
        }

        #[test]
        fn lf_shape_constant(p0 in 0.0f64..0.95, p in 0.0f64..0.95) {
            let law = lf(p0, p);
            for i in 0..=100 {
                let s = i as f64 / 100.0;
                prop_assert!((law.shape(s).unwrap() - law.shape_at_one()).abs() < 1e-9);
            }
        }
    }
}
