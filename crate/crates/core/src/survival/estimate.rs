//! Monte Carlo survival estimate over environment paths.

use rayon::prelude::*;

use crate::envmodel::{EnvironmentModel, Family};
use crate::error::{Error, Result};
use crate::numerics::rng::{rng_stream, RandomStream};
use crate::numerics::stats::{summarize, EstimateResult};
use crate::pgf::OffspringLaw;

use super::path::{survival_to, LfProduct};

/// First horizon tried by the doubling search for non-Möbius families.
const INITIAL_HORIZON: usize = 64;

/// Stopping controls for [`estimate_survival_gf`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfOptions {
    /// Bound on the last increment `q_0(n) - q_0(n-1)`.
    pub tol_q: f64,
    /// Bound on `1 / mu_n`.
    pub tol_mu: f64,
    pub n_max: usize,
    pub n_reps: u64,
    pub seed: u64,
}

impl Default for GfOptions {
    fn default() -> Self {
        Self {
            tol_q: 1e-8,
            tol_mu: 1e-6,
            n_max: 100_000,
            n_reps: 10_000,
            seed: 0,
        }
    }
}

/// Survival probability of one environment path at its stopping horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSurvival {
    pub survival: f64,
    pub horizon: usize,
    /// The horizon reached `n_max` before either stopping rule held.
    pub exhausted: bool,
}

/// Per path the horizon `n` stops when the last increment of `q_0` is below
/// `tol_q` and `1/mu_n < tol_mu`. A path also stops once
/// `min_{k <= n} mu_k < tol_q`, since `P(Z_n > 0 | env) <= mu_k` for all
/// `k <= n` and survival from then on is certified below `tol_q`.
///
/// Linear-fractional families advance a Möbius product one generation at a
/// time and test every `n`. Other families test a doubling sequence of
/// horizons with two backward recursions each.
pub fn path_survival(
    model: &EnvironmentModel,
    opts: &GfOptions,
    rng: &mut RandomStream,
) -> PathSurvival {
    match model.family() {
        Family::LinearFractional { .. } => lf_path(model, opts, rng),
        _ => generic_path(model, opts, rng),
    }
}

fn lf_path(model: &EnvironmentModel, opts: &GfOptions, rng: &mut RandomStream) -> PathSurvival {
    let log_tol_q = opts.tol_q.ln();
    let log_tol_mu = opts.tol_mu.ln();
    let mut prod = LfProduct::default();
    let mut prev = 1.0;
    let mut log_mu = 0.0;
    let mut min_log_mu = 0.0f64;
    for n in 1..=opts.n_max {
        let law = model.sample_law(rng);
        let OffspringLaw::LinearFractional(lf) = &law else {
            unreachable!("linear-fractional family")
        };
        prod.push(lf.p0(), lf.p());
        log_mu += law.mean().ln();
        min_log_mu = min_log_mu.min(log_mu);
        let t = prod.survival();
        let certified = min_log_mu < log_tol_q;
        let converged = prev - t < opts.tol_q && -log_mu < log_tol_mu;
        if certified || converged {
            return PathSurvival {
                survival: t,
                horizon: n,
                exhausted: false,
            };
        }
        prev = t;
    }
    PathSurvival {
        survival: prev,
        horizon: opts.n_max,
        exhausted: true,
    }
}

fn generic_path(
    model: &EnvironmentModel,
    opts: &GfOptions,
    rng: &mut RandomStream,
) -> PathSurvival {
    let log_tol_q = opts.tol_q.ln();
    let log_tol_mu = opts.tol_mu.ln();
    let mut laws: Vec<OffspringLaw> = Vec::new();
    let mut log_mu = 0.0;
    let mut min_log_mu = 0.0f64;
    let mut n = INITIAL_HORIZON.min(opts.n_max).max(1);
    loop {
        while laws.len() < n {
            let law = model.sample_law(rng);
            log_mu += law.mean().ln();
            min_log_mu = min_log_mu.min(log_mu);
            laws.push(law);
        }
        let t = survival_to(&laws);
        let prev = survival_to(&laws[..n - 1]);
        let certified = min_log_mu < log_tol_q;
        let converged = prev - t < opts.tol_q && -log_mu < log_tol_mu;
        if certified || converged {
            return PathSurvival {
                survival: t,
                horizon: n,
                exhausted: false,
            };
        }
        if n >= opts.n_max {
            return PathSurvival {
                survival: t,
                horizon: n,
                exhausted: true,
            };
        }
        n = (2 * n).min(opts.n_max);
    }
}

/// Mean of `1 - q_0(n*)` over `n_reps` independent environment paths.
/// Replicate `i` draws from stream `(seed, i)`.
pub fn estimate_survival_gf(model: &EnvironmentModel, opts: &GfOptions) -> Result<EstimateResult> {
    if opts.n_reps == 0 {
        return Err(Error::InvalidParameter("n_reps must be >= 1".into()));
    }
    if !(opts.tol_q > 0.0 && opts.tol_mu > 0.0) || opts.n_max == 0 {
        return Err(Error::InvalidParameter(
            "tol_q, tol_mu and n_max must be positive".into(),
        ));
    }
    let outcomes: Vec<PathSurvival> = (0..opts.n_reps)
        .into_par_iter()
        .map(|i| path_survival(model, opts, &mut rng_stream(opts.seed, i)))
        .collect();
    let samples: Vec<f64> = outcomes.iter().map(|o| o.survival).collect();
    let flagged = outcomes.iter().filter(|o| o.exhausted).count() as u64;
    let mut result = summarize_replicates(&samples, opts.seed)?;
    result.n_flagged = flagged;
    Ok(result)
}

/// [`summarize`], extended to a single replicate with an unbounded interval.
pub(crate) fn summarize_replicates(samples: &[f64], seed: u64) -> Result<EstimateResult> {
    if samples.len() == 1 {
        return Ok(EstimateResult {
            estimate: samples[0],
            std_error: f64::INFINITY,
            ci_lo: f64::NEG_INFINITY,
            ci_hi: f64::INFINITY,
            n_reps: 1,
            seed,
            n_flagged: 0,
        });
    }
    summarize(samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envmodel::{make_environment, Noise};
    use crate::survival::path::{backward_survival, sample_env_path};

    /// Root in (0, 1) of `x = 1 - exp(-m x)` by bisection.
    fn poisson_fixed_point(m: f64) -> f64 {
        let (mut lo, mut hi) = (1e-12, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - (1.0 - (-m * mid).exp()) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn deterministic_poisson_matches_fixed_point() {
        let model = make_environment(Family::Poisson, 0.1, 0.0, Noise::TwoPoint).unwrap();
        let opts = GfOptions {
            n_reps: 20,
            ..Default::default()
        };
        let r = estimate_survival_gf(&model, &opts).unwrap();
        let oracle = poisson_fixed_point(1.1);
        assert!((oracle - 0.176).abs() < 1e-3);
        assert!(
            (r.estimate - oracle).abs() < 1e-7,
            "{} vs {oracle}",
            r.estimate
        );
        assert_eq!(r.n_flagged, 0);
    }

    #[test]
    fn one_child_law_never_dies_and_is_flagged() {
        let model = make_environment(
            Family::Finite {
                template: vec![0.0, 1.0],
            },
            0.0,
            0.0,
            Noise::TwoPoint,
        )
        .unwrap();
        let opts = GfOptions {
            n_reps: 3,
            n_max: 500,
            ..Default::default()
        };
        let r = estimate_survival_gf(&model, &opts).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.n_flagged, 3);
    }

    #[test]
    fn bit_identical_reruns() {
        let model = make_environment(Family::Poisson, 0.05, 0.05, Noise::Uniform).unwrap();
        let opts = GfOptions {
            n_reps: 50,
            seed: 77,
            ..Default::default()
        };
        let a = estimate_survival_gf(&model, &opts).unwrap();
        let b = estimate_survival_gf(&model, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lf_fast_path_agrees_with_backward_recursion() {
        let model = make_environment(
            Family::LinearFractional { p0: 0.5 },
            0.05,
            0.05,
            Noise::TwoPoint,
        )
        .unwrap();
        let opts = GfOptions::default();
        for i in 0..30 {
            let out = path_survival(&model, &opts, &mut rng_stream(5, i));
            let path = sample_env_path(&model, out.horizon, &mut rng_stream(5, i)).unwrap();
            let t = backward_survival(&path)[0];
            assert!((out.survival - t).abs() < 1e-12, "{} vs {t}", out.survival);
        }
    }

    #[test]
    fn single_replicate_has_unbounded_interval() {
        let model = make_environment(Family::Poisson, 0.1, 0.0, Noise::TwoPoint).unwrap();
        let r = estimate_survival_gf(
            &model,
            &GfOptions {
                n_reps: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.ci_lo <= r.estimate && r.estimate <= r.ci_hi);
        assert!(estimate_survival_gf(
            &model,
            &GfOptions {
                n_reps: 0,
                ..Default::default()
            }
        )
        .is_err());
    }
}
