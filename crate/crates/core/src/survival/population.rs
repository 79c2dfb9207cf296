//! Direct simulation of the population process as an independent check.

use rand::Rng;
use rayon::prelude::*;

use crate::envmodel::{regime_classify, EnvironmentModel, Regime};
use crate::error::{Error, Result};
use crate::numerics::rng::rng_stream;
use crate::numerics::stats::EstimateResult;
use crate::pgf::OffspringLaw;

use super::estimate::summarize_replicates;

/// Default for `c` in the survival cap `K = ceil(c / epsilon)`.
pub const DEFAULT_CAP_MULTIPLIER: f64 = 50.0;
/// Per-replicate budget of individuals processed.
pub const INDIVIDUAL_GUARD: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Extinct,
    ReachedCap,
    /// The individual budget ran out first.
    GuardExceeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PopulationRun {
    pub generations: u64,
    pub terminal: Terminal,
    pub cap: u64,
}

impl PopulationRun {
    /// Counted as a survivor by the estimator.
    pub fn survived(&self) -> bool {
        self.terminal != Terminal::Extinct
    }
}

/// Run `Z_0 = 1`, `Z_n = sum of Z_{n-1}` draws from the generation's law,
/// until extinction, `Z_n >= cap`, or `guard` individuals have reproduced.
pub fn run_population<R, L>(mut next_law: L, cap: u64, guard: u64, rng: &mut R) -> PopulationRun
where
    R: Rng + ?Sized,
    L: FnMut(&mut R) -> OffspringLaw,
{
    let mut z = 1u64;
    let mut processed = 0u64;
    let mut generations = 0u64;
    loop {
        if z >= cap {
            return PopulationRun {
                generations,
                terminal: Terminal::ReachedCap,
                cap,
            };
        }
        if processed + z > guard {
            return PopulationRun {
                generations,
                terminal: Terminal::GuardExceeded,
                cap,
            };
        }
        processed += z;
        let law = next_law(rng);
        z = law.sample_total(z, rng);
        generations += 1;
        if z == 0 {
            return PopulationRun {
                generations,
                terminal: Terminal::Extinct,
                cap,
            };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationOptions {
    pub cap_multiplier: f64,
    pub n_reps: u64,
    pub seed: u64,
}

impl Default for PopulationOptions {
    fn default() -> Self {
        Self {
            cap_multiplier: DEFAULT_CAP_MULTIPLIER,
            n_reps: 10_000,
            seed: 0,
        }
    }
}

/// Fraction of replicates reaching `K = ceil(c / epsilon)` individuals.
/// Guard overruns count as survivors and are flagged.
pub fn simulate_population(
    model: &EnvironmentModel,
    opts: &PopulationOptions,
) -> Result<EstimateResult> {
    let regime = regime_classify(&model.regime_params()?);
    if !matches!(regime, Regime::CaseI | Regime::CaseII) {
        return Err(Error::InvalidParameter(format!(
            "population simulation needs a supercritical regime, got {}",
            regime.label()
        )));
    }
    if opts.n_reps == 0 {
        return Err(Error::InvalidParameter("n_reps must be >= 1".into()));
    }
    if !(opts.cap_multiplier > 0.0) {
        return Err(Error::InvalidParameter(
            "cap multiplier must be positive".into(),
        ));
    }
    let cap = (opts.cap_multiplier / model.epsilon()).ceil() as u64;
    let runs: Vec<PopulationRun> = (0..opts.n_reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(opts.seed, i);
            run_population(|r| model.sample_law(r), cap, INDIVIDUAL_GUARD, &mut rng)
        })
        .collect();
    let samples: Vec<f64> = runs
        .iter()
        .map(|r| f64::from(u8::from(r.survived())))
        .collect();
    let mut result = summarize_replicates(&samples, opts.seed)?;
    result.n_flagged = runs
        .iter()
        .filter(|r| r.terminal == Terminal::GuardExceeded)
        .count() as u64;
    Ok(result)
}
