use std::fmt;

use serde::Serialize;

use bpre::envmodel::{make_environment, EnvironmentModel};
use bpre::numerics::rng_stream;
use bpre::perpetuity::{from_environment, LimitLaw, Perpetuity, PerpetuitySpec};
use bpre::survival::{
    estimate_survival_gf, haldane_prediction, simulate_population, GfOptions, PopulationOptions,
};
use bpre::verify::{self, Check, Level};
use bpre::Error;

use crate::config::{ExperimentConfig, Spread};
use crate::output::emit;

/// A failed command; the variant decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Invariant(String),
    Config(String),
    Overrun(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Invariant(_) => 1,
            Failure::Config(_) => 2,
            Failure::Overrun(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invariant(m) => write!(f, "invariant failure: {m}"),
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Overrun(m) => write!(f, "resource overrun: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Boundary => Failure::Config(format!("rho: {e}")),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("out: {e}"))
    }
}

pub type Outcome = Result<(), Failure>;

#[derive(Debug, Serialize)]
struct SurvivalRow {
    family: &'static str,
    noise: &'static str,
    epsilon: f64,
    nu: f64,
    rho: f64,
    sigma_sq: f64,
    estimator: &'static str,
    pi_hat: f64,
    stderr: f64,
    ci_lo: f64,
    ci_hi: f64,
    prediction: f64,
    /// Empty when the prediction is 0.
    ratio: Option<f64>,
    n_reps: u64,
    n_flagged: u64,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct PerpetuityRow {
    beta: f64,
    gamma: f64,
    rho_hat: f64,
    alpha: f64,
    limit_kind: &'static str,
    limit_a: f64,
    limit_b: Option<f64>,
    ks_distance: Option<f64>,
    annuity_ks: f64,
    n_samples: usize,
    seed: u64,
    concentration: Option<f64>,
}

fn models(cfg: &ExperimentConfig) -> Result<Vec<EnvironmentModel>, Failure> {
    if cfg.eps_list.is_empty() {
        return Err(Failure::Config("epsilon: required".into()));
    }
    let spread = cfg
        .spread
        .ok_or_else(|| Failure::Config("rho: give rho or nu".into()))?;
    cfg.eps_list
        .iter()
        .map(|&eps| {
            make_environment(cfg.family.clone(), eps, spread.nu_at(eps), cfg.noise)
                .map_err(Failure::from)
        })
        .collect()
}

pub fn survival(cfg: &ExperimentConfig, json: bool) -> Outcome {
    if cfg.n_reps < 1 {
        return Err(Failure::Config("n_reps: must be >= 1".into()));
    }
    // Validate every row before any estimator runs.
    let mut plan = Vec::new();
    for model in models(cfg)? {
        let params = model.regime_params()?;
        let prediction = haldane_prediction(&params)?;
        plan.push((model, params, prediction));
    }

    let mut rows = Vec::new();
    for (model, params, prediction) in &plan {
        for &estimator in cfg.estimator.runs() {
            let est = if estimator == "gf" {
                let opts = GfOptions {
                    tol_q: cfg.tol_q,
                    tol_mu: cfg.tol_mu,
                    n_max: cfg.n_max,
                    n_reps: cfg.n_reps,
                    seed: cfg.seed,
                };
                estimate_survival_gf(model, &opts)?
            } else {
                let opts = PopulationOptions {
                    cap_multiplier: cfg.cap_multiplier,
                    n_reps: cfg.n_reps,
                    seed: cfg.seed,
                };
                simulate_population(model, &opts)?
            };
            rows.push(SurvivalRow {
                family: model.family().name(),
                noise: model.noise().name(),
                epsilon: params.epsilon,
                nu: params.nu,
                rho: params.rho,
                sigma_sq: params.sigma_sq,
                estimator,
                pi_hat: est.estimate,
                stderr: est.std_error,
                ci_lo: est.ci_lo,
                ci_hi: est.ci_hi,
                prediction: *prediction,
                ratio: (*prediction > 0.0).then(|| est.estimate / prediction),
                n_reps: est.n_reps,
                n_flagged: est.n_flagged,
                seed: est.seed,
            });
        }
    }
    emit(&rows, "survival", json, cfg.out.as_deref())?;
    let flagged: u64 = rows.iter().map(|r| r.n_flagged).sum();
    if flagged > 0 {
        return Err(Failure::Overrun(format!(
            "{flagged} replicates hit n_max or the population guard"
        )));
    }
    Ok(())
}

pub fn sweep(cfg: &ExperimentConfig, json: bool) -> Outcome {
    if cfg.eps_list.len() < 2 {
        return Err(Failure::Config(
            "eps_list: a sweep needs at least two values".into(),
        ));
    }
    if cfg.eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Failure::Config(
            "eps_list: must be strictly decreasing".into(),
        ));
    }
    if !matches!(cfg.spread, Some(Spread::Rho(_))) {
        return Err(Failure::Config("rho: a sweep holds rho fixed".into()));
    }
    survival(cfg, json)
}

pub fn perpetuity(cfg: &ExperimentConfig, json: bool) -> Outcome {
    if cfg.n_samples < 2 {
        return Err(Failure::Config("n_samples: must be >= 2".into()));
    }
    let specs = match cfg.independent {
        Some((a, b)) => vec![PerpetuitySpec::independent(a, b)?],
        None => models(cfg)?.iter().map(from_environment).collect(),
    };
    let perps = specs
        .into_iter()
        .map(|s| {
            let p = Perpetuity::new(s)?;
            p.limit_law()?;
            Ok(p)
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    let mut rows = Vec::new();
    let mut unconverged = 0;
    for (i, p) in perps.iter().enumerate() {
        let row = 2 * i as u64;
        let fit = p.limit_fit_test(cfg.n_samples, &mut rng_stream(cfg.seed, row))?;
        let annuity_ks =
            p.annuity_residual(cfg.n_samples.max(1000), &mut rng_stream(cfg.seed, row + 1))?;
        unconverged += fit.n_unconverged;
        let regime = p.regime();
        let law = p.limit_law()?;
        let (limit_a, limit_b) = match law {
            LimitLaw::Dirac { alpha } => (alpha, None),
            LimitLaw::InverseGamma(ig) => (ig.a(), Some(ig.b())),
        };
        rows.push(PerpetuityRow {
            beta: regime.beta,
            gamma: regime.gamma,
            rho_hat: regime.rho_hat,
            alpha: regime.alpha,
            limit_kind: law.kind(),
            limit_a,
            limit_b,
            ks_distance: fit.ks_distance,
            annuity_ks,
            n_samples: fit.n_samples,
            seed: cfg.seed,
            concentration: fit.concentration,
        });
    }
    emit(&rows, "perpetuity", json, cfg.out.as_deref())?;
    if unconverged > 0 {
        return Err(Failure::Overrun(format!(
            "{unconverged} series draws reached the term limit"
        )));
    }
    Ok(())
}

fn print_table(checks: &[Check]) {
    let name_w = checks
        .iter()
        .map(|c| c.name.chars().count())
        .max()
        .unwrap_or(0);
    let anchor_w = checks
        .iter()
        .map(|c| c.anchor.chars().count())
        .max()
        .unwrap_or(0);
    for c in checks {
        println!(
            "{:<4}  {:<name_w$}  {:<anchor_w$}  {:>8.2}s  {}",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.anchor,
            c.seconds,
            c.detail,
        );
    }
}

pub fn verify(
    level: Level,
    mutate_shape: bool,
    json: bool,
    out: Option<&std::path::Path>,
) -> Outcome {
    let checks = if mutate_shape {
        verify::run_suite_with(level, verify::corrupted_shape)
    } else {
        verify::run_suite(level)
    };
    if json || out.is_some() {
        emit(&checks, "verify", json, out)?;
    }
    if !json || out.is_some() {
        print_table(&checks);
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(failed.join(", ")))
    }
}
