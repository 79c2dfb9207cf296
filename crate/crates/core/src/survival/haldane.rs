//! Asymptotic survival predictions and sweeps against them.

use serde::Serialize;

use crate::envmodel::{make_environment, regime_classify, Family, Noise, Regime, RegimeParams};
use crate::error::{Error, Result};

use super::estimate::{estimate_survival_gf, GfOptions};

/// `2 eps / sigma^2`, `(2 - rho) eps / sigma^2` or 0 depending on the regime.
pub fn haldane_prediction(params: &RegimeParams) -> Result<f64> {
    match regime_classify(params) {
        Regime::CaseI => Ok(2.0 * params.epsilon / params.sigma_sq),
        Regime::CaseII => Ok((2.0 - params.rho) * params.epsilon / params.sigma_sq),
        Regime::CaseIII => Ok(0.0),
        Regime::Boundary => Err(Error::Boundary),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub nu: f64,
    pub rho: f64,
    pub sigma_sq: f64,
    pub regime: Regime,
    pub pi_hat: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub prediction: f64,
    /// `pi_hat / prediction`, or `pi_hat` itself when the prediction is 0.
    pub ratio: f64,
    pub n_reps: u64,
    pub n_flagged: u64,
    pub seed: u64,
}

/// Runs the pgf estimator at `nu = rho * eps` for each `eps`.
pub fn haldane_sweep(
    family: &Family,
    noise: Noise,
    rho: f64,
    eps_list: &[f64],
    opts: &GfOptions,
) -> Result<Vec<SweepRow>> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rho must be >= 0, got {rho}"
        )));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "eps_list must be strictly decreasing".into(),
        ));
    }
    eps_list
        .iter()
        .map(|&epsilon| {
            let nu = rho * epsilon;
            let model = make_environment(family.clone(), epsilon, nu, noise)?;
            let params = model.regime_params()?;
            let prediction = haldane_prediction(&params)?;
            let est = estimate_survival_gf(&model, opts)?;
            let ratio = if prediction > 0.0 {
                est.estimate / prediction
            } else {
                est.estimate
            };
            Ok(SweepRow {
                epsilon,
                nu,
                rho: params.rho,
                sigma_sq: params.sigma_sq,
                regime: regime_classify(&params),
                pi_hat: est.estimate,
                std_error: est.std_error,
                ci_lo: est.ci_lo,
                ci_hi: est.ci_hi,
                prediction,
                ratio,
                n_reps: est.n_reps,
                n_flagged: est.n_flagged,
                seed: est.seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps: f64, rho: f64) -> RegimeParams {
        RegimeParams::new(eps, rho * eps, 1.0).unwrap()
    }

    #[test]
    fn prediction_examples() {
        assert!((haldane_prediction(&params(0.05, 0.0)).unwrap() - 0.10).abs() < 1e-15);
        assert!((haldane_prediction(&params(0.05, 1.0)).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(haldane_prediction(&params(0.05, 2.5)).unwrap(), 0.0);
        assert_eq!(haldane_prediction(&params(0.05, 2.0)), Err(Error::Boundary));
    }

    #[test]
    fn poisson_case_i_ratios_approach_one() {
        let opts = GfOptions {
            n_reps: 4,
            ..Default::default()
        };
        let rows = haldane_sweep(
            &Family::Poisson,
            Noise::TwoPoint,
            0.0,
            &[0.1, 0.05, 0.02],
            &opts,
        )
        .unwrap();
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        assert!(ratios.windows(2).all(|w| w[0] < w[1]), "{ratios:?}");
        assert!(ratios.iter().all(|&r| r < 1.0));
        assert!(ratios[2] > 0.95);
    }

    #[test]
    fn case_iii_rows_stay_near_zero() {
        let opts = GfOptions {
            n_reps: 2000,
            seed: 3,
            ..Default::default()
        };
        let rows = haldane_sweep(&Family::Poisson, Noise::TwoPoint, 3.0, &[0.02], &opts).unwrap();
        assert_eq!(rows[0].prediction, 0.0);
        assert_eq!(rows[0].regime, Regime::CaseIII);
        assert!(rows[0].pi_hat < 1e-3, "{:?}", rows[0]);
    }

    #[test]
    fn sweep_validation() {
        let opts = GfOptions {
            n_reps: 2,
            ..Default::default()
        };
        assert!(
            haldane_sweep(&Family::Poisson, Noise::TwoPoint, 0.0, &[0.01, 0.02], &opts).is_err()
        );
        assert_eq!(
            haldane_sweep(&Family::Poisson, Noise::TwoPoint, 2.0, &[0.01], &opts),
            Err(Error::Boundary)
        );
    }
}
