//! Perpetuities `Y = sum_k C_k A_{k+1}` with `C_k = B_1 ... B_k`, the
//! annuity equation `Y = A + B Y` in law, and their small-drift limit laws.

use rand::Rng;
use serde::Serialize;

use crate::envmodel::EnvironmentModel;
use crate::error::{Error, Result};
use crate::numerics::invgamma::InverseGammaParams;
use crate::numerics::ks::{ks_one_sample, ks_two_sample};

/// Default relative truncation tolerance of the series sampler.
pub const SERIES_TOL: f64 = 1e-12;
/// Default cap on the number of series terms.
pub const SERIES_K_MAX: u64 = 10_000_000;
/// Tolerance used by [`Perpetuity::annuity_residual`]; tight enough that
/// deterministic series sum to their rounded limit.
const ANNUITY_TOL: f64 = 1e-17;
/// Forgetting target for the chain burn-in.
const BURN_IN_TARGET: f64 = 1e-8;
/// Relative window around `alpha` used for the Dirac limit.
pub const CONCENTRATION_WINDOW: f64 = 0.1;

/// Bounded nonnegative scalar distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarLaw {
    Constant(f64),
    /// Either value with probability one half.
    TwoPoint(f64, f64),
}

impl ScalarLaw {
    fn validate(self, what: &str) -> Result<Self> {
        let ok = match self {
            ScalarLaw::Constant(x) => x.is_finite() && x >= 0.0,
            ScalarLaw::TwoPoint(x, y) => x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidParameter(format!(
                "{what} must be finite and nonnegative"
            )))
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            ScalarLaw::Constant(x) => x,
            ScalarLaw::TwoPoint(x, y) => {
                if rng.random::<bool>() {
                    y
                } else {
                    x
                }
            }
        }
    }

    pub fn mean(self) -> f64 {
        match self {
            ScalarLaw::Constant(x) => x,
            ScalarLaw::TwoPoint(x, y) => 0.5 * (x + y),
        }
    }

    pub fn variance(self) -> f64 {
        match self {
            ScalarLaw::Constant(_) => 0.0,
            ScalarLaw::TwoPoint(x, y) => 0.25 * (x - y) * (x - y),
        }
    }

    pub fn max(self) -> f64 {
        match self {
            ScalarLaw::Constant(x) => x,
            ScalarLaw::TwoPoint(x, y) => x.max(y),
        }
    }

    /// `E[X^u]` for `u > 0`.
    pub fn power_mean(self, u: f64) -> f64 {
        match self {
            ScalarLaw::Constant(x) => x.powf(u),
            ScalarLaw::TwoPoint(x, y) => 0.5 * (x.powf(u) + y.powf(u)),
        }
    }
}

/// Law of the pair `(A, B)`; pairs are iid across generations.
#[derive(Debug, Clone, PartialEq)]
pub enum PerpetuitySpec {
    /// `A` and `B` independent.
    Independent { a: ScalarLaw, b: ScalarLaw },
    /// `A = f''(1)/(2 f'(1)^2)` and `B = 1/f'(1)` from one environment draw,
    /// so `A` and `B` are coupled within a pair.
    Environment(EnvironmentModel),
}

impl PerpetuitySpec {
    pub fn independent(a: ScalarLaw, b: ScalarLaw) -> Result<Self> {
        Ok(PerpetuitySpec::Independent {
            a: a.validate("A")?,
            b: b.validate("B")?,
        })
    }

    /// Whether `A` and `B` of one pair come from the same offspring law.
    pub fn coupled(&self) -> bool {
        matches!(self, PerpetuitySpec::Environment(_))
    }

    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            PerpetuitySpec::Independent { a, b } => (a.sample(rng), b.sample(rng)),
            PerpetuitySpec::Environment(model) => {
                let law = model.sample_law(rng);
                (law.shape_at_one(), 1.0 / law.mean())
            }
        }
    }

    fn mean_a(&self) -> f64 {
        match self {
            PerpetuitySpec::Independent { a, .. } => a.mean(),
            PerpetuitySpec::Environment(model) => model.expect_over_means(|m| {
                model
                    .law_with_mean(m)
                    .expect("validated mean")
                    .shape_at_one()
            }),
        }
    }

    fn sup_a(&self) -> f64 {
        match self {
            PerpetuitySpec::Independent { a, .. } => a.max(),
            PerpetuitySpec::Environment(model) => model.shape_at_one_bound(),
        }
    }

    /// `(1 - E[B], Var B)`.
    fn b_moments(&self) -> (f64, f64) {
        match self {
            PerpetuitySpec::Independent { b, .. } => (1.0 - b.mean(), b.variance()),
            PerpetuitySpec::Environment(model) => {
                (model.inverse_mean_defect(), model.reciprocal_variance())
            }
        }
    }

    /// `E[B^u]`.
    fn b_power_mean(&self, u: f64) -> f64 {
        match self {
            PerpetuitySpec::Independent { b, .. } => b.power_mean(u),
            PerpetuitySpec::Environment(model) => model.inverse_moment(u),
        }
    }
}

pub fn from_environment(model: &EnvironmentModel) -> PerpetuitySpec {
    PerpetuitySpec::Environment(model.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerpetuityRegime {
    /// `1 - E[B]`.
    pub beta: f64,
    /// `Var B`.
    pub gamma: f64,
    /// `beta / gamma`, infinite when `gamma = 0`.
    pub rho_hat: f64,
    /// `E[A]`.
    pub alpha: f64,
}

/// Exact `(beta, gamma, rho_hat, alpha)`; rejects `beta <= -gamma/2`.
pub fn regime_of(spec: &PerpetuitySpec) -> Result<PerpetuityRegime> {
    let (beta, gamma) = spec.b_moments();
    if beta <= -gamma / 2.0 || (beta == 0.0 && gamma == 0.0) {
        return Err(Error::Inadmissible { beta, gamma });
    }
    let rho_hat = if gamma == 0.0 {
        f64::INFINITY
    } else {
        beta / gamma
    };
    Ok(PerpetuityRegime {
        beta,
        gamma,
        rho_hat,
        alpha: spec.mean_a(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitLaw {
    /// Point mass at `alpha`, the limit of `beta Y`.
    Dirac { alpha: f64 },
    /// Limit of `gamma Y`.
    InverseGamma(InverseGammaParams),
}

impl LimitLaw {
    pub fn kind(&self) -> &'static str {
        match self {
            LimitLaw::Dirac { .. } => "dirac",
            LimitLaw::InverseGamma(_) => "inverse_gamma",
        }
    }
}

pub fn limit_law(regime: &PerpetuityRegime) -> Result<LimitLaw> {
    if regime.rho_hat.is_infinite() && regime.rho_hat > 0.0 {
        return Ok(LimitLaw::Dirac {
            alpha: regime.alpha,
        });
    }
    if !(regime.rho_hat > -0.5) {
        return Err(Error::OutOfRegion(regime.rho_hat));
    }
    Ok(LimitLaw::InverseGamma(InverseGammaParams::new(
        2.0 * regime.rho_hat + 1.0,
        2.0 * regime.alpha,
    )?))
}

/// A contraction exponent `u` with `kappa = E[B^u] < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contraction {
    pub u: f64,
    pub kappa: f64,
}

impl Contraction {
    /// Decay rate `-log(1 - kappa) / u`; smaller is a tighter tail bound.
    fn score(spec: &PerpetuitySpec, u: f64) -> f64 {
        let kappa = spec.b_power_mean(u);
        if kappa < 1.0 {
            (-kappa).ln_1p() / u
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Maximize `log(1 - E[B^u]) / u` over `u` in `(0, 1]`: a coarse grid
    /// brackets the maximum, golden-section search refines it.
    pub fn find(spec: &PerpetuitySpec) -> Result<Self> {
        const GRID: usize = 64;
        let grid: Vec<f64> = (1..=GRID).map(|i| i as f64 / GRID as f64).collect();
        let scores: Vec<f64> = grid.iter().map(|&u| Self::score(spec, u)).collect();
        let (best, best_score) =
            scores
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc },
                );
        if best_score == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(
                "no contraction: E[B^u] >= 1 for every u in (0, 1]".into(),
            ));
        }
        let mut lo = if best == 0 { 1e-6 } else { grid[best - 1] };
        let mut hi = if best + 1 == GRID {
            1.0
        } else {
            grid[best + 1]
        };
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut f1, mut f2) = (Self::score(spec, x1), Self::score(spec, x2));
        for _ in 0..60 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = Self::score(spec, x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = Self::score(spec, x1);
            }
        }
        let candidates = [grid[best], x1, x2, hi];
        let u = candidates
            .into_iter()
            .max_by(|a, b| Self::score(spec, *a).total_cmp(&Self::score(spec, *b)))
            .expect("nonempty");
        Ok(Contraction {
            u,
            kappa: spec.b_power_mean(u),
        })
    }
}

/// One truncated series draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesDraw {
    pub value: f64,
    pub terms: u64,
    /// False when `k_max` terms were used before the tail bound met `tol`.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitFit {
    /// `gamma` for the inverse-gamma limit, `beta` for the Dirac limit.
    pub scaled_by: f64,
    /// One-sample KS distance against the inverse-gamma limit.
    pub ks_distance: Option<f64>,
    /// Fraction of scaled samples within 10% of `alpha` for the Dirac limit.
    pub concentration: Option<f64>,
    pub n_samples: usize,
    pub n_unconverged: usize,
}

/// Pair sampler specialized to precomputed atoms when possible.
#[derive(Debug, Clone)]
enum Pairs {
    /// `(A, B, log B)` atoms selected like the two-point environment draw.
    Atoms(Vec<(f64, f64, f64)>),
    General,
}

/// A validated perpetuity with its regime and series tail constants.
#[derive(Debug, Clone)]
pub struct Perpetuity {
    spec: PerpetuitySpec,
    regime: PerpetuityRegime,
    contraction: Contraction,
    /// `sup A / (1 - kappa)^{1/u}`: a typical size of `Y` restarted at
    /// any generation.
    tail_scale: f64,
    pairs: Pairs,
}

impl Perpetuity {
    pub fn new(spec: PerpetuitySpec) -> Result<Self> {
        let regime = regime_of(&spec)?;
        let contraction = Contraction::find(&spec)?;
        let tail_scale = spec.sup_a() / (1.0 - contraction.kappa).powf(1.0 / contraction.u);
        let pairs = match &spec {
            PerpetuitySpec::Environment(model) if !model.atoms().is_empty() => Pairs::Atoms(
                model
                    .atoms()
                    .iter()
                    .map(|law| {
                        let b = 1.0 / law.mean();
                        (law.shape_at_one(), b, b.ln())
                    })
                    .collect(),
            ),
            _ => Pairs::General,
        };
        Ok(Self {
            spec,
            regime,
            contraction,
            tail_scale,
            pairs,
        })
    }

    pub fn spec(&self) -> &PerpetuitySpec {
        &self.spec
    }

    pub fn regime(&self) -> PerpetuityRegime {
        self.regime
    }

    pub fn contraction(&self) -> Contraction {
        self.contraction
    }

    pub fn limit_law(&self) -> Result<LimitLaw> {
        limit_law(&self.regime)
    }

    /// `(A, B, log B)`.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64, f64) {
        match &self.pairs {
            Pairs::Atoms(atoms) if atoms.len() == 1 => atoms[0],
            Pairs::Atoms(atoms) => atoms[usize::from(rng.random::<bool>())],
            Pairs::General => {
                let (a, b) = self.spec.sample_pair(rng);
                (a, b, b.ln())
            }
        }
    }

    /// Partial sums of the series with `log C_k` accumulated additively.
    /// Stops once `C_k * tail_scale < tol * partial`, or at `k_max`.
    pub fn sample_y_series<R: Rng + ?Sized>(
        &self,
        tol: f64,
        k_max: u64,
        rng: &mut R,
    ) -> SeriesDraw {
        let log_scale = self.tail_scale.ln();
        let log_tol = tol.ln();
        let mut log_c = 0.0f64;
        let mut partial = 0.0;
        for k in 0..k_max {
            let (a, _, log_b) = self.draw(rng);
            partial += log_c.exp() * a;
            log_c += log_b;
            if log_c == f64::NEG_INFINITY
                || (partial > 0.0 && log_c + log_scale < log_tol + partial.ln())
            {
                return SeriesDraw {
                    value: partial,
                    terms: k + 1,
                    converged: true,
                };
            }
        }
        SeriesDraw {
            value: partial,
            terms: k_max,
            converged: false,
        }
    }

    /// Smallest `t` with `kappa^{t/u} < 1e-8`.
    pub fn default_burn_in(&self) -> u64 {
        let Contraction { u, kappa } = self.contraction;
        if kappa <= 0.0 {
            return 1;
        }
        ((u * BURN_IN_TARGET.ln() / kappa.ln()).floor() as u64 + 1).max(1)
    }

    /// Iterate `Y <- A + B Y` from `Y = 0`.
    pub fn sample_y_chain<R: Rng + ?Sized>(&self, burn_in: u64, rng: &mut R) -> Result<f64> {
        if burn_in == 0 {
            return Err(Error::InvalidParameter("burn_in must be >= 1".into()));
        }
        let mut y = 0.0;
        for _ in 0..burn_in {
            let (a, b, _) = self.draw(rng);
            y = a + b * y;
        }
        Ok(y)
    }

    /// Two-sample KS distance between `Y` draws and `A + B Y'` built from
    /// independent draws `Y'` and fresh pairs `(A, B)`.
    pub fn annuity_residual<R: Rng + ?Sized>(&self, n_samples: usize, rng: &mut R) -> Result<f64> {
        if n_samples < 1000 {
            return Err(Error::InvalidParameter(
                "annuity residual needs n_samples >= 1000".into(),
            ));
        }
        let lhs: Vec<f64> = (0..n_samples)
            .map(|_| self.sample_y_series(ANNUITY_TOL, SERIES_K_MAX, rng).value)
            .collect();
        let rhs: Vec<f64> = (0..n_samples)
            .map(|_| {
                let y = self.sample_y_series(ANNUITY_TOL, SERIES_K_MAX, rng).value;
                let (a, b, _) = self.draw(rng);
                a + b * y
            })
            .collect();
        ks_two_sample(&lhs, &rhs)
    }

    /// Scale series draws by `gamma` (inverse-gamma limit) or `beta` (Dirac
    /// limit) and compare them with the limit law.
    pub fn limit_fit_test<R: Rng + ?Sized>(
        &self,
        n_samples: usize,
        rng: &mut R,
    ) -> Result<LimitFit> {
        if n_samples < 2 {
            return Err(Error::InvalidParameter(
                "limit fit needs n_samples >= 2".into(),
            ));
        }
        let law = self.limit_law()?;
        let mut unconverged = 0;
        let mut draws = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let d = self.sample_y_series(SERIES_TOL, SERIES_K_MAX, rng);
            unconverged += usize::from(!d.converged);
            draws.push(d.value);
        }
        match law {
            LimitLaw::Dirac { alpha } => {
                let beta = self.regime.beta;
                let inside = draws
                    .iter()
                    .filter(|&&y| (beta * y - alpha).abs() <= CONCENTRATION_WINDOW * alpha)
                    .count();
                Ok(LimitFit {
                    scaled_by: beta,
                    ks_distance: None,
                    concentration: Some(inside as f64 / n_samples as f64),
                    n_samples,
                    n_unconverged: unconverged,
                })
            }
            LimitLaw::InverseGamma(ig) => {
                let gamma = self.regime.gamma;
                let scaled: Vec<f64> = draws.iter().map(|y| gamma * y).collect();
                let d = ks_one_sample(&scaled, |x| {
                    if x > 0.0 {
                        ig.cdf(x).unwrap_or(0.0)
                    } else {
                        0.0
                    }
                })?;
                Ok(LimitFit {
                    scaled_by: gamma,
                    ks_distance: Some(d),
                    concentration: None,
                    n_samples,
                    n_unconverged: unconverged,
                })
            }
        }
    }
}
