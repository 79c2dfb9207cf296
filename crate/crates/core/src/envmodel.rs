//! Random environments: iid offspring laws whose means are
//! `1 + epsilon + sqrt(nu) * zeta` for a standardized bounded noise `zeta`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::quadrature::integrate;
use crate::pgf::{FinitePmf, OffspringLaw};

const SQRT3: f64 = 1.732_050_807_568_877_2;
/// Exponent offset used by [`EnvironmentModel::assumption_check`].
pub const ASSUMPTION_DELTA: f64 = 0.5;
const RHO_BOUNDARY_TOL: f64 = 1e-12;

/// Standardized environment noise (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    /// `+1` or `-1` with probability one half each.
    TwoPoint,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
}

impl Noise {
    pub fn name(self) -> &'static str {
        match self {
            Noise::TwoPoint => "two_point",
            Noise::Uniform => "uniform",
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Noise::TwoPoint => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Noise::Uniform => SQRT3 * (2.0 * rng.random::<f64>() - 1.0),
        }
    }

    /// Largest value of `|zeta|`.
    pub fn bound(self) -> f64 {
        match self {
            Noise::TwoPoint => 1.0,
            Noise::Uniform => SQRT3,
        }
    }

    /// `E|zeta|^q`.
    pub fn abs_moment(self, q: f64) -> f64 {
        match self {
            Noise::TwoPoint => 1.0,
            Noise::Uniform => 3f64.powf(q / 2.0) / (q + 1.0),
        }
    }

    /// `E[g(zeta)]`, exact for two-point noise and by adaptive quadrature
    /// for uniform noise.
    pub fn expect<G: Fn(f64) -> f64>(self, g: G) -> f64 {
        match self {
            Noise::TwoPoint => 0.5 * (g(-1.0) + g(1.0)),
            Noise::Uniform => {
                let r = integrate(&g, -SQRT3, SQRT3, 1e-15, 1e-13, 2000);
                r.value / (2.0 * SQRT3)
            }
        }
    }
}

impl std::str::FromStr for Noise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_point" => Ok(Noise::TwoPoint),
            "uniform" => Ok(Noise::Uniform),
            other => Err(Error::InvalidParameter(format!(
                "unknown noise kind `{other}`"
            ))),
        }
    }
}

/// How a target mean is turned into an offspring law.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `Poisson(m)`.
    Poisson,
    /// Linear-fractional with fixed zero mass `p0` and tail `p = 1 - (1 - p0)/m`.
    LinearFractional { p0: f64 },
    /// A template pmf, mixed with a point mass at its top index to raise
    /// the mean or at zero to lower it.
    Finite { template: Vec<f64> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::LinearFractional { .. } => "linear_fractional",
            Family::Finite { .. } => "finite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Mapper {
    Poisson,
    LinearFractional {
        p0: f64,
    },
    Finite {
        template: FinitePmf,
        template_mean: f64,
        top: usize,
    },
}

impl Mapper {
    fn law(&self, m: f64) -> Result<OffspringLaw> {
        match self {
            Mapper::Poisson => OffspringLaw::poisson(m),
            Mapper::LinearFractional { p0 } => {
                let p = (1.0 - (1.0 - p0) / m).max(0.0);
                OffspringLaw::linear_fractional(*p0, p)
            }
            Mapper::Finite {
                template,
                template_mean,
                top,
            } => {
                let mut w = template.weights().to_vec();
                if m >= *template_mean {
                    let theta = if *top as f64 > *template_mean {
                        (m - template_mean) / (*top as f64 - template_mean)
                    } else {
                        0.0
                    };
                    w.iter_mut().for_each(|x| *x *= 1.0 - theta);
                    w[*top] += theta;
                } else {
                    let theta = m / template_mean;
                    w.iter_mut().for_each(|x| *x *= theta);
                    w[0] += 1.0 - theta;
                }
                OffspringLaw::finite(w)
            }
        }
    }
}

/// Validated random environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentModel {
    family: Family,
    mapper: Mapper,
    epsilon: f64,
    nu: f64,
    noise: Noise,
    /// Prebuilt laws when the environment has one or two atoms.
    atoms: Vec<OffspringLaw>,
}

/// Build an environment, checking positivity of every possible mean and
/// that the family can realize it.
pub fn make_environment(
    family: Family,
    epsilon: f64,
    nu: f64,
    noise: Noise,
) -> Result<EnvironmentModel> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "nu must be >= 0, got {nu}"
        )));
    }
    let spread = nu.sqrt() * noise.bound();
    let lo = 1.0 + epsilon - spread;
    let hi = 1.0 + epsilon + spread;
    if lo <= 0.0 {
        return Err(Error::InvalidParameter(match noise {
            Noise::TwoPoint => format!(
                "positivity violated: sqrt(nu) = {} >= 1 + epsilon = {}",
                nu.sqrt(),
                1.0 + epsilon
            ),
            Noise::Uniform => format!(
                "positivity violated: sqrt(3 nu) = {spread} >= 1 + epsilon = {}",
                1.0 + epsilon
            ),
        }));
    }
    let mapper = match &family {
        Family::Poisson => Mapper::Poisson,
        Family::LinearFractional { p0 } => {
            if !(0.0..1.0).contains(p0) {
                return Err(Error::InvalidParameter(format!(
                    "p0 must lie in [0, 1), got {p0}"
                )));
            }
            if lo < 1.0 - p0 {
                return Err(Error::InvalidParameter(format!(
                    "linear-fractional tail p = 1 - (1 - p0)/m is negative at the smallest mean {lo}; need m >= {}",
                    1.0 - p0
                )));
            }
            Mapper::LinearFractional { p0: *p0 }
        }
        Family::Finite { template } => {
            let pmf = FinitePmf::new(template.clone())?;
            let template_mean = OffspringLaw::Finite(pmf.clone()).mean();
            let top = template.iter().rposition(|&w| w > 0.0).unwrap_or(0);
            if hi > top as f64 {
                return Err(Error::InvalidParameter(format!(
                    "finite template tops out at {top} offspring but the largest mean is {hi}"
                )));
            }
            Mapper::Finite {
                template: pmf,
                template_mean,
                top,
            }
        }
    };
    let atoms = if nu == 0.0 {
        vec![mapper.law(1.0 + epsilon)?]
    } else if noise == Noise::TwoPoint {
        vec![mapper.law(lo)?, mapper.law(hi)?]
    } else {
        Vec::new()
    };
    Ok(EnvironmentModel {
        family,
        mapper,
        epsilon,
        nu,
        noise,
        atoms,
    })
}

/// Exact moments of the random mean `F'(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticMoments {
    pub mean: f64,
    pub variance: f64,
    /// `E[F'(1)^{-r}]`.
    pub inverse_moment: f64,
    pub log_mean: f64,
    pub sigma_sq_limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionCheck {
    pub exact: f64,
    pub expansion: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// Annealed fourth moment of the offspring number.
    pub offspring_fourth_moment: f64,
    /// `E[F'(1)^{-4-delta}]`.
    pub inverse_moment: f64,
    /// `E|F'(1) - (1 + epsilon)|^{4+delta} / nu^{2+delta/2}`; 0 when `nu = 0`.
    pub centered_ratio: f64,
    /// Exact value of the ratio for the model's noise kind.
    pub centered_ratio_bound: f64,
    pub pass: bool,
}

impl EnvironmentModel {
    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn noise(&self) -> Noise {
        self.noise
    }

    /// Smallest and largest possible value of `F'(1)`.
    pub fn mean_range(&self) -> (f64, f64) {
        let s = self.nu.sqrt() * self.noise.bound();
        (1.0 + self.epsilon - s, 1.0 + self.epsilon + s)
    }

    /// `F'(1)` for a given noise value.
    pub fn mean_at(&self, zeta: f64) -> f64 {
        1.0 + self.epsilon + self.nu.sqrt() * zeta
    }

    /// Family member with mean `m`.
    pub fn law_with_mean(&self, m: f64) -> Result<OffspringLaw> {
        self.mapper.law(m)
    }

    pub fn sample_mean<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.nu == 0.0 {
            1.0 + self.epsilon
        } else {
            self.mean_at(self.noise.sample(rng))
        }
    }

    /// One environment draw `F`.
    pub fn sample_law<R: Rng + ?Sized>(&self, rng: &mut R) -> OffspringLaw {
        match self.atoms.len() {
            1 => self.atoms[0].clone(),
            2 => self.atoms[usize::from(rng.random::<bool>())].clone(),
            _ => {
                let m = self.sample_mean(rng);
                self.mapper
                    .law(m)
                    .expect("means inside the validated range")
            }
        }
    }

    /// `E[g(F'(1))]` over the noise.
    pub fn expect_over_means<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        if self.nu == 0.0 {
            g(1.0 + self.epsilon)
        } else {
            self.noise.expect(|z| g(self.mean_at(z)))
        }
    }

    /// Offspring variance of the family member with mean 1.
    pub fn sigma_sq(&self) -> f64 {
        self.mapper
            .law(1.0)
            .expect("mean 1 is always realizable")
            .variance()
    }

    /// `E[F'(1)^{-r}]` for any `r >= 0`.
    pub fn inverse_moment(&self, r: f64) -> f64 {
        let c = 1.0 + self.epsilon;
        let s = self.nu.sqrt();
        if s == 0.0 {
            return c.powf(-r);
        }
        match self.noise {
            Noise::TwoPoint => 0.5 * ((c - s).powf(-r) + (c + s).powf(-r)),
            Noise::Uniform => {
                let x = SQRT3 * s / c;
                c.powf(-r) * uniform_power_mean(x, -r)
            }
        }
    }

    /// `E[log F'(1)]`.
    pub fn log_mean(&self) -> f64 {
        let s = self.nu.sqrt();
        if s == 0.0 {
            return self.epsilon.ln_1p();
        }
        match self.noise {
            Noise::TwoPoint => 0.5 * ((self.epsilon - s).ln_1p() + (self.epsilon + s).ln_1p()),
            Noise::Uniform => {
                let c = 1.0 + self.epsilon;
                self.epsilon.ln_1p() + uniform_log_mean(SQRT3 * s / c)
            }
        }
    }

    /// `1 - E[1 / F'(1)]`, free of the cancellation in the direct form.
    pub fn inverse_mean_defect(&self) -> f64 {
        let c = 1.0 + self.epsilon;
        if self.nu == 0.0 {
            return self.epsilon / c;
        }
        match self.noise {
            Noise::TwoPoint => (self.epsilon * c - self.nu) / (c * c - self.nu),
            Noise::Uniform => {
                // E[1/(1 + xU)] - 1
                let x = SQRT3 * self.nu.sqrt() / c;
                let excess = if x < 0.5 {
                    let x2 = x * x;
                    let mut xk = 1.0;
                    let mut sum = 0.0;
                    for k in 1..100 {
                        xk *= x2;
                        let term = xk / (2 * k + 1) as f64;
                        sum += term;
                        if term < 1e-19 {
                            break;
                        }
                    }
                    sum
                } else {
                    x.atanh() / x - 1.0
                };
                (self.epsilon - excess) / c
            }
        }
    }

    /// `Var(1 / F'(1))`.
    pub fn reciprocal_variance(&self) -> f64 {
        if self.nu == 0.0 {
            return 0.0;
        }
        let c = 1.0 + self.epsilon;
        match self.noise {
            Noise::TwoPoint => {
                let half_gap = self.nu.sqrt() / (c * c - self.nu);
                half_gap * half_gap
            }
            Noise::Uniform => {
                let mean = 1.0 - self.inverse_mean_defect();
                self.expect_over_means(|m| (1.0 / m - mean).powi(2))
            }
        }
    }

    /// Prebuilt laws when the environment has at most two atoms, in the
    /// order selected by the two-point noise draw. Empty otherwise.
    pub fn atoms(&self) -> &[OffspringLaw] {
        &self.atoms
    }

    /// An upper bound on `psi(1) = f''(1) / (2 m^2)` over the environment.
    pub fn shape_at_one_bound(&self) -> f64 {
        if !self.atoms.is_empty() {
            return self
                .atoms
                .iter()
                .map(OffspringLaw::shape_at_one)
                .fold(0.0, f64::max);
        }
        let (lo, hi) = self.mean_range();
        let at = |m: f64| self.mapper.law(m).expect("validated mean").shape_at_one();
        match &self.mapper {
            Mapper::Poisson => 0.5,
            // p / (1 - p0), increasing in m
            Mapper::LinearFractional { .. } => at(hi),
            Mapper::Finite { template_mean, .. } => {
                // f''(1) is piecewise linear in m with a kink at the template mean.
                let fact2 = |m: f64| {
                    self.mapper
                        .law(m)
                        .expect("validated mean")
                        .second_factorial_moment()
                };
                let mut top = fact2(lo).max(fact2(hi));
                if (lo..=hi).contains(template_mean) {
                    top = top.max(fact2(*template_mean));
                }
                top / (2.0 * lo * lo)
            }
        }
    }

    pub fn analytic_moments(&self, r: f64) -> Result<AnalyticMoments> {
        if !(0.0..=4.0).contains(&r) {
            return Err(Error::Domain(format!(
                "moment order r must lie in [0, 4], got {r}"
            )));
        }
        Ok(AnalyticMoments {
            mean: 1.0 + self.epsilon,
            variance: self.nu,
            inverse_moment: self.inverse_moment(r),
            log_mean: self.log_mean(),
            sigma_sq_limit: self.sigma_sq(),
        })
    }

    /// Compare `E[F'(1)^{-r}]` with `1 - r eps + r(r+1) nu / 2`.
    pub fn expansion_check(&self, r: f64) -> Result<ExpansionCheck> {
        if !(0.0..=2.0).contains(&r) {
            return Err(Error::Domain(format!(
                "expansion order r must lie in [0, 2], got {r}"
            )));
        }
        let exact = self.inverse_moment(r);
        let expansion = 1.0 - r * self.epsilon + 0.5 * r * (r + 1.0) * self.nu;
        Ok(ExpansionCheck {
            exact,
            expansion,
            abs_error: (exact - expansion).abs(),
        })
    }

    pub fn regime_params(&self) -> Result<RegimeParams> {
        RegimeParams::new(self.epsilon, self.nu, self.sigma_sq())
    }

    pub fn assumption_check(&self) -> AssumptionReport {
        let q = 4.0 + ASSUMPTION_DELTA;
        let offspring_fourth_moment = self.expect_over_means(|m| {
            self.mapper
                .law(m)
                .map(|l| l.fourth_moment())
                .unwrap_or(f64::NAN)
        });
        let inverse_moment = self.inverse_moment(q);
        let centered_ratio_bound = self.noise.abs_moment(q);
        let centered_ratio = if self.nu == 0.0 {
            0.0
        } else {
            let c = 1.0 + self.epsilon;
            self.expect_over_means(|m| (m - c).abs().powf(q)) / self.nu.powf(q / 2.0)
        };
        let pass = offspring_fourth_moment.is_finite()
            && inverse_moment.is_finite()
            && centered_ratio <= centered_ratio_bound * (1.0 + 1e-9);
        AssumptionReport {
            offspring_fourth_moment,
            inverse_moment,
            centered_ratio,
            centered_ratio_bound,
            pass,
        }
    }
}

/// `E[(1 + x U)^a]` for `U` uniform on `[-1, 1]`, `0 <= x < 1`.
fn uniform_power_mean(x: f64, a: f64) -> f64 {
    if x < 0.5 {
        power_mean_series(x, a)
    } else {
        power_mean_closed(x, a)
    }
}

fn power_mean_series(x: f64, a: f64) -> f64 {
    // Even terms of the binomial series, E[U^j] = 1/(j+1).
    let mut coef = 1.0;
    let mut sum = 1.0;
    let mut xj = 1.0;
    for j in 1..200 {
        coef *= (a - (j - 1) as f64) / j as f64;
        xj *= x;
        if j % 2 == 0 {
            let term = coef * xj / (j + 1) as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
    }
    sum
}

fn power_mean_closed(x: f64, a: f64) -> f64 {
    if (a + 1.0).abs() < 1e-14 {
        ((1.0 + x).ln() - (1.0 - x).ln()) / (2.0 * x)
    } else {
        ((1.0 + x).powf(a + 1.0) - (1.0 - x).powf(a + 1.0)) / (2.0 * x * (a + 1.0))
    }
}

/// `E[log(1 + x U)]` for `U` uniform on `[-1, 1]`, `0 <= x < 1`.
fn uniform_log_mean(x: f64) -> f64 {
    if x < 0.5 {
        log_mean_series(x)
    } else {
        log_mean_closed(x)
    }
}

fn log_mean_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut xk = 1.0;
    let mut sum = 0.0;
    for k in 1..100 {
        xk *= x2;
        let term = xk / ((2 * k) as f64 * (2 * k + 1) as f64);
        sum += term;
        if term < 1e-19 {
            break;
        }
    }
    -sum
}

fn log_mean_closed(x: f64) -> f64 {
    ((1.0 + x) * x.ln_1p() - (1.0 - x) * (-x).ln_1p()) / (2.0 * x) - 1.0
}

/// Asymptotic regime of a slightly supercritical environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Environmental variance negligible against the drift.
    CaseI,
    /// `0 < rho < 2`.
    CaseII,
    /// `rho > 2`: the associated random walk drifts to minus infinity.
    CaseIII,
    /// `rho = 2`.
    Boundary,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::CaseI => "case_i",
            Regime::CaseII => "case_ii",
            Regime::CaseIII => "case_iii",
            Regime::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeParams {
    pub epsilon: f64,
    pub nu: f64,
    pub rho: f64,
    pub sigma_sq: f64,
}

impl RegimeParams {
    pub fn new(epsilon: f64, nu: f64, sigma_sq: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "regime needs epsilon > 0, got {epsilon}"
            )));
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "regime needs nu >= 0, got {nu}"
            )));
        }
        if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "regime needs sigma_sq > 0, got {sigma_sq}"
            )));
        }
        Ok(Self {
            epsilon,
            nu,
            rho: nu / epsilon,
            sigma_sq,
        })
    }
}

pub fn regime_classify(params: &RegimeParams) -> Regime {
    let rho = params.rho;
    if rho == 0.0 {
        Regime::CaseI
    } else if (rho - 2.0).abs() <= RHO_BOUNDARY_TOL * 2.0 {
        Regime::Boundary
    } else if rho < 2.0 {
        Regime::CaseII
    } else {
        Regime::CaseIII
    }
}
