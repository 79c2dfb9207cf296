//! Environment paths and per-path extinction quantities.

use rand::Rng;

use crate::envmodel::EnvironmentModel;
use crate::error::{Error, Result};
use crate::pgf::OffspringLaw;

/// A realized environment `f_1, ..., f_n` with cumulative log means.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvPath {
    laws: Vec<OffspringLaw>,
    /// `log_mu[k] = sum_{i <= k} log f_i'(1)`, `log_mu[0] = 0`.
    log_mu: Vec<f64>,
}

impl EnvPath {
    pub fn new(laws: Vec<OffspringLaw>) -> Result<Self> {
        if laws.is_empty() {
            return Err(Error::InvalidParameter(
                "environment path needs n >= 1".into(),
            ));
        }
        let mut log_mu = Vec::with_capacity(laws.len() + 1);
        log_mu.push(0.0);
        let mut acc = 0.0;
        for law in &laws {
            acc += law.mean().ln();
            log_mu.push(acc);
        }
        Ok(Self { laws, log_mu })
    }

    /// Number of generations `n`.
    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    pub fn laws(&self) -> &[OffspringLaw] {
        &self.laws
    }

    pub fn log_mu(&self) -> &[f64] {
        &self.log_mu
    }

    /// The first `n` generations of this path.
    pub fn prefix(&self, n: usize) -> Result<EnvPath> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidParameter(format!(
                "prefix length {n} outside 1..={}",
                self.len()
            )));
        }
        Ok(EnvPath {
            laws: self.laws[..n].to_vec(),
            log_mu: self.log_mu[..=n].to_vec(),
        })
    }
}

pub fn sample_env_path<R: Rng + ?Sized>(
    model: &EnvironmentModel,
    n: usize,
    rng: &mut R,
) -> Result<EnvPath> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "environment path needs n >= 1".into(),
        ));
    }
    EnvPath::new((0..n).map(|_| model.sample_law(rng)).collect())
}

/// `1 - g_{0,n}(0)` for the laws `f_1, ..., f_n`.
pub(crate) fn survival_to(laws: &[OffspringLaw]) -> f64 {
    laws.iter().rev().fold(1.0, |t, law| law.survival_step(t))
}

/// Survival complements `t_k = 1 - q_k`, indexed by `k = 0..=n`.
pub fn backward_survival(path: &EnvPath) -> Vec<f64> {
    let n = path.len();
    let mut t = vec![0.0; n + 1];
    t[n] = 1.0;
    for k in (0..n).rev() {
        t[k] = path.laws[k].survival_step(t[k + 1]);
    }
    t
}

/// Extinction probabilities `q_k = f_{k+1}(...f_n(0))`, indexed by
/// `k = 0..=n`, so `q_n = 0` and `1 - q_0` is the conditional survival.
pub fn backward_extinction(path: &EnvPath) -> Vec<f64> {
    backward_survival(path)
        .into_iter()
        .map(|t| 1.0 - t)
        .collect()
}

/// Running product of linear-fractional maps in the survival chart
/// `t = 1 - s`. Each law acts as `t -> a t / (c t + d)` with
/// `a = 1 - p0`, `c = p`, `d = 1 - p`: a lower-triangular positive matrix
/// `[[a, 0], [c, d]]`. The product `M = T_1 ... T_n` is kept normalized so
/// that `M (1, 1)` has second coordinate 1, which makes its first
/// coordinate the survival probability. All entries stay nonnegative, so no
/// cancellation occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LfProduct {
    x: f64,
    y: f64,
    z: f64,
}

impl Default for LfProduct {
    fn default() -> Self {
        Self {
            x: 1.0,
            y: 0.0,
            z: 1.0,
        }
    }
}

impl LfProduct {
    pub(crate) fn push(&mut self, p0: f64, p: f64) {
        let a = 1.0 - p0;
        let x = self.x * a;
        let y = self.y * a + self.z * p;
        let z = self.z * (1.0 - p);
        let norm = y + z;
        self.x = x / norm;
        self.y = y / norm;
        self.z = z / norm;
    }

    pub(crate) fn survival(&self) -> f64 {
        self.x
    }
}

/// `q_0` of an all-linear-fractional path from the composed Möbius map.
pub fn lf_exact_extinction(path: &EnvPath) -> Result<f64> {
    let mut prod = LfProduct::default();
    for (i, law) in path.laws.iter().enumerate() {
        match law {
            OffspringLaw::LinearFractional(lf) => prod.push(lf.p0(), lf.p()),
            _ => return Err(Error::NotLinearFractional(i)),
        }
    }
    Ok(1.0 - prod.survival())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Representation {
    /// `sum_{k<n} psi_{k+1}(q_{k+1}) / mu_k`.
    pub x_n: f64,
    /// `1 / mu_n`.
    pub inv_mu_n: f64,
    /// `1 - q_0` from the backward recursion.
    pub survival: f64,
    /// `|1/(1-q_0) - (1/mu_n + X_n)| (1 - q_0)`.
    pub identity_residual: f64,
}

/// Compare the backward-recursion survival probability with its
/// shape-function series.
pub fn representation_x(path: &EnvPath) -> Result<Representation> {
    representation_with(path, |law, t| law.shape_complement(t))
}

/// [`representation_x`] with a caller-supplied shape function, given as a
/// function of the law and the survival complement `t = 1 - s`.
pub fn representation_with<S>(path: &EnvPath, shape: S) -> Result<Representation>
where
    S: Fn(&OffspringLaw, f64) -> Result<f64>,
{
    let t = backward_survival(path);
    let survival = t[0];
    if survival <= 0.0 {
        return Err(Error::ExtinctionCertain);
    }
    let n = path.len();
    let mut x_n = 0.0;
    for k in 0..n {
        x_n += (-path.log_mu[k]).exp() * shape(&path.laws[k], t[k + 1])?;
    }
    let inv_mu_n = (-path.log_mu[n]).exp();
    let identity_residual = (1.0 / survival - (inv_mu_n + x_n)).abs() * survival;
    Ok(Representation {
        x_n,
        inv_mu_n,
        survival,
        identity_residual,
    })
}
