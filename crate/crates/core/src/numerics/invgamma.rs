//! The inverse-gamma law with density `b^a / Gamma(a) x^{-a-1} e^{-b/x}`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;

use super::quadrature::integrate;
use super::special::{ln_gamma, upper_reg_gamma};
use crate::error::{Error, Result};

const QUAD_REL_TOL: f64 = 1e-14;
const QUAD_MAX_PANELS: usize = 4000;

/// Shape `a` and scale `b` of an inverse-gamma law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseGammaParams {
    a: f64,
    b: f64,
}

impl InverseGammaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "inverse gamma needs a > 0 and b > 0, got a = {a}, b = {b}"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!(
                "inverse gamma cdf needs x > 0, got {x}"
            )));
        }
        upper_reg_gamma(self.a, self.b / x)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!(
                "inverse gamma pdf needs x > 0, got {x}"
            )));
        }
        let log_pdf =
            self.a * self.b.ln() - ln_gamma(self.a) - (self.a + 1.0) * x.ln() - self.b / x;
        Ok(log_pdf.exp())
    }

    /// Draws `b / G` with `G ~ Gamma(a, 1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let gamma = Gamma::new(self.a, 1.0).expect("validated shape");
        self.b / gamma.sample(rng)
    }

    /// `E[1/W] = a / b`.
    pub fn mean_reciprocal(&self) -> f64 {
        self.a / self.b
    }

    /// Laplace transform `h(lambda) = E[exp(-lambda W)]`.
    pub fn laplace(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!(
                "Laplace transform needs lambda >= 0, got {lambda}"
            )));
        }
        Ok(self.expect(|w| (-lambda * w).exp()))
    }

    /// `|lambda h'' - (a - 1) h' - b h|` with `h'` and `h''` replaced by
    /// central differences of spacing `step`.
    ///
    /// The difference quotients are formed inside the integrand, where
    /// `e^{-(l+d)w} - 2e^{-lw} + e^{-(l-d)w} = 4 sinh^2(dw/2) e^{-lw}`, so the
    /// result equals the differenced transform without its rounding noise.
    pub fn laplace_ode_residual(&self, lambda: f64, step: f64) -> Result<f64> {
        if !(step > 0.0 && lambda > step) {
            return Err(Error::Domain(format!(
                "ODE residual needs lambda > step > 0, got lambda = {lambda}, step = {step}"
            )));
        }
        let h = self.expect(|w| (-lambda * w).exp());
        let d1 = -self.expect(|w| {
            let dw = step * w;
            if dw < 1.0 {
                (-lambda * w).exp() * dw.sinh() / step
            } else {
                0.5 * ((-(lambda - step) * w).exp() - (-(lambda + step) * w).exp()) / step
            }
        });
        let d2 = self.expect(|w| {
            let dw = step * w;
            if dw < 1.0 {
                let s = (0.5 * dw).sinh();
                4.0 * s * s * (-lambda * w).exp() / (step * step)
            } else {
                ((-(lambda - step) * w).exp() - 2.0 * (-lambda * w).exp()
                    + (-(lambda + step) * w).exp())
                    / (step * step)
            }
        });
        Ok((lambda * d2 - (self.a - 1.0) * d1 - self.b * h).abs())
    }

    /// `E[g(W)]` for bounded `g`, by quadrature in `t = b / w`, where `t` is
    /// Gamma(a, 1). `[0, 1]` is integrated directly and `[1, inf)` after
    /// `u = e^{-t}`, which maps it onto `(0, 1/e]`.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let (a, b) = (self.a, self.b);
        let lg = ln_gamma(a);
        let near = integrate(
            |t: f64| {
                let v = g(b / t);
                if v == 0.0 {
                    0.0
                } else {
                    v * ((a - 1.0) * t.ln() - t - lg).exp()
                }
            },
            0.0,
            1.0,
            0.0,
            QUAD_REL_TOL,
            QUAD_MAX_PANELS,
        );
        let far = integrate(
            |u: f64| {
                let t = -u.ln();
                let v = g(b / t);
                if v == 0.0 {
                    0.0
                } else {
                    v * ((a - 1.0) * t.ln() - lg).exp()
                }
            },
            0.0,
            (-1.0f64).exp(),
            0.0,
            QUAD_REL_TOL,
            QUAD_MAX_PANELS,
        );
        near.value + far.value
    }
}
