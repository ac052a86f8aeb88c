//! Problem parameters and the two integrands whose Gauss-Laguerre sums make
//! up the method.
//!
//! With `s = h^{1/alpha}` the resolvent splits as
//! `(1 + h lambda^alpha)^{-1} = sin(alpha pi)/(alpha pi) * (I1 + I2)` where
//! `Ii = int_0^inf e^{-x} f_i(x) dx` and
//!
//! ```text
//! f1(x) = 1 / ((1 + e^{-x/alpha} s lambda) (e^{-2x} + 2 e^{-x} cos(alpha pi) + 1))
//! f2(x) = alpha/(alpha+1) / ((e^{-x/(alpha+1)} + s lambda)
//!                             (1 + 2 cos(alpha pi) e^{-alpha x/(alpha+1)} + e^{-2 alpha x/(alpha+1)}))
//! ```

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// The pair `(alpha, h)` with the derived constants used everywhere else.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    alpha: f64,
    h: f64,
    h_pow: f64,
    prefactor: f64,
    cos_api: f64,
    sin_api: f64,
}

impl Params {
    pub fn new(alpha: f64, h: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!(
                "h must be positive and finite, got {h}"
            )));
        }
        let h_pow = h.powf(1.0 / alpha);
        if !(h_pow > 0.0 && h_pow.is_finite()) {
            return Err(Error::invalid(format!(
                "h^(1/alpha) is not representable for alpha = {alpha}, h = {h}"
            )));
        }
        let sin_api = (alpha * PI).sin();
        let prefactor = sin_api / (alpha * PI);
        Ok(Params {
            alpha,
            h,
            h_pow,
            prefactor,
            cos_api: (alpha * PI).cos(),
            sin_api,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `h^{1/alpha}`. May underflow to zero or overflow for extreme inputs;
    /// use [`Params::ln_scaled`] where logarithms are needed.
    pub fn h_pow(&self) -> f64 {
        self.h_pow
    }

    /// `sin(alpha pi) / (alpha pi)`.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn cos_api(&self) -> f64 {
        self.cos_api
    }

    pub fn sin_api(&self) -> f64 {
        self.sin_api
    }

    /// `ln(h^{1/alpha} lambda)` computed without forming the product.
    pub fn ln_scaled(&self, lambda: f64) -> f64 {
        self.h.ln() / self.alpha + lambda.ln()
    }

    /// `h^{1/alpha} lambda`, `+inf` when it overflows.
    pub fn scaled(&self, lambda: f64) -> f64 {
        let direct = self.h_pow * lambda;
        if direct.is_finite() && direct > 0.0 {
            direct
        } else {
            self.ln_scaled(lambda).exp()
        }
    }
}

fn check_domain(x: f64, lambda: f64) -> Result<()> {
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("x must be non-negative, got {x}")));
    }
    if !(lambda >= 1.0) {
        return Err(Error::invalid(format!("lambda must be >= 1, got {lambda}")));
    }
    Ok(())
}

/// Integrand of the first integral. Returns the `lambda -> inf` limit (zero)
/// when `h^{1/alpha} lambda` overflows.
pub fn f1(x: f64, lambda: f64, p: &Params) -> Result<f64> {
    check_domain(x, lambda)?;
    let sl = p.scaled(lambda);
    if !sl.is_finite() {
        return Ok(0.0);
    }
    let e = (-x).exp();
    let trig = e * e + 2.0 * e * p.cos_api + 1.0;
    Ok(1.0 / ((1.0 + (-x / p.alpha).exp() * sl) * trig))
}

/// Integrand of the second integral. Returns zero when `h^{1/alpha} lambda`
/// overflows.
pub fn f2(x: f64, lambda: f64, p: &Params) -> Result<f64> {
    check_domain(x, lambda)?;
    let sl = p.scaled(lambda);
    if !sl.is_finite() {
        return Ok(0.0);
    }
    let a1 = p.alpha + 1.0;
    let e = (-p.alpha * x / a1).exp();
    let trig = 1.0 + 2.0 * p.cos_api * e + e * e;
    Ok(p.alpha / a1 / (((-x / a1).exp() + sl) * trig))
}

/// Uniform bounds `(K1, K2)` with `0 <= f_i <= K_i` for `lambda >= 1`.
pub fn bounds(p: &Params) -> (f64, f64) {
    (1.0, p.alpha / (p.alpha + 1.0) * (-p.h.ln() / p.alpha).exp())
}

/// `1 / (1 + h lambda^alpha)`; zero for `lambda = +inf`.
pub fn exact_scalar_resolvent(lambda: f64, p: &Params) -> Result<f64> {
    if !(lambda >= 1.0) {
        return Err(Error::invalid(format!("lambda must be >= 1, got {lambda}")));
    }
    if lambda.is_infinite() {
        return Ok(0.0);
    }
    Ok(1.0 / (1.0 + p.h * lambda.powf(p.alpha)))
}
