//! Closed-form prices used as oracles: Margrabe's exchange option and the
//! Black–Scholes call.

use libm::erfc;

use crate::error::{Error, Result};

/// Standard normal CDF, `erfc(−x/√2)/2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MargrabeInputs {
    pub s1: f64,
    pub s2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    /// Continuous dividend or carry yield of asset 1.
    pub q1: f64,
    pub q2: f64,
    pub t: f64,
}

impl MargrabeInputs {
    /// Volatility of the ratio `S₁/S₂`.
    pub fn ratio_vol(&self) -> f64 {
        let v = self.sigma1 * self.sigma1 + self.sigma2 * self.sigma2
            - 2.0 * self.rho * self.sigma1 * self.sigma2;
        v.max(0.0).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !(self.s1 > 0.0 && self.s2 > 0.0) {
            return Err(Error::InvalidParameter("Margrabe spots must be positive".into()));
        }
        if !(self.t > 0.0) {
            return Err(Error::InvalidParameter("Margrabe maturity must be positive".into()));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!(
                "correlation {} outside [-1, 1]",
                self.rho
            )));
        }
        if self.sigma1 < 0.0 || self.sigma2 < 0.0 {
            return Err(Error::InvalidParameter("volatilities must be non-negative".into()));
        }
        Ok(())
    }
}

/// `e^{−q₁T}S₁N(d₁) − e^{−q₂T}S₂N(d₂)` with `σ = √(σ₁² + σ₂² − 2ρσ₁σ₂)`.
pub fn margrabe_price(inp: &MargrabeInputs) -> Result<f64> {
    inp.validate()?;
    let f1 = (-inp.q1 * inp.t).exp() * inp.s1;
    let f2 = (-inp.q2 * inp.t).exp() * inp.s2;
    let sigma = inp.ratio_vol();
    let sd = sigma * inp.t.sqrt();
    if sd == 0.0 {
        return Ok((f1 - f2).max(0.0));
    }
    let d1 = ((inp.s1 / inp.s2).ln() + (inp.q2 - inp.q1 + 0.5 * sigma * sigma) * inp.t) / sd;
    let d2 = d1 - sd;
    Ok(f1 * normal_cdf(d1) - f2 * normal_cdf(d2))
}

pub fn black_scholes_call(s: f64, k: f64, r: f64, sigma: f64, t: f64) -> Result<f64> {
    if !(s > 0.0 && k > 0.0 && t > 0.0 && sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Black-Scholes needs s, k, t > 0 and sigma >= 0 (s={s}, k={k}, sigma={sigma}, t={t})"
        )));
    }
    let discounted_k = k * (-r * t).exp();
    let sd = sigma * t.sqrt();
    if sd == 0.0 {
        return Ok((s - discounted_k).max(0.0));
    }
    let d1 = ((s / k).ln() + (r + 0.5 * sigma * sigma) * t) / sd;
    let d2 = d1 - sd;
    Ok(s * normal_cdf(d1) - discounted_k * normal_cdf(d2))
}
