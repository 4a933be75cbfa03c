//! Risk-neutral drift conditions `Ψ(−i e_s) = −r_s`.
//!
//! The idiosyncratic drift of asset s (μ for a KoBoL block, γ for a Gaussian
//! block) absorbs the condition for that asset. Since the drift enters as
//! `−iμξ`, `Ψ(−i e_s)` moves by exactly `−δ` when `μ_s` moves by `δ`, so the
//! system is solved in closed form. Factor drifts are left to the user.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy_core::{CharExponent, Exponent};
use crate::model::{x_name, z_name, BasketModel};

const IMAG_RESIDUE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum RiskFreeRate {
    Flat(f64),
    PerAsset(Vec<f64>),
}

impl RiskFreeRate {
    pub fn for_asset(&self, s: usize) -> f64 {
        match self {
            RiskFreeRate::Flat(r) => *r,
            RiskFreeRate::PerAsset(rs) => rs[s],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            RiskFreeRate::Flat(r) if r.is_finite() => Ok(()),
            RiskFreeRate::PerAsset(rs) if rs.len() == n && rs.iter().all(|r| r.is_finite()) => {
                Ok(())
            }
            RiskFreeRate::Flat(r) => Err(Error::InvalidParameter(format!(
                "riskless rate must be finite, got {r}"
            ))),
            RiskFreeRate::PerAsset(rs) => Err(Error::InvalidParameter(format!(
                "expected {n} finite per-asset rates, got {rs:?}"
            ))),
        }
    }
}

impl From<f64> for RiskFreeRate {
    fn from(r: f64) -> Self {
        RiskFreeRate::Flat(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmmReport {
    pub residuals: Vec<f64>,
    pub adjusted: bool,
    pub rate: RiskFreeRate,
}

impl EmmReport {
    pub fn max_abs(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

fn describe_weak_tempering(name: &str, block: &CharExponent, im: f64) -> Error {
    let strip = block.strip();
    Error::Calibration(format!(
        "{name} ({}) tempering too weak for the exponential moment: needs Im = {im} inside strip {strip}",
        block.family()
    ))
}

/// Checks that `−i e_s` is inside every strip the marginal of asset s touches.
fn check_exponential_moment(m: &BasketModel, s: usize) -> Result<()> {
    let x = &m.x_blocks()[s];
    if !x.strip().contains(-1.0) {
        return Err(describe_weak_tempering(&x_name(s), x, -1.0));
    }
    for (k, z) in m.z_blocks().iter().enumerate() {
        let im = -m.dependency().get(s, k);
        if im != 0.0 && !z.strip().contains(im) {
            return Err(describe_weak_tempering(&z_name(k), z, im));
        }
    }
    Ok(())
}

fn exponent_at_minus_i(m: &BasketModel, s: usize) -> Result<f64> {
    check_exponential_moment(m, s)?;
    let value = m
        .marginal_exponent(s)?
        .eval(Complex64::new(0.0, -1.0))
        .map_err(|e| Error::Calibration(e.to_string()))?;
    if value.im.abs() > IMAG_RESIDUE * value.re.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "Psi(-i e_{s}) has imaginary part {:e}; expected a real value",
            value.im
        )));
    }
    Ok(value.re)
}

/// Entries `Ψ(−i e_s) + r_s`.
pub fn emm_residual(m: &BasketModel, r: &RiskFreeRate) -> Result<Vec<f64>> {
    r.check(m.n())?;
    (0..m.n())
        .map(|s| Ok(exponent_at_minus_i(m, s)? + r.for_asset(s)))
        .collect()
}

pub fn emm_report(m: &BasketModel, r: &RiskFreeRate, adjusted: bool) -> Result<EmmReport> {
    Ok(EmmReport {
        residuals: emm_residual(m, r)?,
        adjusted,
        rate: r.clone(),
    })
}

/// Returns a copy of `m` whose idiosyncratic drifts satisfy the EMM conditions.
///
/// The new drift is computed from the drift-free part of `Ψ(−i e_s)` rather
/// than by incrementing the old one, which makes the map exactly idempotent.
pub fn adjust_drifts(m: &BasketModel, r: &RiskFreeRate) -> Result<BasketModel> {
    r.check(m.n())?;
    let mut out = m.clone();
    for s in 0..m.n() {
        let block = m.x_blocks()[s];
        let zeroed = block.with_drift(0.0).ok_or_else(|| {
            Error::Calibration(format!(
                "{} is null and has no drift to absorb the martingale condition",
                x_name(s)
            ))
        })?;
        let base = exponent_at_minus_i(&m.with_x_block(s, zeroed), s)?;
        let adjusted = block
            .with_drift(base + r.for_asset(s))
            .expect("block has a drift");
        out = out.with_x_block(s, adjusted);
    }
    Ok(out)
}

/// Adjusts drifts and reports residuals before and after.
pub fn calibrate(m: &BasketModel, r: &RiskFreeRate) -> Result<(BasketModel, EmmReport, EmmReport)> {
    let before = emm_report(m, r, false)?;
    let adjusted = adjust_drifts(m, r)?;
    let after = emm_report(&adjusted, r, true)?;
    Ok((adjusted, before, after))
}
