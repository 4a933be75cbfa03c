//! Transition densities by discrete Fourier inversion and European basket
//! prices by quadrature of the payoff against the recovered density.
//!
//! With `Φ(v) = E[exp(i⟨v, U_T⟩)]` the density is
//! `p(u) = (2π)^{-d} ∫ exp(−i⟨v, u⟩) Φ(v) dv`. Each axis is truncated to
//! `[c − L, c + L)` and split into N cells with samples at cell centres; the
//! frequency grid has spacing `π/L`, so that `Δx·Δξ = 2π/N` and one FFT per
//! axis evaluates the trapezoid rule at every spatial node.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::calibration::{emm_residual, RiskFreeRate};
use crate::error::{Error, Result};
use crate::levy_core::Exponent;
use crate::model::BasketModel;
use crate::stats::pairwise_sum;

/// Largest dimension handled on a tensor grid.
pub const MAX_TENSOR_DIM: usize = 3;

const NORMALIZATION_TOLERANCE: f64 = 1e-3;
const NEGATIVITY_TOLERANCE: f64 = 1e-6;
const BOUNDARY_CELLS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct MarketSpec {
    pub spots: Vec<f64>,
    /// Discount rate.
    pub r: f64,
    pub maturity: f64,
    /// Per-asset rates for the martingale conditions; `r` for every asset when absent.
    pub asset_rates: Option<Vec<f64>>,
}

impl MarketSpec {
    pub fn new(spots: Vec<f64>, r: f64, maturity: f64) -> Result<Self> {
        let m = MarketSpec {
            spots,
            r,
            maturity,
            asset_rates: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_asset_rates(mut self, rates: Vec<f64>) -> Result<Self> {
        self.asset_rates = Some(rates);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.spots.is_empty() || self.spots.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "spots must be positive and finite, got {:?}",
                self.spots
            )));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "maturity must be positive, got {}",
                self.maturity
            )));
        }
        if !self.r.is_finite() {
            return Err(Error::InvalidParameter("rate must be finite".into()));
        }
        if let Some(rs) = &self.asset_rates {
            if rs.len() != self.spots.len() || rs.iter().any(|r| !r.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "expected {} finite per-asset rates, got {rs:?}",
                    self.spots.len()
                )));
            }
        }
        Ok(())
    }

    pub fn emm_rate(&self) -> RiskFreeRate {
        match &self.asset_rates {
            Some(rs) => RiskFreeRate::PerAsset(rs.clone()),
            None => RiskFreeRate::Flat(self.r),
        }
    }

    pub fn discount(&self) -> f64 {
        (-self.r * self.maturity).exp()
    }
}

/// Weighted basket call `(Σ w_j S_j − K)₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffSpec {
    pub weights: Vec<f64>,
    pub strike: f64,
}

impl PayoffSpec {
    pub fn new(weights: Vec<f64>, strike: f64) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("payoff weights must be finite".into()));
        }
        if !(strike >= 0.0 && strike.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "strike must be finite and >= 0, got {strike}"
            )));
        }
        Ok(PayoffSpec { weights, strike })
    }

    /// `S₁ − S₂ − … − S_n − K`.
    pub fn spread(n: usize, strike: f64) -> Result<Self> {
        let mut w = vec![-1.0; n];
        w[0] = 1.0;
        Self::new(w, strike)
    }

    pub fn eval(&self, spots: &[f64]) -> f64 {
        payoff_eval(self, spots)
    }
}

pub fn payoff_eval(p: &PayoffSpec, s: &[f64]) -> f64 {
    let basket: f64 = p.weights.iter().zip(s).map(|(w, x)| w * x).sum();
    (basket - p.strike).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierGrid {
    points_per_dim: usize,
    center: Vec<f64>,
    halfwidth: Vec<f64>,
}

impl FourierGrid {
    pub fn new(points_per_dim: usize, center: Vec<f64>, halfwidth: Vec<f64>) -> Result<Self> {
        if points_per_dim < 64 || !points_per_dim.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 64, got {points_per_dim}"
            )));
        }
        if center.is_empty() || center.len() != halfwidth.len() {
            return Err(Error::InvalidParameter(
                "grid centre and half-width must have the same non-zero length".into(),
            ));
        }
        if center.iter().any(|c| !c.is_finite())
            || halfwidth.iter().any(|l| !(*l > 0.0 && l.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "grid needs finite centres and positive half-widths, got {center:?} / {halfwidth:?}"
            )));
        }
        Ok(FourierGrid {
            points_per_dim,
            center,
            halfwidth,
        })
    }

    /// Default grid for `U_t`: centred on the mean with half-width
    /// `max(8·sd, 1)` per axis.
    pub fn for_model(m: &BasketModel, t: f64, points_per_dim: Option<usize>) -> Result<Self> {
        let mean = m.first_cumulants(t)?;
        let cov = m.second_cumulants(t)?;
        let n = m.n();
        let halfwidth = (0..n).map(|d| (8.0 * cov[(d, d)].sqrt()).max(1.0)).collect();
        Self::new(
            points_per_dim.unwrap_or_else(|| default_points(n)),
            mean.iter().copied().collect(),
            halfwidth,
        )
    }

    pub fn with_halfwidth(self, l: f64) -> Result<Self> {
        let d = self.dim();
        Self::new(self.points_per_dim, self.center, vec![l; d])
    }

    pub fn with_points(self, n: usize) -> Result<Self> {
        Self::new(n, self.center, self.halfwidth)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }
    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn halfwidth(&self) -> &[f64] {
        &self.halfwidth
    }

    pub fn dx(&self, axis: usize) -> f64 {
        2.0 * self.halfwidth[axis] / self.points_per_dim as f64
    }

    pub fn dxi(&self, axis: usize) -> f64 {
        PI / self.halfwidth[axis]
    }

    /// Cell-centre coordinate `c − L + (j + ½)Δx`.
    pub fn node(&self, axis: usize, j: usize) -> f64 {
        self.center[axis] - self.halfwidth[axis] + (j as f64 + 0.5) * self.dx(axis)
    }

    /// Left edge of cell j (j = N gives the right end of the grid).
    pub fn edge(&self, axis: usize, j: usize) -> f64 {
        self.center[axis] - self.halfwidth[axis] + j as f64 * self.dx(axis)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.dx(d)).product()
    }

    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major multi-index of a flat index (last axis fastest).
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        let n = self.points_per_dim;
        for slot in out.iter_mut().rev() {
            *slot = flat % n;
            flat /= n;
        }
    }
}

pub fn default_points(dim: usize) -> usize {
    match dim {
        1 => 4096,
        2 => 512,
        _ => 128,
    }
}

#[derive(Debug, Clone)]
pub struct DensityTensor {
    pub values: Vec<f64>,
    pub grid: FourierGrid,
    pub t: f64,
    /// `|Σ p·ΔV − 1|`.
    pub normalization_defect: f64,
    pub min_value: f64,
}

impl DensityTensor {
    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.values) * self.grid.cell_volume()
    }

    /// Mass carried by the three outermost cells on either side of any axis.
    pub fn edge_mass(&self) -> f64 {
        let n = self.grid.points_per_dim();
        let d = self.grid.dim();
        let mut idx = vec![0; d];
        let edge: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(flat, v)| {
                self.grid.unravel(flat, &mut idx);
                if idx.iter().any(|&j| j < BOUNDARY_CELLS || j >= n - BOUNDARY_CELLS) {
                    v.abs()
                } else {
                    0.0
                }
            })
            .collect();
        pairwise_sum(&edge) * self.grid.cell_volume()
    }

    /// Density of a single axis obtained by summing out the others.
    pub fn marginal(&self, axis: usize) -> Vec<f64> {
        let n = self.grid.points_per_dim();
        let d = self.grid.dim();
        let other: f64 = (0..d).filter(|&a| a != axis).map(|a| self.grid.dx(a)).product();
        let mut out = vec![0.0; n];
        let mut idx = vec![0; d];
        for (flat, v) in self.values.iter().enumerate() {
            self.grid.unravel(flat, &mut idx);
            out[idx[axis]] += v * other;
        }
        out
    }

    /// Mean vector and covariance matrix by quadrature over the grid.
    pub fn moments(&self) -> (Vec<f64>, DMatrix<f64>) {
        let d = self.grid.dim();
        let vol = self.grid.cell_volume();
        let mut idx = vec![0; d];
        let mut mean = vec![0.0; d];
        let mut second = DMatrix::<f64>::zeros(d, d);
        let mut x = vec![0.0; d];
        for (flat, p) in self.values.iter().enumerate() {
            self.grid.unravel(flat, &mut idx);
            for a in 0..d {
                x[a] = self.grid.node(a, idx[a]);
            }
            let w = p * vol;
            for a in 0..d {
                mean[a] += w * x[a];
                for b in 0..d {
                    second[(a, b)] += w * x[a] * x[b];
                }
            }
        }
        let cov = DMatrix::from_fn(d, d, |a, b| second[(a, b)] - mean[a] * mean[b]);
        (mean, cov)
    }
}

/// Inverts `Φ` on the tensor grid `g`.
fn invert<F>(g: &FourierGrid, cf: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Complex64> + Sync,
{
    let d = g.dim();
    let n = g.points_per_dim;
    let ext = n + 1;
    let ext_len = ext.pow(d as u32);
    let half = (n / 2) as f64;
    // Phase origin: the first spatial node, c − L + Δx/2.
    let origin: Vec<f64> = (0..d).map(|a| g.node(a, 0)).collect();

    let samples: Vec<Complex64> = (0..ext_len)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut xi = [0.0_f64; MAX_TENSOR_DIM];
            let mut weight = 1.0;
            let mut phase = 0.0;
            for a in (0..d).rev() {
                let k = rem % ext;
                rem /= ext;
                xi[a] = (k as f64 - half) * g.dxi(a);
                if k == 0 || k == n {
                    weight *= 0.5;
                }
                phase -= xi[a] * origin[a];
            }
            cf(&xi[..d]).map(|phi| phi * Complex64::from_polar(weight, phase))
        })
        .collect::<Result<_>>()?;

    // Fold frequency index N onto 0: both alias to the same DFT column.
    let mut buf = vec![Complex64::new(0.0, 0.0); n.pow(d as u32)];
    let mut idx = vec![0usize; d];
    for (flat, v) in samples.iter().enumerate() {
        let mut rem = flat;
        for a in (0..d).rev() {
            idx[a] = (rem % ext) % n;
            rem /= ext;
        }
        let target = idx.iter().fold(0, |acc, &k| acc * n + k);
        buf[target] += v;
    }

    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let outer = buf.len() / (n * stride);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * n * stride + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = buf[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    buf[base + j * stride] = *v;
                }
            }
        }
    }

    let scale: f64 = (0..d).map(|a| g.dxi(a) / (2.0 * PI)).product();
    let mut out = Vec::with_capacity(buf.len());
    let mut multi = vec![0usize; d];
    for (flat, v) in buf.iter().enumerate() {
        g.unravel(flat, &mut multi);
        let parity: usize = multi.iter().sum();
        let sign = if parity.is_multiple_of(2) { 1.0 } else { -1.0 };
        out.push(sign * scale * v.re);
    }
    Ok(out)
}

fn finish(values: Vec<f64>, grid: FourierGrid, t: f64) -> Result<DensityTensor> {
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut tensor = DensityTensor {
        values,
        grid,
        t,
        normalization_defect: 0.0,
        min_value,
    };
    tensor.normalization_defect = (tensor.mass() - 1.0).abs();
    if !(tensor.normalization_defect <= NORMALIZATION_TOLERANCE) {
        return Err(Error::GridTooSmall(format!(
            "density integrates to {:.6} (defect {:.2e}); increase the half-width L or the point count N",
            tensor.mass(),
            tensor.normalization_defect
        )));
    }
    if tensor.min_value < -NEGATIVITY_TOLERANCE {
        return Err(Error::GridTooSmall(format!(
            "density undershoots to {:.2e}; increase the point count N",
            tensor.min_value
        )));
    }
    Ok(tensor)
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
    }
    Ok(())
}

pub fn density_1d(e: &dyn Exponent, t: f64, g: &FourierGrid) -> Result<DensityTensor> {
    check_horizon(t)?;
    if g.dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "density_1d needs a one-dimensional grid, got {}",
            g.dim()
        )));
    }
    if e.is_degenerate() {
        return Err(Error::Degenerate(
            "law is a point mass and has no density".into(),
        ));
    }
    let values = invert(g, |xi| Ok((-t * e.eval_real(xi[0])?).exp()))?;
    finish(values, g.clone(), t)
}

pub fn density_nd(m: &BasketModel, t: f64, g: &FourierGrid) -> Result<DensityTensor> {
    check_horizon(t)?;
    let n = m.n();
    if n > MAX_TENSOR_DIM {
        return Err(Error::Capability(format!(
            "tensor-grid densities support at most {MAX_TENSOR_DIM} assets (model has {n}); use Monte Carlo pricing (mc) instead"
        )));
    }
    if g.dim() != n {
        return Err(Error::InvalidParameter(format!(
            "grid has {} axes, model has {n} assets",
            g.dim()
        )));
    }
    let cov = m.second_cumulants(t)?;
    let eig = cov.clone().symmetric_eigenvalues();
    let scale = cov.trace().max(f64::MIN_POSITIVE);
    if eig.iter().any(|&l| l <= 1e-12 * scale) {
        return Err(Error::Degenerate(
            "joint law is supported on a lower-dimensional set and has no density".into(),
        ));
    }
    let values = invert(g, |xi| {
        let v: Vec<Complex64> = xi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        m.characteristic_function(&v, t)
    })?;
    finish(values, g.clone(), t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingOptions {
    /// Refuse models whose martingale conditions fail by more than `emm_tolerance`.
    pub enforce_emm: bool,
    pub emm_tolerance: f64,
}

impl Default for PricingOptions {
    fn default() -> Self {
        PricingOptions {
            enforce_emm: true,
            emm_tolerance: 1e-8,
        }
    }
}

/// Returns the largest EMM residual, failing when the gate is enforced and exceeded.
pub(crate) fn emm_gate(m: &BasketModel, mkt: &MarketSpec, opts: &PricingOptions) -> Result<f64> {
    let worst = match emm_residual(m, &mkt.emm_rate()) {
        Ok(res) => res.iter().fold(0.0_f64, |a, r| a.max(r.abs())),
        Err(e) if opts.enforce_emm => return Err(e),
        Err(_) => f64::NAN,
    };
    if opts.enforce_emm && !(worst <= opts.emm_tolerance) {
        return Err(Error::NotCalibrated {
            residual: worst,
            tolerance: opts.emm_tolerance,
        });
    }
    Ok(worst)
}

pub(crate) fn check_dimensions(m: &BasketModel, mkt: &MarketSpec, p: &PayoffSpec) -> Result<()> {
    mkt.validate()?;
    let n = m.n();
    if mkt.spots.len() != n || p.weights.len() != n {
        return Err(Error::InvalidParameter(format!(
            "model has {n} assets but market has {} spots and payoff {} weights",
            mkt.spots.len(),
            p.weights.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct FourierPrice {
    pub price: f64,
    pub normalization_defect: f64,
    pub min_density: f64,
    /// Discounted payoff-weighted mass within three cells of the grid boundary.
    pub truncation_loss: f64,
    pub emm_residual: f64,
    pub grid: FourierGrid,
}

/// `V = e^{−rT} Σ φ(S₀ e^{u}) p_T(u) ΔV` over the cell centres of `g`
/// (default grid when `None`).
pub fn price_basket(
    m: &BasketModel,
    mkt: &MarketSpec,
    p: &PayoffSpec,
    g: Option<&FourierGrid>,
    opts: &PricingOptions,
) -> Result<FourierPrice> {
    check_dimensions(m, mkt, p)?;
    let n = m.n();
    if n > MAX_TENSOR_DIM {
        return Err(Error::Capability(format!(
            "Fourier pricing supports at most {MAX_TENSOR_DIM} assets (model has {n}); use Monte Carlo pricing (mc) instead"
        )));
    }
    let emm_residual = emm_gate(m, mkt, opts)?;
    let grid = match g {
        Some(g) => g.clone(),
        None => FourierGrid::for_model(m, mkt.maturity, None)?,
    };
    let density = density_nd(m, mkt.maturity, &grid)?;
    let vol = grid.cell_volume();
    let big_n = grid.points_per_dim();

    let contributions: Vec<(f64, bool)> = density
        .values
        .par_iter()
        .enumerate()
        .map(|(flat, &pd)| {
            let mut idx = [0usize; MAX_TENSOR_DIM];
            grid.unravel(flat, &mut idx[..n]);
            let mut spots = [0.0; MAX_TENSOR_DIM];
            let mut edge = false;
            for a in 0..n {
                spots[a] = mkt.spots[a] * grid.node(a, idx[a]).exp();
                edge |= idx[a] < BOUNDARY_CELLS || idx[a] >= big_n - BOUNDARY_CELLS;
            }
            (payoff_eval(p, &spots[..n]) * pd * vol, edge)
        })
        .collect();
    let all: Vec<f64> = contributions.iter().map(|c| c.0).collect();
    let boundary: Vec<f64> = contributions
        .iter()
        .map(|&(v, edge)| if edge { v.abs() } else { 0.0 })
        .collect();
    let disc = mkt.discount();
    let price = disc * pairwise_sum(&all);
    let truncation_loss = disc * pairwise_sum(&boundary);
    if truncation_loss > 1e-3 * price.abs() && truncation_loss > 1e-12 {
        return Err(Error::GridTooSmall(format!(
            "payoff-weighted mass at the grid boundary is {truncation_loss:.3e} against a price of {price:.6}; increase the half-width L"
        )));
    }
    Ok(FourierPrice {
        price,
        normalization_defect: density.normalization_defect,
        min_density: density.min_value,
        truncation_loss,
        emm_residual,
        grid,
    })
}
