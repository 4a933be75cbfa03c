//! Terminal-law Monte Carlo for `U_T = X_T + A Z_T`.
//!
//! Each one-dimensional block is sampled by inverse transform from a CDF table
//! built out of its Fourier-recovered density; the blocks are then mixed
//! through `A`. Random numbers come from ChaCha8 streams keyed by
//! `(seed, chunk index)`, so the draws for a chunk of paths do not depend on
//! which worker produces them.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levy_core::{cumulant_rates, CharExponent, Exponent};
use crate::model::BasketModel;
use crate::pricing::{check_dimensions, density_1d, emm_gate, payoff_eval, FourierGrid, MarketSpec, PayoffSpec, PricingOptions};
use crate::stats::{mean_and_std_error, pairwise_sum};

/// Paths generated from one RNG stream.
pub const CHUNK_PATHS: usize = 8192;

const SAMPLER_POINTS: usize = 4096;
const MAX_SAMPLER_POINTS: usize = 1 << 18;
const SAMPLER_SIGMAS: f64 = 10.0;
const EDGE_MASS_LIMIT: f64 = 1e-10;
const CLIP_FLOOR: f64 = -1e-6;

/// Piecewise-linear CDF on the cell edges of a Fourier grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerTable {
    knots: Vec<f64>,
    cdf: Vec<f64>,
    t: f64,
    clipped_mass: f64,
}

impl SamplerTable {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    /// Total negative density mass removed before normalisation.
    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let (x0, x1) = (self.knots[i - 1], self.knots[i]);
        if c1 <= c0 {
            return x1;
        }
        x0 + (u - c0) / (c1 - c0) * (x1 - x0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let last = self.knots.len() - 1;
        if x <= self.knots[0] {
            return 0.0;
        }
        if x >= self.knots[last] {
            return 1.0;
        }
        let i = self.knots.partition_point(|&k| k <= x);
        let (x0, x1) = (self.knots[i - 1], self.knots[i]);
        self.cdf[i - 1] + (x - x0) / (x1 - x0) * (self.cdf[i] - self.cdf[i - 1])
    }
}

/// CDF table from the clipped, renormalised density of `e` at horizon `t`.
pub fn build_sampler(e: &dyn Exponent, t: f64, g: &FourierGrid) -> Result<SamplerTable> {
    let density = density_1d(e, t, g)?;
    let dx = g.dx(0);
    let mut clipped_mass = 0.0;
    let mut masses = Vec::with_capacity(density.values.len());
    for &p in &density.values {
        if p < 0.0 {
            if p < CLIP_FLOOR {
                return Err(Error::GridTooSmall(format!(
                    "density undershoot {p:.2e} below {CLIP_FLOOR:e}; increase the point count N"
                )));
            }
            clipped_mass -= p * dx;
            masses.push(0.0);
        } else {
            masses.push(p * dx);
        }
    }
    let total = pairwise_sum(&masses);
    let n = masses.len();
    let mut cdf = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    cdf.push(0.0);
    for m in &masses {
        acc += m;
        cdf.push(acc / total);
    }
    cdf[n] = 1.0;
    let knots = (0..=n).map(|j| g.edge(0, j)).collect();
    Ok(SamplerTable {
        knots,
        cdf,
        t,
        clipped_mass,
    })
}

/// Builds a sampler on a grid centred at the mean with half-width of ten
/// standard deviations, widening until the outer cells carry no mass.
pub fn auto_sampler(e: &dyn Exponent, t: f64) -> Result<SamplerTable> {
    let c = cumulant_rates(e)?;
    let sd = (c.variance * t).sqrt();
    let mut halfwidth = SAMPLER_SIGMAS * sd;
    let mut points = SAMPLER_POINTS;
    loop {
        let grid = FourierGrid::new(points, vec![c.mean * t], vec![halfwidth])?;
        let table = build_sampler(e, t, &grid)?;
        let edge = points / 100;
        let tail = table.cdf[edge] + (1.0 - table.cdf[points - edge]);
        if tail <= EDGE_MASS_LIMIT {
            return Ok(table);
        }
        if points >= MAX_SAMPLER_POINTS {
            return Err(Error::GridTooSmall(format!(
                "sampler tails still carry {tail:.2e} at N = {points}, L = {halfwidth}"
            )));
        }
        halfwidth *= 2.0;
        points *= 2;
    }
}

#[derive(Debug, Clone)]
enum BlockSampler {
    Constant(f64),
    Table(SamplerTable),
}

impl BlockSampler {
    fn new(block: &CharExponent, t: f64) -> Result<Self> {
        match block {
            CharExponent::Null => Ok(BlockSampler::Constant(0.0)),
            CharExponent::Gaussian(p) if p.a() == 0.0 => Ok(BlockSampler::Constant(p.gamma() * t)),
            other => auto_sampler(other, t).map(BlockSampler::Table),
        }
    }

    fn draw(&self, u: f64) -> f64 {
        match self {
            BlockSampler::Constant(c) => *c,
            BlockSampler::Table(t) => t.inverse_cdf(u),
        }
    }
}

/// Samples of `U_T`, row-major (`n_paths × n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    n: usize,
    data: Vec<f64>,
}

impl Draws {
    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || !data.len().is_multiple_of(n) {
            return Err(Error::InvalidParameter(format!(
                "{} values do not form rows of width {n}",
                data.len()
            )));
        }
        Ok(Draws { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }
}

/// Uniform on the open interval (0, 1) from the top 52 bits. With 53 bits the
/// half-offset no longer fits in the mantissa and the top value rounds to 1.
fn open_uniform(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimulationOptions {
    /// Pair every path with its mirror `u ↦ 1 − u`.
    pub antithetic: bool,
}

pub fn simulate_terminal(
    m: &BasketModel,
    t: f64,
    n_paths: usize,
    seed: u64,
    opts: SimulationOptions,
) -> Result<Draws> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be positive".into()));
    }
    if opts.antithetic && !n_paths.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "antithetic sampling needs an even path count, got {n_paths}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
    }
    let n = m.n();
    let samplers: Vec<BlockSampler> = m
        .x_blocks()
        .iter()
        .chain(m.z_blocks())
        .map(|b| BlockSampler::new(b, t))
        .collect::<Result<_>>()?;
    let a = m.dependency();
    let n_chunks = n_paths.div_ceil(CHUNK_PATHS);

    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let paths = CHUNK_PATHS.min(n_paths - chunk * CHUNK_PATHS);
            let mut out = Vec::with_capacity(paths * n);
            let mut uniforms = vec![0.0; 2 * n];
            let mut blocks = vec![0.0; 2 * n];
            let mut emit = |uniforms: &[f64], out: &mut Vec<f64>| {
                for (b, (s, u)) in blocks.iter_mut().zip(samplers.iter().zip(uniforms)) {
                    *b = s.draw(*u);
                }
                let (x, z) = blocks.split_at(n);
                for s in 0..n {
                    let common: f64 = (0..n).map(|k| a.get(s, k) * z[k]).sum();
                    out.push(x[s] + common);
                }
            };
            let mut done = 0;
            while done < paths {
                for u in uniforms.iter_mut() {
                    *u = open_uniform(rng.next_u64());
                }
                emit(&uniforms, &mut out);
                done += 1;
                if opts.antithetic {
                    for u in uniforms.iter_mut() {
                        *u = 1.0 - *u;
                    }
                    emit(&uniforms, &mut out);
                    done += 1;
                }
            }
            out
        })
        .collect();

    Draws::from_rows(n, chunks.concat())
}

/// Sample mean of `exp(i⟨v, U⟩)`.
pub fn empirical_cf(draws: &Draws, v: &[f64]) -> Result<Complex64> {
    if draws.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    if v.len() != draws.dim() {
        return Err(Error::InvalidParameter(format!(
            "argument has length {}, samples have width {}",
            v.len(),
            draws.dim()
        )));
    }
    let (re, im): (Vec<f64>, Vec<f64>) = draws
        .data
        .par_chunks_exact(draws.n)
        .map(|row| {
            let phase: f64 = row.iter().zip(v).map(|(u, w)| u * w).sum();
            let (s, c) = phase.sin_cos();
            (c, s)
        })
        .unzip();
    let n = draws.len() as f64;
    Ok(Complex64::new(pairwise_sum(&re) / n, pairwise_sum(&im) / n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub antithetic: bool,
    pub pricing: PricingOptions,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            antithetic: true,
            pricing: PricingOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// Discounted sample mean of `f(S_T)` over `draws`, with its standard error.
/// With `antithetic` the rows are taken as mirrored pairs and the error is
/// computed from the pair averages, which are independent.
pub fn discounted_mean<F>(draws: &Draws, mkt: &MarketSpec, antithetic: bool, f: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let disc = mkt.discount();
    let values: Vec<f64> = draws
        .data
        .par_chunks_exact(draws.n)
        .map(|row| {
            let spots: Vec<f64> = row.iter().zip(&mkt.spots).map(|(u, s)| s * u.exp()).collect();
            disc * f(&spots)
        })
        .collect();
    if antithetic {
        let pairs: Vec<f64> = values.chunks_exact(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect();
        mean_and_std_error(&pairs)
    } else {
        mean_and_std_error(&values)
    }
}

/// `e^{−rT}` times the sample mean of the payoff.
pub fn mc_price(
    m: &BasketModel,
    mkt: &MarketSpec,
    p: &PayoffSpec,
    n_paths: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<McResult> {
    check_dimensions(m, mkt, p)?;
    emm_gate(m, mkt, &opts.pricing)?;
    let draws = simulate_terminal(
        m,
        mkt.maturity,
        n_paths,
        seed,
        SimulationOptions {
            antithetic: opts.antithetic,
        },
    )?;
    let (estimate, std_error) = discounted_mean(&draws, mkt, opts.antithetic, |s| payoff_eval(p, s));
    Ok(McResult {
        estimate,
        std_error,
        n_paths,
        seed,
    })
}
