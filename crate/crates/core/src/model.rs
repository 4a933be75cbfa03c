//! The n-asset return model `U_t = X_t + A Z_t`.
//!
//! `X` holds n idiosyncratic one-dimensional blocks and `Z` n common factors,
//! all mutually independent. The joint exponent is
//! `Ψ(v) = Σ_s ψ_s(v_s) + Σ_m φ_m((Aᵀv)_m)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy_core::{cumulant_rates, CharExponent, Cumulants, Exponent, Strip};

/// Square real mixing matrix; entry `(j, k)` is the loading of asset j on factor k.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyMatrix(DMatrix<f64>);

impl DependencyMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "dependency matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "dependency matrix has non-finite entries".into(),
            ));
        }
        Ok(DependencyMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter(format!(
                "dependency matrix must be {n}x{n}"
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |j, k| rows[j][k]))
    }

    pub fn zeros(n: usize) -> Self {
        DependencyMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        DependencyMatrix(DMatrix::identity(n, n))
    }

    pub fn ones(n: usize) -> Self {
        DependencyMatrix(DMatrix::from_element(n, n, 1.0))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.0[(j, k)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasketModel {
    x_blocks: Vec<CharExponent>,
    z_blocks: Vec<CharExponent>,
    a: DependencyMatrix,
}

pub(crate) fn x_name(s: usize) -> String {
    format!("x_block[{s}]")
}

pub(crate) fn z_name(m: usize) -> String {
    format!("z_block[{m}]")
}

impl BasketModel {
    pub fn new(
        x_blocks: Vec<CharExponent>,
        z_blocks: Vec<CharExponent>,
        a: DependencyMatrix,
    ) -> Result<Self> {
        let n = a.n();
        if x_blocks.len() != n || z_blocks.len() != n {
            return Err(Error::InvalidParameter(format!(
                "expected {n} x_blocks and {n} z_blocks, got {} and {}",
                x_blocks.len(),
                z_blocks.len()
            )));
        }
        Ok(BasketModel {
            x_blocks,
            z_blocks,
            a,
        })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn x_blocks(&self) -> &[CharExponent] {
        &self.x_blocks
    }

    pub fn z_blocks(&self) -> &[CharExponent] {
        &self.z_blocks
    }

    pub fn dependency(&self) -> &DependencyMatrix {
        &self.a
    }

    pub(crate) fn with_x_block(&self, s: usize, block: CharExponent) -> Self {
        let mut next = self.clone();
        next.x_blocks[s] = block;
        next
    }

    /// `(Aᵀv)_m = Σ_k a_{k,m} v_k`.
    fn factor_argument(&self, v: &[Complex64], m: usize) -> Complex64 {
        v.iter()
            .enumerate()
            .map(|(k, vk)| vk * self.a.get(k, m))
            .sum()
    }

    pub fn joint_exponent(&self, v: &[Complex64]) -> Result<Complex64> {
        let n = self.n();
        if v.len() != n {
            return Err(Error::InvalidParameter(format!(
                "argument has length {}, model has {n} assets",
                v.len()
            )));
        }
        let mut total = Complex64::new(0.0, 0.0);
        for (s, (block, vs)) in self.x_blocks.iter().zip(v).enumerate() {
            block.strip().check(vs.im, &x_name(s))?;
            total += block.eval(*vs).map_err(|e| e.in_block(x_name(s)))?;
        }
        for (m, block) in self.z_blocks.iter().enumerate() {
            let arg = self.factor_argument(v, m);
            block.strip().check(arg.im, &z_name(m))?;
            total += block.eval(arg).map_err(|e| e.in_block(z_name(m)))?;
        }
        Ok(total)
    }

    /// `Φ(v, t) = exp(−t Ψ(v))`.
    pub fn characteristic_function(&self, v: &[Complex64], t: f64) -> Result<Complex64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
        }
        if t == 0.0 {
            // Still validate the argument against the strips.
            self.joint_exponent(v)?;
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok((-t * self.joint_exponent(v)?).exp())
    }

    /// One-dimensional exponent of `⟨w, U⟩`: `x ↦ Ψ(x·w)`.
    pub fn projection(&self, w: &[f64]) -> Result<ProjectedExponent> {
        let n = self.n();
        if w.len() != n {
            return Err(Error::InvalidParameter(format!(
                "projection has length {}, model has {n} assets",
                w.len()
            )));
        }
        let mut terms = Vec::with_capacity(2 * n);
        for (s, block) in self.x_blocks.iter().enumerate() {
            terms.push(Term {
                weight: w[s],
                block: *block,
                name: x_name(s),
            });
        }
        for (m, block) in self.z_blocks.iter().enumerate() {
            let weight = (0..n).map(|k| w[k] * self.a.get(k, m)).sum();
            terms.push(Term {
                weight,
                block: *block,
                name: z_name(m),
            });
        }
        Ok(ProjectedExponent { terms })
    }

    /// Exponent of the single-asset return `U_s`: `x ↦ ψ_s(x) + Σ_m φ_m(a_{s,m} x)`.
    pub fn marginal_exponent(&self, s: usize) -> Result<ProjectedExponent> {
        if s >= self.n() {
            return Err(Error::InvalidParameter(format!(
                "asset index {s} out of range for {} assets",
                self.n()
            )));
        }
        let mut e = vec![0.0; self.n()];
        e[s] = 1.0;
        self.projection(&e)
    }

    fn block_cumulants(block: &CharExponent) -> Result<Cumulants> {
        match block {
            CharExponent::Null => Ok(Cumulants {
                mean: 0.0,
                variance: 0.0,
            }),
            other => cumulant_rates(other),
        }
    }

    /// Mean vector of `U_t`.
    pub fn first_cumulants(&self, t: f64) -> Result<DVector<f64>> {
        let mx = self
            .x_blocks
            .iter()
            .map(|b| Self::block_cumulants(b).map(|c| c.mean))
            .collect::<Result<Vec<_>>>()?;
        let mz = self
            .z_blocks
            .iter()
            .map(|b| Self::block_cumulants(b).map(|c| c.mean))
            .collect::<Result<Vec<_>>>()?;
        let mz = DVector::from_vec(mz);
        Ok((DVector::from_vec(mx) + self.a.matrix() * mz) * t)
    }

    /// Covariance matrix of `U_t`:
    /// `Cov(U_s, U_l) = t(δ_{sl} varX_s + Σ_k a_{s,k} a_{l,k} varZ_k)`.
    pub fn second_cumulants(&self, t: f64) -> Result<DMatrix<f64>> {
        let vx = self
            .x_blocks
            .iter()
            .map(|b| Self::block_cumulants(b).map(|c| c.variance))
            .collect::<Result<Vec<_>>>()?;
        let vz = self
            .z_blocks
            .iter()
            .map(|b| Self::block_cumulants(b).map(|c| c.variance))
            .collect::<Result<Vec<_>>>()?;
        let a = self.a.matrix();
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vx))
            + a * DMatrix::from_diagonal(&DVector::from_vec(vz)) * a.transpose();
        // Symmetrize away rounding in the triple product.
        Ok((&cov + cov.transpose()) * (0.5 * t))
    }

    pub fn correlation(&self, s: usize, l: usize, t: f64) -> Result<f64> {
        let n = self.n();
        if s >= n || l >= n || s == l {
            return Err(Error::InvalidParameter(format!(
                "correlation needs distinct indices below {n}, got ({s}, {l})"
            )));
        }
        let cov = self.second_cumulants(t)?;
        let (vs, vl) = (cov[(s, s)], cov[(l, l)]);
        if vs <= 0.0 || vl <= 0.0 {
            return Err(Error::Degenerate(format!(
                "asset {} has zero variance",
                if vs <= 0.0 { s } else { l }
            )));
        }
        Ok((cov[(s, l)] / (vs * vl).sqrt()).clamp(-1.0, 1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Term {
    weight: f64,
    block: CharExponent,
    name: String,
}

/// Sum of scaled blocks `x ↦ Σ_j ψ_j(w_j x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedExponent {
    terms: Vec<Term>,
}

impl Exponent for ProjectedExponent {
    fn eval(&self, xi: Complex64) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            if t.weight == 0.0 {
                continue;
            }
            let arg = xi * t.weight;
            t.block.strip().check(arg.im, &t.name)?;
            total += t.block.eval(arg).map_err(|e| e.in_block(t.name.clone()))?;
        }
        Ok(total)
    }

    fn strip(&self) -> Strip {
        self.terms
            .iter()
            .fold(Strip::FULL, |acc, t| acc.intersect(&t.block.strip().pull_back(t.weight)))
    }

    fn is_degenerate(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.weight == 0.0 || t.block.is_degenerate())
    }
}
