//! One-dimensional characteristic exponents.
//!
//! Every exponent follows the convention `E[exp(i ξ X_t)] = exp(-t ψ(ξ))`.
//! Two parametric families are provided: the KoBoL (tempered stable) family
//! with jump density
//!
//! ```text
//! Π(dx) = c₊ x^{-ν-1} e^{λ₋ x} 1{x>0} dx + c₋ |x|^{-ν-1} e^{-λ₊ |x|} 1{x<0} dx,   λ₋ < 0 < λ₊
//! ```
//!
//! and the Gaussian family `ψ(ξ) = a ξ²/2 − iγξ`. A brute-force
//! Lévy–Khintchine integrator ([`lk_exponent_numeric`]) evaluates the exponent
//! of an arbitrary jump density and is used to check the closed forms.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use libm::tgamma as gamma;

use crate::error::{Error, Result, StripBound};
use crate::quad::{self, Tolerance};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Open interval of admissible imaginary parts `Im ξ` for an exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strip {
    pub lo: f64,
    pub hi: f64,
}

impl Strip {
    pub const FULL: Strip = Strip {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Strip { lo, hi }
    }

    pub fn contains(&self, im: f64) -> bool {
        self.lo < im && im < self.hi
    }

    pub fn check(&self, im: f64, block: &str) -> Result<()> {
        if im <= self.lo || im.is_nan() {
            Err(Error::StripViolation {
                block: block.to_string(),
                im,
                bound: StripBound::Lower,
                limit: self.lo,
            })
        } else if im >= self.hi {
            Err(Error::StripViolation {
                block: block.to_string(),
                im,
                bound: StripBound::Upper,
                limit: self.hi,
            })
        } else {
            Ok(())
        }
    }

    pub fn intersect(&self, other: &Strip) -> Strip {
        Strip {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    /// Strip of `x ↦ ψ(w·x)` given the strip of `ψ`.
    pub fn pull_back(&self, w: f64) -> Strip {
        if w == 0.0 {
            Strip::FULL
        } else if w > 0.0 {
            Strip::new(self.lo / w, self.hi / w)
        } else {
            Strip::new(self.hi / w, self.lo / w)
        }
    }

    /// Distance from the real axis to the nearest strip edge.
    pub fn half_width(&self) -> f64 {
        (-self.lo).min(self.hi)
    }
}

impl fmt::Display for Strip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// Anything that can be evaluated as a one-dimensional characteristic exponent.
pub trait Exponent: Send + Sync {
    fn eval(&self, xi: Complex64) -> Result<Complex64>;

    fn strip(&self) -> Strip;

    /// True when the law is a point mass (no density exists).
    fn is_degenerate(&self) -> bool {
        false
    }

    fn eval_real(&self, xi: f64) -> Result<Complex64> {
        self.eval(Complex64::new(xi, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoBoLParams {
    nu: f64,
    c_plus: f64,
    c_minus: f64,
    lambda_plus: f64,
    lambda_minus: f64,
    mu: f64,
}

impl KoBoLParams {
    pub fn new(
        nu: f64,
        c_plus: f64,
        c_minus: f64,
        lambda_plus: f64,
        lambda_minus: f64,
        mu: f64,
    ) -> Result<Self> {
        let all_finite = [nu, c_plus, c_minus, lambda_plus, lambda_minus, mu]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidParameter(
                "KoBoL parameters must be finite".into(),
            ));
        }
        if !(nu > 0.0 && nu < 2.0) || nu == 1.0 {
            return Err(Error::InvalidParameter(format!(
                "KoBoL order nu = {nu} must lie in (0,1) or (1,2)"
            )));
        }
        if c_plus <= 0.0 || c_minus <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "KoBoL intensities must be positive (c_plus = {c_plus}, c_minus = {c_minus})"
            )));
        }
        if !(lambda_minus < 0.0 && 0.0 < lambda_plus) {
            return Err(Error::InvalidParameter(format!(
                "KoBoL tempering requires lambda_minus < 0 < lambda_plus (got {lambda_minus}, {lambda_plus})"
            )));
        }
        Ok(KoBoLParams {
            nu,
            c_plus,
            c_minus,
            lambda_plus,
            lambda_minus,
            mu,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn c_plus(&self) -> f64 {
        self.c_plus
    }
    pub fn c_minus(&self) -> f64 {
        self.c_minus
    }
    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }
    pub fn lambda_minus(&self) -> f64 {
        self.lambda_minus
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn with_mu(self, mu: f64) -> Self {
        KoBoLParams { mu, ..self }
    }

    pub fn strip(&self) -> Strip {
        Strip::new(self.lambda_minus, self.lambda_plus)
    }

    /// Variance per unit time, `Γ(2−ν)(c₊(−λ₋)^{ν−2} + c₋λ₊^{ν−2})`.
    pub fn variance_rate(&self) -> f64 {
        gamma(2.0 - self.nu)
            * (self.c_plus * (-self.lambda_minus).powf(self.nu - 2.0)
                + self.c_minus * self.lambda_plus.powf(self.nu - 2.0))
    }

    /// Mean per unit time, `μ + Γ(1−ν)(c₊(−λ₋)^{ν−1} − c₋λ₊^{ν−1})`.
    pub fn mean_rate(&self) -> f64 {
        self.mu
            + gamma_one_minus(self.nu)
                * (self.c_plus * (-self.lambda_minus).powf(self.nu - 1.0)
                    - self.c_minus * self.lambda_plus.powf(self.nu - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    a: f64,
    gamma: f64,
}

impl GaussianParams {
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        if !a.is_finite() || !gamma.is_finite() || a < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Gaussian block needs finite a >= 0 and finite gamma (got a = {a}, gamma = {gamma})"
            )));
        }
        Ok(GaussianParams { a, gamma })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn with_gamma(self, gamma: f64) -> Self {
        GaussianParams { gamma, ..self }
    }
}

/// `Γ(1−ν)` for ν ∈ (0,2)\{1}, using only Γ on positive arguments.
fn gamma_one_minus(nu: f64) -> f64 {
    if nu < 1.0 {
        gamma(1.0 - nu)
    } else {
        gamma(2.0 - nu) / (1.0 - nu)
    }
}

/// `Γ(−ν)` for ν ∈ (0,1) ∪ (1,2), via the recursion `Γ(z+1) = zΓ(z)` from a
/// positive argument.
pub fn gamma_neg(nu: f64) -> f64 {
    if nu < 1.0 {
        gamma(1.0 - nu) / (-nu)
    } else {
        gamma(2.0 - nu) / (nu * (nu - 1.0))
    }
}

/// Closed-form KoBoL exponent
/// `−iμξ + c₊Γ(−ν)((−λ₋)^ν − (−λ₋−iξ)^ν) + c₋Γ(−ν)(λ₊^ν − (λ₊+iξ)^ν)`.
pub fn kobol_exponent(p: &KoBoLParams, xi: Complex64) -> Result<Complex64> {
    p.strip().check(xi.im, "KoBoL")?;
    let g = gamma_neg(p.nu);
    let lm = -p.lambda_minus;
    let lp = p.lambda_plus;
    let right = Complex64::new(lm.powf(p.nu), 0.0) - (lm - I * xi).powf(p.nu);
    let left = Complex64::new(lp.powf(p.nu), 0.0) - (lp + I * xi).powf(p.nu);
    Ok(-I * p.mu * xi + g * (p.c_plus * right + p.c_minus * left))
}

pub fn gaussian_exponent(p: &GaussianParams, xi: Complex64) -> Complex64 {
    0.5 * p.a * xi * xi - I * p.gamma * xi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CharExponent {
    KoBoL(KoBoLParams),
    Gaussian(GaussianParams),
    Null,
}

impl CharExponent {
    pub fn family(&self) -> &'static str {
        match self {
            CharExponent::KoBoL(_) => "kobol",
            CharExponent::Gaussian(_) => "gaussian",
            CharExponent::Null => "null",
        }
    }

    /// Free drift parameter (μ for KoBoL, γ for Gaussian).
    pub fn drift(&self) -> Option<f64> {
        match self {
            CharExponent::KoBoL(p) => Some(p.mu),
            CharExponent::Gaussian(p) => Some(p.gamma),
            CharExponent::Null => None,
        }
    }

    pub fn with_drift(&self, drift: f64) -> Option<CharExponent> {
        match self {
            CharExponent::KoBoL(p) => Some(CharExponent::KoBoL(p.with_mu(drift))),
            CharExponent::Gaussian(p) => Some(CharExponent::Gaussian(p.with_gamma(drift))),
            CharExponent::Null => None,
        }
    }
}

impl Exponent for CharExponent {
    fn eval(&self, xi: Complex64) -> Result<Complex64> {
        match self {
            CharExponent::KoBoL(p) => kobol_exponent(p, xi),
            CharExponent::Gaussian(p) => Ok(gaussian_exponent(p, xi)),
            CharExponent::Null => Ok(Complex64::new(0.0, 0.0)),
        }
    }

    fn strip(&self) -> Strip {
        strip_of(self)
    }

    fn is_degenerate(&self) -> bool {
        match self {
            CharExponent::Null => true,
            CharExponent::Gaussian(p) => p.a == 0.0,
            CharExponent::KoBoL(_) => false,
        }
    }
}

pub fn strip_of(e: &CharExponent) -> Strip {
    match e {
        CharExponent::KoBoL(p) => p.strip(),
        CharExponent::Gaussian(_) | CharExponent::Null => Strip::FULL,
    }
}

pub fn is_finite_variation(p: &KoBoLParams) -> bool {
    p.nu < 1.0
}

/// A jump density on ℝ\{0} prepared for numeric Lévy–Khintchine integration.
#[derive(Clone)]
pub struct LevyDensitySpec {
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    cutoff: f64,
    activity: f64,
}

impl fmt::Debug for LevyDensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyDensitySpec")
            .field("cutoff", &self.cutoff)
            .field("activity", &self.activity)
            .finish_non_exhaustive()
    }
}

impl LevyDensitySpec {
    pub fn new<F>(density: F, cutoff: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cutoff must be positive and finite, got {cutoff}"
            )));
        }
        Ok(LevyDensitySpec {
            density: Arc::new(density),
            cutoff,
            activity: 0.0,
        })
    }

    /// Declares that the density behaves like `|x|^{-1-α}` near the origin.
    /// The integrator uses this to remove the endpoint singularity.
    pub fn with_activity(mut self, alpha: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "activity index {alpha} must lie in [0, 2)"
            )));
        }
        self.activity = alpha;
        Ok(self)
    }

    /// Jump density of a KoBoL block, truncated where the tempering factor
    /// falls below `e^{-40}`.
    pub fn kobol(p: &KoBoLParams) -> Self {
        let KoBoLParams {
            nu,
            c_plus,
            c_minus,
            lambda_plus,
            lambda_minus,
            ..
        } = *p;
        let density = move |x: f64| {
            if x > 0.0 {
                c_plus * x.powf(-nu - 1.0) * (lambda_minus * x).exp()
            } else {
                let y = -x;
                c_minus * y.powf(-nu - 1.0) * (-lambda_plus * y).exp()
            }
        };
        LevyDensitySpec {
            density: Arc::new(density),
            cutoff: 40.0 / lambda_plus.min(-lambda_minus),
            activity: nu,
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn density(&self, x: f64) -> f64 {
        (self.density)(x)
    }
}

/// `e^{iz} − 1 − iz`, switching to its Taylor series where the direct form cancels.
fn expm1_minus_linear(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        -0.5 * z2 - I * z2 * z / 6.0 + z2 * z2 / 24.0
    } else {
        (I * z).exp() - 1.0 - I * z
    }
}

/// Lévy–Khintchine exponent
/// `a ξ²/2 − i b ξ − ∫ (e^{ixξ} − 1 − ixξ 1{|x|≤1}) Π(dx)` by adaptive quadrature.
///
/// On `[0, 1]` the substitution `x = y^{1/(2−α)}` flattens the `x^{1−α}`
/// behaviour of the integrand at the origin, so the quadrature never sees the
/// singularity of the density itself.
pub fn lk_exponent_numeric(
    spec: &LevyDensitySpec,
    a: f64,
    b: f64,
    xi: Complex64,
    tol: Tolerance,
) -> Result<Complex64> {
    let cutoff = spec.cutoff;
    let inner = cutoff.min(1.0);
    let power = 1.0 / (2.0 - spec.activity);
    let inner_y = inner.powf(2.0 - spec.activity);

    let mut jump = Complex64::new(0.0, 0.0);
    for sign in [1.0_f64, -1.0] {
        let near = |y: f64| {
            if y <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let r = y.powf(power);
            let x = sign * r;
            let jac = power * r / y;
            expm1_minus_linear(x * xi) * spec.density(x) * jac
        };
        jump += quad::integrate(near, 0.0, inner_y, tol)?.value;
        if cutoff > 1.0 {
            let far = |r: f64| {
                let x = sign * r;
                ((I * x * xi).exp() - 1.0) * spec.density(x)
            };
            jump += quad::integrate(far, 1.0, cutoff, tol)?.value;
        }
    }
    Ok(0.5 * a * xi * xi - I * b * xi - jump)
}

fn check_tempering(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tempering rate must be positive, got {lambda}"
        )));
    }
    Ok(())
}

/// `B(ν,λ) = ∫₀¹ x^{-ν} e^{-λx} dx` for ν < 1, λ > 0.
pub fn incomplete_b(nu: f64, lambda: f64) -> Result<f64> {
    if !(nu < 1.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "B(nu, lambda) needs nu < 1 for integrability, got nu = {nu}"
        )));
    }
    check_tempering(lambda)?;
    // x = y^{1/(1-ν)} turns x^{-ν}dx into dy/(1-ν).
    let p = 1.0 / (1.0 - nu);
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-13,
        max_intervals: 2000,
    };
    let v = quad::integrate_real(|y| (-lambda * y.powf(p)).exp(), 0.0, 1.0, tol)?;
    Ok(p * v)
}

/// Drift constant separating the closed-form KoBoL exponent from the
/// Lévy–Khintchine form with truncation function `1{|x|≤1}`, for one
/// half-line with tempering `λ`: `Γ(1−ν)λ^{ν−1} − ∫₁^∞ x^{-ν}e^{-λx}dx`.
/// Coincides with [`incomplete_b`] when ν < 1.
pub fn compensator_drift(nu: f64, lambda: f64) -> Result<f64> {
    if nu < 1.0 {
        return incomplete_b(nu, lambda);
    }
    if !(nu < 2.0) || nu == 1.0 {
        return Err(Error::InvalidParameter(format!(
            "compensator drift needs nu in (0,1) or (1,2), got {nu}"
        )));
    }
    check_tempering(lambda)?;
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-13,
        max_intervals: 2000,
    };
    let upper = 1.0 + 60.0 / lambda;
    let tail = quad::integrate_real(|x| x.powf(-nu) * (-lambda * x).exp(), 1.0, upper, tol)?;
    Ok(gamma_one_minus(nu) * lambda.powf(nu - 1.0) - tail)
}

/// Linear coefficient `d` such that the Lévy–Khintchine exponent of the KoBoL
/// jump density equals `kobol_exponent(μ=0)(ξ) + i d ξ`.
pub fn kobol_lk_drift(p: &KoBoLParams) -> Result<f64> {
    Ok(p.c_plus * compensator_drift(p.nu, -p.lambda_minus)?
        - p.c_minus * compensator_drift(p.nu, p.lambda_plus)?)
}

/// First two cumulants per unit time of a one-dimensional exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulants {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance rates by central differences of ψ at 0 with a
/// Richardson tableau in `h²`. The base step scales with the strip half-width
/// so the difference quotients stay inside the disc of analyticity.
pub fn cumulant_rates(e: &dyn Exponent) -> Result<Cumulants> {
    const LEVELS: usize = 5;
    let h0 = 0.02 * e.strip().half_width().min(50.0);
    let mut mean_tab = [[0.0_f64; LEVELS]; LEVELS];
    let mut var_tab = [[0.0_f64; LEVELS]; LEVELS];
    for k in 0..LEVELS {
        let h = h0 / (1u32 << k) as f64;
        let plus = e.eval_real(h)?;
        let minus = e.eval_real(-h)?;
        // ψ(ξ) = −iκ₁ξ + κ₂ξ²/2 + …
        mean_tab[k][0] = -(plus - minus).im / (2.0 * h);
        var_tab[k][0] = (plus + minus).re / (h * h);
        let mut factor = 1.0;
        for j in 1..=k {
            factor *= 4.0;
            mean_tab[k][j] =
                mean_tab[k][j - 1] + (mean_tab[k][j - 1] - mean_tab[k - 1][j - 1]) / (factor - 1.0);
            var_tab[k][j] =
                var_tab[k][j - 1] + (var_tab[k][j - 1] - var_tab[k - 1][j - 1]) / (factor - 1.0);
        }
    }
    Ok(Cumulants {
        mean: mean_tab[LEVELS - 1][LEVELS - 1],
        variance: var_tab[LEVELS - 1][LEVELS - 1].max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sym_fixture() -> KoBoLParams {
        KoBoLParams::new(0.5, 1.0, 1.0, 5.0, -5.0, 0.0).unwrap()
    }

    #[test]
    fn kobol_vanishes_at_origin() {
        let p = KoBoLParams::new(1.3, 0.7, 2.1, 3.0, -4.0, 0.25).unwrap();
        assert_eq!(kobol_exponent(&p, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn kobol_fixture_value() {
        // Frozen from a 30-digit evaluation of the Lévy–Khintchine integral.
        let v = kobol_exponent(&sym_fixture(), c(1.0, 0.0)).unwrap();
        assert!((v.re - 0.078_296_004_875_784_21).abs() < 1e-14);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn kobol_rejects_points_outside_strip() {
        let p = sym_fixture();
        match kobol_exponent(&p, c(0.0, -5.0)) {
            Err(Error::StripViolation { bound, limit, .. }) => {
                assert_eq!(bound, StripBound::Lower);
                assert_eq!(limit, -5.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        match kobol_exponent(&p, c(1.0, 5.5)) {
            Err(Error::StripViolation { bound, .. }) => assert_eq!(bound, StripBound::Upper),
            other => panic!("unexpected {other:?}"),
        }
        assert!(kobol_exponent(&p, c(1.0, -4.99)).is_ok());
    }

    #[test]
    fn kobol_constructor_rejects_bad_params() {
        assert!(KoBoLParams::new(1.0, 1.0, 1.0, 5.0, -5.0, 0.0).is_err());
        assert!(KoBoLParams::new(2.0, 1.0, 1.0, 5.0, -5.0, 0.0).is_err());
        assert!(KoBoLParams::new(0.5, 0.0, 1.0, 5.0, -5.0, 0.0).is_err());
        assert!(KoBoLParams::new(0.5, 1.0, 1.0, 5.0, 1.0, 0.0).is_err());
        assert!(KoBoLParams::new(0.5, 1.0, 1.0, -1.0, -5.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_examples() {
        let p = GaussianParams::new(0.04, 0.0).unwrap();
        assert_eq!(gaussian_exponent(&p, c(0.0, 0.0)), c(0.0, 0.0));
        let p = GaussianParams::new(0.04, 0.01).unwrap();
        let v = gaussian_exponent(&p, c(0.0, -1.0));
        assert!((v - c(-0.03, 0.0)).norm() < 1e-15);
        let p = GaussianParams::new(1.0, 0.0).unwrap();
        assert_eq!(gaussian_exponent(&p, c(2.0, 0.0)), c(2.0, 0.0));
        assert!(GaussianParams::new(-0.1, 0.0).is_err());
    }

    #[test]
    fn finite_variation_criterion() {
        let p = |nu| KoBoLParams::new(nu, 1.0, 1.0, 5.0, -5.0, 0.0).unwrap();
        assert!(is_finite_variation(&p(0.5)));
        assert!(!is_finite_variation(&p(1.5)));
        assert!(is_finite_variation(&p(0.999)));
    }

    #[test]
    fn strips() {
        let k = CharExponent::KoBoL(sym_fixture());
        assert_eq!(strip_of(&k), Strip::new(-5.0, 5.0));
        let g = CharExponent::Gaussian(GaussianParams::new(1.0, 0.0).unwrap());
        assert_eq!(strip_of(&g), Strip::FULL);
        assert_eq!(strip_of(&CharExponent::Null), Strip::FULL);
        assert_eq!(CharExponent::Null.eval(c(3.0, 100.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn pull_back_flips_for_negative_weight() {
        let s = Strip::new(-2.0, 4.0);
        assert_eq!(s.pull_back(2.0), Strip::new(-1.0, 2.0));
        assert_eq!(s.pull_back(-2.0), Strip::new(-2.0, 1.0));
        assert_eq!(s.pull_back(0.0), Strip::FULL);
    }

    #[test]
    fn gamma_neg_matches_recursion() {
        // Γ(−0.5) = −2√π
        let expected = -2.0 * std::f64::consts::PI.sqrt();
        assert!((gamma_neg(0.5) - expected).abs() < 1e-13);
        // Γ(−1.5) = 4√π/3
        let expected = 4.0 * std::f64::consts::PI.sqrt() / 3.0;
        assert!((gamma_neg(1.5) - expected).abs() < 1e-13);
    }

    #[test]
    fn lk_trivial_cases() {
        let zero = LevyDensitySpec::new(|_| 0.0, 1.0).unwrap();
        let tol = Tolerance::default();
        let v = lk_exponent_numeric(&zero, 1.0, 0.0, c(3.0, 0.0), tol).unwrap();
        assert!((v - c(4.5, 0.0)).norm() < 1e-15);
        let v = lk_exponent_numeric(&zero, 0.0, 1.0, c(1.0, 0.0), tol).unwrap();
        assert!((v - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn lk_matches_closed_form_symmetric_fixture() {
        let p = sym_fixture();
        let spec = LevyDensitySpec::kobol(&p);
        let drift = kobol_lk_drift(&p).unwrap();
        for xi in [0.5, 1.0, 2.0, 4.0] {
            let z = c(xi, 0.0);
            let numeric = lk_exponent_numeric(&spec, 0.0, 0.0, z, Tolerance::default()).unwrap();
            let closed = kobol_exponent(&p, z).unwrap() + I * drift * z;
            assert!(
                (numeric - closed).norm() <= 1e-6 * closed.norm(),
                "xi = {xi}: {numeric} vs {closed}"
            );
        }
    }

    #[test]
    fn incomplete_b_examples() {
        assert!((incomplete_b(0.0, 1e-12).unwrap() - 1.0).abs() < 1e-9);
        let e = 1.0 - (-1.0f64).exp();
        assert!((incomplete_b(0.0, 1.0).unwrap() - e).abs() < 1e-14);
        // 30-digit reference: 1.19628801332260818881433983062
        let v = incomplete_b(0.5, 2.0).unwrap();
        assert!((v - 1.196_288_013_322_608_2).abs() < 1e-12);
        assert!(incomplete_b(1.0, 1.0).is_err());
        assert!(incomplete_b(1.4, 1.0).is_err());
    }

    #[test]
    fn kobol_closed_form_cumulants_agree_with_differences() {
        let p = KoBoLParams::new(0.5, 1.0, 1.0, 5.0, -5.0, 0.0).unwrap();
        let c = cumulant_rates(&CharExponent::KoBoL(p)).unwrap();
        assert!((c.variance - p.variance_rate()).abs() < 1e-8 * p.variance_rate());
        assert!(c.mean.abs() < 1e-10);

        let p = KoBoLParams::new(1.4, 2.0, 0.5, 3.0, -6.0, 0.1).unwrap();
        let c = cumulant_rates(&CharExponent::KoBoL(p)).unwrap();
        assert!((c.variance - p.variance_rate()).abs() < 1e-8 * p.variance_rate());
        assert!((c.mean - p.mean_rate()).abs() < 1e-8 * p.mean_rate().abs().max(1.0));
    }

    #[test]
    fn gaussian_cumulants_exact() {
        let g = CharExponent::Gaussian(GaussianParams::new(0.09, -0.3).unwrap());
        let c = cumulant_rates(&g).unwrap();
        assert!((c.variance - 0.09).abs() < 1e-12);
        assert!((c.mean + 0.3).abs() < 1e-12);
    }

    fn kobol_strategy() -> impl Strategy<Value = KoBoLParams> {
        (
            prop_oneof![0.05f64..0.95, 1.05f64..1.95],
            0.1f64..3.0,
            0.1f64..3.0,
            0.5f64..10.0,
            0.5f64..10.0,
            -1.0f64..1.0,
        )
            .prop_map(|(nu, cp, cm, lp, lm, mu)| KoBoLParams::new(nu, cp, cm, lp, -lm, mu).unwrap())
    }

    proptest! {
        #[test]
        fn kobol_hermitian_and_dissipative(p in kobol_strategy(), xi in -20.0f64..20.0) {
            let e = CharExponent::KoBoL(p);
            let plus = e.eval_real(xi).unwrap();
            let minus = e.eval_real(-xi).unwrap();
            prop_assert!((minus - plus.conj()).norm() <= 1e-12 * plus.norm().max(1.0));
            prop_assert!(plus.re >= -1e-12 * plus.norm().max(1.0));
        }

        #[test]
        fn incomplete_b_monotone(nu in -0.5f64..0.9, dnu in 0.01f64..0.09, lambda in 0.1f64..20.0, dl in 0.01f64..2.0) {
            let base = incomplete_b(nu, lambda).unwrap();
            prop_assert!(incomplete_b(nu, lambda + dl).unwrap() < base);
            prop_assert!(incomplete_b(nu + dnu, lambda).unwrap() > base);
        }
    }
}
