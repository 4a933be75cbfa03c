#![allow(dead_code)]

use kobol_basket::calibration::adjust_drifts;
use kobol_basket::levy_core::{CharExponent, GaussianParams, KoBoLParams};
use kobol_basket::model::{BasketModel, DependencyMatrix};

pub fn gauss(a: f64) -> CharExponent {
    CharExponent::Gaussian(GaussianParams::new(a, 0.0).unwrap())
}

pub fn kobol(nu: f64, cp: f64, cm: f64, lp: f64, lm: f64) -> CharExponent {
    CharExponent::KoBoL(KoBoLParams::new(nu, cp, cm, lp, lm, 0.0).unwrap())
}

/// One Gaussian asset with variance rate `sigma²`, drift-adjusted to `r`.
pub fn black_scholes(sigma: f64, r: f64) -> BasketModel {
    let m = BasketModel::new(vec![gauss(sigma * sigma)], vec![CharExponent::Null], DependencyMatrix::zeros(1)).unwrap();
    adjust_drifts(&m, &r.into()).unwrap()
}

/// Two correlated Gaussian assets: idiosyncratic parts plus one shared factor.
pub fn bivariate_gaussian(s1: f64, s2: f64, rho: f64, r: f64) -> BasketModel {
    let a = DependencyMatrix::from_rows(&[vec![s1, 0.0], vec![rho * s2, 0.0]]).unwrap();
    let x = vec![gauss(0.0), gauss(s2 * s2 * (1.0 - rho * rho))];
    let z = vec![gauss(1.0), CharExponent::Null];
    let m = BasketModel::new(x, z, a).unwrap();
    adjust_drifts(&m, &r.into()).unwrap()
}

pub fn mixed_two(r: f64) -> BasketModel {
    let m = BasketModel::new(
        vec![kobol(0.5, 1.0, 1.0, 5.0, -5.0), gauss(0.02)],
        vec![gauss(0.03), kobol(1.3, 0.3, 0.4, 6.0, -7.0)],
        DependencyMatrix::from_rows(&[vec![1.0, 0.5], vec![0.6, -0.8]]).unwrap(),
    )
    .unwrap();
    adjust_drifts(&m, &r.into()).unwrap()
}

pub fn mixed_three(r: f64) -> BasketModel {
    let m = BasketModel::new(
        vec![kobol(0.7, 0.8, 0.9, 6.0, -5.0), gauss(0.01), kobol(1.5, 0.05, 0.05, 8.0, -8.0)],
        vec![gauss(0.02), kobol(0.4, 0.5, 0.6, 7.0, -6.0), gauss(0.015)],
        DependencyMatrix::from_rows(&[vec![1.0, 0.4, -0.3], vec![0.5, 0.9, 0.2], vec![-0.2, 0.3, 1.1]]).unwrap(),
    )
    .unwrap();
    adjust_drifts(&m, &r.into()).unwrap()
}

/// Every block has unit variance rate and `A` is all ones.
pub fn unit_loading(n: usize) -> BasketModel {
    BasketModel::new(vec![gauss(1.0); n], vec![gauss(1.0); n], DependencyMatrix::ones(n)).unwrap()
}
