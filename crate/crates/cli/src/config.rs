//! TOML run configuration.
//!
//! Parsing happens in two passes: serde checks the schema, then [`RunConfig::build`]
//! turns the raw tables into engine objects, prefixing every engine error
//! with the config path of the offending entry.

use std::path::Path;

use kobol_basket::levy_core::{CharExponent, GaussianParams, KoBoLParams};
use kobol_basket::model::{BasketModel, DependencyMatrix};
use kobol_basket::pricing::{MarketSpec, PayoffSpec};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_PATHS: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub market: RawMarket,
    pub payoff: RawPayoff,
    pub model: RawModel,
    #[serde(default)]
    pub grid: RawGrid,
    #[serde(default)]
    pub mc: RawMc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMarket {
    pub spots: Vec<f64>,
    /// Discount rate, also the martingale rate of every asset unless `rates` is given.
    pub rate: f64,
    pub rates: Option<Vec<f64>>,
    pub maturity: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPayoff {
    pub weights: Vec<f64>,
    pub strike: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    /// Dependency matrix, one row per asset.
    pub a: Vec<Vec<f64>>,
    pub x: Vec<RawBlock>,
    pub z: Vec<RawBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum RawBlock {
    Kobol {
        nu: f64,
        c_plus: f64,
        c_minus: f64,
        lambda_plus: f64,
        lambda_minus: f64,
        #[serde(default)]
        mu: f64,
    },
    Gaussian {
        a: f64,
        #[serde(default)]
        gamma: f64,
    },
    Null,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub points: Option<usize>,
    pub halfwidth: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMc {
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub antithetic: Option<bool>,
}

/// A validated run: engine objects plus the settings that reproduce it.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: BasketModel,
    pub market: MarketSpec,
    pub payoff: PayoffSpec,
    pub grid_points: Option<usize>,
    pub grid_halfwidth: Option<f64>,
    pub paths: usize,
    pub seed: u64,
    pub antithetic: bool,
    /// SHA-256 of the config file bytes.
    pub fingerprint: String,
}

pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&bytes)
}

pub fn parse(bytes: &[u8]) -> Result<RunConfig, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|_| CliError::Config("config is not valid UTF-8".into()))?;
    if text.trim().is_empty() {
        return Err(CliError::Config("config is empty".into()));
    }
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    RunConfig::build(raw, fingerprint(bytes))
}

fn block(raw: &RawBlock, path: &str) -> Result<CharExponent, CliError> {
    let built = match *raw {
        RawBlock::Kobol {
            nu,
            c_plus,
            c_minus,
            lambda_plus,
            lambda_minus,
            mu,
        } => KoBoLParams::new(nu, c_plus, c_minus, lambda_plus, lambda_minus, mu).map(CharExponent::KoBoL),
        RawBlock::Gaussian { a, gamma } => GaussianParams::new(a, gamma).map(CharExponent::Gaussian),
        RawBlock::Null => Ok(CharExponent::Null),
    };
    built.map_err(|e| CliError::at(path, e))
}

impl RunConfig {
    pub fn build(raw: RawConfig, fingerprint: String) -> Result<Self, CliError> {
        let n = raw.market.spots.len();
        if n == 0 {
            return Err(CliError::Config("market.spots: at least one asset is required".into()));
        }
        let sized = [
            ("payoff.weights", raw.payoff.weights.len()),
            ("model.a", raw.model.a.len()),
            ("model.x", raw.model.x.len()),
            ("model.z", raw.model.z.len()),
        ];
        for (name, len) in sized {
            if len != n {
                return Err(CliError::Config(format!("{name}: expected {n} entries (one per spot), found {len}")));
            }
        }
        if let Some((i, row)) = raw.model.a.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(CliError::Config(format!("model.a[{i}]: expected {n} columns, found {}", row.len())));
        }
        if let Some(rs) = &raw.market.rates {
            if rs.len() != n {
                return Err(CliError::Config(format!("market.rates: expected {n} entries, found {}", rs.len())));
            }
        }
        if raw.mc.paths == Some(0) {
            return Err(CliError::Config("mc.paths must be positive".into()));
        }

        let x = raw
            .model
            .x
            .iter()
            .enumerate()
            .map(|(i, b)| block(b, &format!("model.x[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let z = raw
            .model
            .z
            .iter()
            .enumerate()
            .map(|(i, b)| block(b, &format!("model.z[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let a = DependencyMatrix::from_rows(&raw.model.a).map_err(|e| CliError::at("model.a", e))?;
        let model = BasketModel::new(x, z, a).map_err(|e| CliError::at("model", e))?;

        let mut market = MarketSpec::new(raw.market.spots, raw.market.rate, raw.market.maturity)
            .map_err(|e| CliError::at("market", e))?;
        if let Some(rs) = raw.market.rates {
            market = market.with_asset_rates(rs).map_err(|e| CliError::at("market.rates", e))?;
        }
        let payoff = PayoffSpec::new(raw.payoff.weights, raw.payoff.strike).map_err(|e| CliError::at("payoff", e))?;

        Ok(RunConfig {
            model,
            market,
            payoff,
            grid_points: raw.grid.points,
            grid_halfwidth: raw.grid.halfwidth,
            paths: raw.mc.paths.unwrap_or(DEFAULT_PATHS),
            seed: raw.mc.seed.unwrap_or(DEFAULT_SEED),
            antithetic: raw.mc.antithetic.unwrap_or(true),
            fingerprint,
        })
    }
}
