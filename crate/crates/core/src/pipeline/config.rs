//! Plain-text pipeline configuration: one `key = value` pair per line,
//! `#` comments, unknown keys rejected.

use crate::error::{Error, Result};
use crate::inference::ResidualSum;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Which metric space a column of objects lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Shape,
    Curve,
    Corr,
    Point,
}

impl FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shape" => Ok(SpaceKind::Shape),
            "curve" => Ok(SpaceKind::Curve),
            "corr" => Ok(SpaceKind::Corr),
            "point" => Ok(SpaceKind::Point),
            other => Err(Error::InvalidInput(format!(
                "unknown space {other:?} (expected shape|curve|corr|point)"
            ))),
        }
    }
}

impl std::fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpaceKind::Shape => "shape",
            SpaceKind::Curve => "curve",
            SpaceKind::Corr => "corr",
            SpaceKind::Point => "point",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub predictor_space: SpaceKind,
    pub response_space: SpaceKind,
    pub predictor_path: String,
    pub response_path: String,
    /// Optional covariate CSV adjoined to the predictor scores.
    pub covariate_path: Option<String>,
    /// Retained embedding dimensions; None selects the smallest dimension
    /// covering `coverage` of positive variance, capped at `dim_cap`.
    pub predictor_dims: Option<usize>,
    pub response_dims: Option<usize>,
    /// Restrict the modeled response scores to this many leading components.
    pub response_components: Option<usize>,
    pub a_max: usize,
    pub seed: u64,
    pub tol_score: Option<f64>,
    pub coverage: f64,
    pub dim_cap: usize,
    pub residuals: ResidualSum,
}

impl PipelineConfig {
    pub fn new(predictor_space: SpaceKind, response_space: SpaceKind) -> Self {
        PipelineConfig {
            predictor_space,
            response_space,
            predictor_path: String::new(),
            response_path: String::new(),
            covariate_path: None,
            predictor_dims: None,
            response_dims: None,
            response_components: None,
            a_max: 5,
            seed: 0,
            tol_score: None,
            coverage: 0.9,
            dim_cap: 10,
            residuals: ResidualSum::Squared,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut predictor_space = None;
        let mut response_space = None;
        let mut cfg = PipelineConfig::new(SpaceKind::Point, SpaceKind::Point);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::InvalidInput(format!(
                    "config line {}: bad {what} value {value:?}",
                    lineno + 1
                ))
            };
            match key {
                "predictor_space" => predictor_space = Some(value.parse::<SpaceKind>()?),
                "response_space" => response_space = Some(value.parse::<SpaceKind>()?),
                "predictor_path" => cfg.predictor_path = value.to_string(),
                "response_path" => cfg.response_path = value.to_string(),
                "covariate_path" => cfg.covariate_path = Some(value.to_string()),
                "predictor_dims" => {
                    cfg.predictor_dims = Some(value.parse().map_err(|_| bad("integer"))?)
                }
                "response_dims" => {
                    cfg.response_dims = Some(value.parse().map_err(|_| bad("integer"))?)
                }
                "response_components" => {
                    cfg.response_components = Some(value.parse().map_err(|_| bad("integer"))?)
                }
                "a_max" => cfg.a_max = value.parse().map_err(|_| bad("integer"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("integer"))?,
                "tol_score" => cfg.tol_score = Some(value.parse().map_err(|_| bad("real"))?),
                "coverage" => cfg.coverage = value.parse().map_err(|_| bad("real"))?,
                "dim_cap" => cfg.dim_cap = value.parse().map_err(|_| bad("integer"))?,
                "residuals" => {
                    cfg.residuals = match value {
                        "squared" => ResidualSum::Squared,
                        "unsquared" => ResidualSum::Unsquared,
                        _ => return Err(bad("residuals (squared|unsquared)")),
                    }
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "config line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.predictor_space = predictor_space
            .ok_or_else(|| Error::InvalidInput("config missing predictor_space".into()))?;
        cfg.response_space = response_space
            .ok_or_else(|| Error::InvalidInput("config missing response_space".into()))?;
        if cfg.a_max == 0 {
            return Err(Error::InvalidParams("a_max must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&cfg.coverage) {
            return Err(Error::InvalidParams("coverage must lie in [0, 1]".into()));
        }
        Ok(cfg)
    }

    pub fn emit(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("predictor_space = {}\n", self.predictor_space));
        out.push_str(&format!("response_space = {}\n", self.response_space));
        out.push_str(&format!("predictor_path = {}\n", self.predictor_path));
        out.push_str(&format!("response_path = {}\n", self.response_path));
        if let Some(p) = &self.covariate_path {
            out.push_str(&format!("covariate_path = {p}\n"));
        }
        if let Some(d) = self.predictor_dims {
            out.push_str(&format!("predictor_dims = {d}\n"));
        }
        if let Some(d) = self.response_dims {
            out.push_str(&format!("response_dims = {d}\n"));
        }
        if let Some(d) = self.response_components {
            out.push_str(&format!("response_components = {d}\n"));
        }
        out.push_str(&format!("a_max = {}\n", self.a_max));
        out.push_str(&format!("seed = {}\n", self.seed));
        if let Some(t) = self.tol_score {
            out.push_str(&format!("tol_score = {t:?}\n"));
        }
        out.push_str(&format!("coverage = {:?}\n", self.coverage));
        out.push_str(&format!("dim_cap = {}\n", self.dim_cap));
        out.push_str(&format!(
            "residuals = {}\n",
            match self.residuals {
                ResidualSum::Squared => "squared",
                ResidualSum::Unsquared => "unsquared",
            }
        ));
        out
    }
}
