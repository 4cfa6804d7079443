use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::clf_sdf::SdfConfig;
use crate::error::{Error, Result};
use crate::sampled_loop::LoopConfig;
use crate::smallgain::SearchConfig;

pub const BUILTINS: [&str; 3] = ["example1", "example2", "custom"];

/// Numerical tolerances shared by the synthesizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative numerical zero for gΦ, fΦ and [f,g]Φ.
    pub classification: f64,
    /// Relative width of the regime boundary band.
    pub band: f64,
    /// Peak bound (1 + slack)·Φ per interval.
    pub slack: f64,
    /// Decrease margin μ: Φ_end < Φ_start − μ·Φ_start·τ².
    pub margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            classification: 1e-7,
            band: 1e-3,
            slack: 0.5,
            margin: 1e-4,
        }
    }
}

/// Polynomials are lists of rows `[coefficient, e₁, …, eₙ]`.
pub type PolyRows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example1Params {
    /// The scalar a(x₁, x₂) in f = (a, a).
    pub a: PolyRows,
}

/// A single-input affine system ẋ = f(x) + u·g(x) with polynomial
/// components and a quadratic CLF Φ = ½xᵀPx.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomParams {
    pub f: Vec<PolyRows>,
    pub g: Vec<PolyRows>,
    /// Rows of P.
    pub clf: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "defaults::sigma")]
    pub sigma: f64,
    #[serde(default = "defaults::stop_phi")]
    pub stop_phi: f64,
    #[serde(default = "defaults::step")]
    pub step: f64,
    #[serde(default = "defaults::max_events")]
    pub max_events: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub example1: Option<Example1Params>,
    #[serde(default)]
    pub custom: Option<CustomParams>,
}

mod defaults {
    pub fn sigma() -> f64 {
        0.5
    }
    pub fn stop_phi() -> f64 {
        1e-6
    }
    pub fn step() -> f64 {
        1e-3
    }
    pub fn max_events() -> usize {
        10_000
    }
}

fn field_error(field: &str, what: &str) -> Error {
    Error::Validation(format!("{field}: {what}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(field_error(field, &format!("must be positive and finite, got {v}")))
    }
}

impl ScenarioConfig {
    /// A builtin scenario with every default filled in.
    pub fn builtin(name: &str) -> Result<Self> {
        let cfg = ScenarioConfig {
            scenario: name.to_string(),
            x0: None,
            sigma: defaults::sigma(),
            stop_phi: defaults::stop_phi(),
            step: defaults::step(),
            max_events: defaults::max_events(),
            seed: 0,
            output_dir: None,
            tolerances: Tolerances::default(),
            example1: None,
            custom: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// State dimension implied by the scenario.
    pub fn state_dim(&self) -> Option<usize> {
        match self.scenario.as_str() {
            "example1" | "example2" => Some(2),
            "custom" => self.custom.as_ref().map(|c| c.f.len()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !BUILTINS.contains(&self.scenario.as_str()) {
            return Err(field_error(
                "scenario",
                &format!("unknown scenario {:?}; expected one of {}", self.scenario, BUILTINS.join(", ")),
            ));
        }
        positive("sigma", self.sigma)?;
        positive("stop_phi", self.stop_phi)?;
        positive("step", self.step)?;
        if self.max_events == 0 {
            return Err(field_error("max_events", "must be at least 1"));
        }
        let t = &self.tolerances;
        positive("tolerances.classification", t.classification)?;
        positive("tolerances.band", t.band)?;
        positive("tolerances.slack", t.slack)?;
        positive("tolerances.margin", t.margin)?;
        if self.scenario == "custom" && self.custom.is_none() {
            return Err(field_error("custom", "scenario \"custom\" needs a [custom] section"));
        }
        if self.example1.is_some() && self.scenario != "example1" {
            return Err(field_error("example1", "section only applies to scenario \"example1\""));
        }
        if let Some(x0) = &self.x0 {
            if x0.iter().any(|v| !v.is_finite()) {
                return Err(field_error("x0", "entries must be finite"));
            }
            if let Some(n) = self.state_dim() {
                if x0.len() != n {
                    return Err(field_error("x0", &format!("expected {n} entries, got {}", x0.len())));
                }
            }
        }
        Ok(())
    }

    pub fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            sigma: self.sigma,
            stop_phi: self.stop_phi,
            max_events: self.max_events,
            step: self.step,
        }
    }

    pub fn sdf_config(&self) -> SdfConfig {
        SdfConfig {
            tol_rel: self.tolerances.classification,
            mu: self.tolerances.margin,
            slack: self.tolerances.slack,
            ..SdfConfig::default()
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            mu: self.tolerances.margin,
            slack: self.tolerances.slack,
            band_rel: self.tolerances.band,
            ..SearchConfig::default()
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse and validate a TOML scenario document.
pub fn load_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}
