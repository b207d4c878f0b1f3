//! Run configuration: a flat TOML file with explicit grids. Unknown keys are
//! rejected so a typo in an efficiency grid fails fast instead of silently
//! running defaults.

use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;

use rdiqkd_core::npo::EntropyOptions;
use rdiqkd_core::protocols::{table1_spec, ProtocolName, ProtocolSpec};
use rdiqkd_core::sdp::SolverSettings;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Subgradient steps spent tightening each node certificate.
    #[serde(default = "default_polish_steps")]
    pub polish_steps: usize,
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    50_000
}

fn default_polish_steps() -> usize {
    400
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            polish_steps: default_polish_steps(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Protocol family name, e.g. "rBB84" or "CHSH".
    pub protocol: String,
    /// Short-path efficiency grid.
    pub eta_s: Vec<f64>,
    /// Long-path efficiency grid.
    pub eta_l: Vec<f64>,
    #[serde(default = "default_visibility")]
    pub visibility: Vec<f64>,
    /// Number of quadrature nodes.
    pub m: usize,
    /// Override the protocol's relaxation level.
    pub level: Option<usize>,
    /// Override the protocol's extra monomial patterns.
    pub extras: Option<Vec<String>>,
    /// Override whether B's testing statistics are binned.
    pub bin_b_testing: Option<bool>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Default output path for sweep CSV.
    pub out: Option<PathBuf>,
    /// Result cache directory; caching is off when unset.
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_visibility() -> Vec<f64> {
    vec![1.0]
}

fn default_workers() -> usize {
    1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| format!("config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), String> {
        ProtocolName::from_str(&self.protocol).map_err(|e| e.to_string())?;
        for (name, grid) in [
            ("eta_s", &self.eta_s),
            ("eta_l", &self.eta_l),
            ("visibility", &self.visibility),
        ] {
            if grid.is_empty() {
                return Err(format!("{name} grid is empty"));
            }
            if grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(format!("{name} values must lie in [0, 1]"));
            }
        }
        if self.m < 2 {
            return Err("m must be at least 2".into());
        }
        if self.workers == 0 {
            return Err("workers must be positive".into());
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err("solver.tol must be positive and solver.max_iter nonzero".into());
        }
        Ok(())
    }

    /// Protocol row with the config's overrides applied.
    pub fn spec(&self) -> ProtocolSpec {
        let mut spec = table1_spec(ProtocolName::from_str(&self.protocol).unwrap());
        if let Some(level) = self.level {
            spec.level = level;
        }
        if let Some(extras) = &self.extras {
            spec.extra_monomials = extras.clone();
        }
        if let Some(bin) = self.bin_b_testing {
            spec.bin_b_testing = bin;
        }
        spec
    }

    pub fn opts(&self) -> EntropyOptions {
        EntropyOptions::from_spec(&self.spec())
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            polish_steps: self.solver.polish_steps,
            ..Default::default()
        }
    }

    /// Human-readable relaxation label, e.g. "2+ABZ+AZB".
    pub fn level_string(&self) -> String {
        let spec = self.spec();
        let mut s = spec.level.to_string();
        for e in &spec.extra_monomials {
            s.push('+');
            s.push_str(e);
        }
        s
    }
}
