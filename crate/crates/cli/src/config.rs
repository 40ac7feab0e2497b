//! Configuration resolution: built-in defaults, then the TOML file, then
//! command-line flags. The resolved config is echoed before any computation
//! so every run is reproducible from its logs.

use std::path::Path;

use adequacy::{AnalysisConfig, EpsFormula};

use crate::{AppError, ConfigOverrides};

pub fn load(path: Option<&Path>) -> Result<AnalysisConfig, AppError> {
    let Some(path) = path else {
        return Ok(AnalysisConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| AppError::Stage {
        stage: "config",
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    toml::from_str(&text).map_err(|e| AppError::Usage(format!("invalid config file: {e}")))
}

pub fn parse_eps_formula(name: &str) -> Result<EpsFormula, AppError> {
    match name {
        "paper" => Ok(EpsFormula::Paper),
        "dimension-root" => Ok(EpsFormula::DimensionRoot),
        other => Err(AppError::Usage(format!(
            "unknown eps-formula '{other}' (expected paper or dimension-root)"
        ))),
    }
}

pub fn apply_overrides(
    mut config: AnalysisConfig,
    seed: Option<u64>,
    overrides: &ConfigOverrides,
) -> Result<AnalysisConfig, AppError> {
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(v) = &overrides.k_candidates {
        config.k_candidates = v.clone();
    }
    if let Some(v) = overrides.rf_trees {
        config.rf_trees = v;
    }
    if let Some(v) = overrides.cv_folds {
        config.cv_folds = v;
    }
    if let Some(v) = overrides.combo_cap {
        config.combo_cap = v;
    }
    if let Some(v) = overrides.pilot_restarts {
        config.pilot_restarts = v;
    }
    if let Some(v) = overrides.shannon_bins {
        config.shannon_bins = v;
    }
    if let Some(v) = &overrides.eps_formula {
        config.eps_formula = parse_eps_formula(v)?;
    }
    if let Some(v) = overrides.boundary_corr_threshold {
        config.boundary_corr_threshold = v;
    }
    if let Some(v) = overrides.ncd_exact_limit {
        config.ncd_exact_limit = v;
    }
    if overrides.augment {
        config.augment = true;
    }
    Ok(config)
}

/// Echo the fully resolved configuration (all defaults made explicit).
pub fn echo(config: &AnalysisConfig) {
    let rendered = toml::to_string(config).unwrap_or_else(|_| "<unprintable>".to_string());
    eprintln!("resolved configuration:");
    for line in rendered.lines() {
        eprintln!("  {line}");
    }
}
