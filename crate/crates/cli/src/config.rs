//! Optional JSON config file; command-line flags always win.

use crate::error::{CliError, Result};
use crossview_core::hierarchical::ReductionPolicy;
use crossview_core::metrics::EvalMode;
use std::path::Path;

/// Flat config mirroring the long flag names. Anything absent falls back to
/// the flag, then to the built-in default.
#[derive(Debug, Clone, Default, serde::Deserialize)]
pub struct FileConfig {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub k_list: Option<Vec<usize>>,
    pub thresholds: Option<Vec<f64>>,
    pub mode: Option<String>,
    pub policy: Option<String>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub screen_k: Option<usize>,
    pub sequence_limit: Option<usize>,
    pub videos: Option<usize>,
    pub clips_per_video: Option<usize>,
    pub regions: Option<usize>,
    pub dim: Option<usize>,
    pub noise_sigma: Option<f64>,
    pub strength: Option<f64>,
    pub lat_band: Option<(f64, f64)>,
    pub lon_band: Option<(f64, f64)>,
    pub tau: Option<f64>,
    pub cn_match_miles: Option<f64>,
    pub gallery_size: Option<usize>,
    pub full_gallery_size: Option<usize>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
        }
    }
}

/// Flag beats config beats default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_opt<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

/// Accepted forms: `full`, `top-n:N`, `top-pct:P`.
pub fn parse_policy(text: &str) -> Result<ReductionPolicy> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("full") {
        return Ok(ReductionPolicy::TopPercent(100.0));
    }
    if let Some(rest) = text.strip_prefix("top-n:") {
        let n: usize = rest
            .parse()
            .map_err(|_| CliError::usage(format!("bad policy count in `{text}`")))?;
        return Ok(ReductionPolicy::TopN(n));
    }
    if let Some(rest) = text.strip_prefix("top-pct:") {
        let pct: f64 = rest
            .parse()
            .map_err(|_| CliError::usage(format!("bad policy percentage in `{text}`")))?;
        return Ok(ReductionPolicy::TopPercent(pct));
    }
    Err(CliError::usage(format!(
        "unknown policy `{text}`; expected full, top-n:N, or top-pct:P"
    )))
}

pub fn parse_mode(text: &str) -> Result<EvalMode> {
    match text.to_ascii_lowercase().as_str() {
        "ucn" => Ok(EvalMode::Ucn),
        "cn" => Ok(EvalMode::Cn),
        other => Err(CliError::usage(format!(
            "unknown mode `{other}`; expected ucn or cn"
        ))),
    }
}

/// Parses `lo,hi` pairs used by the band flags.
pub fn parse_pair(text: &str) -> Result<(f64, f64)> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| CliError::usage(format!("expected `lo,hi`, got `{text}`")))?;
    let lo = lo
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("bad number in `{text}`")))?;
    let hi = hi
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("bad number in `{text}`")))?;
    Ok((lo, hi))
}
