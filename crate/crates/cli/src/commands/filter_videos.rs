//! `filter-videos`: apply the mu-range selection rule to a video manifest.

use super::print_summary;
use crate::config::{pick, FileConfig};
use crate::error::{CliError, Result};
use crate::manifest::{read_manifest, write_manifest, ManifestRecord};
use crossview_core::geodesy::{gps_range_mu, MU_LOWER_DEGREES, MU_UPPER_DEGREES};
use serde_json::json;
use std::path::PathBuf;

const HISTOGRAM_BIN_DEGREES: f64 = 0.0005;
const HISTOGRAM_BINS: usize = 12;

#[derive(Debug, clap::Args)]
pub struct FilterVideosArgs {
    /// Input manifest with video records.
    #[arg(long)]
    pub input: PathBuf,
    /// Output manifest receiving the accepted videos.
    #[arg(long)]
    pub output: PathBuf,
    /// Lower mu bound in degrees (inclusive).
    #[arg(long)]
    pub mu_min: Option<f64>,
    /// Upper mu bound in degrees (inclusive).
    #[arg(long)]
    pub mu_max: Option<f64>,
}

pub fn run(args: &FilterVideosArgs, cfg: &FileConfig) -> Result<()> {
    let lo = pick(args.mu_min, cfg.mu_min, MU_LOWER_DEGREES);
    let hi = pick(args.mu_max, cfg.mu_max, MU_UPPER_DEGREES);
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(CliError::usage(format!("bad mu range [{lo}, {hi}]")));
    }

    let records = read_manifest(&args.input)?;
    let mut accepted = Vec::new();
    let mut rejected = 0usize;
    let mut ignored = 0usize;
    let mut histogram = [0usize; HISTOGRAM_BINS + 1];
    let mut total = 0usize;

    for record in records {
        let ManifestRecord::Video(video, extras) = record else {
            ignored += 1;
            continue;
        };
        total += 1;
        let mu = gps_range_mu(&video.points())?.mu;
        let bin = ((mu / HISTOGRAM_BIN_DEGREES) as usize).min(HISTOGRAM_BINS);
        histogram[bin] += 1;
        if mu >= lo && mu <= hi {
            accepted.push(ManifestRecord::Video(video, extras));
        } else {
            rejected += 1;
        }
    }

    if total == 0 {
        return Err(CliError::data(format!(
            "{}: no video records",
            args.input.display()
        )));
    }

    write_manifest(&accepted, &args.output)?;

    let bins: Vec<serde_json::Value> = histogram
        .iter()
        .enumerate()
        .map(|(i, count)| {
            let lo = i as f64 * HISTOGRAM_BIN_DEGREES;
            let hi = if i == HISTOGRAM_BINS {
                serde_json::Value::Null
            } else {
                json!((i + 1) as f64 * HISTOGRAM_BIN_DEGREES)
            };
            json!({"mu_lo": lo, "mu_hi": hi, "count": count})
        })
        .collect();
    print_summary(&json!({
        "command": "filter-videos",
        "total": total,
        "accepted": accepted.len(),
        "rejected": rejected,
        "ignored_records": ignored,
        "mu_min": lo,
        "mu_max": hi,
        "mu_histogram": bins,
        "output": args.output.display().to_string(),
    }));
    Ok(())
}
