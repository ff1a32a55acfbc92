//! `evaluate`: the full metric protocol over retrieval results.
//!
//! Joins retrieval rankings with manifest geometry (tile centers, clip
//! labels) and a ground-truth file, prints an aligned table followed by the
//! JSON report, and optionally writes the report to a file.

use super::{print_summary, read_ranked_lines};
use crate::config::{parse_mode, pick, pick_opt, FileConfig};
use crate::error::{CliError, Result};
use crate::fsio;
use crate::manifest::{read_manifest, ManifestRecord};
use crossview_core::dataset::TileKind;
use crossview_core::geodesy::GeoPoint;
use crossview_core::metrics::{
    evaluate, EvalConfig, EvalMode, MetricsReport, Prediction, PredictionRecord, PredictionSet,
    CN_MATCH_MILES, DEFAULT_THRESHOLDS_MILES,
};
use serde_json::json;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    /// Per-query retrieval results (output of `retrieve` or `screen`).
    #[arg(long)]
    pub retrievals: PathBuf,
    /// Dataset manifest with clip labels and tile centers.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Ground-truth file: `{"clip_id", "tile_id"}` per line.
    #[arg(long)]
    pub ground_truth: PathBuf,
    /// Correctness mode: ucn (exact id) or cn (0.05-mile rule).
    #[arg(long)]
    pub mode: Option<String>,
    /// Comma-separated recall cutoffs, e.g. 1,5,10.
    #[arg(long)]
    pub k_list: Option<String>,
    /// Comma-separated mile thresholds, e.g. 0.1,0.2,0.5,1.0.
    #[arg(long)]
    pub thresholds: Option<String>,
    /// Gallery size; defaults to the matching tile count in the manifest.
    #[arg(long)]
    pub gallery_size: Option<usize>,
    /// Unreduced gallery size, for recall@1% under reduced galleries.
    #[arg(long)]
    pub full_gallery_size: Option<usize>,
    /// CN correctness radius in miles.
    #[arg(long)]
    pub cn_match_miles: Option<f64>,
    /// Optional path for the JSON report.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|_| CliError::usage(format!("bad {what} entry `{part}`")))
        })
        .collect()
}

fn render_table(report: &MetricsReport) -> String {
    let mut rows: Vec<(String, String)> = vec![
        (
            "mode".into(),
            match report.mode {
                EvalMode::Ucn => "ucn".into(),
                EvalMode::Cn => "cn".into(),
            },
        ),
        ("queries".into(), report.queries.to_string()),
        ("gallery size".into(), report.gallery_size.to_string()),
    ];
    for entry in &report.recall_at {
        rows.push((format!("R@{}", entry.k), format!("{:.4}", entry.fraction)));
    }
    match (report.recall_at_1pct, report.recall_1pct_k) {
        (Some(fraction), Some(k)) => {
            rows.push((format!("R@1% (k={k})"), format!("{fraction:.4}")));
        }
        _ => rows.push(("R@1%".into(), "-".into())),
    }
    for entry in &report.top1_at_threshold {
        rows.push((
            format!("Top-1@{}mi", entry.miles),
            format!("{:.4}", entry.fraction),
        ));
    }
    rows.push(("short rankings".into(), report.short_rankings.to_string()));

    let width = rows.iter().map(|(label, _)| label.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(label, value)| format!("{label:<width$}  {value}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn read_ground_truth(path: &Path) -> Result<BTreeMap<String, String>> {
    #[derive(serde::Deserialize)]
    struct Line {
        clip_id: String,
        tile_id: String,
    }
    let mut map = BTreeMap::new();
    for entry in fsio::read_lines(path)? {
        let (line_no, line) = entry?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line)
            .map_err(|e| CliError::Data(format!("{}: line {line_no}: {e}", path.display())))?;
        map.insert(parsed.clip_id, parsed.tile_id);
    }
    Ok(map)
}

pub fn run(args: &EvaluateArgs, cfg: &FileConfig) -> Result<()> {
    let mode_text = args
        .mode
        .clone()
        .or_else(|| cfg.mode.clone())
        .unwrap_or_else(|| "ucn".to_string());
    let mode = parse_mode(&mode_text)?;

    let retrievals = read_ranked_lines(&args.retrievals)?;
    if retrievals.is_empty() {
        return Err(CliError::data("no retrieval lines"));
    }
    let manifest = read_manifest(&args.manifest)?;
    let gt = read_ground_truth(&args.ground_truth)?;

    let mut tile_centers: BTreeMap<String, GeoPoint> = BTreeMap::new();
    let mut clip_labels: BTreeMap<String, GeoPoint> = BTreeMap::new();
    let mut ucn_tiles = 0usize;
    let mut cn_tiles = 0usize;
    for record in &manifest {
        match record {
            ManifestRecord::Tile(tile, _) => {
                match tile.kind {
                    TileKind::Ucn => ucn_tiles += 1,
                    TileKind::Cn => cn_tiles += 1,
                }
                tile_centers.insert(tile.tile_id.clone(), tile.center_gps);
            }
            ManifestRecord::Clip(clip, _) => {
                clip_labels.insert(clip.clip_id.clone(), clip.label);
            }
            _ => {}
        }
    }

    let records: Vec<PredictionRecord> = retrievals
        .into_iter()
        .map(|line| {
            let gt_id = gt.get(&line.query_id).cloned().ok_or_else(|| {
                CliError::Data(format!("query `{}` has no ground truth", line.query_id))
            })?;
            let gt_point = clip_labels.get(&line.query_id).copied().ok_or_else(|| {
                CliError::Data(format!("clip `{}` not in manifest", line.query_id))
            })?;
            let ranked = line
                .ranked
                .into_iter()
                .map(|scored| Prediction {
                    point: tile_centers.get(&scored.id).copied(),
                    id: scored.id,
                })
                .collect();
            PredictionRecord::new(line.query_id, gt_id, gt_point, ranked).map_err(Into::into)
        })
        .collect::<Result<_>>()?;
    let set = PredictionSet::new(records)?;

    let default_gallery = match mode {
        EvalMode::Ucn => ucn_tiles,
        EvalMode::Cn => cn_tiles,
    };
    let gallery_size = pick(args.gallery_size, cfg.gallery_size, default_gallery);
    if gallery_size == 0 {
        return Err(CliError::usage(
            "gallery size is zero; pass --gallery-size explicitly",
        ));
    }

    let ks = match args.k_list.as_deref() {
        Some(text) => parse_list::<usize>(text, "k")?,
        None => cfg.k_list.clone().unwrap_or_else(|| vec![1, 5, 10]),
    };
    let thresholds = match args.thresholds.as_deref() {
        Some(text) => parse_list::<f64>(text, "threshold")?,
        None => cfg
            .thresholds
            .clone()
            .unwrap_or_else(|| DEFAULT_THRESHOLDS_MILES.to_vec()),
    };

    let eval_cfg = EvalConfig {
        mode,
        ks,
        thresholds_miles: thresholds,
        gallery_size,
        full_gallery_size: pick_opt(args.full_gallery_size, cfg.full_gallery_size),
        cn_match_miles: pick(args.cn_match_miles, cfg.cn_match_miles, CN_MATCH_MILES),
        recall_percent: 1.0,
    };
    let report = evaluate(&set, &eval_cfg)?;

    println!("{}", render_table(&report));
    if let Some(path) = &args.output {
        let body = serde_json::to_string_pretty(&report)?;
        fsio::atomic_write(path, |w| {
            writeln!(w, "{body}")?;
            Ok(())
        })?;
    }
    print_summary(&json!({
        "command": "evaluate",
        "report": report,
    }));
    Ok(())
}
