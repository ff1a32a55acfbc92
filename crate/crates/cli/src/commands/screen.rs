//! `screen`: video-level region ranking from per-clip retrievals.

use super::{load_gallery, print_summary, read_ranked_lines, video_of_clip, RankedLine};
use crate::config::{pick, pick_opt, FileConfig};
use crate::error::{CliError, Result};
use crate::fsio;
use crossview_core::hierarchical::{screen_regions, AerialSequence};
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct ScreenArgs {
    /// Per-clip retrieval results (output of `retrieve`).
    #[arg(long)]
    pub retrievals: PathBuf,
    /// Tile embedding file the retrievals refer to.
    #[arg(long)]
    pub tile_embeddings: PathBuf,
    /// Large-region embedding file.
    #[arg(long)]
    pub region_embeddings: PathBuf,
    /// Regions to rank per video.
    #[arg(long)]
    pub k: Option<usize>,
    /// Use only the first N predicted tiles of each video.
    #[arg(long)]
    pub sequence_limit: Option<usize>,
    /// Output file, one JSON ranking line per video.
    #[arg(long)]
    pub output: PathBuf,
}

pub fn run(args: &ScreenArgs, cfg: &FileConfig) -> Result<()> {
    fsio::require_exists(&args.retrievals, "retrievals file")?;
    let retrievals = read_ranked_lines(&args.retrievals)?;
    let tiles = load_gallery(&args.tile_embeddings)?;
    let regions = load_gallery(&args.region_embeddings)?;
    let k = pick(args.k, cfg.k, 10).min(regions.len()).max(1);
    let limit = pick_opt(args.sequence_limit, cfg.sequence_limit);

    // group predicted top-1 tiles by video, in retrieval order
    let mut order: Vec<String> = Vec::new();
    let mut sequences: std::collections::BTreeMap<String, Vec<Vec<f32>>> =
        std::collections::BTreeMap::new();
    for line in &retrievals {
        let video = video_of_clip(&line.query_id)?.to_string();
        let top = line
            .ranked
            .first()
            .ok_or_else(|| CliError::Data(format!("{}: empty ranking", line.query_id)))?;
        let vector = tiles
            .vector_by_id(&top.id)
            .ok_or_else(|| CliError::Data(format!("predicted tile `{}` not in tile embeddings", top.id)))?
            .to_vec();
        let entry = sequences.entry(video.clone()).or_default();
        if entry.is_empty() {
            order.push(video);
        }
        entry.push(vector);
    }
    if order.is_empty() {
        return Err(CliError::data("no retrieval lines"));
    }

    let mut lines = Vec::with_capacity(order.len());
    for video in &order {
        let mut sequence = AerialSequence::new(video.clone(), sequences[video].clone())?;
        if let Some(limit) = limit {
            sequence = sequence.truncated(limit)?;
        }
        let ranked = screen_regions(&sequence, &regions, k)?;
        lines.push(serde_json::to_string(&RankedLine::new(
            video.clone(),
            ranked,
        ))?);
    }
    fsio::atomic_write(&args.output, |w| {
        for line in &lines {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;

    print_summary(&json!({
        "command": "screen",
        "videos": order.len(),
        "clips": retrievals.len(),
        "k": k,
        "sequence_limit": limit,
        "output": args.output.display().to_string(),
    }));
    Ok(())
}
