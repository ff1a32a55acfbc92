//! `pipeline`: the full four-step hierarchical run, one JSON line per video.

use super::{load_gallery, print_summary};
use crate::config::{parse_policy, pick, pick_opt, FileConfig};
use crate::embfile::read_embeddings;
use crate::error::{CliError, Result};
use crate::fsio;
use crate::manifest::{read_manifest, ManifestRecord};
use crossview_core::hierarchical::{
    run_pipeline, ClipQuery, PipelineConfig, PipelineResult, RegionToTiles,
};
use serde_json::json;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, clap::Args)]
pub struct PipelineArgs {
    /// Clip (query) embedding file.
    #[arg(long)]
    pub clip_embeddings: PathBuf,
    /// Tile gallery embedding file.
    #[arg(long)]
    pub tile_embeddings: PathBuf,
    /// Large-region embedding file.
    #[arg(long)]
    pub region_embeddings: PathBuf,
    /// Dataset manifest carrying clip and tile records.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Optional ground-truth file: `{"clip_id", "tile_id"}` per line.
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    /// k for the per-clip retrievals.
    #[arg(long)]
    pub k: Option<usize>,
    /// Gallery reduction policy: full, top-n:N, or top-pct:P.
    #[arg(long)]
    pub policy: Option<String>,
    /// Regions to rank in the screening step.
    #[arg(long)]
    pub screen_k: Option<usize>,
    /// Use only the first N predicted tiles per video when screening.
    #[arg(long)]
    pub sequence_limit: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output file, one JSON pipeline result line per video.
    #[arg(long)]
    pub output: PathBuf,
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

pub fn run(args: &PipelineArgs, cfg: &FileConfig) -> Result<()> {
    let tile_gallery = load_gallery(&args.tile_embeddings)?;
    let region_gallery = load_gallery(&args.region_embeddings)?;
    let (clip_records, _) = read_embeddings(&args.clip_embeddings)?;
    let manifest = read_manifest(&args.manifest)?;
    let gt = match &args.ground_truth {
        Some(path) => Some(read_ground_truth(path)?),
        None => None,
    };

    // clip -> video from the manifest; tiles grouped by region, restricted
    // to what the tile gallery actually holds
    let mut clip_video: BTreeMap<String, String> = BTreeMap::new();
    let mut region_to_tiles = RegionToTiles::new();
    for record in &manifest {
        match record {
            ManifestRecord::Clip(clip, _) => {
                clip_video.insert(clip.clip_id.clone(), clip.video_id.clone());
            }
            ManifestRecord::Tile(tile, _) if tile_gallery.position(&tile.tile_id).is_some() => {
                region_to_tiles
                    .entry(tile.region_id.clone())
                    .or_default()
                    .push(tile.tile_id.clone());
            }
            _ => {}
        }
    }
    for region_id in region_gallery.ids() {
        if !region_to_tiles.contains_key(region_id) {
            return Err(CliError::Data(format!(
                "region `{region_id}` has no tiles in the manifest/gallery"
            )));
        }
    }
    region_to_tiles.retain(|id, _| region_gallery.position(id).is_some());

    let queries: Vec<ClipQuery> = clip_records
        .into_iter()
        .map(|rec| {
            let video_id = clip_video
                .get(&rec.id)
                .cloned()
                .ok_or_else(|| CliError::Data(format!("clip `{}` not in manifest", rec.id)))?;
            Ok(ClipQuery {
                gt_tile_id: gt.as_ref().and_then(|m| m.get(&rec.id).cloned()),
                clip_id: rec.id,
                video_id,
                vector: rec.vector,
            })
        })
        .collect::<Result<_>>()?;
    if queries.is_empty() {
        return Err(CliError::data("no clip embeddings"));
    }

    let policy_text = args
        .policy
        .clone()
        .or_else(|| cfg.policy.clone())
        .unwrap_or_else(|| "top-pct:1".to_string());
    let pipeline_cfg = PipelineConfig {
        clip_k: pick(args.k, cfg.k, 10),
        screen_k: pick(args.screen_k, cfg.screen_k, 10),
        sequence_limit: pick_opt(args.sequence_limit, cfg.sequence_limit),
        policy: parse_policy(&policy_text)?,
    };
    let workers = pick(args.workers, cfg.workers, 1).max(1);

    // videos are independent: chunk whole video groups across workers
    let mut video_order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&ClipQuery>> = BTreeMap::new();
    for q in &queries {
        let entry = groups.entry(q.video_id.as_str()).or_default();
        if entry.is_empty() {
            video_order.push(q.video_id.as_str());
        }
        entry.push(q);
    }
    let chunk_size = video_order.len().div_ceil(workers);
    let video_chunks: Vec<Vec<ClipQuery>> = video_order
        .chunks(chunk_size.max(1))
        .map(|vids| {
            vids.iter()
                .flat_map(|v| groups[v].iter().map(|q| (*q).clone()))
                .collect()
        })
        .collect();

    let outcomes: Vec<crossview_core::Result<PipelineResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = video_chunks
            .iter()
            .map(|chunk| {
                let tile_gallery = &tile_gallery;
                let region_gallery = &region_gallery;
                let region_to_tiles = &region_to_tiles;
                let pipeline_cfg = &pipeline_cfg;
                scope.spawn(move || {
                    run_pipeline(chunk, tile_gallery, region_gallery, region_to_tiles, pipeline_cfg)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("pipeline worker panicked"))
            .collect()
    });

    let mut videos = Vec::with_capacity(video_order.len());
    for outcome in outcomes {
        videos.extend(outcome?.videos);
    }

    let mut retained = 0usize;
    let mut with_gt = 0usize;
    let mut clip_count = 0usize;
    let mut lines = Vec::with_capacity(videos.len());
    for video in &videos {
        clip_count += video.clips.len();
        for clip in &video.clips {
            if let Some(kept) = clip.retained_gt {
                with_gt += 1;
                if kept {
                    retained += 1;
                }
            }
        }
        lines.push(serde_json::to_string(video)?);
    }
    fsio::atomic_write(&args.output, |w| {
        for line in &lines {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;

    print_summary(&json!({
        "command": "pipeline",
        "videos": videos.len(),
        "clips": clip_count,
        "policy": policy_text,
        "clip_k": pipeline_cfg.clip_k,
        "workers": workers,
        "retained_gt_fraction": if with_gt > 0 {
            json!(retained as f64 / with_gt as f64)
        } else {
            serde_json::Value::Null
        },
        "output": args.output.display().to_string(),
    }));
    Ok(())
}
