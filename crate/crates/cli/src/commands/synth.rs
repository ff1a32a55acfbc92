//! `synth`: write a complete synthetic dataset to a directory.

use super::print_summary;
use crate::config::{parse_pair, pick, FileConfig};
use crate::embfile::write_embeddings;
use crate::error::Result;
use crate::fsio;
use crate::manifest::{write_manifest, Extras, ManifestRecord};
use crossview_core::synth::{generate_dataset, SynthConfig};
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Directory receiving the dataset files.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub videos: Option<usize>,
    #[arg(long)]
    pub clips_per_video: Option<usize>,
    #[arg(long)]
    pub regions: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Region signature strength in [0, 1].
    #[arg(long)]
    pub strength: Option<f64>,
    /// Target mu range, e.g. 0.0012,0.0038.
    #[arg(long)]
    pub mu_target: Option<String>,
    /// Latitude band for region centers, e.g. 25,33.
    #[arg(long)]
    pub lat_band: Option<String>,
    /// Longitude band for region centers, e.g. -118,-80.
    #[arg(long)]
    pub lon_band: Option<String>,
}

pub fn run(args: &SynthArgs, cfg: &FileConfig) -> Result<()> {
    let defaults = SynthConfig::default();
    let synth_cfg = SynthConfig {
        seed: pick(args.seed, cfg.seed, defaults.seed),
        n_videos: pick(args.videos, cfg.videos, defaults.n_videos),
        clips_per_video: pick(args.clips_per_video, cfg.clips_per_video, defaults.clips_per_video),
        n_regions: pick(args.regions, cfg.regions, defaults.n_regions),
        dim: pick(args.dim, cfg.dim, defaults.dim),
        noise_sigma: pick(args.noise_sigma, cfg.noise_sigma, defaults.noise_sigma),
        region_signature_strength: pick(args.strength, cfg.strength, defaults.region_signature_strength),
        lat_band: match &args.lat_band {
            Some(text) => parse_pair(text)?,
            None => cfg.lat_band.unwrap_or(defaults.lat_band),
        },
        lon_band: match &args.lon_band {
            Some(text) => parse_pair(text)?,
            None => cfg.lon_band.unwrap_or(defaults.lon_band),
        },
        mu_target: match &args.mu_target {
            Some(text) => parse_pair(text)?,
            None => defaults.mu_target,
        },
    };

    let dataset = generate_dataset(&synth_cfg)?;
    std::fs::create_dir_all(&args.out_dir)?;

    let videos_path = args.out_dir.join("videos.jsonl");
    let video_records: Vec<ManifestRecord> = dataset
        .videos
        .iter()
        .map(|v| ManifestRecord::Video(v.clone(), Extras::new()))
        .collect();
    write_manifest(&video_records, &videos_path)?;

    let dataset_path = args.out_dir.join("dataset.jsonl");
    let mut records = video_records;
    records.extend(
        dataset
            .regions
            .iter()
            .map(|r| ManifestRecord::Region(r.clone(), Extras::new())),
    );
    records.extend(
        dataset
            .clips
            .iter()
            .map(|c| ManifestRecord::Clip(c.clone(), Extras::new())),
    );
    records.extend(
        dataset
            .tiles
            .iter()
            .map(|t| ManifestRecord::Tile(t.clone(), Extras::new())),
    );
    write_manifest(&records, &dataset_path)?;

    let clips_path = args.out_dir.join("clips.bin");
    write_embeddings(&dataset.clip_embeddings, true, &clips_path)?;
    let tiles_path = args.out_dir.join("tiles.bin");
    write_embeddings(&dataset.tile_embeddings, true, &tiles_path)?;
    let regions_path = args.out_dir.join("regions.bin");
    write_embeddings(&dataset.region_embeddings, true, &regions_path)?;

    let gt_path = args.out_dir.join("ground_truth.jsonl");
    fsio::atomic_write(&gt_path, |w| {
        for (clip_id, tile_id) in &dataset.clip_gt {
            writeln!(
                w,
                "{}",
                json!({"clip_id": clip_id, "tile_id": tile_id})
            )?;
        }
        Ok(())
    })?;

    print_summary(&json!({
        "command": "synth",
        "seed": synth_cfg.seed,
        "videos": dataset.videos.len(),
        "clips": dataset.clips.len(),
        "regions": dataset.regions.len(),
        "ucn_tiles": dataset.tile_embeddings.len(),
        "dim": synth_cfg.dim,
        "noise_sigma": synth_cfg.noise_sigma,
        "strength": synth_cfg.region_signature_strength,
        "files": {
            "videos": videos_path.display().to_string(),
            "dataset": dataset_path.display().to_string(),
            "clips": clips_path.display().to_string(),
            "tiles": tiles_path.display().to_string(),
            "regions": regions_path.display().to_string(),
            "ground_truth": gt_path.display().to_string(),
        },
    }));
    Ok(())
}
