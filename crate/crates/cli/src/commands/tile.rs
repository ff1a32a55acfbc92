//! `tile`: derive regions, grid tiles, clips, and centered crops from
//! accepted videos.

use super::print_summary;
use crate::config::FileConfig;
use crate::error::{CliError, Result};
use crate::manifest::{read_manifest, write_manifest, Extras, ManifestRecord};
use crossview_core::dataset::{centered_crop, region_for_video, segment_clips, tile_grid};
use crossview_core::Error as CoreError;
use serde_json::json;
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct TileArgs {
    /// Manifest of accepted videos.
    #[arg(long)]
    pub input: PathBuf,
    /// Output manifest receiving regions, tiles, and clips.
    #[arg(long)]
    pub output: PathBuf,
}

pub fn run(args: &TileArgs, _cfg: &FileConfig) -> Result<()> {
    let records = read_manifest(&args.input)?;
    let videos: Vec<_> = records
        .into_iter()
        .filter_map(|r| match r {
            ManifestRecord::Video(v, _) => Some(v),
            _ => None,
        })
        .collect();
    if videos.is_empty() {
        return Err(CliError::data(format!(
            "{}: no video records",
            args.input.display()
        )));
    }

    let mut out = Vec::new();
    let mut overflows = Vec::new();
    let mut clip_count = 0usize;
    let mut ucn_count = 0usize;
    let mut cn_count = 0usize;
    let mut region_count = 0usize;

    for video in &videos {
        let region = match region_for_video(video) {
            Ok(region) => region,
            Err(CoreError::RegionOverflow { .. }) => {
                overflows.push(video.video_id.clone());
                continue;
            }
            Err(other) => return Err(other.into()),
        };
        region_count += 1;
        out.push(ManifestRecord::Region(region.clone(), Extras::new()));
        for tile in tile_grid(&region) {
            ucn_count += 1;
            out.push(ManifestRecord::Tile(tile, Extras::new()));
        }
        for clip in segment_clips(video) {
            let crop = centered_crop(&region, &clip.label, &clip.clip_id)?;
            clip_count += 1;
            cn_count += 1;
            out.push(ManifestRecord::Clip(clip, Extras::new()));
            out.push(ManifestRecord::Tile(crop, Extras::new()));
        }
    }

    write_manifest(&out, &args.output)?;
    print_summary(&json!({
        "command": "tile",
        "videos": videos.len(),
        "regions": region_count,
        "clips": clip_count,
        "ucn_tiles": ucn_count,
        "cn_tiles": cn_count,
        "overflow_videos": overflows,
        "output": args.output.display().to_string(),
    }));
    Ok(())
}
