//! Subcommand implementations.

pub mod build_gallery;
pub mod evaluate;
pub mod filter_videos;
pub mod loss_check;
pub mod pipeline;
pub mod retrieve;
pub mod screen;
pub mod synth;
pub mod tile;

use crate::embfile;
use crate::error::{CliError, Result};
use crossview_core::gallery::{Gallery, QueryResult, ScoredId};
use std::path::Path;

/// Prints the machine-readable summary line for a command.
pub(crate) fn print_summary(value: &serde_json::Value) {
    println!("{value}");
}

pub(crate) fn load_gallery(path: &Path) -> Result<Gallery> {
    let (records, _) = embfile::read_embeddings(path)?;
    Gallery::build(records)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// One line of `retrieve` / `screen` output.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub(crate) struct RankedLine {
    pub query_id: String,
    pub ranked: Vec<ScoredId>,
}

impl RankedLine {
    pub fn new(query_id: String, result: QueryResult) -> Self {
        Self {
            query_id,
            ranked: result.ranked,
        }
    }
}

pub(crate) fn read_ranked_lines(path: &Path) -> Result<Vec<RankedLine>> {
    let mut out = Vec::new();
    for entry in crate::fsio::read_lines(path)? {
        let (line_no, line) = entry?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RankedLine = serde_json::from_str(&line)
            .map_err(|e| CliError::Data(format!("{}: line {line_no}: {e}", path.display())))?;
        out.push(parsed);
    }
    Ok(out)
}

/// `{video_id}:{second}` is the clip id scheme; the prefix is the video.
pub(crate) fn video_of_clip(clip_id: &str) -> Result<&str> {
    clip_id
        .rsplit_once(':')
        .map(|(video, _)| video)
        .ok_or_else(|| CliError::Data(format!("clip id `{clip_id}` has no `video:second` form")))
}
