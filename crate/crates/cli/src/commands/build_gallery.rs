//! `build-gallery`: validate and normalize an embedding file.

use super::print_summary;
use crate::config::FileConfig;
use crate::embfile::{read_embeddings, write_embeddings};
use crate::error::{CliError, Result};
use crossview_core::gallery::{EmbeddingRecord, Gallery};
use serde_json::json;
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct BuildGalleryArgs {
    /// Input embedding file (normalized or not).
    #[arg(long)]
    pub input: PathBuf,
    /// Output embedding file with unit vectors and the normalized flag set.
    #[arg(long)]
    pub output: PathBuf,
}

pub fn run(args: &BuildGalleryArgs, _cfg: &FileConfig) -> Result<()> {
    let (records, _) = read_embeddings(&args.input)?;
    let gallery = Gallery::build(records)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let normalized: Vec<EmbeddingRecord> = gallery
        .iter()
        .map(|(id, vector)| EmbeddingRecord::new(id, vector.to_vec()))
        .collect();
    write_embeddings(&normalized, true, &args.output)?;
    print_summary(&json!({
        "command": "build-gallery",
        "count": gallery.len(),
        "dim": gallery.dim(),
        "vector_bytes": gallery.vector_bytes(),
        "output": args.output.display().to_string(),
    }));
    Ok(())
}
