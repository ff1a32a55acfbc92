//! `retrieve`: exact top-k search of query embeddings against a gallery.

use super::{load_gallery, print_summary, RankedLine};
use crate::batch::top_k_batch;
use crate::config::{pick, FileConfig};
use crate::embfile::read_embeddings;
use crate::error::Result;
use crate::fsio;
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct RetrieveArgs {
    /// Gallery embedding file.
    #[arg(long)]
    pub gallery: PathBuf,
    /// Query embedding file.
    #[arg(long)]
    pub queries: PathBuf,
    /// Results per query (clamped to the gallery size).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output file, one JSON result line per query.
    #[arg(long)]
    pub output: PathBuf,
}

pub fn run(args: &RetrieveArgs, cfg: &FileConfig) -> Result<()> {
    fsio::require_exists(&args.gallery, "gallery file")?;
    fsio::require_exists(&args.queries, "query file")?;
    let gallery = load_gallery(&args.gallery)?;
    let (query_records, _) = read_embeddings(&args.queries)?;

    let k = pick(args.k, cfg.k, 10).min(gallery.len()).max(1);
    let workers = pick(args.workers, cfg.workers, 1);

    let ids: Vec<String> = query_records.iter().map(|r| r.id.clone()).collect();
    let vectors: Vec<Vec<f32>> = query_records.into_iter().map(|r| r.vector).collect();
    let results = top_k_batch(&gallery, &vectors, k, workers)?;

    let lines: Vec<String> = ids
        .into_iter()
        .zip(results)
        .map(|(id, result)| serde_json::to_string(&RankedLine::new(id, result)))
        .collect::<std::result::Result<_, _>>()?;
    fsio::atomic_write(&args.output, |w| {
        for line in &lines {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;

    print_summary(&json!({
        "command": "retrieve",
        "queries": lines.len(),
        "gallery_size": gallery.len(),
        "dim": gallery.dim(),
        "k": k,
        "workers": workers,
        "output": args.output.display().to_string(),
    }));
    Ok(())
}
