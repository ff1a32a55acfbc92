use clap::Parser;
use crossview_cli::commands::{
    build_gallery, evaluate, filter_videos, loss_check, pipeline, retrieve, screen, synth, tile,
};
use crossview_cli::config;
use std::path::PathBuf;
use std::process::ExitCode;

/// Cross-view video geo-localization toolkit: dataset geometry, exact
/// embedding retrieval, hierarchical screening, and evaluation.
#[derive(Debug, Parser)]
#[command(name = "crossview", version)]
struct Cli {
    /// JSON config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Keep videos whose mu range falls inside the selection bounds.
    FilterVideos(filter_videos::FilterVideosArgs),
    /// Derive regions, grid tiles, clips, and centered crops.
    Tile(tile::TileArgs),
    /// Validate and normalize an embedding file.
    BuildGallery(build_gallery::BuildGalleryArgs),
    /// Exact top-k retrieval of queries against a gallery.
    Retrieve(retrieve::RetrieveArgs),
    /// Rank large regions from per-clip retrievals.
    Screen(screen::ScreenArgs),
    /// Run the full four-step hierarchical pipeline.
    Pipeline(pipeline::PipelineArgs),
    /// Compute recall@k, recall@1%, and top-1@distance metrics.
    Evaluate(evaluate::EvaluateArgs),
    /// Generate a synthetic dataset with paired embeddings.
    Synth(synth::SynthArgs),
    /// Self-verify the contrastive loss and its gradient.
    LossCheck(loss_check::LossCheckArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let file_cfg = match config::load(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return err.exit_code();
        }
    };

    let outcome = match &cli.command {
        Command::FilterVideos(args) => filter_videos::run(args, &file_cfg),
        Command::Tile(args) => tile::run(args, &file_cfg),
        Command::BuildGallery(args) => build_gallery::run(args, &file_cfg),
        Command::Retrieve(args) => retrieve::run(args, &file_cfg),
        Command::Screen(args) => screen::run(args, &file_cfg),
        Command::Pipeline(args) => pipeline::run(args, &file_cfg),
        Command::Evaluate(args) => evaluate::run(args, &file_cfg),
        Command::Synth(args) => synth::run(args, &file_cfg),
        Command::LossCheck(args) => loss_check::run(args, &file_cfg),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
