use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use taxoforge::pipeline::complete_taxonomy_with_dump;
use taxoforge::{load_corpus, PipelineConfig, Taxonomy};

/// Complete a partial topic hierarchy from a corpus.
#[derive(Parser, Debug)]
#[command(name = "taxoforge", version)]
struct Args {
    /// Corpus file, one whitespace-tokenized document per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Tab-indented outline of known topic names.
    #[arg(long)]
    hierarchy: PathBuf,
    /// Where to write the completed taxonomy as JSON.
    #[arg(long)]
    out: PathBuf,
    /// Optional `term<TAB>score` phrase-quality file.
    #[arg(long)]
    integrity: Option<PathBuf>,
    /// Flat key=value file overriding defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for per-node embeddings and term tables.
    #[arg(long)]
    dump_debug: Option<PathBuf>,
}

fn build_config(args: &Args) -> Result<PipelineConfig, String> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        cfg.apply_overrides(&text).map_err(|e| e.to_string())?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.embed.workers = w;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run(args: &Args, cfg: &PipelineConfig) -> taxoforge::Result<()> {
    let corpus = load_corpus(&args.corpus, args.integrity.as_deref())?;
    let text = fs::read_to_string(&args.hierarchy).map_err(|e| taxoforge::Error::Io {
        path: args.hierarchy.clone(),
        source: e,
    })?;
    let partial = Taxonomy::parse(&text, &corpus)?;
    let done = complete_taxonomy_with_dump(&corpus, &partial, cfg, args.dump_debug.as_deref())?;
    let json = done.taxonomy.serialize(&corpus, cfg.top_k_output)?;
    fs::write(&args.out, json).map_err(|e| taxoforge::Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("taxoforge: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&args, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("taxoforge: {e}");
            ExitCode::from(1)
        }
    }
}
