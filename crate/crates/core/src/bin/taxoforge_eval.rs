use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use taxoforge::eval::{generate_synthetic_corpus, score_prediction, GroundTruth, PlantedCorpusSpec};
use taxoforge::{Error, NodeJson, Result};

#[derive(Parser, Debug)]
#[command(name = "taxoforge-eval", version, about = "Planted corpora and taxonomy scoring")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a planted corpus, its input hierarchy and ground truth.
    Synth {
        /// JSON spec; missing fields take their defaults.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Topic to leave out of the input hierarchy (repeatable).
        #[arg(long)]
        delete: Vec<String>,
    },
    /// Score a completed taxonomy against a ground truth file.
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Synth { spec, out, delete } => {
            let spec: PlantedCorpusSpec = serde_json::from_str(&read(&spec)?)?;
            let synth = generate_synthetic_corpus(&spec)?;
            let deleted: Vec<&str> = delete.iter().map(String::as_str).collect();
            fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            write(&out.join("corpus.txt"), &synth.corpus_text())?;
            write(&out.join("hierarchy.txt"), &synth.outline(&deleted)?)?;
            let truth = synth.ground_truth(&deleted)?;
            write(&out.join("truth.json"), &(serde_json::to_string_pretty(&truth)? + "\n"))?;
            let summary = serde_json::json!({
                "num_docs": synth.corpus.num_docs(),
                "vocab_size": synth.corpus.vocab_size(),
                "topics": synth.topics.len(),
                "deleted": truth.deleted,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Cmd::Score { pred, truth } => {
            let pred: NodeJson = serde_json::from_str(&read(&pred)?)?;
            let truth: GroundTruth = serde_json::from_str(&read(&truth)?)?;
            println!("{}", serde_json::to_string_pretty(&score_prediction(&pred, &truth))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(args.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("taxoforge-eval: {e}");
            ExitCode::from(1)
        }
    }
}
