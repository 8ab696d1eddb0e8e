//! Command-line pipeline: dataset ingestion and statistics, TF-IDF
//! features, label embeddings, tree building and segmentation, label-space
//! conversion, classifier training/prediction, and evaluation.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod commands;
mod config;
mod manifest;
mod util;

use anyhow::Result;
use clap::{Parser, Subcommand};
use commands::{convert, data, eval, model, treeops};
use config::FileConfig;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "xcbridge", version, about = "Dataset and label-tree toolkit for multi-label classification")]
struct Cli {
    /// TOML file of defaults; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = automatic).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory artifacts are written to.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Transfer mode for flatten: full or leaf.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Node budget for segment.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Beam width for train/predict.
    #[arg(long, global = true)]
    beam: Option<usize>,
    /// Ranking length for predict.
    #[arg(long, global = true)]
    top_k: Option<usize>,
    /// Precision cutoffs for evaluate, e.g. --ks 1,2,3,5.
    #[arg(long, global = true, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    /// Branching plan for build-tree, e.g. --plan 512,8.
    #[arg(long, global = true)]
    plan: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a dataset, optionally subsample it, and rewrite it canonically.
    Ingest(data::IngestArgs),
    /// Print label/split counts and the mean labels per document.
    Stats(data::StatsArgs),
    /// Fit TF-IDF on a text corpus and write sparse feature files.
    Tfidf(data::TfidfArgs),
    /// Embed labels by aggregating their positive documents.
    Pifa(treeops::PifaArgs),
    /// Cluster label embeddings into a hierarchical tree.
    BuildTree(treeops::BuildTreeArgs),
    /// Split a tree into sub-trees under a node budget.
    Segment(treeops::SegmentArgs),
    /// Discard a taxonomy, keeping all labels or only leaves.
    Flatten(convert::FlattenArgs),
    /// Graft a synthetic tree's labels onto a flat dataset.
    Inject(convert::InjectArgs),
    /// Train the tree classifier.
    Train(model::TrainArgs),
    /// Rank labels for every document with beam search.
    Predict(model::PredictArgs),
    /// Score rankings against ground truth.
    Evaluate(eval::EvaluateArgs),
    /// Print several evaluation reports as one table.
    Compare(eval::CompareArgs),
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            classify(&err)
        }
    }
}

fn classify(err: &anyhow::Error) -> i32 {
    if let Some(e) = err.downcast_ref::<xcbridge::Error>() {
        return match e {
            xcbridge::Error::InvalidArgument { .. } => 1,
            _ => 2,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    3
}

fn dispatch(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let seed = config::merge(cli.seed, file.seed, 0);
    let workers = config::merge(cli.workers, file.workers, 0);
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .ok();
    }
    let out_dir = config::merge(cli.out_dir.clone(), file.out_dir.clone(), PathBuf::from("out"));
    let mode = config::merge(cli.mode.clone(), file.mode.clone(), "full".to_string());
    let budget = config::merge(cli.budget, file.budget, 512);
    let beam = config::merge(cli.beam, file.beam, 10);
    let top_k = config::merge(cli.top_k, file.top_k, 5);
    let ks = config::merge(cli.ks.clone(), file.ks.clone(), vec![1, 2, 3, 5]);
    config::check_ks(&ks)?;

    match &cli.command {
        Command::Ingest(args) => data::ingest(args, seed, &out_dir),
        Command::Stats(args) => {
            data::stats(args, &file.paths, cli.out_dir.or(file.out_dir).as_ref())
        }
        Command::Tfidf(args) => data::tfidf(args, &file.paths, &out_dir),
        Command::Pifa(args) => treeops::pifa(args, &out_dir),
        Command::BuildTree(args) => {
            let plan = args
                .plan
                .clone()
                .or_else(|| cli.plan.clone())
                .or_else(|| file.plan.clone())
                .ok_or_else(|| anyhow::anyhow!("build-tree needs --plan (e.g. --plan 512,8)"))?;
            treeops::build_tree(args, &plan, seed, &out_dir)
        }
        Command::Segment(args) => treeops::segment(args, budget, &out_dir),
        Command::Flatten(args) => convert::flatten(args, &file.paths, &mode, &out_dir),
        Command::Inject(args) => convert::inject(args, &out_dir),
        Command::Train(args) => {
            let config = config::plt_config(
                &file.plt,
                args.epochs,
                args.learning_rate,
                args.l2,
                args.negative_cap,
                beam,
                seed,
            );
            model::train(args, &file.paths, config, &out_dir)
        }
        Command::Predict(args) => model::predict(args, beam, top_k, &out_dir),
        Command::Evaluate(args) => eval::evaluate(args, &file.paths, &ks, &out_dir),
        Command::Compare(args) => eval::compare(args),
    }
}
