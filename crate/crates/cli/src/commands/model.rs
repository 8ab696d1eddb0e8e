//! Classifier commands: train, predict.

use crate::config::{need_path, PathsConfig};
use crate::manifest::Manifest;
use crate::util::*;
use anyhow::Result;
use clap::Args;
use serde_json::json;
use std::path::PathBuf;
use xcbridge::plt::{self, PltConfig};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training dataset with features.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub names: Option<PathBuf>,
    /// Tree whose leaves are the dataset's labels.
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub learning_rate: Option<f32>,
    #[arg(long)]
    pub l2: Option<f32>,
    #[arg(long)]
    pub negative_cap: Option<usize>,
}

pub fn train(
    args: &TrainArgs,
    paths: &PathsConfig,
    config: PltConfig,
    out_dir: &PathBuf,
) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let train_path = need_path(&args.train, &paths.train, "train")?;
    let ds = load_dataset(&train_path, DatasetFormat::XmlRepo, args.names.as_deref(), None)?;
    let tree = load_tree(&args.tree)?;
    let model = plt::train(&ds, &tree, config)?;

    let model_path = out_path(out_dir, "model.bin");
    plt::save_model(&model, &model_path)?;
    println!(
        "trained {} node models over {} features",
        thousands(model.tree.n_nodes() - 1),
        thousands(model.feature_dim)
    );

    let mut manifest = Manifest::new("train", Some(config.seed), json!({ "config": config }));
    manifest.add_input(&train_path)?;
    manifest.add_input(&args.tree)?;
    manifest.add_output(&model_path)?;
    manifest.write(out_dir)
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset to score.
    #[arg(long)]
    pub input: PathBuf,
}

pub fn predict(args: &PredictArgs, beam: usize, top_k: usize, out_dir: &PathBuf) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let model = plt::load_model(&args.model)?;
    let ds = load_dataset(&args.input, DatasetFormat::XmlRepo, None, None)?;
    let preds = plt::predict_all(&model, &ds, beam, top_k)?;

    let pred_path = out_path(out_dir, "predictions.txt");
    write_predictions(&preds, &pred_path)?;
    println!(
        "predicted {} rankings (beam {beam}, top {top_k})",
        thousands(preds.len())
    );

    let mut manifest = Manifest::new(
        "predict",
        None,
        json!({ "beam": beam, "top_k": top_k }),
    );
    manifest.add_input(&args.model)?;
    manifest.add_input(&args.input)?;
    manifest.add_output(&pred_path)?;
    manifest.write(out_dir)
}
