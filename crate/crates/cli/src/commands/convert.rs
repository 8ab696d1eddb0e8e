//! Label-space conversion commands: flatten, inject.

use crate::config::{need_path, PathsConfig};
use crate::manifest::Manifest;
use crate::util::*;
use anyhow::Result;
use clap::Args;
use serde_json::json;
use std::path::PathBuf;
use xcbridge::corpus;
use xcbridge::transfer::{self, TransferMode};

#[derive(Debug, Args)]
pub struct FlattenArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: DatasetFormat,
    /// The hierarchy being discarded.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long)]
    pub names: Option<PathBuf>,
}

pub fn flatten(args: &FlattenArgs, paths: &PathsConfig, mode: &str, out_dir: &PathBuf) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let mode = TransferMode::parse(mode)?;
    let taxonomy_path = need_path(&args.taxonomy, &paths.taxonomy, "taxonomy")?;
    let tree = corpus::parse_taxonomy(&taxonomy_path)?;
    let ds = load_dataset(&args.input, args.format, args.names.as_deref(), Some(&tree))?;
    let (out, report) = transfer::flatten(&ds, &tree, mode)?;

    let ext = args.format.extension();
    let data_path = out_path(out_dir, &format!("flattened.{ext}"));
    write_dataset(&out, &data_path, args.format)?;
    let names_path = out_path(out_dir, "label_names.txt");
    write_names(&out.label_vocab, &names_path)?;
    let report_path = out_path(out_dir, "flatten_report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n")?;
    println!(
        "flattened to {} labels ({:?}); {} documents left empty",
        thousands(out.n_labels()),
        mode,
        report.emptied_docs
    );

    let mut manifest = Manifest::new("flatten", None, json!({ "mode": format!("{mode:?}") }));
    manifest.add_input(&args.input)?;
    manifest.add_input(&taxonomy_path)?;
    manifest.add_output(&data_path)?;
    manifest.add_output(&names_path)?;
    manifest.add_output(&report_path)?;
    manifest.write(out_dir)
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "xml-repo")]
    pub format: DatasetFormat,
    /// Synthetic tree whose leaves are the dataset's labels.
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long)]
    pub names: Option<PathBuf>,
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
}

pub fn inject(args: &InjectArgs, out_dir: &PathBuf) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let tree = load_tree(&args.tree)?;
    let taxonomy = args
        .taxonomy
        .as_deref()
        .map(corpus::parse_taxonomy)
        .transpose()?;
    let ds = load_dataset(&args.input, args.format, args.names.as_deref(), taxonomy.as_ref())?;
    let (out, tree) = transfer::inject_hierarchy(&ds, &tree)?;

    let ext = args.format.extension();
    let data_path = out_path(out_dir, &format!("injected.{ext}"));
    write_dataset(&out, &data_path, args.format)?;
    let names_path = out_path(out_dir, "label_names.txt");
    write_names(&out.label_vocab, &names_path)?;
    let taxonomy_path = out_path(out_dir, "taxonomy.txt");
    corpus::write_taxonomy(&tree, &taxonomy_path)?;
    println!(
        "injected hierarchy: {} real + {} synthetic labels",
        thousands(ds.n_labels()),
        thousands(out.n_labels() - ds.n_labels())
    );

    let mut manifest = Manifest::new("inject", None, json!({}));
    manifest.add_input(&args.input)?;
    manifest.add_input(&args.tree)?;
    manifest.add_output(&data_path)?;
    manifest.add_output(&names_path)?;
    manifest.add_output(&taxonomy_path)?;
    manifest.write(out_dir)
}
