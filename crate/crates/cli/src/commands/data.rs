//! Dataset-level commands: ingest, stats, tfidf.

use crate::config::{need_path, PathsConfig};
use crate::manifest::Manifest;
use crate::util::*;
use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde_json::json;
use std::path::PathBuf;
use xcbridge::corpus::{self, Dataset};
use xcbridge::features;

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Dataset file to validate and rewrite canonically.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "xml-repo")]
    pub format: DatasetFormat,
    /// Taxonomy fixing the label vocabulary of a text corpus.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Names file overriding the numeric vocabulary of a sparse file.
    #[arg(long)]
    pub names: Option<PathBuf>,
    /// Draw a training subsample of this size.
    #[arg(long)]
    pub subsample_train: Option<usize>,
    /// Also draw a disjoint validation sample of this size.
    #[arg(long, requires = "subsample_train")]
    pub subsample_val: Option<usize>,
}

pub fn ingest(args: &IngestArgs, seed: u64, out_dir: &PathBuf) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let taxonomy = args
        .taxonomy
        .as_deref()
        .map(corpus::parse_taxonomy)
        .transpose()?;
    let ds = load_dataset(&args.input, args.format, args.names.as_deref(), taxonomy.as_ref())?;

    let mut manifest = Manifest::new(
        "ingest",
        Some(seed),
        json!({
            "input": args.input,
            "format": format!("{:?}", args.format),
            "subsample_train": args.subsample_train,
            "subsample_val": args.subsample_val,
        }),
    );
    manifest.add_input(&args.input)?;
    if let Some(t) = &args.taxonomy {
        manifest.add_input(t)?;
    }

    let ext = args.format.extension();
    if let Some(n_train) = args.subsample_train {
        let n_val = args.subsample_val.unwrap_or(0);
        let (train, val) = corpus::subsample(&ds, n_train, n_val, seed)?;
        let train_path = out_path(out_dir, &format!("train.{ext}"));
        write_dataset(&train, &train_path, args.format)?;
        manifest.add_output(&train_path)?;
        if n_val > 0 {
            let val_path = out_path(out_dir, &format!("val.{ext}"));
            write_dataset(&val, &val_path, args.format)?;
            manifest.add_output(&val_path)?;
        }
        println!(
            "subsampled {} train / {} val documents from {}",
            thousands(train.n_docs()),
            thousands(val.n_docs()),
            thousands(ds.n_docs())
        );
    } else {
        let path = out_path(out_dir, &format!("dataset.{ext}"));
        write_dataset(&ds, &path, args.format)?;
        manifest.add_output(&path)?;
        println!(
            "ingested {} documents, {} labels, {} feature dims",
            thousands(ds.n_docs()),
            thousands(ds.n_labels()),
            thousands(ds.feature_dim)
        );
    }
    manifest.write(out_dir)
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "xml-repo")]
    pub format: DatasetFormat,
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Dataset name echoed in the output row.
    #[arg(long, default_value = "dataset")]
    pub name: String,
}

pub fn stats(args: &StatsArgs, paths: &PathsConfig, out_dir: Option<&PathBuf>) -> Result<()> {
    let train_path = need_path(&args.train, &paths.train, "train")?;
    let test_path = need_path(&args.test, &paths.test, "test")?;
    let val_path = args.val.clone().or_else(|| paths.val.clone());
    let taxonomy = args
        .taxonomy
        .clone()
        .or_else(|| paths.taxonomy.clone())
        .as_deref()
        .map(corpus::parse_taxonomy)
        .transpose()?;
    let load = |path: &PathBuf| load_dataset(path, args.format, None, taxonomy.as_ref());
    let train = load(&train_path)?;
    let val = val_path.as_ref().map(load).transpose()?;
    let test = load(&test_path)?;
    let stats = corpus::stats(&train, val.as_ref(), &test)?;

    println!(
        "{:<16} {:>9} {:>11} {:>9} {:>9} {:>8}",
        "Dataset", "#Labels", "#Train", "#Val", "#Test", "Avg(L)"
    );
    println!(
        "{:<16} {:>9} {:>11} {:>9} {:>9} {:>8.2}",
        args.name,
        thousands(stats.n_labels),
        thousands(stats.n_train),
        if stats.n_val == 0 { "-".to_string() } else { thousands(stats.n_val) },
        thousands(stats.n_test),
        stats.avg_labels_per_doc
    );

    if let Some(out_dir) = out_dir {
        ensure_out_dir(out_dir)?;
        let path = out_path(out_dir, "stats.json");
        let record = json!({ "name": args.name, "stats": stats });
        std::fs::write(&path, serde_json::to_string_pretty(&record)? + "\n")?;
        let mut manifest = Manifest::new("stats", None, json!({ "name": args.name }));
        manifest.add_input(&train_path)?;
        if let Some(v) = &val_path {
            manifest.add_input(v)?;
        }
        manifest.add_input(&test_path)?;
        manifest.add_output(&path)?;
        manifest.write(out_dir)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct TfidfArgs {
    /// Text corpus the model is fitted on.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
}

/// Fits TF-IDF on the training text and writes each split as a sparse
/// feature file, plus the shared label-name list.
pub fn tfidf(args: &TfidfArgs, paths: &PathsConfig, out_dir: &PathBuf) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let train_path = need_path(&args.train, &paths.train, "train")?;
    let val_path = args.val.clone().or_else(|| paths.val.clone());
    let test_path = args.test.clone().or_else(|| paths.test.clone());
    let taxonomy = args
        .taxonomy
        .clone()
        .or_else(|| paths.taxonomy.clone())
        .as_deref()
        .map(corpus::parse_taxonomy)
        .transpose()?;
    let train = load_dataset(&train_path, DatasetFormat::Jsonl, None, taxonomy.as_ref())?;
    let model = features::fit_tfidf(&train)?;
    println!(
        "fitted TF-IDF on {} documents: {} terms",
        thousands(model.n_docs_fitted),
        thousands(model.dim())
    );

    let mut manifest = Manifest::new("tfidf", None, json!({ "train": train_path }));
    manifest.add_input(&train_path)?;

    let transform_split = |ds: &Dataset| -> Result<Dataset> {
        let docs: Vec<xcbridge::corpus::Document> = ds
            .docs
            .par_iter()
            .map(|doc| {
                let tokens = doc.tokens.as_deref().unwrap_or(&[]);
                let features = features::transform(&model, tokens);
                xcbridge::corpus::Document::new(
                    doc.id,
                    doc.tokens.clone(),
                    Some(features),
                    doc.labels.clone(),
                )
            })
            .collect();
        let mut out = Dataset::new(docs, ds.label_vocab.clone(), model.dim())?;
        // sparse files carry features only
        for doc in &mut out.docs {
            doc.tokens = None;
        }
        Ok(out)
    };

    for (split_name, path) in [
        ("train", Some(&train_path)),
        ("val", val_path.as_ref()),
        ("test", test_path.as_ref()),
    ] {
        let Some(path) = path else { continue };
        let ds = if split_name == "train" {
            train.clone()
        } else {
            manifest.add_input(path)?;
            load_dataset(path, DatasetFormat::Jsonl, None, taxonomy.as_ref())?
        };
        if ds.label_vocab != train.label_vocab {
            bail!("split {split_name} does not share the train vocabulary");
        }
        let transformed = transform_split(&ds)?;
        let out = out_path(out_dir, &format!("{split_name}.txt"));
        corpus::write_xml_repo(&transformed, &out)
            .with_context(|| format!("writing {split_name} split"))?;
        manifest.add_output(&out)?;
    }

    let names_path = out_path(out_dir, "label_names.txt");
    write_names(&train.label_vocab, &names_path)?;
    manifest.add_output(&names_path)?;
    manifest.write(out_dir)
}
