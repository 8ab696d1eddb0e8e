//! Label-embedding and tree commands: pifa, build-tree, segment.

use crate::manifest::Manifest;
use crate::util::*;
use anyhow::Result;
use clap::Args;
use serde_json::json;
use std::path::PathBuf;
use xcbridge::corpus::{self, Dataset, Document};
use xcbridge::features::{self, LabelFeatureMatrix};
use xcbridge::hlt::{self, BranchingPlan};
use xcbridge::sparse::SparseVector;

#[derive(Debug, Args)]
pub struct PifaArgs {
    /// Dataset whose labels are embedded.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "xml-repo")]
    pub format: DatasetFormat,
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long)]
    pub names: Option<PathBuf>,
    /// Scale each aggregated label vector to unit norm.
    #[arg(long)]
    pub l2_normalize: bool,
}

/// Writes the label-feature matrix as a sparse file (row i carries label i)
/// plus the label-name list.
pub fn pifa(args: &PifaArgs, out_dir: &PathBuf) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let taxonomy = args
        .taxonomy
        .as_deref()
        .map(corpus::parse_taxonomy)
        .transpose()?;
    let ds = load_dataset(&args.input, args.format, args.names.as_deref(), taxonomy.as_ref())?;
    let matrix = features::pifa_from_dataset(&ds, args.l2_normalize)?;

    let matrix_path = out_path(out_dir, "label_features.txt");
    write_label_matrix(&matrix, &matrix_path)?;
    let names_path = out_path(out_dir, "label_names.txt");
    write_names(&ds.label_vocab, &names_path)?;
    println!(
        "embedded {} labels over {} feature dims",
        thousands(matrix.n_labels()),
        thousands(matrix.dim)
    );

    let mut manifest = Manifest::new(
        "pifa",
        None,
        json!({ "input": args.input, "l2_normalize": args.l2_normalize }),
    );
    manifest.add_input(&args.input)?;
    manifest.add_output(&matrix_path)?;
    manifest.add_output(&names_path)?;
    manifest.write(out_dir)
}

/// The matrix rides the sparse dataset format: line i has label list `i`
/// and the label's feature vector.
pub fn write_label_matrix(matrix: &LabelFeatureMatrix, path: &PathBuf) -> Result<()> {
    let docs: Vec<Document> = matrix
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| Document::new(i as u64, None, Some(row.clone()), vec![i as u32]))
        .collect();
    let ds = Dataset::new(
        docs,
        (0..matrix.n_labels()).map(|i| i.to_string()).collect(),
        matrix.dim,
    )?;
    corpus::write_xml_repo(&ds, path)?;
    Ok(())
}

pub fn read_label_matrix(path: &PathBuf) -> Result<LabelFeatureMatrix> {
    let ds = corpus::parse_xml_repo(path)?;
    let mut rows = vec![SparseVector::new(); ds.n_labels()];
    for doc in &ds.docs {
        anyhow::ensure!(
            doc.labels.len() == 1,
            "label-feature rows carry exactly one label id"
        );
        rows[doc.labels[0] as usize] = doc.features.clone().unwrap_or_default();
    }
    Ok(LabelFeatureMatrix {
        rows,
        dim: ds.feature_dim,
    })
}

#[derive(Debug, Args)]
pub struct BuildTreeArgs {
    /// Label-feature matrix produced by `pifa`.
    #[arg(long)]
    pub label_features: PathBuf,
    /// Label names, one per line (defaults to numeric ids).
    #[arg(long)]
    pub names: Option<PathBuf>,
    /// Per-level cluster counts, e.g. "512,8".
    #[arg(long)]
    pub plan: Option<String>,
    /// Clustering iteration cap per node.
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
}

pub fn build_tree(args: &BuildTreeArgs, plan: &str, seed: u64, out_dir: &PathBuf) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let matrix = read_label_matrix(&args.label_features)?;
    let names = match &args.names {
        Some(path) => read_names(path)?,
        None => (0..matrix.n_labels()).map(|i| i.to_string()).collect(),
    };
    anyhow::ensure!(
        names.len() == matrix.n_labels(),
        "names/matrix size mismatch: {} vs {}",
        names.len(),
        matrix.n_labels()
    );
    let plan = BranchingPlan::parse(plan)?;
    let (tree, report) = hlt::build_hlt(&matrix, &names, &plan, seed, args.max_iters)?;

    let tree_path = out_path(out_dir, "tree.txt");
    save_tree(&tree, &tree_path)?;
    let taxonomy_path = out_path(out_dir, "tree.taxonomy.txt");
    corpus::write_taxonomy(&tree, &taxonomy_path)?;
    let report_path = out_path(out_dir, "build_report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n")?;
    println!(
        "built tree: {} nodes, {} leaves, mean leaf fanout {:.2}",
        thousands(tree.n_nodes()),
        thousands(report.n_leaves),
        report.mean_leaf_fanout
    );

    let mut manifest = Manifest::new(
        "build-tree",
        Some(seed),
        json!({ "plan": plan.to_string(), "max_iters": args.max_iters }),
    );
    manifest.add_input(&args.label_features)?;
    manifest.add_output(&tree_path)?;
    manifest.add_output(&taxonomy_path)?;
    manifest.add_output(&report_path)?;
    manifest.write(out_dir)
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Tree file produced by `build-tree`.
    #[arg(long)]
    pub tree: PathBuf,
}

pub fn segment(args: &SegmentArgs, budget: usize, out_dir: &PathBuf) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let tree = load_tree(&args.tree)?;
    let segments = hlt::segment_tree(&tree, budget)?;

    let mut manifest = Manifest::new("segment", None, json!({ "budget": budget }));
    manifest.add_input(&args.tree)?;
    let mut sizes = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        let path = out_path(out_dir, &format!("segment_{i:04}.txt"));
        save_tree(seg, &path)?;
        manifest.add_output(&path)?;
        sizes.push(seg.n_nodes());
    }
    let summary_path = out_path(out_dir, "segments.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&json!({
            "count": segments.len(),
            "budget": budget,
            "node_counts": sizes,
        }))? + "\n",
    )?;
    manifest.add_output(&summary_path)?;
    println!("segmented into {} sub-trees (budget {budget})", segments.len());
    manifest.write(out_dir)
}
