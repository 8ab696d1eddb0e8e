//! Scoring commands: evaluate, compare.

use crate::config::{need_path, PathsConfig};
use crate::manifest::Manifest;
use crate::util::*;
use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::PathBuf;
use xcbridge::metrics::{self, DecisionRule, EvalReport};
use xcbridge::transfer::{self, MetaLabelFilter};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ranking file from `predict`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Dataset holding the ground-truth label sets (defaults to the
    /// config's test path).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "xml-repo")]
    pub format: DatasetFormat,
    #[arg(long)]
    pub names: Option<PathBuf>,
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Remove synthetic labels (per this tree) from predictions and truths
    /// before scoring.
    #[arg(long)]
    pub strip_meta: Option<PathBuf>,
    /// How yes/no decisions are derived for the F1 scores:
    /// top-r, top-k:<n>, or threshold:<t>.
    #[arg(long, default_value = "top-r")]
    pub f1_decision: String,
    /// Row label used in the printed table and the report record.
    #[arg(long, default_value = "model")]
    pub name: String,
}

/// A report plus the name it is listed under in comparison tables.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportRecord {
    pub name: String,
    pub report: EvalReport,
}

pub fn evaluate(
    args: &EvaluateArgs,
    paths: &PathsConfig,
    ks: &[usize],
    out_dir: &PathBuf,
) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let truth_path = need_path(&args.truth, &paths.test, "truth")?;
    let taxonomy = args
        .taxonomy
        .as_deref()
        .map(xcbridge::corpus::parse_taxonomy)
        .transpose()?;
    let truth_ds = load_dataset(&truth_path, args.format, args.names.as_deref(), taxonomy.as_ref())?;
    let mut preds = read_predictions(&args.predictions)?;
    anyhow::ensure!(
        preds.len() == truth_ds.n_docs(),
        "{} rankings but {} truth documents",
        preds.len(),
        truth_ds.n_docs()
    );
    let mut truths: Vec<Vec<u32>> = truth_ds.docs.iter().map(|d| d.labels.clone()).collect();
    let mut n_labels = truth_ds.n_labels();

    if let Some(tree_path) = &args.strip_meta {
        let tree = load_tree(tree_path)?;
        let filter = MetaLabelFilter::new(&truth_ds.label_vocab, &tree);
        preds = preds
            .iter()
            .map(|p| transfer::strip_meta(p, &filter))
            .collect();
        for labels in &mut truths {
            labels.retain(|&l| !filter.is_meta(l));
        }
        n_labels = filter.n_real();
    }

    let decision = parse_decision(&args.f1_decision)?;
    let report = metrics::evaluate(&preds, &truths, ks, n_labels, decision)?;
    print_table(std::iter::once((&args.name[..], &report)), ks);

    let record = ReportRecord {
        name: args.name.clone(),
        report,
    };
    let report_path = out_path(out_dir, "report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&record)? + "\n")?;

    let mut manifest = Manifest::new(
        "evaluate",
        None,
        json!({ "ks": ks, "f1_decision": args.f1_decision, "strip_meta": args.strip_meta.is_some() }),
    );
    manifest.add_input(&args.predictions)?;
    manifest.add_input(&truth_path)?;
    manifest.add_output(&report_path)?;
    manifest.write(out_dir)
}

fn parse_decision(s: &str) -> Result<DecisionRule> {
    let usage = |detail: String| anyhow::Error::from(xcbridge::Error::InvalidArgument { detail });
    if s == "top-r" {
        return Ok(DecisionRule::TopR);
    }
    if let Some(n) = s.strip_prefix("top-k:") {
        return n
            .parse()
            .map(DecisionRule::TopK)
            .map_err(|_| usage(format!("bad top-k value {n:?}")));
    }
    if let Some(t) = s.strip_prefix("threshold:") {
        return t
            .parse()
            .map(DecisionRule::Threshold)
            .map_err(|_| usage(format!("bad threshold {t:?}")));
    }
    Err(usage(format!(
        "unknown decision rule {s:?} (expected top-r, top-k:<n>, threshold:<t>)"
    )))
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Report records produced by `evaluate`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

pub fn compare(args: &CompareArgs) -> Result<()> {
    let mut records = Vec::new();
    for path in &args.reports {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read report {}", path.display()))?;
        let record: ReportRecord = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse report {}", path.display()))?;
        records.push(record);
    }
    let ks: Vec<usize> = records[0].report.p_at_k.keys().copied().collect();
    print_table(records.iter().map(|r| (r.name.as_str(), &r.report)), &ks);
    Ok(())
}

/// Renders rows of percentages in the usual column layout:
/// Method, P@k for each cutoff, then R-Prec.
fn print_table<'a>(rows: impl Iterator<Item = (&'a str, &'a EvalReport)>, ks: &[usize]) {
    let mut header = format!("{:<20}", "Method");
    for k in ks {
        header.push_str(&format!(" {:>7}", format!("P@{k}")));
    }
    header.push_str(&format!(" {:>7}", "R-Prec"));
    header.push_str(&format!(" {:>8} {:>8}", "Mi-F1", "Ma-F1"));
    println!("{header}");
    for (name, report) in rows {
        let mut row = format!("{name:<20}");
        for k in ks {
            let v = report.p_at_k.get(k).copied().unwrap_or(f64::NAN);
            row.push_str(&format!(" {:>7.2}", v * 100.0));
        }
        row.push_str(&format!(" {:>7.2}", report.r_precision * 100.0));
        row.push_str(&format!(
            " {:>8.2} {:>8.2}",
            report.micro_f1 * 100.0,
            report.macro_f1 * 100.0
        ));
        println!("{row}");
    }
}
