//! Shared loading/saving helpers for the commands.

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use std::path::{Path, PathBuf};
use xcbridge::corpus::{self, Dataset};
use xcbridge::metrics::RankedPrediction;
use xcbridge::tree::LabelTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetFormat {
    /// Header "N D L" plus one `labels features` line per document.
    XmlRepo,
    /// One JSON record per line with token and label-name lists.
    Jsonl,
}

impl DatasetFormat {
    pub fn extension(self) -> &'static str {
        match self {
            DatasetFormat::XmlRepo => "txt",
            DatasetFormat::Jsonl => "jsonl",
        }
    }
}

/// Loads a dataset in either format.
///
/// `names` replaces the label vocabulary of a sparse file (they ship with
/// numeric ids only); `taxonomy` pins the vocabulary of a text corpus to
/// the tree's label set.
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    names: Option<&Path>,
    taxonomy: Option<&LabelTree>,
) -> Result<Dataset> {
    let ds = match format {
        DatasetFormat::XmlRepo => {
            let mut ds = corpus::parse_xml_repo(path)?;
            if let Some(names_path) = names {
                let names = read_names(names_path)?;
                if names.len() != ds.n_labels() {
                    bail!(
                        "{} holds {} names but {} declares {} labels",
                        names_path.display(),
                        names.len(),
                        path.display(),
                        ds.n_labels()
                    );
                }
                ds.label_vocab = names;
            }
            ds
        }
        DatasetFormat::Jsonl => {
            let vocab = taxonomy.map(taxonomy_vocab);
            corpus::parse_text_corpus(path, vocab.as_deref())?
        }
    };
    Ok(ds)
}

pub fn write_dataset(ds: &Dataset, path: &Path, format: DatasetFormat) -> Result<()> {
    match format {
        DatasetFormat::XmlRepo => corpus::write_xml_repo(ds, path)?,
        DatasetFormat::Jsonl => corpus::write_text_corpus(ds, path)?,
    }
    Ok(())
}

/// The label vocabulary a taxonomy induces: every non-root node name in
/// node-id order.
pub fn taxonomy_vocab(tree: &LabelTree) -> Vec<String> {
    tree.non_root_ids()
        .map(|id| tree.name(id).to_string())
        .collect()
}

pub fn read_names(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read names file {}", path.display()))?;
    Ok(text.lines().map(str::to_string).collect())
}

pub fn write_names(names: &[String], path: &Path) -> Result<()> {
    let mut out = String::new();
    for name in names {
        out.push_str(name);
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

pub fn load_tree(path: &Path) -> Result<LabelTree> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read tree file {}", path.display()))?;
    Ok(LabelTree::from_native_lines(&text, path)?)
}

pub fn save_tree(tree: &LabelTree, path: &Path) -> Result<()> {
    std::fs::write(path, tree.to_native_lines()?)
        .with_context(|| format!("cannot write {}", path.display()))
}

/// One ranking per line: space-separated `label:score`, best first.
/// Scores use the shortest exact decimal rendering.
pub fn write_predictions(preds: &[RankedPrediction], path: &Path) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    for pred in preds {
        let mut first = true;
        for &(label, score) in pred.entries() {
            if !first {
                write!(w, " ")?;
            }
            write!(w, "{label}:{score}")?;
            first = false;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<RankedPrediction>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read predictions {}", path.display()))?;
    let mut preds = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut entries = Vec::new();
        for token in line.split_whitespace() {
            let (label, score) = token
                .split_once(':')
                .with_context(|| format!("{}:{}: bad entry {token:?}", path.display(), lineno + 1))?;
            let label: u32 = label
                .parse()
                .with_context(|| format!("{}:{}: bad label in {token:?}", path.display(), lineno + 1))?;
            let score: f32 = score
                .parse()
                .with_context(|| format!("{}:{}: bad score in {token:?}", path.display(), lineno + 1))?;
            entries.push((label, score));
        }
        preds.push(RankedPrediction::from_scores(entries)?);
    }
    Ok(preds)
}

pub fn ensure_out_dir(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))
}

pub fn out_path(out_dir: &Path, name: &str) -> PathBuf {
    out_dir.join(name)
}

/// Renders 30070 as "30,070" for table output.
pub fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}
