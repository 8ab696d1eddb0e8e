//! Cross-ecosystem dataset conversion: flattening taxonomies away, grafting
//! synthetic hierarchies onto flat datasets, and removing synthetic labels
//! from rankings at evaluation time.

use crate::corpus::{Dataset, Document, LabelId};
use crate::error::{Error, Result};
use crate::metrics::RankedPrediction;
use crate::tree::{LabelTree, NodeId, NodeKind};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// How taxonomy labels are carried into a flat label space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransferMode {
    /// Keep every tree label; each document's label set is replaced by its
    /// ancestor closure (root excluded).
    FullLabel,
    /// Keep only labels that are tree leaves; non-leaf assignments are
    /// dropped, not mapped to descendants.
    LeafOnly,
}

impl TransferMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(TransferMode::FullLabel),
            "leaf" => Ok(TransferMode::LeafOnly),
            other => Err(Error::InvalidArgument {
                detail: format!("unknown transfer mode {other:?} (expected full or leaf)"),
            }),
        }
    }
}

/// Counts reported alongside a flatten conversion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlattenReport {
    /// Documents whose label set became empty (leaf-only mode keeps them).
    pub emptied_docs: usize,
}

/// Discards the hierarchy of a taxonomy-labelled dataset.
///
/// The output vocabulary is every non-root tree label (full mode) or the
/// tree's leaf labels (leaf-only mode), in tree node-id order. Full mode
/// always recomputes the ancestor closure rather than trusting the input to
/// be closed.
pub fn flatten(
    ds: &Dataset,
    tree: &LabelTree,
    mode: TransferMode,
) -> Result<(Dataset, FlattenReport)> {
    let node_of = resolve_labels(ds, tree)?;

    let kept: Vec<NodeId> = match mode {
        TransferMode::FullLabel => tree.non_root_ids().collect(),
        TransferMode::LeafOnly => tree.leaves(),
    };
    let new_id_of_node: HashMap<NodeId, LabelId> = kept
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, i as LabelId))
        .collect();
    let label_vocab: Vec<String> = kept.iter().map(|&n| tree.name(n).to_string()).collect();

    let mut report = FlattenReport::default();
    let docs: Vec<Document> = ds
        .docs
        .iter()
        .map(|doc| {
            let mut labels: Vec<LabelId> = Vec::new();
            match mode {
                TransferMode::FullLabel => {
                    for &label in &doc.labels {
                        let node = node_of[label as usize];
                        labels.push(new_id_of_node[&node]);
                        for anc in tree.ancestors(node) {
                            if tree.kind(anc) != NodeKind::Root {
                                labels.push(new_id_of_node[&anc]);
                            }
                        }
                    }
                }
                TransferMode::LeafOnly => {
                    for &label in &doc.labels {
                        let node = node_of[label as usize];
                        if let Some(&id) = new_id_of_node.get(&node) {
                            labels.push(id);
                        }
                    }
                }
            }
            let doc = Document::new(doc.id, doc.tokens.clone(), doc.features.clone(), labels);
            if doc.labels.is_empty() && mode == TransferMode::LeafOnly {
                report.emptied_docs += 1;
            }
            doc
        })
        .collect();

    let out = Dataset::new(docs, label_vocab, ds.feature_dim)?;
    Ok((out, report))
}

/// Grafts a synthetic tree onto a flat dataset.
///
/// The tree's leaves must be exactly the dataset vocabulary. Real labels
/// keep their ids; the synthetic internal labels are appended after them, so
/// id `>= ds.n_labels()` identifies a synthetic label in the output. Every
/// document gains the ancestor closure of its labels (root excluded).
pub fn inject_hierarchy(ds: &Dataset, tree: &LabelTree) -> Result<(Dataset, LabelTree)> {
    let node_of = resolve_labels(ds, tree)?;
    let leaves = tree.leaves();
    if leaves.len() != ds.n_labels() {
        return Err(Error::LeafVocabMismatch {
            detail: format!(
                "tree has {} leaves but the vocabulary holds {} labels",
                leaves.len(),
                ds.n_labels()
            ),
        });
    }
    for (label, &node) in node_of.iter().enumerate() {
        if !tree.is_leaf(node) {
            return Err(Error::LeafVocabMismatch {
                detail: format!(
                    "vocabulary label {:?} is not a leaf of the tree",
                    ds.label_vocab[label]
                ),
            });
        }
    }

    // Real labels first (original ids preserved), then internal nodes.
    let mut label_vocab = ds.label_vocab.clone();
    let mut meta_id_of_node: HashMap<NodeId, LabelId> = HashMap::new();
    for node in tree.non_root_ids() {
        if !tree.is_leaf(node) {
            meta_id_of_node.insert(node, label_vocab.len() as LabelId);
            label_vocab.push(tree.name(node).to_string());
        }
    }

    let docs: Vec<Document> = ds
        .docs
        .iter()
        .map(|doc| {
            let mut labels = doc.labels.clone();
            for &label in &doc.labels {
                for anc in tree.ancestors(node_of[label as usize]) {
                    if tree.kind(anc) != NodeKind::Root {
                        labels.push(meta_id_of_node[&anc]);
                    }
                }
            }
            Document::new(doc.id, doc.tokens.clone(), doc.features.clone(), labels)
        })
        .collect();

    let out = Dataset::new(docs, label_vocab, ds.feature_dim)?;
    Ok((out, tree.clone()))
}

/// Knows which label ids of an injected vocabulary are synthetic.
#[derive(Debug, Clone)]
pub struct MetaLabelFilter {
    is_meta: Vec<bool>,
}

impl MetaLabelFilter {
    /// Classifies each vocabulary entry by its node kind in the tree.
    /// Names absent from the tree count as real labels.
    pub fn new(vocab: &[String], tree: &LabelTree) -> Self {
        let index = tree.name_index();
        let is_meta = vocab
            .iter()
            .map(|name| {
                index
                    .get(name.as_str())
                    .is_some_and(|&n| tree.kind(n) == NodeKind::Meta)
            })
            .collect();
        MetaLabelFilter { is_meta }
    }

    pub fn is_meta(&self, label: LabelId) -> bool {
        self.is_meta.get(label as usize).copied().unwrap_or(false)
    }

    /// Count of real labels in the vocabulary.
    pub fn n_real(&self) -> usize {
        self.is_meta.iter().filter(|&&m| !m).count()
    }
}

/// Removes synthetic labels from a ranking, preserving the relative order
/// of the surviving entries.
pub fn strip_meta(pred: &RankedPrediction, filter: &MetaLabelFilter) -> RankedPrediction {
    RankedPrediction::from_ranked(
        pred.entries()
            .iter()
            .copied()
            .filter(|&(label, _)| !filter.is_meta(label)),
    )
}

/// Maps every dataset label id to its tree node, erroring on absences.
fn resolve_labels(ds: &Dataset, tree: &LabelTree) -> Result<Vec<NodeId>> {
    let index = tree.name_index();
    ds.label_vocab
        .iter()
        .map(|name| {
            index
                .get(name.as_str())
                .copied()
                .ok_or_else(|| Error::LabelNotInTree {
                    label: name.clone(),
                })
        })
        .collect()
}
