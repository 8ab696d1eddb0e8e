//! Datasets: documents, label vocabularies, file formats, subsampling,
//! and summary statistics.

mod jsonl;
mod taxonomy;
mod xml_repo;

pub use jsonl::{parse_text_corpus, write_text_corpus};
pub use taxonomy::{parse_taxonomy, parse_taxonomy_str, write_taxonomy};
pub use xml_repo::{parse_xml_repo, write_xml_repo};

use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use crate::sparse::SparseVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub type LabelId = u32;

/// One document: raw tokens and/or precomputed sparse features, plus the
/// set of label ids assigned to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    /// Stable id, normally the 0-based position in the source file.
    pub id: u64,
    pub tokens: Option<Vec<String>>,
    pub features: Option<SparseVector>,
    /// Sorted and unique.
    pub labels: Vec<LabelId>,
}

impl Document {
    pub fn new(
        id: u64,
        tokens: Option<Vec<String>>,
        features: Option<SparseVector>,
        labels: Vec<LabelId>,
    ) -> Self {
        Document {
            id,
            tokens,
            features,
            labels: normalize_labels(labels),
        }
    }

    pub fn has_label(&self, label: LabelId) -> bool {
        self.labels.binary_search(&label).is_ok()
    }
}

/// Sorts and dedupes a label id list.
pub fn normalize_labels(mut labels: Vec<LabelId>) -> Vec<LabelId> {
    labels.sort_unstable();
    labels.dedup();
    labels
}

/// A collection of documents sharing a label vocabulary and feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub docs: Vec<Document>,
    /// Label names; the index is the label id.
    pub label_vocab: Vec<String>,
    /// Feature dimension count; 0 when only raw text is present.
    pub feature_dim: usize,
}

impl Dataset {
    pub fn new(docs: Vec<Document>, label_vocab: Vec<String>, feature_dim: usize) -> Result<Self> {
        let ds = Dataset {
            docs,
            label_vocab,
            feature_dim,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn n_labels(&self) -> usize {
        self.label_vocab.len()
    }

    /// Label name → id map.
    pub fn vocab_index(&self) -> HashMap<&str, LabelId> {
        self.label_vocab
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as LabelId))
            .collect()
    }

    /// Checks the structural invariants: label ids within the vocabulary,
    /// feature indices within the dimension, and every document carrying
    /// text or features.
    pub fn validate(&self) -> Result<()> {
        let n_labels = self.label_vocab.len();
        for doc in &self.docs {
            if doc.tokens.is_none() && doc.features.is_none() {
                return Err(Error::InvalidArgument {
                    detail: format!("document {} has neither text nor features", doc.id),
                });
            }
            debug_assert!(doc.labels.windows(2).all(|w| w[0] < w[1]));
            if let Some(&max) = doc.labels.last() {
                if max as usize >= n_labels {
                    return Err(Error::InvalidArgument {
                        detail: format!(
                            "document {} references label {max} but the vocabulary holds {n_labels}",
                            doc.id
                        ),
                    });
                }
            }
            if let Some(f) = &doc.features {
                if let Some(max) = f.max_index() {
                    if max as usize >= self.feature_dim {
                        return Err(Error::InvalidArgument {
                            detail: format!(
                                "document {} has feature index {max} but dimension is {}",
                                doc.id, self.feature_dim
                            ),
                        });
                    }
                }
                if f.iter().any(|(_, v)| v < 0.0) {
                    return Err(Error::InvalidArgument {
                        detail: format!("document {} has a negative feature weight", doc.id),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Table-row summary of one dataset: label and split counts plus the mean
/// labels-per-document, rounded half-up to two decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_labels: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub avg_labels_per_doc: f64,
}

/// Computes summary statistics over the three splits.
///
/// All provided splits must share the train split's vocabulary. The mean
/// labels-per-document is taken over train+val+test and rounded half-up to
/// two decimals using exact integer arithmetic.
pub fn stats(train: &Dataset, val: Option<&Dataset>, test: &Dataset) -> Result<DatasetStats> {
    for (name, split) in [("val", val), ("test", Some(test))] {
        if let Some(split) = split {
            if split.label_vocab != train.label_vocab {
                return Err(Error::VocabularyMismatch {
                    detail: format!("{name} split does not share the train vocabulary"),
                });
            }
        }
    }
    let splits = [Some(train), val, Some(test)];
    let n_docs: u64 = splits
        .iter()
        .flatten()
        .map(|d| d.n_docs() as u64)
        .sum();
    let n_label_assignments: u64 = splits
        .iter()
        .flatten()
        .flat_map(|d| d.docs.iter())
        .map(|doc| doc.labels.len() as u64)
        .sum();
    let avg = if n_docs == 0 {
        0.0
    } else {
        // Half-up rounding to hundredths: floor((200T + N) / 2N) / 100.
        let hundredths = (200 * n_label_assignments + n_docs) / (2 * n_docs);
        hundredths as f64 / 100.0
    };
    Ok(DatasetStats {
        n_labels: train.n_labels(),
        n_train: train.n_docs(),
        n_val: val.map_or(0, Dataset::n_docs),
        n_test: test.n_docs(),
        avg_labels_per_doc: avg,
    })
}

/// Draws disjoint train/validation samples without replacement.
///
/// Deterministic for a fixed seed (partial Fisher–Yates over the document
/// index list); the label vocabulary is kept unchanged even when some labels
/// lose all their positive documents.
pub fn subsample(
    ds: &Dataset,
    n_train: usize,
    n_val: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let total = n_train + n_val;
    if total > ds.n_docs() {
        return Err(Error::InsufficientDocuments {
            requested: total,
            available: ds.n_docs(),
        });
    }
    let mut indices: Vec<usize> = (0..ds.n_docs()).collect();
    let mut rng = seeded_rng(seed);
    for i in 0..total {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
    }
    let take = |range: std::ops::Range<usize>| Dataset {
        docs: indices[range].iter().map(|&i| ds.docs[i].clone()).collect(),
        label_vocab: ds.label_vocab.clone(),
        feature_dim: ds.feature_dim,
    };
    Ok((take(0..n_train), take(n_train..total)))
}
