//! TF-IDF document vectors and positive-instance label embeddings.

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::sparse::{SparseAccumulator, SparseVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Lowercases and splits on any non-alphanumeric run, dropping empties.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// A fitted TF-IDF vocabulary with smoothed inverse document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    /// Token → feature index; indices follow lexicographic token order.
    pub vocab: HashMap<String, u32>,
    /// idf[t] = ln((N+1)/(df(t)+1)) + 1, always positive.
    pub idf: Vec<f32>,
    pub n_docs_fitted: usize,
}

impl TfidfModel {
    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    /// Weight of a single token under this model, zero if out of vocabulary.
    pub fn idf_of(&self, token: &str) -> Option<f32> {
        self.vocab.get(token).map(|&i| self.idf[i as usize])
    }
}

/// Fits a TF-IDF model over every document's tokens.
///
/// Documents without text are rejected. Document frequencies are merged in
/// document-id order, and feature indices are assigned by sorted token order,
/// so the fit is reproducible regardless of worker count.
pub fn fit_tfidf(ds: &Dataset) -> Result<TfidfModel> {
    if ds.docs.is_empty() {
        return Err(Error::EmptyCorpus {
            detail: "cannot fit TF-IDF on zero documents".into(),
        });
    }
    let token_sets: Vec<Vec<&str>> = ds
        .docs
        .par_iter()
        .map(|doc| {
            doc.tokens.as_ref().map(|tokens| {
                let mut set: Vec<&str> = tokens.iter().map(String::as_str).collect();
                set.sort_unstable();
                set.dedup();
                set
            })
        })
        .collect::<Option<_>>()
        .ok_or_else(|| Error::EmptyCorpus {
            detail: "all documents must carry text to fit TF-IDF".into(),
        })?;

    let mut df: HashMap<&str, u32> = HashMap::new();
    for set in &token_sets {
        for token in set {
            *df.entry(token).or_insert(0) += 1;
        }
    }
    let mut tokens: Vec<&str> = df.keys().copied().collect();
    tokens.sort_unstable();

    let n = ds.docs.len() as f32;
    let mut vocab = HashMap::with_capacity(tokens.len());
    let mut idf = Vec::with_capacity(tokens.len());
    for (i, token) in tokens.into_iter().enumerate() {
        vocab.insert(token.to_string(), i as u32);
        idf.push(((n + 1.0) / (df[token] as f32 + 1.0)).ln() + 1.0);
    }
    Ok(TfidfModel {
        vocab,
        idf,
        n_docs_fitted: ds.docs.len(),
    })
}

/// Raw term count times idf; out-of-vocabulary tokens are ignored and no
/// normalization is applied.
pub fn transform(model: &TfidfModel, tokens: &[String]) -> SparseVector {
    let mut counts: HashMap<u32, f32> = HashMap::new();
    for token in tokens {
        if let Some(&i) = model.vocab.get(token.as_str()) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let mut entries: Vec<(u32, f32)> = counts
        .into_iter()
        .map(|(i, c)| (i, c * model.idf[i as usize]))
        .collect();
    entries.sort_unstable_by_key(|&(i, _)| i);
    SparseVector::from_sorted(entries)
}

/// Per-label rows over the document feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelFeatureMatrix {
    /// One row per label id; labels with no positive documents keep a zero row.
    pub rows: Vec<SparseVector>,
    pub dim: usize,
}

impl LabelFeatureMatrix {
    pub fn n_labels(&self) -> usize {
        self.rows.len()
    }
}

/// Aggregates each label's positive documents: row i is the sum over
/// documents d carrying label i of `doc_vectors[d] / doc_lengths[d]`.
///
/// Within each label the sum runs in document-id order, so results are
/// bit-identical however the label loop is scheduled. When `l2_normalize`
/// is set each non-zero row is scaled to unit norm afterwards (the variant
/// that norms the aggregated embedding instead of the inputs).
pub fn pifa(
    ds: &Dataset,
    doc_vectors: &[SparseVector],
    doc_lengths: &[f32],
    l2_normalize: bool,
) -> Result<LabelFeatureMatrix> {
    assert_eq!(ds.docs.len(), doc_vectors.len(), "doc/vector alignment");
    assert_eq!(ds.docs.len(), doc_lengths.len(), "doc/length alignment");
    for (doc, &len) in ds.docs.iter().zip(doc_lengths) {
        if !doc.labels.is_empty() && len <= 0.0 {
            return Err(Error::ZeroLengthDocument { doc_id: doc.id });
        }
    }
    // Invert the doc→label map once; per-label doc lists stay id-ordered.
    let mut positives: Vec<Vec<usize>> = vec![Vec::new(); ds.n_labels()];
    for (d, doc) in ds.docs.iter().enumerate() {
        for &label in &doc.labels {
            positives[label as usize].push(d);
        }
    }
    let dim = doc_vectors
        .iter()
        .filter_map(SparseVector::max_index)
        .max()
        .map_or(ds.feature_dim, |m| ds.feature_dim.max(m as usize + 1));
    let rows: Vec<SparseVector> = positives
        .par_iter()
        .map(|docs| {
            let mut acc = SparseAccumulator::new();
            for &d in docs {
                acc.add_scaled(&doc_vectors[d], 1.0 / doc_lengths[d]);
            }
            let row = acc.into_vector();
            if l2_normalize {
                row.l2_normalized()
            } else {
                row
            }
        })
        .collect();
    Ok(LabelFeatureMatrix { rows, dim })
}

/// Document length for the aggregation: token count for raw text, L1 norm
/// of the feature vector otherwise (the weights are counts when integral).
pub fn doc_length(doc: &crate::corpus::Document) -> f32 {
    match (&doc.tokens, &doc.features) {
        (Some(tokens), _) => tokens.len() as f32,
        (None, Some(features)) => features.l1_norm(),
        (None, None) => 0.0,
    }
}

/// Convenience wrapper: derives vectors and lengths from the dataset itself.
///
/// Text datasets are fitted and transformed in place; feature datasets are
/// aggregated directly with no re-tokenization.
pub fn pifa_from_dataset(ds: &Dataset, l2_normalize: bool) -> Result<LabelFeatureMatrix> {
    let all_text = ds.docs.iter().all(|d| d.tokens.is_some());
    if all_text && ds.feature_dim == 0 {
        let model = fit_tfidf(ds)?;
        let vectors: Vec<SparseVector> = ds
            .docs
            .par_iter()
            .map(|d| transform(&model, d.tokens.as_ref().unwrap()))
            .collect();
        let lengths: Vec<f32> = ds
            .docs
            .iter()
            .map(|d| d.tokens.as_ref().unwrap().len() as f32)
            .collect();
        pifa(ds, &vectors, &lengths, l2_normalize)
    } else {
        let vectors: Vec<SparseVector> = ds
            .docs
            .iter()
            .map(|d| d.features.clone().unwrap_or_default())
            .collect();
        let lengths: Vec<f32> = ds.docs.iter().map(doc_length).collect();
        pifa(ds, &vectors, &lengths, l2_normalize)
    }
}
