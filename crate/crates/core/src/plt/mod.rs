//! A tree-structured sparse linear classifier.
//!
//! One logistic model per non-root tree node, trained level by level from
//! the root down. A node's positive documents are those whose ancestor-
//! closed label set contains the node; its negatives are the documents
//! shortlisted to the node's parent (the parent was in the document's
//! top-`beam` internal nodes at the previous level) that are not positive.
//! Prediction walks the tree with a beam, multiplying sigmoid scores along
//! each path; leaves drop out of the beam competition into the result pool,
//! so a beam at least as wide as every internal level reproduces exhaustive
//! scoring exactly.

mod io;
mod sgd;

pub use io::{load_model, save_model};
pub use sgd::{logistic_grad, logistic_loss, sigmoid, train_logistic, SgdParams};

use crate::corpus::{Dataset, LabelId};
use crate::error::{Error, Result};
use crate::metrics::RankedPrediction;
use crate::rng::{derive_seed, seeded_rng};
use crate::sparse::SparseVector;
use crate::tree::{LabelTree, NodeId, NodeKind};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PltConfig {
    pub epochs: u32,
    pub learning_rate: f32,
    pub l2: f32,
    /// Per-node cap on shortlisted negatives; excess is sampled by seed.
    pub negative_cap: usize,
    /// Shortlist width used while training and the default beam at
    /// prediction time.
    pub beam: usize,
    pub seed: u64,
}

impl Default for PltConfig {
    fn default() -> Self {
        PltConfig {
            epochs: 12,
            learning_rate: 0.5,
            l2: 1e-4,
            negative_cap: 10_000,
            beam: 10,
            seed: 0,
        }
    }
}

/// Per-node linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeWeights {
    pub weights: SparseVector,
    pub bias: f32,
}

/// A trained tree classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct PltModel {
    pub tree: LabelTree,
    pub label_vocab: Vec<String>,
    pub feature_dim: usize,
    /// Indexed by node id; `None` only for the root.
    pub weights: Vec<Option<NodeWeights>>,
    pub config: PltConfig,
}

impl PltModel {
    /// Label id carried by each leaf node (None for internal nodes).
    fn label_of_node(&self) -> Vec<Option<LabelId>> {
        let vocab: std::collections::HashMap<&str, LabelId> = self
            .label_vocab
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as LabelId))
            .collect();
        self.tree
            .node_ids()
            .map(|id| {
                if self.tree.is_leaf(id) {
                    vocab.get(self.tree.name(id)).copied()
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Trains one linear model per tree node, level by level.
pub fn train(ds: &Dataset, tree: &LabelTree, config: PltConfig) -> Result<PltModel> {
    if ds.docs.is_empty() {
        return Err(Error::EmptyTrainingSet {
            detail: "no documents".into(),
        });
    }
    let leaf_of_label = leaf_map(ds, tree)?;
    let docs: Vec<SparseVector> = ds
        .docs
        .par_iter()
        .map(|d| {
            d.features
                .as_ref()
                .map(SparseVector::l2_normalized)
                .ok_or_else(|| Error::EmptyTrainingSet {
                    detail: format!("document {} has no features", d.id),
                })
        })
        .collect::<Result<_>>()?;

    // Ancestor-closed positive node set per document (root excluded).
    let positive_nodes: Vec<Vec<NodeId>> = ds
        .docs
        .par_iter()
        .map(|doc| {
            let mut nodes: Vec<NodeId> = Vec::new();
            for &label in &doc.labels {
                let leaf = leaf_of_label[label as usize];
                nodes.push(leaf);
                for anc in tree.ancestors(leaf) {
                    if tree.kind(anc) != NodeKind::Root {
                        nodes.push(anc);
                    }
                }
            }
            nodes.sort_unstable();
            nodes.dedup();
            nodes
        })
        .collect();

    // Docs positive for each node, in ascending doc order.
    let mut positive_docs: Vec<Vec<u32>> = vec![Vec::new(); tree.n_nodes()];
    for (d, nodes) in positive_nodes.iter().enumerate() {
        for &v in nodes {
            positive_docs[v as usize].push(d as u32);
        }
    }

    let depths = tree.node_depths();
    let max_depth = tree.depth();
    let mut levels: Vec<Vec<NodeId>> = vec![Vec::new(); max_depth + 1];
    for id in tree.node_ids().skip(1) {
        levels[depths[id as usize]].push(id);
    }

    let sgd_params = SgdParams {
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        l2: config.l2,
    };
    let mut weights: Vec<Option<NodeWeights>> = vec![None; tree.n_nodes()];
    // Document beams at the previous level; the root level shortlists
    // every document.
    let mut beams: Vec<Vec<(NodeId, f32)>> = vec![vec![(LabelTree::ROOT, 1.0)]; docs.len()];

    for level in 1..=max_depth {
        if levels[level].is_empty() {
            continue;
        }
        // Docs shortlisted to each parent node, ascending doc order.
        let mut shortlisted: Vec<Vec<u32>> = vec![Vec::new(); tree.n_nodes()];
        for (d, beam) in beams.iter().enumerate() {
            for &(node, _) in beam {
                shortlisted[node as usize].push(d as u32);
            }
        }

        let trained: Vec<(NodeId, NodeWeights)> = levels[level]
            .par_iter()
            .map(|&node| {
                let positives = &positive_docs[node as usize];
                let parent = tree.parent(node).expect("non-root");
                let negatives: Vec<u32> = shortlisted[parent as usize]
                    .iter()
                    .copied()
                    .filter(|d| positives.binary_search(d).is_err())
                    .collect();
                let negatives = cap_negatives(negatives, config.negative_cap, derive_seed(config.seed, u64::from(node)));
                let mut examples: Vec<(usize, f32)> =
                    Vec::with_capacity(positives.len() + negatives.len());
                examples.extend(positives.iter().map(|&d| (d as usize, 1.0)));
                examples.extend(negatives.iter().map(|&d| (d as usize, 0.0)));
                let (w, bias) = train_logistic(
                    &examples,
                    &docs,
                    ds.feature_dim,
                    sgd_params,
                    derive_seed(config.seed, u64::from(node)),
                );
                (node, NodeWeights { weights: w, bias })
            })
            .collect();
        for (node, w) in trained {
            weights[node as usize] = Some(w);
        }

        // Advance the shortlist beams through this level.
        if level < max_depth {
            beams = docs
                .par_iter()
                .zip(&beams)
                .map(|(x, beam)| {
                    let mut candidates: Vec<(NodeId, f32)> = Vec::new();
                    for &(node, prob) in beam {
                        for &child in tree.children(node) {
                            if tree.is_leaf(child) {
                                continue;
                            }
                            let nw = weights[child as usize].as_ref().expect("trained level");
                            let score = sigmoid(nw.weights.dot(x) + nw.bias);
                            candidates.push((child, prob * score));
                        }
                    }
                    keep_top(&mut candidates, config.beam);
                    candidates
                })
                .collect();
        }
    }

    // Untrained nodes (never shortlisted, no positives) keep zero weights.
    for id in tree.node_ids().skip(1) {
        if weights[id as usize].is_none() {
            weights[id as usize] = Some(NodeWeights {
                weights: SparseVector::new(),
                bias: 0.0,
            });
        }
    }

    Ok(PltModel {
        tree: tree.clone(),
        label_vocab: ds.label_vocab.clone(),
        feature_dim: ds.feature_dim,
        weights,
        config,
    })
}

/// Beam search from the root; returns the `top_k` leaves ranked by path
/// probability (product of sigmoid scores along the root-to-leaf path).
pub fn predict(
    model: &PltModel,
    features: &SparseVector,
    beam: usize,
    top_k: usize,
) -> RankedPrediction {
    let x = features.l2_normalized();
    let label_of = model.label_of_node();
    let mut pool: Vec<(LabelId, f32)> = Vec::new();
    let mut frontier: Vec<(NodeId, f32)> = vec![(LabelTree::ROOT, 1.0)];
    while !frontier.is_empty() {
        let mut candidates: Vec<(NodeId, f32)> = Vec::new();
        for &(node, prob) in &frontier {
            for &child in model.tree.children(node) {
                let nw = model.weights[child as usize].as_ref().expect("non-root weights");
                let p = prob * sigmoid(nw.weights.dot(&x) + nw.bias);
                if model.tree.is_leaf(child) {
                    if let Some(label) = label_of[child as usize] {
                        pool.push((label, p));
                    }
                } else {
                    candidates.push((child, p));
                }
            }
        }
        keep_top(&mut candidates, beam);
        frontier = candidates;
    }
    pool.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    pool.truncate(top_k);
    RankedPrediction::from_ranked(pool)
}

/// Scores every document in parallel.
pub fn predict_all(
    model: &PltModel,
    ds: &Dataset,
    beam: usize,
    top_k: usize,
) -> Result<Vec<RankedPrediction>> {
    ds.docs
        .par_iter()
        .map(|doc| {
            let features = doc.features.as_ref().ok_or_else(|| Error::InvalidArgument {
                detail: format!("document {} has no features", doc.id),
            })?;
            Ok(predict(model, features, beam, top_k))
        })
        .collect()
}

/// Exhaustively scores every leaf by multiplying sigmoids down its path.
/// Reference implementation for beam-search equivalence checks.
pub fn exhaustive_scores(model: &PltModel, features: &SparseVector) -> Vec<(LabelId, f32)> {
    let x = features.l2_normalized();
    let label_of = model.label_of_node();
    model
        .tree
        .leaves()
        .into_iter()
        .filter_map(|leaf| {
            let label = label_of[leaf as usize]?;
            let mut path: Vec<NodeId> = std::iter::once(leaf)
                .chain(model.tree.ancestors(leaf))
                .collect();
            path.reverse();
            let mut p = 1.0f32;
            for &node in path.iter().skip(1) {
                let nw = model.weights[node as usize].as_ref().expect("non-root weights");
                p *= sigmoid(nw.weights.dot(&x) + nw.bias);
            }
            Some((label, p))
        })
        .collect()
}

fn keep_top(candidates: &mut Vec<(NodeId, f32)>, width: usize) {
    candidates.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    candidates.truncate(width);
}

fn cap_negatives(mut negatives: Vec<u32>, cap: usize, seed: u64) -> Vec<u32> {
    if negatives.len() <= cap {
        return negatives;
    }
    let mut rng = seeded_rng(seed);
    for i in 0..cap {
        let j = rng.gen_range(i..negatives.len());
        negatives.swap(i, j);
    }
    negatives.truncate(cap);
    negatives.sort_unstable();
    negatives
}

/// Maps every vocabulary label to its tree leaf, requiring an exact match
/// between the leaf set and the vocabulary.
fn leaf_map(ds: &Dataset, tree: &LabelTree) -> Result<Vec<NodeId>> {
    let index = tree.name_index();
    let leaves = tree.leaves();
    if leaves.len() != ds.n_labels() {
        return Err(Error::LeafVocabMismatch {
            detail: format!(
                "tree has {} leaves but the vocabulary holds {}",
                leaves.len(),
                ds.n_labels()
            ),
        });
    }
    ds.label_vocab
        .iter()
        .map(|name| {
            let node = index.get(name.as_str()).copied().ok_or_else(|| Error::LeafVocabMismatch {
                detail: format!("label {name:?} is not in the tree"),
            })?;
            if !tree.is_leaf(node) {
                return Err(Error::LeafVocabMismatch {
                    detail: format!("label {name:?} is not a leaf"),
                });
            }
            Ok(node)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::tree::TreeBuilder;

    /// Two separable clusters: each document fires its cluster feature and a
    /// label-specific feature; every label gets positives.
    fn synthetic(n_docs: usize, n_labels: usize) -> (Dataset, LabelTree) {
        let half = n_labels / 2;
        let docs: Vec<Document> = (0..n_docs)
            .map(|i| {
                let label = (i % n_labels) as u32;
                let cluster = u32::from(label as usize >= half);
                let features =
                    SparseVector::from_pairs(vec![(cluster, 1.0), (2 + label, 0.5)]).unwrap();
                Document::new(i as u64, None, Some(features), vec![label])
            })
            .collect();
        let vocab: Vec<String> = (0..n_labels).map(|i| format!("l{i}")).collect();
        let ds = Dataset::new(docs, vocab, 2 + n_labels).unwrap();

        let mut b = TreeBuilder::new("Root", NodeKind::Root);
        let m0 = b.add_child(LabelTree::ROOT, NodeKind::Meta, "c0");
        let m1 = b.add_child(LabelTree::ROOT, NodeKind::Meta, "c1");
        for i in 0..n_labels {
            let parent = if i < half { m0 } else { m1 };
            b.add_child(parent, NodeKind::Label, format!("l{i}"));
        }
        (ds, b.build().unwrap())
    }

    #[test]
    fn training_is_deterministic() {
        let (ds, tree) = synthetic(40, 8);
        let config = PltConfig {
            epochs: 3,
            ..PltConfig::default()
        };
        let a = train(&ds, &tree, config).unwrap();
        let b = train(&ds, &tree, config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn separable_set_ranks_true_label_first() {
        let (ds, tree) = synthetic(80, 8);
        let model = train(&ds, &tree, PltConfig::default()).unwrap();
        let mut hits = 0;
        for doc in &ds.docs {
            let pred = predict(&model, doc.features.as_ref().unwrap(), 4, 3);
            if pred.top_labels(1).next() == Some(doc.labels[0]) {
                hits += 1;
            }
        }
        assert!(hits as f64 >= 0.95 * ds.n_docs() as f64, "hits {hits}/{}", ds.n_docs());
    }

    #[test]
    fn wide_beam_equals_exhaustive() {
        let (ds, tree) = synthetic(60, 8);
        let model = train(&ds, &tree, PltConfig { epochs: 4, ..PltConfig::default() }).unwrap();
        let widest = tree.level_widths().iter().copied().max().unwrap();
        for doc in ds.docs.iter().take(10) {
            let x = doc.features.as_ref().unwrap();
            let beam_ranked = predict(&model, x, widest, 8);
            let mut oracle = exhaustive_scores(&model, x);
            oracle.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            oracle.truncate(8);
            assert_eq!(beam_ranked.entries(), &oracle[..]);
        }
    }

    #[test]
    fn beam_widening_is_monotone_for_top1() {
        let (ds, tree) = synthetic(60, 8);
        let model = train(&ds, &tree, PltConfig { epochs: 4, ..PltConfig::default() }).unwrap();
        for doc in ds.docs.iter().take(10) {
            let x = doc.features.as_ref().unwrap();
            let mut prev = f32::NEG_INFINITY;
            for beam in 1..=4 {
                let pred = predict(&model, x, beam, 1);
                let top = pred.entries().first().map(|&(_, s)| s).unwrap_or(0.0);
                assert!(top >= prev, "beam {beam}: {top} < {prev}");
                prev = top;
            }
        }
    }

    #[test]
    fn flat_tree_degenerates_to_one_vs_rest() {
        // depth-1 tree: every label hangs off the root
        let docs: Vec<Document> = (0..20)
            .map(|i| {
                let label = (i % 4) as u32;
                let features = SparseVector::from_pairs(vec![(label, 1.0)]).unwrap();
                Document::new(i as u64, None, Some(features), vec![label])
            })
            .collect();
        let vocab: Vec<String> = (0..4).map(|i| format!("l{i}")).collect();
        let ds = Dataset::new(docs, vocab, 4).unwrap();
        let mut b = TreeBuilder::new("Root", NodeKind::Root);
        for i in 0..4 {
            b.add_child(LabelTree::ROOT, NodeKind::Label, format!("l{i}"));
        }
        let tree = b.build().unwrap();
        let model = train(&ds, &tree, PltConfig::default()).unwrap();
        for doc in &ds.docs {
            let pred = predict(&model, doc.features.as_ref().unwrap(), 1, 1);
            assert_eq!(pred.top_labels(1).next(), Some(doc.labels[0]));
        }
    }

    #[test]
    fn zero_feature_doc_is_ranked_by_biases() {
        let (ds, tree) = synthetic(40, 8);
        let model = train(&ds, &tree, PltConfig { epochs: 3, ..PltConfig::default() }).unwrap();
        let empty = SparseVector::new();
        let a = predict(&model, &empty, 4, 8);
        let b = predict(&model, &empty, 4, 8);
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn path_probabilities_multiply_along_paths() {
        let (ds, tree) = synthetic(40, 8);
        let model = train(&ds, &tree, PltConfig { epochs: 3, ..PltConfig::default() }).unwrap();
        let x = ds.docs[0].features.as_ref().unwrap().l2_normalized();
        let idx = model.tree.name_index();
        for (label, score) in exhaustive_scores(&model, ds.docs[0].features.as_ref().unwrap()) {
            assert!(score > 0.0 && score < 1.0);
            // recompute explicitly: sigmoid at the leaf times sigmoid at its parent
            let leaf = idx[model.label_vocab[label as usize].as_str()];
            let parent = model.tree.parent(leaf).unwrap();
            let lw = model.weights[leaf as usize].as_ref().unwrap();
            let pw = model.weights[parent as usize].as_ref().unwrap();
            let expected = sigmoid(pw.weights.dot(&x) + pw.bias) * sigmoid(lw.weights.dot(&x) + lw.bias);
            assert_eq!(score, expected);
        }
    }

    #[test]
    fn rejects_vocab_leaf_mismatch() {
        let (ds, _) = synthetic(10, 8);
        let mut b = TreeBuilder::new("Root", NodeKind::Root);
        b.add_child(LabelTree::ROOT, NodeKind::Label, "other");
        let tree = b.build().unwrap();
        assert!(matches!(
            train(&ds, &tree, PltConfig::default()),
            Err(Error::LeafVocabMismatch { .. })
        ));
    }

    #[test]
    fn rejects_empty_training_set() {
        let ds = Dataset::new(vec![], vec!["a".into()], 2).unwrap();
        let mut b = TreeBuilder::new("Root", NodeKind::Root);
        b.add_child(LabelTree::ROOT, NodeKind::Label, "a");
        let tree = b.build().unwrap();
        assert!(matches!(
            train(&ds, &tree, PltConfig::default()),
            Err(Error::EmptyTrainingSet { .. })
        ));
    }
}
