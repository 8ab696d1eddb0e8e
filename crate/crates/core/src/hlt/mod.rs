//! Synthetic hierarchical label trees: recursive balanced clustering of
//! label embeddings, and segmentation of trees under a node budget.

mod kmeans;

pub use kmeans::{balanced_kmeans, BalancedKmeans};

use crate::error::{Error, Result};
use crate::features::LabelFeatureMatrix;
use crate::rng::derive_seed;
use crate::tree::{LabelTree, NodeId, NodeKind, TreeBuilder};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Cluster counts per internal level, top level first. The final tree level
/// holds the labels themselves and takes no count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchingPlan {
    ks: Vec<usize>,
}

impl BranchingPlan {
    pub fn new(ks: Vec<usize>) -> Result<Self> {
        if ks.is_empty() {
            return Err(Error::EmptyPlan);
        }
        if ks.iter().any(|&k| k == 0) {
            return Err(Error::InvalidArgument {
                detail: "branching factors must be at least 1".into(),
            });
        }
        Ok(BranchingPlan { ks })
    }

    /// Parses a comma-separated list such as `512,8`.
    pub fn parse(s: &str) -> Result<Self> {
        let ks = s
            .split(',')
            .map(|t| {
                t.trim().parse::<usize>().map_err(|_| Error::InvalidArgument {
                    detail: format!("bad branching factor {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        BranchingPlan::new(ks)
    }

    pub fn levels(&self) -> &[usize] {
        &self.ks
    }
}

impl std::fmt::Display for BranchingPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.ks.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// What happened while building a tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HltBuildReport {
    /// Subtrees that stopped splitting because the level's cluster count
    /// exceeded their label count.
    pub early_stops: usize,
    /// Labels with all-zero embeddings, distributed round-robin.
    pub zero_rows: usize,
    /// Meta nodes created at each plan level.
    pub level_meta_counts: Vec<usize>,
    pub n_leaves: usize,
    pub n_leaf_parents: usize,
    /// Achieved average number of leaves per leaf parent.
    pub mean_leaf_fanout: f64,
}

/// Builds a label tree by clustering label embeddings level by level.
///
/// Level i of the plan splits each pending group into `ks[i]` balanced
/// clusters; after the last level every remaining label becomes a leaf.
/// Groups smaller than their level's cluster count stop splitting early
/// (recorded in the report, not an error). Labels whose embedding row is
/// all zero are withheld from clustering and dealt round-robin by label id
/// across the produced clusters.
///
/// Each group's clustering is seeded by `hash(seed, parent node id)`, so the
/// result is reproducible and independent of scheduling.
pub fn build_hlt(
    matrix: &LabelFeatureMatrix,
    names: &[String],
    plan: &BranchingPlan,
    seed: u64,
    max_iters: usize,
) -> Result<(LabelTree, HltBuildReport)> {
    assert_eq!(matrix.rows.len(), names.len(), "matrix/name alignment");
    let n_labels = matrix.rows.len();
    let k1 = plan.levels()[0];
    if k1 > n_labels {
        return Err(Error::TooManyClusters { k: k1, n: n_labels });
    }

    let mut taken: HashSet<String> = names.iter().cloned().collect();
    let fresh_name = |base: String, taken: &mut HashSet<String>| -> String {
        let mut name = base;
        while taken.contains(&name) {
            name.push('_');
        }
        taken.insert(name.clone());
        name
    };
    let root_name = fresh_name("Root".to_string(), &mut taken);

    let mut builder = TreeBuilder::new(root_name, NodeKind::Root);
    let mut report = HltBuildReport {
        early_stops: 0,
        zero_rows: 0,
        level_meta_counts: vec![0; plan.levels().len()],
        n_leaves: 0,
        n_leaf_parents: 0,
        mean_leaf_fanout: 0.0,
    };

    // Depth-first over (parent node, sorted label group, plan level).
    let mut stack: Vec<(NodeId, Vec<u32>, usize)> =
        vec![(LabelTree::ROOT, (0..n_labels as u32).collect(), 0)];
    while let Some((parent, group, level)) = stack.pop() {
        let exhausted = level == plan.levels().len();
        let k = if exhausted { 0 } else { plan.levels()[level] };
        if exhausted || k > group.len() {
            if !exhausted {
                report.early_stops += 1;
            }
            for label in group {
                builder.add_child(parent, NodeKind::Label, names[label as usize].clone());
            }
            continue;
        }

        let (nonzero, zero): (Vec<u32>, Vec<u32>) = group
            .iter()
            .partition(|&&l| !matrix.rows[l as usize].is_empty());
        report.zero_rows += zero.len();

        let mut clusters: Vec<Vec<u32>> = vec![Vec::new(); k];
        if nonzero.len() >= k {
            let rows: Vec<crate::sparse::SparseVector> = nonzero
                .iter()
                .map(|&l| matrix.rows[l as usize].clone())
                .collect();
            let km = balanced_kmeans(&rows, k, derive_seed(seed, u64::from(parent)), max_iters)?;
            for (i, &label) in nonzero.iter().enumerate() {
                clusters[km.assignment[i] as usize].push(label);
            }
            for (i, &label) in zero.iter().enumerate() {
                clusters[i % k].push(label);
            }
        } else {
            // Too few clusterable rows; deal the whole group round-robin.
            for (i, &label) in group.iter().enumerate() {
                clusters[i % k].push(label);
            }
        }

        // Create this level's meta nodes first so sibling ids are
        // consecutive, then recurse in reverse to keep DFS order.
        let mut children: Vec<(NodeId, Vec<u32>)> = Vec::with_capacity(k);
        for mut cluster in clusters {
            debug_assert!(!cluster.is_empty());
            cluster.sort_unstable();
            let ordinal = report.level_meta_counts[level];
            report.level_meta_counts[level] += 1;
            let name = fresh_name(format!("m{}_{}", level + 1, ordinal), &mut taken);
            let node = builder.add_child(parent, NodeKind::Meta, name);
            children.push((node, cluster));
        }
        for (node, cluster) in children.into_iter().rev() {
            stack.push((node, cluster, level + 1));
        }
    }

    let tree = builder.build()?;
    report.n_leaves = tree.leaves().len();
    let parents: HashSet<NodeId> = tree
        .leaves()
        .iter()
        .filter_map(|&l| tree.parent(l))
        .collect();
    report.n_leaf_parents = parents.len();
    report.mean_leaf_fanout = report.n_leaves as f64 / report.n_leaf_parents.max(1) as f64;
    Ok((tree, report))
}

/// Splits a tree into sub-trees of at most `max_nodes` nodes.
///
/// Walks depth-first from the root, greedily packing sibling subtrees
/// left-to-right into the current segment as long as the segment plus the
/// shared root-to-anchor path fits the budget; a child subtree that alone
/// exceeds the remaining budget is recursed into. Every leaf keeps its
/// original root-to-leaf ancestor path, and the sub-tree leaf sets
/// partition the original leaf set.
pub fn segment_tree(tree: &LabelTree, max_nodes: usize) -> Result<Vec<LabelTree>> {
    let depths = tree.node_depths();
    let longest_path = tree
        .leaves()
        .iter()
        .map(|&l| depths[l as usize] + 1)
        .max()
        .unwrap_or(1);
    if longest_path > max_nodes {
        return Err(Error::BudgetTooSmall {
            budget: max_nodes,
            path_len: longest_path,
        });
    }
    if tree.n_nodes() <= max_nodes {
        return Ok(vec![tree.clone()]);
    }

    let sizes = tree.subtree_sizes();
    // (anchor, packed child subtrees)
    let mut segments: Vec<(NodeId, Vec<NodeId>)> = Vec::new();
    let mut stack: Vec<(NodeId, usize)> = vec![(LabelTree::ROOT, 1)];
    while let Some((node, path_len)) = stack.pop() {
        let budget_left = max_nodes - path_len;
        let mut current: Vec<NodeId> = Vec::new();
        let mut current_size = 0usize;
        for &child in tree.children(node) {
            let s = sizes[child as usize];
            if s > budget_left {
                if !current.is_empty() {
                    segments.push((node, std::mem::take(&mut current)));
                    current_size = 0;
                }
                stack.push((child, path_len + 1));
            } else if current_size + s <= budget_left {
                current.push(child);
                current_size += s;
            } else {
                segments.push((node, std::mem::take(&mut current)));
                current = vec![child];
                current_size = s;
            }
        }
        if !current.is_empty() {
            segments.push((node, current));
        }
    }

    segments
        .into_iter()
        .map(|(anchor, subtrees)| materialize_segment(tree, anchor, &subtrees))
        .collect()
}

/// Builds a standalone tree for one segment: the root-to-anchor path plus
/// the given whole subtrees of the anchor.
fn materialize_segment(tree: &LabelTree, anchor: NodeId, subtrees: &[NodeId]) -> Result<LabelTree> {
    let mut path = vec![anchor];
    path.extend(tree.ancestors(anchor));
    path.reverse(); // root .. anchor

    let mut builder = TreeBuilder::new(tree.name(path[0]), tree.kind(path[0]));
    let mut last = LabelTree::ROOT;
    for &node in &path[1..] {
        last = builder.add_child(last, tree.kind(node), tree.name(node));
    }
    // DFS copy of each packed subtree, preserving child order.
    let mut stack: Vec<(NodeId, NodeId)> = Vec::new(); // (original, new parent)
    for &sub in subtrees.iter().rev() {
        stack.push((sub, last));
    }
    while let Some((orig, parent)) = stack.pop() {
        let new = builder.add_child(parent, tree.kind(orig), tree.name(orig));
        for &child in tree.children(orig).iter().rev() {
            stack.push((child, new));
        }
    }
    builder.build()
}
