//! Rooted label trees.
//!
//! A [`LabelTree`] houses both semantic taxonomies (internal nodes are real
//! labels) and synthetic hierarchies built by clustering (internal nodes are
//! meta-labels, real labels sit at the leaves). Node ids are canonical: the
//! root is id 0 and every children list is ascending, assigned in
//! breadth-first order, so identical structures get identical ids.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::collections::VecDeque;

pub type NodeId = u32;

/// What a tree node stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    /// The unique root; never a label.
    Root,
    /// A real label of some dataset vocabulary.
    Label,
    /// A synthetic cluster node introduced by tree building.
    Meta,
}

impl NodeKind {
    pub fn token(self) -> &'static str {
        match self {
            NodeKind::Root => "root",
            NodeKind::Label => "label",
            NodeKind::Meta => "meta",
        }
    }

    pub fn from_token(s: &str) -> Option<NodeKind> {
        match s {
            "root" => Some(NodeKind::Root),
            "label" => Some(NodeKind::Label),
            "meta" => Some(NodeKind::Meta),
            _ => None,
        }
    }
}

/// A rooted tree over named nodes. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTree {
    kinds: Vec<NodeKind>,
    names: Vec<String>,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    /// Set when a supernode had to be added to join multiple top-level labels.
    synthetic_root: bool,
}

impl LabelTree {
    pub const ROOT: NodeId = 0;

    pub fn n_nodes(&self) -> usize {
        self.names.len()
    }

    pub fn node_ids(&self) -> std::ops::Range<NodeId> {
        0..self.n_nodes() as NodeId
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.kinds[id as usize]
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id as usize]
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent[id as usize]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id as usize]
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.children[id as usize].is_empty()
    }

    pub fn has_synthetic_root(&self) -> bool {
        self.synthetic_root
    }

    /// Leaf node ids in ascending id order.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.node_ids().filter(|&id| self.is_leaf(id)).collect()
    }

    /// Non-root node ids in ascending id order.
    pub fn non_root_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(move |&id| id != Self::ROOT)
    }

    /// Edge count from the root to each node.
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depths = vec![0usize; self.n_nodes()];
        for id in self.node_ids().skip(1) {
            // Parents precede children in the canonical BFS numbering.
            depths[id as usize] = depths[self.parent(id).unwrap() as usize] + 1;
        }
        depths
    }

    /// Maximum root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    /// Number of nodes at each depth, index 0 being the root level.
    pub fn level_widths(&self) -> Vec<usize> {
        let depths = self.node_depths();
        let mut widths = vec![0usize; self.depth() + 1];
        for d in depths {
            widths[d] += 1;
        }
        widths
    }

    /// Walks from `id`'s parent up to and including the root.
    pub fn ancestors(&self, id: NodeId) -> AncestorIter<'_> {
        AncestorIter {
            tree: self,
            current: self.parent(id),
        }
    }

    /// Node count of every subtree.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![1usize; self.n_nodes()];
        for id in self.node_ids().rev() {
            if let Some(p) = self.parent(id) {
                sizes[p as usize] += sizes[id as usize];
            }
        }
        sizes
    }

    /// Name → node id map for label lookups.
    pub fn name_index(&self) -> HashMap<&str, NodeId> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as NodeId))
            .collect()
    }

    /// The parent→children multimap keyed by names; structural identity for
    /// round-trip checks.
    pub fn name_edges(&self) -> Vec<(String, Vec<String>)> {
        self.node_ids()
            .filter(|&id| !self.is_leaf(id))
            .map(|id| {
                (
                    self.names[id as usize].clone(),
                    self.children(id)
                        .iter()
                        .map(|&c| self.names[c as usize].clone())
                        .collect(),
                )
            })
            .collect()
    }

    /// Serializes one node per line: `node_id parent_id kind name`.
    /// The root has parent_id -1.
    pub fn to_native_lines(&self) -> Result<String> {
        let mut out = String::new();
        for id in self.node_ids() {
            let name = self.name(id);
            if name.chars().any(char::is_whitespace) || name.is_empty() {
                return Err(Error::InvalidName {
                    name: name.to_string(),
                    detail: "names in tree files must be non-empty and whitespace-free".into(),
                });
            }
            let parent = self
                .parent(id)
                .map(|p| p as i64)
                .unwrap_or(-1);
            out.push_str(&format!(
                "{} {} {} {}\n",
                id,
                parent,
                self.kind(id).token(),
                name
            ));
        }
        Ok(out)
    }

    /// Parses the native one-node-per-line format.
    pub fn from_native_lines(text: &str, origin: &std::path::Path) -> Result<LabelTree> {
        let mut builder: Option<TreeBuilder> = None;
        let mut pending: Vec<(NodeId, NodeId, NodeKind, String)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut it = line.splitn(4, ' ');
            let (id, parent, kind, name) = (it.next(), it.next(), it.next(), it.next());
            let (Some(id), Some(parent), Some(kind), Some(name)) = (id, parent, kind, name) else {
                return Err(Error::MalformedLine {
                    path: origin.into(),
                    line: lineno + 1,
                    detail: "expected: node_id parent_id kind name".into(),
                });
            };
            let malformed = |detail: String| Error::MalformedLine {
                path: origin.into(),
                line: lineno + 1,
                detail,
            };
            let id: i64 = id
                .parse()
                .map_err(|_| malformed(format!("bad node id {id:?}")))?;
            let parent: i64 = parent
                .parse()
                .map_err(|_| malformed(format!("bad parent id {parent:?}")))?;
            let kind = NodeKind::from_token(kind)
                .ok_or_else(|| malformed(format!("unknown node kind {kind:?}")))?;
            if parent < 0 {
                if builder.is_some() {
                    return Err(malformed("second root line".into()));
                }
                builder = Some(TreeBuilder::new(name, kind));
            } else {
                pending.push((id as NodeId, parent as NodeId, kind, name.to_string()));
            }
        }
        let mut builder = builder.ok_or_else(|| Error::MalformedLine {
            path: origin.into(),
            line: 0,
            detail: "no root line (parent_id -1) found".into(),
        })?;
        // Lines may reference ids in any order; attach in passes.
        let mut id_map: HashMap<NodeId, NodeId> = HashMap::new();
        id_map.insert(0, LabelTree::ROOT);
        let mut remaining = pending;
        while !remaining.is_empty() {
            let before = remaining.len();
            remaining.retain(|(id, parent, kind, name)| {
                if let Some(&p) = id_map.get(parent) {
                    let new_id = builder.add_child(p, *kind, name.clone());
                    id_map.insert(*id, new_id);
                    false
                } else {
                    true
                }
            });
            if remaining.len() == before {
                return Err(Error::DanglingChild {
                    name: remaining[0].3.clone(),
                    detail: format!("parent id {} never defined", remaining[0].1),
                });
            }
        }
        builder.build()
    }
}

pub struct AncestorIter<'a> {
    tree: &'a LabelTree,
    current: Option<NodeId>,
}

impl Iterator for AncestorIter<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let id = self.current?;
        self.current = self.tree.parent(id);
        Some(id)
    }
}

/// Incremental tree construction; `build` canonicalizes ids and validates.
#[derive(Debug)]
pub struct TreeBuilder {
    kinds: Vec<NodeKind>,
    names: Vec<String>,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    synthetic_root: bool,
}

impl TreeBuilder {
    pub fn new(root_name: impl Into<String>, root_kind: NodeKind) -> Self {
        TreeBuilder {
            kinds: vec![root_kind],
            names: vec![root_name.into()],
            parent: vec![None],
            children: vec![Vec::new()],
            synthetic_root: false,
        }
    }

    pub fn mark_synthetic_root(&mut self) {
        self.synthetic_root = true;
    }

    pub fn n_nodes(&self) -> usize {
        self.names.len()
    }

    pub fn add_child(&mut self, parent: NodeId, kind: NodeKind, name: impl Into<String>) -> NodeId {
        let id = self.names.len() as NodeId;
        self.kinds.push(kind);
        self.names.push(name.into());
        self.parent.push(Some(parent));
        self.children.push(Vec::new());
        self.children[parent as usize].push(id);
        id
    }

    /// Validates and renumbers nodes in breadth-first order (children keep
    /// their sibling order), making structurally identical trees bit-identical.
    pub fn build(self) -> Result<LabelTree> {
        let n = self.names.len();
        // Unique names.
        let mut seen: HashMap<&str, ()> = HashMap::with_capacity(n);
        for name in &self.names {
            if seen.insert(name.as_str(), ()).is_some() {
                return Err(Error::InvalidName {
                    name: name.clone(),
                    detail: "duplicate node name".into(),
                });
            }
        }
        // BFS renumber from the root.
        let mut order: Vec<NodeId> = Vec::with_capacity(n);
        let mut queue = VecDeque::from([0 as NodeId]);
        while let Some(id) = queue.pop_front() {
            order.push(id);
            queue.extend(self.children[id as usize].iter().copied());
        }
        if order.len() != n {
            // Unreachable nodes exist; with single-parent construction this
            // cannot happen, but keep the check for safety.
            return Err(Error::TaxonomyCycle {
                name: self.names[n - 1].clone(),
            });
        }
        let mut new_id = vec![0 as NodeId; n];
        for (new, &old) in order.iter().enumerate() {
            new_id[old as usize] = new as NodeId;
        }
        let mut kinds = Vec::with_capacity(n);
        let mut names = Vec::with_capacity(n);
        let mut parent = Vec::with_capacity(n);
        let mut children: Vec<Vec<NodeId>> = Vec::with_capacity(n);
        for &old in &order {
            kinds.push(self.kinds[old as usize]);
            names.push(self.names[old as usize].clone());
            parent.push(self.parent[old as usize].map(|p| new_id[p as usize]));
            children.push(
                self.children[old as usize]
                    .iter()
                    .map(|&c| new_id[c as usize])
                    .collect(),
            );
        }
        Ok(LabelTree {
            kinds,
            names,
            parent,
            children,
            synthetic_root: self.synthetic_root,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LabelTree {
        let mut b = TreeBuilder::new("Root", NodeKind::Root);
        let a = b.add_child(LabelTree::ROOT, NodeKind::Label, "a");
        b.add_child(LabelTree::ROOT, NodeKind::Label, "b");
        b.add_child(a, NodeKind::Label, "c");
        b.add_child(a, NodeKind::Label, "d");
        b.build().unwrap()
    }

    #[test]
    fn canonical_ids_are_bfs() {
        let t = sample();
        assert_eq!(t.name(0), "Root");
        assert_eq!(t.children(0), &[1, 2]);
        assert_eq!(t.name(1), "a");
        assert_eq!(t.children(1), &[3, 4]);
        assert_eq!(t.depth(), 2);
        assert_eq!(t.level_widths(), vec![1, 2, 2]);
    }

    #[test]
    fn ancestors_walk_to_root() {
        let t = sample();
        let path: Vec<&str> = t.ancestors(3).map(|id| t.name(id)).collect();
        assert_eq!(path, vec!["a", "Root"]);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut b = TreeBuilder::new("Root", NodeKind::Root);
        b.add_child(LabelTree::ROOT, NodeKind::Label, "a");
        b.add_child(LabelTree::ROOT, NodeKind::Label, "a");
        assert!(b.build().is_err());
    }

    #[test]
    fn native_round_trip() {
        let t = sample();
        let text = t.to_native_lines().unwrap();
        let back = LabelTree::from_native_lines(&text, std::path::Path::new("mem")).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn subtree_sizes_count_nodes() {
        let t = sample();
        assert_eq!(t.subtree_sizes(), vec![5, 3, 1, 1, 1]);
    }
}
