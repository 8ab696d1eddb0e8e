//! Whitespace-separated taxonomy files: one `parent child child ...` line
//! per internal node.
//!
//! The first token of the first line is the root unless the file declares
//! several top-level labels, in which case a synthetic `Root` supernode is
//! added automatically and flagged on the returned tree.

use crate::error::{Error, Result};
use crate::tree::{LabelTree, NodeKind, TreeBuilder};
use std::collections::HashMap;
use std::fs;
use std::path::Path;

pub fn parse_taxonomy(path: &Path) -> Result<LabelTree> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_taxonomy_str(&text, path)
}

/// Parses taxonomy text; `origin` is used in error messages only.
pub fn parse_taxonomy_str(text: &str, origin: &Path) -> Result<LabelTree> {
    // name -> dense index, in first-mention order.
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut intern = |name: &str, names: &mut Vec<String>| -> usize {
        if let Some(&i) = index.get(name) {
            i
        } else {
            let i = names.len();
            index.insert(name.to_string(), i);
            names.push(name.to_string());
            i
        }
    };

    let mut parent_of: Vec<Option<usize>> = Vec::new();
    let mut children_of: Vec<Vec<usize>> = Vec::new();
    let mut saw_line = false;
    for (lineno, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        let Some(parent_name) = tokens.next() else {
            continue; // blank line
        };
        saw_line = true;
        let parent = intern(parent_name, &mut names);
        grow(&mut parent_of, &mut children_of, names.len());
        let mut any_child = false;
        for child_name in tokens {
            any_child = true;
            if child_name == parent_name {
                return Err(Error::TaxonomyCycle {
                    name: parent_name.to_string(),
                });
            }
            let child = intern(child_name, &mut names);
            grow(&mut parent_of, &mut children_of, names.len());
            match parent_of[child] {
                Some(existing) if existing == parent => {
                    return Err(Error::DanglingChild {
                        name: child_name.to_string(),
                        detail: format!(
                            "listed twice under parent {parent_name:?} ({}:{})",
                            origin.display(),
                            lineno + 1
                        ),
                    });
                }
                Some(existing) => {
                    // Re-parenting a node under one of its own descendants is
                    // a cycle, not a second parent.
                    if chain_passes_through(parent, child, &parent_of) {
                        return Err(Error::TaxonomyCycle {
                            name: child_name.to_string(),
                        });
                    }
                    return Err(Error::TwoParents {
                        name: child_name.to_string(),
                        first: names[existing].clone(),
                        second: parent_name.to_string(),
                    });
                }
                None => {
                    parent_of[child] = Some(parent);
                    children_of[parent].push(child);
                }
            }
        }
        if !any_child {
            return Err(Error::MalformedLine {
                path: origin.into(),
                line: lineno + 1,
                detail: format!("parent {parent_name:?} declared without children"),
            });
        }
    }
    if !saw_line {
        return Err(Error::MalformedLine {
            path: origin.into(),
            line: 0,
            detail: "taxonomy file is empty".into(),
        });
    }

    // Top-level names: mentioned but never assigned a parent.
    let tops: Vec<usize> = (0..names.len()).filter(|&i| parent_of[i].is_none()).collect();
    let mut builder = match tops.len() {
        0 => {
            return Err(Error::TaxonomyCycle {
                name: names[0].clone(),
            })
        }
        1 => TreeBuilder::new(names[tops[0]].clone(), NodeKind::Root),
        _ => {
            let mut root_name = "Root".to_string();
            while index.contains_key(&root_name) {
                root_name.push('_');
            }
            let mut b = TreeBuilder::new(root_name, NodeKind::Root);
            b.mark_synthetic_root();
            b
        }
    };

    // Attach depth-first following declaration order.
    let mut node_id = vec![u32::MAX; names.len()];
    let mut stack: Vec<usize> = Vec::new();
    if tops.len() == 1 {
        node_id[tops[0]] = LabelTree::ROOT;
        stack.push(tops[0]);
    } else {
        for &top in tops.iter().rev() {
            node_id[top] = builder.add_child(LabelTree::ROOT, NodeKind::Label, names[top].clone());
            stack.push(top);
        }
        stack.reverse();
    }
    while let Some(i) = stack.pop() {
        for &child in &children_of[i] {
            node_id[child] = builder.add_child(node_id[i], NodeKind::Label, names[child].clone());
            stack.push(child);
        }
    }
    if builder.n_nodes() < names.len() + usize::from(tops.len() > 1) {
        // Some declared names were never reached from the root: they sit in
        // a detached component, which by construction must contain a cycle.
        let unreached = (0..names.len()).find(|&i| node_id[i] == u32::MAX).unwrap();
        let witness = find_cycle_member(unreached, &parent_of);
        return Err(Error::TaxonomyCycle {
            name: names[witness].clone(),
        });
    }
    builder.build()
}

fn grow(parent_of: &mut Vec<Option<usize>>, children_of: &mut Vec<Vec<usize>>, len: usize) {
    parent_of.resize(len, None);
    children_of.resize(len, Vec::new());
}

/// True when `target` lies on the parent chain starting at `from`.
fn chain_passes_through(from: usize, target: usize, parent_of: &[Option<usize>]) -> bool {
    let mut seen = std::collections::HashSet::new();
    let mut cur = Some(from);
    while let Some(i) = cur {
        if i == target {
            return true;
        }
        if !seen.insert(i) {
            return false;
        }
        cur = parent_of[i];
    }
    false
}

fn find_cycle_member(start: usize, parent_of: &[Option<usize>]) -> usize {
    let mut seen = std::collections::HashSet::new();
    let mut cur = start;
    loop {
        if !seen.insert(cur) {
            return cur;
        }
        match parent_of[cur] {
            Some(p) => cur = p,
            None => return start,
        }
    }
}

/// Writes the `parent child child ...` format, one line per internal node in
/// node-id order. Node kinds are not representable in this format.
pub fn write_taxonomy(tree: &LabelTree, path: &Path) -> Result<()> {
    let mut out = String::new();
    for id in tree.node_ids() {
        if tree.is_leaf(id) {
            continue;
        }
        let name = tree.name(id);
        check_name(name)?;
        out.push_str(name);
        for &child in tree.children(id) {
            check_name(tree.name(child))?;
            out.push(' ');
            out.push_str(tree.name(child));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(Error::InvalidName {
            name: name.to_string(),
            detail: "taxonomy names must be non-empty and whitespace-free".into(),
        });
    }
    Ok(())
}
