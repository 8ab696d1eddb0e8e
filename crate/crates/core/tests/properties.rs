//! Property tests for the structural invariants: format round-trips,
//! sampling determinism, cluster balance, metric identities, and
//! conversion closure properties.

use proptest::collection::vec;
use proptest::prelude::*;
use std::path::Path;
use xcbridge::corpus::{
    normalize_labels, parse_taxonomy_str, parse_xml_repo, subsample, write_taxonomy,
    write_xml_repo, Dataset, Document, LabelId,
};
use xcbridge::features::{fit_tfidf, tokenize, transform};
use xcbridge::hlt::balanced_kmeans;
use xcbridge::metrics::{precision_at_k, r_precision, RankedPrediction};
use xcbridge::sparse::SparseVector;
use xcbridge::transfer::{flatten, inject_hierarchy, strip_meta, MetaLabelFilter, TransferMode};
use xcbridge::tree::{LabelTree, NodeKind, TreeBuilder};

/// Sparse features on a coarse weight grid, so text rendering is exact.
fn arb_features(dim: u32) -> impl Strategy<Value = SparseVector> {
    vec((0..dim, 1..=64u32), 0..6).prop_map(|pairs| {
        let mut entries: Vec<(u32, f32)> = pairs
            .into_iter()
            .map(|(i, q)| (i, q as f32 * 0.25))
            .collect();
        entries.sort_unstable_by_key(|&(i, _)| i);
        entries.dedup_by_key(|&mut (i, _)| i);
        SparseVector::from_pairs(entries).unwrap()
    })
}

fn arb_dataset() -> impl Strategy<Value = Dataset> {
    let dim = 12u32;
    let n_labels = 9usize;
    vec((arb_features(dim), vec(0..n_labels as LabelId, 0..5)), 0..20).prop_map(move |rows| {
        let docs = rows
            .into_iter()
            .enumerate()
            .map(|(i, (features, labels))| Document::new(i as u64, None, Some(features), labels))
            .collect();
        Dataset::new(
            docs,
            (0..n_labels).map(|i| i.to_string()).collect(),
            dim as usize,
        )
        .unwrap()
    })
}

proptest! {
    /// Writing and re-parsing a feature dataset reproduces it exactly when
    /// weights sit on a grid the six-digit rendering preserves.
    #[test]
    fn xml_repo_round_trip(ds in arb_dataset()) {
        let tmp = tempfile::NamedTempFile::new().unwrap();
        write_xml_repo(&ds, tmp.path()).unwrap();
        let back = parse_xml_repo(tmp.path()).unwrap();
        prop_assert_eq!(&ds, &back);
        // and the rendering is a fixed point
        let tmp2 = tempfile::NamedTempFile::new().unwrap();
        write_xml_repo(&back, tmp2.path()).unwrap();
        prop_assert_eq!(
            std::fs::read_to_string(tmp.path()).unwrap(),
            std::fs::read_to_string(tmp2.path()).unwrap()
        );
    }

    /// Taxonomy writing preserves the parent→children multimap.
    #[test]
    fn taxonomy_round_trip(shape in vec(1..5usize, 1..4)) {
        let mut builder = TreeBuilder::new("Root", NodeKind::Root);
        let mut frontier = vec![LabelTree::ROOT];
        let mut counter = 0;
        for width in shape {
            let mut next = Vec::new();
            for &node in &frontier {
                for _ in 0..width {
                    next.push(builder.add_child(node, NodeKind::Label, format!("n{counter}")));
                    counter += 1;
                }
            }
            frontier = next;
        }
        let tree = builder.build().unwrap();
        let tmp = tempfile::NamedTempFile::new().unwrap();
        write_taxonomy(&tree, tmp.path()).unwrap();
        let text = std::fs::read_to_string(tmp.path()).unwrap();
        let back = parse_taxonomy_str(&text, Path::new("mem")).unwrap();
        prop_assert_eq!(tree.name_edges(), back.name_edges());
    }

    /// Subsampling is deterministic per seed, disjoint, and leaves the
    /// vocabulary alone.
    #[test]
    fn subsample_contract(ds in arb_dataset(), seed in any::<u64>(), split in 0..=100usize) {
        let n = ds.n_docs();
        let n_train = n * split / 100;
        let n_val = (n - n_train) / 2;
        let (t1, v1) = subsample(&ds, n_train, n_val, seed).unwrap();
        let (t2, v2) = subsample(&ds, n_train, n_val, seed).unwrap();
        prop_assert_eq!(&t1, &t2);
        prop_assert_eq!(&v1, &v2);
        prop_assert_eq!(t1.n_docs(), n_train);
        prop_assert_eq!(v1.n_docs(), n_val);
        prop_assert_eq!(&t1.label_vocab, &ds.label_vocab);
        let train_ids: std::collections::HashSet<u64> = t1.docs.iter().map(|d| d.id).collect();
        prop_assert!(v1.docs.iter().all(|d| !train_ids.contains(&d.id)));
    }

    /// Balanced clustering keeps every cluster within one point of n/k.
    #[test]
    fn kmeans_balance(points in vec(arb_features(10), 1..40), k_frac in 0.0..1.0f64, seed in any::<u64>()) {
        let n = points.len();
        let k = ((n as f64 * k_frac) as usize).clamp(1, n);
        let result = balanced_kmeans(&points, k, seed, 25).unwrap();
        let sizes = result.cluster_sizes(k);
        let floor = n / k;
        let ceil = n.div_ceil(k);
        prop_assert!(sizes.iter().all(|&s| s == floor || s == ceil), "sizes {:?}", sizes);
        prop_assert!(result.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    /// k·P@k counts hits, so it never decreases in k; R-Precision is P@r.
    #[test]
    fn ranking_metric_identities(
        order in vec(0..30u32, 0..12),
        relevant in vec(0..30u32, 0..8),
        k in 1..15usize,
    ) {
        let mut seen = std::collections::HashSet::new();
        let order: Vec<u32> = order.into_iter().filter(|l| seen.insert(*l)).collect();
        let pred = RankedPrediction::from_scores(
            order.iter().enumerate().map(|(r, &l)| (l, 1.0 / (r as f32 + 1.0))),
        ).unwrap();
        let relevant = normalize_labels(relevant);

        let p = precision_at_k(&pred, &relevant, k);
        prop_assert!((0.0..=1.0).contains(&p));
        if k > 1 {
            let hits_k = k as f64 * p;
            let hits_prev = (k - 1) as f64 * precision_at_k(&pred, &relevant, k - 1);
            prop_assert!(hits_k + 1e-12 >= hits_prev);
        }
        if !relevant.is_empty() {
            prop_assert_eq!(
                r_precision(&pred, &relevant),
                precision_at_k(&pred, &relevant, relevant.len())
            );
        } else {
            prop_assert_eq!(r_precision(&pred, &relevant), 1.0);
        }
    }

    /// Metrics are invariant under a consistent relabeling of the ids.
    #[test]
    fn metrics_relabeling_invariance(
        order in vec(0..8u32, 0..8),
        relevant in vec(0..8u32, 0..5),
        shift in 1..7u32,
        k in 1..10usize,
    ) {
        let mut seen = std::collections::HashSet::new();
        let order: Vec<u32> = order.into_iter().filter(|l| seen.insert(*l)).collect();
        let relevant = normalize_labels(relevant);
        // a permutation of 0..8 that also preserves relative order within
        // rankings is needed for bit-equality; use a cyclic shift and
        // re-rank by the same scores
        let perm = |l: u32| (l + shift) % 8;
        let pred = RankedPrediction::from_scores(
            order.iter().enumerate().map(|(r, &l)| (l, 1.0 / (r as f32 + 1.0))),
        ).unwrap();
        let pred_mapped = RankedPrediction::from_scores(
            order.iter().enumerate().map(|(r, &l)| (perm(l), 1.0 / (r as f32 + 1.0))),
        ).unwrap();
        let relevant_mapped = normalize_labels(relevant.iter().map(|&l| perm(l)).collect());

        prop_assert_eq!(
            precision_at_k(&pred, &relevant, k),
            precision_at_k(&pred_mapped, &relevant_mapped, k)
        );
        prop_assert_eq!(
            r_precision(&pred, &relevant),
            r_precision(&pred_mapped, &relevant_mapped)
        );
    }

    /// Tokens are lowercase alphanumeric runs, never empty.
    #[test]
    fn tokenize_charset(text in ".{0,60}") {
        for token in tokenize(&text) {
            prop_assert!(!token.is_empty());
            prop_assert!(token.chars().all(char::is_alphanumeric));
            prop_assert_eq!(&token.to_lowercase(), &token);
        }
    }

    /// Transform weight is exactly term count times idf.
    #[test]
    fn transform_matches_recount(texts in vec("[a-e ]{0,20}", 1..6), probe in "[a-e ]{0,20}") {
        let docs: Vec<Document> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(i as u64, Some(tokenize(t)), None, vec![]))
            .collect();
        let ds = Dataset::new(docs, vec![], 0).unwrap();
        let model = fit_tfidf(&ds).unwrap();
        let tokens = tokenize(&probe);
        let vector = transform(&model, &tokens);
        for (token, &idx) in &model.vocab {
            let count = tokens.iter().filter(|t| *t == token).count() as f32;
            let expected = count * model.idf[idx as usize];
            let got = vector.get(idx);
            prop_assert_eq!(got, if expected == 0.0 { 0.0 } else { expected });
        }
    }
}

/// Random two-level taxonomy plus a dataset labelled with its nodes.
fn arb_taxonomy_and_labels() -> impl Strategy<Value = (LabelTree, Vec<Vec<LabelId>>)> {
    (vec(1..4usize, 1..4), vec(vec(0..20usize, 0..5), 1..12)).prop_map(|(kids, raw_docs)| {
        let mut builder = TreeBuilder::new("Root", NodeKind::Root);
        let mut all = Vec::new();
        for (i, &n_kids) in kids.iter().enumerate() {
            let top = builder.add_child(LabelTree::ROOT, NodeKind::Label, format!("t{i}"));
            all.push(top);
            for j in 0..n_kids {
                all.push(builder.add_child(top, NodeKind::Label, format!("t{i}c{j}")));
            }
        }
        let tree = builder.build().unwrap();
        let n_labels = tree.n_nodes() - 1;
        let docs: Vec<Vec<LabelId>> = raw_docs
            .into_iter()
            .map(|ls| normalize_labels(ls.into_iter().map(|l| (l % n_labels) as LabelId).collect()))
            .collect();
        (tree, docs)
    })
}

proptest! {
    /// Per document: the leaf-only label set is a subset of the full-mode
    /// set, and the full-mode set contains every non-root ancestor.
    #[test]
    fn flatten_subset_and_closure((tree, label_sets) in arb_taxonomy_and_labels()) {
        let vocab: Vec<String> = tree.non_root_ids().map(|id| tree.name(id).to_string()).collect();
        let docs: Vec<Document> = label_sets
            .iter()
            .enumerate()
            .map(|(i, ls)| Document::new(i as u64, Some(vec![]), None, ls.clone()))
            .collect();
        let ds = Dataset::new(docs, vocab, 0).unwrap();

        let (full, _) = flatten(&ds, &tree, TransferMode::FullLabel).unwrap();
        let (leaf, _) = flatten(&ds, &tree, TransferMode::LeafOnly).unwrap();
        let index = tree.name_index();
        for (df, dl) in full.docs.iter().zip(&leaf.docs) {
            let full_names: std::collections::HashSet<&str> = df
                .labels.iter().map(|&l| full.label_vocab[l as usize].as_str()).collect();
            for &l in &dl.labels {
                prop_assert!(full_names.contains(leaf.label_vocab[l as usize].as_str()));
            }
            for name in &full_names {
                for anc in tree.ancestors(index[name]) {
                    if tree.kind(anc) != NodeKind::Root {
                        prop_assert!(full_names.contains(tree.name(anc)));
                    }
                }
            }
        }
    }

    /// Injecting a synthetic hierarchy and stripping its labels is the
    /// identity on the true label sets.
    #[test]
    fn inject_strip_identity(label_sets in vec(vec(0..6u32, 0..4), 1..10)) {
        let vocab: Vec<String> = (0..6).map(|i| format!("l{i}")).collect();
        let docs: Vec<Document> = label_sets
            .iter()
            .enumerate()
            .map(|(i, ls)| Document::new(i as u64, Some(vec![]), None, ls.clone()))
            .collect();
        let ds = Dataset::new(docs, vocab, 0).unwrap();

        let mut builder = TreeBuilder::new("Root", NodeKind::Root);
        let m0 = builder.add_child(LabelTree::ROOT, NodeKind::Meta, "m0");
        let m1 = builder.add_child(LabelTree::ROOT, NodeKind::Meta, "m1");
        for i in 0..6u32 {
            let parent = if i < 3 { m0 } else { m1 };
            builder.add_child(parent, NodeKind::Label, format!("l{i}"));
        }
        let tree = builder.build().unwrap();

        let (injected, tree) = inject_hierarchy(&ds, &tree).unwrap();
        let filter = MetaLabelFilter::new(&injected.label_vocab, &tree);
        for (orig, inj) in ds.docs.iter().zip(&injected.docs) {
            let ranked = RankedPrediction::from_scores(
                inj.labels.iter().map(|&l| (l, 1.0 / (l as f32 + 2.0))),
            ).unwrap();
            let mut recovered: Vec<LabelId> =
                strip_meta(&ranked, &filter).entries().iter().map(|&(l, _)| l).collect();
            recovered.sort_unstable();
            prop_assert_eq!(&recovered, &orig.labels);
        }
    }
}
