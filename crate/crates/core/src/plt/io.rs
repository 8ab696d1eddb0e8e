//! Versioned binary container for trained models.
//!
//! Layout (all integers little-endian, floats stored as raw IEEE-754 bits):
//!
//! ```text
//! magic            4 bytes  "XPLT"
//! version          u32      currently 1
//! feature_dim      u64
//! config           epochs u32, learning_rate f32, l2 f32,
//!                  negative_cap u64, beam u32, seed u64
//! vocab            count u64, then per label: len u64 + UTF-8 bytes
//! tree             n_nodes u64, then per node in id order:
//!                  parent i64 (-1 for the root), kind u8
//!                  (0 root, 1 label, 2 meta), name len u64 + UTF-8 bytes
//! weights          per non-root node in id order:
//!                  bias f32, nnz u64, then nnz * (index u32, value f32)
//! ```
//!
//! Loading a file saved by [`save_model`] reproduces the model bit-exactly.

use super::{NodeWeights, PltConfig, PltModel};
use crate::error::{Error, Result};
use crate::sparse::SparseVector;
use crate::tree::{LabelTree, NodeKind, TreeBuilder};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"XPLT";
const VERSION: u32 = 1;

pub fn save_model(model: &PltModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_model(model, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_model(model: &PltModel, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u64::<LittleEndian>(model.feature_dim as u64)?;
    w.write_u32::<LittleEndian>(model.config.epochs)?;
    w.write_u32::<LittleEndian>(model.config.learning_rate.to_bits())?;
    w.write_u32::<LittleEndian>(model.config.l2.to_bits())?;
    w.write_u64::<LittleEndian>(model.config.negative_cap as u64)?;
    w.write_u32::<LittleEndian>(model.config.beam as u32)?;
    w.write_u64::<LittleEndian>(model.config.seed)?;

    w.write_u64::<LittleEndian>(model.label_vocab.len() as u64)?;
    for name in &model.label_vocab {
        write_str(w, name)?;
    }

    let tree = &model.tree;
    w.write_u64::<LittleEndian>(tree.n_nodes() as u64)?;
    for id in tree.node_ids() {
        let parent = tree.parent(id).map_or(-1, i64::from);
        w.write_i64::<LittleEndian>(parent)?;
        w.write_u8(match tree.kind(id) {
            NodeKind::Root => 0,
            NodeKind::Label => 1,
            NodeKind::Meta => 2,
        })?;
        write_str(w, tree.name(id))?;
    }

    for id in tree.node_ids().skip(1) {
        let nw = model.weights[id as usize]
            .as_ref()
            .expect("every non-root node carries weights");
        w.write_u32::<LittleEndian>(nw.bias.to_bits())?;
        w.write_u64::<LittleEndian>(nw.weights.len() as u64)?;
        for (i, v) in nw.weights.iter() {
            w.write_u32::<LittleEndian>(i)?;
            w.write_u32::<LittleEndian>(v.to_bits())?;
        }
    }
    Ok(())
}

pub fn load_model(path: &Path) -> Result<PltModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    {
        let bad = |_: std::io::Error| Error::CorruptModel {
            detail: format!("{}: file too short for the header", path.display()),
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(bad)?;
        if &magic != MAGIC {
            return Err(Error::CorruptModel {
                detail: format!("{}: bad magic bytes", path.display()),
            });
        }
        let version = r.read_u32::<LittleEndian>().map_err(bad)?;
        if version != VERSION {
            return Err(Error::ModelVersion {
                version,
                expected: VERSION,
            });
        }
    }
    read_model(&mut r).map_err(|detail| Error::CorruptModel {
        detail: format!("{}: {detail}", path.display()),
    })
}

fn read_model(r: &mut impl Read) -> std::result::Result<PltModel, String> {
    let bad = |e: std::io::Error| format!("read failed: {e}");
    let feature_dim = r.read_u64::<LittleEndian>().map_err(bad)? as usize;
    let config = PltConfig {
        epochs: r.read_u32::<LittleEndian>().map_err(bad)?,
        learning_rate: f32::from_bits(r.read_u32::<LittleEndian>().map_err(bad)?),
        l2: f32::from_bits(r.read_u32::<LittleEndian>().map_err(bad)?),
        negative_cap: r.read_u64::<LittleEndian>().map_err(bad)? as usize,
        beam: r.read_u32::<LittleEndian>().map_err(bad)? as usize,
        seed: r.read_u64::<LittleEndian>().map_err(bad)?,
    };

    let n_labels = r.read_u64::<LittleEndian>().map_err(bad)? as usize;
    let mut label_vocab = Vec::with_capacity(n_labels.min(1 << 20));
    for _ in 0..n_labels {
        label_vocab.push(read_str(r)?);
    }

    let n_nodes = r.read_u64::<LittleEndian>().map_err(bad)? as usize;
    if n_nodes == 0 {
        return Err("tree has no nodes".into());
    }
    let mut builder: Option<TreeBuilder> = None;
    for id in 0..n_nodes {
        let parent = r.read_i64::<LittleEndian>().map_err(bad)?;
        let kind = match r.read_u8().map_err(bad)? {
            0 => NodeKind::Root,
            1 => NodeKind::Label,
            2 => NodeKind::Meta,
            other => return Err(format!("unknown node kind byte {other}")),
        };
        let name = read_str(r)?;
        match (&mut builder, parent) {
            (None, -1) if id == 0 => builder = Some(TreeBuilder::new(name, kind)),
            (Some(b), p) if p >= 0 && (p as usize) < id => {
                b.add_child(p as u32, kind, name);
            }
            _ => return Err(format!("node {id} has invalid parent {parent}")),
        }
    }
    let tree: LabelTree = builder
        .ok_or_else(|| "missing root node".to_string())?
        .build()
        .map_err(|e| e.to_string())?;

    let mut weights: Vec<Option<NodeWeights>> = vec![None; n_nodes];
    for id in 1..n_nodes {
        let bias = f32::from_bits(r.read_u32::<LittleEndian>().map_err(bad)?);
        let nnz = r.read_u64::<LittleEndian>().map_err(bad)? as usize;
        let mut entries = Vec::with_capacity(nnz.min(1 << 24));
        for _ in 0..nnz {
            let i = r.read_u32::<LittleEndian>().map_err(bad)?;
            let v = f32::from_bits(r.read_u32::<LittleEndian>().map_err(bad)?);
            entries.push((i, v));
        }
        let weights_vec = SparseVector::from_pairs(entries).map_err(|e| e.to_string())?;
        weights[id] = Some(NodeWeights {
            weights: weights_vec,
            bias,
        });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(bad)? != 0 {
        return Err("trailing bytes after model payload".into());
    }

    Ok(PltModel {
        tree,
        label_vocab,
        feature_dim,
        weights,
        config,
    })
}

fn write_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    w.write_u64::<LittleEndian>(s.len() as u64)?;
    w.write_all(s.as_bytes())
}

fn read_str(r: &mut impl Read) -> std::result::Result<String, String> {
    let len = r
        .read_u64::<LittleEndian>()
        .map_err(|e| format!("read failed: {e}"))? as usize;
    if len > (1 << 24) {
        return Err(format!("string length {len} is implausible"));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|e| format!("read failed: {e}"))?;
    String::from_utf8(buf).map_err(|_| "string is not valid UTF-8".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Dataset, Document};
    use crate::plt;
    use crate::tree::TreeBuilder;

    fn trained() -> PltModel {
        let docs: Vec<Document> = (0..12)
            .map(|i| {
                let label = (i % 3) as u32;
                let features = SparseVector::from_pairs(vec![(label, 1.0)]).unwrap();
                Document::new(i as u64, None, Some(features), vec![label])
            })
            .collect();
        let ds = Dataset::new(docs, vec!["a".into(), "b".into(), "c".into()], 3).unwrap();
        let mut b = TreeBuilder::new("Root", NodeKind::Root);
        for name in ["a", "b", "c"] {
            b.add_child(LabelTree::ROOT, NodeKind::Label, name);
        }
        plt::train(&ds, &b.build().unwrap(), PltConfig { epochs: 3, ..PltConfig::default() }).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let model = trained();
        let tmp = tempfile::NamedTempFile::new().unwrap();
        save_model(&model, tmp.path()).unwrap();
        let back = load_model(tmp.path()).unwrap();
        assert_eq!(model, back);
        // identical predictions on a probe
        let probe = SparseVector::from_pairs(vec![(1, 1.0)]).unwrap();
        assert_eq!(
            plt::predict(&model, &probe, 4, 3),
            plt::predict(&back, &probe, 4, 3)
        );
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let model = trained();
        let tmp = tempfile::NamedTempFile::new().unwrap();
        save_model(&model, tmp.path()).unwrap();
        let bytes = std::fs::read(tmp.path()).unwrap();
        let cut = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(cut.path(), &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(
            load_model(cut.path()),
            Err(Error::CorruptModel { .. })
        ));
    }

    #[test]
    fn bad_magic_is_corrupt() {
        let tmp = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(tmp.path(), b"NOPE going nowhere").unwrap();
        assert!(matches!(
            load_model(tmp.path()),
            Err(Error::CorruptModel { .. })
        ));
    }

    #[test]
    fn minimal_model_round_trips() {
        // a single-label tree with zero weights
        let mut b = TreeBuilder::new("Root", NodeKind::Root);
        b.add_child(LabelTree::ROOT, NodeKind::Label, "only");
        let tree = b.build().unwrap();
        let model = PltModel {
            tree,
            label_vocab: vec!["only".into()],
            feature_dim: 0,
            weights: vec![
                None,
                Some(NodeWeights {
                    weights: SparseVector::new(),
                    bias: 0.0,
                }),
            ],
            config: PltConfig::default(),
        };
        let tmp = tempfile::NamedTempFile::new().unwrap();
        save_model(&model, tmp.path()).unwrap();
        assert_eq!(load_model(tmp.path()).unwrap(), model);
    }
}
