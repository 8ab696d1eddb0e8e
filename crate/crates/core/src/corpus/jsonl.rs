//! JSON-lines carrier for raw-text corpora: one record per line with a
//! token list and a label-name list.

use super::{Dataset, Document, LabelId};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct Record {
    tokens: Vec<String>,
    labels: Vec<String>,
}

/// Parses a token/label-name corpus.
///
/// When `fixed_vocab` is supplied (e.g. the label set of a taxonomy) every
/// record label must be a member; otherwise the vocabulary becomes the
/// sorted union of observed names.
pub fn parse_text_corpus(path: &Path, fixed_vocab: Option<&[String]>) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut records: Vec<(usize, Record)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: path.into(),
            line: lineno + 1,
            detail: e.to_string(),
        })?;
        records.push((lineno + 1, record));
    }

    let label_vocab: Vec<String> = match fixed_vocab {
        Some(vocab) => vocab.to_vec(),
        None => {
            let names: BTreeSet<&str> = records
                .iter()
                .flat_map(|(_, r)| r.labels.iter().map(String::as_str))
                .collect();
            names.into_iter().map(str::to_string).collect()
        }
    };
    let index: HashMap<&str, LabelId> = label_vocab
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i as LabelId))
        .collect();

    let mut docs = Vec::with_capacity(records.len());
    for (i, (lineno, record)) in records.into_iter().enumerate() {
        let mut labels = Vec::with_capacity(record.labels.len());
        for name in &record.labels {
            let id = index.get(name.as_str()).ok_or_else(|| Error::UnknownLabelName {
                path: path.into(),
                line: lineno,
                name: name.clone(),
            })?;
            labels.push(*id);
        }
        docs.push(Document::new(i as u64, Some(record.tokens), None, labels));
    }
    Dataset::new(docs, label_vocab, 0)
}

/// Writes a text dataset back out, one JSON record per line.
pub fn write_text_corpus(ds: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for doc in &ds.docs {
        let tokens = doc.tokens.clone().ok_or_else(|| Error::InvalidArgument {
            detail: format!("document {} has no text; cannot write a text corpus", doc.id),
        })?;
        let record = Record {
            tokens,
            labels: doc
                .labels
                .iter()
                .map(|&l| ds.label_vocab[l as usize].clone())
                .collect(),
        };
        serde_json::to_writer(&mut w, &record).map_err(|e| Error::InvalidArgument {
            detail: format!("serialization failed: {e}"),
        })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_gives_empty_dataset() {
        let f = write_tmp("");
        let ds = parse_text_corpus(f.path(), None).unwrap();
        assert_eq!(ds.n_docs(), 0);
        assert_eq!(ds.n_labels(), 0);
    }

    #[test]
    fn single_record() {
        let f = write_tmp(r#"{"tokens":["a","b"],"labels":["x"]}"#);
        let ds = parse_text_corpus(f.path(), None).unwrap();
        assert_eq!(ds.n_docs(), 1);
        assert_eq!(ds.n_labels(), 1);
        assert_eq!(ds.docs[0].tokens.as_deref(), Some(&["a".to_string(), "b".to_string()][..]));
        assert_eq!(ds.docs[0].labels, vec![0]);
    }

    #[test]
    fn vocab_is_sorted_union() {
        let f = write_tmp(concat!(
            r#"{"tokens":["t"],"labels":["zebra","ant"]}"#,
            "\n",
            r#"{"tokens":["u"],"labels":["ant","mole"]}"#,
            "\n"
        ));
        let ds = parse_text_corpus(f.path(), None).unwrap();
        assert_eq!(ds.label_vocab, vec!["ant", "mole", "zebra"]);
    }

    #[test]
    fn unknown_label_with_fixed_vocab() {
        let f = write_tmp(r#"{"tokens":["t"],"labels":["nope"]}"#);
        let vocab = vec!["a".to_string(), "b".to_string()];
        let err = parse_text_corpus(f.path(), Some(&vocab)).unwrap_err();
        assert!(matches!(err, Error::UnknownLabelName { name, .. } if name == "nope"));
    }

    #[test]
    fn malformed_line_reports_number() {
        let f = write_tmp("{\"tokens\":[\"t\"],\"labels\":[\"x\"]}\nnot json\n");
        let err = parse_text_corpus(f.path(), None).unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 2, .. }));
    }

    #[test]
    fn round_trip() {
        let f = write_tmp(concat!(
            r#"{"tokens":["a","b"],"labels":["x","y"]}"#,
            "\n",
            r#"{"tokens":[],"labels":[]}"#,
            "\n"
        ));
        let ds = parse_text_corpus(f.path(), None).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_text_corpus(&ds, out.path()).unwrap();
        let back = parse_text_corpus(out.path(), Some(&ds.label_vocab)).unwrap();
        assert_eq!(ds, back);
    }
}
