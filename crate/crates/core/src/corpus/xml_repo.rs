//! The flat sparse-feature dataset format used by the large public
//! multi-label repositories.
//!
//! Layout: a header line `N D L` (documents, feature dimension, labels)
//! followed by one line per document:
//!
//! ```text
//! l1,l2,...,lk f1:v1 f2:v2 ...
//! ```
//!
//! An empty label list is rendered as a leading space. Weights are written
//! with six significant digits.

use super::{Dataset, Document};
use crate::error::{Error, Result};
use crate::sparse::SparseVector;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Streams a dataset in from the repository format.
///
/// The label vocabulary is synthesized as the stringified ids `0..L`.
/// Parse failures carry the 1-based line number.
pub fn parse_xml_repo(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let mut header = String::new();
    reader
        .read_line(&mut header)
        .map_err(|e| Error::io(path, e))?;
    let (n_docs, dim, n_labels) = parse_header(header.trim_end_matches(['\r', '\n']), path)?;

    let mut docs = Vec::with_capacity(n_docs);
    let mut line = String::new();
    let mut lineno = 1usize;
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if read == 0 {
            break;
        }
        lineno += 1;
        let doc = parse_body_line(
            line.trim_end_matches(['\r', '\n']),
            (lineno, path),
            docs.len() as u64,
            dim,
            n_labels,
        )?;
        docs.push(doc);
    }
    if docs.len() != n_docs {
        return Err(Error::MalformedHeader {
            path: path.into(),
            line: 1,
            detail: format!("header declares {n_docs} documents but file holds {}", docs.len()),
        });
    }
    let label_vocab = (0..n_labels).map(|i| i.to_string()).collect();
    Dataset::new(docs, label_vocab, dim)
}

fn parse_header(line: &str, path: &Path) -> Result<(usize, usize, usize)> {
    let mut parts = line.split_whitespace();
    let mut next = |what: &str| -> Result<usize> {
        parts
            .next()
            .and_then(|t| t.parse::<usize>().ok())
            .ok_or_else(|| Error::MalformedHeader {
                path: path.into(),
                line: 1,
                detail: format!("expected \"docs dim labels\", could not read {what}"),
            })
    };
    let triple = (next("doc count")?, next("feature dimension")?, next("label count")?);
    if parts.next().is_some() {
        return Err(Error::MalformedHeader {
            path: path.into(),
            line: 1,
            detail: "trailing tokens after the three header fields".into(),
        });
    }
    Ok(triple)
}

fn parse_body_line(
    line: &str,
    at: (usize, &Path),
    doc_id: u64,
    dim: usize,
    n_labels: usize,
) -> Result<Document> {
    let (lineno, path) = at;
    let malformed = |detail: String| Error::MalformedLine {
        path: path.into(),
        line: lineno,
        detail,
    };
    let mut tokens = line.split(' ');
    let label_field = tokens.next().unwrap_or("");

    let mut labels = Vec::new();
    if !label_field.is_empty() {
        for part in label_field.split(',') {
            let label: u32 = part
                .parse()
                .map_err(|_| malformed(format!("bad label id {part:?}")))?;
            if label as usize >= n_labels {
                return Err(Error::LabelOutOfRange {
                    path: path.into(),
                    line: lineno,
                    label,
                    n_labels,
                });
            }
            labels.push(label);
        }
    }

    let mut features = Vec::new();
    for token in tokens {
        if token.is_empty() {
            continue;
        }
        let (idx, val) = token
            .split_once(':')
            .ok_or_else(|| malformed(format!("bad feature entry {token:?}")))?;
        let idx: u32 = idx
            .parse()
            .map_err(|_| malformed(format!("bad feature index in {token:?}")))?;
        if idx as usize >= dim {
            return Err(Error::FeatureIndexOutOfRange {
                path: path.into(),
                line: lineno,
                index: idx,
                dim,
            });
        }
        let val: f32 = val
            .parse()
            .map_err(|_| malformed(format!("bad feature value in {token:?}")))?;
        if !val.is_finite() || val < 0.0 {
            return Err(malformed(format!("feature value {val} is not a finite non-negative number")));
        }
        features.push((idx, val));
    }
    let features = SparseVector::from_pairs(features).map_err(|e| malformed(e.to_string()))?;
    Ok(Document::new(doc_id, None, Some(features), labels))
}

/// Writes a dataset with features in the repository format.
pub fn write_xml_repo(ds: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(w, "{} {} {}", ds.n_docs(), ds.feature_dim, ds.n_labels()).map_err(io_err)?;
    for doc in &ds.docs {
        let features = doc.features.as_ref().ok_or_else(|| Error::InvalidArgument {
            detail: format!("document {} has no features; cannot write sparse format", doc.id),
        })?;
        let labels = doc
            .labels
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",");
        w.write_all(labels.as_bytes()).map_err(io_err)?;
        for (i, v) in features.iter() {
            write!(w, " {}:{}", i, format_sig6(v)).map_err(io_err)?;
        }
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Renders a weight with six significant digits, trimming trailing zeros.
pub fn format_sig6(v: f32) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        return format!("{:.5e}", v);
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, v);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
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
    fn parses_header_only_file() {
        let f = write_tmp("0 5 3\n");
        let ds = parse_xml_repo(f.path()).unwrap();
        assert_eq!(ds.n_docs(), 0);
        assert_eq!(ds.feature_dim, 5);
        assert_eq!(ds.n_labels(), 3);
    }

    #[test]
    fn parses_two_line_synthetic() {
        let f = write_tmp("2 4 3\n0,2 1:0.5 3:1.0\n1 0:2.0\n");
        let ds = parse_xml_repo(f.path()).unwrap();
        assert_eq!(ds.n_docs(), 2);
        assert_eq!(ds.docs[0].labels, vec![0, 2]);
        assert_eq!(
            ds.docs[0].features.as_ref().unwrap().entries(),
            &[(1, 0.5), (3, 1.0)]
        );
        assert_eq!(ds.docs[1].labels, vec![1]);
        assert_eq!(ds.docs[1].features.as_ref().unwrap().entries(), &[(0, 2.0)]);
    }

    #[test]
    fn empty_label_field_is_leading_space() {
        let f = write_tmp("1 4 3\n 1:0.5\n");
        let ds = parse_xml_repo(f.path()).unwrap();
        assert!(ds.docs[0].labels.is_empty());
        assert_eq!(ds.docs[0].features.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn header_errors_carry_line_one() {
        let f = write_tmp("2 4\n");
        match parse_xml_repo(f.path()) {
            Err(Error::MalformedHeader { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected header error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_feature_reports_line() {
        let f = write_tmp("1 4 3\n0 9:1.0\n");
        match parse_xml_repo(f.path()) {
            Err(Error::FeatureIndexOutOfRange { line, index, dim, .. }) => {
                assert_eq!((line, index, dim), (2, 9, 4));
            }
            other => panic!("expected feature range error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_label_reports_line() {
        let f = write_tmp("1 4 3\n7 0:1.0\n");
        match parse_xml_repo(f.path()) {
            Err(Error::LabelOutOfRange { line, label, .. }) => {
                assert_eq!((line, label), (2, 7));
            }
            other => panic!("expected label range error, got {other:?}"),
        }
    }

    #[test]
    fn doc_count_mismatch_is_rejected() {
        let f = write_tmp("3 4 3\n0 0:1.0\n");
        assert!(matches!(
            parse_xml_repo(f.path()),
            Err(Error::MalformedHeader { .. })
        ));
    }

    #[test]
    fn round_trip_two_doc_synthetic() {
        let f = write_tmp("2 4 3\n0,2 1:0.5 3:1.0\n1 0:2.0\n");
        let ds = parse_xml_repo(f.path()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_xml_repo(&ds, out.path()).unwrap();
        let back = parse_xml_repo(out.path()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn round_trip_empty_dataset_is_header_only() {
        let ds = Dataset::new(vec![], vec!["0".into(), "1".into()], 7).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_xml_repo(&ds, out.path()).unwrap();
        let content = std::fs::read_to_string(out.path()).unwrap();
        assert_eq!(content, "0 7 2\n");
        assert_eq!(parse_xml_repo(out.path()).unwrap(), ds);
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(2.0), "2");
        assert_eq!(format_sig6(0.5), "0.5");
        assert_eq!(format_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(0.000012345678), "0.0000123457");
    }
}
