//! LIBSVM text datasets.
//!
//! Lines look like `<label> <idx>:<val> <idx>:<val> ...` with 1-based,
//! strictly increasing indices. `#` starts a comment; blank lines are
//! skipped. Gzip input is recognized by its magic bytes.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use log::info;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::rng::{Purpose, RandomSource};

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// ±1 after normalization.
    pub label: f64,
    /// `(index, value)` with 1-based, strictly increasing indices.
    pub features: Vec<(u32, f64)>,
}

/// How raw labels were mapped onto ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelMapping {
    Identity,
    /// 0 → −1, 1 → +1
    ZeroOne,
    /// 1 → +1, 2 → −1 (covtype.binary)
    OneTwo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Row>,
    /// Largest feature index seen.
    pub d: usize,
    pub label_mapping: LabelMapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetStats {
    pub n: usize,
    pub d: usize,
    pub nnz: usize,
    pub positives: usize,
    pub negatives: usize,
    pub density: f64,
    pub max_row_norm_sq: f64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.features.len()).sum()
    }

    pub fn stats(&self) -> DatasetStats {
        let n = self.n();
        let nnz = self.nnz();
        let positives = self.rows.iter().filter(|r| r.label > 0.0).count();
        DatasetStats {
            n,
            d: self.d,
            nnz,
            positives,
            negatives: n - positives,
            density: if n == 0 || self.d == 0 {
                0.0
            } else {
                nnz as f64 / (n as f64 * self.d as f64)
            },
            max_row_norm_sq: self
                .rows
                .iter()
                .map(|r| r.features.iter().map(|(_, v)| v * v).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    /// Divides every row by its Euclidean norm (zero rows are left alone).
    pub fn normalize_rows(&mut self) {
        for r in &mut self.rows {
            let norm = r.features.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (_, v) in &mut r.features {
                    *v /= norm;
                }
            }
        }
    }
}

/// Reads a LIBSVM file, gunzipping it when it starts with the gzip magic.
pub fn read_libsvm_path<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    read_libsvm(File::open(path)?)
}

/// [`parse_libsvm`] over any byte source, gzip or plain.
pub fn read_libsvm<R: Read>(reader: R) -> Result<Dataset> {
    let mut buf = BufReader::new(reader);
    let gz = {
        let head = buf.fill_buf()?;
        head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b
    };
    if gz {
        parse_libsvm(BufReader::new(MultiGzDecoder::new(buf)))
    } else {
        parse_libsvm(buf)
    }
}

/// Streaming single-pass parser. Memory beyond the returned rows is one line.
pub fn parse_libsvm<R: BufRead>(mut reader: R) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut raw_labels = BTreeSet::new();
    let mut d = 0usize;
    let mut line = String::new();
    let mut lineno = 0usize;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        lineno += 1;
        let content = match line.find('#') {
            Some(p) => &line[..p],
            None => &line[..],
        };
        let mut tokens = content
            .split_whitespace()
            .map(|t| (t.as_ptr() as usize - line.as_ptr() as usize + 1, t));
        let Some((col, label_tok)) = tokens.next() else {
            continue;
        };
        let err = |column: usize, message: String| ZoError::Parse {
            line: lineno,
            column,
            message,
        };
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(col, format!("invalid label `{label_tok}`")))?;
        raw_labels.insert(label.to_bits());
        let mut features = Vec::new();
        let mut last = 0u32;
        for (col, tok) in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(col, format!("expected `index:value`, got `{tok}`")))?;
            let idx: u32 = idx
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| err(col, format!("invalid feature index `{idx}`")))?;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(col, format!("invalid feature value `{val}`")))?;
            if idx <= last {
                return Err(err(
                    col,
                    format!("feature index {idx} does not increase (previous {last})"),
                ));
            }
            last = idx;
            features.push((idx, val));
        }
        d = d.max(last as usize);
        rows.push(Row { label, features });
    }

    let labels: Vec<f64> = raw_labels.into_iter().map(f64::from_bits).collect();
    let within = |set: &[f64]| labels.iter().all(|l| set.contains(l));
    let mapping = if within(&[-1.0, 1.0]) {
        LabelMapping::Identity
    } else if within(&[0.0, 1.0]) {
        LabelMapping::ZeroOne
    } else if within(&[1.0, 2.0]) {
        LabelMapping::OneTwo
    } else {
        return Err(ZoError::Label(format!(
            "{labels:?} is not a binary label set"
        )));
    };
    if mapping != LabelMapping::Identity {
        info!("mapping labels {labels:?} onto ±1 ({mapping:?})");
        for r in &mut rows {
            r.label = match (mapping, r.label == 1.0) {
                (LabelMapping::ZeroOne, true) | (LabelMapping::OneTwo, true) => 1.0,
                _ => -1.0,
            };
        }
    }
    Ok(Dataset {
        rows,
        d,
        label_mapping: mapping,
    })
}

/// Writes rows in LIBSVM format with ±1 labels. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_libsvm<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    for r in &ds.rows {
        write!(w, "{}", if r.label > 0.0 { "+1" } else { "-1" })?;
        for (j, v) in &r.features {
            write!(w, " {j}:{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Deterministic shuffled split; `round(fraction·n)` rows (halves rounded
/// up) go to the first part. Both parts keep the original `d` and the rows'
/// original relative order.
pub fn split(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = ds.n();
    if n < 2 {
        return Err(ZoError::Split(format!("need at least 2 rows, have {n}")));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(ZoError::Split(format!(
            "fraction {fraction} outside (0, 1)"
        )));
    }
    let n_train = (fraction * n as f64 + 0.5).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(ZoError::Split(format!(
            "fraction {fraction} of {n} rows leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut RandomSource::new(seed).stream(Purpose::Split, 0, 0));
    let mut train_idx = order[..n_train].to_vec();
    let mut test_idx = order[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let take = |idx: &[usize]| Dataset {
        rows: idx.iter().map(|&i| ds.rows[i].clone()).collect(),
        d: ds.d,
        label_mapping: ds.label_mapping,
    };
    Ok((take(&train_idx), take(&test_idx)))
}
