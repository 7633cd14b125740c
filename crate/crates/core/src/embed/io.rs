//! Text embedding format: a header line `<rows> <dim>` followed by one
//! `item-id v_1 … v_dim` line per node.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::textio::write_atomic;
use crate::vocab::Vocab;

pub fn format_embedding(e: &EmbeddingMatrix) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", e.len(), e.dim()).unwrap();
    for i in 0..e.len() {
        out.push_str(e.vocab().id(i));
        for v in e.row(i) {
            // `{:?}` prints the shortest representation that round-trips.
            write!(out, " {v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn store_embedding(path: &Path, e: &EmbeddingMatrix) -> Result<()> {
    if e.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("refusing to store non-finite embedding"));
    }
    write_atomic(path, format_embedding(e).as_bytes())
}

/// Parses embedding text. With `vocab`, rows are reordered to it and every
/// vocabulary id must be present exactly once.
pub fn parse_embedding(text: &str, path: &Path, vocab: Option<&Vocab>) -> Result<EmbeddingMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing header"))?;
    let header: Vec<&str> = header.split_whitespace().collect();
    let (rows, dim) = match header.as_slice() {
        [r, d] => (
            r.parse::<usize>()
                .map_err(|_| Error::parse(path, hline, "bad row count in header"))?,
            d.parse::<usize>()
                .map_err(|_| Error::parse(path, hline, "bad dimension in header"))?,
        ),
        _ => return Err(Error::parse(path, hline, "header must be `<rows> <dim>`")),
    };
    if dim == 0 {
        return Err(Error::parse(path, hline, "dimension must be positive"));
    }

    let mut ids = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    let mut seen = HashMap::with_capacity(rows);
    for (line, l) in lines {
        let mut fields = l.split_whitespace();
        let id = fields.next().expect("non-empty line");
        let values: Vec<&str> = fields.collect();
        if values.len() != dim {
            return Err(Error::parse(
                path,
                line,
                format!("expected {dim} values after the id, got {}", values.len()),
            ));
        }
        for v in values {
            let x: f64 = v
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad value {v:?}")))?;
            if !x.is_finite() {
                return Err(Error::parse(path, line, "non-finite value"));
            }
            data.push(x);
        }
        if seen.insert(id.to_string(), ids.len()).is_some() {
            return Err(Error::parse(path, line, format!("duplicate id {id:?}")));
        }
        ids.push(id.to_string());
    }
    if ids.len() != rows {
        return Err(Error::parse(
            path,
            hline,
            format!("header announces {rows} rows, file has {}", ids.len()),
        ));
    }

    match vocab {
        None => EmbeddingMatrix::new(Vocab::new(ids)?, dim, data),
        Some(v) => {
            if let Some(unknown) = ids.iter().find(|id| v.index_of(id).is_none()) {
                return Err(Error::VocabMismatch(format!("unknown item id {unknown:?}")));
            }
            let mut ordered = Vec::with_capacity(v.len() * dim);
            for id in v.ids() {
                let r = *seen
                    .get(id)
                    .ok_or_else(|| Error::VocabMismatch(format!("no vector for item id {id:?}")))?;
                ordered.extend_from_slice(&data[r * dim..(r + 1) * dim]);
            }
            EmbeddingMatrix::new(v.clone(), dim, ordered)
        }
    }
}

pub fn load_embedding(path: &Path, vocab: Option<&Vocab>) -> Result<EmbeddingMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embedding(&text, path, vocab)
}
