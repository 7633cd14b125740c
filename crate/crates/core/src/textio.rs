//! Plain-text file formats.
//!
//! * triplets: `i<TAB>j<TAB>weight`, one undirected edge per line, `i < j`
//! * vocabulary: `index<TAB>item-id`
//! * labels: `item-id<TAB>label`
//! * playlists: one group per line, item ids separated by whitespace
//! * event logs: `owner<TAB>timestamp<TAB>item-id[<TAB>duration]`
//!
//! Blank lines and lines starting with `#` are ignored on input.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{CorpusKind, Event, EventLog, Group, GroupedCorpus};
use crate::matrix::SparseSymmetricMatrix;
use crate::vocab::Vocab;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

pub fn format_triplets(m: &SparseSymmetricMatrix) -> String {
    let mut out = String::new();
    for (i, j, w) in m.edges() {
        writeln!(out, "{i}\t{j}\t{w}").unwrap();
    }
    out
}

pub fn write_triplets(path: &Path, m: &SparseSymmetricMatrix) -> Result<()> {
    write_atomic(path, format_triplets(m).as_bytes())
}

pub fn read_triplets(path: &Path, dim: usize) -> Result<SparseSymmetricMatrix> {
    let text = read(path)?;
    let mut triplets = Vec::new();
    for (line, l) in content_lines(&text) {
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, line, format!("expected 3 fields, got {}", fields.len())));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(path, line, "bad row index"))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, line, "bad column index"))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, line, "bad weight"))?;
        if i >= dim || j >= dim || i == j || !w.is_finite() || w < 0.0 {
            return Err(Error::parse(path, line, format!("invalid entry ({i}, {j}, {w})")));
        }
        triplets.push((i, j, w));
    }
    SparseSymmetricMatrix::from_triplets(dim, triplets)
}

pub fn format_vocab(v: &Vocab) -> String {
    let mut out = String::new();
    for (i, id) in v.ids().iter().enumerate() {
        writeln!(out, "{i}\t{id}").unwrap();
    }
    out
}

pub fn write_vocab(path: &Path, v: &Vocab) -> Result<()> {
    write_atomic(path, format_vocab(v).as_bytes())
}

pub fn read_vocab(path: &Path) -> Result<Vocab> {
    let text = read(path)?;
    let mut ids = Vec::new();
    for (line, l) in content_lines(&text) {
        let (idx, id) = l
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, line, "expected index<TAB>item-id"))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, "bad index"))?;
        if idx != ids.len() {
            return Err(Error::parse(path, line, format!("expected index {}, got {idx}", ids.len())));
        }
        ids.push(id.trim().to_string());
    }
    Vocab::new(ids)
}

/// Labels keyed by item id. Ids absent from `vocab` are skipped.
pub fn read_labels(path: &Path, vocab: &Vocab) -> Result<BTreeMap<usize, String>> {
    let text = read(path)?;
    let mut labels = BTreeMap::new();
    for (line, l) in content_lines(&text) {
        let (id, label) = l
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, line, "expected item-id<TAB>label"))?;
        if let Some(i) = vocab.index_of(id.trim()) {
            labels.insert(i, label.trim().to_string());
        }
    }
    Ok(labels)
}

pub fn format_labels(labels: &[(String, String)]) -> String {
    let mut out = String::new();
    for (id, label) in labels {
        writeln!(out, "{id}\t{label}").unwrap();
    }
    out
}

/// Playlist file: owner ids are the 1-based line numbers.
pub fn read_playlists(path: &Path) -> Result<GroupedCorpus> {
    let text = read(path)?;
    let groups = content_lines(&text)
        .map(|(line, l)| Group {
            owner: format!("pl{line}"),
            items: l.split_whitespace().map(str::to_string).collect(),
        })
        .collect();
    Ok(GroupedCorpus {
        kind: CorpusKind::Playlist,
        groups,
    })
}

pub fn format_groups(corpus: &GroupedCorpus) -> String {
    let mut out = String::new();
    for g in &corpus.groups {
        out.push_str(&g.items.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_event_log(path: &Path) -> Result<EventLog> {
    let text = read(path)?;
    let mut records = Vec::new();
    for (line, l) in content_lines(&text) {
        let fields: Vec<&str> = l.split('\t').map(str::trim).collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 3 or 4 tab-separated fields, got {}", fields.len()),
            ));
        }
        let timestamp: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, line, "bad timestamp"))?;
        if fields[2].is_empty() {
            return Err(Error::parse(path, line, "empty item id"));
        }
        let duration = match fields.get(3) {
            Some(d) if !d.is_empty() => Some(
                d.parse::<f64>()
                    .map_err(|_| Error::parse(path, line, "bad duration"))?,
            ),
            _ => None,
        };
        records.push(Event {
            owner: fields[0].to_string(),
            timestamp,
            item: fields[2].to_string(),
            duration,
        });
    }
    Ok(EventLog { records })
}
