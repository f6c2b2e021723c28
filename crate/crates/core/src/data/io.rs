//! JSON-lines persistence. One transition per line:
//! `{"s":0,"a":1,"r":0.25,"sp":3}` with `"r":null` for reward-free records.
//! A sidecar `<file>.header.json` carries provenance.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{OfflineDataset, Transition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub mdp_hash: String,
    pub seed: u64,
    pub behavior: String,
    pub labeled: bool,
    pub num_states: usize,
    pub num_actions: usize,
    pub n: usize,
}

impl DatasetHeader {
    pub fn sidecar_path(data_path: &Path) -> PathBuf {
        let mut name = data_path.as_os_str().to_owned();
        name.push(".header.json");
        PathBuf::from(name)
    }
}

pub(crate) fn parse_line(path: &Path, line_no: usize, line: &str) -> Result<Transition> {
    serde_json::from_str(line).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        line: line_no,
        message: e.to_string(),
    })
}

pub(crate) fn write_line<W: Write>(out: &mut W, t: &Transition) -> Result<()> {
    serde_json::to_writer(&mut *out, t)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_jsonl(path: &Path, dataset: &OfflineDataset, header: Option<&DatasetHeader>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for t in dataset.iter() {
        write_line(&mut out, t)?;
    }
    out.flush()?;
    if let Some(h) = header {
        std::fs::write(DatasetHeader::sidecar_path(path), serde_json::to_string_pretty(h)?)?;
    }
    Ok(())
}

/// Reads a dataset; the shape comes from the sidecar header when present and
/// is otherwise inferred from the largest ids seen.
pub fn read_jsonl(path: &Path) -> Result<(OfflineDataset, Option<DatasetHeader>)> {
    let header_path = DatasetHeader::sidecar_path(path);
    let header: Option<DatasetHeader> = if header_path.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(&header_path)?)?)
    } else {
        None
    };
    let reader = BufReader::new(File::open(path)?);
    let mut transitions = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        transitions.push(parse_line(path, i + 1, &line)?);
    }
    let (ns, na) = match &header {
        Some(h) => (h.num_states, h.num_actions),
        None => (
            transitions.iter().map(|t| t.state.max(t.next_state) + 1).max().unwrap_or(1),
            transitions.iter().map(|t| t.action + 1).max().unwrap_or(1),
        ),
    };
    let labeled = !transitions.is_empty() && transitions.iter().all(|t| t.reward.is_some());
    let tag = header.as_ref().map(|h| h.behavior.clone()).unwrap_or_default();
    let dataset = OfflineDataset::new(transitions, labeled, tag, ns, na)?;
    Ok((dataset, header))
}
