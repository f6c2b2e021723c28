use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::RunResult;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "method",
    "n0",
    "n1",
    "c0",
    "c1",
    "gamma",
    "d",
    "seed",
    "subopt_mean",
    "subopt_max",
    "vhat_start",
    "wall_ms",
];

pub fn write_results<W: Write>(out: W, results: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if results.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_csv(path: &Path, results: &[RunResult]) -> Result<()> {
    write_results(File::create(path)?, results)
}

/// Parses rows written by [`write_results_csv`]. Extra columns are ignored;
/// missing ones are reported together.
pub fn read_results<R: Read>(input: R, path: &Path) -> Result<Vec<RunResult>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let missing: Vec<&str> = CSV_HEADER
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing columns: {}", missing.join(", ")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<RunResult>().enumerate() {
        rows.push(rec.map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}

pub fn read_results_csv(path: &Path) -> Result<Vec<RunResult>> {
    read_results(File::open(path)?, path)
}
