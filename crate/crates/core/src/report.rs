//! Mean ± std tables over run results, one column per method.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bench::Format;
use crate::error::{Error, Result};
use crate::pipeline::{read_results_csv, MethodId, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKey {
    N0,
    N1,
    Gamma,
    D,
    Seed,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::N0 => "n0",
            GroupKey::N1 => "n1",
            GroupKey::Gamma => "gamma",
            GroupKey::D => "d",
            GroupKey::Seed => "seed",
        }
    }

    fn value(self, r: &RunResult) -> String {
        match self {
            GroupKey::N0 => r.n0.to_string(),
            GroupKey::N1 => r.n1.to_string(),
            GroupKey::Gamma => r.gamma.to_string(),
            GroupKey::D => r.d.to_string(),
            GroupKey::Seed => r.seed.to_string(),
        }
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [GroupKey::N0, GroupKey::N1, GroupKey::Gamma, GroupKey::D, GroupKey::Seed]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("cannot group by {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
    pub bold: bool,
}

impl CellStats {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            count: n,
            mean,
            std,
            bold: false,
        }
    }
}

/// Pooled standard deviation of two groups.
pub fn pooled_std(a: &CellStats, b: &CellStats) -> f64 {
    let dof = (a.count + b.count).saturating_sub(2);
    if dof == 0 {
        return 0.0;
    }
    let ss = (a.count.saturating_sub(1)) as f64 * a.std.powi(2)
        + (b.count.saturating_sub(1)) as f64 * b.std.powi(2);
    (ss / dof as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub key: Vec<String>,
    /// Aligned with [`Summary::methods`].
    pub cells: Vec<Option<CellStats>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub group_by: Vec<GroupKey>,
    pub methods: Vec<MethodId>,
    pub rows: Vec<SummaryRow>,
}

/// Groups `subopt_mean` by `group_by` (rows) and method (columns). Within a
/// row, every method without true rewards whose mean is within one pooled
/// standard deviation of the best such mean is bolded; lower is better.
pub fn summarize(results: &[RunResult], group_by: &[GroupKey]) -> Summary {
    let mut methods: Vec<MethodId> = Vec::new();
    let mut keys: Vec<Vec<String>> = Vec::new();
    for r in results {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
        let key: Vec<String> = group_by.iter().map(|k| k.value(r)).collect();
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let rows = keys
        .into_iter()
        .map(|key| {
            let mut cells: Vec<Option<CellStats>> = methods
                .iter()
                .map(|&m| {
                    let values: Vec<f64> = results
                        .iter()
                        .filter(|r| r.method == m && group_by.iter().zip(&key).all(|(g, v)| g.value(r) == *v))
                        .map(|r| r.subopt_mean)
                        .collect();
                    (!values.is_empty()).then(|| CellStats::from_values(&values))
                })
                .collect();
            mark_best(&methods, &mut cells);
            SummaryRow { key, cells }
        })
        .collect();
    Summary {
        group_by: group_by.to_vec(),
        methods,
        rows,
    }
}

fn mark_best(methods: &[MethodId], cells: &mut [Option<CellStats>]) {
    let best = methods
        .iter()
        .zip(cells.iter())
        .filter(|(m, _)| !m.uses_true_rewards())
        .filter_map(|(_, c)| *c)
        .min_by(|a, b| a.mean.total_cmp(&b.mean));
    let Some(best) = best else { return };
    for (m, cell) in methods.iter().zip(cells.iter_mut()) {
        if let Some(c) = cell.as_mut() {
            if !m.uses_true_rewards() && c.mean <= best.mean + pooled_std(c, &best) {
                c.bold = true;
            }
        }
    }
}

impl Summary {
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let head: Vec<&str> = self
            .group_by
            .iter()
            .map(|g| g.name())
            .chain(self.methods.iter().map(|m| m.name()))
            .collect();
        let _ = writeln!(out, "| {} |", head.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(head.len()));
        for row in &self.rows {
            let cells = row.cells.iter().map(|c| match c {
                None => "-".to_string(),
                Some(c) if c.bold => format!("**{:.4} ± {:.4}**", c.mean, c.std),
                Some(c) => format!("{:.4} ± {:.4}", c.mean, c.std),
            });
            let line: Vec<String> = row.key.iter().cloned().chain(cells).collect();
            let _ = writeln!(out, "| {} |", line.join(" | "));
        }
        out
    }
}

impl Summary {
    /// Long format: one line per (group, method) cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let head: Vec<&str> = self.group_by.iter().map(|g| g.name()).collect();
        let _ = writeln!(out, "{}", head.iter().chain(&["method", "count", "mean", "std", "bold"]).copied().collect::<Vec<_>>().join(","));
        for row in &self.rows {
            for (m, cell) in self.methods.iter().zip(&row.cells) {
                if let Some(c) = cell {
                    let _ = writeln!(out, "{},{m},{},{},{},{}", row.key.join(","), c.count, c.mean, c.std, c.bold);
                }
            }
        }
        if self.group_by.is_empty() {
            out = out.replace("\n,", "\n");
        }
        out
    }
}

/// Reads a results CSV and renders the grouped markdown table.
pub fn emit_table(csv_path: &Path, group_by: &[GroupKey]) -> Result<String> {
    emit_table_as(csv_path, group_by, Format::Md)
}

pub fn emit_table_as(csv_path: &Path, group_by: &[GroupKey], format: Format) -> Result<String> {
    let summary = summarize(&read_results_csv(csv_path)?, group_by);
    Ok(match format {
        Format::Md => summary.to_markdown(),
        Format::Csv => summary.to_csv(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: MethodId, n1: usize, seed: u64, subopt: f64) -> RunResult {
        RunResult {
            method,
            n0: 10,
            n1,
            c0: 0.5,
            c1: 0.5,
            gamma: 0.9,
            d: 4,
            seed,
            subopt_mean: subopt,
            subopt_max: subopt,
            vhat_start: 0.0,
            wall_ms: 1.0,
        }
    }

    #[test]
    fn single_row_has_zero_std() {
        let s = summarize(&[row(MethodId::Pds, 0, 1, 0.25)], &[GroupKey::N1]);
        let c = s.rows[0].cells[0].unwrap();
        assert_eq!((c.count, c.mean, c.std, c.bold), (1, 0.25, 0.0, true));
        assert!(s.to_markdown().contains("**0.2500 ± 0.0000**"));
    }

    #[test]
    fn ties_within_pooled_std_are_all_bold() {
        let rows = vec![
            row(MethodId::Pds, 0, 1, 1.0),
            row(MethodId::Pds, 0, 2, 2.0),
            row(MethodId::Uds, 0, 1, 1.2),
            row(MethodId::Uds, 0, 2, 2.2),
            row(MethodId::NoShare, 0, 1, 5.0),
            row(MethodId::NoShare, 0, 2, 5.0),
            row(MethodId::Oracle, 0, 1, 0.0),
            row(MethodId::Oracle, 0, 2, 0.0),
        ];
        let s = summarize(&rows, &[GroupKey::N1]);
        let bold: Vec<bool> = s.rows[0].cells.iter().map(|c| c.unwrap().bold).collect();
        assert_eq!(s.methods, vec![MethodId::Pds, MethodId::Uds, MethodId::NoShare, MethodId::Oracle]);
        assert_eq!(bold, vec![true, true, false, false]);
    }

    #[test]
    fn means_match_second_pass_aggregation() {
        let mut rows = Vec::new();
        for (i, m) in MethodId::ALL.into_iter().enumerate() {
            for n1 in [0, 100] {
                for seed in 0..7u64 {
                    let v = ((seed * 31 + i as u64 * 7 + n1 as u64) % 17) as f64 / 13.0;
                    rows.push(row(m, n1, seed, v));
                }
            }
        }
        let s = summarize(&rows, &[GroupKey::N1]);
        for r in &s.rows {
            let n1: usize = r.key[0].parse().unwrap();
            for (m, c) in s.methods.iter().zip(&r.cells) {
                let vals: Vec<f64> = rows.iter().filter(|x| x.method == *m && x.n1 == n1).map(|x| x.subopt_mean).collect();
                let mut mean = 0.0;
                for v in &vals {
                    mean += v;
                }
                mean /= vals.len() as f64;
                let c = c.unwrap();
                assert!((c.mean - mean).abs() <= 1e-12);
                assert_eq!(c.count, 7);
            }
        }
    }

    #[test]
    fn missing_cells_render_as_dash() {
        let rows = vec![row(MethodId::Pds, 0, 1, 1.0), row(MethodId::Uds, 5, 1, 2.0)];
        let md = summarize(&rows, &[GroupKey::N1]).to_markdown();
        assert!(md.starts_with("| n1 | PDS | UDS |"));
        assert_eq!(md.matches(" - ").count(), 2);
    }

    #[test]
    fn group_key_parsing() {
        assert_eq!("n1".parse::<GroupKey>().unwrap(), GroupKey::N1);
        assert!("method".parse::<GroupKey>().is_err());
        assert_eq!(pooled_std(&CellStats::from_values(&[1.0]), &CellStats::from_values(&[2.0])), 0.0);
    }
}
