//! CSV/JSON serialization and all-or-nothing file output.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! that parsing them back yields the identical `f64`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column name for a quantile level: `0.1 -> q10`, `0.5 -> q50`, `0.975 -> q97.5`.
pub fn quantile_column(level: f64) -> String {
    let pct = level * 100.0;
    let rounded = pct.round();
    if (pct - rounded).abs() < 1e-9 {
        format!("q{rounded}")
    } else {
        format!("q{}", (pct * 1e6).round() / 1e6)
    }
}

/// One horizon of the ensemble summary, Monte Carlo columns next to exact ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub t: usize,
    pub mean: f64,
    /// Lower empirical quantiles, one per configured level.
    pub quantiles: Vec<u64>,
    /// Largest count among the replicates at this horizon.
    pub max: u64,
    pub zero_rate: f64,
    pub analytic_mean: f64,
    pub analytic_var: f64,
    pub exact_zero_prob: f64,
}

pub fn summary_header(levels: &[f64]) -> Vec<String> {
    let mut h = vec!["t".to_string(), "mean".to_string()];
    h.extend(levels.iter().map(|&q| quantile_column(q)));
    for c in ["max", "zero_rate", "analytic_mean", "analytic_var", "exact_zero_prob"] {
        h.push(c.to_string());
    }
    h
}

pub fn summary_csv(levels: &[f64], rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| HarnessError::Input(format!("csv encoding: {e}"));
    w.write_record(summary_header(levels)).map_err(fail)?;
    for r in rows {
        let mut rec = vec![r.t.to_string(), fmt_f64(r.mean)];
        rec.extend(r.quantiles.iter().map(u64::to_string));
        rec.push(r.max.to_string());
        rec.extend([r.zero_rate, r.analytic_mean, r.analytic_var, r.exact_zero_prob].map(fmt_f64));
        w.write_record(&rec).map_err(fail)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::Input(format!("csv encoding: {e}")))
}

/// Parses a summary CSV written by [`summary_csv`]. Returns the quantile
/// column names and the rows.
pub fn read_summary_csv(name: &str, bytes: &[u8]) -> Result<(Vec<String>, Vec<SummaryRow>)> {
    let perr = |line: u64, message: String| HarnessError::Parse {
        path: name.to_string(),
        line,
        message,
    };
    let mut rdr = csv::Reader::from_reader(bytes);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| perr(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let n = header.len();
    if n < 8 || header[0] != "t" || header[1] != "mean" || header[n - 5..] != summary_header(&[])[2..] {
        return Err(perr(1, format!("unexpected summary header {header:?}")));
    }
    let q_names = header[2..n - 5].to_vec();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| perr(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|e| perr(line, format!("column {}: {e}", header[i])))
        };
        let u = |i: usize| -> Result<u64> {
            rec[i].parse().map_err(|e| perr(line, format!("column {}: {e}", header[i])))
        };
        rows.push(SummaryRow {
            t: u(0)? as usize,
            mean: f(1)?,
            quantiles: (2..n - 5).map(u).collect::<Result<_>>()?,
            max: u(n - 5)?,
            zero_rate: f(n - 4)?,
            analytic_mean: f(n - 3)?,
            analytic_var: f(n - 2)?,
            exact_zero_prob: f(n - 1)?,
        });
    }
    Ok((q_names, rows))
}

pub fn histogram_csv(bins: &[(u64, u64)]) -> Vec<u8> {
    let mut out = String::from("count,frequency\n");
    for (c, f) in bins {
        out.push_str(&format!("{c},{f}\n"));
    }
    out.into_bytes()
}

/// Files rendered in memory and written together once everything succeeded.
#[derive(Debug, Default)]
pub struct OutputBundle {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputBundle {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Writes each file through a temporary sibling and a rename, so a reader
    /// never sees a truncated file. Returns the written paths.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            std::fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
            std::fs::rename(&tmp, &path).map_err(|e| HarnessError::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_names() {
        assert_eq!(quantile_column(0.1), "q10");
        assert_eq!(quantile_column(0.5), "q50");
        assert_eq!(quantile_column(0.9), "q90");
        assert_eq!(quantile_column(0.975), "q97.5");
        assert_eq!(
            summary_header(&[0.1, 0.5, 0.9]).join(","),
            "t,mean,q10,q50,q90,max,zero_rate,analytic_mean,analytic_var,exact_zero_prob"
        );
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 5.416_666_666_666_667, 1e-300, 6.02e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn bundle_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = OutputBundle::default();
        b.add("a.csv", b"x\n1\n".to_vec());
        b.add("b.json", b"{}".to_vec());
        let paths = b.write_to(&dir.path().join("nested")).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(std::fs::read(&paths[0]).unwrap(), b"x\n1\n");
        let names: Vec<_> = std::fs::read_dir(dir.path().join("nested")).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 2);
    }
}
