//! Observed count series read from CSV.

use std::io::Read;
use std::path::Path;

use crate::error::{HarnessError, Result};

/// Counts `y_1..y_n` with optional row labels taken from a `t` column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedSeries {
    pub labels: Option<Vec<String>>,
    pub counts: Vec<u64>,
}

impl ObservedSeries {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(HarnessError::Input("series has no observations".into()));
        }
        Ok(Self {
            labels: None,
            counts,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Label of observation `i` (0-based): the `t` column if present,
    /// otherwise the 1-based position.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => (i + 1).to_string(),
        }
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| HarnessError::Input(format!("cannot open {}: {e}", path.display())))?;
        Self::read(&path.display().to_string(), file)
    }

    /// Parses CSV with a header row. `y` is required; `t` is optional.
    /// Errors carry the 1-based line number in the file.
    pub fn read<R: Read>(name: &str, reader: R) -> Result<Self> {
        let parse_err = |line: u64, message: String| HarnessError::Parse {
            path: name.to_string(),
            line,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(1, format!("unreadable header: {e}")))?
            .clone();
        let y_col = headers
            .iter()
            .position(|h| h == "y")
            .ok_or_else(|| parse_err(1, "missing required column `y`".into()))?;
        let t_col = headers.iter().position(|h| h == "t");

        let mut counts = Vec::new();
        let mut labels = t_col.map(|_| Vec::new());
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let raw = record.get(y_col).unwrap_or("");
            if raw.is_empty() {
                return Err(parse_err(line, "empty count".into()));
            }
            let y: u64 = raw.parse().map_err(|_| {
                let message = if raw.starts_with('-') {
                    format!("negative count {raw:?}")
                } else {
                    format!("count {raw:?} is not a nonnegative integer")
                };
                parse_err(line, message)
            })?;
            counts.push(y);
            if let (Some(l), Some(c)) = (labels.as_mut(), t_col) {
                l.push(record.get(c).unwrap_or("").to_string());
            }
        }
        if counts.is_empty() {
            return Err(parse_err(1, "no observations after header".into()));
        }
        Ok(Self { labels, counts })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<ObservedSeries> {
        ObservedSeries::read("in.csv", text.as_bytes())
    }

    #[test]
    fn reads_counts_and_labels() {
        let s = read("t,y\n2020-01,4\n2020-02,0\n2020-03,12\n").unwrap();
        assert_eq!(s.counts, vec![4, 0, 12]);
        assert_eq!(s.label(1), "2020-02");
        let s = read("y\n3\n").unwrap();
        assert_eq!(s.labels, None);
        assert_eq!(s.label(0), "1");
    }

    #[test]
    fn rejects_malformed_rows_with_line_numbers() {
        for (text, line) in [
            ("y\n1\n2.5\n", 3),
            ("y\n-1\n", 2),
            ("t,y\n1,3\n2,\n", 3),
            ("y\n1\n2\nabc\n", 4),
        ] {
            match read(text).unwrap_err() {
                HarnessError::Parse { line: l, .. } => assert_eq!(l, line, "{text:?}"),
                e => panic!("{e:?}"),
            }
        }
        assert!(matches!(read("y\n").unwrap_err(), HarnessError::Parse { .. }));
        assert!(matches!(read("count\n1\n").unwrap_err(), HarnessError::Parse { line: 1, .. }));
        assert_eq!(read("y\n-3\n").unwrap_err().exit_code(), 2);
    }
}
