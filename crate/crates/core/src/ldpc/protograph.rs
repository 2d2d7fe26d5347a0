//! Protograph (base matrix) description and its plain-text file format.
//!
//! The file format is:
//!
//! ```text
//! rows cols
//! <rows lines of cols non-negative integers>
//! puncture: i j k        (optional)
//! ```
//!
//! Lines starting with `#` are comments.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Base matrix of a protograph code. Entries are edge multiplicities between
/// check types (rows) and variable types (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protograph {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
    punctured: Vec<usize>,
}

/// Default rate-1/50 base matrix shipped with the crate.
pub const DEFAULT_R50_BASE: &str = include_str!("../../data/r50_base.txt");

impl Protograph {
    pub fn new(base: Vec<Vec<u32>>, punctured: Vec<usize>) -> Result<Self> {
        let rows = base.len();
        if rows == 0 {
            return Err(Error::InvalidProtograph("no rows".into()));
        }
        let cols = base[0].len();
        if cols == 0 || base.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidProtograph("ragged or empty rows".into()));
        }
        let entries: Vec<u32> = base.into_iter().flatten().collect();
        let mut punctured = punctured;
        punctured.sort_unstable();
        punctured.dedup();
        let proto = Protograph {
            rows,
            cols,
            entries,
            punctured,
        };
        proto.validate()?;
        Ok(proto)
    }

    fn validate(&self) -> Result<()> {
        if let Some(&p) = self.punctured.iter().find(|&&p| p >= self.cols) {
            return Err(Error::InvalidProtograph(format!(
                "punctured column {p} out of range"
            )));
        }
        for r in 0..self.rows {
            if (0..self.cols).all(|c| self.get(r, c) == 0) {
                return Err(Error::InvalidProtograph(format!("row {r} is empty")));
            }
        }
        for c in 0..self.cols {
            if (0..self.rows).all(|r| self.get(r, c) == 0) {
                return Err(Error::InvalidProtograph(format!("column {c} is empty")));
            }
        }
        if self.cols <= self.rows || self.transmitted_cols() == 0 {
            return Err(Error::InvalidProtograph(format!(
                "design rate must be positive ({} rows, {} cols)",
                self.rows, self.cols
            )));
        }
        let rate = self.design_rate();
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::InvalidProtograph(format!(
                "design rate {rate} outside (0, 1)"
            )));
        }
        Ok(())
    }

    /// Regular `(dv, dc)` protograph with a single check type, e.g. `[[3, 3]]` for (3,6).
    pub fn regular(dv: u32, dc: u32) -> Result<Self> {
        if dv == 0 || dc <= dv || dc % dv != 0 {
            return Err(Error::InvalidProtograph(format!(
                "({dv},{dc}) needs dv | dc and dc > dv"
            )));
        }
        // dc/dv variable types each joined to one check type with multiplicity dv
        let cols = (dc / dv) as usize;
        Protograph::new(vec![vec![dv; cols]], vec![])
    }

    /// The shipped rate-1/50 protograph.
    pub fn default_r50() -> Self {
        Self::parse(DEFAULT_R50_BASE, Path::new("<builtin>")).expect("shipped base matrix is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.entries[row * self.cols + col]
    }

    pub fn punctured(&self) -> &[usize] {
        &self.punctured
    }

    pub fn is_punctured(&self, col: usize) -> bool {
        self.punctured.binary_search(&col).is_ok()
    }

    pub fn transmitted_cols(&self) -> usize {
        self.cols - self.punctured.len()
    }

    /// `(cols - rows) / transmitted cols`.
    pub fn design_rate(&self) -> f64 {
        (self.cols as f64 - self.rows as f64) / self.transmitted_cols() as f64
    }

    pub fn column_degree(&self, col: usize) -> u32 {
        (0..self.rows).map(|r| self.get(r, col)).sum()
    }

    pub fn row_degree(&self, row: usize) -> u32 {
        (0..self.cols).map(|c| self.get(row, c)).sum()
    }

    /// Lift size needed so that the transmitted length equals `blocklength`.
    pub fn lift_size_for(&self, blocklength: usize) -> Result<usize> {
        let t = self.transmitted_cols();
        if blocklength == 0 || blocklength % t != 0 {
            return Err(Error::Lifting(format!(
                "blocklength {blocklength} is not a multiple of {t} transmitted columns"
            )));
        }
        Ok(blocklength / t)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(ln, format!("bad header: {e}")))?;
        let [rows, cols] = dims[..] else {
            return Err(perr(ln, "header must be `rows cols`".into()));
        };

        let mut base = Vec::with_capacity(rows);
        let mut punctured = Vec::new();
        for (ln, line) in lines {
            if let Some(rest) = line.strip_prefix("puncture:") {
                punctured = rest
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| perr(ln, format!("bad puncture list: {e}")))?;
                continue;
            }
            if base.len() == rows {
                return Err(perr(ln, format!("more than {rows} matrix rows")));
            }
            let row: Vec<u32> = line
                .split_whitespace()
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(ln, format!("bad entry: {e}")))?;
            if row.len() != cols {
                return Err(perr(
                    ln,
                    format!("expected {cols} entries, got {}", row.len()),
                ));
            }
            base.push(row);
        }
        if base.len() != rows {
            return Err(perr(0, format!("expected {rows} rows, got {}", base.len())));
        }
        Protograph::new(base, punctured)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

impl fmt::Display for Protograph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        if !self.punctured.is_empty() {
            let p: Vec<String> = self.punctured.iter().map(|p| p.to_string()).collect();
            writeln!(f, "puncture: {}", p.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_format() {
        let text = "# toy\n2 4\n1 1 1 0\n0 1 1 1\npuncture: 0\n";
        let p = Protograph::parse(text, Path::new("t")).unwrap();
        assert_eq!((p.rows(), p.cols()), (2, 4));
        assert_eq!(p.punctured(), &[0]);
        assert!((p.design_rate() - 2.0 / 3.0).abs() < 1e-12);
        let again = Protograph::parse(&p.to_string(), Path::new("t")).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn rejects_bad_rate_and_empty_lines() {
        assert!(Protograph::new(vec![vec![1, 1], vec![1, 1]], vec![]).is_err());
        assert!(Protograph::new(vec![vec![1, 0, 0]], vec![]).is_err());
        assert!(Protograph::parse("1 2\n1\n", Path::new("t")).is_err());
    }

    #[test]
    fn shipped_base_is_rate_one_fiftieth() {
        let p = Protograph::default_r50();
        assert!((p.design_rate() - 0.02).abs() < 1e-12);
        assert_eq!(p.lift_size_for(1000).unwrap() * p.transmitted_cols(), 1000);
    }

    #[test]
    fn regular_three_six() {
        let p = Protograph::regular(3, 6).unwrap();
        assert_eq!((p.rows(), p.cols()), (1, 2));
        assert_eq!(p.design_rate(), 0.5);
    }
}
