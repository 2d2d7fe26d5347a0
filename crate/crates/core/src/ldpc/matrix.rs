use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ldpc::bits::{BitRole, BitString};

/// Sparse binary parity-check matrix with row and column adjacency.
///
/// Columns may be punctured: they take part in decoding but are never sent
/// over the channel, so [`ParityCheckMatrix::blocklength`] counts only the
/// transmitted columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n: usize,
    m: usize,
    lift_size: usize,
    row_adj: Vec<Vec<u32>>,
    col_adj: Vec<Vec<u32>>,
    punctured: Vec<bool>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from `(row, col)` positions. Duplicates are rejected.
    pub fn from_entries(
        m: usize,
        n: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut row_adj = vec![Vec::new(); m];
        let mut col_adj = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for (r, c) in entries {
            if r >= m || c >= n {
                return Err(Error::InvalidParameter(format!(
                    "entry ({r}, {c}) outside {m}x{n}"
                )));
            }
            if !seen.insert((r, c)) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate entry ({r}, {c})"
                )));
            }
            row_adj[r].push(c as u32);
            col_adj[c].push(r as u32);
        }
        for list in row_adj.iter_mut().chain(col_adj.iter_mut()) {
            list.sort_unstable();
        }
        Ok(ParityCheckMatrix {
            n,
            m,
            lift_size: 1,
            row_adj,
            col_adj,
            punctured: vec![false; n],
        })
    }

    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("ragged dense matrix".into()));
        }
        let entries = rows.iter().enumerate().flat_map(|(r, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v & 1 == 1)
                .map(move |(c, _)| (r, c))
        });
        Self::from_entries(m, n, entries)
    }

    pub(crate) fn with_lift_size(mut self, z: usize) -> Self {
        self.lift_size = z;
        self
    }

    pub fn with_punctured(mut self, cols: &[usize]) -> Result<Self> {
        for &c in cols {
            if c >= self.n {
                return Err(Error::InvalidParameter(format!(
                    "punctured column {c} out of range"
                )));
            }
            self.punctured[c] = true;
        }
        Ok(self)
    }

    /// Total number of variable nodes, punctured ones included.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_rows(&self) -> usize {
        self.m
    }

    pub fn lift_size(&self) -> usize {
        self.lift_size
    }

    /// Number of transmitted bits `N`.
    pub fn blocklength(&self) -> usize {
        self.punctured.iter().filter(|&&p| !p).count()
    }

    pub fn is_punctured(&self, col: usize) -> bool {
        self.punctured[col]
    }

    pub fn transmitted_columns(&self) -> Vec<usize> {
        (0..self.n).filter(|&c| !self.punctured[c]).collect()
    }

    /// `n - m`, i.e. the dimension when `H` has full row rank.
    pub fn design_dimension(&self) -> usize {
        self.n.saturating_sub(self.m)
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.row_adj[r]
    }

    pub fn col(&self, c: usize) -> &[u32] {
        &self.col_adj[c]
    }

    pub fn nnz(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.row_adj[r].binary_search(&(c as u32)).is_ok()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_adj
            .iter()
            .enumerate()
            .flat_map(|(r, cols)| cols.iter().map(move |&c| (r, c as usize)))
    }

    pub fn min_column_weight(&self) -> usize {
        self.col_adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// `H v^T` over GF(2).
    pub fn syndrome(&self, v: &BitString) -> Result<BitString> {
        if v.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        let bits = self
            .row_adj
            .iter()
            .map(|cols| cols.iter().fold(0u8, |acc, &c| acc ^ v[c as usize]))
            .collect();
        Ok(BitString::new(bits, BitRole::Syndrome))
    }

    pub fn syndrome_is_zero(&self, v: &[u8]) -> bool {
        debug_assert_eq!(v.len(), self.n);
        self.row_adj
            .iter()
            .all(|cols| cols.iter().fold(0u8, |acc, &c| acc ^ v[c as usize]) == 0)
    }

    /// True if some pair of columns shares two or more rows.
    pub fn has_four_cycle(&self) -> bool {
        let mut pairs = HashSet::new();
        for cols in &self.row_adj {
            for (i, &a) in cols.iter().enumerate() {
                for &b in &cols[i + 1..] {
                    if !pairs.insert((a, b)) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Number of distinct 4-cycles, counted by column pairs sharing rows.
    pub fn four_cycle_count(&self) -> usize {
        let mut shared = std::collections::HashMap::<(u32, u32), usize>::new();
        for cols in &self.row_adj {
            for (i, &a) in cols.iter().enumerate() {
                for &b in &cols[i + 1..] {
                    *shared.entry((a, b)).or_default() += 1;
                }
            }
        }
        shared
            .values()
            .map(|&s| s * (s.saturating_sub(1)) / 2)
            .sum()
    }

    /// Length of the shortest cycle in the Tanner graph, `None` if acyclic.
    /// Breadth-first search from every variable node; meant for small codes.
    pub fn girth(&self) -> Option<usize> {
        let nodes = self.n + self.m;
        let mut best: Option<usize> = None;
        let mut dist = vec![usize::MAX; nodes];
        let mut parent = vec![usize::MAX; nodes];
        let mut touched = Vec::new();
        for start in 0..self.n {
            for &t in &touched {
                dist[t] = usize::MAX;
                parent[t] = usize::MAX;
            }
            touched.clear();
            let mut queue = std::collections::VecDeque::new();
            dist[start] = 0;
            touched.push(start);
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                if let Some(b) = best {
                    if 2 * dist[u] + 1 >= b {
                        break;
                    }
                }
                let neighbours: Vec<usize> = if u < self.n {
                    self.col_adj[u]
                        .iter()
                        .map(|&r| self.n + r as usize)
                        .collect()
                } else {
                    self.row_adj[u - self.n]
                        .iter()
                        .map(|&c| c as usize)
                        .collect()
                };
                for v in neighbours {
                    if v == parent[u] {
                        continue;
                    }
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        parent[v] = u;
                        touched.push(v);
                        queue.push_back(v);
                    } else {
                        let cycle = dist[u] + dist[v] + 1;
                        best = Some(best.map_or(cycle, |b| b.min(cycle)));
                    }
                }
            }
        }
        best
    }

    /// Column `c` as a dense syndrome-length bit vector.
    pub fn column_bits(&self, c: usize) -> Vec<u8> {
        let mut v = vec![0u8; self.m];
        for &r in &self.col_adj[c] {
            v[r as usize] = 1;
        }
        v
    }

    /// Exports the matrix in the `alist` text format (1-based indices,
    /// zero padded).
    pub fn to_alist(&self) -> String {
        let max_col = self.col_adj.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.row_adj.iter().map(Vec::len).max().unwrap_or(0);
        let mut s = String::new();
        let join = |v: &[u32], width: usize| -> String {
            let mut items: Vec<String> = v.iter().map(|&i| (i + 1).to_string()).collect();
            items.resize(width, "0".to_string());
            items.join(" ")
        };
        let _ = writeln!(s, "{} {}", self.n, self.m);
        let _ = writeln!(s, "{max_col} {max_row}");
        let degs: Vec<String> = self.col_adj.iter().map(|c| c.len().to_string()).collect();
        let _ = writeln!(s, "{}", degs.join(" "));
        let degs: Vec<String> = self.row_adj.iter().map(|r| r.len().to_string()).collect();
        let _ = writeln!(s, "{}", degs.join(" "));
        for c in &self.col_adj {
            let _ = writeln!(s, "{}", join(c, max_col));
        }
        for r in &self.row_adj {
            let _ = writeln!(s, "{}", join(r, max_row));
        }
        s
    }

    pub fn from_alist(text: &str, origin: &Path) -> Result<Self> {
        let perr = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line: 0,
            msg,
        };
        let nums: Vec<usize> = text
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(e.to_string()))?;
        let mut it = nums.into_iter();
        let mut next = || it.next().ok_or_else(|| perr("truncated alist".into()));
        let n = next()?;
        let m = next()?;
        let max_col = next()?;
        let _max_row = next()?;
        let col_deg: Vec<usize> = (0..n).map(|_| next()).collect::<Result<_>>()?;
        for _ in 0..m {
            next()?;
        }
        let mut entries = Vec::new();
        for (c, &d) in col_deg.iter().enumerate() {
            for j in 0..max_col {
                let r = next()?;
                if j < d {
                    if r == 0 {
                        return Err(perr(format!("column {c} lists row 0")));
                    }
                    entries.push((r - 1, c));
                }
            }
        }
        Self::from_entries(m, n, entries)
    }

    pub fn write_alist(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_alist()).map_err(|e| Error::io(path, e))
    }
}
