//! Systematic encoding via approximate lower-triangular preprocessing.
//!
//! A greedy pass peels degree-one checks off the residual Tanner graph; each
//! peeled check fixes one parity column by forward substitution. Columns the
//! greedy pass has to declare known, together with the checks it could not
//! peel (the gap), form a small dense system that is reduced once by Gaussian
//! elimination. Its free columns are the information positions.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::ldpc::gf2::{pack_bits, BitMatrix};
use crate::ldpc::{BitRole, BitString, ParityCheckMatrix};

/// Largest dimension accepted by [`Encoder::minimum_distance`].
pub const MAX_EXHAUSTIVE_K: usize = 26;

#[derive(Debug, Clone)]
pub struct Encoder {
    n: usize,
    /// Checks solved by forward substitution, in order, with the column each one fixes.
    triangular: Vec<(u32, u32)>,
    info_positions: Vec<usize>,
    /// Dense gap columns determined from the information bits.
    pivot_cols: Vec<usize>,
    pivot_deps: BitMatrix,
    gap_rows: usize,
    rank_deficiency: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColState {
    Unknown,
    Declared,
    Solved,
}

impl Encoder {
    pub fn new(h: &ParityCheckMatrix) -> Result<Self> {
        let n = h.n();
        let m = h.m_rows();
        let mut state = vec![ColState::Unknown; n];
        let mut residual: Vec<usize> = (0..m).map(|r| h.row(r).len()).collect();
        let mut active = vec![true; m];
        let mut gap = Vec::new();
        let mut triangular = Vec::with_capacity(m);
        let mut ready: Vec<usize> = Vec::new();
        let mut by_degree: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::new();
        for r in 0..m {
            match residual[r] {
                0 => {
                    active[r] = false;
                    gap.push(r);
                }
                1 => ready.push(r),
                d => by_degree.push(Reverse((d, r))),
            }
        }

        // marks a column known and updates residual degrees of its checks
        let settle = |c: usize,
                      residual: &mut Vec<usize>,
                      active: &mut Vec<bool>,
                      ready: &mut Vec<usize>,
                      by_degree: &mut BinaryHeap<Reverse<(usize, usize)>>,
                      gap: &mut Vec<usize>| {
            for &r in h.col(c) {
                let r = r as usize;
                residual[r] -= 1;
                if !active[r] {
                    continue;
                }
                match residual[r] {
                    0 => {
                        active[r] = false;
                        gap.push(r);
                    }
                    1 => ready.push(r),
                    d => by_degree.push(Reverse((d, r))),
                }
            }
        };

        loop {
            if let Some(r) = ready.pop() {
                if !active[r] || residual[r] != 1 {
                    continue;
                }
                let c = h
                    .row(r)
                    .iter()
                    .map(|&c| c as usize)
                    .find(|&c| state[c] == ColState::Unknown)
                    .expect("residual degree one");
                active[r] = false;
                state[c] = ColState::Solved;
                triangular.push((r as u32, c as u32));
                settle(
                    c,
                    &mut residual,
                    &mut active,
                    &mut ready,
                    &mut by_degree,
                    &mut gap,
                );
                continue;
            }
            // no degree-one check: declare all but one column of a lightest check known
            let Some(Reverse((d, r))) = by_degree.pop() else {
                break;
            };
            if !active[r] || residual[r] != d {
                continue;
            }
            let unknown: Vec<usize> = h
                .row(r)
                .iter()
                .map(|&c| c as usize)
                .filter(|&c| state[c] == ColState::Unknown)
                .collect();
            for &c in &unknown[..unknown.len() - 1] {
                state[c] = ColState::Declared;
                settle(
                    c,
                    &mut residual,
                    &mut active,
                    &mut ready,
                    &mut by_degree,
                    &mut gap,
                );
            }
        }
        debug_assert!(active.iter().all(|&a| !a));

        let declared: Vec<usize> = (0..n).filter(|&c| state[c] != ColState::Solved).collect();
        let g = gap.len();

        // express every gap check over the declared columns, 64 columns per pass
        let mut system = BitMatrix::zeros(g, declared.len());
        let mut value = vec![0u64; n];
        for (chunk_idx, chunk) in declared.chunks(64).enumerate() {
            value.iter_mut().for_each(|v| *v = 0);
            for (j, &c) in chunk.iter().enumerate() {
                value[c] = 1u64 << j;
            }
            for &(r, c) in &triangular {
                value[c as usize] = h
                    .row(r as usize)
                    .iter()
                    .filter(|&&x| x != c)
                    .fold(0u64, |acc, &x| acc ^ value[x as usize]);
            }
            for (gi, &r) in gap.iter().enumerate() {
                system.row_words_mut(gi)[chunk_idx] = h
                    .row(r)
                    .iter()
                    .fold(0u64, |acc, &x| acc ^ value[x as usize]);
            }
        }

        // pivot on high column indices first so low indices stay free
        let order: Vec<usize> = (0..declared.len()).rev().collect();
        let pivots = system.rref(&order);
        let rank = pivots.len();
        let rank_deficiency = g - rank;
        if rank_deficiency > 0 {
            log::warn!(
                "parity-check matrix has {rank_deficiency} redundant checks; dimension raised to {}",
                n - m + rank_deficiency
            );
        }
        let mut is_pivot = vec![false; declared.len()];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..declared.len()).filter(|&j| !is_pivot[j]).collect();
        let mut pivot_deps = BitMatrix::zeros(rank, free.len());
        for i in 0..rank {
            for (fj, &j) in free.iter().enumerate() {
                if system.get(i, j) {
                    pivot_deps.set(i, fj, true);
                }
            }
        }
        let info_positions: Vec<usize> = free.iter().map(|&j| declared[j]).collect();
        let pivot_cols: Vec<usize> = pivots.iter().map(|&j| declared[j]).collect();
        if info_positions.len() != n - m + rank_deficiency {
            return Err(Error::InvalidParameter(format!(
                "encoder preprocessing found {} free columns, expected {}",
                info_positions.len(),
                n - m + rank_deficiency
            )));
        }
        Ok(Encoder {
            n,
            triangular,
            info_positions,
            pivot_cols,
            pivot_deps,
            gap_rows: g,
            rank_deficiency,
        })
    }

    /// Effective dimension `k`.
    pub fn k(&self) -> usize {
        self.info_positions.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Codeword positions that carry the information bits, in order.
    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    /// Size of the dense gap system solved at construction.
    pub fn gap(&self) -> usize {
        self.gap_rows
    }

    pub fn rank_deficiency(&self) -> usize {
        self.rank_deficiency
    }

    pub fn encode(&self, h: &ParityCheckMatrix, s: &BitString) -> Result<BitString> {
        if s.len() != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                got: s.len(),
            });
        }
        let mut c = vec![0u8; self.n];
        for (&pos, &b) in self.info_positions.iter().zip(s.bits()) {
            c[pos] = b;
        }
        let packed = pack_bits(s.bits());
        for (i, &col) in self.pivot_cols.iter().enumerate() {
            c[col] = self.pivot_deps.row_dot(i, &packed);
        }
        for &(r, col) in &self.triangular {
            c[col as usize] = h
                .row(r as usize)
                .iter()
                .filter(|&&x| x != col)
                .fold(0u8, |acc, &x| acc ^ c[x as usize]);
        }
        Ok(BitString::new(c, BitRole::Codeword))
    }

    /// Exact minimum Hamming weight over nonzero codewords, by Gray-code
    /// enumeration of all `2^k` information words. Only weights at the
    /// positions in `count_positions` are counted (e.g. transmitted columns).
    pub fn minimum_distance(
        &self,
        h: &ParityCheckMatrix,
        count_positions: &[usize],
    ) -> Result<usize> {
        let k = self.k();
        if k == 0 || k > MAX_EXHAUSTIVE_K {
            return Err(Error::InvalidParameter(format!(
                "exhaustive distance needs 1 <= k <= {MAX_EXHAUSTIVE_K}, got {k}"
            )));
        }
        let generators: Vec<Vec<u64>> = (0..k)
            .map(|i| {
                let mut s = BitString::zeros(k, BitRole::Info);
                s.flip(i);
                let c = self.encode(h, &s)?;
                let picked: Vec<u8> = count_positions.iter().map(|&p| c[p]).collect();
                Ok(pack_bits(&picked))
            })
            .collect::<Result<_>>()?;
        let mut current = vec![0u64; generators[0].len()];
        let mut best = usize::MAX;
        for step in 1u64..(1u64 << k) {
            let g = &generators[step.trailing_zeros() as usize];
            let mut weight = 0u32;
            for (w, x) in current.iter_mut().zip(g) {
                *w ^= x;
                weight += w.count_ones();
            }
            best = best.min(weight as usize);
        }
        Ok(best)
    }

    pub fn extract_info(&self, c: &BitString) -> Result<BitString> {
        if c.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: c.len(),
            });
        }
        Ok(BitString::new(
            self.info_positions.iter().map(|&p| c[p]).collect(),
            BitRole::Info,
        ))
    }
}
