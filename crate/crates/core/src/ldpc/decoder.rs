//! Flooding belief propagation in the log-likelihood-ratio domain.

use crate::error::{Error, Result};
use crate::ldpc::{BitRole, BitString, LlrVector, ParityCheckMatrix};

/// Messages and channel values are clamped to this magnitude.
pub const LLR_LIMIT: f64 = 38.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BpAlgorithm {
    /// Exact tanh-rule check update.
    #[default]
    SumProduct,
    /// Normalized min-sum: check messages are scaled by `scale`.
    MinSum { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub codeword: BitString,
    pub converged: bool,
    pub iterations: usize,
}

/// Tanner-graph layout shared read-only between decoding calls.
#[derive(Debug, Clone)]
pub struct BpDecoder {
    n: usize,
    check_ptr: Vec<usize>,
    edge_var: Vec<u32>,
    var_ptr: Vec<usize>,
    var_edges: Vec<u32>,
    algorithm: BpAlgorithm,
}

/// Default iteration budget: 500 up to N = 10^4, 200 above.
pub fn default_max_iters(blocklength: usize) -> usize {
    if blocklength <= 10_000 {
        500
    } else {
        200
    }
}

impl BpDecoder {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        Self::with_algorithm(h, BpAlgorithm::SumProduct)
    }

    pub fn with_algorithm(h: &ParityCheckMatrix, algorithm: BpAlgorithm) -> Self {
        let mut check_ptr = Vec::with_capacity(h.m_rows() + 1);
        let mut edge_var = Vec::with_capacity(h.nnz());
        check_ptr.push(0);
        for r in 0..h.m_rows() {
            edge_var.extend_from_slice(h.row(r));
            check_ptr.push(edge_var.len());
        }
        let mut var_lists: Vec<Vec<u32>> = vec![Vec::new(); h.n()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_lists[v as usize].push(e as u32);
        }
        let mut var_ptr = Vec::with_capacity(h.n() + 1);
        let mut var_edges = Vec::with_capacity(edge_var.len());
        var_ptr.push(0);
        for list in var_lists {
            var_edges.extend(list);
            var_ptr.push(var_edges.len());
        }
        BpDecoder {
            n: h.n(),
            check_ptr,
            edge_var,
            var_ptr,
            var_edges,
            algorithm,
        }
    }

    pub fn algorithm(&self) -> BpAlgorithm {
        self.algorithm
    }

    /// Decodes `llr` (one value per variable node, punctured ones included).
    /// Iteration 0 is the channel hard decision; each later iteration is one
    /// check update followed by one variable update, stopping as soon as the
    /// hard decision satisfies every check. A variable whose total LLR is
    /// exactly 0 is undecided and blocks convergence.
    pub fn decode(&self, llr: &LlrVector, max_iters: usize) -> Result<DecodeOutcome> {
        self.decode_to_syndrome(llr, None, max_iters)
    }

    /// Like [`decode`](Self::decode) but searches for a word whose syndrome
    /// equals `target` instead of zero.
    pub fn decode_to_syndrome(
        &self,
        llr: &LlrVector,
        target: Option<&[u8]>,
        max_iters: usize,
    ) -> Result<DecodeOutcome> {
        let checks = self.check_ptr.len() - 1;
        if let Some(t) = target {
            if t.len() != checks {
                return Err(Error::LengthMismatch {
                    expected: checks,
                    got: t.len(),
                });
            }
        }
        let flip = |c: usize| target.is_some_and(|t| t[c] == 1);
        if llr.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: llr.len(),
            });
        }
        if max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        let channel: Vec<f64> = llr
            .values()
            .iter()
            .map(|v| v.clamp(-LLR_LIMIT, LLR_LIMIT))
            .collect();
        let edges = self.edge_var.len();
        let mut v2c = vec![0.0f64; edges];
        let mut c2v = vec![0.0f64; edges];
        let mut hard = vec![0u8; self.n];
        let mut scratch = Vec::new();

        for (e, &v) in self.edge_var.iter().enumerate() {
            v2c[e] = channel[v as usize];
        }
        for (v, &l) in channel.iter().enumerate() {
            hard[v] = (l < 0.0) as u8;
        }
        let mut undecided = channel.iter().filter(|&&l| l == 0.0).count();
        if undecided == 0 && self.checks_satisfied(&hard, target) {
            return Ok(self.outcome(hard, true, 0));
        }

        for it in 1..=max_iters {
            for c in 0..checks {
                let (lo, hi) = (self.check_ptr[c], self.check_ptr[c + 1]);
                match self.algorithm {
                    BpAlgorithm::SumProduct => {
                        check_update_tanh(&v2c[lo..hi], &mut c2v[lo..hi], &mut scratch)
                    }
                    BpAlgorithm::MinSum { scale } => {
                        check_update_min_sum(&v2c[lo..hi], &mut c2v[lo..hi], scale)
                    }
                }
                if flip(c) {
                    c2v[lo..hi].iter_mut().for_each(|m| *m = -*m);
                }
            }
            undecided = 0;
            for v in 0..self.n {
                let es = &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]];
                let total = channel[v] + es.iter().map(|&e| c2v[e as usize]).sum::<f64>();
                hard[v] = (total < 0.0) as u8;
                undecided += (total == 0.0) as usize;
                for &e in es {
                    let e = e as usize;
                    v2c[e] = (total - c2v[e]).clamp(-LLR_LIMIT, LLR_LIMIT);
                }
            }
            if undecided == 0 && self.checks_satisfied(&hard, target) {
                return Ok(self.outcome(hard, true, it));
            }
        }
        Ok(self.outcome(hard, false, max_iters))
    }

    fn checks_satisfied(&self, hard: &[u8], target: Option<&[u8]>) -> bool {
        self.check_ptr.windows(2).enumerate().all(|(c, w)| {
            let parity = self.edge_var[w[0]..w[1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ hard[v as usize]);
            parity == target.map_or(0, |t| t[c])
        })
    }

    fn outcome(&self, hard: Vec<u8>, converged: bool, iterations: usize) -> DecodeOutcome {
        DecodeOutcome {
            codeword: BitString::new(hard, BitRole::Codeword),
            converged,
            iterations,
        }
    }
}

fn check_update_tanh(incoming: &[f64], outgoing: &mut [f64], scratch: &mut Vec<f64>) {
    scratch.clear();
    let mut product = 1.0f64;
    let mut zeros = 0usize;
    for &m in incoming {
        let t = (0.5 * m).tanh();
        scratch.push(t);
        if t == 0.0 {
            zeros += 1;
        } else {
            product *= t;
        }
    }
    const EDGE: f64 = 1.0 - 1e-16;
    for (out, &t) in outgoing.iter_mut().zip(scratch.iter()) {
        let excl = if t == 0.0 {
            if zeros > 1 {
                0.0
            } else {
                product
            }
        } else if zeros > 0 {
            0.0
        } else {
            product / t
        };
        *out = (2.0 * excl.clamp(-EDGE, EDGE).atanh()).clamp(-LLR_LIMIT, LLR_LIMIT);
    }
}

fn check_update_min_sum(incoming: &[f64], outgoing: &mut [f64], scale: f64) {
    let mut min1 = f64::INFINITY;
    let mut min2 = f64::INFINITY;
    let mut argmin = usize::MAX;
    let mut sign = 1.0f64;
    for (i, &m) in incoming.iter().enumerate() {
        let a = m.abs();
        if m < 0.0 {
            sign = -sign;
        }
        if a < min1 {
            min2 = min1;
            min1 = a;
            argmin = i;
        } else if a < min2 {
            min2 = a;
        }
    }
    for (i, (out, &m)) in outgoing.iter_mut().zip(incoming).enumerate() {
        let mag = if i == argmin { min2 } else { min1 };
        let s = if m < 0.0 { -sign } else { sign };
        *out = scale * s * mag;
    }
}
