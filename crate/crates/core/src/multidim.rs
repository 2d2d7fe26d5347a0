//! Multidimensional reconciliation over the real division algebras.
//!
//! Frames are split into consecutive `d`-tuples. Bob publishes
//! `m = u * y^-1` per block; Alice forms `r = m * x`, a noisy copy of `u`.
//! Products are always evaluated left to right as written: octonion
//! multiplication is not associative.

use crate::error::{Error, Result};
use crate::ldpc::LlrVector;

/// `MUL[i][j] = (sign, k)` means `e_i * e_j = sign * e_k`. Cayley-Dickson
/// doubling with `(p, q)(r, s) = (pr - s'q, sp + qr')`. The leading 1x1, 2x2
/// and 4x4 sub-tables are the reals, complex numbers and quaternions.
#[rustfmt::skip]
pub const MUL: [[(i8, u8); 8]; 8] = [
    [(1, 0), (1, 1), (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (1, 7)],
    [(1, 1), (-1, 0), (1, 3), (-1, 2), (1, 5), (-1, 4), (-1, 7), (1, 6)],
    [(1, 2), (-1, 3), (-1, 0), (1, 1), (1, 6), (1, 7), (-1, 4), (-1, 5)],
    [(1, 3), (1, 2), (-1, 1), (-1, 0), (1, 7), (-1, 6), (1, 5), (-1, 4)],
    [(1, 4), (-1, 5), (-1, 6), (-1, 7), (-1, 0), (1, 1), (1, 2), (1, 3)],
    [(1, 5), (1, 4), (-1, 7), (1, 6), (-1, 1), (-1, 0), (-1, 3), (1, 2)],
    [(1, 6), (1, 7), (1, 4), (-1, 5), (-1, 2), (1, 3), (-1, 0), (-1, 1)],
    [(1, 7), (-1, 6), (1, 5), (1, 4), (-1, 3), (-1, 2), (1, 1), (-1, 0)],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DivisionAlgebraDim(usize);

impl DivisionAlgebraDim {
    pub const REAL: Self = DivisionAlgebraDim(1);
    pub const COMPLEX: Self = DivisionAlgebraDim(2);
    pub const QUATERNION: Self = DivisionAlgebraDim(4);
    pub const OCTONION: Self = DivisionAlgebraDim(8);

    pub fn new(d: usize) -> Result<Self> {
        match d {
            1 | 2 | 4 | 8 => Ok(DivisionAlgebraDim(d)),
            _ => Err(Error::InvalidParameter(format!(
                "division algebra dimension must be 1, 2, 4 or 8, got {d}"
            ))),
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl Default for DivisionAlgebraDim {
    fn default() -> Self {
        Self::OCTONION
    }
}

/// `out = a * b` for `d`-dimensional algebra elements.
pub fn algebra_mul(a: &[f64], b: &[f64], out: &mut [f64]) {
    let d = a.len();
    debug_assert!(b.len() == d && out.len() == d && matches!(d, 1 | 2 | 4 | 8));
    out.iter_mut().for_each(|v| *v = 0.0);
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            let (s, k) = MUL[i][j];
            out[k as usize] += f64::from(s) * ai * bj;
        }
    }
}

/// `a^-1 = conj(a) / |a|^2`.
pub fn algebra_inverse(a: &[f64], out: &mut [f64]) -> bool {
    let n2: f64 = a.iter().map(|v| v * v).sum();
    if n2 == 0.0 {
        return false;
    }
    out[0] = a[0] / n2;
    for i in 1..a.len() {
        out[i] = -a[i] / n2;
    }
    true
}

fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

fn check_lengths(n: usize, other: usize, d: DivisionAlgebraDim) -> Result<()> {
    if n != other {
        return Err(Error::LengthMismatch {
            expected: n,
            got: other,
        });
    }
    if n % d.get() != 0 {
        return Err(Error::InvalidParameter(format!(
            "length {n} is not a multiple of d = {}",
            d.get()
        )));
    }
    Ok(())
}

/// Bob's public message `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedMessage {
    values: Vec<f64>,
    dim: DivisionAlgebraDim,
}

impl MappedMessage {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> DivisionAlgebraDim {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Raw little-endian `f64` bytes.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(bytes: &[u8], dim: DivisionAlgebraDim) -> Result<Self> {
        if bytes.len() % 8 != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} bytes is not a whole number of f64 values",
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        if values.len() % dim.get() != 0 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "message must hold whole blocks of finite values".into(),
            ));
        }
        Ok(MappedMessage { values, dim })
    }
}

/// Alice's virtual observation `r = m * x` plus the block norms needed for LLRs.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualObservation {
    pub values: Vec<f64>,
    /// `|x_b|` per block.
    pub per_block_scale: Vec<f64>,
    /// `|m_b|^2` per block.
    pub message_norm_sq: Vec<f64>,
    pub dim: DivisionAlgebraDim,
}

/// How Alice turns `r` into LLRs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LlrMode {
    /// Exact posterior: `r = u - m z` with `z` Gaussian, so each bit sees
    /// noise of variance `|m_b|^2 sigma_z^2 / 2`.
    #[default]
    Exact,
    /// Noise variance `(sigma_z^2 / 2) d / |x_b|^2`.
    GaussianApprox,
}

/// `m_b = u_b * y_b^-1` per block.
pub fn map(u: &[f64], y: &[f64], d: DivisionAlgebraDim) -> Result<MappedMessage> {
    check_lengths(u.len(), y.len(), d)?;
    if let Some(i) = u.iter().position(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidParameter(format!("u[{i}] is not +-1")));
    }
    let dd = d.get();
    let mut values = vec![0.0; u.len()];
    let mut inv = [0.0f64; 8];
    for (b, ((ub, yb), mb)) in u
        .chunks_exact(dd)
        .zip(y.chunks_exact(dd))
        .zip(values.chunks_exact_mut(dd))
        .enumerate()
    {
        if !algebra_inverse(yb, &mut inv[..dd]) {
            return Err(Error::ZeroNormBlock { block: b });
        }
        algebra_mul(ub, &inv[..dd], mb);
    }
    Ok(MappedMessage { values, dim: d })
}

/// `r_b = m_b * x_b` per block.
pub fn demap(m: &MappedMessage, x: &[f64]) -> Result<VirtualObservation> {
    let d = m.dim;
    check_lengths(m.len(), x.len(), d)?;
    let dd = d.get();
    let blocks = x.len() / dd;
    let mut values = vec![0.0; x.len()];
    let mut per_block_scale = Vec::with_capacity(blocks);
    let mut message_norm_sq = Vec::with_capacity(blocks);
    for (b, ((mb, xb), rb)) in m
        .values
        .chunks_exact(dd)
        .zip(x.chunks_exact(dd))
        .zip(values.chunks_exact_mut(dd))
        .enumerate()
    {
        let xn = norm_sq(xb);
        if xn == 0.0 {
            return Err(Error::ZeroNormBlock { block: b });
        }
        algebra_mul(mb, xb, rb);
        per_block_scale.push(xn.sqrt());
        message_norm_sq.push(norm_sq(mb));
    }
    Ok(VirtualObservation {
        values,
        per_block_scale,
        message_norm_sq,
        dim: d,
    })
}

pub fn llr_from_observation(
    obs: &VirtualObservation,
    sigma_z2: f64,
    mode: LlrMode,
) -> Result<LlrVector> {
    if !(sigma_z2 > 0.0 && sigma_z2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma_z2 must be positive, got {sigma_z2}"
        )));
    }
    let dd = obs.dim.get();
    let mut out = Vec::with_capacity(obs.values.len());
    for (b, rb) in obs.values.chunks_exact(dd).enumerate() {
        let var = match mode {
            LlrMode::Exact => obs.message_norm_sq[b] * sigma_z2 / 2.0,
            LlrMode::GaussianApprox => {
                let xs = obs.per_block_scale[b];
                sigma_z2 / 2.0 * dd as f64 / (xs * xs)
            }
        };
        out.extend(rb.iter().map(|&r| 2.0 * r / var));
    }
    LlrVector::new(out)
}
