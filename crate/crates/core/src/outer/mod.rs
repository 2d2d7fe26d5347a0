//! Outer stage: accumulate accepted inner frames, exchange a padded syndrome
//! of the concatenated payload and clean up residual bit errors.
//!
//! Alice's payload `w` is the concatenation of her estimates `s_hat` over the
//! accepted frames; Bob's `w_hat` concatenates his own `s`. Alice sends the
//! syndrome `p` of `w`, which costs `len(p)` bits of pre-shared key, and Bob
//! corrects `w_hat` toward it.

pub mod bch;
pub mod gf;

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use bch::{field_degree, BchSyndromeCode};

use crate::error::{Error, Result};
use crate::ldpc::{BitRole, BitString, BpDecoder, LlrVector, ParityCheckMatrix};
use crate::reconcile::ReconciliationFrame;

/// Default outer blocklength.
pub const DEFAULT_N_OUT: usize = 100_000;
/// Default outer rate.
pub const DEFAULT_R_OUT: f64 = 0.999;

const BF_ITERS: usize = 50;
const BP_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OuterFamily {
    /// Shortened binary BCH; leftover syndrome bits become dense checks.
    #[default]
    Bch,
    /// Random regular LDPC, bit flipping then BP on a binary symmetric channel.
    Ldpc { column_weight: usize },
}

#[derive(Debug, Clone)]
enum Kind {
    Bch(BchSyndromeCode),
    Ldpc {
        h: ParityCheckMatrix,
        decoder: BpDecoder,
    },
}

#[derive(Debug, Clone)]
pub struct OuterCode {
    n_out: usize,
    kind: Kind,
    design_ber: f64,
}

impl OuterCode {
    /// Outer code of length `n_out` with `round((1 - r_out) n_out)` syndrome bits.
    pub fn new(n_out: usize, r_out: f64, family: OuterFamily, seed: u64) -> Result<Self> {
        if !(r_out > 0.0 && r_out < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "outer rate must lie in (0, 1), got {r_out}"
            )));
        }
        let r = ((1.0 - r_out) * n_out as f64).round() as usize;
        if r == 0 {
            return Err(Error::InvalidParameter(format!(
                "n_out = {n_out} at rate {r_out} leaves no syndrome bits"
            )));
        }
        let kind = match family {
            OuterFamily::Bch => {
                let m = field_degree(n_out) as usize;
                let t = r / m;
                if t == 0 {
                    return Err(Error::InvalidParameter(format!(
                        "{r} syndrome bits cannot hold one GF(2^{m}) power sum"
                    )));
                }
                Kind::Bch(BchSyndromeCode::new(n_out, t, r - m * t, seed)?)
            }
            OuterFamily::Ldpc { column_weight } => {
                let h = regular_matrix(r, n_out, column_weight, seed)?;
                let decoder = BpDecoder::new(&h);
                Kind::Ldpc { h, decoder }
            }
        };
        Ok(OuterCode {
            n_out,
            kind,
            design_ber: 1e-5,
        })
    }

    /// Wraps an explicit parity-check matrix, decoded like the LDPC family.
    pub fn from_parity_check(h: ParityCheckMatrix) -> Self {
        let decoder = BpDecoder::new(&h);
        OuterCode {
            n_out: h.n(),
            kind: Kind::Ldpc { h, decoder },
            design_ber: 1e-5,
        }
    }

    /// Crossover probability assumed by the BP fallback.
    pub fn with_design_ber(mut self, ber: f64) -> Result<Self> {
        if !(ber > 0.0 && ber < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "design BER must lie in (0, 0.5), got {ber}"
            )));
        }
        self.design_ber = ber;
        Ok(self)
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn syndrome_bits(&self) -> usize {
        match &self.kind {
            Kind::Bch(b) => b.syndrome_len(),
            Kind::Ldpc { h, .. } => h.m_rows(),
        }
    }

    /// `1 - syndrome_bits / n_out`.
    pub fn r_out(&self) -> f64 {
        1.0 - self.syndrome_bits() as f64 / self.n_out as f64
    }

    pub fn family(&self) -> OuterFamily {
        match &self.kind {
            Kind::Bch(_) => OuterFamily::Bch,
            Kind::Ldpc { h, .. } => OuterFamily::Ldpc {
                column_weight: h.min_column_weight(),
            },
        }
    }

    /// The sparse matrix, for the LDPC family.
    pub fn h_out(&self) -> Option<&ParityCheckMatrix> {
        match &self.kind {
            Kind::Bch(_) => None,
            Kind::Ldpc { h, .. } => Some(h),
        }
    }

    pub fn syndrome(&self, w: &[u8]) -> Result<BitString> {
        if w.len() != self.n_out {
            return Err(Error::LengthMismatch {
                expected: self.n_out,
                got: w.len(),
            });
        }
        let bits = match &self.kind {
            Kind::Bch(b) => b.syndrome(w)?,
            Kind::Ldpc { h, .. } => h
                .syndrome(&BitString::new(w.to_vec(), BitRole::Codeword))?
                .into_bits(),
        };
        Ok(BitString::new(bits, BitRole::Syndrome))
    }

    /// One dense row per syndrome bit.
    pub fn dense_rows(&self) -> Vec<Vec<u8>> {
        match &self.kind {
            Kind::Bch(b) => b.dense_rows(),
            Kind::Ldpc { h, .. } => (0..h.m_rows())
                .map(|r| {
                    let mut row = vec![0u8; h.n()];
                    for &c in h.row(r) {
                        row[c as usize] = 1;
                    }
                    row
                })
                .collect(),
        }
    }

    /// Positions to flip in `w_hat` so its syndrome equals `p`, or `None`.
    pub fn correct(&self, w_hat: &[u8], p: &[u8]) -> Result<Option<Vec<usize>>> {
        if p.len() != self.syndrome_bits() {
            return Err(Error::LengthMismatch {
                expected: self.syndrome_bits(),
                got: p.len(),
            });
        }
        match &self.kind {
            Kind::Bch(b) => b.decode(w_hat, p),
            Kind::Ldpc { h, decoder } => {
                let own = self.syndrome(w_hat)?;
                let target: Vec<u8> = own.bits().iter().zip(p).map(|(a, b)| a ^ b).collect();
                if let Some(e) = bit_flip(h, &target) {
                    return Ok(Some(e));
                }
                let prior = ((1.0 - self.design_ber) / self.design_ber).ln();
                let llr = LlrVector::new(vec![prior; h.n()])?;
                let out = decoder.decode_to_syndrome(&llr, Some(&target), BP_ITERS)?;
                if !out.converged {
                    return Ok(None);
                }
                Ok(Some((0..h.n()).filter(|&i| out.codeword[i] == 1).collect()))
            }
        }
    }
}

/// Syndrome-domain bit flipping: repeatedly flips the bits with the most
/// unsatisfied checks while that is a strict majority of their checks.
fn bit_flip(h: &ParityCheckMatrix, target: &[u8]) -> Option<Vec<usize>> {
    let mut unsat = target.to_vec();
    let mut e = vec![0u8; h.n()];
    for _ in 0..BF_ITERS {
        if unsat.iter().all(|&b| b == 0) {
            return Some((0..h.n()).filter(|&i| e[i] == 1).collect());
        }
        let counts: Vec<usize> = (0..h.n())
            .map(|c| h.col(c).iter().filter(|&&r| unsat[r as usize] == 1).count())
            .collect();
        let best = *counts.iter().max()?;
        let mut flipped = false;
        for c in 0..h.n() {
            if counts[c] == best && 2 * best > h.col(c).len() {
                e[c] ^= 1;
                for &r in h.col(c) {
                    unsat[r as usize] ^= 1;
                }
                flipped = true;
            }
        }
        if !flipped {
            return None;
        }
    }
    unsat
        .iter()
        .all(|&b| b == 0)
        .then(|| (0..h.n()).filter(|&i| e[i] == 1).collect())
}

/// Random `m x n` matrix with every column of weight `wc` and row weights
/// differing by at most one before duplicate repair.
pub fn regular_matrix(m: usize, n: usize, wc: usize, seed: u64) -> Result<ParityCheckMatrix> {
    if wc == 0 || wc > m {
        return Err(Error::InvalidParameter(format!(
            "column weight {wc} impossible with {m} rows"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sockets: Vec<usize> = (0..n * wc).map(|i| i % m).collect();
    sockets.shuffle(&mut rng);
    // repair repeated rows inside a column by swapping with a random socket
    for _ in 0..100 {
        let mut clean = true;
        for c in 0..n {
            for j in 0..wc {
                let s = c * wc + j;
                if sockets[c * wc..s].contains(&sockets[s]) {
                    clean = false;
                    let other = rng.random_range(0..n * wc);
                    sockets.swap(s, other);
                }
            }
        }
        if clean {
            let entries = sockets.iter().enumerate().map(|(i, &r)| (r, i / wc));
            return ParityCheckMatrix::from_entries(m, n, entries);
        }
    }
    Err(Error::InvalidParameter(
        "could not place column entries without repeats".into(),
    ))
}

/// Frames accumulated for one outer block.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterBatch {
    pub n_out: usize,
    pub k_inner: usize,
    pub a_frames: usize,
    /// 1-based attempt indices of accepted frames.
    pub idx: Vec<u64>,
    /// Alice's concatenated estimates.
    pub w: Vec<u8>,
    /// Bob's concatenated information bits.
    pub w_hat: Vec<u8>,
    pub p: Option<BitString>,
    pub w_hat_corrected: Option<Vec<u8>>,
    pub attempts: u64,
}

impl OuterBatch {
    pub fn new(n_out: usize, k_inner: usize) -> Result<Self> {
        if k_inner == 0 || n_out == 0 || n_out % k_inner != 0 {
            return Err(Error::InvalidParameter(format!(
                "n_out = {n_out} must be a positive multiple of k = {k_inner}"
            )));
        }
        Ok(OuterBatch {
            n_out,
            k_inner,
            a_frames: n_out / k_inner,
            idx: Vec::new(),
            w: Vec::with_capacity(n_out),
            w_hat: Vec::with_capacity(n_out),
            p: None,
            w_hat_corrected: None,
            attempts: 0,
        })
    }

    pub fn accepted(&self) -> usize {
        self.idx.len()
    }

    pub fn is_complete(&self) -> bool {
        self.idx.len() == self.a_frames
    }

    /// Records one attempt; payloads of rejected attempts are ignored.
    /// Returns whether the batch is now complete.
    pub fn offer(&mut self, accepted: bool, alice: &[u8], bob: &[u8]) -> Result<bool> {
        if self.is_complete() {
            return Err(Error::InvalidParameter("batch already complete".into()));
        }
        self.attempts += 1;
        if accepted {
            for payload in [alice, bob] {
                if payload.len() != self.k_inner {
                    return Err(Error::LengthMismatch {
                        expected: self.k_inner,
                        got: payload.len(),
                    });
                }
            }
            self.idx.push(self.attempts);
            self.w.extend_from_slice(alice);
            self.w_hat.extend_from_slice(bob);
        }
        Ok(self.is_complete())
    }

    pub fn offer_frame(&mut self, frame: &ReconciliationFrame) -> Result<bool> {
        self.offer(frame.accepted, frame.s_hat.bits(), frame.s.bits())
    }

    fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::IncompleteBatch {
                have: self.idx.len(),
                need: self.a_frames,
            })
        }
    }

    /// Decoder succeeded but Bob's corrected payload still differs from `w`.
    pub fn undetected_error(&self) -> bool {
        self.w_hat_corrected.as_ref().is_some_and(|c| *c != self.w)
    }
}

/// Feeds `frames` in order until the batch completes or the stream ends.
pub fn accumulate<I>(n_out: usize, k_inner: usize, frames: I) -> Result<OuterBatch>
where
    I: IntoIterator<Item = ReconciliationFrame>,
{
    let mut batch = OuterBatch::new(n_out, k_inner)?;
    for f in frames {
        if batch.offer_frame(&f)? {
            break;
        }
    }
    Ok(batch)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyndromeExchange {
    pub p: BitString,
    /// Pre-shared key bits consumed by the one-time pad.
    pub key_cost: usize,
}

/// Alice's side: `p = H_out w`, stored on the batch.
pub fn outer_syndrome_exchange(
    batch: &mut OuterBatch,
    code: &OuterCode,
) -> Result<SyndromeExchange> {
    batch.require_complete()?;
    if code.n_out() != batch.n_out {
        return Err(Error::LengthMismatch {
            expected: code.n_out(),
            got: batch.n_out,
        });
    }
    let p = code.syndrome(&batch.w)?;
    batch.p = Some(p.clone());
    Ok(SyndromeExchange {
        key_cost: p.len(),
        p,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OuterOutcome {
    Corrected {
        flips: usize,
    },
    /// No consistent low-weight correction; the batch is discarded.
    Failed,
}

/// Bob's side: corrects `w_hat` toward `p`, filling `w_hat_corrected` on success.
pub fn outer_decode(batch: &mut OuterBatch, code: &OuterCode) -> Result<OuterOutcome> {
    batch.require_complete()?;
    let p = batch
        .p
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("syndrome not exchanged yet".into()))?;
    match code.correct(&batch.w_hat, p.bits())? {
        Some(flips) => {
            let mut fixed = batch.w_hat.clone();
            for &i in &flips {
                fixed[i] ^= 1;
            }
            batch.w_hat_corrected = Some(fixed);
            Ok(OuterOutcome::Corrected { flips: flips.len() })
        }
        None => {
            batch.w_hat_corrected = None;
            Ok(OuterOutcome::Failed)
        }
    }
}

/// Fraction of differing bits.
pub fn residual_ber(a: &[u8], b: &[u8]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let diff = a.iter().zip(b).filter(|(x, y)| x != y).count();
    Ok(diff as f64 / a.len() as f64)
}

/// `E[K] = A / (1 - FER)`.
pub fn expected_attempts(a_frames: usize, fer: f64) -> f64 {
    a_frames as f64 / (1.0 - fer)
}

/// `N_out / (N (1 - FER))`, the variant normalized by the transmitted length.
pub fn expected_attempts_blocklength_variant(n_out: usize, blocklength: usize, fer: f64) -> f64 {
    n_out as f64 / (blocklength as f64 * (1.0 - fer))
}

const REPLAY_MAGIC: &[u8; 8] = b"SBOUTER1";

fn pack_bytes(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= (b & 1) << (i % 8);
    }
    out
}

fn unpack_bytes(bytes: &[u8], len: usize) -> Vec<u8> {
    (0..len).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect()
}

/// Binary record of `(n_out, k, attempts, idx, w, w_hat, p)`, little endian,
/// bit strings packed LSB first.
pub fn write_replay(batch: &OuterBatch, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(REPLAY_MAGIC);
    for v in [
        batch.n_out as u64,
        batch.k_inner as u64,
        batch.attempts,
        batch.idx.len() as u64,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &i in &batch.idx {
        buf.extend_from_slice(&i.to_le_bytes());
    }
    let w_len = batch.w.len() as u64;
    buf.extend_from_slice(&w_len.to_le_bytes());
    buf.extend(pack_bytes(&batch.w));
    buf.extend(pack_bytes(&batch.w_hat));
    let p = batch.p.as_ref().map_or(&[][..], |p| p.bits());
    buf.extend_from_slice(&(p.len() as u64).to_le_bytes());
    buf.extend(pack_bytes(p));
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(s)
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}

pub fn read_replay(path: &Path) -> Result<OuterBatch> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: msg.to_string(),
    };
    let mut cur = Cursor { buf: &buf, pos: 0 };
    if cur.take(8).ok_or_else(|| bad("truncated replay file"))? != REPLAY_MAGIC {
        return Err(bad("not a batch replay file"));
    }
    let parsed = (|| {
        let n_out = cur.u64()? as usize;
        let k_inner = cur.u64()? as usize;
        let attempts = cur.u64()?;
        let n_idx = cur.u64()? as usize;
        let idx = (0..n_idx).map(|_| cur.u64()).collect::<Option<Vec<_>>>()?;
        let w_len = cur.u64()? as usize;
        let w = unpack_bytes(cur.take(w_len.div_ceil(8))?, w_len);
        let w_hat = unpack_bytes(cur.take(w_len.div_ceil(8))?, w_len);
        let p_len = cur.u64()? as usize;
        let p = unpack_bytes(cur.take(p_len.div_ceil(8))?, p_len);
        Some((n_out, k_inner, attempts, idx, w, w_hat, p))
    })();
    let (n_out, k_inner, attempts, idx, w, w_hat, p) =
        parsed.ok_or_else(|| bad("truncated replay file"))?;
    let p_len = p.len();
    let mut batch = OuterBatch::new(n_out, k_inner).map_err(|_| bad("invalid batch shape"))?;
    batch.idx = idx;
    batch.w = w;
    batch.w_hat = w_hat;
    batch.attempts = attempts;
    batch.p = (p_len > 0).then(|| BitString::new(p, BitRole::Syndrome));
    Ok(batch)
}
