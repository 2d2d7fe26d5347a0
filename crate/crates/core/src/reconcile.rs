//! One inner-code reconciliation attempt, end to end.
//!
//! Bob draws `s`, encodes it to `c`, sends `m = map(u, y)` for the BPSK image
//! `u` of the transmitted bits. Alice demaps with `x`, decodes, and accepts
//! the frame when her estimate satisfies every parity check.

use rand::Rng;

use crate::channel::awgn_sample_with;
use crate::error::{Error, Result};
use crate::ldpc::{
    default_max_iters, expand_punctured, lift_for_blocklength, BitRole, BitString, BpAlgorithm,
    BpDecoder, Encoder, LlrVector, ParityCheckMatrix, Protograph, MAX_EXHAUSTIVE_K,
};
use crate::multidim::{
    demap, llr_from_observation, map, DivisionAlgebraDim, LlrMode, MappedMessage,
};

/// A lifted inner code with its encoder and decoder.
#[derive(Debug, Clone)]
pub struct InnerCode {
    h: ParityCheckMatrix,
    encoder: Encoder,
    decoder: BpDecoder,
    transmitted: Vec<usize>,
    max_iters: usize,
    girth_at_least_6: bool,
    min_distance: Option<usize>,
}

/// Liftings tried when the exact minimum distance is affordable.
pub const LIFT_CANDIDATES: u64 = 8;

fn candidate_seed(seed: u64, i: u64) -> u64 {
    seed.wrapping_add(i.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

impl InnerCode {
    pub fn new(
        h: ParityCheckMatrix,
        algorithm: BpAlgorithm,
        max_iters: Option<usize>,
    ) -> Result<Self> {
        let encoder = Encoder::new(&h)?;
        let decoder = BpDecoder::with_algorithm(&h, algorithm);
        let transmitted = h.transmitted_columns();
        let max_iters = max_iters.unwrap_or_else(|| default_max_iters(transmitted.len()));
        let girth_at_least_6 = !h.has_four_cycle();
        Ok(InnerCode {
            h,
            encoder,
            decoder,
            transmitted,
            max_iters,
            girth_at_least_6,
            min_distance: None,
        })
    }

    /// Lifts `proto` to transmitted length `blocklength`. When the code is
    /// small enough for exhaustive enumeration, [`LIFT_CANDIDATES`] liftings
    /// derived from `seed` are built and the one with the largest minimum
    /// distance over the transmitted bits is kept (earliest wins ties).
    pub fn from_protograph(
        proto: &Protograph,
        blocklength: usize,
        seed: u64,
        algorithm: BpAlgorithm,
        max_iters: Option<usize>,
    ) -> Result<Self> {
        let mut best: Option<(usize, InnerCode)> = None;
        for i in 0..LIFT_CANDIDATES {
            let lifted = lift_for_blocklength(proto, blocklength, candidate_seed(seed, i))?;
            let code = Self::new(lifted.h, algorithm, max_iters)?;
            if code.k() > MAX_EXHAUSTIVE_K {
                return Ok(code);
            }
            let d = code.encoder.minimum_distance(&code.h, &code.transmitted)?;
            log::debug!("lifting candidate {i}: minimum distance {d}");
            if best.as_ref().is_none_or(|(bd, _)| d > *bd) {
                best = Some((d, code));
            }
        }
        let (d, mut code) = best.expect("at least one candidate");
        code.min_distance = Some(d);
        Ok(code)
    }

    /// Exact minimum distance, when it was computed during construction.
    pub fn min_distance(&self) -> Option<usize> {
        self.min_distance
    }

    pub fn h(&self) -> &ParityCheckMatrix {
        &self.h
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn decoder(&self) -> &BpDecoder {
        &self.decoder
    }

    /// Transmitted length `N`.
    pub fn blocklength(&self) -> usize {
        self.transmitted.len()
    }

    pub fn k(&self) -> usize {
        self.encoder.k()
    }

    /// `k / N`.
    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.blocklength() as f64
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub fn girth_at_least_6(&self) -> bool {
        self.girth_at_least_6
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub dim: DivisionAlgebraDim,
    pub llr_mode: LlrMode,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            dim: DivisionAlgebraDim::OCTONION,
            llr_mode: LlrMode::Exact,
        }
    }
}

/// Everything produced by one attempt.
#[derive(Debug, Clone)]
pub struct ReconciliationFrame {
    /// Bob's information bits.
    pub s: BitString,
    pub c: BitString,
    /// BPSK image of the transmitted part of `c`.
    pub u: Vec<f64>,
    pub m: MappedMessage,
    pub r: Vec<f64>,
    pub llr: LlrVector,
    pub c_hat: BitString,
    /// Alice's estimate of `s`.
    pub s_hat: BitString,
    pub accepted: bool,
    pub iterations: usize,
}

impl ReconciliationFrame {
    /// Accepted with `s_hat != s`: the parity checks cannot see this.
    pub fn undetected_error(&self) -> bool {
        self.accepted && self.s != self.s_hat
    }

    pub fn info_bit_errors(&self) -> usize {
        self.s
            .hamming_distance(&self.s_hat)
            .expect("same length by construction")
    }
}

/// Runs one attempt at channel SNR `snr` (per quadrature, `E[x^2] = 1/2`).
pub fn run_frame<R: Rng + ?Sized>(
    code: &InnerCode,
    cfg: &FrameConfig,
    snr: f64,
    rng: &mut R,
) -> Result<ReconciliationFrame> {
    let n = code.blocklength();
    let d = cfg.dim.get();
    if n % d != 0 {
        return Err(Error::InvalidParameter(format!(
            "blocklength {n} is not a multiple of d = {d}"
        )));
    }
    let s = BitString::random(code.k(), BitRole::Info, rng);
    let c = code.encoder.encode(&code.h, &s)?;
    let u: Vec<f64> = code
        .transmitted
        .iter()
        .map(|&col| if c[col] == 0 { 1.0 } else { -1.0 })
        .collect();

    // a zero-norm block has probability zero; resample rather than abort
    let (quad, m) = loop {
        let quad = awgn_sample_with(n, snr, rng)?;
        match map(&u, &quad.y, cfg.dim) {
            Ok(m) => break (quad, m),
            Err(Error::ZeroNormBlock { .. }) => continue,
            Err(e) => return Err(e),
        }
    };
    let obs = demap(&m, &quad.x)?;
    let llr_tx = llr_from_observation(&obs, quad.sigma_z2, cfg.llr_mode)?;
    let llr = expand_punctured(&code.h, llr_tx.values())?;
    let out = code.decoder.decode(&llr, code.max_iters)?;
    let s_hat = code.encoder.extract_info(&out.codeword)?;
    Ok(ReconciliationFrame {
        s,
        c,
        u,
        m,
        r: obs.values,
        llr,
        accepted: out.converged,
        c_hat: out.codeword,
        s_hat,
        iterations: out.iterations,
    })
}
