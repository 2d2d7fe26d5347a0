mod bits;
mod decoder;
mod encoder;
pub mod gf2;
mod lift;
mod matrix;
mod protograph;

pub use bits::{BitRole, BitString, LlrVector};
pub use decoder::{default_max_iters, BpAlgorithm, BpDecoder, DecodeOutcome, LLR_LIMIT};
pub use encoder::{Encoder, MAX_EXHAUSTIVE_K};
pub use lift::{lift_for_blocklength, lift_protograph, LiftedCode};
pub use matrix::ParityCheckMatrix;
pub use protograph::{Protograph, DEFAULT_R50_BASE};

/// Expands LLRs of the transmitted positions into a full-length vector with
/// zeros at punctured columns.
pub fn expand_punctured(h: &ParityCheckMatrix, transmitted: &[f64]) -> crate::Result<LlrVector> {
    let cols = h.transmitted_columns();
    if cols.len() != transmitted.len() {
        return Err(crate::Error::LengthMismatch {
            expected: cols.len(),
            got: transmitted.len(),
        });
    }
    let mut full = vec![0.0; h.n()];
    for (&c, &l) in cols.iter().zip(transmitted) {
        full[c] = l;
    }
    LlrVector::new(full)
}
