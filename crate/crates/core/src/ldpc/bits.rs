use std::ops::Index;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitRole {
    Info,
    Codeword,
    Syndrome,
}

/// Bits stored one per byte (values 0 or 1), tagged with what they represent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitString {
    bits: Vec<u8>,
    role: BitRole,
}

impl BitString {
    pub fn new(bits: Vec<u8>, role: BitRole) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        BitString { bits, role }
    }

    pub fn zeros(len: usize, role: BitRole) -> Self {
        BitString {
            bits: vec![0; len],
            role,
        }
    }

    pub fn random<R: rand::Rng + ?Sized>(len: usize, role: BitRole, rng: &mut R) -> Self {
        let bits = (0..len).map(|_| rng.random::<bool>() as u8).collect();
        BitString { bits, role }
    }

    pub fn role(&self) -> BitRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] ^= 1;
    }

    /// Number of positions where the two strings differ.
    pub fn hamming_distance(&self, other: &BitString) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// `(-1)^c` per bit.
    pub fn to_bpsk(&self) -> Vec<f64> {
        self.bits
            .iter()
            .map(|&b| if b == 0 { 1.0 } else { -1.0 })
            .collect()
    }
}

impl Index<usize> for BitString {
    type Output = u8;

    fn index(&self, i: usize) -> &u8 {
        &self.bits[i]
    }
}

/// Natural-log likelihood ratios `ln P(bit = 0) / P(bit = 1)`; positive means 0 is more likely.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector {
    values: Vec<f64>,
}

impl LlrVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("llr[{i}] is not finite")));
        }
        Ok(LlrVector { values })
    }

    pub fn zeros(len: usize) -> Self {
        LlrVector {
            values: vec![0.0; len],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn hard_decision(&self) -> BitString {
        BitString::new(
            self.values.iter().map(|&l| (l < 0.0) as u8).collect(),
            BitRole::Codeword,
        )
    }

    /// Noiseless LLRs of the given magnitude for a known codeword.
    pub fn from_codeword(c: &BitString, magnitude: f64) -> Self {
        LlrVector {
            values: c
                .bits()
                .iter()
                .map(|&b| if b == 0 { magnitude } else { -magnitude })
                .collect(),
        }
    }
}
