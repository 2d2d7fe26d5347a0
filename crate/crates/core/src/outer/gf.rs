//! Arithmetic in GF(2^m) through log / antilog tables.

use crate::error::{Error, Result};

/// Primitive polynomials (bit `i` = coefficient of `x^i`), indexed by `m`.
const PRIMITIVE: [u32; 25] = [
    0, 0, 0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B, 0x20009, 0x40081, 0x80027, 0x100009, 0x200005, 0x400003, 0x800021, 0x1000087,
];

pub const MAX_M: u32 = 24;

#[derive(Debug, Clone)]
pub struct Gf2m {
    m: u32,
    order: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl Gf2m {
    pub fn new(m: u32) -> Result<Self> {
        if !(2..=MAX_M).contains(&m) {
            return Err(Error::InvalidParameter(format!(
                "field degree {m} outside 2..={MAX_M}"
            )));
        }
        let size = 1u32 << m;
        let order = size - 1;
        let poly = PRIMITIVE[m as usize];
        let mut exp = vec![0u32; order as usize];
        let mut log = vec![0u32; size as usize];
        let mut x = 1u32;
        for i in 0..order {
            if i > 0 && x == 1 {
                return Err(Error::InvalidParameter(format!(
                    "polynomial {poly:#x} is not primitive"
                )));
            }
            exp[i as usize] = x;
            log[x as usize] = i;
            x <<= 1;
            if x & size != 0 {
                x ^= poly;
            }
        }
        Ok(Gf2m { m, order, exp, log })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Multiplicative order `2^m - 1`.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// `alpha^e` for any exponent.
    #[inline]
    pub fn alpha_pow(&self, e: u64) -> u32 {
        self.exp[(e % self.order as u64) as usize]
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let s = self.log[a as usize] + self.log[b as usize];
        self.exp[(if s >= self.order { s - self.order } else { s }) as usize]
    }

    #[inline]
    pub fn inv(&self, a: u32) -> u32 {
        debug_assert_ne!(a, 0);
        self.exp[((self.order - self.log[a as usize]) % self.order) as usize]
    }

    #[inline]
    pub fn log(&self, a: u32) -> u32 {
        debug_assert_ne!(a, 0);
        self.log[a as usize]
    }
}
