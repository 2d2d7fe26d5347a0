//! Shortened binary BCH syndromes with optional extra dense parity checks.
//!
//! Position `i` of a length-`n` word maps to `alpha^i`. The syndrome holds the
//! odd power sums `S_1, S_3, .., S_{2t-1}` (`m` bits each, least significant
//! first) followed by `extra` parities of seeded random dense rows, which
//! catch most miscorrections.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gf::Gf2m;
use crate::error::{Error, Result};
use crate::ldpc::gf2::pack_bits;

#[derive(Debug, Clone)]
pub struct BchSyndromeCode {
    field: Gf2m,
    n: usize,
    t: usize,
    extra_rows: Vec<Vec<u64>>,
}

impl BchSyndromeCode {
    /// Corrects up to `t` errors in `n` bits; `extra` dense checks seeded by `seed`.
    pub fn new(n: usize, t: usize, extra: usize, seed: u64) -> Result<Self> {
        if n < 2 || t == 0 {
            return Err(Error::InvalidParameter(format!(
                "BCH needs n >= 2 and t >= 1, got n = {n}, t = {t}"
            )));
        }
        let m = field_degree(n);
        let field = Gf2m::new(m)?;
        if 2 * t as u64 >= field.order() as u64 {
            return Err(Error::InvalidParameter(format!(
                "t = {t} too large for GF(2^{m})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let extra_rows = (0..extra)
            .map(|_| {
                let bits: Vec<u8> = (0..n).map(|_| rng.random::<bool>() as u8).collect();
                pack_bits(&bits)
            })
            .collect();
        Ok(BchSyndromeCode {
            field,
            n,
            t,
            extra_rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn m(&self) -> u32 {
        self.field.m()
    }

    pub fn syndrome_len(&self) -> usize {
        self.field.m() as usize * self.t + self.extra_rows.len()
    }

    /// `S_j = sum over set bits i of alpha^(i j)` for `j = 1..=2t`.
    fn power_sums(&self, bits: &[u8]) -> Vec<u32> {
        let mut s = vec![0u32; 2 * self.t];
        for (i, &b) in bits.iter().enumerate() {
            if b == 1 {
                for (j, sj) in s.iter_mut().enumerate().step_by(2) {
                    *sj ^= self.field.alpha_pow(i as u64 * (j as u64 + 1));
                }
            }
        }
        for j in (1..2 * self.t).step_by(2) {
            // S_{2k} = S_k^2 in characteristic 2
            let half = s[(j + 1) / 2 - 1];
            s[j] = self.field.mul(half, half);
        }
        s
    }

    pub fn syndrome(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: bits.len(),
            });
        }
        let s = self.power_sums(bits);
        let m = self.field.m();
        let mut out = Vec::with_capacity(self.syndrome_len());
        for sj in s.iter().step_by(2) {
            out.extend((0..m).map(|b| ((sj >> b) & 1) as u8));
        }
        let packed = pack_bits(bits);
        for row in &self.extra_rows {
            let ones: u32 = row
                .iter()
                .zip(&packed)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            out.push((ones & 1) as u8);
        }
        Ok(out)
    }

    /// Finds at most `t` positions whose flip makes `bits` match `target`,
    /// verified against the full syndrome including the extra checks.
    pub fn decode(&self, bits: &[u8], target: &[u8]) -> Result<Option<Vec<usize>>> {
        if target.len() != self.syndrome_len() {
            return Err(Error::LengthMismatch {
                expected: self.syndrome_len(),
                got: target.len(),
            });
        }
        let own = self.syndrome(bits)?;
        let diff: Vec<u8> = own.iter().zip(target).map(|(a, b)| a ^ b).collect();
        if diff.iter().all(|&b| b == 0) {
            return Ok(Some(Vec::new()));
        }
        let m = self.field.m() as usize;
        let mut s = vec![0u32; 2 * self.t];
        for k in 0..self.t {
            s[2 * k] = (0..m).fold(0u32, |acc, b| acc | (u32::from(diff[k * m + b]) << b));
        }
        for j in (1..2 * self.t).step_by(2) {
            let half = s[(j + 1) / 2 - 1];
            s[j] = self.field.mul(half, half);
        }
        let lambda = self.berlekamp_massey(&s);
        let degree = lambda.len() - 1;
        if degree == 0 || degree > self.t {
            return Ok(None);
        }
        let positions = self.chien_search(&lambda);
        if positions.len() != degree {
            return Ok(None);
        }
        let mut fixed = bits.to_vec();
        for &p in &positions {
            fixed[p] ^= 1;
        }
        if self.syndrome(&fixed)? != target {
            return Ok(None);
        }
        Ok(Some(positions))
    }

    fn berlekamp_massey(&self, s: &[u32]) -> Vec<u32> {
        let f = &self.field;
        let mut c = vec![1u32];
        let mut b = vec![1u32];
        let mut l = 0usize;
        let mut shift = 1usize;
        let mut last = 1u32;
        for n in 0..s.len() {
            let mut d = s[n];
            for i in 1..=l.min(c.len() - 1) {
                d ^= f.mul(c[i], s[n - i]);
            }
            if d == 0 {
                shift += 1;
                continue;
            }
            let coef = f.mul(d, f.inv(last));
            let mut next = c.clone();
            if next.len() < b.len() + shift {
                next.resize(b.len() + shift, 0);
            }
            for (i, &bi) in b.iter().enumerate() {
                next[i + shift] ^= f.mul(coef, bi);
            }
            if 2 * l <= n {
                l = n + 1 - l;
                b = c;
                last = d;
                shift = 1;
            } else {
                shift += 1;
            }
            c = next;
        }
        while c.len() > 1 && *c.last().expect("non-empty") == 0 {
            c.pop();
        }
        c
    }

    /// Positions `i < n` with `lambda(alpha^-i) = 0`.
    fn chien_search(&self, lambda: &[u32]) -> Vec<usize> {
        let f = &self.field;
        let order = f.order() as u64;
        let mut terms: Vec<u32> = lambda.to_vec();
        let steps: Vec<u32> = (0..lambda.len())
            .map(|k| f.alpha_pow((order - k as u64 % order) % order))
            .collect();
        let mut found = Vec::new();
        for i in 0..self.n {
            if terms.iter().fold(0u32, |acc, &t| acc ^ t) == 0 {
                found.push(i);
                if found.len() == lambda.len() - 1 {
                    break;
                }
            }
            for (t, &st) in terms.iter_mut().zip(&steps).skip(1) {
                *t = f.mul(*t, st);
            }
        }
        found
    }

    /// Dense binary parity-check rows, one per syndrome bit.
    pub fn dense_rows(&self) -> Vec<Vec<u8>> {
        let m = self.field.m() as usize;
        let mut rows = vec![vec![0u8; self.n]; self.syndrome_len()];
        for i in 0..self.n {
            for k in 0..self.t {
                let v = self.field.alpha_pow(i as u64 * (2 * k as u64 + 1));
                for b in 0..m {
                    rows[k * m + b][i] = ((v >> b) & 1) as u8;
                }
            }
        }
        for (r, packed) in self.extra_rows.iter().enumerate() {
            for i in 0..self.n {
                rows[self.t * m + r][i] = ((packed[i / 64] >> (i % 64)) & 1) as u8;
            }
        }
        rows
    }
}

/// Smallest `m` with `2^m - 1 >= n`.
pub fn field_degree(n: usize) -> u32 {
    let mut m = 2;
    while ((1u64 << m) - 1) < n as u64 {
        m += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::index::sample;

    #[test]
    fn field_degree_examples() {
        assert_eq!(field_degree(7), 3);
        assert_eq!(field_degree(8), 4);
        assert_eq!(field_degree(100_000), 17);
        assert_eq!(field_degree(1_000_000), 20);
    }

    #[test]
    fn corrects_up_to_t_errors() {
        let code = BchSyndromeCode::new(1000, 4, 6, 3).unwrap();
        assert_eq!(code.syndrome_len(), 10 * 4 + 6);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let w: Vec<u8> = (0..1000).map(|_| rng.random::<bool>() as u8).collect();
            let p = code.syndrome(&w).unwrap();
            let t = trial % 5;
            let mut noisy = w.clone();
            for i in sample(&mut rng, 1000, t) {
                noisy[i] ^= 1;
            }
            let flips = code.decode(&noisy, &p).unwrap().expect("within radius");
            assert_eq!(flips.len(), t);
            for i in flips {
                noisy[i] ^= 1;
            }
            assert_eq!(noisy, w);
        }
    }

    #[test]
    fn syndrome_is_the_dense_product() {
        let code = BchSyndromeCode::new(60, 3, 4, 1).unwrap();
        let rows = code.dense_rows();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let w: Vec<u8> = (0..60).map(|_| rng.random::<bool>() as u8).collect();
            let dense: Vec<u8> = rows
                .iter()
                .map(|r| r.iter().zip(&w).fold(0, |acc, (a, b)| acc ^ (a & b)))
                .collect();
            assert_eq!(code.syndrome(&w).unwrap(), dense);
        }
    }

    #[test]
    fn reports_failure_beyond_radius_rather_than_guessing() {
        let code = BchSyndromeCode::new(500, 2, 8, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = vec![0u8; 500];
        let p = code.syndrome(&w).unwrap();
        let mut wrong_accepts = 0;
        for _ in 0..200 {
            let mut noisy = w.clone();
            for i in sample(&mut rng, 500, 6) {
                noisy[i] ^= 1;
            }
            if let Some(flips) = code.decode(&noisy, &p).unwrap() {
                for i in flips {
                    noisy[i] ^= 1;
                }
                assert_eq!(code.syndrome(&noisy).unwrap(), p);
                wrong_accepts += usize::from(noisy != w);
            }
        }
        // a miscorrection must also fool the eight extra checks
        assert!(wrong_accepts <= 5, "{wrong_accepts}");
    }
}
