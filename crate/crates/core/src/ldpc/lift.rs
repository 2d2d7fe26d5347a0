//! Quasi-cyclic lifting of a protograph.
//!
//! Base entry `(r, c)` with multiplicity `b` becomes the sum of `b` distinct
//! `Z x Z` circulant permutations. Shifts are picked greedily in a seeded
//! random order, skipping any shift that closes a length-4 cycle with the
//! circulants already placed.
//!
//! A QC lift of a protograph with few variable columns has a minimum distance
//! bounded independently of `Z`, so large lifts first expand the protograph
//! by a random permutation pre-lift and then apply a QC lift of circulant
//! size about [`PRELIFT_CIRCULANT`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ldpc::{ParityCheckMatrix, Protograph};

#[derive(Debug, Clone, Copy)]
struct PlacedEdge {
    row: usize,
    col: usize,
    shift: usize,
}

/// Outcome of a lifting: the matrix plus whether every shift avoided 4-cycles.
#[derive(Debug, Clone)]
pub struct LiftedCode {
    pub h: ParityCheckMatrix,
    pub girth_at_least_6: bool,
    /// Circulant shifts, one list per base entry in row-major order.
    pub shifts: Vec<((usize, usize), Vec<usize>)>,
}

pub fn lift_protograph(proto: &Protograph, lift_size: usize, seed: u64) -> Result<LiftedCode> {
    let z = lift_size;
    let max_mult = (0..proto.rows())
        .flat_map(|r| (0..proto.cols()).map(move |c| (r, c)))
        .map(|(r, c)| proto.get(r, c) as usize)
        .max()
        .unwrap_or(0);
    if z == 0 || z < max_mult {
        return Err(Error::Lifting(format!(
            "lift size {z} cannot hold multiplicity {max_mult}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed: Vec<PlacedEdge> = Vec::new();
    let mut row_edges: Vec<Vec<usize>> = vec![Vec::new(); proto.rows()];
    let mut col_edges: Vec<Vec<usize>> = vec![Vec::new(); proto.cols()];
    let mut girth6 = true;
    let mut candidates: Vec<usize> = (0..z).collect();
    let mut hits = vec![0u32; z];
    let mut shifts = Vec::new();

    for r in 0..proto.rows() {
        for c in 0..proto.cols() {
            let mult = proto.get(r, c) as usize;
            if mult == 0 {
                continue;
            }
            let mut block = Vec::with_capacity(mult);
            for _ in 0..mult {
                hits.iter_mut().for_each(|h| *h = 0);
                // a + d - c - b = 0 (mod z) closes check r -> var c -> check r2 -> var c2 -> check r
                for &e2 in &row_edges[r] {
                    let b = placed[e2].shift;
                    let c2 = placed[e2].col;
                    for &e3 in &col_edges[c2] {
                        if e3 == e2 {
                            continue;
                        }
                        let cs = placed[e3].shift;
                        let r2 = placed[e3].row;
                        for &e4 in &row_edges[r2] {
                            if placed[e4].col != c || e4 == e3 {
                                continue;
                            }
                            let d = placed[e4].shift;
                            hits[(b + d + 2 * z - cs) % z] += 1;
                        }
                    }
                }
                // the new circulant traversed twice: 2s = b + d with b, d parallel to it
                for &b in &block {
                    for &d in &block {
                        let t = b + d;
                        for s in 0..z {
                            if (2 * s) % z == t % z {
                                hits[s] += 1;
                            }
                        }
                    }
                }
                candidates.shuffle(&mut rng);
                let taken = |s: usize| block.contains(&s);
                // parallel shifts whose difference shares a factor with z leave
                // sub-periodic low-weight codewords
                let coprime = |s: usize| block.iter().all(|&b| gcd(s.abs_diff(b), z) == 1);
                let free = |s: &&usize| hits[**s] == 0 && !taken(**s);
                let choice = match candidates
                    .iter()
                    .filter(free)
                    .find(|&&s| coprime(s))
                    .or_else(|| candidates.iter().find(free))
                {
                    Some(&s) => s,
                    None => {
                        girth6 = false;
                        *candidates
                            .iter()
                            .filter(|&&s| !taken(s))
                            .min_by_key(|&&s| hits[s])
                            .expect("z >= multiplicity")
                    }
                };
                let id = placed.len();
                placed.push(PlacedEdge {
                    row: r,
                    col: c,
                    shift: choice,
                });
                row_edges[r].push(id);
                col_edges[c].push(id);
                block.push(choice);
            }
            shifts.push(((r, c), block));
        }
    }

    let entries = placed
        .iter()
        .flat_map(|e| (0..z).map(move |i| (e.row * z + i, e.col * z + (i + e.shift) % z)));
    let punctured: Vec<usize> = proto
        .punctured()
        .iter()
        .flat_map(|&c| (c * z)..(c * z + z))
        .collect();
    let h = ParityCheckMatrix::from_entries(proto.rows() * z, proto.cols() * z, entries)?
        .with_lift_size(z)
        .with_punctured(&punctured)?;
    if !girth6 {
        log::debug!(
            "lift size {z}: girth 6 not reached, {} four-cycles remain",
            h.four_cycle_count()
        );
    }
    Ok(LiftedCode {
        h,
        girth_at_least_6: girth6,
        shifts,
    })
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Circulant size targeted after pre-lifting.
pub const PRELIFT_CIRCULANT: usize = 20;

/// Expands every base entry of multiplicity `b` into `b` random `f x f`
/// permutations. Coinciding permutation entries add up.
pub fn prelift(proto: &Protograph, factor: usize, seed: u64) -> Result<Protograph> {
    let f = factor;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base = vec![vec![0u32; proto.cols() * f]; proto.rows() * f];
    let mut perm: Vec<usize> = (0..f).collect();
    for r in 0..proto.rows() {
        for c in 0..proto.cols() {
            for _ in 0..proto.get(r, c) {
                perm.shuffle(&mut rng);
                for (i, &j) in perm.iter().enumerate() {
                    base[r * f + i][c * f + j] += 1;
                }
            }
        }
    }
    let punctured = proto
        .punctured()
        .iter()
        .flat_map(|&c| (c * f)..(c * f + f))
        .collect();
    Protograph::new(base, punctured)
}

/// Pre-lift factor for lift size `z`: the circulant left over is the smallest
/// divisor of `z` that is at least [`PRELIFT_CIRCULANT`].
fn prelift_factor(z: usize) -> usize {
    let circulant = (PRELIFT_CIRCULANT..=z).find(|d| z % d == 0).unwrap_or(z);
    z / circulant
}

/// Lifts `proto` so that the transmitted length equals `blocklength`.
pub fn lift_for_blocklength(
    proto: &Protograph,
    blocklength: usize,
    seed: u64,
) -> Result<LiftedCode> {
    let z = proto.lift_size_for(blocklength)?;
    let f = prelift_factor(z);
    if f == 1 {
        return lift_protograph(proto, z, seed);
    }
    let expanded = prelift(proto, f, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let mut lifted = lift_protograph(&expanded, z / f, seed)?;
    lifted.h = lifted.h.with_lift_size(z);
    Ok(lifted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_lift() {
        let p = Protograph::new(vec![vec![1, 1]], vec![]).unwrap();
        let l = lift_protograph(&p, 4, 1).unwrap();
        assert_eq!((l.h.m_rows(), l.h.n()), (4, 8));
        assert_eq!(l.h.design_dimension() as f64 / l.h.n() as f64, 0.5);
        assert!(l.girth_at_least_6);
    }

    #[test]
    fn deterministic_for_seed() {
        let p = Protograph::regular(3, 6).unwrap();
        let a = lift_protograph(&p, 40, 9).unwrap();
        let b = lift_protograph(&p, 40, 9).unwrap();
        let c = lift_protograph(&p, 40, 10).unwrap();
        assert_eq!(a.h, b.h);
        assert_ne!(a.h, c.h);
    }

    #[test]
    fn reported_girth_matches_graph_search() {
        let p = Protograph::regular(3, 6).unwrap();
        let l = lift_protograph(&p, 60, 3).unwrap();
        assert!(l.girth_at_least_6);
        assert!(l.h.girth().unwrap() >= 6);
        // three parallel edges into a tiny circulant cannot avoid 4-cycles
        let small = lift_protograph(&p, 3, 3).unwrap();
        assert!(!small.girth_at_least_6);
        assert!(small.h.has_four_cycle());
    }

    #[test]
    fn prelift_keeps_degrees() {
        let p = Protograph::default_r50();
        let q = prelift(&p, 5, 2).unwrap();
        assert_eq!((q.rows(), q.cols()), (5 * p.rows(), 5 * p.cols()));
        assert_eq!(q.punctured().len(), 5 * p.punctured().len());
        for c in 0..q.cols() {
            assert_eq!(q.column_degree(c), p.column_degree(c / 5));
        }
        for r in 0..q.rows() {
            assert_eq!(q.row_degree(r), p.row_degree(r / 5));
        }
    }

    #[test]
    fn large_lifts_are_prelifted() {
        assert_eq!(prelift_factor(12), 1);
        assert_eq!(prelift_factor(20), 1);
        assert_eq!(prelift_factor(200), 10);
        assert_eq!(prelift_factor(2000), 100);
        assert_eq!(prelift_factor(42), 2);
        assert_eq!(prelift_factor(401), 1);
        let p = Protograph::default_r50();
        let l = lift_for_blocklength(&p, 20_000, 4).unwrap();
        assert_eq!(l.h.blocklength(), 20_000);
        assert_eq!(l.h.lift_size(), 400);
    }

    #[test]
    fn rejects_unrealizable_lift() {
        let p = Protograph::regular(3, 6).unwrap();
        assert!(lift_protograph(&p, 2, 0).is_err());
        assert!(lift_for_blocklength(&p, 101, 0).is_err());
    }
}
