//! Gaussian-approximation thresholds against Monte Carlo density evolution:
//! populations of true BP messages per protograph edge, updated with the
//! exact tanh rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sbrecon::density_evolution::{de_threshold, evolve, snr_to_ebn0_db};
use sbrecon::ldpc::Protograph;

struct Population {
    proto: Protograph,
    /// `(row, col)` per protograph edge, parallel edges repeated.
    edges: Vec<(usize, usize)>,
    check_others: Vec<Vec<usize>>,
    var_others: Vec<Vec<usize>>,
    var_edges: Vec<Vec<usize>>,
}

impl Population {
    fn new(proto: Protograph) -> Self {
        let mut edges = Vec::new();
        for r in 0..proto.rows() {
            for c in 0..proto.cols() {
                for _ in 0..proto.get(r, c) {
                    edges.push((r, c));
                }
            }
        }
        let others = |e: usize, same: &dyn Fn(usize) -> bool| -> Vec<usize> {
            (0..edges.len()).filter(|&f| f != e && same(f)).collect()
        };
        let check_others = (0..edges.len())
            .map(|e| others(e, &|f| edges[f].0 == edges[e].0))
            .collect();
        let var_others = (0..edges.len())
            .map(|e| others(e, &|f| edges[f].1 == edges[e].1))
            .collect();
        let var_edges = (0..proto.cols())
            .map(|c| (0..edges.len()).filter(|&f| edges[f].1 == c).collect())
            .collect();
        Population {
            proto,
            edges,
            check_others,
            var_others,
            var_edges,
        }
    }

    /// Bit error probability of the transmitted posteriors after at most
    /// `iters` iterations, stopping early once it reaches zero.
    fn run(&self, snr: f64, size: usize, iters: usize, seed: u64) -> (f64, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // all-zero codeword: LLR ~ N(2 snr, 4 snr)
        let channel = Normal::new(2.0 * snr, (4.0 * snr).sqrt()).unwrap();
        let sample = |c: usize, rng: &mut ChaCha8Rng| {
            if self.proto.is_punctured(c) {
                0.0
            } else {
                channel.sample(rng)
            }
        };
        let mut v2c: Vec<Vec<f64>> = self
            .edges
            .iter()
            .map(|&(_, c)| (0..size).map(|_| sample(c, &mut rng)).collect())
            .collect();
        let mut c2v = vec![vec![0.0; size]; self.edges.len()];
        let mut pe = 1.0;
        for it in 1..=iters {
            for e in 0..self.edges.len() {
                for i in 0..size {
                    let p: f64 = self.check_others[e]
                        .iter()
                        .map(|&f| (0.5 * v2c[f][rng.random_range(0..size)]).tanh())
                        .product();
                    c2v[e][i] = 2.0 * p.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh();
                }
            }
            for e in 0..self.edges.len() {
                let c = self.edges[e].1;
                for i in 0..size {
                    let s = sample(c, &mut rng)
                        + self.var_others[e]
                            .iter()
                            .map(|&f| c2v[f][rng.random_range(0..size)])
                            .sum::<f64>();
                    v2c[e][i] = s.clamp(-60.0, 60.0);
                }
            }
            let (mut errors, mut total) = (0usize, 0usize);
            for c in (0..self.proto.cols()).filter(|&c| !self.proto.is_punctured(c)) {
                for _ in 0..size / 10 {
                    let s = sample(c, &mut rng)
                        + self.var_edges[c]
                            .iter()
                            .map(|&f| c2v[f][rng.random_range(0..size)])
                            .sum::<f64>();
                    errors += (s < 0.0) as usize;
                    total += 1;
                }
            }
            pe = errors as f64 / total as f64;
            if pe == 0.0 {
                return (0.0, it);
            }
        }
        (pe, iters)
    }
}

#[test]
fn shipped_threshold_brackets_monte_carlo_density_evolution() {
    let proto = Protograph::default_r50();
    let t = de_threshold(&proto, 1e-6).unwrap();
    assert!(t.converged);
    let pop = Population::new(proto);
    let (pe_above, it_above) = pop.run(1.05 * t.snr_threshold, 2000, 400, 1);
    println!("5% above: pe {pe_above} after {it_above} iterations");
    assert_eq!(pe_above, 0.0);
    let (pe_below, _) = pop.run(0.95 * t.snr_threshold, 2000, 400, 2);
    println!("5% below: pe {pe_below}");
    assert!(pe_below > 0.1);
}

#[test]
fn regular_three_six_matches_monte_carlo() {
    let proto = Protograph::regular(3, 6).unwrap();
    let t = de_threshold(&proto, 1e-6).unwrap();
    // exact BP threshold of the (3,6) ensemble is 1.10 dB, the Gaussian
    // approximation's 1.16 dB
    let db = snr_to_ebn0_db(t.snr_threshold, 0.5);
    assert!((db - 1.163).abs() < 0.05, "{db}");
    let pop = Population::new(proto);
    assert_eq!(pop.run(1.05 * t.snr_threshold, 5000, 300, 3).0, 0.0);
    assert!(pop.run(0.9 * t.snr_threshold, 5000, 300, 4).0 > 0.05);
}

#[test]
fn evolution_decodes_only_above_threshold() {
    let proto = Protograph::default_r50();
    let t = de_threshold(&proto, 1e-6).unwrap();
    assert!(evolve(&proto, 1.01 * t.snr_threshold, 10_000).decoded);
    assert!(!evolve(&proto, 0.99 * t.snr_threshold, 10_000).decoded);
}
