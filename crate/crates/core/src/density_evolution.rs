//! Gaussian-approximation density evolution for protograph ensembles on the
//! binary-input AWGN channel.
//!
//! Every message is modelled as a consistent Gaussian `N(m, 2m)`, so one mean
//! per protograph edge class is tracked. Check-node updates use
//! `phi(m) = 1 - E[tanh(u/2)]`, evaluated by quadrature and tabulated once.

use std::sync::OnceLock;

use crate::channel::mutual_information;
use crate::error::{Error, Result};
use crate::ldpc::Protograph;

/// Edge means are clamped here.
pub const MEAN_CAP: f64 = 400.0;
/// A variable type counts as decoded once its a-posteriori mean passes this.
pub const DECODED_MEAN: f64 = 100.0;
pub const MAX_DE_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    /// Linear SNR of the BIAWGN channel (unit-energy BPSK, noise variance 1/snr).
    pub snr_threshold: f64,
    pub beta_threshold: f64,
    /// DE iterations used at the threshold point.
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeOutcome {
    pub decoded: bool,
    pub iterations: usize,
}

struct PhiTable {
    ln_x: Vec<f64>,
    ln_phi: Vec<f64>,
}

const TABLE_LO: f64 = 1e-8;
const TABLE_POINTS: usize = 4000;

fn phi_table() -> &'static PhiTable {
    static TABLE: OnceLock<PhiTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let (a, b) = (TABLE_LO.ln(), MEAN_CAP.ln());
        let ln_x: Vec<f64> = (0..TABLE_POINTS)
            .map(|i| a + (b - a) * i as f64 / (TABLE_POINTS - 1) as f64)
            .collect();
        let ln_phi = ln_x
            .iter()
            .map(|&lx| phi_quadrature(lx.exp()).ln())
            .collect();
        PhiTable { ln_x, ln_phi }
    })
}

/// `1 - E[tanh(u/2)]` for `u ~ N(m, 2m)` by composite Simpson quadrature.
pub fn phi_quadrature(m: f64) -> f64 {
    if m <= 0.0 {
        return 1.0;
    }
    let sd = (2.0 * m).sqrt();
    let (lo, hi) = (m - 14.0 * sd, m + 14.0 * sd);
    let n = 4000;
    let h = (hi - lo) / n as f64;
    let norm = 1.0 / (4.0 * std::f64::consts::PI * m).sqrt();
    // 1 - tanh(u/2) = 2 / (1 + e^u), written to stay accurate for large u
    let f = |u: f64| {
        let g = if u > 0.0 {
            let e = (-u).exp();
            2.0 * e / (1.0 + e)
        } else {
            2.0 / (1.0 + u.exp())
        };
        g * norm * (-(u - m) * (u - m) / (4.0 * m)).exp()
    };
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Tabulated `phi`, monotone decreasing from 1 at 0.
pub fn phi(m: f64) -> f64 {
    if m <= 0.0 {
        return 1.0;
    }
    if m < TABLE_LO {
        return 1.0 - 0.5 * m;
    }
    let t = phi_table();
    if m >= MEAN_CAP {
        return t.ln_phi[TABLE_POINTS - 1].exp();
    }
    let lx = m.ln();
    let step = (t.ln_x[TABLE_POINTS - 1] - t.ln_x[0]) / (TABLE_POINTS - 1) as f64;
    let pos = (lx - t.ln_x[0]) / step;
    let i = (pos.floor() as usize).min(TABLE_POINTS - 2);
    let frac = pos - i as f64;
    (t.ln_phi[i] * (1.0 - frac) + t.ln_phi[i + 1] * frac).exp()
}

/// Inverse of [`phi`]; values at or above 1 map to 0, tiny values saturate at [`MEAN_CAP`].
pub fn phi_inverse(y: f64) -> f64 {
    if y >= 1.0 {
        return 0.0;
    }
    let t = phi_table();
    if y <= 0.0 || y.ln() <= t.ln_phi[TABLE_POINTS - 1] {
        return MEAN_CAP;
    }
    if y > phi(TABLE_LO) {
        return 2.0 * (1.0 - y);
    }
    let ly = y.ln();
    // ln_phi is decreasing
    let i = t.ln_phi.partition_point(|&v| v > ly);
    let i = i.clamp(1, TABLE_POINTS - 1);
    let (y0, y1) = (t.ln_phi[i - 1], t.ln_phi[i]);
    let frac = if y0 == y1 { 0.0 } else { (ly - y0) / (y1 - y0) };
    (t.ln_x[i - 1] + frac * (t.ln_x[i] - t.ln_x[i - 1])).exp()
}

/// One protograph edge class: check row, variable column, multiplicity.
#[derive(Debug, Clone, Copy)]
struct EdgeClass {
    row: usize,
    col: usize,
    mult: i32,
}

/// Runs Gaussian-approximation DE at a fixed channel SNR.
pub fn evolve(proto: &Protograph, snr: f64, max_iters: usize) -> DeOutcome {
    let mut edges = Vec::new();
    for r in 0..proto.rows() {
        for c in 0..proto.cols() {
            let b = proto.get(r, c);
            if b > 0 {
                edges.push(EdgeClass {
                    row: r,
                    col: c,
                    mult: b as i32,
                });
            }
        }
    }
    let mut row_edges: Vec<Vec<usize>> = vec![Vec::new(); proto.rows()];
    for (e, ec) in edges.iter().enumerate() {
        row_edges[ec.row].push(e);
    }
    let channel: Vec<f64> = (0..proto.cols())
        .map(|c| {
            if proto.is_punctured(c) {
                0.0
            } else {
                2.0 * snr
            }
        })
        .collect();

    let mut check_to_var = vec![0.0f64; edges.len()];
    let mut var_to_check = vec![0.0f64; edges.len()];
    let mut var_total = vec![0.0f64; proto.cols()];
    let mut one_minus_phi = vec![0.0f64; edges.len()];

    for it in 1..=max_iters {
        var_total.copy_from_slice(&channel);
        for (e, ec) in edges.iter().enumerate() {
            var_total[ec.col] += ec.mult as f64 * check_to_var[e];
        }
        for (e, ec) in edges.iter().enumerate() {
            var_to_check[e] = (var_total[ec.col] - check_to_var[e]).min(MEAN_CAP);
            one_minus_phi[e] = 1.0 - phi(var_to_check[e]);
        }

        let mut max_change = 0.0f64;
        for list in &row_edges {
            for &e in list {
                let mut prod = 1.0;
                for &f in list {
                    let k = if f == e {
                        edges[f].mult - 1
                    } else {
                        edges[f].mult
                    };
                    prod *= one_minus_phi[f].powi(k);
                }
                let updated = phi_inverse(1.0 - prod).min(MEAN_CAP);
                max_change = max_change.max((updated - check_to_var[e]).abs());
                check_to_var[e] = updated;
            }
        }

        var_total.copy_from_slice(&channel);
        for (e, ec) in edges.iter().enumerate() {
            var_total[ec.col] += ec.mult as f64 * check_to_var[e];
        }
        if var_total.iter().all(|&m| m >= DECODED_MEAN) {
            return DeOutcome {
                decoded: true,
                iterations: it,
            };
        }
        if max_change < 1e-12 {
            return DeOutcome {
                decoded: false,
                iterations: it,
            };
        }
    }
    DeOutcome {
        decoded: false,
        iterations: max_iters,
    }
}

/// Bisects the BIAWGN SNR at which DE first decodes. `tol` is the final
/// bracket width in linear SNR.
pub fn de_threshold(proto: &Protograph, tol: f64) -> Result<ThresholdResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be > 0, got {tol}"
        )));
    }
    let rate = proto.design_rate();
    let shannon = 2f64.powf(2.0 * rate) - 1.0;

    let mut lo = shannon * 0.5;
    let mut guard = 0;
    while evolve(proto, lo, MAX_DE_ITERATIONS).decoded {
        lo *= 0.5;
        guard += 1;
        if guard > 40 {
            return Err(Error::NoThreshold("decodes at vanishing SNR".into()));
        }
    }
    let mut hi = shannon.max(lo * 2.0);
    guard = 0;
    while !evolve(proto, hi, MAX_DE_ITERATIONS).decoded {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 40 {
            return Err(Error::NoThreshold("never decodes".into()));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if evolve(proto, mid, MAX_DE_ITERATIONS).decoded {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let at = evolve(proto, hi, MAX_DE_ITERATIONS);
    Ok(ThresholdResult {
        snr_threshold: hi,
        beta_threshold: rate / mutual_information(hi),
        iterations: at.iterations,
        converged: at.decoded,
    })
}

/// Eb/N0 in dB for a BIAWGN SNR (unit-energy BPSK, noise variance 1/snr) at rate `rate`.
pub fn snr_to_ebn0_db(snr: f64, rate: f64) -> f64 {
    10.0 * (snr / (2.0 * rate)).log10()
}
