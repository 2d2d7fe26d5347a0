//! Closed-form key-rate quantities: reconciliation efficiency, Holevo bound
//! under collective Gaussian attacks, finite-size penalty, secret key rate
//! and the reference bounds.

use crate::channel::{Detection, SystemParams};
use crate::error::{Error, Result};

/// `beta = (R N - n_crc) / (N I_AB)`: CRC bits are discarded from the key.
pub fn beta_crc(rate: f64, n: usize, n_crc: usize, i_ab: f64) -> Result<f64> {
    check_iab(i_ab)?;
    let k = rate * n as f64;
    if n_crc as f64 >= k {
        return Err(Error::Infeasible(format!(
            "{n_crc} CRC bits leave no key out of {k} information bits"
        )));
    }
    Ok((k - n_crc as f64) / (n as f64 * i_ab))
}

/// Relative efficiency loss from CRC bits, `n_crc / (R N)`.
pub fn crc_reduction(rate: f64, n: usize, n_crc: usize) -> f64 {
    n_crc as f64 / (rate * n as f64)
}

/// `beta = R r_out / I_AB`: the outer syndrome costs `(1 - r_out)` of the key.
pub fn beta_outer(rate: f64, r_out: f64, i_ab: f64) -> Result<f64> {
    check_iab(i_ab)?;
    if !(r_out > 0.0 && r_out <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "outer rate {r_out} outside (0, 1]"
        )));
    }
    Ok(rate * r_out / i_ab)
}

fn check_iab(i_ab: f64) -> Result<()> {
    if i_ab > 0.0 && i_ab.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "I_AB must be positive, got {i_ab}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Crc { n_crc: usize },
    Outer { r_out: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyReport {
    pub beta: f64,
    pub scheme: Scheme,
}

impl EfficiencyReport {
    pub fn compute(rate: f64, n: usize, i_ab: f64, scheme: Scheme) -> Result<Self> {
        let beta = match scheme {
            Scheme::Crc { n_crc } => beta_crc(rate, n, n_crc, i_ab)?,
            Scheme::Outer { r_out } => beta_outer(rate, r_out, i_ab)?,
        };
        Ok(EfficiencyReport { beta, scheme })
    }
}

/// Who is credited with the detector's loss and electronic noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectorTrust {
    #[default]
    Trusted,
    Untrusted,
}

/// Von Neumann entropy of a thermal mode with symplectic eigenvalue `nu >= 1`.
pub fn g_entropy(nu: f64) -> f64 {
    if nu <= 1.0 + 1e-12 {
        return 0.0;
    }
    let a = (nu + 1.0) / 2.0;
    let b = (nu - 1.0) / 2.0;
    a * a.log2() - b * b.log2()
}

/// Symplectic eigenvalues entering the Holevo bound: `[l1, l2]` of the
/// Alice-Bob state and `[l3, l4]` of Alice's side conditioned on Bob's
/// measurement (the fifth, vacuum-like eigenvalue is 1 and contributes nothing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticSpectrum {
    pub ab: [f64; 2],
    pub conditional: [f64; 2],
}

/// Collective-attack spectrum for an entangling cloner on the line and a
/// detector with efficiency `eta` and electronic noise `nu_el`.
pub fn symplectic_spectrum(p: &SystemParams, trust: DetectorTrust) -> Result<SymplecticSpectrum> {
    p.validate()?;
    let v = p.v_a + 1.0;
    let (t, chi_line, chi_det) = match trust {
        DetectorTrust::Trusted => (p.transmittance(), p.line_noise(), p.detector_noise()),
        DetectorTrust::Untrusted => {
            // detector folded into the channel: loss eta, noise nu_el at its output
            let t = p.eta * p.transmittance();
            let det_floor = match p.detection {
                Detection::Homodyne => p.nu_el,
                Detection::Heterodyne => 2.0 * p.nu_el,
            };
            let xi = p.xi_bob + det_floor / t;
            let chi_het = match p.detection {
                Detection::Homodyne => 0.0,
                Detection::Heterodyne => 1.0,
            };
            (t, 1.0 / t - 1.0 + xi, chi_het)
        }
    };
    let chi_tot = chi_line + chi_det / t;
    let a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line).powi(2);
    let b = (t * (v * chi_line + 1.0)).powi(2);
    let sb = b.sqrt();
    let denom = t * (v + chi_tot);
    let (c, d) = match p.detection {
        Detection::Homodyne => (
            (a * chi_det + v * sb + t * (v + chi_line)) / denom,
            sb * (v + sb * chi_det) / denom,
        ),
        Detection::Heterodyne => (
            (a * chi_det * chi_det
                + b
                + 1.0
                + 2.0 * chi_det * (v * sb + t * (v + chi_line))
                + 2.0 * t * (v * v - 1.0))
                / (denom * denom),
            ((v + sb * chi_det) / denom).powi(2),
        ),
    };
    let pair = |s: f64, q: f64| -> Result<[f64; 2]> {
        let disc = s * s - 4.0 * q;
        if q < 0.0 || disc < -1e-9 * s * s {
            return Err(Error::NonPhysical(format!(
                "covariance has no valid symplectic spectrum (sum {s}, product {q})"
            )));
        }
        let r = disc.max(0.0).sqrt();
        Ok([
            (0.5 * (s + r)).sqrt().max(1.0),
            (0.5 * (s - r)).max(0.0).sqrt().max(1.0),
        ])
    };
    Ok(SymplecticSpectrum {
        ab: pair(a, b)?,
        conditional: pair(c, d)?,
    })
}

/// Eve's Holevo information on Bob's data, bits per pulse.
pub fn holevo_bound(p: &SystemParams, trust: DetectorTrust) -> Result<f64> {
    let s = symplectic_spectrum(p, trust)?;
    let chi = g_entropy(s.ab[0]) + g_entropy(s.ab[1])
        - g_entropy(s.conditional[0])
        - g_entropy(s.conditional[1]);
    Ok(chi.max(0.0))
}

/// Security parameters of the finite-size penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteSizeParams {
    /// Smoothing parameter.
    pub eps_smooth: f64,
    /// Privacy-amplification failure probability.
    pub eps_pa: f64,
}

impl Default for FiniteSizeParams {
    fn default() -> Self {
        FiniteSizeParams {
            eps_smooth: 1e-10,
            eps_pa: 1e-10,
        }
    }
}

/// `7 sqrt(log2(2/eps_s) / n) + (2/n) log2(1/eps_pa)`.
pub fn finite_size_penalty(n_privacy: f64, eps: FiniteSizeParams) -> Result<f64> {
    if !(n_privacy >= 1e4) {
        return Err(Error::InvalidParameter(format!(
            "privacy-amplification block {n_privacy} below 1e4"
        )));
    }
    if !(eps.eps_smooth > 0.0 && eps.eps_smooth < 1.0 && eps.eps_pa > 0.0 && eps.eps_pa < 1.0) {
        return Err(Error::InvalidParameter(
            "epsilons must lie in (0, 1)".into(),
        ));
    }
    Ok(7.0 * ((2.0 / eps.eps_smooth).log2() / n_privacy).sqrt()
        + 2.0 / n_privacy * (1.0 / eps.eps_pa).log2())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRate {
    /// Unclamped `(1 - FER)(beta I_AB - chi_BE - delta_n)`.
    pub raw: f64,
    pub below_zero: bool,
}

impl KeyRate {
    /// The rate as reported: negative values become 0.
    pub fn reported(&self) -> f64 {
        self.raw.max(0.0)
    }
}

pub fn skr(fer: f64, beta: f64, i_ab: f64, chi_be: f64, delta_n: f64) -> Result<KeyRate> {
    if !(0.0..=1.0).contains(&fer) {
        return Err(Error::InvalidParameter(format!("FER {fer} outside [0, 1]")));
    }
    let raw = (1.0 - fer) * (beta * i_ab - chi_be - delta_n);
    Ok(KeyRate {
        raw,
        below_zero: raw < 0.0,
    })
}

/// Repeaterless capacity `-log2(1 - T)`.
pub fn plob_bound(t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "PLOB bound needs 0 < T < 1 (unbounded at T = 1), got {t}"
        )));
    }
    Ok(-(-t).ln_1p() / std::f64::consts::LN_2)
}

pub fn devetak_winter(i_ab: f64, chi_be: f64) -> f64 {
    (i_ab - chi_be).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkrReport {
    pub distance_km: f64,
    pub fer: f64,
    /// Efficiency entering the key term, penalties included.
    pub beta: f64,
    pub i_ab: f64,
    pub v_a: f64,
    pub chi_be: f64,
    pub delta_n: f64,
    pub n_privacy: f64,
    pub skr: f64,
    pub skr_raw: f64,
    pub below_zero: bool,
    pub dw_bound: f64,
    pub plob_bound: f64,
}

/// Inputs describing how the reconciliation operates at every distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Inner code rate `R`.
    pub rate: f64,
    /// Efficiency the inner code is run at: `V_A` is set so `I_AB = R / beta_code`.
    pub beta_code: f64,
    /// Outer code rate; 1 disables the outer penalty.
    pub r_out: f64,
    pub fer: f64,
    pub n_privacy: f64,
    pub eps: FiniteSizeParams,
    pub trust: DetectorTrust,
}

/// Secret key rate at `params.distance_km` for a fixed operating point.
pub fn skr_at_distance(params: &SystemParams, op: &OperatingPoint) -> Result<SkrReport> {
    let target = op.rate / op.beta_code;
    let v_a = crate::channel::solve_va(params, target)?;
    let p = params.with_va(v_a);
    let snr = crate::channel::link_budget(&p)?.snr;
    let i_ab = p.detection.mutual_information(snr);
    let beta = beta_outer(op.rate, op.r_out, i_ab)?;
    let chi_be = holevo_bound(&p, op.trust)?;
    let delta_n = finite_size_penalty(op.n_privacy, op.eps)?;
    let k = skr(op.fer, beta, i_ab, chi_be, delta_n)?;
    let t = p.transmittance();
    Ok(SkrReport {
        distance_km: p.distance_km,
        fer: op.fer,
        beta,
        i_ab,
        v_a,
        chi_be,
        delta_n,
        n_privacy: op.n_privacy,
        skr: k.reported(),
        skr_raw: k.raw,
        below_zero: k.below_zero,
        dw_bound: devetak_winter(i_ab, chi_be),
        plob_bound: if t < 1.0 {
            plob_bound(t)?
        } else {
            f64::INFINITY
        },
    })
}

/// Largest distance with positive raw key rate, by bisection on `[lo, hi]` km.
pub fn distance_to_zero_skr(
    params: &SystemParams,
    op: &OperatingPoint,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let positive =
        |d: f64| -> Result<bool> { Ok(skr_at_distance(&params.at_distance(d), op)?.skr_raw > 0.0) };
    if !positive(lo)? {
        return Err(Error::Infeasible(format!("no key at {lo} km")));
    }
    if positive(hi)? {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > 1e-6 {
        let mid = 0.5 * (a + b);
        if positive(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a)
}
