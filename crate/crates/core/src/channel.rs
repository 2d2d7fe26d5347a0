//! Gaussian-modulated CV-QKD link modelled as an AWGN channel.
//!
//! Everything is expressed in shot-noise units (SNU). Quadratures are
//! rescaled so that Alice's values have `E[x^2] = 1/2`; Bob's values are
//! `y = x + z` with `z ~ N(0, sigma_z2 / 2)` and `sigma_z2 = 1 / snr`. Only the
//! dimensionless `snr` and `sigma_z2` cross module boundaries.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Detection {
    #[default]
    Homodyne,
    Heterodyne,
}

impl Detection {
    /// Mutual information in bits per pulse for a per-quadrature SNR.
    pub fn mutual_information(self, snr: f64) -> f64 {
        match self {
            Detection::Homodyne => mutual_information(snr),
            Detection::Heterodyne => (1.0 + snr).log2(),
        }
    }

    fn snr_from_information(self, iab: f64) -> f64 {
        match self {
            Detection::Homodyne => 2f64.powf(2.0 * iab) - 1.0,
            Detection::Heterodyne => 2f64.powf(iab) - 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Detector quantum efficiency.
    pub eta: f64,
    /// Excess noise referred to the channel input, SNU.
    pub xi_bob: f64,
    /// Electronic noise, SNU.
    pub nu_el: f64,
    pub alpha_db_km: f64,
    pub distance_km: f64,
    /// Modulation variance, SNU.
    pub v_a: f64,
    pub detection: Detection,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            eta: 0.6,
            xi_bob: 0.001,
            nu_el: 0.01,
            alpha_db_km: 0.2,
            distance_km: 0.0,
            v_a: 1.0,
            detection: Detection::Homodyne,
        }
    }
}

impl SystemParams {
    pub fn at_distance(self, distance_km: f64) -> Self {
        SystemParams {
            distance_km,
            ..self
        }
    }

    pub fn with_va(self, v_a: f64) -> Self {
        SystemParams { v_a, ..self }
    }

    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.alpha_db_km * self.distance_km / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::NonPhysical(m));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta = {} outside (0, 1]", self.eta));
        }
        if !(self.xi_bob >= 0.0 && self.nu_el >= 0.0) {
            return bad("noise terms must be non-negative".into());
        }
        if !(self.alpha_db_km >= 0.0 && self.distance_km >= 0.0) {
            return bad("attenuation and distance must be non-negative".into());
        }
        if !(self.v_a >= 0.0) || !self.v_a.is_finite() {
            return bad(format!("modulation variance {} invalid", self.v_a));
        }
        let t = self.transmittance();
        if !(t > 0.0 && t <= 1.0) {
            return bad(format!("transmittance {t} outside (0, 1]"));
        }
        Ok(())
    }

    /// Detector-referred noise `chi_det` in SNU (trusted detector).
    pub fn detector_noise(&self) -> f64 {
        match self.detection {
            Detection::Homodyne => (1.0 - self.eta) / self.eta + self.nu_el / self.eta,
            Detection::Heterodyne => (2.0 - self.eta + 2.0 * self.nu_el) / self.eta,
        }
    }

    /// Noise added by the line referred to the channel input: `1/T - 1 + xi`.
    pub fn line_noise(&self) -> f64 {
        1.0 / self.transmittance() - 1.0 + self.xi_bob
    }

    fn noise_floor(&self) -> f64 {
        let t = self.transmittance();
        match self.detection {
            Detection::Homodyne => 1.0 + self.nu_el + self.eta * t * self.xi_bob,
            Detection::Heterodyne => 2.0 + 2.0 * self.nu_el + self.eta * t * self.xi_bob,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub transmittance: f64,
    /// Per-quadrature signal-to-noise ratio at Bob.
    pub snr: f64,
    /// Normalized channel noise variance over both quadratures, `1/snr`.
    pub sigma_z2: f64,
}

/// `snr = eta T V_A / (1 + nu_el + eta T xi)` for homodyne detection.
pub fn link_budget(p: &SystemParams) -> Result<LinkBudget> {
    p.validate()?;
    let t = p.transmittance();
    let snr = p.eta * t * p.v_a / p.noise_floor();
    Ok(LinkBudget {
        transmittance: t,
        snr,
        sigma_z2: if snr > 0.0 { 1.0 / snr } else { f64::INFINITY },
    })
}

/// Gaussian-input AWGN capacity for one quadrature, bits per use.
pub fn mutual_information(snr: f64) -> f64 {
    0.5 * (1.0 + snr).log2()
}

/// Inverse of [`mutual_information`].
pub fn snr_for_information(iab: f64) -> f64 {
    Detection::Homodyne.snr_from_information(iab)
}

/// Finds `V_A` so that the link's mutual information equals `target_iab`.
/// Ignores `p.v_a`.
pub fn solve_va(p: &SystemParams, target_iab: f64) -> Result<f64> {
    if !(target_iab > 0.0) || !target_iab.is_finite() {
        return Err(Error::Unreachable(format!(
            "target I_AB {target_iab} must be positive"
        )));
    }
    let base = p.with_va(0.0);
    base.validate()?;
    let info = |va: f64| -> f64 {
        let snr = p.eta * base.transmittance() * va / base.noise_floor();
        p.detection.mutual_information(snr)
    };
    let mut hi = 1.0;
    while info(hi) < target_iab {
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::Unreachable(format!(
                "I_AB = {target_iab} needs V_A beyond 1e15 SNU"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if info(mid) < target_iab {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Alice's and Bob's quadrature strings for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureBlock {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma_z2: f64,
}

impl QuadratureBlock {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Samples `x ~ N(0, 1/2)` and `y = x + z` with `z ~ N(0, 1/(2 snr))`.
pub fn awgn_sample(n: usize, snr: f64, seed: u64) -> Result<QuadratureBlock> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    awgn_sample_with(n, snr, &mut rng)
}

pub fn awgn_sample_with<R: rand::Rng + ?Sized>(
    n: usize,
    snr: f64,
    rng: &mut R,
) -> Result<QuadratureBlock> {
    if n == 0 {
        return Err(Error::InvalidParameter("block length must be >= 1".into()));
    }
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "snr must be > 0, got {snr}"
        )));
    }
    let sigma_z2 = 1.0 / snr;
    let signal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid sd");
    let noise = Normal::new(0.0, (sigma_z2 / 2.0).sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = signal.sample(rng);
        let zi: f64 = noise.sample(rng);
        x.push(xi);
        y.push(xi + zi);
    }
    Ok(QuadratureBlock { x, y, sigma_z2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_noiseless_line() {
        let p = SystemParams {
            eta: 1.0,
            xi_bob: 0.0,
            nu_el: 0.0,
            distance_km: 0.0,
            v_a: 2.0,
            ..Default::default()
        };
        let lb = link_budget(&p).unwrap();
        assert!((lb.snr - 2.0).abs() < 1e-15);
        assert!((lb.sigma_z2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ten_db_loss_at_fifty_km() {
        let p = SystemParams::default().at_distance(50.0);
        assert!((p.transmittance() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn mutual_information_values() {
        assert!((mutual_information(1.0) - 0.5).abs() < 1e-15);
        assert!((mutual_information(3.0) - 1.0).abs() < 1e-15);
        let iab = 0.02 / 0.95;
        let snr = snr_for_information(iab);
        assert!((snr - 0.0296).abs() < 1e-4, "{snr}");
        // bisection cross-check of the closed form
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mutual_information(mid) < iab {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((snr - hi).abs() < 1e-12);
        assert!((mutual_information(snr) - iab).abs() < 1e-15);
    }

    #[test]
    fn solve_va_lossless_half_bit() {
        let p = SystemParams {
            eta: 1.0,
            xi_bob: 0.0,
            nu_el: 0.0,
            ..Default::default()
        };
        let va = solve_va(&p, 0.5).unwrap();
        assert!((va - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_physical_rejected() {
        let p = SystemParams {
            eta: 0.0,
            ..Default::default()
        };
        assert!(link_budget(&p).is_err());
        let p = SystemParams {
            nu_el: -0.1,
            ..Default::default()
        };
        assert!(link_budget(&p).is_err());
        assert!(solve_va(&SystemParams::default(), 0.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_near_noiseless_at_high_snr() {
        let a = awgn_sample(64, 1e12, 7).unwrap();
        let b = awgn_sample(64, 1e12, 7).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.x.iter().zip(&a.y) {
            assert!((x - y).abs() < 1e-4);
        }
        assert!(awgn_sample(0, 1.0, 1).is_err());
        assert!(awgn_sample(4, 0.0, 1).is_err());
    }

    #[test]
    fn heterodyne_counts_two_quadratures() {
        assert!((Detection::Heterodyne.mutual_information(1.0) - 1.0).abs() < 1e-15);
        let p = SystemParams {
            detection: Detection::Heterodyne,
            ..SystemParams::default().at_distance(20.0)
        };
        let va = solve_va(&p, 0.1).unwrap();
        let lb = link_budget(&p.with_va(va)).unwrap();
        assert!((Detection::Heterodyne.mutual_information(lb.snr) - 0.1).abs() < 1e-10);
    }
}
