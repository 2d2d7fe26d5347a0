//! Experiment configuration: a flat TOML file whose keys mirror the CLI flags.
//!
//! ```toml
//! experiment = "fer-sweep"
//! blocklengths = [1000, 10000]
//! beta_grid = [0.9, 0.95, 0.99]
//! min_frame_errors = 100
//! master_seed = 7
//! ```
//!
//! Every key is optional; missing keys take the defaults of
//! [`ExperimentConfig::default`].

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::{Detection, SystemParams};
use crate::error::{Error, Result};
use crate::multidim::{DivisionAlgebraDim, LlrMode};
use crate::outer::OuterFamily;
use crate::security::DetectorTrust;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CrcPenalty,
    #[default]
    FerSweep,
    SkrDistance,
    Threshold,
    Reconcile,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::CrcPenalty => "crc-penalty",
            Experiment::FerSweep => "fer-sweep",
            Experiment::SkrDistance => "skr-distance",
            Experiment::Threshold => "threshold",
            Experiment::Reconcile => "reconcile",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LlrChoice {
    #[default]
    Exact,
    GaussianApprox,
}

impl From<LlrChoice> for LlrMode {
    fn from(c: LlrChoice) -> Self {
        match c {
            LlrChoice::Exact => LlrMode::Exact,
            LlrChoice::GaussianApprox => LlrMode::GaussianApprox,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OuterChoice {
    #[default]
    Bch,
    Ldpc,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Base matrix file; the shipped R = 1/50 matrix when absent.
    pub base_matrix: Option<PathBuf>,
    /// Transmitted blocklengths `N`; see [`ExperimentConfig::blocklengths`].
    pub blocklengths: Option<Vec<usize>>,
    /// Code rate used by the analytic CRC table.
    pub rate: f64,

    pub eta: f64,
    pub xi_bob: f64,
    pub nu_el: f64,
    pub alpha_db_km: f64,
    pub heterodyne: bool,
    pub untrusted_detector: bool,

    pub dim: usize,
    pub llr: LlrChoice,
    pub min_sum_scale: Option<f64>,
    pub max_iters: Option<usize>,
    /// Largest CRC length in the penalty table; rows run from 1.
    pub n_crc: usize,
    pub r_out: f64,
    pub n_out: usize,
    pub outer: OuterChoice,
    pub outer_column_weight: usize,
    pub n_privacy: f64,
    pub eps_smooth: f64,
    pub eps_pa: f64,

    pub beta_grid: Vec<f64>,
    pub distance_grid: Vec<f64>,
    /// FER table written by a `fer-sweep` run, read by `skr-distance`.
    pub fer_table: Option<PathBuf>,
    /// FER used by `skr-distance` when no table is given.
    pub fer: Option<f64>,

    pub min_frame_errors: u64,
    pub max_frames: u64,
    /// Wall-clock budget per sweep point, seconds.
    pub timeout_s: Option<f64>,
    pub de_tolerance: f64,
    /// Outer batches for `reconcile`.
    pub batches: usize,
    /// Replaces the operating SNR in `reconcile`, e.g. `1e9` for a clean channel.
    pub snr_override: Option<f64>,

    pub master_seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sys = SystemParams::default();
        ExperimentConfig {
            experiment: Experiment::FerSweep,
            base_matrix: None,
            blocklengths: None,
            rate: 1.0 / 50.0,
            eta: sys.eta,
            xi_bob: sys.xi_bob,
            nu_el: sys.nu_el,
            alpha_db_km: sys.alpha_db_km,
            heterodyne: false,
            untrusted_detector: false,
            dim: 8,
            llr: LlrChoice::Exact,
            min_sum_scale: None,
            max_iters: None,
            n_crc: 32,
            r_out: crate::outer::DEFAULT_R_OUT,
            n_out: crate::outer::DEFAULT_N_OUT,
            outer: OuterChoice::Bch,
            outer_column_weight: 3,
            n_privacy: 1e10,
            eps_smooth: 1e-10,
            eps_pa: 1e-10,
            beta_grid: vec![0.9, 0.92, 0.94, 0.96, 0.98, 0.99, 1.0],
            distance_grid: (1..=16).map(|i| 10.0 * i as f64).collect(),
            fer_table: None,
            fer: None,
            min_frame_errors: 100,
            max_frames: 1_000_000,
            timeout_s: None,
            de_tolerance: 1e-6,
            batches: 1,
            snr_override: None,
            master_seed: 1,
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        fn sorted<T: PartialOrd>(v: &[T]) -> bool {
            v.windows(2).all(|w| w[0] < w[1])
        }
        if self.min_frame_errors < 1 {
            return bad("min_frame_errors must be at least 1".into());
        }
        if self.max_frames < 1 {
            return bad("max_frames must be at least 1".into());
        }
        let needs_betas = matches!(
            self.experiment,
            Experiment::FerSweep | Experiment::SkrDistance | Experiment::Reconcile
        );
        if needs_betas && (self.beta_grid.is_empty() || !sorted(&self.beta_grid)) {
            return bad("beta_grid must be non-empty and strictly increasing".into());
        }
        if self.beta_grid.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return bad("beta_grid values must be positive".into());
        }
        if self.experiment == Experiment::SkrDistance
            && (self.distance_grid.is_empty() || !sorted(&self.distance_grid))
        {
            return bad("distance_grid must be non-empty and strictly increasing".into());
        }
        if self.experiment != Experiment::Threshold
            && (self.blocklengths().is_empty() || !sorted(&self.blocklengths()))
        {
            return bad("blocklengths must be non-empty and strictly increasing".into());
        }
        if DivisionAlgebraDim::new(self.dim).is_err() {
            return bad(format!("dim must be 1, 2, 4 or 8, got {}", self.dim));
        }
        if !(self.r_out > 0.0 && self.r_out <= 1.0) {
            return bad(format!("r_out must lie in (0, 1], got {}", self.r_out));
        }
        if let Some(f) = self.fer {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("fer must lie in [0, 1], got {f}"));
            }
        }
        if self.experiment == Experiment::SkrDistance
            && self.fer.is_none()
            && self.fer_table.is_none()
        {
            return bad("skr-distance needs either fer or fer_table".into());
        }
        if !(self.de_tolerance > 0.0) {
            return bad("de_tolerance must be positive".into());
        }
        Ok(())
    }

    /// Configured blocklengths, or the experiment's default list: the
    /// analytic CRC table also covers `10^6`, simulations stop at `10^5`.
    pub fn blocklengths(&self) -> Vec<usize> {
        match (&self.blocklengths, self.experiment) {
            (Some(v), _) => v.clone(),
            (None, Experiment::CrcPenalty) => {
                vec![1000, 2000, 5000, 10_000, 100_000, 1_000_000]
            }
            (None, _) => vec![1000, 2000, 5000, 10_000, 100_000],
        }
    }

    pub fn system_params(&self) -> SystemParams {
        SystemParams {
            eta: self.eta,
            xi_bob: self.xi_bob,
            nu_el: self.nu_el,
            alpha_db_km: self.alpha_db_km,
            distance_km: 0.0,
            v_a: 1.0,
            detection: if self.heterodyne {
                Detection::Heterodyne
            } else {
                Detection::Homodyne
            },
        }
    }

    pub fn trust(&self) -> DetectorTrust {
        if self.untrusted_detector {
            DetectorTrust::Untrusted
        } else {
            DetectorTrust::Trusted
        }
    }

    pub fn outer_family(&self) -> OuterFamily {
        match self.outer {
            OuterChoice::Bch => OuterFamily::Bch,
            OuterChoice::Ldpc => OuterFamily::Ldpc {
                column_weight: self.outer_column_weight,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn keys_override_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "experiment = \"skr-distance\"\nbeta_grid = [0.95, 1.0]\nfer = 0.5\nllr = \"gaussian-approx\"\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::SkrDistance);
        assert_eq!(cfg.beta_grid, vec![0.95, 1.0]);
        assert_eq!(cfg.llr, LlrChoice::GaussianApprox);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml("no_such_key = 1").is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"plot\"").is_err());
        for text in [
            "beta_grid = []",
            "beta_grid = [0.99, 0.9]",
            "min_frame_errors = 0",
            "dim = 3",
            "experiment = \"skr-distance\"",
        ] {
            let cfg = ExperimentConfig::from_toml(text).unwrap();
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{text}");
        }
    }
}
