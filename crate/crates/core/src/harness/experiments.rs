//! The five experiments, each producing a [`Table`].

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use super::table::{read_csv, Cell, Table};
use crate::channel::snr_for_information;
use crate::density_evolution::{de_threshold, snr_to_ebn0_db};
use crate::error::{Error, Result};
use crate::ldpc::{BpAlgorithm, Protograph};
use crate::multidim::DivisionAlgebraDim;
use crate::outer::{
    outer_decode, outer_syndrome_exchange, residual_ber, OuterBatch, OuterCode, OuterOutcome,
};
use crate::reconcile::{run_frame, FrameConfig, InnerCode, ReconciliationFrame};
use crate::security::{crc_reduction, skr_at_distance, FiniteSizeParams, OperatingPoint};

pub const CRC_HEADER: &[&str] = &[
    "blocklength",
    "n_crc",
    "rate",
    "k",
    "reduction_percent",
    "infeasible",
];

pub const THRESHOLD_HEADER: &[&str] = &[
    "base_matrix",
    "rows",
    "cols",
    "punctured",
    "rate",
    "snr_threshold",
    "ebn0_db",
    "beta_threshold",
    "de_iterations",
    "converged",
    "wall_s",
];

pub const FER_HEADER: &[&str] = &[
    "blocklength",
    "k",
    "beta",
    "snr",
    "frames",
    "frame_errors",
    "undetected",
    "fer",
    "ci_low",
    "ci_high",
    "residual_ber",
    "mean_iterations",
    "timed_out",
    "wall_s",
];

pub const SKR_HEADER: &[&str] = &[
    "blocklength",
    "beta_code",
    "distance_km",
    "fer",
    "beta",
    "i_ab",
    "v_a",
    "chi_be",
    "delta_n",
    "n_privacy",
    "skr",
    "skr_raw",
    "below_zero",
    "dw_bound",
    "plob_bound",
    "wall_s",
];

pub const RECONCILE_HEADER: &[&str] = &[
    "batch",
    "blocklength",
    "k",
    "beta",
    "snr",
    "attempts",
    "accepted",
    "undetected_frames",
    "residual_ber",
    "key_cost",
    "outer_success",
    "outer_flips",
    "outer_undetected",
    "timed_out",
    "wall_s",
];

/// Independent stream per `(master, stream, index)`: the three words form
/// the ChaCha key, so frames never share state whatever the scheduling.
pub fn frame_rng(master_seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&stream.to_le_bytes());
    seed[16..24].copy_from_slice(&index.to_le_bytes());
    seed[24..].copy_from_slice(b"sbrecon\0");
    ChaCha8Rng::from_seed(seed)
}

/// Two-sided Wilson score interval for `errors` out of `n`.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Per-quadrature SNR at which a rate-`rate` code runs with efficiency `beta`.
pub fn snr_for_beta(rate: f64, beta: f64) -> f64 {
    snr_for_information(rate / beta)
}

pub fn load_protograph(cfg: &ExperimentConfig) -> Result<Protograph> {
    match &cfg.base_matrix {
        Some(path) => Protograph::from_file(path),
        None => Ok(Protograph::default_r50()),
    }
}

pub fn build_code(
    cfg: &ExperimentConfig,
    proto: &Protograph,
    blocklength: usize,
) -> Result<InnerCode> {
    let algorithm = match cfg.min_sum_scale {
        Some(scale) => BpAlgorithm::MinSum { scale },
        None => BpAlgorithm::SumProduct,
    };
    let code = InnerCode::from_protograph(
        proto,
        blocklength,
        cfg.master_seed,
        algorithm,
        cfg.max_iters,
    )?;
    if !code.girth_at_least_6() {
        log::warn!("N = {blocklength}: lifted graph has 4-cycles");
    }
    Ok(code)
}

pub fn frame_config(cfg: &ExperimentConfig) -> Result<FrameConfig> {
    Ok(FrameConfig {
        dim: DivisionAlgebraDim::new(cfg.dim)?,
        llr_mode: cfg.llr.into(),
    })
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
    pub timeout: Option<Duration>,
}

impl StopRule {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        StopRule {
            min_frame_errors: cfg.min_frame_errors,
            max_frames: cfg.max_frames,
            timeout: cfg.timeout_s.map(Duration::from_secs_f64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerPoint {
    pub blocklength: usize,
    pub k: usize,
    pub beta: f64,
    pub snr: f64,
    pub frames: u64,
    pub frame_errors: u64,
    /// Accepted frames whose `s_hat` differs from `s`.
    pub undetected: u64,
    pub accepted_bit_errors: u64,
    pub iterations: u64,
    pub timed_out: bool,
    pub wall_s: f64,
}

impl FerPoint {
    pub fn fer(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.frame_errors as f64 / self.frames as f64
        }
    }

    pub fn ci(&self) -> (f64, f64) {
        wilson_interval(self.frame_errors, self.frames, 1.96)
    }

    /// Bit error rate between `s` and `s_hat` over accepted frames.
    pub fn residual_ber(&self) -> f64 {
        let accepted = self.frames - self.frame_errors;
        if accepted == 0 {
            0.0
        } else {
            self.accepted_bit_errors as f64 / (accepted as f64 * self.k as f64)
        }
    }

    pub fn row(&self) -> Vec<Cell> {
        let (lo, hi) = self.ci();
        vec![
            self.blocklength.into(),
            self.k.into(),
            self.beta.into(),
            self.snr.into(),
            self.frames.into(),
            self.frame_errors.into(),
            self.undetected.into(),
            self.fer().into(),
            lo.into(),
            hi.into(),
            self.residual_ber().into(),
            (self.iterations as f64 / self.frames.max(1) as f64).into(),
            self.timed_out.into(),
            self.wall_s.into(),
        ]
    }
}

struct FrameSummary {
    accepted: bool,
    undetected: bool,
    bit_errors: u64,
    iterations: u64,
}

/// Simulates frames in index order until the stop rule fires. The result is
/// cut at the exact frame that completed the error budget, so it does not
/// depend on the worker count.
#[allow(clippy::too_many_arguments)]
pub fn measure_fer(
    code: &InnerCode,
    frame_cfg: &FrameConfig,
    beta: f64,
    snr: f64,
    stop: &StopRule,
    master_seed: u64,
    stream: u64,
    pool: &rayon::ThreadPool,
) -> Result<FerPoint> {
    let start = Instant::now();
    let chunk = (4 * pool.current_num_threads()).max(8) as u64;
    let mut point = FerPoint {
        blocklength: code.blocklength(),
        k: code.k(),
        beta,
        snr,
        frames: 0,
        frame_errors: 0,
        undetected: 0,
        accepted_bit_errors: 0,
        iterations: 0,
        timed_out: false,
        wall_s: 0.0,
    };
    'outer: while point.frames < stop.max_frames {
        let lo = point.frames;
        let hi = (lo + chunk).min(stop.max_frames);
        let results: Vec<Result<FrameSummary>> = pool.install(|| {
            (lo..hi)
                .into_par_iter()
                .map(|i| {
                    let mut rng = frame_rng(master_seed, stream, i);
                    let f = run_frame(code, frame_cfg, snr, &mut rng)?;
                    Ok(FrameSummary {
                        accepted: f.accepted,
                        undetected: f.undetected_error(),
                        bit_errors: if f.accepted {
                            f.info_bit_errors() as u64
                        } else {
                            0
                        },
                        iterations: f.iterations as u64,
                    })
                })
                .collect()
        });
        for r in results {
            let r = r?;
            point.frames += 1;
            point.iterations += r.iterations;
            if r.accepted {
                point.undetected += u64::from(r.undetected);
                point.accepted_bit_errors += r.bit_errors;
            } else {
                point.frame_errors += 1;
                if point.frame_errors >= stop.min_frame_errors {
                    break 'outer;
                }
            }
        }
        if stop.timeout.is_some_and(|t| start.elapsed() > t) {
            point.timed_out = true;
            break;
        }
    }
    point.wall_s = start.elapsed().as_secs_f64();
    Ok(point)
}

/// Result of one experiment run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub table: Table,
    /// Some row hit its wall-clock budget.
    pub timed_out: bool,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::CrcPenalty => crc_penalty_table(cfg).map(|table| RunOutcome {
            table,
            timed_out: false,
        }),
        Experiment::Threshold => threshold(cfg).map(|table| RunOutcome {
            table,
            timed_out: false,
        }),
        Experiment::FerSweep => fer_sweep(cfg),
        Experiment::SkrDistance => skr_distance(cfg).map(|table| RunOutcome {
            table,
            timed_out: false,
        }),
        Experiment::Reconcile => reconcile(cfg),
    }
}

/// Reduction in efficiency, in percent, capped at 100 when the CRC eats every
/// information bit.
pub fn crc_penalty_table(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(CRC_HEADER);
    for n in cfg.blocklengths() {
        let k = cfg.rate * n as f64;
        for n_crc in 1..=cfg.n_crc {
            let reduction = crc_reduction(cfg.rate, n, n_crc).min(1.0);
            t.push(vec![
                n.into(),
                n_crc.into(),
                cfg.rate.into(),
                k.into(),
                (100.0 * reduction).into(),
                (n_crc as f64 >= k).into(),
            ]);
        }
    }
    Ok(t)
}

pub fn threshold(cfg: &ExperimentConfig) -> Result<Table> {
    let start = Instant::now();
    let proto = load_protograph(cfg)?;
    let th = de_threshold(&proto, cfg.de_tolerance)?;
    let rate = proto.design_rate();
    let name = cfg
        .base_matrix
        .as_ref()
        .map_or("builtin".to_string(), |p| p.display().to_string());
    let mut t = Table::new(THRESHOLD_HEADER);
    t.push(vec![
        Cell::Text(name),
        proto.rows().into(),
        proto.cols().into(),
        proto.punctured().len().into(),
        rate.into(),
        th.snr_threshold.into(),
        snr_to_ebn0_db(th.snr_threshold, rate).into(),
        th.beta_threshold.into(),
        th.iterations.into(),
        th.converged.into(),
        start.elapsed().as_secs_f64().into(),
    ]);
    Ok(t)
}

/// Every `beta` of one blocklength reuses the same frame streams: frame `i`
/// carries the same information bits and the same standardized noise at each
/// grid point, so differences along a curve are not masked by sampling noise.
fn point_stream(blocklength: usize) -> u64 {
    blocklength as u64
}

pub fn fer_sweep(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let proto = load_protograph(cfg)?;
    let frame_cfg = frame_config(cfg)?;
    let pool = thread_pool(cfg.workers)?;
    let stop = StopRule::from_config(cfg);
    let mut t = Table::new(FER_HEADER);
    let mut timed_out = false;
    for n in cfg.blocklengths() {
        let code = build_code(cfg, &proto, n)?;
        for &beta in &cfg.beta_grid {
            let snr = snr_for_beta(code.rate(), beta);
            let p = measure_fer(
                &code,
                &frame_cfg,
                beta,
                snr,
                &stop,
                cfg.master_seed,
                point_stream(n),
                &pool,
            )?;
            log::info!(
                "N = {n}, beta = {beta}: FER {:.4} over {} frames",
                p.fer(),
                p.frames
            );
            timed_out |= p.timed_out;
            t.push(p.row());
        }
    }
    Ok(RunOutcome {
        table: t,
        timed_out,
    })
}

/// Measured FER per blocklength as a function of `beta`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FerTable {
    curves: BTreeMap<usize, Vec<(f64, f64)>>,
}

impl FerTable {
    pub fn insert(&mut self, blocklength: usize, beta: f64, fer: f64) {
        let c = self.curves.entry(blocklength).or_default();
        c.push((beta, fer));
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    /// Reads the `blocklength`, `beta` and `fer` columns of a sweep CSV.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let (header, rows) = read_csv(path)?;
        let col = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("{}: no column {name}", path.display())))
        };
        let (cn, cb, cf) = (col("blocklength")?, col("beta")?, col("fer")?);
        let mut t = FerTable::default();
        for (line, row) in rows.iter().enumerate() {
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: line + 2,
                msg,
            };
            let n = row[cn].parse().map_err(|e| parse_err(format!("{e}")))?;
            let b = row[cb].parse().map_err(|e| parse_err(format!("{e}")))?;
            let f = row[cf].parse().map_err(|e| parse_err(format!("{e}")))?;
            t.insert(n, b, f);
        }
        Ok(t)
    }

    /// Interpolates `ln FER` linearly in `beta` (plain linear next to a zero).
    pub fn lookup(&self, blocklength: usize, beta: f64) -> Result<f64> {
        let c = self
            .curves
            .get(&blocklength)
            .ok_or_else(|| Error::Infeasible(format!("no FER measured for N = {blocklength}")))?;
        let out_of_range = || {
            Error::Infeasible(format!(
                "beta = {beta} outside the measured range for N = {blocklength}"
            ))
        };
        let (first, last) = (c[0], c[c.len() - 1]);
        if beta < first.0 - 1e-12 || beta > last.0 + 1e-12 {
            return Err(out_of_range());
        }
        if let Some(&(_, f)) = c.iter().find(|(b, _)| (b - beta).abs() < 1e-12) {
            return Ok(f);
        }
        for w in c.windows(2) {
            let ((b0, f0), (b1, f1)) = (w[0], w[1]);
            if beta <= b1 + 1e-12 {
                if (b1 - b0).abs() < 1e-15 {
                    return Ok(f1);
                }
                let x = ((beta - b0) / (b1 - b0)).clamp(0.0, 1.0);
                return Ok(if f0 > 0.0 && f1 > 0.0 {
                    (f0.ln() + x * (f1.ln() - f0.ln())).exp()
                } else {
                    f0 + x * (f1 - f0)
                });
            }
        }
        Ok(last.1)
    }
}

pub fn skr_distance(cfg: &ExperimentConfig) -> Result<Table> {
    let table = match &cfg.fer_table {
        Some(p) => Some(FerTable::from_csv(p)?),
        None => None,
    };
    let params = cfg.system_params();
    params.validate()?;
    let mut t = Table::new(SKR_HEADER);
    for n in cfg.blocklengths() {
        for &beta in &cfg.beta_grid {
            let fer = match (&table, cfg.fer) {
                (Some(tab), _) => tab.lookup(n, beta)?,
                (None, Some(f)) => f,
                (None, None) => unreachable!("validated"),
            };
            let op = OperatingPoint {
                rate: cfg.rate,
                beta_code: beta,
                r_out: cfg.r_out,
                fer,
                n_privacy: cfg.n_privacy,
                eps: FiniteSizeParams {
                    eps_smooth: cfg.eps_smooth,
                    eps_pa: cfg.eps_pa,
                },
                trust: cfg.trust(),
            };
            for &d in &cfg.distance_grid {
                let start = Instant::now();
                let r = skr_at_distance(&params.at_distance(d), &op)?;
                t.push(vec![
                    n.into(),
                    beta.into(),
                    d.into(),
                    r.fer.into(),
                    r.beta.into(),
                    r.i_ab.into(),
                    r.v_a.into(),
                    r.chi_be.into(),
                    r.delta_n.into(),
                    r.n_privacy.into(),
                    r.skr.into(),
                    r.skr_raw.into(),
                    r.below_zero.into(),
                    r.dw_bound.into(),
                    r.plob_bound.into(),
                    start.elapsed().as_secs_f64().into(),
                ]);
            }
        }
    }
    Ok(t)
}

/// Stream id reserved for `reconcile` frames.
const RECONCILE_STREAM: u64 = u64::MAX;

/// Inner frames feeding one outer batch after another.
pub struct ReconcileSession {
    pub code: InnerCode,
    pub frame_cfg: FrameConfig,
    pub beta: f64,
    pub snr: f64,
    master_seed: u64,
    next_frame: u64,
    n_out: usize,
    pub batch: OuterBatch,
}

impl ReconcileSession {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let proto = load_protograph(cfg)?;
        let n = cfg.blocklengths()[0];
        let code = build_code(cfg, &proto, n)?;
        let beta = cfg.beta_grid[0];
        let snr = cfg
            .snr_override
            .unwrap_or_else(|| snr_for_beta(code.rate(), beta));
        if cfg.n_out % code.k() != 0 {
            return Err(Error::Config(format!(
                "n_out = {} is not a multiple of k = {}",
                cfg.n_out,
                code.k()
            )));
        }
        let batch = OuterBatch::new(cfg.n_out, code.k())?;
        Ok(ReconcileSession {
            frame_cfg: frame_config(cfg)?,
            code,
            beta,
            snr,
            master_seed: cfg.master_seed,
            next_frame: 0,
            n_out: cfg.n_out,
            batch,
        })
    }

    /// Runs the next frame with its own seed and offers it to the batch.
    pub fn run_reconcile_once(&mut self) -> Result<ReconciliationFrame> {
        let mut rng = frame_rng(self.master_seed, RECONCILE_STREAM, self.next_frame);
        self.next_frame += 1;
        let f = run_frame(&self.code, &self.frame_cfg, self.snr, &mut rng)?;
        self.batch.offer_frame(&f)?;
        Ok(f)
    }

    /// Starts an empty batch; frame numbering continues.
    pub fn next_batch(&mut self) -> Result<()> {
        self.batch = OuterBatch::new(self.n_out, self.code.k())?;
        Ok(())
    }

    pub fn frames_run(&self) -> u64 {
        self.next_frame
    }
}

pub fn reconcile(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let mut session = ReconcileSession::new(cfg)?;
    let outer = OuterCode::new(cfg.n_out, cfg.r_out, cfg.outer_family(), cfg.master_seed)?;
    let pool = thread_pool(cfg.workers)?;
    let chunk = (4 * pool.current_num_threads()).max(8) as u64;
    let timeout = cfg.timeout_s.map(Duration::from_secs_f64);
    let mut t = Table::new(RECONCILE_HEADER);
    let mut any_timeout = false;
    for b in 0..cfg.batches {
        let start = Instant::now();
        let mut undetected = 0u64;
        let mut timed_out = false;
        // frames are produced in parallel and inserted in index order
        'fill: while !session.batch.is_complete() {
            if session.batch.attempts >= cfg.max_frames
                || timeout.is_some_and(|limit| start.elapsed() > limit)
            {
                timed_out = true;
                break;
            }
            let lo = session.next_frame;
            let frames: Vec<Result<ReconciliationFrame>> = pool.install(|| {
                (lo..lo + chunk)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = frame_rng(session.master_seed, RECONCILE_STREAM, i);
                        run_frame(&session.code, &session.frame_cfg, session.snr, &mut rng)
                    })
                    .collect()
            });
            for f in frames {
                let f = f?;
                session.next_frame += 1;
                undetected += u64::from(f.undetected_error());
                if session.batch.offer_frame(&f)? {
                    break 'fill;
                }
            }
        }
        let batch = &mut session.batch;
        let (ber, key_cost, success, flips, outer_undetected) = if batch.is_complete() {
            let ber = residual_ber(&batch.w, &batch.w_hat)?;
            let ex = outer_syndrome_exchange(batch, &outer)?;
            let outcome = outer_decode(batch, &outer)?;
            let (ok, flips) = match outcome {
                OuterOutcome::Corrected { flips } => (true, flips as f64),
                OuterOutcome::Failed => (false, f64::NAN),
            };
            (ber, ex.key_cost as f64, ok, flips, batch.undetected_error())
        } else {
            (f64::NAN, f64::NAN, false, f64::NAN, false)
        };
        log::info!(
            "batch {b}: {} attempts, residual BER {ber:.3e}, outer success {success}",
            batch.attempts
        );
        any_timeout |= timed_out;
        t.push(vec![
            b.into(),
            session.code.blocklength().into(),
            session.code.k().into(),
            session.beta.into(),
            session.snr.into(),
            batch.attempts.into(),
            batch.accepted().into(),
            undetected.into(),
            ber.into(),
            key_cost.into(),
            success.into(),
            flips.into(),
            outer_undetected.into(),
            timed_out.into(),
            start.elapsed().as_secs_f64().into(),
        ]);
        session.next_batch()?;
    }
    Ok(RunOutcome {
        table: t,
        timed_out: any_timeout,
    })
}
