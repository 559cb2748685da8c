//! Deterministic Monte-Carlo driver: FER and average-execution-time sweeps,
//! flip-candidate PMF analysis, CSV/manifest emission.
//!
//! Frames are generated from per-frame random streams keyed by the run seed
//! and frame index, dispatched to workers in fixed-size batches, and merged
//! with integer accumulators, so outputs are byte-identical for a given
//! (config, seed) regardless of worker count.

use crate::channel::{frame_rng, transmit, ChannelConfig};
use crate::code::{polar_encode, CrcSpec, PolarCode};
use crate::cost::CostParams;
use crate::flip::{FlipConfig, FlipDecoder};
use crate::restart::{Baseline, Mechanism};
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

const BATCH_FRAMES: u64 = 1024;

/// Which quantity the channel points express.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    EbN0,
    Snr,
}

impl Axis {
    pub fn label(&self) -> &'static str {
        match self {
            Axis::EbN0 => "ebn0",
            Axis::Snr => "snr",
        }
    }
}

/// Full simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub k: usize,
    pub crc_len: usize,
    pub omega: usize,
    pub t_max: usize,
    pub baseline: Baseline,
    pub mechanism: Mechanism,
    pub points_db: Vec<f64>,
    pub axis: Axis,
    pub min_frames: u64,
    pub target_errors: u64,
    pub seed: u64,
    /// 0 uses the global rayon default.
    pub workers: usize,
    pub pe: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 1024,
            k: 512,
            crc_len: 11,
            omega: 3,
            t_max: 301,
            baseline: Baseline::Sc,
            mechanism: Mechanism::Grm,
            points_db: vec![1.75],
            axis: Axis::EbN0,
            min_frames: 20_000,
            target_errors: 200,
            seed: 1,
            workers: 0,
            pe: 64,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_frames < 1 || self.target_errors < 1 {
            return Err(Error::InvalidConfig(
                "min_frames and target_errors must be at least 1".into(),
            ));
        }
        if self.points_db.is_empty() {
            return Err(Error::InvalidConfig("no channel points given".into()));
        }
        FlipConfig::new(self.omega, self.t_max)?;
        Ok(())
    }

    /// Serializes the configuration as `key=value` lines; the output is a
    /// valid `--config` file that reproduces the run.
    pub fn to_manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "k={}", self.k);
        let _ = writeln!(s, "crc={}", self.crc_len);
        let _ = writeln!(s, "omega={}", self.omega);
        let _ = writeln!(s, "tmax={}", self.t_max);
        let _ = writeln!(s, "baseline={}", self.baseline.label());
        let _ = writeln!(s, "mechanism={}", self.mechanism.label());
        let points: Vec<String> = self.points_db.iter().map(|p| format!("{p}")).collect();
        let _ = writeln!(s, "points={}", points.join(","));
        let _ = writeln!(s, "axis={}", self.axis.label());
        let _ = writeln!(s, "min_frames={}", self.min_frames);
        let _ = writeln!(s, "target_errors={}", self.target_errors);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "workers={}", self.workers);
        let _ = writeln!(s, "pe={}", self.pe);
        s
    }

    /// Parses `key=value` lines ('#' starts a comment). Unknown keys are
    /// rejected. Starts from the defaults.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key=value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::InvalidConfig(format!("bad {what}: {value}"));
        match key {
            "n" => self.n = value.parse().map_err(|_| bad("n"))?,
            "k" => self.k = value.parse().map_err(|_| bad("k"))?,
            "crc" => self.crc_len = value.parse().map_err(|_| bad("crc"))?,
            "omega" => self.omega = value.parse().map_err(|_| bad("omega"))?,
            "tmax" => self.t_max = value.parse().map_err(|_| bad("tmax"))?,
            "baseline" => {
                self.baseline = match value {
                    "sc" => Baseline::Sc,
                    "sclrt" => Baseline::ScLrt,
                    "fssc" => Baseline::Fssc,
                    _ => return Err(bad("baseline")),
                }
            }
            "mechanism" => {
                self.mechanism = match value {
                    "none" => Mechanism::None,
                    "lrt" => Mechanism::Lrt,
                    "srm" => Mechanism::Srm,
                    "grm" => Mechanism::Grm,
                    _ => return Err(bad("mechanism")),
                }
            }
            "points" | "ebn0" => {
                self.points_db = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| bad("points")))
                    .collect::<Result<Vec<f64>>>()?;
            }
            "axis" => {
                self.axis = match value {
                    "ebn0" => Axis::EbN0,
                    "snr" => Axis::Snr,
                    _ => return Err(bad("axis")),
                }
            }
            "min_frames" => self.min_frames = value.parse().map_err(|_| bad("min_frames"))?,
            "target_errors" => self.target_errors = value.parse().map_err(|_| bad("target_errors"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "workers" => self.workers = value.parse().map_err(|_| bad("workers"))?,
            "pe" => self.pe = value.parse().map_err(|_| bad("pe"))?,
            _ => return Err(Error::InvalidConfig(format!("unknown key: {key}"))),
        }
        Ok(())
    }

    pub fn build_decoder(&self) -> Result<FlipDecoder> {
        let code = PolarCode::new_5g(self.n, self.k, self.crc_len)?;
        let crc = match self.crc_len {
            11 => CrcSpec::crc11(),
            2 => CrcSpec::crc2(),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "no bundled CRC polynomial of degree {other}; build FlipDecoder directly"
                )))
            }
        };
        FlipDecoder::new(
            code,
            crc,
            FlipConfig::new(self.omega, self.t_max)?,
            self.baseline,
            self.mechanism,
            CostParams::with_pe(self.pe),
        )
    }

    fn channel_at(&self, point_db: f64, rate: f64) -> Result<ChannelConfig> {
        match self.axis {
            Axis::EbN0 => ChannelConfig::new(point_db, rate),
            Axis::Snr => ChannelConfig::from_snr_db(point_db, rate),
        }
    }
}

/// Accumulated statistics for one channel point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub point_db: f64,
    pub frames: u64,
    pub errors: u64,
    pub fer: f64,
    /// Average cycles per frame without the mechanism (`tau` bare trials).
    pub avg_cc: f64,
    /// Average cycles per frame with the mechanism's savings.
    pub avg_cc_mech: f64,
    /// Relative reduction, percent.
    pub reduction_pct: f64,
}

#[derive(Debug, Clone, Default)]
struct FrameStat {
    error: bool,
    cc: u64,
    cc_mech: u64,
    initial_failed: bool,
    /// Information rank of the first flip of every additional trial.
    flip_ranks: Vec<u32>,
}

#[derive(Debug, Clone, Default)]
struct PointAccum {
    frames: u64,
    errors: u64,
    total_cc: u128,
    total_cc_mech: u128,
    failed_initial: u64,
    rank_counts: Vec<u64>,
}

/// One frame end to end: random payload, encode, channel, flip decode.
fn run_frame(
    decoder: &FlipDecoder,
    channel: &ChannelConfig,
    seed: u64,
    frame: u64,
    ws: &mut crate::sc::LlrWorkspace,
) -> Result<FrameStat> {
    let code = decoder.code();
    let mut rng = frame_rng(seed, frame);
    let info: Vec<u8> = (0..code.k()).map(|_| rng.gen_range(0..2u8)).collect();
    let payload = decoder.crc().attach(&info, code.k())?;
    let mut x = code.place_payload(&payload)?;
    polar_encode(&mut x);
    let llr = transmit(&x, channel, &mut rng);
    let res = decoder.decode_frame(&llr, ws)?;
    let correct = res.success && code.extract_payload(&res.u_hat) == payload;
    let trial_cost = decoder.trial_cost();
    Ok(FrameStat {
        error: !correct,
        cc: res.baseline_cycles(trial_cost),
        cc_mech: res.mechanism_cycles(trial_cost),
        initial_failed: res.tau > 1 || !res.success,
        flip_ranks: res.trials[1..]
            .iter()
            .filter_map(|t| t.flips.first())
            .filter_map(|&i| code.info_rank(i))
            .map(|r| r as u32)
            .collect(),
    })
}

fn run_point(cfg: &SimConfig, decoder: &FlipDecoder, point_db: f64) -> Result<PointAccum> {
    let channel = cfg.channel_at(point_db, decoder.code().rate())?;
    let mut acc = PointAccum {
        rank_counts: vec![0; decoder.code().k_tot()],
        ..Default::default()
    };
    let mut next_frame = 0u64;
    loop {
        let batch = next_frame..next_frame + BATCH_FRAMES;
        next_frame = batch.end;
        let stats: Vec<FrameStat> = batch
            .into_par_iter()
            .map_init(
                || decoder.workspace(),
                |ws, f| run_frame(decoder, &channel, cfg.seed, f, ws),
            )
            .collect::<Result<Vec<FrameStat>>>()?;
        for s in stats {
            acc.frames += 1;
            acc.errors += u64::from(s.error);
            acc.total_cc += u128::from(s.cc);
            acc.total_cc_mech += u128::from(s.cc_mech);
            acc.failed_initial += u64::from(s.initial_failed);
            for rank in s.flip_ranks {
                acc.rank_counts[rank as usize] += 1;
            }
        }
        if acc.frames >= cfg.min_frames || acc.errors >= cfg.target_errors {
            return Ok(acc);
        }
    }
}

fn with_pool<T: Send>(workers: usize, run: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers == 0 {
        run()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(run)
    }
}

/// Runs the FER / execution-time sweep over every configured channel point.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let decoder = cfg.build_decoder()?;
    with_pool(cfg.workers, || {
        cfg.points_db
            .iter()
            .map(|&point_db| {
                let acc = run_point(cfg, &decoder, point_db)?;
                let frames = acc.frames as f64;
                let avg_cc = acc.total_cc as f64 / frames;
                let avg_cc_mech = acc.total_cc_mech as f64 / frames;
                let reduction_pct = if acc.total_cc > 0 {
                    100.0 * (acc.total_cc - acc.total_cc_mech) as f64 / acc.total_cc as f64
                } else {
                    0.0
                };
                Ok(SweepPoint {
                    point_db,
                    frames: acc.frames,
                    errors: acc.errors,
                    fer: acc.errors as f64 / frames,
                    avg_cc,
                    avg_cc_mech,
                    reduction_pct,
                })
            })
            .collect()
    })
}

/// Distribution of the first flip-set index over the information set,
/// sampled from every additional trial of every frame whose initial trial
/// failed.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfReport {
    pub point_db: f64,
    pub frames: u64,
    pub failed_frames: u64,
    /// One count per information rank `j`.
    pub counts: Vec<u64>,
    /// Normalized PMF; empty when no initial trial failed.
    pub pmf: Vec<f64>,
    pub p_lhs: f64,
    pub p_rhs: f64,
    pub j_rhs: usize,
}

/// Runs the PMF analysis at the first configured channel point.
pub fn run_pmf(cfg: &SimConfig) -> Result<PmfReport> {
    cfg.validate()?;
    let decoder = cfg.build_decoder()?;
    let point_db = cfg.points_db[0];
    let acc = with_pool(cfg.workers, || run_point(cfg, &decoder, point_db))?;
    let total: u64 = acc.rank_counts.iter().sum();
    let pmf: Vec<f64> = if total == 0 {
        Vec::new()
    } else {
        acc.rank_counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    };
    let j_rhs = decoder.code().j_rhs();
    let p_lhs: f64 = pmf.iter().take(j_rhs).sum();
    let p_rhs: f64 = if pmf.is_empty() { 0.0 } else { 1.0 - p_lhs };
    Ok(PmfReport {
        point_db,
        frames: acc.frames,
        failed_frames: acc.failed_initial,
        counts: acc.rank_counts,
        pmf,
        p_lhs,
        p_rhs,
        j_rhs,
    })
}

/// Renders the sweep CSV: one row per channel point.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("ebn0_db,frames,errors,fer,avg_cc,avg_cc_mech,reduction_pct\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{:.8},{:.3},{:.3},{:.4}",
            p.point_db, p.frames, p.errors, p.fer, p.avg_cc, p.avg_cc_mech, p.reduction_pct
        );
    }
    s
}

/// Renders the PMF CSV: info rank, leaf index, probability; one row per
/// information position.
pub fn pmf_csv(report: &PmfReport, code: &PolarCode) -> String {
    let mut s = String::from("j,leaf_index,probability\n");
    for (j, &leaf) in code.info_set().iter().enumerate() {
        let p = report.pmf.get(j).copied().unwrap_or(0.0);
        let _ = writeln!(s, "{j},{leaf},{p:.8}");
    }
    s
}

/// Writes sweep results plus the run manifest under `out_dir`.
pub fn emit_sweep(cfg: &SimConfig, points: &[SweepPoint], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("sweep.csv"), sweep_csv(points))?;
    std::fs::write(out_dir.join("manifest.txt"), cfg.to_manifest())?;
    Ok(())
}

/// Writes the PMF table plus the run manifest (with a summary block) under
/// `out_dir`.
pub fn emit_pmf(cfg: &SimConfig, report: &PmfReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let decoder = cfg.build_decoder()?;
    std::fs::write(out_dir.join("pmf.csv"), pmf_csv(report, decoder.code()))?;
    let mut manifest = cfg.to_manifest();
    let _ = writeln!(manifest, "# pmf summary");
    let _ = writeln!(manifest, "# frames={}", report.frames);
    let _ = writeln!(manifest, "# failed_frames={}", report.failed_frames);
    let _ = writeln!(manifest, "# j_rhs={}", report.j_rhs);
    let _ = writeln!(manifest, "# p_lhs={:.6}", report.p_lhs);
    let _ = writeln!(manifest, "# p_rhs={:.6}", report.p_rhs);
    std::fs::write(out_dir.join("manifest.txt"), manifest)?;
    Ok(())
}
