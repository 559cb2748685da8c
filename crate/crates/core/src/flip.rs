//! SCF / DSCF trial orchestration: candidate scoring, the bounded sorted
//! pool, and the CRC-gated decoding loop with optional restarts.

use crate::code::{CrcSpec, PolarCode};
use crate::cost::{self, CostParams};
use crate::fast::{fssc_trial, NodeSchedule};
use crate::restart::{plan_restart, Baseline, Mechanism, RestartSpec};
use crate::sc::{sc_trial, DecodeOutcome, InitialSnapshot, LlrWorkspace};
use crate::{Error, Result};
use std::cmp::Ordering;

/// Metric penalty for an unreliable already-decoded position, the
/// hardware-friendly approximation of the exact DSCF term.
const J_PENALTY: f64 = 1.5;
const J_THRESHOLD: f64 = 5.0;

#[inline]
fn j_term(alpha: f64) -> f64 {
    if alpha.abs() <= J_THRESHOLD {
        J_PENALTY
    } else {
        0.0
    }
}

/// Flip-decoder configuration. `t_max` counts all trials including the
/// initial pass; `omega` bounds the size of one flip set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipConfig {
    pub omega: usize,
    pub t_max: usize,
}

impl FlipConfig {
    pub fn new(omega: usize, t_max: usize) -> Result<Self> {
        if omega < 1 || t_max < 1 {
            return Err(Error::InvalidConfig(
                "flip order and trial budget must be at least 1".into(),
            ));
        }
        Ok(Self { omega, t_max })
    }
}

/// A candidate flip set and its metric.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipCandidate {
    /// Ascending information positions, at most `omega` of them.
    pub flips: Vec<usize>,
    pub metric: f64,
    pub tried: bool,
}

fn cand_cmp(a: &FlipCandidate, b: &FlipCandidate) -> Ordering {
    a.metric
        .partial_cmp(&b.metric)
        .expect("flip metrics are finite")
        .then_with(|| a.flips[0].cmp(&b.flips[0]))
        .then_with(|| a.flips.cmp(&b.flips))
}

/// Bounded pool of untried candidates, sorted by ascending metric (ties by
/// first flip index, then lexicographically). Popping consumes the best
/// candidate; inserting into a full pool evicts the worst entry when the
/// newcomer outranks it.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    entries: Vec<FlipCandidate>,
    capacity: usize,
}

impl CandidatePool {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: Vec::with_capacity(capacity),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn entries(&self) -> &[FlipCandidate] {
        &self.entries
    }

    /// Inserts unless the pool is full of better candidates. Returns true
    /// if the candidate was kept.
    pub fn insert(&mut self, cand: FlipCandidate) -> bool {
        if self.capacity == 0 {
            return false;
        }
        let pos = self
            .entries
            .binary_search_by(|e| cand_cmp(e, &cand))
            .unwrap_or_else(|p| p);
        if self.entries.len() == self.capacity {
            if pos == self.capacity {
                return false;
            }
            self.entries.pop();
        }
        self.entries.insert(pos, cand);
        true
    }

    /// Removes and returns the minimum-metric candidate.
    pub fn pop(&mut self) -> Option<FlipCandidate> {
        if self.entries.is_empty() {
            None
        } else {
            let mut cand = self.entries.remove(0);
            cand.tried = true;
            Some(cand)
        }
    }
}

/// Per-outcome metric context: decision LLRs plus a running prefix of the
/// penalty terms over the information set, so extending a set by one index
/// costs O(1).
struct MetricCtx<'a> {
    code: &'a PolarCode,
    alpha_dec: &'a [f64],
    /// `prefix_j[r]` = sum of `j_term` over information ranks `0..=r`.
    prefix_j: Vec<f64>,
}

impl<'a> MetricCtx<'a> {
    fn new(code: &'a PolarCode, alpha_dec: &'a [f64]) -> Self {
        let mut prefix_j = Vec::with_capacity(code.k_tot());
        let mut acc = 0.0;
        for &a in code.info_set() {
            acc += j_term(alpha_dec[a]);
            prefix_j.push(acc);
        }
        Self {
            code,
            alpha_dec,
            prefix_j,
        }
    }

    fn abs_sum(&self, flips: &[usize]) -> f64 {
        flips.iter().map(|&i| self.alpha_dec[i].abs()).sum()
    }

    fn metric_for(&self, abs_sum: f64, last: usize) -> f64 {
        let rank = self
            .code
            .info_rank(last)
            .expect("metric target is an information position");
        abs_sum + self.prefix_j[rank]
    }
}

/// The flip-set metric: the LLR magnitudes of the flipped decisions plus a
/// penalty for every unreliable information decision up to the last flip.
pub fn flip_metric(flips: &[usize], alpha_dec: &[f64], code: &PolarCode) -> Result<f64> {
    if flips.is_empty() {
        return Err(Error::InvalidConfig("flip metric of an empty set".into()));
    }
    let mut prev = None;
    for &i in flips {
        if i >= code.block_len() || !code.is_info(i) {
            return Err(Error::FrozenFlip(i));
        }
        if prev.is_some_and(|p| i <= p) {
            return Err(Error::InvalidConfig("flip set must be ascending".into()));
        }
        prev = Some(i);
    }
    let last = *flips.last().unwrap();
    let abs_sum: f64 = flips.iter().map(|&i| alpha_dec[i].abs()).sum();
    let rank = code.info_rank(last).unwrap();
    let j_sum: f64 = code.info_set()[..=rank]
        .iter()
        .fold(0.0, |acc, &j| acc + j_term(alpha_dec[j]));
    Ok(abs_sum + j_sum)
}

/// Builds the pool from a failed initial trial: every information position
/// as a singleton candidate, keeping the `t_max - 1` best.
pub fn seed_pool(outcome: &DecodeOutcome, cfg: &FlipConfig, code: &PolarCode) -> Result<CandidatePool> {
    if outcome.crc_pass {
        return Err(Error::PoolMisuse("seeding from a successful trial"));
    }
    let ctx = MetricCtx::new(code, &outcome.alpha_dec);
    let mut pool = CandidatePool::new(cfg.t_max.saturating_sub(1));
    for &a in code.info_set() {
        let metric = ctx.metric_for(ctx.alpha_dec[a].abs(), a);
        pool.insert(FlipCandidate {
            flips: vec![a],
            metric,
            tried: false,
        });
    }
    Ok(pool)
}

/// After a failed additional trial, scores every one-index extension of the
/// consumed set against that trial's decision LLRs and offers them to the
/// pool.
pub fn extend_pool(
    pool: &mut CandidatePool,
    used: &FlipCandidate,
    outcome: &DecodeOutcome,
    cfg: &FlipConfig,
    code: &PolarCode,
) -> Result<()> {
    if used.flips.len() >= cfg.omega {
        return Err(Error::PoolMisuse("extending a full-size flip set"));
    }
    let last = *used.flips.last().expect("candidates are nonempty");
    let ctx = MetricCtx::new(code, &outcome.alpha_dec);
    let base = ctx.abs_sum(&used.flips);
    let start = code.info_rank(last).unwrap() + 1;
    for &j in &code.info_set()[start..] {
        let metric = ctx.metric_for(base + ctx.alpha_dec[j].abs(), j);
        let mut flips = Vec::with_capacity(used.flips.len() + 1);
        flips.extend_from_slice(&used.flips);
        flips.push(j);
        pool.insert(FlipCandidate {
            flips,
            metric,
            tried: false,
        });
    }
    Ok(())
}

/// One additional trial's bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub flips: Vec<usize>,
    /// Restart location actually used, if the mechanism planned one.
    pub psi: Option<usize>,
    /// Modeled cost of this trial under the active mechanism.
    pub cycles: u64,
    /// Cycles saved against the bare baseline trial.
    pub saving: u64,
}

/// Result of decoding one frame.
#[derive(Debug, Clone)]
pub struct FlipDecodeResult {
    pub u_hat: Vec<u8>,
    pub success: bool,
    /// Trials used, including the initial pass.
    pub tau: usize,
    pub trials: Vec<TrialRecord>,
}

impl FlipDecodeResult {
    pub fn additional_trials(&self) -> usize {
        self.tau - 1
    }

    /// Modeled cost without any mechanism: `tau` bare baseline trials.
    pub fn baseline_cycles(&self, trial_cost: u64) -> u64 {
        self.tau as u64 * trial_cost
    }

    /// Modeled cost with the mechanism's savings applied.
    pub fn mechanism_cycles(&self, trial_cost: u64) -> u64 {
        self.baseline_cycles(trial_cost) - self.trials.iter().map(|t| t.saving).sum::<u64>()
    }
}

/// A configured flip decoder. Immutable once built; one instance is shared
/// across simulation workers, each with its own workspace.
#[derive(Debug, Clone)]
pub struct FlipDecoder {
    code: PolarCode,
    crc: CrcSpec,
    cfg: FlipConfig,
    baseline: Baseline,
    mechanism: Mechanism,
    schedule: Option<NodeSchedule>,
    params: CostParams,
    trial_cost: u64,
    lrt_saving: u64,
}

impl FlipDecoder {
    pub fn new(
        code: PolarCode,
        crc: CrcSpec,
        cfg: FlipConfig,
        baseline: Baseline,
        mechanism: Mechanism,
        params: CostParams,
    ) -> Result<Self> {
        if crc.len() != code.crc_len() {
            return Err(Error::InvalidConfig(format!(
                "CRC spec has {} bits but the code reserves {}",
                crc.len(),
                code.crc_len()
            )));
        }
        let schedule = match baseline {
            Baseline::Fssc => Some(crate::fast::build_schedule(&code, cfg.omega)),
            _ => None,
        };
        let trial_cost = cost::trial_cost(baseline, &code, &params, schedule.as_ref())?;
        let lrt_saving = cost::lrt_trial_saving(&code, &params);
        Ok(Self {
            code,
            crc,
            cfg,
            baseline,
            mechanism,
            schedule,
            params,
            trial_cost,
            lrt_saving,
        })
    }

    pub fn code(&self) -> &PolarCode {
        &self.code
    }

    pub fn crc(&self) -> &CrcSpec {
        &self.crc
    }

    pub fn config(&self) -> &FlipConfig {
        &self.cfg
    }

    pub fn baseline(&self) -> Baseline {
        self.baseline
    }

    pub fn mechanism(&self) -> Mechanism {
        self.mechanism
    }

    pub fn schedule(&self) -> Option<&NodeSchedule> {
        self.schedule.as_ref()
    }

    /// Latency of one bare baseline trial.
    pub fn trial_cost(&self) -> u64 {
        self.trial_cost
    }

    pub fn workspace(&self) -> LlrWorkspace {
        LlrWorkspace::new(self.code.block_len())
    }

    fn run_trial(
        &self,
        alpha_ch: &[f64],
        flips: &[usize],
        restart: Option<&RestartSpec>,
        snapshot: Option<&InitialSnapshot>,
        ws: &mut LlrWorkspace,
    ) -> Result<DecodeOutcome> {
        match self.baseline {
            Baseline::Sc => sc_trial(&self.code, &self.crc, alpha_ch, flips, restart, snapshot, ws),
            Baseline::ScLrt => {
                // Baseline trials start at the first information bit; a
                // mechanism-planned restart overrides that.
                let lrt = RestartSpec::lrt_initial(&self.code);
                let spec = restart.unwrap_or(&lrt);
                sc_trial(&self.code, &self.crc, alpha_ch, flips, Some(spec), snapshot, ws)
            }
            Baseline::Fssc => {
                let schedule = self.schedule.as_ref().expect("FSSC decoder has a schedule");
                fssc_trial(
                    &self.code, schedule, &self.crc, alpha_ch, flips, restart, snapshot, ws,
                )
            }
        }
    }

    /// Per-additional-trial restart plan and its cycle saving.
    fn plan(&self, flips: &[usize]) -> Result<(Option<RestartSpec>, u64)> {
        match self.mechanism {
            Mechanism::None => Ok((None, 0)),
            Mechanism::Lrt => {
                // Restarting at the first information bit is already the
                // ScLrt baseline (and FSSC starts there too); the saving
                // against plain SC is accounted per trial, initial included.
                let saving = if self.baseline == Baseline::Sc {
                    self.lrt_saving
                } else {
                    0
                };
                let spec = plan_restart(
                    &self.code,
                    flips,
                    Mechanism::Lrt,
                    self.baseline,
                    self.schedule.as_ref(),
                )?;
                Ok((Some(spec), saving))
            }
            Mechanism::Srm | Mechanism::Grm => {
                let spec = plan_restart(
                    &self.code,
                    flips,
                    self.mechanism,
                    self.baseline,
                    self.schedule.as_ref(),
                )?;
                let saving = cost::restart_saving(
                    self.baseline,
                    &spec,
                    &self.code,
                    &self.params,
                    self.schedule.as_ref(),
                )?;
                Ok((Some(spec), saving))
            }
        }
    }

    /// Decodes one frame: initial trial, then CRC-gated flip trials from the
    /// candidate pool until success or the trial budget runs out.
    pub fn decode_frame(&self, alpha_ch: &[f64], ws: &mut LlrWorkspace) -> Result<FlipDecodeResult> {
        let initial = self.run_trial(alpha_ch, &[], None, None, ws)?;
        let initial_saving = if self.mechanism == Mechanism::Lrt && self.baseline == Baseline::Sc {
            self.lrt_saving
        } else {
            0
        };
        let mut trials = vec![TrialRecord {
            flips: Vec::new(),
            psi: None,
            cycles: self.trial_cost - initial_saving,
            saving: initial_saving,
        }];
        if initial.crc_pass {
            return Ok(FlipDecodeResult {
                u_hat: initial.u_hat,
                success: true,
                tau: 1,
                trials,
            });
        }
        if self.cfg.t_max == 1 {
            return Ok(FlipDecodeResult {
                u_hat: initial.u_hat,
                success: false,
                tau: 1,
                trials,
            });
        }

        let snapshot = InitialSnapshot::from(&initial);
        let mut pool = seed_pool(&initial, &self.cfg, &self.code)?;
        let mut tau = 1usize;
        while tau < self.cfg.t_max {
            let Some(cand) = pool.pop() else { break };
            let (restart, saving) = self.plan(&cand.flips)?;
            let outcome = self.run_trial(
                alpha_ch,
                &cand.flips,
                restart.as_ref(),
                Some(&snapshot),
                ws,
            )?;
            tau += 1;
            trials.push(TrialRecord {
                flips: cand.flips.clone(),
                psi: restart.as_ref().map(|s| s.psi),
                cycles: self.trial_cost - saving,
                saving,
            });
            if outcome.crc_pass {
                return Ok(FlipDecodeResult {
                    u_hat: outcome.u_hat,
                    success: true,
                    tau,
                    trials,
                });
            }
            if cand.flips.len() < self.cfg.omega {
                extend_pool(&mut pool, &cand, &outcome, &self.cfg, &self.code)?;
            }
        }
        Ok(FlipDecodeResult {
            u_hat: initial.u_hat,
            success: false,
            tau,
            trials,
        })
    }
}
