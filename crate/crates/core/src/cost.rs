//! Analytic execution-time and memory models for a semi-parallel decoder.
//!
//! LLRs are computed by `P` processing elements, one node per clock cycle
//! batch; partial sums are computed by parallel XOR blocks producing `2P`
//! bits per cycle. All arithmetic is exact integer arithmetic. Costs are
//! expressed in clock cycles (CCs).

use crate::code::PolarCode;
use crate::fast::{NodeKind, NodeSchedule};
use crate::flip::FlipConfig;
use crate::restart::{Baseline, RestartKind, RestartSpec};
use crate::{Error, Result};

/// Hardware parameters of the model. The quantization widths enter only the
/// memory estimate, never the decoding datapath.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostParams {
    /// Processing elements.
    pub pe: u64,
    pub q_ch: u64,
    pub q_int: u64,
    pub q_flip: u64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            pe: 64,
            q_ch: 6,
            q_int: 7,
            q_flip: 7,
        }
    }
}

impl CostParams {
    pub fn with_pe(pe: u64) -> Self {
        Self {
            pe,
            ..Self::default()
        }
    }
}

#[inline]
fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

fn log2(n: u64) -> u32 {
    debug_assert!(n.is_power_of_two());
    n.trailing_zeros()
}

/// CCs spent on LLR computations over a full SC tree of size `n`: every
/// node at stage `s` receives its `2^s` LLRs in `ceil(2^s / P)` CCs.
pub fn l_alpha(n: u64, p: u64) -> u64 {
    let stages = log2(n);
    (0..stages)
        .map(|s| (1u64 << (stages - s)) * ceil_div(1 << s, p))
        .sum()
}

/// CCs spent on partial-sum computations, final right-edge combines
/// excluded (they are never consumed).
pub fn l_beta(n: u64, p: u64) -> u64 {
    let stages = log2(n);
    (1..stages)
        .map(|s| ((1u64 << (stages - s)) - 1) * ceil_div(1 << s, 2 * p))
        .sum()
}

/// Partial-sum CCs including the final combines, used for node costs.
pub fn l_beta_full(n: u64, p: u64) -> u64 {
    let stages = log2(n);
    (1..stages)
        .map(|s| (1u64 << (stages - s)) * ceil_div(1 << s, 2 * p))
        .sum()
}

/// Full SC trial latency.
pub fn l_sc(n: u64, p: u64) -> u64 {
    l_alpha(n, p) + l_beta(n, p)
}

/// Latency of decoding one subtree of size `nv` as a standalone code,
/// final partial-sum combines included.
pub fn l_node(nv: u64, p: u64) -> u64 {
    l_alpha(nv, p) + l_beta_full(nv, p)
}

/// LLR CCs skipped by not decoding anything left of `psi`.
pub fn delta_l_alpha(psi: u64, n: u64, p: u64) -> u64 {
    let stages = log2(n);
    (0..stages)
        .map(|s| (psi >> s) * ceil_div(1 << s, p))
        .sum()
}

/// Partial-sum CCs skipped by not decoding anything left of `psi`.
pub fn delta_l_beta(psi: u64, n: u64, p: u64) -> u64 {
    let stages = log2(n);
    (1..stages)
        .map(|s| (psi >> s) * ceil_div(1 << s, 2 * p))
        .sum()
}

pub fn delta_l_alphabeta(psi: u64, n: u64, p: u64) -> u64 {
    delta_l_alpha(psi, n, p) + delta_l_beta(psi, n, p)
}

/// CCs spent restoring the partial sums consumed along the restart path to
/// `psi`: each g-stage `s` re-encodes `2^s` bits through `s` encoding
/// stages at `2P` bits per CC.
pub fn theta(psi: u64, n: u64, p: u64) -> u64 {
    let stages = log2(n);
    (1..stages)
        .filter(|&s| (psi >> s) & 1 == 1)
        .map(|s| ceil_div(1 << s, 2 * p) * s as u64)
        .sum()
}

/// Net execution-time reduction of an SC trial restarted at `psi`.
pub fn delta_l_sc(psi: u64, n: u64, p: u64) -> u64 {
    let gross = delta_l_alphabeta(psi, n, p);
    gross.saturating_sub(theta(psi, n, p))
}

/// Latency of an SC trial that always skips the frozen prefix.
pub fn l_sc_lrt(code: &PolarCode, p: u64) -> u64 {
    let n = code.block_len() as u64;
    l_sc(n, p) - delta_l_alphabeta(code.first_info() as u64, n, p)
}

/// Reduction of a restarted trial against the `SC-LRT` baseline.
pub fn delta_l_sc_lrt(psi: u64, code: &PolarCode, p: u64) -> u64 {
    let n = code.block_len() as u64;
    delta_l_sc(psi, n, p).saturating_sub(delta_l_alphabeta(code.first_info() as u64, n, p))
}

/// CCs a special node saves against plain SC decoding of its subtree: the
/// subtree cost minus the fast decode cost of `ceil(Nv/P)` CCs. Fallback
/// leaf ranges save nothing.
pub fn node_saving(kind: NodeKind, len: u64, p: u64) -> u64 {
    match kind {
        NodeKind::LeafRange => 0,
        _ => l_node(len, p).saturating_sub(ceil_div(len, p)),
    }
}

/// Fast-SSC trial latency: SC minus the savings of every special node.
pub fn l_fssc(n: u64, schedule: &NodeSchedule, p: u64) -> u64 {
    let total: u64 = schedule
        .entries()
        .iter()
        .map(|e| node_saving(e.kind, e.len as u64, p))
        .sum();
    l_sc(n, p) - total
}

/// Reduction of a restarted trial against the Fast-SSC baseline: the SC
/// reduction at `psi` minus what fast decoding already saved on the nodes
/// entirely left of `psi`.
pub fn delta_l_fssc(psi: u64, n: u64, schedule: &NodeSchedule, p: u64) -> u64 {
    let already: u64 = schedule
        .entries()
        .iter()
        .take_while(|e| e.end() as u64 <= psi)
        .map(|e| node_saving(e.kind, e.len as u64, p))
        .sum();
    delta_l_sc(psi, n, p).saturating_sub(already)
}

/// Latency of one baseline trial.
pub fn trial_cost(
    baseline: Baseline,
    code: &PolarCode,
    params: &CostParams,
    schedule: Option<&NodeSchedule>,
) -> Result<u64> {
    let n = code.block_len() as u64;
    Ok(match baseline {
        Baseline::Sc => l_sc(n, params.pe),
        Baseline::ScLrt => l_sc_lrt(code, params.pe),
        Baseline::Fssc => {
            let schedule = schedule.ok_or_else(|| {
                Error::InvalidConfig("FSSC trial cost requires a node schedule".into())
            })?;
            l_fssc(n, schedule, params.pe)
        }
    })
}

/// Cycles a planned restart saves for one additional trial under the given
/// baseline. A degenerate restart (restore + flip + CRC, no tree work)
/// saves the whole trial.
pub fn restart_saving(
    baseline: Baseline,
    spec: &RestartSpec,
    code: &PolarCode,
    params: &CostParams,
    schedule: Option<&NodeSchedule>,
) -> Result<u64> {
    if spec.kind == RestartKind::Degenerate {
        return trial_cost(baseline, code, params, schedule);
    }
    let n = code.block_len() as u64;
    let psi = spec.psi as u64;
    Ok(match baseline {
        Baseline::Sc => delta_l_sc(psi, n, params.pe),
        Baseline::ScLrt => delta_l_sc_lrt(psi, code, params.pe),
        Baseline::Fssc => {
            let schedule = schedule.ok_or_else(|| {
                Error::InvalidConfig("FSSC restart saving requires a node schedule".into())
            })?;
            delta_l_fssc(psi, n, schedule, params.pe)
        }
    })
}

/// The LRT technique's per-trial saving against plain SC; applies to every
/// trial, the initial one included.
pub fn lrt_trial_saving(code: &PolarCode, params: &CostParams) -> u64 {
    delta_l_alphabeta(code.first_info() as u64, code.block_len() as u64, params.pe)
}

/// Memory estimate in bits, split by component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryEstimate {
    /// Channel LLRs, intermediate LLRs, bit estimates and partial sums.
    pub sc_bits: u64,
    /// Flip metrics and candidate sets.
    pub flip_bits: u64,
    /// Initial-trial bit estimates kept for restarts.
    pub rest_bits: u64,
}

impl MemoryEstimate {
    pub fn total(&self) -> u64 {
        self.sc_bits + self.flip_bits + self.rest_bits
    }

    /// Restart-memory overhead relative to the decoder without it.
    pub fn overhead_percent(&self) -> f64 {
        100.0 * self.rest_bits as f64 / (self.sc_bits + self.flip_bits) as f64
    }
}

/// Memory model of an SCF/DSCF decoder, with or without restart support.
pub fn memory_estimate(cfg: &FlipConfig, params: &CostParams, n: u64, with_restart: bool) -> MemoryEstimate {
    let stages = log2(n) as u64;
    let lists = cfg.t_max.saturating_sub(1) as u64;
    MemoryEstimate {
        sc_bits: params.q_ch * n + params.q_int * (n - 1) + 2 * n - 1,
        flip_bits: params.q_flip * lists + cfg.omega as u64 * stages * lists,
        rest_bits: if with_restart { n } else { 0 },
    }
}
