//! Restart planning and execution for additional decoding trials.
//!
//! A restart skips every computation an additional trial shares with the
//! initial one: bit estimates left of the restart location are restored from
//! memory, the decision LLR at the restart location is recomputed along a
//! single root-to-leaf path, and the partial sums that path consumes are
//! rebuilt by re-encoding segments of the restored estimates. Decisions are
//! unchanged; only modeled execution time drops.

use crate::code::{polar_encode, PolarCode};
use crate::fast::{NodeKind, NodeSchedule};
use crate::sc::LlrWorkspace;
use crate::{Error, Result};

/// Baseline trial algorithm a flip decoder is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    Sc,
    /// SC that always skips the all-frozen prefix and starts at `a_0`.
    ScLrt,
    /// Fast-SSC with R0/R1/REP/SPC special nodes.
    Fssc,
}

impl Baseline {
    pub fn label(&self) -> &'static str {
        match self {
            Baseline::Sc => "sc",
            Baseline::ScLrt => "sclrt",
            Baseline::Fssc => "fssc",
        }
    }
}

/// Execution-time reduction mechanism applied to additional trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    None,
    /// Restart at the first information bit.
    Lrt,
    /// Restart at 0 or N/2, whichever is closest left of the first flip.
    Srm,
    /// Restart at the first information bit right of the first flip.
    Grm,
}

impl Mechanism {
    pub fn label(&self) -> &'static str {
        match self {
            Mechanism::None => "none",
            Mechanism::Lrt => "lrt",
            Mechanism::Srm => "srm",
            Mechanism::Grm => "grm",
        }
    }
}

/// How a planned restart enters the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartKind {
    /// Restart path runs to stage 0 and decoding resumes at leaf `psi`.
    Leaf,
    /// Restart path stops at a schedule entry; `psi` is the entry start.
    Node { index: usize },
    /// No information bit right of the flip: restore, flip, check. No tree
    /// computation at all.
    Degenerate,
}

/// A planned restart: location, its binary representation (MSB first) and
/// the per-stage segment offsets used for partial-sum restoration.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartSpec {
    pub psi: usize,
    pub i1: usize,
    pub mechanism: Mechanism,
    pub kind: RestartKind,
    /// Binary representation of `psi`, MSB first, one bit per tree stage.
    pub h_bits: Vec<u8>,
    /// `phi_s` for every stage whose H bit is set.
    pub stage_offsets: Vec<Option<usize>>,
}

impl RestartSpec {
    fn with_kind(stages: usize, psi: usize, i1: usize, mechanism: Mechanism, kind: RestartKind) -> Self {
        let h_bits: Vec<u8> = (0..stages)
            .map(|j| ((psi >> (stages - 1 - j)) & 1) as u8)
            .collect();
        let stage_offsets: Vec<Option<usize>> = (0..stages)
            .map(|s| {
                if (psi >> s) & 1 == 1 {
                    Some(psi & ((1usize << (s + 1)) - 1))
                } else {
                    None
                }
            })
            .collect();
        Self {
            psi,
            i1,
            mechanism,
            kind,
            h_bits,
            stage_offsets,
        }
    }

    pub fn leaf(stages: usize, psi: usize, i1: usize, mechanism: Mechanism) -> Self {
        Self::with_kind(stages, psi, i1, mechanism, RestartKind::Leaf)
    }

    pub fn node(stages: usize, entry_start: usize, index: usize, i1: usize, mechanism: Mechanism) -> Self {
        Self::with_kind(stages, entry_start, i1, mechanism, RestartKind::Node { index })
    }

    pub fn degenerate(stages: usize, i1: usize, mechanism: Mechanism) -> Self {
        Self::with_kind(stages, 0, i1, mechanism, RestartKind::Degenerate)
    }

    /// The baseline restart used by every `SC-LRT` trial, initial ones
    /// included: start at the first information bit.
    pub fn lrt_initial(code: &PolarCode) -> Self {
        Self::leaf(code.stages(), code.first_info(), code.first_info(), Mechanism::Lrt)
    }

    /// Stages where the restart path performs `g` (H bit set), descending.
    pub fn g_stages(&self) -> Vec<usize> {
        let n = self.h_bits.len();
        (0..n).rev().filter(|&s| (self.psi >> s) & 1 == 1).collect()
    }

    /// Stages where the restart path performs `f`, descending.
    pub fn f_stages(&self) -> Vec<usize> {
        let n = self.h_bits.len();
        (0..n).rev().filter(|&s| (self.psi >> s) & 1 == 0).collect()
    }
}

/// Plans the restart for an additional trial with flip set `flips` under the
/// given mechanism and baseline. Fast-SSC baselines anchor restart locations
/// that fall inside a special node to that node's start.
pub fn plan_restart(
    code: &PolarCode,
    flips: &[usize],
    mechanism: Mechanism,
    baseline: Baseline,
    schedule: Option<&NodeSchedule>,
) -> Result<RestartSpec> {
    let i1 = *flips
        .first()
        .ok_or_else(|| Error::InvalidConfig("restart planning needs a nonempty flip set".into()))?;
    let stages = code.stages();
    let n = code.block_len();

    let target = match mechanism {
        Mechanism::None => {
            return Err(Error::InvalidConfig("mechanism `none` plans no restart".into()))
        }
        Mechanism::Lrt => Some(code.first_info()),
        Mechanism::Srm => Some(if i1 >= n / 2 { n / 2 } else { 0 }),
        Mechanism::Grm => code.next_info_after(i1),
    };

    match baseline {
        Baseline::Sc | Baseline::ScLrt => Ok(match target {
            Some(psi) => RestartSpec::leaf(stages, psi, i1, mechanism),
            None => RestartSpec::degenerate(stages, i1, mechanism),
        }),
        Baseline::Fssc => {
            let schedule = schedule.ok_or_else(|| {
                Error::InvalidConfig("FSSC restart planning requires a node schedule".into())
            })?;
            // A flip inside a special node restarts that whole node.
            if mechanism == Mechanism::Grm {
                let entry_idx = schedule.entry_containing(i1);
                let entry = &schedule.entries()[entry_idx];
                if entry.kind != NodeKind::LeafRange {
                    return Ok(RestartSpec::node(stages, entry.start, entry_idx, i1, mechanism));
                }
            }
            let Some(psi) = target else {
                return Ok(RestartSpec::degenerate(stages, i1, mechanism));
            };
            let entry_idx = schedule.entry_containing(psi);
            let entry = &schedule.entries()[entry_idx];
            if entry.kind == NodeKind::LeafRange {
                Ok(RestartSpec::leaf(stages, psi, i1, mechanism))
            } else {
                Ok(RestartSpec::node(stages, entry.start, entry_idx, i1, mechanism))
            }
        }
    }
}

/// Restores the `2^stage` partial sums consumed by the `g` function at
/// `stage` on the restart path to `psi`, by re-encoding the bit-estimate
/// segment starting `phi_stage` positions left of `psi`.
pub fn restore_partial_sums(u_current: &[u8], psi: usize, stage: usize) -> Result<Vec<u8>> {
    if (psi >> stage) & 1 == 0 {
        return Err(Error::InvalidRestart(psi));
    }
    let seg_len = 1usize << stage;
    let offset = psi & ((seg_len << 1) - 1);
    let start = psi - offset;
    let mut beta = u_current[start..start + seg_len].to_vec();
    polar_encode(&mut beta);
    Ok(beta)
}

/// Walks the restart path from the root down to `stop_stage`, performing
/// `f` or `g` per stage as dictated by the binary representation of the
/// restart location and restoring the partial sums each `g` consumes.
/// Intermediate LLRs land in the workspace's regular stage buffers, leaving
/// it in the exact state a full decode would have reached. Returns the
/// first LLR at `stop_stage` (the decision LLR when `stop_stage == 0`).
pub fn execute_restart_path(ws: &mut LlrWorkspace, spec: &RestartSpec, stop_stage: usize) -> f64 {
    let n = ws.stages();
    debug_assert!(stop_stage <= n);
    for s in (stop_stage..n).rev() {
        if (spec.psi >> s) & 1 == 1 {
            ws.restore_left_ps(spec.psi, s);
        }
        ws.refresh_llrs(spec.psi, s + 1, s);
    }
    ws.stage_llrs(stop_stage)[0]
}
