//! Fast-SSC: special-node schedule compilation and node-level decoding.
//!
//! The schedule decomposes the decoding tree greedily, largest node first,
//! into R0 (all frozen), R1 (all information), REP (one information bit at
//! the right edge) and SPC (one frozen bit at the left edge) nodes, subject
//! to the per-order length caps of the hardware this models. Nodes shorter
//! than eight leaves are not specialized (for blocks of eight, the floor
//! drops to four so the classic REP+SPC split of a half-rate length-8 code
//! still applies). Spans matching nothing are decoded leaf by leaf.
//!
//! Node decisions are hard decisions in the node's own LLR domain; the leaf
//! bit estimates are recovered by re-encoding, which for R0/R1/REP
//! reproduces leaf-level min-sum SC exactly (ties aside). SPC deviates from
//! SC by design.

use crate::code::{polar_encode, CrcSpec, PolarCode};
use crate::restart::{execute_restart_path, RestartKind, RestartSpec};
use crate::sc::{hard_decision, sc_trial, DecodeOutcome, InitialSnapshot, LlrWorkspace};
use crate::{Error, Result};
use std::fmt;

/// Special-node length caps. REP and R1 follow the Fast-SCF implementation
/// bounds; SPC shrinks as the flip order grows.
pub fn node_caps(omega: usize) -> NodeCaps {
    let spc = match omega {
        0 | 1 => 64,
        2 => 8,
        _ => 4,
    };
    NodeCaps {
        rep: 32,
        r1: 64,
        spc,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeCaps {
    pub rep: usize,
    pub r1: usize,
    pub spc: usize,
}

/// Smallest span worth specializing in a block of `n` leaves.
fn node_floor(n: usize) -> usize {
    (n / 2).clamp(4, 8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    R0,
    R1,
    Rep,
    Spc,
    /// Fallback: decode these leaves with the plain SC kernel.
    LeafRange,
}

impl NodeKind {
    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::R0 => "R0",
            NodeKind::R1 => "R1",
            NodeKind::Rep => "REP",
            NodeKind::Spc => "SPC",
            NodeKind::LeafRange => "LEAF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeEntry {
    pub kind: NodeKind,
    pub start: usize,
    pub len: usize,
    /// Tree stage: `len == 1 << stage` for tree nodes; leaf ranges carry
    /// stage 0 regardless of length.
    pub stage: usize,
}

impl NodeEntry {
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// Ordered decomposition of the decoding tree for one (code, order) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSchedule {
    entries: Vec<NodeEntry>,
    entry_of: Vec<usize>,
    special_count: usize,
}

impl NodeSchedule {
    pub fn entries(&self) -> &[NodeEntry] {
        &self.entries
    }

    /// Index of the schedule entry containing `leaf`.
    pub fn entry_containing(&self, leaf: usize) -> usize {
        self.entry_of[leaf]
    }

    /// Number of special (non-fallback) nodes, the paper's `q`.
    pub fn special_count(&self) -> usize {
        self.special_count
    }
}

impl fmt::Display for NodeSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "{:<4} start={:<5} len={:<5} stage={}",
                e.kind.label(),
                e.start,
                e.len,
                e.stage
            )?;
        }
        Ok(())
    }
}

/// Compiles the node schedule for `code` under flip order `omega`.
pub fn build_schedule(code: &PolarCode, omega: usize) -> NodeSchedule {
    let mask: Vec<bool> = (0..code.block_len()).map(|i| code.is_info(i)).collect();
    schedule_from_mask(&mask, omega)
}

/// Compiles a schedule from a raw information mask, for codes not built
/// through `PolarCode`.
pub fn schedule_from_mask(is_info: &[bool], omega: usize) -> NodeSchedule {
    let caps = node_caps(omega);
    let n = is_info.len();
    let floor = node_floor(n);
    let mut raw = Vec::new();
    descend(is_info, 0, n, floor, &caps, &mut raw);

    // Coalesce adjacent fallback leaves into ranges.
    let mut entries: Vec<NodeEntry> = Vec::new();
    for e in raw {
        if e.kind == NodeKind::LeafRange {
            if let Some(last) = entries.last_mut() {
                if last.kind == NodeKind::LeafRange && last.end() == e.start {
                    last.len += e.len;
                    continue;
                }
            }
        }
        entries.push(e);
    }

    let mut entry_of = vec![0usize; n];
    for (idx, e) in entries.iter().enumerate() {
        for leaf in e.start..e.end() {
            entry_of[leaf] = idx;
        }
    }
    let special_count = entries
        .iter()
        .filter(|e| e.kind != NodeKind::LeafRange)
        .count();
    NodeSchedule {
        entries,
        entry_of,
        special_count,
    }
}

fn descend(
    is_info: &[bool],
    start: usize,
    len: usize,
    floor: usize,
    caps: &NodeCaps,
    out: &mut Vec<NodeEntry>,
) {
    let span = &is_info[start..start + len];
    if len >= floor {
        let stage = len.trailing_zeros() as usize;
        let info_count = span.iter().filter(|&&b| b).count();
        let kind = if info_count == 0 {
            Some(NodeKind::R0)
        } else if info_count == len && len <= caps.r1 {
            Some(NodeKind::R1)
        } else if info_count == 1 && span[len - 1] && len <= caps.rep {
            Some(NodeKind::Rep)
        } else if info_count == len - 1 && !span[0] && len <= caps.spc {
            Some(NodeKind::Spc)
        } else {
            None
        };
        if let Some(kind) = kind {
            out.push(NodeEntry {
                kind,
                start,
                len,
                stage,
            });
            return;
        }
    }
    if len > 1 && len >= floor {
        descend(is_info, start, len / 2, floor, caps, out);
        descend(is_info, start + len / 2, len / 2, floor, caps, out);
    } else {
        out.push(NodeEntry {
            kind: NodeKind::LeafRange,
            start,
            len,
            stage: 0,
        });
    }
}

/// Output of one special-node decode.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDecision {
    /// Leaf bit estimates over the node's span.
    pub u: Vec<u8>,
    /// Partial sums handed to the parent (the re-encoded estimates).
    pub beta: Vec<u8>,
    /// Per-position decision LLRs exposed to the flip metric: the node
    /// input LLR for R1/SPC positions, the accumulated LLR for the REP
    /// information bit, zero at frozen positions.
    pub alpha_dec: Vec<f64>,
}

/// Decodes one special node from its input LLRs, applying externally
/// requested flips at node-local information positions.
pub fn decode_special_node(kind: NodeKind, alpha_v: &[f64], flips: &[usize]) -> Result<NodeDecision> {
    let len = alpha_v.len();
    let mut beta = vec![0u8; len];
    let mut alpha_dec = vec![0.0f64; len];
    match kind {
        NodeKind::R0 => {
            if !flips.is_empty() {
                return Err(Error::FrozenFlip(flips[0]));
            }
        }
        NodeKind::R1 => {
            for (i, &a) in alpha_v.iter().enumerate() {
                beta[i] = hard_decision(a);
                alpha_dec[i] = a;
            }
            for &i in flips {
                beta[i] ^= 1;
            }
        }
        NodeKind::Rep => {
            let sum: f64 = alpha_v.iter().sum();
            let mut bit = hard_decision(sum);
            for &i in flips {
                if i != len - 1 {
                    return Err(Error::FrozenFlip(i));
                }
                bit ^= 1;
            }
            beta.fill(bit);
            alpha_dec[len - 1] = sum;
        }
        NodeKind::Spc => {
            // Hard decisions everywhere, then the parity constraint is
            // enforced on the least reliable position. External flips
            // re-break parity, so another least-reliable position (outside
            // the flip set) restores it.
            for i in 0..len {
                beta[i] = hard_decision(alpha_v[i]);
            }
            for i in 1..len {
                alpha_dec[i] = alpha_v[i];
            }
            let least = |excluded: &[usize]| -> usize {
                (0..len)
                    .filter(|i| !excluded.contains(i))
                    .min_by(|&a, &b| alpha_v[a].abs().partial_cmp(&alpha_v[b].abs()).unwrap())
                    .expect("SPC node is nonempty")
            };
            let parity = |b: &[u8]| b.iter().fold(0u8, |acc, &x| acc ^ x);
            if parity(&beta) == 1 {
                beta[least(&[])] ^= 1;
            }
            for &i in flips {
                if i == 0 {
                    return Err(Error::FrozenFlip(0));
                }
                beta[i] ^= 1;
            }
            if parity(&beta) == 1 {
                beta[least(flips)] ^= 1;
            }
        }
        NodeKind::LeafRange => {
            return Err(Error::InvalidConfig("leaf ranges are not special nodes".into()))
        }
    }
    let mut u = beta.clone();
    polar_encode(&mut u);
    Ok(NodeDecision { u, beta, alpha_dec })
}

fn local_flips(flips: &[usize], start: usize, end: usize) -> Vec<usize> {
    let lo = flips.partition_point(|&f| f < start);
    let hi = flips.partition_point(|&f| f < end);
    flips[lo..hi].iter().map(|&f| f - start).collect()
}

fn process_entry(
    ws: &mut LlrWorkspace,
    code: &PolarCode,
    entry: &NodeEntry,
    flips: &[usize],
    refresh: bool,
) -> Result<()> {
    match entry.kind {
        NodeKind::LeafRange => {
            ws.run_leaves(code, flips, entry.start, entry.end());
        }
        kind => {
            if refresh {
                let top = ws.refresh_top(entry.start);
                ws.refresh_llrs(entry.start, top, entry.stage);
            }
            let alpha_v = ws.stage_llrs(entry.stage).to_vec();
            let locals = local_flips(flips, entry.start, entry.end());
            let decision = decode_special_node(kind, &alpha_v, &locals)?;
            ws.u_hat[entry.start..entry.end()].copy_from_slice(&decision.u);
            ws.alpha_dec[entry.start..entry.end()].copy_from_slice(&decision.alpha_dec);
            ws.combine_up(entry.end() - 1, entry.stage, &decision.beta);
        }
    }
    Ok(())
}

fn finish(ws: &LlrWorkspace, code: &PolarCode, crc: &CrcSpec) -> Result<DecodeOutcome> {
    let payload = code.extract_payload(&ws.u_hat);
    let crc_pass = crc.check(&payload, code.k_tot())?;
    Ok(DecodeOutcome {
        u_hat: ws.u_hat.clone(),
        alpha_dec: ws.alpha_dec.clone(),
        crc_pass,
        model_cycles: 0,
    })
}

/// One Fast-SSC decoding trial: the SC traversal with special nodes decoded
/// in one shot. Supports the same flip and restart semantics as `sc_trial`;
/// restart locations are node-aligned by planning.
pub fn fssc_trial(
    code: &PolarCode,
    schedule: &NodeSchedule,
    crc: &CrcSpec,
    alpha_ch: &[f64],
    flips: &[usize],
    restart: Option<&RestartSpec>,
    snapshot: Option<&InitialSnapshot>,
    ws: &mut LlrWorkspace,
) -> Result<DecodeOutcome> {
    if alpha_ch.len() != code.block_len() {
        return Err(Error::LengthMismatch {
            expected: code.block_len(),
            got: alpha_ch.len(),
        });
    }

    let Some(spec) = restart else {
        ws.load(alpha_ch);
        for entry in schedule.entries() {
            process_entry(ws, code, entry, flips, true)?;
        }
        return finish(ws, code, crc);
    };

    match spec.kind {
        RestartKind::Degenerate => {
            // Identical to the SC degenerate restart: restore, flip, check.
            sc_trial(code, crc, alpha_ch, flips, Some(spec), snapshot, ws)
        }
        RestartKind::Node { index } => {
            let entry = schedule.entries()[index];
            debug_assert_eq!(entry.start, spec.psi);
            ws.load(alpha_ch);
            restore_prefix_fssc(ws, code, flips, snapshot, entry.start)?;
            execute_restart_path(ws, spec, entry.stage);
            process_entry(ws, code, &entry, flips, false)?;
            for entry in &schedule.entries()[index + 1..] {
                process_entry(ws, code, entry, flips, true)?;
            }
            finish(ws, code, crc)
        }
        RestartKind::Leaf => {
            let psi = spec.psi;
            let index = schedule.entry_containing(psi);
            let entry = schedule.entries()[index];
            if entry.kind != NodeKind::LeafRange {
                return Err(Error::InvalidRestart(psi));
            }
            ws.load(alpha_ch);
            restore_prefix_fssc(ws, code, flips, snapshot, psi)?;
            execute_restart_path(ws, spec, 0);
            let flip = flips.binary_search(&psi).is_ok();
            ws.decide_leaf(psi, code.is_info(psi), flip);
            let bit = [ws.u_hat[psi]];
            ws.combine_up(psi, 0, &bit);
            ws.run_leaves(code, flips, psi + 1, entry.end());
            for entry in &schedule.entries()[index + 1..] {
                process_entry(ws, code, entry, flips, true)?;
            }
            finish(ws, code, crc)
        }
    }
}

fn restore_prefix_fssc(
    ws: &mut LlrWorkspace,
    code: &PolarCode,
    flips: &[usize],
    snapshot: Option<&InitialSnapshot>,
    limit: usize,
) -> Result<()> {
    match snapshot {
        Some(snap) => {
            ws.u_hat[..limit].copy_from_slice(&snap.u_hat[..limit]);
            ws.alpha_dec[..limit].copy_from_slice(&snap.alpha_dec[..limit]);
        }
        None => {
            if code.info_set().first().is_some_and(|&a0| a0 < limit) {
                return Err(Error::MissingRestartEstimates);
            }
            ws.u_hat[..limit].fill(0);
        }
    }
    for &f in flips.iter().take_while(|&&f| f < limit) {
        ws.u_hat[f] ^= 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{frame_rng, transmit, ChannelConfig};
    use crate::code::polar_encode_to_vec;
    use crate::sc::{f_min_sum, g_func};
    use rand::prelude::*;

    fn code_8_4() -> PolarCode {
        PolarCode::new(8, 4, 0, &[0, 1, 2, 4, 3, 5, 6, 7]).unwrap()
    }

    #[test]
    fn schedule_8_4_is_rep_plus_spc() {
        let code = code_8_4();
        let s = build_schedule(&code, 1);
        let kinds: Vec<(NodeKind, usize, usize)> =
            s.entries().iter().map(|e| (e.kind, e.start, e.len)).collect();
        assert_eq!(
            kinds,
            vec![(NodeKind::Rep, 0, 4), (NodeKind::Spc, 4, 4)]
        );
        assert_eq!(s.special_count(), 2);
    }

    #[test]
    fn schedule_all_frozen_is_single_r0() {
        let mask = vec![false; 64];
        let s = schedule_from_mask(&mask, 1);
        assert_eq!(s.entries().len(), 1);
        assert_eq!(s.entries()[0].kind, NodeKind::R0);
        assert_eq!(s.entries()[0].len, 64);
    }

    #[test]
    fn schedule_caps_split_spc8_at_omega3() {
        // 16-leaf span: left half SPC(8)-shaped, right half R1(8).
        let mut mask = vec![true; 16];
        mask[0] = false;
        let s3 = schedule_from_mask(&mask, 3);
        assert!(s3.entries().iter().all(|e| e.kind != NodeKind::Spc || e.len <= 4));
        let s1 = schedule_from_mask(&mask, 1);
        assert!(s1.entries().iter().any(|e| e.kind == NodeKind::Spc && e.len == 16));
    }

    #[test]
    fn schedule_tiles_without_gaps() {
        for (n, k, omega) in [(64usize, 8usize, 1usize), (64, 32, 2), (256, 117, 3), (1024, 523, 3)] {
            let code = PolarCode::new_5g(n, k, 0).unwrap();
            let s = build_schedule(&code, omega);
            let mut next = 0usize;
            for e in s.entries() {
                assert_eq!(e.start, next);
                next = e.end();
                match e.kind {
                    NodeKind::R0 => assert!((e.start..e.end()).all(|i| !code.is_info(i))),
                    NodeKind::R1 => assert!((e.start..e.end()).all(|i| code.is_info(i))),
                    NodeKind::Rep => {
                        assert!(code.is_info(e.end() - 1));
                        assert!((e.start..e.end() - 1).all(|i| !code.is_info(i)));
                    }
                    NodeKind::Spc => {
                        assert!(!code.is_info(e.start));
                        assert!((e.start + 1..e.end()).all(|i| code.is_info(i)));
                    }
                    NodeKind::LeafRange => {}
                }
            }
            assert_eq!(next, n);
        }
    }

    #[test]
    fn rep_node_by_hand() {
        let d = decode_special_node(NodeKind::Rep, &[1.0, -2.0, 3.0, -4.0], &[]).unwrap();
        // alpha_dec = -2, info bit 1, leaf bits (0,0,0,1), beta all ones
        assert_eq!(d.alpha_dec[3], -2.0);
        assert_eq!(d.u, vec![0, 0, 0, 1]);
        assert_eq!(d.beta, vec![1, 1, 1, 1]);
    }

    #[test]
    fn spc_node_by_hand() {
        let d = decode_special_node(NodeKind::Spc, &[2.0, -1.0, 3.0, 4.0], &[]).unwrap();
        // HD = [0,1,0,0] with surrogate zero, parity 1, flip index 1
        assert_eq!(d.beta, vec![0, 0, 0, 0]);
        assert_eq!(d.u, vec![0, 0, 0, 0]);
    }

    #[test]
    fn r1_node_by_hand() {
        let d = decode_special_node(NodeKind::R1, &[-1.0, 2.0, -3.0, 4.0], &[]).unwrap();
        assert_eq!(d.beta, vec![1, 0, 1, 0]);
        assert_eq!(d.u, polar_encode_to_vec(&[1, 0, 1, 0]));
    }

    #[test]
    fn spc_flip_refixes_parity() {
        let d = decode_special_node(NodeKind::Spc, &[2.0, -1.0, 3.0, 4.0], &[2]).unwrap();
        // baseline beta = [0,0,0,0]; external flip at 2 breaks parity; the
        // least reliable other position (1) restores it.
        assert_eq!(d.beta.iter().fold(0, |a, &b| a ^ b), 0);
        assert_eq!(d.beta[2], 1);
        assert_eq!(d.beta, vec![0, 1, 1, 0]);
    }

    /// Leaf-level min-sum SC over one subtree, used as the node oracle.
    fn sc_subtree(llrs: &[f64], is_info: &[bool]) -> (Vec<u8>, Vec<u8>) {
        let n = llrs.len();
        if n == 1 {
            let bit = if is_info[0] { hard_decision(llrs[0]) } else { 0 };
            return (vec![bit], vec![bit]);
        }
        let half = n / 2;
        let left_llrs: Vec<f64> = (0..half)
            .map(|j| f_min_sum(llrs[j], llrs[j + half]))
            .collect();
        let (ul, bl) = sc_subtree(&left_llrs, &is_info[..half]);
        let right_llrs: Vec<f64> = (0..half)
            .map(|j| g_func(llrs[j], llrs[j + half], bl[j]))
            .collect();
        let (ur, br) = sc_subtree(&right_llrs, &is_info[half..]);
        let mut u = ul;
        u.extend(ur);
        let beta: Vec<u8> = (0..half)
            .map(|j| bl[j] ^ br[j])
            .chain(br.iter().copied())
            .collect();
        (u, beta)
    }

    #[test]
    fn r0_r1_rep_match_leaf_level_sc() {
        let mut rng = frame_rng(23, 0);
        for len in [4usize, 8, 16, 32] {
            for _ in 0..200 {
                let alpha: Vec<f64> = (0..len)
                    .map(|_| loop {
                        let v: f64 = rng.gen_range(-4.0..4.0);
                        if v.abs() > 1e-9 {
                            break v;
                        }
                    })
                    .collect();
                // R0
                let mask = vec![false; len];
                let (u_ref, b_ref) = sc_subtree(&alpha, &mask);
                let d = decode_special_node(NodeKind::R0, &alpha, &[]).unwrap();
                assert_eq!((d.u, d.beta), (u_ref, b_ref));
                // R1
                let mask = vec![true; len];
                let (u_ref, b_ref) = sc_subtree(&alpha, &mask);
                let d = decode_special_node(NodeKind::R1, &alpha, &[]).unwrap();
                assert_eq!((d.u.clone(), d.beta.clone()), (u_ref, b_ref));
                // REP
                let mut mask = vec![false; len];
                *mask.last_mut().unwrap() = true;
                let (u_ref, b_ref) = sc_subtree(&alpha, &mask);
                let d = decode_special_node(NodeKind::Rep, &alpha, &[]).unwrap();
                assert_eq!((d.u.clone(), d.beta.clone()), (u_ref, b_ref));
            }
        }
    }

    #[test]
    fn fssc_noiseless_roundtrip() {
        let crc = CrcSpec::crc2();
        let code = PolarCode::new_5g(64, 28, 2).unwrap();
        let schedule = build_schedule(&code, 1);
        let cfg = ChannelConfig::noiseless(code.rate()).unwrap();
        let mut ws = LlrWorkspace::new(64);
        let mut rng = frame_rng(31, 0);
        for _ in 0..20 {
            let info: Vec<u8> = (0..code.k()).map(|_| rng.gen_range(0..2u8)).collect();
            let payload = crc.attach(&info, code.k()).unwrap();
            let mut x = code.place_payload(&payload).unwrap();
            polar_encode(&mut x);
            let llr = transmit(&x, &cfg, &mut rng);
            let out = fssc_trial(&code, &schedule, &crc, &llr, &[], None, None, &mut ws).unwrap();
            assert!(out.crc_pass);
            assert_eq!(code.extract_payload(&out.u_hat), payload);
        }
    }

    #[test]
    fn fssc_agrees_with_sc_on_spc_free_codes() {
        // REP/R0/R1-only schedules decode bit-identically to plain SC.
        // Info sets chosen so the decomposition contains no SPC node.
        let crc = CrcSpec::crc2();
        let mut rng = frame_rng(37, 0);
        let layouts: [(usize, Vec<usize>); 2] = [
            (64, (56..64).collect()),
            (64, std::iter::once(31).chain(48..64).collect()),
        ];
        for (n, info) in layouts {
            let frozen: Vec<usize> = (0..n).filter(|i| !info.contains(i)).collect();
            let order: Vec<usize> = frozen.into_iter().chain(info.iter().copied()).collect();
            let code = PolarCode::new(n, info.len() - 2, 2, &order).unwrap();
            let schedule = build_schedule(&code, 1);
            assert!(schedule.entries().iter().all(|e| e.kind != NodeKind::Spc));
            assert!(schedule.entries().iter().any(|e| e.kind != NodeKind::LeafRange));
            let cfg = ChannelConfig::new(1.0, code.rate()).unwrap();
            let mut ws = LlrWorkspace::new(n);
            for _ in 0..50 {
                let x = vec![0u8; n];
                let llr = transmit(&x, &cfg, &mut rng);
                let fast = fssc_trial(&code, &schedule, &crc, &llr, &[], None, None, &mut ws).unwrap();
                let plain = sc_trial(&code, &crc, &llr, &[], None, None, &mut ws).unwrap();
                assert_eq!(fast.u_hat, plain.u_hat);
                for &a in code.info_set() {
                    assert_eq!(fast.u_hat[a], plain.u_hat[a]);
                }
            }
        }
    }
}
