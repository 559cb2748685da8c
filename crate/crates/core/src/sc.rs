//! Successive-cancellation tree decoding over a stage-indexed workspace.
//!
//! The decoder walks leaves left to right. LLRs live in one buffer per tree
//! stage (`2^s` entries at stage `s`); partial sums live in one left-sibling
//! buffer per stage (`2^s` bits at stage `s`), which together mirror the
//! `alpha_int` / `beta_int` memories of a semi-parallel decoder. The same
//! kernel serves full decoding, flip trials, Fast-SSC node dispatch and
//! mid-tree restarts.

use crate::code::{polar_encode, CrcSpec, PolarCode};
use crate::restart::{execute_restart_path, RestartKind, RestartSpec};
use crate::{Error, Result};

/// Min-sum `f`: `sgn(a1) * sgn(a2) * min(|a1|, |a2|)`, with `sgn(0) = +1` so
/// downstream hard decisions resolve ties to bit 0.
#[inline]
pub fn f_min_sum(a1: f64, a2: f64) -> f64 {
    let mag = a1.abs().min(a2.abs());
    if (a1 < 0.0) != (a2 < 0.0) {
        -mag
    } else {
        mag
    }
}

/// `g`: `(1 - 2*beta) * a1 + a2`.
#[inline]
pub fn g_func(a1: f64, a2: f64, beta: u8) -> f64 {
    if beta == 0 {
        a1 + a2
    } else {
        a2 - a1
    }
}

/// Hard decision: non-negative LLR decodes to 0.
#[inline]
pub fn hard_decision(a: f64) -> u8 {
    u8::from(a < 0.0)
}

/// One decoding trial's result.
#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    /// Bit estimates for all `N` leaves.
    pub u_hat: Vec<u8>,
    /// Decision LLRs. Authoritative at information positions; for a
    /// restarted trial the prefix left of the restart location is carried
    /// over from the initial trial.
    pub alpha_dec: Vec<f64>,
    /// CRC verdict over the information-set payload.
    pub crc_pass: bool,
    /// Analytic cycle cost of this trial; filled in by the cost model.
    pub model_cycles: u64,
}

/// Frozen copy of the initial trial used by restarted additional trials.
#[derive(Debug, Clone)]
pub struct InitialSnapshot {
    pub u_hat: Vec<u8>,
    pub alpha_dec: Vec<f64>,
}

impl From<&DecodeOutcome> for InitialSnapshot {
    fn from(o: &DecodeOutcome) -> Self {
        Self {
            u_hat: o.u_hat.clone(),
            alpha_dec: o.alpha_dec.clone(),
        }
    }
}

/// Per-trial decoder state: stage-indexed LLRs, left-sibling partial sums,
/// bit estimates and decision LLRs.
#[derive(Debug, Clone)]
pub struct LlrWorkspace {
    n_log: usize,
    block_len: usize,
    /// `alpha[s]` holds `2^s` LLRs; `alpha[n_log]` is the channel vector.
    alpha: Vec<Vec<f64>>,
    /// `left_ps[s]` holds the partial sums of the left sibling at stage `s`
    /// whose right sibling is pending.
    left_ps: Vec<Vec<u8>>,
    cur: Vec<u8>,
    scratch: Vec<u8>,
    pub u_hat: Vec<u8>,
    pub alpha_dec: Vec<f64>,
}

impl LlrWorkspace {
    pub fn new(block_len: usize) -> Self {
        assert!(block_len.is_power_of_two() && block_len >= 2);
        let n_log = block_len.trailing_zeros() as usize;
        Self {
            n_log,
            block_len,
            alpha: (0..=n_log).map(|s| vec![0.0; 1 << s]).collect(),
            left_ps: (0..n_log).map(|s| vec![0u8; 1 << s]).collect(),
            cur: vec![0u8; block_len],
            scratch: vec![0u8; block_len],
            u_hat: vec![0u8; block_len],
            alpha_dec: vec![0.0; block_len],
        }
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn stages(&self) -> usize {
        self.n_log
    }

    /// Loads channel LLRs and clears per-trial state.
    pub fn load(&mut self, alpha_ch: &[f64]) {
        assert_eq!(alpha_ch.len(), self.block_len);
        self.alpha[self.n_log].copy_from_slice(alpha_ch);
        for buf in &mut self.left_ps {
            buf.fill(0);
        }
        self.u_hat.fill(0);
        self.alpha_dec.fill(0.0);
    }

    /// LLR vector currently held at `stage` (the node the traversal is in).
    pub fn stage_llrs(&self, stage: usize) -> &[f64] {
        &self.alpha[stage]
    }

    #[cfg(test)]
    pub(crate) fn left_ps(&self, stage: usize) -> &[u8] {
        &self.left_ps[stage]
    }

    /// Recomputes `alpha[s]` for `s` in `stop..top`, descending along the
    /// path to `leaf`. Stage `s` applies `g` when bit `s` of `leaf` is set,
    /// `f` otherwise.
    pub(crate) fn refresh_llrs(&mut self, leaf: usize, top: usize, stop: usize) {
        for s in (stop..top).rev() {
            let half = 1 << s;
            let (lo, hi) = self.alpha.split_at_mut(s + 1);
            let dst = &mut lo[s];
            let src = &hi[0];
            if (leaf >> s) & 1 == 0 {
                for j in 0..half {
                    dst[j] = f_min_sum(src[j], src[j + half]);
                }
            } else {
                let ps = &self.left_ps[s];
                for j in 0..half {
                    dst[j] = g_func(src[j], src[j + half], ps[j]);
                }
            }
        }
    }

    /// Highest stage whose LLRs must be recomputed for `leaf` in a
    /// left-to-right sweep, plus one.
    #[inline]
    pub(crate) fn refresh_top(&self, leaf: usize) -> usize {
        if leaf == 0 {
            self.n_log
        } else {
            leaf.trailing_zeros() as usize + 1
        }
    }

    /// Records the decision at `leaf` from `alpha[0]`.
    pub(crate) fn decide_leaf(&mut self, leaf: usize, is_info: bool, flip: bool) {
        let llr = self.alpha[0][0];
        self.alpha_dec[leaf] = llr;
        self.u_hat[leaf] = if is_info {
            hard_decision(llr) ^ u8::from(flip)
        } else {
            0
        };
    }

    /// Propagates the partial sums of a completed subtree upward. The
    /// subtree sits at `from_stage` and ends at `last_leaf`; `beta` holds its
    /// `2^from_stage` partial sums. Combining stops at the first stage where
    /// the subtree is a left child (storing there), or at the root
    /// (discarding: the final right-edge combine is never consumed).
    pub(crate) fn combine_up(&mut self, last_leaf: usize, from_stage: usize, beta: &[u8]) {
        debug_assert_eq!(beta.len(), 1 << from_stage);
        let mut len = beta.len();
        self.cur[..len].copy_from_slice(beta);
        let mut s = from_stage;
        while (last_leaf >> s) & 1 == 1 {
            {
                let left = &self.left_ps[s];
                for j in 0..len {
                    self.scratch[j] = left[j] ^ self.cur[j];
                    self.scratch[j + len] = self.cur[j];
                }
            }
            std::mem::swap(&mut self.cur, &mut self.scratch);
            s += 1;
            len *= 2;
            if s == self.n_log {
                return;
            }
        }
        self.left_ps[s][..len].copy_from_slice(&self.cur[..len]);
    }

    /// Decodes leaves `[from, to)` in order, applying `flips` (sorted
    /// information positions).
    pub(crate) fn run_leaves(&mut self, code: &PolarCode, flips: &[usize], from: usize, to: usize) {
        for leaf in from..to {
            let top = self.refresh_top(leaf);
            self.refresh_llrs(leaf, top, 0);
            let flip = flips.binary_search(&leaf).is_ok();
            self.decide_leaf(leaf, code.is_info(leaf), flip);
            let bit = [self.u_hat[leaf]];
            self.combine_up(leaf, 0, &bit);
        }
    }

    /// Restores the left-sibling partial sums at `stage` from already-known
    /// bit estimates, by re-encoding the segment that Definition-style
    /// restarts prescribe.
    pub(crate) fn restore_left_ps(&mut self, psi: usize, stage: usize) {
        let seg_len = 1usize << stage;
        let offset = psi & ((seg_len << 1) - 1);
        let start = psi - offset;
        self.scratch[..seg_len].copy_from_slice(&self.u_hat[start..start + seg_len]);
        polar_encode(&mut self.scratch[..seg_len]);
        let (dst, src) = (&mut self.left_ps[stage], &self.scratch[..seg_len]);
        dst.copy_from_slice(src);
    }
}

fn validate_flips(code: &PolarCode, flips: &[usize]) -> Result<()> {
    let mut prev = None;
    for &idx in flips {
        if idx >= code.block_len() || !code.is_info(idx) {
            return Err(Error::FrozenFlip(idx));
        }
        if let Some(p) = prev {
            if idx <= p {
                return Err(Error::InvalidConfig("flip set must be ascending".into()));
            }
        }
        prev = Some(idx);
    }
    Ok(())
}

fn finish_outcome(ws: &LlrWorkspace, code: &PolarCode, crc: &CrcSpec) -> Result<DecodeOutcome> {
    let payload = code.extract_payload(&ws.u_hat);
    let crc_pass = crc.check(&payload, code.k_tot())?;
    Ok(DecodeOutcome {
        u_hat: ws.u_hat.clone(),
        alpha_dec: ws.alpha_dec.clone(),
        crc_pass,
        model_cycles: 0,
    })
}

/// Copies the pre-restart prefix into the workspace: bit estimates from the
/// snapshot with flips left of `limit` applied, decision LLRs carried over.
fn restore_prefix(
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
            // Only legal when the entire prefix is frozen.
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

/// One SC decoding trial.
///
/// Without a restart this is a full left-to-right traversal with the given
/// flips. With a restart, the prefix left of the restart location is
/// restored from the snapshot (flip applied), the restart path recomputes
/// the decision LLR at the restart location, and decoding resumes normally;
/// the outcome is bit- and value-identical to the same trial without the
/// restart.
pub fn sc_trial(
    code: &PolarCode,
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
    validate_flips(code, flips)?;
    ws.load(alpha_ch);

    let Some(spec) = restart else {
        ws.run_leaves(code, flips, 0, code.block_len());
        return finish_outcome(ws, code, crc);
    };

    match spec.kind {
        RestartKind::Degenerate => {
            let snap = snapshot.ok_or(Error::MissingRestartEstimates)?;
            ws.u_hat.copy_from_slice(&snap.u_hat);
            ws.alpha_dec.copy_from_slice(&snap.alpha_dec);
            for &f in flips {
                ws.u_hat[f] ^= 1;
            }
            finish_outcome(ws, code, crc)
        }
        RestartKind::Leaf => {
            let psi = spec.psi;
            if psi >= code.block_len() {
                return Err(Error::InvalidRestart(psi));
            }
            restore_prefix(ws, code, flips, snapshot, psi)?;
            execute_restart_path(ws, spec, 0);
            let flip = flips.binary_search(&psi).is_ok();
            if flip && !code.is_info(psi) {
                return Err(Error::FrozenFlip(psi));
            }
            ws.decide_leaf(psi, code.is_info(psi), flip);
            let bit = [ws.u_hat[psi]];
            ws.combine_up(psi, 0, &bit);
            ws.run_leaves(code, flips, psi + 1, code.block_len());
            finish_outcome(ws, code, crc)
        }
        RestartKind::Node { .. } => Err(Error::InvalidRestart(spec.psi)),
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{frame_rng, transmit, ChannelConfig};
    use crate::code::polar_encode_to_vec;
    use rand::prelude::*;

    fn small_code() -> PolarCode {
        PolarCode::new(8, 4, 0, &[0, 1, 2, 4, 3, 5, 6, 7]).unwrap()
    }

    fn frozen_mask(code: &PolarCode) -> Vec<bool> {
        (0..code.block_len()).map(|i| !code.is_info(i)).collect()
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_min_sum(2.0, -3.0), -2.0);
        assert_eq!(f_min_sum(0.0, 7.0), 0.0);
        assert_eq!(f_min_sum(-4.0, -5.0), 4.0);
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_func(1.0, 2.0, 0), 3.0);
        assert_eq!(g_func(1.0, 2.0, 1), 1.0);
        assert_eq!(g_func(-2.0, 5.0, 1), 7.0);
    }

    #[test]
    fn hd_tie_rule() {
        assert_eq!(hard_decision(0.0), 0);
        assert_eq!(hard_decision(-0.0), 0);
        assert_eq!(hard_decision(-1e-300), 1);
    }

    #[test]
    fn noiseless_all_zero() {
        let crc = CrcSpec::crc2();
        let code = PolarCode::new(8, 2, 2, &[0, 1, 2, 4, 3, 5, 6, 7]).unwrap();
        let cfg = ChannelConfig::noiseless(code.rate()).unwrap();
        let llr = transmit(&vec![0u8; 8], &cfg, &mut frame_rng(0, 0));
        let mut ws = LlrWorkspace::new(8);
        let out = sc_trial(&code, &crc, &llr, &[], None, None, &mut ws).unwrap();
        assert!(out.u_hat.iter().all(|&b| b == 0));
        assert!(out.crc_pass);
    }

    #[test]
    fn noiseless_recovers_random_messages() {
        let crc = CrcSpec::crc11();
        let code = PolarCode::new_5g(64, 21, 11).unwrap();
        let cfg = ChannelConfig::noiseless(code.rate()).unwrap();
        let mut rng = frame_rng(5, 0);
        let mut ws = LlrWorkspace::new(64);
        for _ in 0..25 {
            let info: Vec<u8> = (0..code.k()).map(|_| rng.gen_range(0..2u8)).collect();
            let payload = crc.attach(&info, code.k()).unwrap();
            let mut x = code.place_payload(&payload).unwrap();
            polar_encode(&mut x);
            let llr = transmit(&x, &cfg, &mut rng);
            let out = sc_trial(&code, &crc, &llr, &[], None, None, &mut ws).unwrap();
            assert!(out.crc_pass);
            assert_eq!(code.extract_payload(&out.u_hat), payload);
        }
    }

    #[test]
    fn matches_recursive_reference() {
        let crc = CrcSpec::crc2();
        for (n, k) in [(16usize, 6usize), (64, 21), (256, 117)] {
            let code = PolarCode::new_5g(n, k, 2).unwrap();
            let frozen = frozen_mask(&code);
            let cfg = ChannelConfig::new(1.0, code.rate()).unwrap();
            let mut ws = LlrWorkspace::new(n);
            for trial in 0..20u64 {
                let mut rng = frame_rng(99, trial);
                let info: Vec<u8> = (0..code.k()).map(|_| rng.gen_range(0..2u8)).collect();
                let payload = crc.attach(&info, code.k()).unwrap();
                let mut x = code.place_payload(&payload).unwrap();
                polar_encode(&mut x);
                let llr = transmit(&x, &cfg, &mut rng);
                // random flip set
                let nflips = (trial % 3) as usize;
                let mut flips: Vec<usize> = code
                    .info_set()
                    .choose_multiple(&mut rng, nflips)
                    .copied()
                    .collect();
                flips.sort_unstable();
                let (ref_u, ref_dec) = reference::decode(&llr, &frozen, &flips, 0);
                let out = sc_trial(&code, &crc, &llr, &flips, None, None, &mut ws).unwrap();
                assert_eq!(out.u_hat, ref_u);
                for i in 0..n {
                    assert_eq!(
                        out.alpha_dec[i].to_bits(),
                        ref_dec[i].to_bits(),
                        "alpha_dec mismatch at {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn flip_changes_target_and_leaves_prefix_alone() {
        let crc = CrcSpec::crc2();
        let code = PolarCode::new_5g(64, 30, 2).unwrap();
        let cfg = ChannelConfig::new(1.5, code.rate()).unwrap();
        let mut ws = LlrWorkspace::new(64);
        let mut rng = frame_rng(17, 0);
        let x = vec![0u8; 64];
        let llr = transmit(&x, &cfg, &mut rng);
        let base = sc_trial(&code, &crc, &llr, &[], None, None, &mut ws).unwrap();
        let target = code.info_set()[code.k_tot() / 2];
        let flipped = sc_trial(&code, &crc, &llr, &[target], None, None, &mut ws).unwrap();
        assert_eq!(flipped.u_hat[target], base.u_hat[target] ^ 1);
        assert_eq!(flipped.u_hat[..target], base.u_hat[..target]);
        for i in 0..target {
            assert_eq!(flipped.alpha_dec[i].to_bits(), base.alpha_dec[i].to_bits());
        }
    }

    #[test]
    fn frozen_flip_rejected() {
        let code = small_code();
        let crc = CrcSpec::crc2();
        let mut ws = LlrWorkspace::new(8);
        let err = sc_trial(&code, &crc, &[1.0; 8], &[0], None, None, &mut ws);
        assert!(matches!(err, Err(Error::FrozenFlip(0))));
    }

    #[test]
    fn involution_check_on_workspace_encode() {
        // combine_up at the root is equivalent to encoding u_hat; check on a
        // full decode of a noiseless frame.
        let code = small_code();
        let crc = CrcSpec::crc2();
        let cfg = ChannelConfig::noiseless(0.5).unwrap();
        let payload = vec![1u8, 0, 1, 1];
        let mut x = code.place_payload(&payload).unwrap();
        polar_encode(&mut x);
        let llr = transmit(&x, &cfg, &mut frame_rng(0, 0));
        let mut ws = LlrWorkspace::new(8);
        let out = sc_trial(&code, &crc, &llr, &[], None, None, &mut ws).unwrap();
        assert_eq!(polar_encode_to_vec(&out.u_hat), x);
    }
}
