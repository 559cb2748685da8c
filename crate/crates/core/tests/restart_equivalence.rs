//! Randomized equivalence of restarted trials against full re-decoding, at
//! the single-trial level. Restarts must never change a decision: bit
//! estimates, CRC verdicts and decision LLRs from the restart location on
//! are compared bitwise.

use polarflip::channel::{frame_rng, transmit, ChannelConfig};
use polarflip::code::{polar_encode, CrcSpec, PolarCode};
use polarflip::fast::{build_schedule, fssc_trial};
use polarflip::restart::{plan_restart, Baseline, Mechanism, RestartKind};
use polarflip::sc::{sc_trial, InitialSnapshot, LlrWorkspace};
use rand::prelude::*;

fn code_with_info(n: usize, info: &[usize], crc_len: usize) -> PolarCode {
    let frozen: Vec<usize> = (0..n).filter(|i| !info.contains(i)).collect();
    let order: Vec<usize> = frozen.into_iter().chain(info.iter().copied()).collect();
    PolarCode::new(n, info.len() - crc_len, crc_len, &order).unwrap()
}

fn random_frame(code: &PolarCode, crc: &CrcSpec, ebn0_db: f64, rng: &mut impl Rng) -> Vec<f64> {
    let info: Vec<u8> = (0..code.k()).map(|_| rng.gen_range(0..2u8)).collect();
    let payload = crc.attach(&info, code.k()).unwrap();
    let mut x = code.place_payload(&payload).unwrap();
    polar_encode(&mut x);
    let cfg = ChannelConfig::new(ebn0_db, code.rate()).unwrap();
    transmit(&x, &cfg, rng)
}

fn random_flips(code: &PolarCode, max_len: usize, rng: &mut impl Rng) -> Vec<usize> {
    let len = rng.gen_range(1..=max_len);
    let mut flips: Vec<usize> = code
        .info_set()
        .choose_multiple(rng, len.min(code.k_tot()))
        .copied()
        .collect();
    flips.sort_unstable();
    flips
}

fn assert_outcomes_match(
    a: &polarflip::sc::DecodeOutcome,
    b: &polarflip::sc::DecodeOutcome,
    code: &PolarCode,
    ctx: &str,
) {
    assert_eq!(a.u_hat, b.u_hat, "u_hat mismatch: {ctx}");
    assert_eq!(a.crc_pass, b.crc_pass, "crc mismatch: {ctx}");
    for &i in code.info_set() {
        assert_eq!(
            a.alpha_dec[i].to_bits(),
            b.alpha_dec[i].to_bits(),
            "alpha_dec mismatch at info {i}: {ctx}"
        );
    }
}

#[test]
fn sc_grm_restart_equivalence_randomized_10k() {
    let crc = CrcSpec::crc2();
    let code = PolarCode::new_5g(64, 30, 2).unwrap();
    let mut ws = LlrWorkspace::new(64);
    let mut rng = frame_rng(2024, 0);
    for case in 0..10_000u32 {
        let llr = random_frame(&code, &crc, 1.5, &mut rng);
        let flips = random_flips(&code, 3, &mut rng);
        let full = sc_trial(&code, &crc, &llr, &flips, None, None, &mut ws).unwrap();
        // restart needs the unflipped initial-trial estimates
        let initial = sc_trial(&code, &crc, &llr, &[], None, None, &mut ws).unwrap();
        let snap = InitialSnapshot::from(&initial);
        let spec = plan_restart(&code, &flips, Mechanism::Grm, Baseline::Sc, None).unwrap();
        let restarted =
            sc_trial(&code, &crc, &llr, &flips, Some(&spec), Some(&snap), &mut ws).unwrap();
        assert_outcomes_match(&restarted, &full, &code, &format!("case {case}"));
        if spec.kind == RestartKind::Leaf {
            assert_eq!(
                restarted.alpha_dec[spec.psi].to_bits(),
                full.alpha_dec[spec.psi].to_bits()
            );
        }
    }
}

#[test]
fn paper_example_restart_equals_full_trial() {
    // (16,8) code, flip at 9, restart at 11.
    let crc = CrcSpec::crc2();
    let code = code_with_info(16, &[6, 7, 9, 11, 12, 13, 14, 15], 2);
    assert_eq!(code.info_set(), &[6, 7, 9, 11, 12, 13, 14, 15]);
    let mut ws = LlrWorkspace::new(16);
    let mut rng = frame_rng(5, 5);
    for _ in 0..200 {
        let llr = random_frame(&code, &crc, 0.5, &mut rng);
        let initial = sc_trial(&code, &crc, &llr, &[], None, None, &mut ws).unwrap();
        let snap = InitialSnapshot::from(&initial);
        let spec = plan_restart(&code, &[9], Mechanism::Grm, Baseline::Sc, None).unwrap();
        assert_eq!(spec.psi, 11);
        let full = sc_trial(&code, &crc, &llr, &[9], None, None, &mut ws).unwrap();
        let restarted =
            sc_trial(&code, &crc, &llr, &[9], Some(&spec), Some(&snap), &mut ws).unwrap();
        assert_outcomes_match(&restarted, &full, &code, "paper example");
    }
}

#[test]
fn degenerate_restart_matches_full_trial() {
    let crc = CrcSpec::crc2();
    let code = PolarCode::new_5g(64, 30, 2).unwrap();
    let last = *code.info_set().last().unwrap();
    let mut ws = LlrWorkspace::new(64);
    let mut rng = frame_rng(6, 1);
    for _ in 0..500 {
        let llr = random_frame(&code, &crc, 1.0, &mut rng);
        let initial = sc_trial(&code, &crc, &llr, &[], None, None, &mut ws).unwrap();
        let snap = InitialSnapshot::from(&initial);
        let spec = plan_restart(&code, &[last], Mechanism::Grm, Baseline::Sc, None).unwrap();
        assert_eq!(spec.kind, RestartKind::Degenerate);
        let full = sc_trial(&code, &crc, &llr, &[last], None, None, &mut ws).unwrap();
        let restarted =
            sc_trial(&code, &crc, &llr, &[last], Some(&spec), Some(&snap), &mut ws).unwrap();
        assert_outcomes_match(&restarted, &full, &code, "degenerate");
    }
}

#[test]
fn srm_and_lrt_restarts_match_full_trials() {
    let crc = CrcSpec::crc2();
    let code = PolarCode::new_5g(128, 60, 2).unwrap();
    let mut ws = LlrWorkspace::new(128);
    let mut rng = frame_rng(7, 2);
    for mechanism in [Mechanism::Srm, Mechanism::Lrt] {
        for _ in 0..1_000 {
            let llr = random_frame(&code, &crc, 1.0, &mut rng);
            let flips = random_flips(&code, 2, &mut rng);
            let initial = sc_trial(&code, &crc, &llr, &[], None, None, &mut ws).unwrap();
            let snap = InitialSnapshot::from(&initial);
            let spec = plan_restart(&code, &flips, mechanism, Baseline::Sc, None).unwrap();
            let full = sc_trial(&code, &crc, &llr, &flips, None, None, &mut ws).unwrap();
            let restarted =
                sc_trial(&code, &crc, &llr, &flips, Some(&spec), Some(&snap), &mut ws).unwrap();
            assert_outcomes_match(&restarted, &full, &code, mechanism.label());
        }
    }
}

#[test]
fn fssc_restart_equivalence_randomized() {
    let crc = CrcSpec::crc2();
    let mut rng = frame_rng(8, 3);
    for (n, k) in [(64usize, 30usize), (256, 117), (256, 30)] {
        let code = PolarCode::new_5g(n, k, 2).unwrap();
        for omega in 1..=3usize {
            let schedule = build_schedule(&code, omega);
            let mut ws = LlrWorkspace::new(n);
            for case in 0..800u32 {
                let llr = random_frame(&code, &crc, 1.25, &mut rng);
                let flips = random_flips(&code, omega, &mut rng);
                let initial =
                    fssc_trial(&code, &schedule, &crc, &llr, &[], None, None, &mut ws).unwrap();
                let snap = InitialSnapshot::from(&initial);
                let spec =
                    plan_restart(&code, &flips, Mechanism::Grm, Baseline::Fssc, Some(&schedule))
                        .unwrap();
                let full =
                    fssc_trial(&code, &schedule, &crc, &llr, &flips, None, None, &mut ws).unwrap();
                let restarted = fssc_trial(
                    &code,
                    &schedule,
                    &crc,
                    &llr,
                    &flips,
                    Some(&spec),
                    Some(&snap),
                    &mut ws,
                )
                .unwrap();
                assert_outcomes_match(
                    &restarted,
                    &full,
                    &code,
                    &format!("fssc n={n} k={k} omega={omega} case={case}"),
                );
            }
        }
    }
}

#[test]
fn fssc_srm_lrt_restarts_match() {
    let crc = CrcSpec::crc2();
    let code = PolarCode::new_5g(256, 117, 2).unwrap();
    let schedule = build_schedule(&code, 2);
    let mut ws = LlrWorkspace::new(256);
    let mut rng = frame_rng(9, 4);
    for mechanism in [Mechanism::Srm, Mechanism::Lrt] {
        for _ in 0..500 {
            let llr = random_frame(&code, &crc, 1.25, &mut rng);
            let flips = random_flips(&code, 2, &mut rng);
            let initial =
                fssc_trial(&code, &schedule, &crc, &llr, &[], None, None, &mut ws).unwrap();
            let snap = InitialSnapshot::from(&initial);
            let spec =
                plan_restart(&code, &flips, mechanism, Baseline::Fssc, Some(&schedule)).unwrap();
            let full =
                fssc_trial(&code, &schedule, &crc, &llr, &flips, None, None, &mut ws).unwrap();
            let restarted = fssc_trial(
                &code,
                &schedule,
                &crc,
                &llr,
                &flips,
                Some(&spec),
                Some(&snap),
                &mut ws,
            )
            .unwrap();
            assert_outcomes_match(&restarted, &full, &code, mechanism.label());
        }
    }
}
