use polarflip::channel::{frame_rng, transmit, ChannelConfig};
use polarflip::code::{polar_encode, CrcSpec, PolarCode};
use polarflip::cost::{self, CostParams};
use polarflip::fast::{build_schedule, NodeKind};
use polarflip::flip::{FlipConfig, FlipDecoder};
use polarflip::restart::{Baseline, Mechanism};
use rand::prelude::*;

fn run(k: usize, ebn0: f64, baseline: Baseline) -> (f64, f64, f64, u64, f64) {
    let code = PolarCode::new_5g(1024, k, 11).unwrap();
    let dec = FlipDecoder::new(
        code.clone(), CrcSpec::crc11(), FlipConfig::new(3, 301).unwrap(),
        baseline, Mechanism::Grm, CostParams::default(),
    ).unwrap();
    let l_dec = dec.trial_cost();
    let mut ws = dec.workspace();
    let ch = ChannelConfig::new(ebn0, code.rate()).unwrap();
    let (mut frames, mut errors, mut trials, mut add_trials, mut saving) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for frame in 0..8000u64 {
        let mut rng = frame_rng(42, frame);
        let info: Vec<u8> = (0..code.k()).map(|_| rng.gen_range(0..2u8)).collect();
        let payload = dec.crc().attach(&info, code.k()).unwrap();
        let mut x = code.place_payload(&payload).unwrap();
        polar_encode(&mut x);
        let llr = transmit(&x, &ch, &mut rng);
        let res = dec.decode_frame(&llr, &mut ws).unwrap();
        frames += 1;
        errors += u64::from(!res.success);
        trials += res.tau as u64;
        add_trials += res.tau as u64 - 1;
        saving += res.trials.iter().map(|t| t.saving).sum::<u64>();
    }
    let tau_bar = trials as f64 / frames as f64;
    let red = 100.0 * saving as f64 / (trials as f64 * l_dec as f64);
    (tau_bar, add_trials as f64 / frames as f64, errors as f64 / frames as f64, l_dec, red)
}

#[test]
#[ignore]
fn fssc_diagnostics() {
    for (k, ebn0) in [(128usize, 1.125f64), (256, 1.125), (512, 1.75)] {
        let code = PolarCode::new_5g(1024, k, 11).unwrap();
        let s = build_schedule(&code, 3);
        let q = s.special_count();
        let kinds: Vec<String> = [NodeKind::R0, NodeKind::R1, NodeKind::Rep, NodeKind::Spc]
            .iter()
            .map(|kk| format!("{}x{:?}", s.entries().iter().filter(|e| e.kind == *kk).count(), kk))
            .collect();
        let (tau_f, add_f, fer_f, lf, red_f) = run(k, ebn0, Baseline::Fssc);
        let (tau_s, add_s, fer_s, ls, red_s) = run(k, ebn0, Baseline::Sc);
        println!("k={k}: L_FSSC={lf} q={q} [{}]", kinds.join(" "));
        println!("  FSSC: tau={tau_f:.3} add={add_f:.3} fer={fer_f:.4} red={red_f:.2}%");
        println!("  SC:   tau={tau_s:.3} add={add_s:.3} fer={fer_s:.4} red={red_s:.2}% (L_SC={ls})");
    }
}
