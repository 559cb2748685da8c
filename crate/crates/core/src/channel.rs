//! BPSK over AWGN with reproducible, per-frame random streams.

use crate::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// LLR magnitude used when the channel is configured noiseless.
pub const NOISELESS_LLR: f64 = 1.0e3;

/// Channel operating point. `rate` is `k/N` excluding CRC bits and enters
/// the `Eb/N0` to noise-variance conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub ebn0_db: f64,
    pub rate: f64,
    pub noiseless: bool,
}

impl ChannelConfig {
    pub fn new(ebn0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidRate(rate));
        }
        Ok(Self {
            ebn0_db,
            rate,
            noiseless: false,
        })
    }

    /// Interprets the operating point as SNR (`Es/N0`) instead of `Eb/N0`.
    pub fn from_snr_db(snr_db: f64, rate: f64) -> Result<Self> {
        Self::new(snr_db - 10.0 * rate.log10(), rate)
    }

    /// Zero-noise channel; `transmit` emits saturated LLRs of the correct
    /// sign.
    pub fn noiseless(rate: f64) -> Result<Self> {
        let mut cfg = Self::new(0.0, rate)?;
        cfg.noiseless = true;
        Ok(cfg)
    }

    /// Noise variance per real BPSK symbol.
    pub fn sigma_sq(&self) -> f64 {
        1.0 / (2.0 * self.rate * 10f64.powf(self.ebn0_db / 10.0))
    }
}

/// Independent random stream for one frame. All frames share `seed`; the
/// frame index selects a ChaCha stream, so results do not depend on how
/// frames are distributed over workers.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

/// BPSK-modulates `x` (bit 0 -> +1, bit 1 -> -1), adds white Gaussian noise
/// and returns channel LLRs `2y / sigma^2`. Positive LLR favors bit 0.
pub fn transmit<R: Rng>(x: &[u8], cfg: &ChannelConfig, rng: &mut R) -> Vec<f64> {
    if cfg.noiseless {
        return x
            .iter()
            .map(|&b| if b == 0 { NOISELESS_LLR } else { -NOISELESS_LLR })
            .collect();
    }
    let sigma_sq = cfg.sigma_sq();
    let normal = Normal::new(0.0, sigma_sq.sqrt()).expect("valid sigma");
    x.iter()
        .map(|&b| {
            let symbol = if b == 0 { 1.0 } else { -1.0 };
            let y = symbol + normal.sample(rng);
            2.0 * y / sigma_sq
        })
        .collect()
}
