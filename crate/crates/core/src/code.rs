//! Polar-code construction, CRC handling and the polar transform.
//!
//! Codes are built from a reliability sequence (least reliable index first).
//! The bundled sequence is the 3GPP TS 38.212 universal order for
//! `N_max = 1024`; shorter codes use the standard downselection of entries
//! smaller than `N`.

use crate::{Error, Result};

/// Maximum block length covered by the bundled reliability sequence.
pub const MAX_BLOCK_LEN: usize = 1024;

const RELIABILITY_5G_1024: &str = include_str!("../data/reliability_5g_1024.txt");

/// Geometry of a CRC-aided polar code.
///
/// `info_set` holds the `k + r` information positions in ascending index
/// order; information and CRC bits are written into those positions in that
/// order. All other positions are frozen to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarCode {
    block_len: usize,
    stages: usize,
    k: usize,
    crc_len: usize,
    info_set: Vec<usize>,
    is_info: Vec<bool>,
    first_info: usize,
    j_rhs: usize,
}

impl PolarCode {
    /// Builds a code from an explicit reliability order (least reliable
    /// first). The `k + r` most reliable positions become the information
    /// set.
    pub fn new(block_len: usize, k: usize, crc_len: usize, reliability: &[usize]) -> Result<Self> {
        if !block_len.is_power_of_two() || block_len < 4 {
            return Err(Error::InvalidBlockLength(block_len));
        }
        let k_tot = k + crc_len;
        if k_tot > block_len || k_tot == 0 {
            return Err(Error::TooManyInfoBits {
                ktot: k_tot,
                n: block_len,
            });
        }
        if reliability.len() != block_len {
            return Err(Error::NotAPermutation(block_len));
        }
        let mut seen = vec![false; block_len];
        for &idx in reliability {
            if idx >= block_len || seen[idx] {
                return Err(Error::NotAPermutation(block_len));
            }
            seen[idx] = true;
        }

        let mut info_set: Vec<usize> = reliability[block_len - k_tot..].to_vec();
        info_set.sort_unstable();
        let mut is_info = vec![false; block_len];
        for &idx in &info_set {
            is_info[idx] = true;
        }
        let first_info = info_set[0];
        let j_rhs = info_set
            .iter()
            .position(|&a| a >= block_len / 2)
            .unwrap_or(k_tot);

        Ok(Self {
            block_len,
            stages: block_len.trailing_zeros() as usize,
            k,
            crc_len,
            info_set,
            is_info,
            first_info,
            j_rhs,
        })
    }

    /// Builds a code using the bundled 5G reliability sequence.
    pub fn new_5g(block_len: usize, k: usize, crc_len: usize) -> Result<Self> {
        if !block_len.is_power_of_two() || block_len < 4 || block_len > MAX_BLOCK_LEN {
            return Err(Error::InvalidBlockLength(block_len));
        }
        let order = five_g_sequence(block_len)?;
        Self::new(block_len, k, crc_len, &order)
    }

    /// Block length `N`.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// `log2(N)`.
    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Number of information bits, excluding CRC.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of CRC bits.
    pub fn crc_len(&self) -> usize {
        self.crc_len
    }

    /// `k + r`.
    pub fn k_tot(&self) -> usize {
        self.k + self.crc_len
    }

    /// Information positions, ascending.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    /// True if `idx` carries an information or CRC bit.
    pub fn is_info(&self, idx: usize) -> bool {
        self.is_info[idx]
    }

    /// First (smallest) information position `a_0`.
    pub fn first_info(&self) -> usize {
        self.first_info
    }

    /// Index into the information set of the first position at or beyond
    /// `N/2`. Equals `k_tot` if every information bit lies in the left half.
    pub fn j_rhs(&self) -> usize {
        self.j_rhs
    }

    /// Rate `k / N`, excluding CRC bits.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.block_len as f64
    }

    /// Smallest information position strictly greater than `idx`, if any.
    pub fn next_info_after(&self, idx: usize) -> Option<usize> {
        match self.info_set.binary_search(&(idx + 1)) {
            Ok(_) => Some(idx + 1),
            Err(pos) => self.info_set.get(pos).copied(),
        }
    }

    /// Maps a leaf index to its rank in the information set.
    pub fn info_rank(&self, idx: usize) -> Option<usize> {
        self.info_set.binary_search(&idx).ok()
    }

    /// Scatters `k_tot` payload bits into a length-`N` input vector, frozen
    /// positions zero.
    pub fn place_payload(&self, payload: &[u8]) -> Result<Vec<u8>> {
        if payload.len() != self.k_tot() {
            return Err(Error::LengthMismatch {
                expected: self.k_tot(),
                got: payload.len(),
            });
        }
        let mut u = vec![0u8; self.block_len];
        for (&pos, &bit) in self.info_set.iter().zip(payload) {
            u[pos] = bit;
        }
        Ok(u)
    }

    /// Gathers the information-set bits out of a length-`N` estimate vector.
    pub fn extract_payload(&self, u: &[u8]) -> Vec<u8> {
        self.info_set.iter().map(|&pos| u[pos]).collect()
    }
}

/// Returns the bundled 5G reliability order for block length `n`, least
/// reliable first. For `n < 1024` the universal sequence is filtered to
/// entries below `n`, preserving order.
pub fn five_g_sequence(n: usize) -> Result<Vec<usize>> {
    if !n.is_power_of_two() || n < 4 || n > MAX_BLOCK_LEN {
        return Err(Error::InvalidBlockLength(n));
    }
    let full = parse_reliability(RELIABILITY_5G_1024)?;
    Ok(full.into_iter().filter(|&idx| idx < n).collect())
}

/// Parses a reliability file: one index per line, least reliable first.
pub fn parse_reliability(text: &str) -> Result<Vec<usize>> {
    let mut order = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let idx: usize = line
            .parse()
            .map_err(|_| Error::Io(format!("bad reliability entry: {line:?}")))?;
        order.push(idx);
    }
    Ok(order)
}

/// CRC generator polynomial, stored as coefficient bits for `z^r .. z^0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcSpec {
    r: usize,
    poly: u32,
}

impl CrcSpec {
    /// `poly` holds the coefficients of `z^r .. z^0` with bit `r` the
    /// leading term. Both end coefficients must be one.
    pub fn new(r: usize, poly: u32) -> Result<Self> {
        if r == 0 || r > 31 || poly >> r != 1 || poly & 1 != 1 {
            return Err(Error::InvalidCrcPolynomial { r });
        }
        Ok(Self { r, poly })
    }

    /// The 11-bit 5G polynomial `z^11 + z^10 + z^9 + z^5 + 1`.
    pub fn crc11() -> Self {
        Self { r: 11, poly: 0xE21 }
    }

    /// A 2-bit checksum `z^2 + z + 1`, handy for tiny test codes.
    pub fn crc2() -> Self {
        Self { r: 2, poly: 0b111 }
    }

    /// Degree `r`.
    pub fn len(&self) -> usize {
        self.r
    }

    pub fn is_empty(&self) -> bool {
        self.r == 0
    }

    /// Remainder of `bits * z^r` divided by the polynomial. MSB-first shift
    /// register, zero initial state, no final inversion.
    fn remainder(&self, bits: &[u8]) -> u32 {
        let mask = (1u32 << self.r) - 1;
        let taps = self.poly & mask;
        let mut reg = 0u32;
        for &b in bits {
            let feedback = (reg >> (self.r - 1)) & 1 ^ u32::from(b);
            reg = (reg << 1) & mask;
            if feedback == 1 {
                reg ^= taps;
            }
        }
        reg
    }

    /// Appends the `r` remainder bits (MSB first) to `info`.
    pub fn attach(&self, info: &[u8], k: usize) -> Result<Vec<u8>> {
        if info.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: info.len(),
            });
        }
        let rem = self.remainder(info);
        let mut out = info.to_vec();
        for i in (0..self.r).rev() {
            out.push(((rem >> i) & 1) as u8);
        }
        Ok(out)
    }

    /// True iff the payload (message followed by its CRC) leaves a zero
    /// remainder.
    pub fn check(&self, payload: &[u8], k_tot: usize) -> Result<bool> {
        if payload.len() != k_tot {
            return Err(Error::LengthMismatch {
                expected: k_tot,
                got: payload.len(),
            });
        }
        Ok(self.remainder(payload) == 0)
    }
}

/// In-place polar transform `u * G^{(x)n}` over GF(2).
///
/// Self-inverse; also used to restore partial sums from bit-estimate
/// segments. Length 1 is the identity.
pub fn polar_encode(u: &mut [u8]) {
    let n = u.len();
    debug_assert!(n.is_power_of_two());
    let mut step = 1;
    while step < n {
        let mut base = 0;
        while base < n {
            for j in base..base + step {
                u[j] ^= u[j + step];
            }
            base += 2 * step;
        }
        step *= 2;
    }
}

/// `polar_encode` into a fresh vector.
pub fn polar_encode_to_vec(u: &[u8]) -> Vec<u8> {
    let mut x = u.to_vec();
    polar_encode(&mut x);
    x
}
