//! Polar codes: Bhattacharyya construction, encoding with `x = u F^{⊗n}`
//! (no bit reversal), and min-sum successive-cancellation decoding. A
//! CRC-16 inside the information word flags decoding failures.

use crc::{Crc, CRC_16_IBM_3740};

use super::LlsError;

pub const CRC_BITS: usize = 16;
const CRC16: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

/// CRC-16 of a bit string, packed MSB first with zero padding.
pub fn crc16_bits(bits: &[u8]) -> u16 {
    let bytes: Vec<u8> = bits
        .chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b << (7 - i))))
        .collect();
    CRC16.checksum(&bytes)
}

/// `ln Z` of every synthetic channel for a base channel with `ln Z = ln_z0`.
/// Index `i` follows the natural (non-reversed) order of the encoder.
pub fn bhattacharyya_ln(block_bits: usize, ln_z0: f64) -> Vec<f64> {
    let mut z = vec![ln_z0];
    while z.len() < block_bits {
        // Each channel splits into an adjacent (worse, better) pair; the
        // first split ends up in the most significant index bit.
        z = z.iter().flat_map(|&l| [l + (2.0 - l.exp()).ln(), 2.0 * l]).collect();
    }
    z
}

/// `ln Z` of one coded bit sent on `modulation`-like signalling with the
/// given symbol SNR, using the nearest-neighbour distance `d²_min / E_s`.
pub fn base_ln_z(snr_linear: f64, min_distance_sq: f64) -> f64 {
    -snr_linear * min_distance_sq / 4.0
}

/// In-place `x = u F^{⊗n}`.
pub fn polar_transform(u: &mut [u8]) {
    let n = u.len();
    let mut s = 1;
    while s < n {
        for base in (0..n).step_by(2 * s) {
            for j in base..base + s {
                u[j] ^= u[j + s];
            }
        }
        s *= 2;
    }
}

fn check_n(block_bits: usize) -> Result<(), LlsError> {
    if block_bits < 2 || !block_bits.is_power_of_two() {
        return Err(LlsError::BlockLength(block_bits));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PolarCode {
    frozen: Vec<bool>,
    info_positions: Vec<usize>,
}

impl PolarCode {
    /// Freezes the `block_bits − info_bits` least reliable positions
    /// (largest `ln Z`, ties broken towards lower indices).
    pub fn construct(block_bits: usize, info_bits: usize, ln_z0: f64) -> Result<Self, LlsError> {
        check_n(block_bits)?;
        if info_bits == 0 || info_bits > block_bits {
            return Err(LlsError::InfoLength { info: info_bits, block: block_bits });
        }
        let z = bhattacharyya_ln(block_bits, ln_z0);
        let mut idx: Vec<usize> = (0..block_bits).collect();
        idx.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(b.cmp(&a)));
        let mut info_positions: Vec<usize> = idx[..info_bits].to_vec();
        info_positions.sort_unstable();
        let mut frozen = vec![true; block_bits];
        for &i in &info_positions {
            frozen[i] = false;
        }
        Ok(Self { frozen, info_positions })
    }

    pub fn block_bits(&self) -> usize {
        self.frozen.len()
    }

    pub fn info_bits(&self) -> usize {
        self.info_positions.len()
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>, LlsError> {
        if info.len() != self.info_bits() {
            return Err(LlsError::LengthMismatch { expected: self.info_bits(), got: info.len() });
        }
        let mut u = vec![0u8; self.block_bits()];
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            u[pos] = b;
        }
        polar_transform(&mut u);
        Ok(u)
    }

    /// Hard information bits from channel LLRs (`ln P(0)/P(1)`).
    pub fn decode(&self, llr: &[f64]) -> Result<Vec<u8>, LlsError> {
        if llr.len() != self.block_bits() {
            return Err(LlsError::LengthMismatch { expected: self.block_bits(), got: llr.len() });
        }
        let mut u = Vec::with_capacity(self.block_bits());
        sc_node(&self.frozen, llr, &mut u);
        Ok(self.info_positions.iter().map(|&i| u[i]).collect())
    }
}

fn min_sum(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// Decodes the subtree whose leaves are `frozen`, appending decisions to
/// `u`; returns the re-encoded subtree codeword.
fn sc_node(frozen: &[bool], llr: &[f64], u: &mut Vec<u8>) -> Vec<u8> {
    let n = llr.len();
    if n == 1 {
        let b = if frozen[0] { 0 } else { (llr[0] < 0.0) as u8 };
        u.push(b);
        return vec![b];
    }
    let h = n / 2;
    let (a, b) = llr.split_at(h);
    let upper: Vec<f64> = a.iter().zip(b).map(|(x, y)| min_sum(*x, *y)).collect();
    let x1 = sc_node(&frozen[..h], &upper, u);
    let lower: Vec<f64> = (0..h).map(|i| b[i] + if x1[i] == 0 { a[i] } else { -a[i] }).collect();
    let x2 = sc_node(&frozen[h..], &lower, u);
    let mut out: Vec<u8> = x1.iter().zip(&x2).map(|(p, q)| p ^ q).collect();
    out.extend_from_slice(&x2);
    out
}

/// A polar code whose information word ends with a CRC-16 of the payload.
#[derive(Debug, Clone)]
pub struct PolarCodec {
    code: PolarCode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub payload: Vec<u8>,
    /// Checksum matched.
    pub ok: bool,
}

impl PolarCodec {
    /// `⌊code_rate · block_bits⌋` information bits, `CRC_BITS` of them
    /// checksum. Rejects codes with no room for payload.
    pub fn new(block_bits: usize, code_rate: f64, ln_z0: f64) -> Result<Self, LlsError> {
        check_n(block_bits)?;
        let info = (code_rate * block_bits as f64 + 1e-9).floor().max(0.0) as usize;
        if info <= CRC_BITS || info > block_bits {
            return Err(LlsError::InfoLength { info, block: block_bits });
        }
        Ok(Self {
            code: PolarCode::construct(block_bits, info, ln_z0)?,
        })
    }

    pub fn code(&self) -> &PolarCode {
        &self.code
    }

    pub fn block_bits(&self) -> usize {
        self.code.block_bits()
    }

    /// Information bits per codeword, checksum included.
    pub fn info_bits(&self) -> usize {
        self.code.info_bits()
    }

    pub fn payload_bits(&self) -> usize {
        self.code.info_bits() - CRC_BITS
    }

    pub fn encode(&self, payload: &[u8]) -> Result<Vec<u8>, LlsError> {
        if payload.len() != self.payload_bits() {
            return Err(LlsError::LengthMismatch { expected: self.payload_bits(), got: payload.len() });
        }
        let crc = crc16_bits(payload);
        let mut info = payload.to_vec();
        info.extend((0..CRC_BITS).rev().map(|s| ((crc >> s) & 1) as u8));
        self.code.encode(&info)
    }

    pub fn decode(&self, llr: &[f64]) -> Result<Decoded, LlsError> {
        let mut info = self.code.decode(llr)?;
        let tail = info.split_off(self.payload_bits());
        let got = tail.iter().fold(0u16, |acc, &b| (acc << 1) | b as u16);
        Ok(Decoded {
            ok: got == crc16_bits(&info),
            payload: info,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn crc_check_value() {
        // "123456789" under CRC-16/CCITT-FALSE is 0x29B1.
        let bits: Vec<u8> = b"123456789".iter().flat_map(|&c| (0..8).rev().map(move |s| (c >> s) & 1)).collect();
        assert_eq!(crc16_bits(&bits), 0x29B1);
    }

    #[test]
    fn transform_is_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<u8> = (0..64).map(|_| rng.random_range(0..2)).collect();
        let mut x = u.clone();
        polar_transform(&mut x);
        polar_transform(&mut x);
        assert_eq!(x, u);
    }

    #[test]
    fn transform_matches_kronecker_power() {
        // Rows of F^{⊗3} in natural order.
        let n = 8;
        for i in 0..n {
            let mut u = vec![0u8; n];
            u[i] = 1;
            polar_transform(&mut u);
            for (j, &x) in u.iter().enumerate() {
                // Entry (i, j) of F^{⊗n} is 1 iff the bits of j are a subset of those of i.
                assert_eq!(x, ((j & !i) == 0) as u8, "row {i} col {j}");
            }
        }
    }

    #[test]
    fn erasure_channel_reliability_order() {
        // BEC(1/2), N = 8: Z is exact and the four best channels are 3, 5, 6, 7.
        let z: Vec<f64> = bhattacharyya_ln(8, 0.5f64.ln()).iter().map(|l| l.exp()).collect();
        let expect = [0.99609375, 0.87890625, 0.80859375, 0.31640625, 0.68359375, 0.19140625, 0.12109375, 0.00390625];
        for (a, b) in z.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let code = PolarCode::construct(8, 4, 0.5f64.ln()).unwrap();
        assert_eq!(code.info_positions(), &[3, 5, 6, 7]);
    }

    #[test]
    fn log_domain_survives_tiny_z() {
        let z = bhattacharyya_ln(1024, -400.0);
        assert!(z.iter().all(|l| l.is_finite()));
        assert!((z[0] - (-400.0 + 10.0 * 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn zero_noise_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let codec = PolarCodec::new(256, 0.5, -1.0).unwrap();
        for _ in 0..100 {
            let payload: Vec<u8> = (0..codec.payload_bits()).map(|_| rng.random_range(0..2)).collect();
            let x = codec.encode(&payload).unwrap();
            let llr: Vec<f64> = x.iter().map(|&b| if b == 0 { 10.0 } else { -10.0 }).collect();
            let d = codec.decode(&llr).unwrap();
            assert!(d.ok);
            assert_eq!(d.payload, payload);
        }
    }

    #[test]
    fn corrupted_word_fails_checksum() {
        let codec = PolarCodec::new(128, 0.5, -1.0).unwrap();
        let payload = vec![1u8; codec.payload_bits()];
        let x = codec.encode(&payload).unwrap();
        // All-erasure observation: every decision falls back to 0.
        let d = codec.decode(&vec![0.0; x.len()]).unwrap();
        assert!(!d.ok);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(PolarCodec::new(100, 0.5, 0.0).unwrap_err(), LlsError::BlockLength(100));
        assert!(matches!(PolarCodec::new(64, 0.2, 0.0), Err(LlsError::InfoLength { info: 12, .. })));
        assert!(matches!(PolarCodec::new(64, 0.0, 0.0), Err(LlsError::InfoLength { info: 0, .. })));
        let c = PolarCodec::new(64, 0.5, 0.0).unwrap();
        assert!(matches!(c.encode(&[0; 3]), Err(LlsError::LengthMismatch { .. })));
        assert!(matches!(c.decode(&[0.0; 3]), Err(LlsError::LengthMismatch { .. })));
    }
}
