//! Block-level transceiver: precoding, per-user scalar MMSE equalization,
//! SIC decoding, and weighted throughput accounting.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::amc::{amc_select, ModCodePair};
use super::polar::{base_ln_z, PolarCodec};
use super::qam::Constellation;
use super::LlsError;
use crate::channel::complex_normal;
use crate::rates::{noma_sinrs, rate_from_sinr, rsma_sinrs};
use crate::scenario::{AccessMode, LlsConfig};
use crate::CMatrix;

/// Clamp range for the frozen-set design SNR, dB.
pub const DESIGN_SNR_RANGE_DB: (f64, f64) = (-2.0, 20.0);

#[derive(Debug, Clone)]
struct StreamCodec {
    modcode: ModCodePair,
    constellation: Constellation,
    codec: PolarCodec,
    codewords: usize,
}

impl StreamCodec {
    /// Information bits carried per block.
    fn block_bits(&self) -> usize {
        self.codewords * self.codec.info_bits()
    }
}

/// Stream configuration for one channel realization: modulation and coding
/// per precoder column, the SIC order, and how common-stream bits are
/// credited to users.
#[derive(Debug, Clone)]
pub struct LinkPlan {
    pub mode: AccessMode,
    /// NOMA decoding order (ignored by the other modes).
    pub order: Vec<usize>,
    pub block_symbols: usize,
    pub noise: f64,
    /// Fraction of common-stream bits credited to each user.
    pub common_share: Vec<f64>,
    streams: Vec<Option<StreamCodec>>,
}

/// Effective SINR of each precoder column: the worst over the users that
/// must decode it. `None` for columns without a stream in `mode`.
pub fn stream_sinrs(mode: AccessMode, p: &CMatrix, h: &CMatrix, order: &[usize], noise: f64) -> Vec<Option<f64>> {
    let k = h.ncols();
    let mut out = vec![None; k + 1];
    match mode {
        AccessMode::Rsma | AccessMode::Sdma => {
            let mut common = f64::INFINITY;
            for u in 0..k {
                let (c, pr) = rsma_sinrs(p, h, u, noise);
                common = common.min(c);
                out[u + 1] = Some(pr);
            }
            if mode == AccessMode::Rsma {
                out[0] = Some(common);
            }
        }
        AccessMode::Noma => {
            let g = noma_sinrs(p, h, order, noise);
            for i in 0..k {
                let worst = (i..k).map(|j| g[(j, i)]).fold(f64::INFINITY, f64::min);
                out[order[i] + 1] = Some(worst);
            }
        }
    }
    out
}

/// Normalized common shares from per-user common rates; equal shares when
/// all are zero.
pub fn common_shares(splits: &[f64]) -> Vec<f64> {
    let total: f64 = splits.iter().map(|c| c.max(0.0)).sum();
    if total > 0.0 {
        splits.iter().map(|c| c.max(0.0) / total).collect()
    } else {
        vec![1.0 / splits.len().max(1) as f64; splits.len()]
    }
}

impl LinkPlan {
    /// AMC on the rates the true channel supports, with zero back-off.
    pub fn adaptive(mode: AccessMode, p: &CMatrix, h_true: &CMatrix, order: &[usize], common_splits: &[f64], noise: f64, lls: &LlsConfig) -> Result<Self, LlsError> {
        let sinrs = stream_sinrs(mode, p, h_true, order, noise);
        let modcodes = sinrs.iter().map(|s| s.and_then(|g| amc_select(rate_from_sinr(g), &lls.amc_table))).collect();
        Self::build(mode, modcodes, &sinrs, order, common_splits, noise, lls)
    }

    /// Fixed modulation and coding per precoder column.
    #[allow(clippy::too_many_arguments)]
    pub fn fixed(
        mode: AccessMode,
        modcodes: Vec<Option<ModCodePair>>,
        p: &CMatrix,
        h_true: &CMatrix,
        order: &[usize],
        common_splits: &[f64],
        noise: f64,
        lls: &LlsConfig,
    ) -> Result<Self, LlsError> {
        let sinrs = stream_sinrs(mode, p, h_true, order, noise);
        Self::build(mode, modcodes, &sinrs, order, common_splits, noise, lls)
    }

    fn build(
        mode: AccessMode,
        modcodes: Vec<Option<ModCodePair>>,
        sinrs: &[Option<f64>],
        order: &[usize],
        common_splits: &[f64],
        noise: f64,
        lls: &LlsConfig,
    ) -> Result<Self, LlsError> {
        assert_eq!(modcodes.len(), sinrs.len(), "one entry per precoder column");
        let mut streams = Vec::with_capacity(modcodes.len());
        for (mc, sinr) in modcodes.into_iter().zip(sinrs) {
            let stream = match (mc, sinr) {
                (Some(modcode), Some(g)) => {
                    let constellation = Constellation::new(modcode.modulation);
                    let codewords = lls.block_symbols * constellation.bits_per_symbol() / lls.codeword_bits;
                    let (lo, hi) = DESIGN_SNR_RANGE_DB;
                    let design_db = (10.0 * g.max(1e-30).log10()).clamp(lo, hi);
                    let ln_z0 = base_ln_z(10f64.powf(design_db / 10.0), constellation.min_distance_sq());
                    let codec = PolarCodec::new(lls.codeword_bits, modcode.code_rate(), ln_z0)?;
                    (codewords > 0).then_some(StreamCodec {
                        modcode,
                        constellation,
                        codec,
                        codewords,
                    })
                }
                _ => None,
            };
            streams.push(stream);
        }
        Ok(Self {
            mode,
            order: order.to_vec(),
            block_symbols: lls.block_symbols,
            noise,
            common_share: common_shares(common_splits),
            streams,
        })
    }

    /// Scheme assigned to precoder column `col`, if it transmits.
    pub fn modcode(&self, col: usize) -> Option<ModCodePair> {
        self.streams.get(col).and_then(|s| s.as_ref().map(|s| s.modcode))
    }

    /// Weighted information bits per symbol if every block decodes.
    pub fn nominal_throughput(&self, weights: &[f64]) -> f64 {
        let bits = |c: usize| self.streams[c].as_ref().map_or(0, |s| s.block_bits()) as f64;
        let s = self.block_symbols as f64;
        weights
            .iter()
            .enumerate()
            .map(|(u, mu)| {
                let common = if self.mode.has_common() { bits(0) * self.common_share[u] } else { 0.0 };
                mu * (common + bits(u + 1)) / s
            })
            .sum()
    }

    /// Columns user `u` decodes, in SIC order; the last is its own stream.
    fn stages(&self, u: usize) -> Vec<usize> {
        match self.mode {
            AccessMode::Rsma => vec![0, u + 1],
            AccessMode::Sdma => vec![u + 1],
            AccessMode::Noma => {
                let pos = self.order.iter().position(|&x| x == u).expect("user in decoding order");
                self.order[..=pos].iter().map(|&x| x + 1).collect()
            }
        }
    }
}

/// Outcome of one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlsBlockResult {
    /// Per user: common stream decoded correctly; `None` without a common
    /// stream.
    pub common_ok: Vec<Option<bool>>,
    /// Per user: own stream decoded correctly; `None` when it is idle.
    pub private_ok: Vec<Option<bool>>,
    /// Per user: error-free information bits delivered.
    pub delivered_bits: Vec<f64>,
    pub symbols: usize,
}

struct Transmission {
    payloads: Vec<Vec<u8>>,
    symbols: Vec<Complex<f64>>,
}

fn modulate_stream(sc: &StreamCodec, payloads: &[Vec<u8>], n_symbols: usize) -> Result<Vec<Complex<f64>>, LlsError> {
    let bps = sc.constellation.bits_per_symbol();
    let mut bits = Vec::with_capacity(n_symbols * bps);
    for pl in payloads {
        bits.extend(sc.codec.encode(pl)?);
    }
    // Known zero padding fills the symbols left after whole codewords.
    bits.resize(n_symbols * bps, 0);
    Ok(sc.constellation.modulate(&bits))
}

/// Simulates one block of `plan.block_symbols` symbols through `h_true`.
pub fn simulate_block<R: Rng + ?Sized>(plan: &LinkPlan, p: &CMatrix, h_true: &CMatrix, rng: &mut R) -> Result<LlsBlockResult, LlsError> {
    let k = h_true.ncols();
    let s = plan.block_symbols;
    let mut tx: Vec<Option<Transmission>> = Vec::with_capacity(plan.streams.len());
    for stream in &plan.streams {
        tx.push(match stream {
            Some(sc) => {
                let payloads: Vec<Vec<u8>> = (0..sc.codewords)
                    .map(|_| (0..sc.codec.payload_bits()).map(|_| rng.random_range(0..2u8)).collect())
                    .collect();
                let symbols = modulate_stream(sc, &payloads, s)?;
                Some(Transmission { payloads, symbols })
            }
            None => None,
        });
    }

    let mut common_ok = vec![None; k];
    let mut private_ok = vec![None; k];
    let mut delivered = vec![0.0; k];
    for u in 0..k {
        let hu = h_true.column(u);
        let gains: Vec<Complex<f64>> = (0..p.ncols()).map(|c| hu.dotc(&p.column(c))).collect();
        let mut y: Vec<Complex<f64>> = (0..s)
            .map(|t| {
                let sig: Complex<f64> = tx.iter().enumerate().filter_map(|(c, x)| x.as_ref().map(|x| gains[c] * x.symbols[t])).sum();
                sig + complex_normal(rng, plan.noise)
            })
            .collect();
        let mut remaining: Vec<usize> = (0..tx.len()).filter(|&c| tx[c].is_some()).collect();
        let stages = plan.stages(u);
        let own = *stages.last().expect("at least one stage");
        if plan.mode.has_common() && tx[0].is_some() {
            common_ok[u] = Some(false);
        }
        if tx[own].is_some() {
            private_ok[u] = Some(false);
        }

        for &col in &stages {
            let (Some(sc), Some(x)) = (plan.streams[col].as_ref(), tx[col].as_ref()) else {
                continue;
            };
            let a = gains[col];
            let sig = a.norm_sqr();
            let total: f64 = remaining.iter().map(|&c| gains[c].norm_sqr()).sum::<f64>() + plan.noise;
            if sig <= 1e-300 {
                break;
            }
            let z: Vec<Complex<f64>> = y.iter().map(|v| v / a).collect();
            let llr = sc.constellation.llrs(&z, (total - sig).max(0.0) / sig);
            let n = sc.codec.block_bits();
            let mut checksums = true;
            let mut decoded = Vec::with_capacity(sc.codewords);
            for (i, pl) in x.payloads.iter().enumerate() {
                let d = sc.codec.decode(&llr[i * n..(i + 1) * n])?;
                checksums &= d.ok;
                decoded.push((d.ok && d.payload == *pl, d.payload));
            }
            let correct = checksums && decoded.iter().all(|d| d.0);
            if col == 0 && plan.mode.has_common() {
                common_ok[u] = Some(correct);
                if correct {
                    delivered[u] += sc.block_bits() as f64 * plan.common_share[u];
                }
            }
            if col == own {
                private_ok[u] = Some(correct);
                if correct {
                    delivered[u] += sc.block_bits() as f64;
                }
            }
            if !checksums {
                break;
            }
            // Rebuild the stream from the decoded words and cancel it.
            let payloads: Vec<Vec<u8>> = decoded.into_iter().map(|d| d.1).collect();
            let rebuilt = modulate_stream(sc, &payloads, s)?;
            for (v, r) in y.iter_mut().zip(&rebuilt) {
                *v -= a * r;
            }
            remaining.retain(|&c| c != col);
        }
    }
    Ok(LlsBlockResult {
        common_ok,
        private_ok,
        delivered_bits: delivered,
        symbols: s,
    })
}

/// Runs `n_blocks` independent blocks; block `b` draws from a generator
/// seeded with `seed` on stream `b`.
pub fn simulate_blocks(plan: &LinkPlan, p: &CMatrix, h_true: &CMatrix, n_blocks: usize, seed: u64) -> Result<Vec<LlsBlockResult>, LlsError> {
    (0..n_blocks)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            simulate_block(plan, p, h_true, &mut rng)
        })
        .collect()
}

/// `∑_l ∑_k μ_k D_k^{(l)} / ∑_l S^{(l)}`.
pub fn weighted_throughput(blocks: &[LlsBlockResult], weights: &[f64]) -> f64 {
    assert!(!blocks.is_empty(), "no blocks to account");
    let symbols: usize = blocks.iter().map(|b| b.symbols).sum();
    let bits: f64 = blocks.iter().map(|b| b.delivered_bits.iter().zip(weights).map(|(d, mu)| mu * d).sum::<f64>()).sum();
    bits / symbols as f64
}
