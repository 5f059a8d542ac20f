//! SINRs and achievable rates for RSMA, SDMA and NOMA, sample averages over
//! channel sets, and common-rate partitioning.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::SaaSampleSet;
use crate::scenario::AccessMode;
use crate::CMatrix;

/// `log₂(1 + γ)`.
pub fn rate_from_sinr(sinr: f64) -> f64 {
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// `|hᴴ p|²` for every precoder column against channel column `k`.
fn received_powers(p: &CMatrix, h: &CMatrix, k: usize) -> Vec<f64> {
    let hk = h.column(k);
    (0..p.ncols()).map(|j| hk.dotc(&p.column(j)).norm_sqr()).collect()
}

/// Common and private SINR of user `k`. Column 0 of `p` is the common
/// precoder, column `j ≥ 1` the private precoder of user `j − 1`.
pub fn rsma_sinrs(p: &CMatrix, h: &CMatrix, k: usize, noise: f64) -> (f64, f64) {
    let g = received_powers(p, h, k);
    let private_total: f64 = g[1..].iter().sum();
    let common = g[0] / (private_total + noise);
    let private = g[k + 1] / (private_total - g[k + 1] + noise);
    (common, private)
}

/// Descending estimated channel gain `‖ĥ_k‖²`; ties keep the lower index
/// first. Entry `i` is the user whose stream is decoded `i`-th.
pub fn noma_order(h_est: &CMatrix) -> Vec<usize> {
    let gains: Vec<f64> = (0..h_est.ncols()).map(|k| h_est.column(k).norm_squared()).collect();
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    order
}

/// `γ_{π(k)→π(i)}` for `i ≤ k` at entry `(k, i)`; entries above the diagonal
/// are zero. `p` carries private precoders in columns `1..=K`.
///
/// Stream `π(i)` is decoded before every `π(j)`, `j > i`, so at user
/// `π(k)` the streams `π(j)`, `j > i`, are interference.
pub fn noma_sinrs(p: &CMatrix, h: &CMatrix, order: &[usize], noise: f64) -> DMatrix<f64> {
    let k_users = order.len();
    let mut out = DMatrix::zeros(k_users, k_users);
    for k in 0..k_users {
        let g = received_powers(p, h, order[k]);
        for i in 0..=k {
            let interference: f64 = ((i + 1)..k_users).map(|j| g[order[j] + 1]).sum();
            out[(k, i)] = g[order[i] + 1] / (interference + noise);
        }
    }
    out
}

/// Per-user sample-average common and private rates.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageRates {
    pub common: Vec<f64>,
    pub private: Vec<f64>,
}

pub fn average_rates(p: &CMatrix, saa: &SaaSampleSet, noise: f64) -> AverageRates {
    assert!(!saa.is_empty(), "empty SAA set");
    let k_users = p.ncols() - 1;
    let mut common = vec![0.0; k_users];
    let mut private = vec![0.0; k_users];
    for h in &saa.realizations {
        for k in 0..k_users {
            let (gc, gp) = rsma_sinrs(p, h, k, noise);
            common[k] += rate_from_sinr(gc);
            private[k] += rate_from_sinr(gp);
        }
    }
    let m = saa.len() as f64;
    common.iter_mut().for_each(|v| *v /= m);
    private.iter_mut().for_each(|v| *v /= m);
    AverageRates { common, private }
}

/// Per-user NOMA stream rates: every decoder's rate is averaged over the
/// set first, then the minimum over the users that must decode the stream
/// is taken. Indexed by user.
pub fn noma_average_rates(p: &CMatrix, saa: &SaaSampleSet, order: &[usize], noise: f64) -> Vec<f64> {
    let k_users = order.len();
    let mut acc = DMatrix::<f64>::zeros(k_users, k_users);
    for h in &saa.realizations {
        let g = noma_sinrs(p, h, order, noise);
        for k in 0..k_users {
            for i in 0..=k {
                acc[(k, i)] += rate_from_sinr(g[(k, i)]);
            }
        }
    }
    acc /= saa.len() as f64;
    let mut rates = vec![0.0; k_users];
    for i in 0..k_users {
        rates[order[i]] = (i..k_users).map(|k| acc[(k, i)]).fold(f64::INFINITY, f64::min);
    }
    rates
}

/// Splits a common rate `r_c` into `C_k ≥ 0`, `∑C_k = r_c`, maximizing
/// `∑ μ_k C_k` after first topping every user up to `qos` where possible.
/// When the top-ups do not fit they are scaled down proportionally.
pub fn allocate_common(r_c: f64, private: &[f64], weights: &[f64], qos: f64) -> Vec<f64> {
    let k_users = private.len();
    let r_c = r_c.max(0.0);
    let need: Vec<f64> = private.iter().map(|r| (qos - r).max(0.0)).collect();
    let total_need: f64 = need.iter().sum();
    if total_need >= r_c {
        if total_need == 0.0 {
            return vec![0.0; k_users];
        }
        return need.iter().map(|n| n * r_c / total_need).collect();
    }
    let mut split = need;
    let best = (0..k_users)
        .max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a)))
        .expect("at least one user");
    split[best] += r_c - total_need;
    split
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub common_rate_per_user: Vec<f64>,
    pub common_rate: f64,
    pub private_rates: Vec<f64>,
    pub common_splits: Vec<f64>,
    pub total_per_user: Vec<f64>,
    pub wsr: f64,
}

impl RateReport {
    /// Assembles a report; `splits` defaults to [`allocate_common`].
    pub fn new(common_per_user: Vec<f64>, private: Vec<f64>, splits: Option<Vec<f64>>, weights: &[f64], qos: f64) -> Self {
        let common_rate = if common_per_user.is_empty() {
            0.0
        } else {
            common_per_user.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0)
        };
        let splits = splits.unwrap_or_else(|| allocate_common(common_rate, &private, weights, qos));
        let total: Vec<f64> = splits.iter().zip(&private).map(|(c, r)| c + r).collect();
        let mut report = RateReport {
            common_rate_per_user: common_per_user,
            common_rate,
            private_rates: private,
            common_splits: splits,
            total_per_user: total,
            wsr: 0.0,
        };
        report.wsr = wsr(&report, weights);
        report
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric report")
    }
}

/// `∑ μ_k (C_k + R_k)`.
pub fn wsr(report: &RateReport, weights: &[f64]) -> f64 {
    weights
        .iter()
        .zip(report.common_splits.iter().zip(&report.private_rates))
        .map(|(mu, (c, r))| mu * (c + r))
        .sum()
}

/// Sample-average rate report for `mode`. `order` is the NOMA decoding
/// order and is ignored otherwise.
pub fn average_report(
    mode: AccessMode,
    p: &CMatrix,
    saa: &SaaSampleSet,
    order: &[usize],
    noise: f64,
    weights: &[f64],
    qos: f64,
) -> RateReport {
    let k_users = p.ncols() - 1;
    match mode {
        AccessMode::Rsma => {
            let ar = average_rates(p, saa, noise);
            RateReport::new(ar.common, ar.private, None, weights, qos)
        }
        AccessMode::Sdma => {
            let ar = average_rates(p, saa, noise);
            RateReport::new(vec![], ar.private, Some(vec![0.0; k_users]), weights, qos)
        }
        AccessMode::Noma => {
            let r = noma_average_rates(p, saa, order, noise);
            RateReport::new(vec![], r, Some(vec![0.0; k_users]), weights, qos)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn random(rng: &mut impl Rng, r: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(r, cols, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn zero_common_precoder_has_zero_common_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = random(&mut rng, 4, 3);
        p.column_mut(0).fill(c(0.0));
        let h = random(&mut rng, 4, 2);
        assert_eq!(rsma_sinrs(&p, &h, 0, 1.0).0, 0.0);
    }

    #[test]
    fn scalar_rsma_instance() {
        let h = CMatrix::from_column_slice(2, 1, &[c(1.0), c(0.0)]);
        let p = CMatrix::from_column_slice(2, 2, &[c(1.0), c(0.0), c(1.0), c(0.0)]);
        let (gc, gp) = rsma_sinrs(&p, &h, 0, 1.0);
        assert!((gc - 0.5).abs() < 1e-15);
        assert!((gp - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_privates_have_no_interference() {
        let h = CMatrix::from_column_slice(2, 2, &[c(2.0), c(0.0), c(0.0), c(3.0)]);
        let p = CMatrix::from_column_slice(2, 3, &[c(0.0), c(0.0), c(0.5), c(0.0), c(0.0), c(0.7)]);
        let (_, g0) = rsma_sinrs(&p, &h, 0, 2.0);
        let (_, g1) = rsma_sinrs(&p, &h, 1, 2.0);
        assert!((g0 - 0.25 * 4.0 / 2.0).abs() < 1e-15);
        assert!((g1 - 0.49 * 9.0 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sinrs_ignore_column_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random(&mut rng, 4, 4);
        let h = random(&mut rng, 4, 3);
        let mut q = p.clone();
        for j in 0..4 {
            let ph = Complex::from_polar(1.0, rng.random::<f64>() * 6.0);
            let col = q.column(j) * ph;
            q.set_column(j, &col);
        }
        for k in 0..3 {
            let a = rsma_sinrs(&p, &h, k, 1.0);
            let b = rsma_sinrs(&q, &h, k, 1.0);
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_values() {
        assert_eq!(rate_from_sinr(0.0), 0.0);
        assert!((rate_from_sinr(1.0) - 1.0).abs() < 1e-15);
        assert!((rate_from_sinr(3.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn noma_single_user_is_snr() {
        let h = CMatrix::from_column_slice(2, 1, &[c(1.0), c(1.0)]);
        let p = CMatrix::from_column_slice(2, 2, &[c(0.0), c(0.0), c(1.0), c(0.0)]);
        let g = noma_sinrs(&p, &h, &[0], 0.5);
        assert!((g[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn noma_symmetric_pair() {
        let h = CMatrix::from_column_slice(2, 2, &[c(1.0), c(0.5), c(1.0), c(0.5)]);
        let p = CMatrix::from_column_slice(2, 3, &[c(0.0), c(0.0), c(0.3), c(0.2), c(0.3), c(0.2)]);
        let g = noma_sinrs(&p, &h, &[0, 1], 1.0);
        assert!((g[(1, 0)] - g[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn noma_hand_instance() {
        // Order: user 1 first, then user 0.
        let h = CMatrix::from_column_slice(1, 2, &[c(1.0), c(2.0)]);
        let p = CMatrix::from_column_slice(1, 3, &[c(0.0), c(1.0), c(0.5)]);
        let order = [1, 0];
        let g = noma_sinrs(&p, &h, &order, 1.0);
        // user π(0)=1 decodes its own stream (p = 0.5) with stream of user 0
        // (p = 1) as interference: |2·0.5|² / (|2·1|² + 1) = 1/5.
        assert!((g[(0, 0)] - 0.2).abs() < 1e-15);
        // user π(1)=0 decodes stream of user 1 first: |1·0.5|²/(|1·1|²+1).
        assert!((g[(1, 0)] - 0.125).abs() < 1e-15);
        // then its own with nothing left: |1·1|²/1.
        assert!((g[(1, 1)] - 1.0).abs() < 1e-15);
        let rates = noma_average_rates(&p, &SaaSampleSet::exact(&h), &order, 1.0);
        assert!((rates[1] - rate_from_sinr(0.125)).abs() < 1e-15);
        assert!((rates[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noma_order_descends_with_index_ties() {
        let h = CMatrix::from_column_slice(1, 4, &[c(1.0), c(3.0), c(1.0), c(2.0)]);
        assert_eq!(noma_order(&h), vec![1, 3, 0, 2]);
    }

    #[test]
    fn single_exact_sample_equals_instantaneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random(&mut rng, 4, 3);
        let h = random(&mut rng, 4, 2);
        let ar = average_rates(&p, &SaaSampleSet::exact(&h), 1.0);
        for k in 0..2 {
            let (gc, gp) = rsma_sinrs(&p, &h, k, 1.0);
            assert_eq!(ar.common[k], rate_from_sinr(gc));
            assert_eq!(ar.private[k], rate_from_sinr(gp));
        }
    }

    #[test]
    fn duplicated_sample_set_leaves_average_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random(&mut rng, 4, 3);
        let set = SaaSampleSet {
            realizations: (0..5).map(|_| random(&mut rng, 4, 2)).collect(),
            seed: 0,
        };
        let mut doubled = set.clone();
        doubled.realizations.extend(set.realizations.clone());
        let a = average_rates(&p, &set, 1.0);
        let b = average_rates(&p, &doubled, 1.0);
        for k in 0..2 {
            assert!((a.common[k] - b.common[k]).abs() < 1e-14);
            assert!((a.private[k] - b.private[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn wsr_examples() {
        let r = RateReport::new(vec![], vec![1.0, 2.0], Some(vec![0.0, 0.0]), &[1.0, 1.0], 0.0);
        assert_eq!(r.wsr, 3.0);
        assert_eq!(wsr(&r, &[2.0, 2.0]), 6.0);
        let r = RateReport::new(vec![1.0, 1.0], vec![1.0, 1.0], Some(vec![0.5, 0.5]), &[1.0, 2.0], 0.0);
        assert!((r.wsr - 4.5).abs() < 1e-15);
    }

    #[test]
    fn common_allocation_is_on_the_simplex() {
        let s = allocate_common(1.0, &[0.05, 2.0, 0.0], &[1.0, 1.0, 3.0], 0.1);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((s[0] - 0.05).abs() < 1e-12);
        assert!((s[2] - 0.95).abs() < 1e-12);
        let tight = allocate_common(0.1, &[0.0, 0.0], &[1.0, 1.0], 0.1);
        assert!((tight[0] - 0.05).abs() < 1e-12 && (tight[1] - 0.05).abs() < 1e-12);
        let r = RateReport::new(vec![0.7, 0.4, 0.9], vec![0.05, 2.0, 0.0], None, &[1.0, 1.0, 3.0], 0.1);
        assert!((r.common_rate - 0.4).abs() < 1e-15);
        assert!((r.common_splits.iter().sum::<f64>() - r.common_rate).abs() < 1e-9);
        assert!(r.common_rate_per_user.iter().all(|v| r.common_rate <= *v));
    }

    #[test]
    fn sdma_is_rsma_without_common() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = random(&mut rng, 4, 3);
        p.column_mut(0).fill(c(0.0));
        let set = SaaSampleSet::exact(&random(&mut rng, 4, 2));
        let r = average_report(AccessMode::Rsma, &p, &set, &[], 1.0, &[1.0, 1.0], 0.0);
        let s = average_report(AccessMode::Sdma, &p, &set, &[], 1.0, &[1.0, 1.0], 0.0);
        assert_eq!(r.private_rates, s.private_rates);
        assert_eq!(r.common_rate, 0.0);
        assert!((r.wsr - s.wsr).abs() < 1e-15);
    }

    #[test]
    fn report_json_has_named_fields() {
        let r = RateReport::new(vec![1.0], vec![2.0], None, &[1.0], 0.0);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["common_rate_per_user", "common_rate", "private_rates", "common_splits", "total_per_user", "wsr"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
