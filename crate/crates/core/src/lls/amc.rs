//! Modulation and coding ladder.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "64QAM")]
    Qam64,
    #[serde(rename = "256QAM")]
    Qam256,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
            Modulation::Qam256 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
            Modulation::Qam64 => "64QAM",
            Modulation::Qam256 => "256QAM",
        }
    }
}

/// A modulation with a code rate `rate_num / rate_den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModCodePair {
    pub modulation: Modulation,
    pub rate_num: u32,
    pub rate_den: u32,
}

impl ModCodePair {
    pub fn code_rate(&self) -> f64 {
        self.rate_num as f64 / self.rate_den as f64
    }

    /// Information bits per modulated symbol.
    pub fn spectral_efficiency(&self) -> f64 {
        self.modulation.bits_per_symbol() as f64 * self.code_rate()
    }
}

/// Highest-efficiency entry not exceeding `achievable_rate`; among equal
/// efficiencies the earlier (lower-order) entry wins. `None` means the
/// stream is not transmitted.
pub fn amc_select(achievable_rate: f64, table: &[ModCodePair]) -> Option<ModCodePair> {
    let mut best: Option<ModCodePair> = None;
    for e in table {
        if e.spectral_efficiency() <= achievable_rate + 1e-12
            && best.is_none_or(|b| e.spectral_efficiency() > b.spectral_efficiency())
        {
            best = Some(*e);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_amc_table;

    #[test]
    fn ladder_efficiencies() {
        let se: Vec<f64> = default_amc_table().iter().map(|e| e.spectral_efficiency()).collect();
        let expect = [0.5, 1.0, 1.5, 2.0, 3.0, 3.0, 4.0, 4.5, 5.0, 6.0, 20.0 / 3.0];
        assert_eq!(se.len(), expect.len());
        for (a, b) in se.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn selection_examples() {
        let t = default_amc_table();
        assert_eq!(amc_select(0.0, &t), None);
        assert_eq!(amc_select(0.499, &t), None);
        let pick = amc_select(2.1, &t).unwrap();
        assert_eq!((pick.modulation, pick.rate_num, pick.rate_den), (Modulation::Qam16, 1, 2));
        let pick = amc_select(3.2, &t).unwrap();
        assert_eq!(pick.modulation, Modulation::Qam16);
        assert_eq!(amc_select(100.0, &t).unwrap().modulation, Modulation::Qam256);
    }

    #[test]
    fn selection_never_exceeds_rate() {
        let t = default_amc_table();
        for i in 0..800 {
            let r = i as f64 * 0.01;
            if let Some(e) = amc_select(r, &t) {
                assert!(e.spectral_efficiency() <= r + 1e-12);
            }
        }
    }
}
