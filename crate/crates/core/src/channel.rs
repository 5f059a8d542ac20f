//! Rayleigh channels with CSIT error, channel aging and SAA sample sets.

use std::io::Write;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::scenario::{ValidatedScenario, SPEED_OF_LIGHT};
use crate::CMatrix;

/// How the Jakes correlation `ρ = J₀(2π f_D T)` maps to an error variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JakesMapping {
    /// `σ_e² = 1 − ρ²`, from `ĥ ~ CN(0, 1 − σ_e²)` with `√(1 − σ_e²) = ρ`.
    #[default]
    Squared,
    /// `σ_e² = √(1 − ρ²)`.
    Root,
}

impl JakesMapping {
    pub fn error_var(self, rho: f64) -> f64 {
        let v = (1.0 - rho * rho).max(0.0);
        match self {
            JakesMapping::Squared => v,
            JakesMapping::Root => v.sqrt(),
        }
    }
}

/// `J₀(2π (v f_c / c) T)`.
pub fn jakes_corr(speed: f64, carrier_freq: f64, interval: f64) -> f64 {
    let doppler = speed * carrier_freq / SPEED_OF_LIGHT;
    libm::j0(2.0 * std::f64::consts::PI * doppler * interval)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    /// N×K, column k is user k.
    pub h_true: CMatrix,
    pub h_est: CMatrix,
    pub corr_coeff: f64,
    pub err_var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaaSampleSet {
    pub realizations: Vec<CMatrix>,
    pub seed: u64,
}

impl SaaSampleSet {
    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }

    /// A single-realization set holding `h` (perfect CSIT).
    pub fn exact(h: &CMatrix) -> Self {
        Self {
            realizations: vec![h.clone()],
            seed: 0,
        }
    }
}

/// Draw from `CN(0, var)`: independent real and imaginary parts of
/// variance `var/2`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex<f64> {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re * s, im * s)
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMatrix {
    // Fill column-major explicitly so the draw order is part of the contract.
    let mut m = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng, var);
        }
    }
    m
}

/// One channel realization with its CSIT estimate.
///
/// Without `prev`, `Ĥ ~ CN(0, 1 − σ_e²)` and `H = Ĥ + H̃` with
/// `H̃ ~ CN(0, σ_e²)`. With `prev`, the channel evolves as
/// `H = ρ H_prev + √(1 − ρ²) N` and the transmitter only knows `Ĥ = H_prev`.
pub fn draw_aged_channel<R: Rng + ?Sized>(scenario: &ValidatedScenario, rng: &mut R, prev: Option<&CMatrix>) -> ChannelSample {
    let n = scenario.system.n_tx;
    let k = scenario.system.n_users;
    let rho = scenario.corr_coeff;
    let err_var = scenario.csit_error_var;
    match prev {
        None => {
            let h_est = complex_normal_matrix(rng, n, k, 1.0 - err_var);
            let err = complex_normal_matrix(rng, n, k, err_var);
            ChannelSample {
                h_true: &h_est + err,
                h_est,
                corr_coeff: rho,
                err_var,
            }
        }
        Some(p) => {
            assert_eq!(p.shape(), (n, k), "previous channel has the wrong shape");
            let innovation = complex_normal_matrix(rng, n, k, 1.0);
            let scale = (1.0 - rho * rho).max(0.0).sqrt();
            ChannelSample {
                h_true: p * Complex::from(rho) + innovation * Complex::from(scale),
                h_est: p.clone(),
                corr_coeff: rho,
                err_var,
            }
        }
    }
}

/// `m_saa` matrices `Ĥ + H̃⁽ᵐ⁾` with `H̃⁽ᵐ⁾ ~ CN(0, σ_e²)`, reproducible from
/// `seed`.
pub fn draw_saa_set(sample: &ChannelSample, m_saa: usize, seed: u64) -> SaaSampleSet {
    assert!(m_saa >= 1, "SAA set needs at least one realization");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, k) = sample.h_est.shape();
    let realizations = (0..m_saa)
        .map(|_| &sample.h_est + complex_normal_matrix(&mut rng, n, k, sample.err_var))
        .collect();
    SaaSampleSet { realizations, seed }
}

/// Writes the SAA set as CSV: a `# N,K,M_saa,seed` header line followed by
/// one row per realization with entries row-major as interleaved re,im.
pub fn write_saa_csv<W: Write>(set: &SaaSampleSet, mut out: W) -> std::io::Result<()> {
    let (n, k) = set.realizations.first().map(|h| h.shape()).unwrap_or((0, 0));
    writeln!(out, "# N={n},K={k},M_saa={},seed={}", set.len(), set.seed)?;
    for h in &set.realizations {
        let mut fields = Vec::with_capacity(2 * n * k);
        for r in 0..n {
            for c in 0..k {
                fields.push(format!("{:e}", h[(r, c)].re));
                fields.push(format!("{:e}", h[(r, c)].im));
            }
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
