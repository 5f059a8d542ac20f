//! Precoder optimization for a dual-functional radar-communication (DFRC)
//! transmitter with rate-splitting, space-division or non-orthogonal
//! multiple access under partial CSIT.
//!
//! The optimizer maximizes the average weighted sum-rate while matching a
//! desired transmit beampattern, through an ADMM split into a WMMSE-based
//! QCQP (communications) and a semidefinite relaxation (radar). A
//! link-level layer with polar codes, QAM and SIC receivers measures the
//! throughput that survives finite alphabets and block lengths.
//!
//! All optimizer quantities are expressed with the user noise power as the
//! unit of power, so `σ_n² = 1` and the power budget is `P_t / σ_n²`.

use nalgebra::{Complex, DMatrix, DVector};

pub type CMatrix = DMatrix<Complex<f64>>;
pub type CVector = DVector<Complex<f64>>;

pub mod admm;
pub mod channel;
pub mod error;
pub mod harness;
pub mod lls;
pub mod precoder;
pub mod radar;
pub mod rates;
pub mod scenario;
pub mod sdr;
pub mod wmmse;
