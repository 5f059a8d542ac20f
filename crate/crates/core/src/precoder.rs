//! Precoder layout, stacking for the ADMM vectors, real lifting and the
//! MRT-SVD starting point.
//!
//! A precoder is an `N × (K+1)` matrix whose column 0 is the common stream
//! and column `k+1` the private stream of user `k`. Its vectorization is
//! column-major.

use nalgebra::{Complex, DVector};

use crate::scenario::AccessMode;
use crate::{CMatrix, CVector};

pub fn vec_precoder(p: &CMatrix) -> CVector {
    CVector::from_column_slice(p.as_slice())
}

pub fn unvec_precoder(v: &CVector, n_tx: usize) -> CMatrix {
    assert!(n_tx > 0 && v.len().is_multiple_of(n_tx), "length {} is not a multiple of {n_tx}", v.len());
    CMatrix::from_column_slice(n_tx, v.len() / n_tx, v.as_slice())
}

/// Stacked ADMM vector `[α; K split slots; vec P]`.
pub fn stack_admm(alpha: f64, splits: &[f64], p: &CMatrix) -> CVector {
    let k = splits.len();
    let mut u = CVector::zeros(1 + k + p.len());
    u[0] = Complex::from(alpha);
    for (i, s) in splits.iter().enumerate() {
        u[1 + i] = Complex::from(*s);
    }
    u.rows_mut(1 + k, p.len()).copy_from_slice(p.as_slice());
    u
}

/// Precoder entries of a stacked ADMM vector.
pub fn select_precoder(u: &CVector, n_users: usize) -> CVector {
    u.rows(1 + n_users, u.len() - 1 - n_users).into_owned()
}

/// Power radiated by each antenna, `diag(P Pᴴ)`.
pub fn antenna_powers(p: &CMatrix) -> Vec<f64> {
    p.row_iter().map(|r| r.norm_squared()).collect()
}

/// Largest `|diag(P Pᴴ)_n − target|`.
pub fn antenna_power_deviation(p: &CMatrix, target: f64) -> f64 {
    antenna_powers(p).iter().map(|v| (v - target).abs()).fold(0.0, f64::max)
}

/// Rescales every nonzero row to power `target`. Zero rows are filled with
/// equal-magnitude entries across the active columns so equality still
/// holds.
pub fn scale_rows_to(p: &CMatrix, target: f64, active: &[usize]) -> CMatrix {
    let mut out = p.clone();
    for n in 0..p.nrows() {
        let e = p.row(n).norm_squared();
        if e > 1e-300 {
            let s = (target / e).sqrt();
            out.row_mut(n).scale_mut(s);
        } else if !active.is_empty() {
            let z = Complex::from((target / active.len() as f64).sqrt());
            for &c in active {
                out[(n, c)] = z;
            }
        }
    }
    out
}

/// Scales down rows that exceed `limit`; others are untouched.
pub fn clip_rows(p: &CMatrix, limit: f64) -> CMatrix {
    let mut out = p.clone();
    for n in 0..p.nrows() {
        let e = p.row(n).norm_squared();
        if e > limit {
            out.row_mut(n).scale_mut((limit / e).sqrt());
        }
    }
    out
}

/// Precoder columns carrying power in `mode`.
pub fn active_columns(mode: AccessMode, n_users: usize) -> Vec<usize> {
    let first = if mode.has_common() { 0 } else { 1 };
    (first..=n_users).collect()
}

/// MRT-SVD initialization.
///
/// Private columns are matched filters `√(P t / K)·ĥ_k/‖ĥ_k‖`; the common
/// column is `√(P (1 − t))·u₁` with `u₁` the dominant left singular vector
/// of `Ĥ`. Without a common stream all power goes to the private columns.
/// Rows are then rescaled to `power / N` each.
pub fn mrt_svd_init(h_est: &CMatrix, power: f64, private_share: f64, mode: AccessMode) -> CMatrix {
    let (n, k) = h_est.shape();
    let t = if mode.has_common() { private_share.clamp(0.0, 1.0) } else { 1.0 };
    let mut p = CMatrix::zeros(n, k + 1);
    let q = (power * t / k as f64).sqrt();
    for j in 0..k {
        let h = h_est.column(j);
        let norm = h.norm();
        if norm > 0.0 {
            p.set_column(j + 1, &(h * Complex::from(q / norm)));
        }
    }
    if mode.has_common() && t < 1.0 {
        let svd = h_est.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let best = svd.singular_values.imax();
        p.set_column(0, &(u.column(best) * Complex::from((power * (1.0 - t)).sqrt())));
    }
    scale_rows_to(&p, power / n as f64, &active_columns(mode, k))
}

/// Real coordinates of the lifted precoder: column `c`'s block holds the
/// real parts of its `N` entries followed by the imaginary parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealLift {
    pub n_tx: usize,
    /// Precoder columns present in the lift, in block order.
    pub columns: Vec<usize>,
}

impl RealLift {
    pub fn new(n_tx: usize, columns: Vec<usize>) -> Self {
        Self { n_tx, columns }
    }

    pub fn len(&self) -> usize {
        2 * self.n_tx * self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Offset of the block for precoder column `col`, if lifted.
    pub fn block(&self, col: usize) -> Option<usize> {
        self.columns.iter().position(|&c| c == col).map(|b| 2 * self.n_tx * b)
    }

    /// `(re index, im index)` of entry `(n, col)`.
    pub fn index(&self, n: usize, col: usize) -> (usize, usize) {
        let b = self.block(col).expect("column not lifted");
        (b + n, b + self.n_tx + n)
    }

    pub fn lift(&self, p: &CMatrix) -> DVector<f64> {
        let mut x = DVector::zeros(self.len());
        for &c in &self.columns {
            for n in 0..self.n_tx {
                let (re, im) = self.index(n, c);
                x[re] = p[(n, c)].re;
                x[im] = p[(n, c)].im;
            }
        }
        x
    }

    /// Inverse of [`RealLift::lift`]; columns not lifted are zero.
    pub fn unlift(&self, x: &DVector<f64>, n_cols: usize) -> CMatrix {
        let mut p = CMatrix::zeros(self.n_tx, n_cols);
        for &c in &self.columns {
            for n in 0..self.n_tx {
                let (re, im) = self.index(n, c);
                p[(n, c)] = Complex::new(x[re], x[im]);
            }
        }
        p
    }
}
