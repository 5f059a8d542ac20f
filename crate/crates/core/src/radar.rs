//! Transmit beampattern, beampattern MSE, radar mutual information and the
//! Cramér-Rao bound for a single point target.

use std::io::Write;

use nalgebra::{Complex, DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::scenario::SPEED_OF_LIGHT;
use crate::{CMatrix, CVector};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternShape {
    /// 1 inside `|θ − θ₀| ≤ halfwidth`, 0 elsewhere.
    #[default]
    Rect,
    /// `exp(−(θ − θ₀)² / (2·halfwidth²))`.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadarSpec {
    /// Degrees, strictly increasing within [−90, 90].
    pub angle_grid: Vec<f64>,
    pub target_angle: f64,
    pub desired_pattern: Vec<f64>,
    /// Meters.
    pub target_range: f64,
    /// m/s.
    pub target_speed: f64,
    pub carrier_freq: f64,
    /// Receiver noise power σ_r², watts.
    pub rx_noise_power: f64,
    /// Degrees.
    pub beam_halfwidth: f64,
    pub pattern: PatternShape,
    /// Apply the free-space loss on both legs of the echo path.
    pub two_way: bool,
}

impl RadarSpec {
    pub fn target_index(&self) -> usize {
        self.angle_grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - self.target_angle).abs().total_cmp(&(b.1 - self.target_angle).abs()))
            .map(|(i, _)| i)
            .expect("nonempty grid")
    }

    /// `|h₀|²` of the echo path.
    pub fn path_gain(&self) -> f64 {
        let g = friis_gain(self.target_range, self.carrier_freq);
        if self.two_way {
            g * g
        } else {
            g
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beampattern {
    pub gains: Vec<f64>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RadarError {
    #[error("Fisher information is singular ({0}); the target parameters are not identifiable")]
    SingularFisher(String),
}

/// `[1, e^{j2πδ sinθ}, …, e^{j2π(n−1)δ sinθ}]`, θ in degrees.
pub fn steering_vector(theta_deg: f64, n: usize, spacing: f64) -> CVector {
    let phase = 2.0 * std::f64::consts::PI * spacing * theta_deg.to_radians().sin();
    CVector::from_fn(n, |i, _| Complex::from_polar(1.0, phase * i as f64))
}

/// Steering vectors for every grid angle as columns (N × M_grid).
pub fn steering_matrix(grid: &[f64], n: usize, spacing: f64) -> CMatrix {
    let mut a = CMatrix::zeros(n, grid.len());
    for (m, &theta) in grid.iter().enumerate() {
        a.set_column(m, &steering_vector(theta, n, spacing));
    }
    a
}

/// `Pₜ(θ) = a(θ)ᴴ P Pᴴ a(θ)` on the grid.
pub fn transmit_beampattern(p: &CMatrix, spec: &RadarSpec, spacing: f64) -> Beampattern {
    let a = steering_matrix(&spec.angle_grid, p.nrows(), spacing);
    Beampattern {
        gains: beampattern_from_steering(p, &a),
    }
}

pub fn beampattern_from_steering(p: &CMatrix, a: &CMatrix) -> Vec<f64> {
    // ‖Pᴴ a‖² per column of a.
    let proj = p.adjoint() * a;
    (0..a.ncols()).map(|m| proj.column(m).norm_squared()).collect()
}

pub fn gain_at(p: &CMatrix, theta_deg: f64, spacing: f64) -> f64 {
    let a = steering_vector(theta_deg, p.nrows(), spacing);
    (p.adjoint() * a).norm_squared()
}

/// `∑ₘ |α P_d(θₘ) − Pₜ(θₘ)|²`.
pub fn beampattern_mse(p: &CMatrix, alpha: f64, spec: &RadarSpec, spacing: f64) -> f64 {
    mse_from_gains(&transmit_beampattern(p, spec, spacing).gains, alpha, &spec.desired_pattern)
}

pub fn mse_from_gains(gains: &[f64], alpha: f64, desired: &[f64]) -> f64 {
    gains.iter().zip(desired).map(|(g, d)| (alpha * d - g).powi(2)).sum()
}

/// Scale minimizing the MSE for fixed gains, kept at or above `floor`.
pub fn best_scale(gains: &[f64], desired: &[f64], floor: f64) -> f64 {
    let num: f64 = gains.iter().zip(desired).map(|(g, d)| g * d).sum();
    let den: f64 = desired.iter().map(|d| d * d).sum();
    if den > 0.0 {
        (num / den).max(floor)
    } else {
        floor
    }
}

/// Desired pattern from the configured shape, half-width and target angle.
pub fn desired_pattern(spec: &RadarSpec) -> Vec<f64> {
    let w = spec.beam_halfwidth;
    spec.angle_grid
        .iter()
        .map(|&theta| {
            let d = theta - spec.target_angle;
            match spec.pattern {
                PatternShape::Rect => {
                    if d.abs() <= w + 1e-9 {
                        1.0
                    } else {
                        0.0
                    }
                }
                PatternShape::Gaussian => (-d * d / (2.0 * w * w)).exp(),
            }
        })
        .collect()
}

/// One-way free-space amplitude-squared gain `(c / (4π r f_c))²`.
pub fn friis_gain(range: f64, carrier_freq: f64) -> f64 {
    (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * range * carrier_freq)).powi(2)
}

/// RMI in bits from the rank-one form `log₂(1 + |h₀|² N Pₜ(θ₀) / σ_r²)`.
/// `p` is in watts.
pub fn radar_mutual_information(p: &CMatrix, spec: &RadarSpec, spacing: f64) -> f64 {
    let n = p.nrows() as f64;
    let pt0 = gain_at(p, spec.target_angle, spacing);
    (spec.path_gain() * n * pt0 / spec.rx_noise_power).ln_1p() / std::f64::consts::LN_2
}

/// Total CRB `‖F⁺‖_F` for `[Re h₀, Im h₀, τ₀, v₀]`. `p` is in watts.
///
/// Delay and velocity enter the echo only through `τ₀ − v₀/c`, so the 4×4
/// Fisher matrix always has the null direction `(0, 0, 1, c)`. The bound is
/// evaluated on its orthogonal complement, which makes it the
/// Moore-Penrose pseudo-inverse norm.
pub fn crb_total(p: &CMatrix, spec: &RadarSpec, spacing: f64) -> Result<f64, RadarError> {
    let pt0 = gain_at(p, spec.target_angle, spacing);
    let info = p.nrows() as f64 * pt0;
    let h0 = spec.path_gain().sqrt();
    crb_from_parts(info, h0, spec.carrier_freq, spec.rx_noise_power.sqrt(), SPEED_OF_LIGHT)
}

/// 4×4 Fisher matrix with scalar information `info = N·Pₜ(θ₀)`, real gain
/// `h0`, noise amplitude `sigma_r` and propagation speed `c`.
pub fn fisher_matrix(info: f64, h0: f64, carrier_freq: f64, sigma_r: f64, c: f64) -> DMatrix<f64> {
    let b = 2.0 * std::f64::consts::PI * carrier_freq * h0;
    let f1 = Complex::new(info, 0.0);
    let f2 = Complex::new(0.0, -b) * f1;
    let f3 = Complex::new(0.0, b / c) * f1;
    let f4 = -(b * b) * f1;
    let f5 = (b * b / c) * f1;
    let f6 = -(b / c).powi(2) * f1;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        f1.re, -f1.im, f2.re, f3.re,
        f1.im,  f1.re, f2.im, f3.im,
        f2.re,  f2.im, f4.re, f5.re,
        f3.re,  f3.im, f5.re, f6.re,
    ]);
    m * (2.0 / sigma_r)
}

pub fn crb_from_parts(info: f64, h0: f64, carrier_freq: f64, sigma_r: f64, c: f64) -> Result<f64, RadarError> {
    if !(info > 0.0) {
        return Err(RadarError::SingularFisher("zero beampattern gain towards the target".into()));
    }
    if !(h0 > 0.0) {
        return Err(RadarError::SingularFisher("zero path gain".into()));
    }
    let f = fisher_matrix(info, h0, carrier_freq, sigma_r, c);
    let s = (1.0 + c * c).sqrt();
    // Orthonormal basis of the identifiable subspace.
    let basis = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, c / s, 0.0, 0.0, -1.0 / s]);
    let g = basis.transpose() * &f * &basis;
    let g = Matrix3::from_iterator(g.iter().cloned());
    // Jacobi equilibration: the raw entries span many decades.
    let d: Vec<f64> = (0..3).map(|i| g[(i, i)].abs()).collect();
    if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(RadarError::SingularFisher("degenerate diagonal".into()));
    }
    let scale = Matrix3::from_diagonal(&nalgebra::Vector3::from_iterator(d.iter().map(|v| 1.0 / v.sqrt())));
    let eq = scale * g * scale;
    let sv = eq.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= 1e12) {
        return Err(RadarError::SingularFisher(format!("condition number {cond:.3e}")));
    }
    let inv = eq.try_inverse().ok_or_else(|| RadarError::SingularFisher("inversion failed".into()))?;
    let g_inv = scale * inv * scale;
    Ok(g_inv.norm())
}

/// Two-column CSV `angle_deg,gain_linear`.
pub fn write_beampattern_csv<W: Write>(grid: &[f64], gains: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "angle_deg,gain_linear")?;
    for (a, g) in grid.iter().zip(gains) {
        writeln!(out, "{a},{g:e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ValidatedScenario;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec() -> RadarSpec {
        ValidatedScenario::default_scenario().radar
    }

    fn random_p(rng: &mut impl Rng, n: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(n, cols, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn broadside_steering_is_all_ones() {
        let a = steering_vector(0.0, 8, 0.5);
        assert!(a.iter().all(|z| (z - Complex::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn endfire_half_wavelength() {
        let a = steering_vector(90.0, 2, 0.5);
        assert!((a[1] - Complex::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn thirty_degree_phases() {
        let a = steering_vector(30.0, 8, 0.5);
        for i in 0..8 {
            let expect = Complex::from_polar(1.0, std::f64::consts::FRAC_PI_2 * i as f64);
            assert!((a[i] - expect).norm() < 1e-12);
            assert!((a[i].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn coherent_gain_towards_target() {
        let s = spec();
        let (n, pt) = (8, 100.0);
        let mut p = CMatrix::zeros(n, 5);
        p.set_column(0, &(steering_vector(s.target_angle, n, 0.5) * Complex::from((pt / n as f64).sqrt())));
        let g = gain_at(&p, s.target_angle, 0.5);
        assert!((g - pt * n as f64).abs() < 1e-9);
        let pattern = transmit_beampattern(&CMatrix::zeros(n, 5), &s, 0.5);
        assert!(pattern.gains.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pattern_is_real_nonnegative_and_unitary_invariant() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_p(&mut rng, 8, 5);
        let g = transmit_beampattern(&p, &s, 0.5).gains;
        assert!(g.iter().all(|v| *v >= -1e-9));
        let q = random_p(&mut rng, 5, 5).qr().q();
        let g2 = transmit_beampattern(&(&p * q), &s, 0.5).gains;
        for (a, b) in g.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn mse_edge_cases() {
        let mut s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_p(&mut rng, 8, 5);
        let g = transmit_beampattern(&p, &s, 0.5).gains;
        s.desired_pattern = vec![0.0; g.len()];
        let expect: f64 = g.iter().map(|v| v * v).sum();
        assert!((beampattern_mse(&p, 1.0, &s, 0.5) - expect).abs() < 1e-9 * expect);
        s.desired_pattern = g.iter().map(|v| v / 2.5).collect();
        assert!(beampattern_mse(&p, 2.5, &s, 0.5) < 1e-18 * expect.max(1.0));
    }

    #[test]
    fn mse_small_hand_instance() {
        // N = 2, one column, grid {−30°, 0°, 30°}, δ = 0.5.
        let p = CMatrix::from_column_slice(2, 1, &[Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)]);
        let mut s = spec();
        s.angle_grid = vec![-30.0, 0.0, 30.0];
        s.desired_pattern = vec![0.0, 1.0, 0.0];
        // a(θ)ᴴp = 1 + j·e^{−jπ sinθ}; |·|² = 2 + 2 sin(π sinθ).
        let gains: Vec<f64> = s
            .angle_grid
            .iter()
            .map(|t: &f64| 2.0 + 2.0 * (std::f64::consts::PI * t.to_radians().sin()).sin())
            .collect();
        assert!((gains[0] - 0.0).abs() < 1e-12 && (gains[1] - 2.0).abs() < 1e-12 && (gains[2] - 4.0).abs() < 1e-12);
        let alpha = 1.5;
        let expect = (0.0f64 - 0.0).powi(2) + (1.5f64 - 2.0).powi(2) + (0.0f64 - 4.0).powi(2);
        assert!((beampattern_mse(&p, alpha, &s, 0.5) - expect).abs() < 1e-12);
    }

    #[test]
    fn best_scale_minimizes() {
        let g = [1.0, 3.0, 0.5];
        let d = [1.0, 1.0, 0.0];
        let a = best_scale(&g, &d, 1e-6);
        assert!((a - 2.0).abs() < 1e-15);
        for da in [-1e-3, 1e-3] {
            assert!(mse_from_gains(&g, a + da, &d) > mse_from_gains(&g, a, &d));
        }
        assert_eq!(best_scale(&[1.0], &[0.0], 1e-6), 1e-6);
    }

    #[test]
    fn rect_pattern_support() {
        let s = spec();
        for (theta, v) in s.angle_grid.iter().zip(&s.desired_pattern) {
            assert_eq!(*v == 1.0, theta.abs() <= 8.0, "θ = {theta}");
        }
        let n = s.desired_pattern.len();
        for i in 0..n {
            assert_eq!(s.desired_pattern[i], s.desired_pattern[n - 1 - i]);
        }
        let mut wide = s.clone();
        wide.beam_halfwidth = 90.0;
        assert!(desired_pattern(&wide).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn friis_values() {
        assert!((friis_gain(50.0, 2e9) - 5.70e-8).abs() < 0.01e-8);
        assert!((friis_gain(100.0, 2e9) * 4.0 - friis_gain(50.0, 2e9)).abs() < 1e-20);
        let mut last = f64::INFINITY;
        for fc in [1e9, 1e10, 1e11, 1e12] {
            let g = friis_gain(50.0, fc);
            assert!(g < last);
            last = g;
        }
    }

    #[test]
    fn rmi_rank_one_identity_matches_determinant() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 8;
        let at = steering_vector(s.target_angle, n, 0.5);
        let ar = at.clone();
        for _ in 0..100 {
            // Milliwatt-scale precoders keep the determinant away from overflow.
            let p = random_p(&mut rng, n, 5) * Complex::from(1e-7);
            let h0 = s.path_gain().sqrt();
            let hr = &at * ar.adjoint() * Complex::from(h0);
            let m = CMatrix::identity(n, n) + hr.adjoint() * &p * p.adjoint() * &hr / Complex::from(s.rx_noise_power);
            let det = m.determinant();
            let dense = det.re.log2();
            let scalar = radar_mutual_information(&p, &s, 0.5);
            assert!((dense - scalar).abs() < 1e-10 * (1.0 + scalar), "{dense} vs {scalar}");
        }
    }

    #[test]
    fn rmi_zero_and_monotone() {
        let s = spec();
        assert_eq!(radar_mutual_information(&CMatrix::zeros(8, 5), &s, 0.5), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = random_p(&mut rng, 8, 5) * Complex::from(0.01);
        let mut last = -1.0;
        for k in 1..10 {
            let v = radar_mutual_information(&(&p * Complex::from(k as f64)), &s, 0.5);
            assert!(v > last);
            last = v;
        }
    }

    /// Closed form of `‖F⁺‖_F` for real h₀.
    fn crb_closed_form(info: f64, h0: f64, fc: f64, sigma_r: f64, c: f64) -> f64 {
        let kappa = 2.0 * info / sigma_r;
        let beta = 2.0 * std::f64::consts::PI * fc * h0 * (1.0 + c * c).sqrt() / c;
        (1.25 + 1.0 / (2.0 * beta * beta) + 1.0 / (4.0 * beta.powi(4))).sqrt() / kappa
    }

    #[test]
    fn crb_matches_closed_form_at_paper_scale() {
        let s = spec();
        let info = 8.0 * 0.8;
        let h0 = friis_gain(50.0, 2e9).sqrt();
        let sigma_r = s.rx_noise_power.sqrt();
        let got = crb_from_parts(info, h0, 2e9, sigma_r, SPEED_OF_LIGHT).unwrap();
        let expect = crb_closed_form(info, h0, 2e9, sigma_r, SPEED_OF_LIGHT);
        assert!(got.is_finite() && got > 0.0);
        assert!((got - expect).abs() < 1e-9 * expect, "{got} vs {expect}");
    }

    #[test]
    fn crb_matches_svd_pseudo_inverse_on_well_scaled_instance() {
        // With c and b of order one the dense pseudo-inverse is reliable.
        for (info, h0, fc, c) in [(2.0, 0.3, 0.7, 1.5), (0.5, 1.1, 0.2, 0.8), (3.0, 0.05, 2.0, 4.0)] {
            let f = fisher_matrix(info, h0, fc, 1.0, c);
            let pinv = f.clone().pseudo_inverse(1e-10).unwrap();
            let got = crb_from_parts(info, h0, fc, 1.0, c).unwrap();
            assert!((got - pinv.norm()).abs() < 1e-8 * got, "{got} vs {}", pinv.norm());
            assert!((got - crb_closed_form(info, h0, fc, 1.0, c)).abs() < 1e-10 * got);
            // The singular direction is exactly (0, 0, 1, c).
            let null = DVector::from_vec(vec![0.0, 0.0, 1.0, c]);
            assert!((&f * null).norm() < 1e-12 * f.norm());
        }
    }

    #[test]
    fn crb_halves_when_gain_doubles_and_is_monotone() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = random_p(&mut rng, 8, 5) * Complex::from(0.05);
        let c1 = crb_total(&p, &s, 0.5).unwrap();
        let c2 = crb_total(&(&p * Complex::from(2f64.sqrt())), &s, 0.5).unwrap();
        assert!((c2 - c1 / 2.0).abs() < 1e-9 * c1);
        let mut last = f64::INFINITY;
        for k in 1..10 {
            let v = crb_total(&(&p * Complex::from(k as f64)), &s, 0.5).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn crb_without_target_gain_is_singular() {
        let s = spec();
        assert!(matches!(crb_total(&CMatrix::zeros(8, 5), &s, 0.5), Err(RadarError::SingularFisher(_))));
    }

    #[test]
    fn beampattern_csv_layout() {
        let mut buf = Vec::new();
        write_beampattern_csv(&[-1.0, 0.0], &[0.5, 2.0], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "angle_deg,gain_linear\n-1,5e-1\n0,2e0\n");
    }
}
