//! Beampattern-matching subproblem through a semidefinite relaxation.
//!
//! The radar objective depends on the precoder only through the aggregate
//! covariance `S = ∑_l R_ll`, the sum of the diagonal blocks of the lifted
//! matrix `R ⪰ p pᴴ`. The solver works with the equivalent reduced lift
//! `[[S, P], [Pᴴ, I]] ⪰ 0` (with `P` the matrix of active precoder columns)
//! and reconstructs the full `R = p pᴴ + blockdiag(S − P Pᴴ, 0, …)`, which
//! has the same aggregate and satisfies `R − p pᴴ ⪰ 0`. The full lift is
//! also available for cross-checking on small instances.

use conic::{ConicProblem, HermitianLmiBuilder, QuadForm, QuadraticFn, Settings, Status};
use nalgebra::{Complex, DMatrix, DVector};

use crate::error::OptimError;
use crate::precoder::{active_columns, stack_admm, RealLift};
use crate::radar::{best_scale, mse_from_gains, steering_matrix};
use crate::scenario::{AccessMode, ValidatedScenario};
use crate::{CMatrix, CVector};

/// Lower bound imposed on the pattern scale.
pub const ALPHA_FLOOR: f64 = 1e-6;

/// The u-update subproblem.
#[derive(Debug, Clone)]
pub struct UProblem {
    pub n_tx: usize,
    pub n_users: usize,
    /// Total power in noise units; each antenna gets `power / n_tx`.
    pub power: f64,
    pub lambda: f64,
    /// Steering vectors of the angle grid as columns.
    pub steering: CMatrix,
    pub desired: Vec<f64>,
    pub lift: RealLift,
}

impl UProblem {
    pub fn new(mode: AccessMode, n_tx: usize, n_users: usize, power: f64, lambda: f64, steering: CMatrix, desired: Vec<f64>) -> Self {
        assert_eq!(steering.ncols(), desired.len(), "one desired gain per grid angle");
        Self {
            n_tx,
            n_users,
            power,
            lambda,
            steering,
            desired,
            lift: RealLift::new(n_tx, active_columns(mode, n_users)),
        }
    }

    pub fn from_scenario(s: &ValidatedScenario) -> Self {
        let n = s.system.n_tx;
        Self::new(
            s.system.access_mode,
            n,
            s.system.n_users,
            s.system.normalized_power(),
            s.system.lambda_reg,
            steering_matrix(&s.radar.angle_grid, n, s.system.spacing),
            s.radar.desired_pattern.clone(),
        )
    }

    pub fn per_antenna_power(&self) -> f64 {
        self.power / self.n_tx as f64
    }

    /// `a(θ)ᴴ S a(θ)` on the grid.
    pub fn gains_of(&self, s: &CMatrix) -> Vec<f64> {
        (0..self.steering.ncols())
            .map(|m| {
                let a = self.steering.column(m);
                a.dotc(&(s * a)).re
            })
            .collect()
    }

    /// The relaxed objective `λ∑|α P_d − aᴴ S a|² + (ρ/2)(tr S − 2 Re pᴴ d̂)`.
    pub fn objective(&self, alpha: f64, s: &CMatrix, p: &CMatrix, target: &CVector, rho: f64) -> f64 {
        let mse = mse_from_gains(&self.gains_of(s), alpha, &self.desired);
        let cross: f64 = self
            .lift
            .columns
            .iter()
            .map(|&c| {
                let t = target.rows(c * self.n_tx, self.n_tx);
                t.dotc(&p.column(c)).re
            })
            .sum();
        self.lambda * mse + 0.5 * rho * (s.trace().re - 2.0 * cross)
    }
}

/// An affine expression `constant + ∑ coeff·z_var`.
#[derive(Debug, Clone, Default)]
struct Affine {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

/// How the aggregate covariance depends on the decision variables.
struct AggregateMap {
    diag: Vec<Affine>,
    /// Real and imaginary parts of `S(i, j)` for `i < j`, row-major.
    off: Vec<(usize, usize, Affine, Affine)>,
}

/// How the pattern scale `α` (variable 0) enters the relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScaleMode {
    /// `α` is a decision variable with `α ≥ ALPHA_FLOOR`.
    Explicit,
    /// `α` is minimized out in closed form: the residual is projected off
    /// the desired pattern. Exact whenever the fitted `α` clears the floor,
    /// and much better conditioned when `λ` is small. Variable 0 is then
    /// decoupled and held at 1 by a `(α − 1)²` term.
    Eliminated,
}

/// Adds `λ ∑_m (α P_d(θ_m) − a_mᴴ S a_m)²` to `obj`, with `α` at index 0.
fn add_pattern_mse(up: &UProblem, map: &AggregateMap, obj: &mut QuadraticFn, n_vars: usize, scale: ScaleMode) {
    if up.lambda == 0.0 || scale == ScaleMode::Eliminated {
        let mut q = obj.quad.to_dense(n_vars);
        q[(0, 0)] += 1.0;
        obj.quad = QuadForm::Dense(q);
        obj.lin[0] -= 2.0;
        obj.constant += 1.0;
    }
    if up.lambda == 0.0 {
        return;
    }
    let mut b = DMatrix::<f64>::zeros(up.desired.len(), n_vars);
    let mut offset = DVector::<f64>::zeros(up.desired.len());
    for m in 0..up.desired.len() {
        let a = up.steering.column(m);
        b[(m, 0)] += up.desired[m];
        // residual = α P_d − aᴴ S a = row·z − offset
        for (i, d) in map.diag.iter().enumerate() {
            let w = a[i].norm_sqr();
            for &(v, c) in &d.terms {
                b[(m, v)] -= w * c;
            }
            offset[m] += w * d.constant;
        }
        for (i, j, re, im) in &map.off {
            let c = a[*i].conj() * a[*j];
            for &(v, k) in &re.terms {
                b[(m, v)] -= 2.0 * c.re * k;
            }
            for &(v, k) in &im.terms {
                b[(m, v)] += 2.0 * c.im * k;
            }
            offset[m] += 2.0 * (c.re * re.constant - c.im * im.constant);
        }
    }
    if scale == ScaleMode::Eliminated {
        let pd = DVector::from_column_slice(&up.desired);
        let pd2 = pd.norm_squared();
        if pd2 > 0.0 {
            let coef = b.transpose() * &pd / pd2;
            b -= &pd * coef.transpose();
            let c = pd.dot(&offset) / pd2;
            offset -= &pd * c;
        }
        b.column_mut(0).fill(0.0);
    }
    let q = b.transpose() * &b * up.lambda;
    match &mut obj.quad {
        QuadForm::Dense(existing) => *existing += q,
        other => {
            let mut dense = other.to_dense(n_vars);
            dense += q;
            *other = QuadForm::Dense(dense);
        }
    }
    obj.lin -= b.transpose() * &offset * (2.0 * up.lambda);
    obj.constant += up.lambda * offset.norm_squared();
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrDiagnostics {
    /// `‖R − p pᴴ‖_F`.
    pub schur_gap: f64,
    /// Smallest eigenvalue of `R − p pᴴ`.
    pub schur_min_eig: f64,
    /// `σ₂/σ₁` of `[[R, p], [pᴴ, 1]]`.
    pub rank_ratio: f64,
    /// Largest `|diag(S)_n − P/N|`.
    pub antenna_power_dev: f64,
    pub newton_steps: usize,
}

#[derive(Debug, Clone)]
pub struct SdrSolution {
    pub alpha: f64,
    /// `N × (K+1)` precoder read from the `p` variable.
    pub precoder: CMatrix,
    /// Aggregate covariance `∑_l R_ll`.
    pub aggregate: CMatrix,
    pub objective: f64,
    pub diagnostics: SdrDiagnostics,
}

impl SdrSolution {
    /// Full lifted matrix `R = p pᴴ + blockdiag(S − P Pᴴ, 0, …)` over the
    /// active columns.
    pub fn lifted_covariance(&self, columns: &[usize]) -> CMatrix {
        let n = self.precoder.nrows();
        let p = self.stacked(columns);
        let mut r = &p * p.adjoint();
        let pm = self.active(columns);
        let excess = &self.aggregate - &pm * pm.adjoint();
        let mut block = r.view_mut((0, 0), (n, n));
        block += excess;
        r
    }

    fn active(&self, columns: &[usize]) -> CMatrix {
        CMatrix::from_columns(&columns.iter().map(|&c| self.precoder.column(c)).collect::<Vec<_>>())
    }

    fn stacked(&self, columns: &[usize]) -> CVector {
        let pm = self.active(columns);
        CVector::from_column_slice(pm.as_slice())
    }
}

/// Stacked ADMM vector `[α; zeros; vec P]` for the u-side.
pub fn extract_precoder(sol: &SdrSolution, n_users: usize) -> CVector {
    stack_admm(sol.alpha, &vec![0.0; n_users], &sol.precoder)
}

fn solve_status(prob: &ConicProblem, sol: &conic::ConicSolution, settings: &Settings) -> Result<(), OptimError> {
    match sol.status {
        Status::Optimal => Ok(()),
        _ if sol.status != Status::Infeasible && sol.max_violation <= settings.feas_tol => Ok(()),
        _ => Err(OptimError::Solver {
            stage: "radar",
            message: sol.message.clone(),
            dump: prob.dump(),
        }),
    }
}

fn diagnostics(sol: &SdrSolution, columns: &[usize], per_antenna: f64, newton_steps: usize) -> SdrDiagnostics {
    let r = sol.lifted_covariance(columns);
    let p = sol.stacked(columns);
    let gap = &r - &p * p.adjoint();
    let schur_min_eig = gap.clone().symmetric_eigenvalues().min();
    let d = r.nrows();
    let mut q = CMatrix::zeros(d + 1, d + 1);
    q.view_mut((0, 0), (d, d)).copy_from(&r);
    q.view_mut((0, d), (d, 1)).copy_from(&p);
    q.view_mut((d, 0), (1, d)).copy_from(&p.adjoint());
    q[(d, d)] = Complex::from(1.0);
    let mut ev: Vec<f64> = q.symmetric_eigenvalues().iter().map(|e| e.abs()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let rank_ratio = if ev.len() > 1 && ev[0] > 0.0 { ev[1] / ev[0] } else { 0.0 };
    let antenna_power_dev = sol
        .aggregate
        .diagonal()
        .iter()
        .map(|v| (v.re - per_antenna).abs())
        .fold(0.0, f64::max);
    SdrDiagnostics {
        schur_gap: gap.norm(),
        schur_min_eig,
        rank_ratio,
        antenna_power_dev,
        newton_steps,
    }
}

/// Adds `−ρ Re(pᴴ d̂)` over the lifted precoder, whose first index is `base`.
fn add_proximal_cross(up: &UProblem, obj: &mut QuadraticFn, base: usize, target: &CVector, rho: f64) {
    for &col in &up.lift.columns {
        for n in 0..up.n_tx {
            let (re, im) = up.lift.index(n, col);
            let t = target[col * up.n_tx + n];
            obj.lin[base + re] -= rho * t.re;
            obj.lin[base + im] -= rho * t.im;
        }
    }
}

/// Solves the u-update with the reduced lift.
///
/// `target` is `d̂ = D_p v + d` (length `N(K+1)`); `hint` is a precoder
/// used to build a strictly feasible start.
pub fn solve_sdr(up: &UProblem, target: &CVector, rho: f64, hint: Option<&CMatrix>, settings: &Settings) -> Result<SdrSolution, OptimError> {
    let sol = solve_reduced(up, target, rho, hint, settings, ScaleMode::Eliminated)?;
    if up.lambda > 0.0 && fitted_scale(up, &sol.aggregate) < ALPHA_FLOOR {
        return solve_reduced(up, target, rho, hint, settings, ScaleMode::Explicit);
    }
    Ok(sol)
}

/// Unconstrained least-squares scale of the pattern of `s`.
fn fitted_scale(up: &UProblem, s: &CMatrix) -> f64 {
    let g = up.gains_of(s);
    let num: f64 = g.iter().zip(&up.desired).map(|(g, d)| g * d).sum();
    let den: f64 = up.desired.iter().map(|d| d * d).sum();
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

fn solve_reduced(up: &UProblem, target: &CVector, rho: f64, hint: Option<&CMatrix>, settings: &Settings, scale: ScaleMode) -> Result<SdrSolution, OptimError> {
    let n = up.n_tx;
    let l = up.lift.columns.len();
    let n_off = n * (n - 1);
    let base = 1 + n_off;
    let n_vars = base + up.lift.len();
    let per_antenna = up.per_antenna_power();

    let off_index = |i: usize, j: usize| -> usize {
        // position of the pair (i < j) in row-major order
        let before: usize = (0..i).map(|r| n - 1 - r).sum();
        1 + 2 * (before + (j - i - 1))
    };
    let mut map = AggregateMap { diag: Vec::new(), off: Vec::new() };
    for _ in 0..n {
        map.diag.push(Affine { terms: vec![], constant: per_antenna });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = off_index(i, j);
            map.off.push((i, j, Affine { terms: vec![(v, 1.0)], constant: 0.0 }, Affine { terms: vec![(v + 1, 1.0)], constant: 0.0 }));
        }
    }

    let mut prob = ConicProblem::new(n_vars);
    let mut obj = QuadraticFn::zero(n_vars);
    add_pattern_mse(up, &map, &mut obj, n_vars, scale);
    add_proximal_cross(up, &mut obj, base, target, rho);
    obj.constant += 0.5 * rho * up.power;
    prob.objective = obj;

    let mut lmi = HermitianLmiBuilder::new(n + l);
    for i in 0..n {
        lmi.constant(i, i, Complex::from(per_antenna));
        for j in (i + 1)..n {
            let v = off_index(i, j);
            lmi.real_part(v, i, j, 1.0);
            lmi.imag_part(v + 1, i, j, 1.0);
        }
    }
    for (b, &col) in up.lift.columns.iter().enumerate() {
        lmi.constant(n + b, n + b, Complex::from(1.0));
        for i in 0..n {
            let (re, im) = up.lift.index(i, col);
            lmi.real_part(base + re, i, n + b, 1.0);
            lmi.imag_part(base + im, i, n + b, 1.0);
        }
    }
    prob.add_lmi(lmi.build());
    prob.add_lin_le(vec![(0, -1.0)], -ALPHA_FLOOR);
    let explicit = up.lambda > 0.0 && scale == ScaleMode::Explicit;

    // Strictly feasible start: rows at 90% of the budget, S = P Pᴴ off the
    // diagonal, α at its best fit.
    let mut x0 = DVector::zeros(n_vars);
    let p0 = match hint {
        Some(p) => p.clone(),
        None => {
            let mut p = CMatrix::zeros(n, up.n_users + 1);
            for &c in &up.lift.columns {
                p.column_mut(c).fill(Complex::from(1.0));
            }
            p
        }
    };
    let mut p0 = crate::precoder::scale_rows_to(&p0, 0.9 * per_antenna, &up.lift.columns);
    for c in 0..p0.ncols() {
        if !up.lift.columns.contains(&c) {
            p0.column_mut(c).fill(Complex::from(0.0));
        }
    }
    let s0 = &p0 * p0.adjoint();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = off_index(i, j);
            x0[v] = s0[(i, j)].re;
            x0[v + 1] = s0[(i, j)].im;
        }
    }
    let mut s_full = s0.clone();
    for i in 0..n {
        s_full[(i, i)] = Complex::from(per_antenna);
    }
    x0[0] = if explicit {
        best_scale(&up.gains_of(&s_full), &up.desired, ALPHA_FLOOR).max(2.0 * ALPHA_FLOOR)
    } else {
        1.0
    };
    x0.rows_mut(base, up.lift.len()).copy_from(&up.lift.lift(&p0));

    let sol = conic::solve_from(&prob, &x0, settings)?;
    solve_status(&prob, &sol, settings)?;
    let x = &sol.x;
    let mut s = CMatrix::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = Complex::from(per_antenna);
        for j in (i + 1)..n {
            let v = off_index(i, j);
            s[(i, j)] = Complex::new(x[v], x[v + 1]);
            s[(j, i)] = Complex::new(x[v], -x[v + 1]);
        }
    }
    let precoder = up.lift.unlift(&x.rows(base, up.lift.len()).into_owned(), up.n_users + 1);
    let alpha = if explicit {
        x[0]
    } else {
        best_scale(&up.gains_of(&s), &up.desired, ALPHA_FLOOR)
    };
    let objective = up.objective(alpha, &s, &precoder, target, rho);
    let mut out = SdrSolution {
        alpha,
        precoder,
        aggregate: s,
        objective,
        diagnostics: SdrDiagnostics {
            schur_gap: 0.0,
            schur_min_eig: 0.0,
            rank_ratio: 0.0,
            antenna_power_dev: 0.0,
            newton_steps: 0,
        },
    };
    out.diagnostics = diagnostics(&out, &up.lift.columns, per_antenna, sol.newton_steps);
    Ok(out)
}

/// The same subproblem over the full lifted matrix `[[R, p], [pᴴ, 1]] ⪰ 0`
/// with `R` of size `N·L`. Cubic in the lift size; meant for small
/// instances.
pub fn solve_sdr_full_lift(up: &UProblem, target: &CVector, rho: f64, settings: &Settings) -> Result<SdrSolution, OptimError> {
    let n = up.n_tx;
    let l = up.lift.columns.len();
    let d = n * l;
    let n_r = d * d;
    let base = 1 + n_r;
    let n_vars = base + up.lift.len();
    let per_antenna = up.per_antenna_power();

    // R layout: d diagonal reals, then (re, im) for every a < b row-major.
    let diag_index = |a: usize| 1 + a;
    let off_index = |a: usize, b: usize| -> usize {
        let before: usize = (0..a).map(|r| d - 1 - r).sum();
        1 + d + 2 * (before + (b - a - 1))
    };

    let mut map = AggregateMap { diag: Vec::new(), off: Vec::new() };
    for i in 0..n {
        map.diag.push(Affine {
            terms: (0..l).map(|b| (diag_index(b * n + i), 1.0)).collect(),
            constant: 0.0,
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let re = (0..l).map(|b| (off_index(b * n + i, b * n + j), 1.0)).collect();
            let im = (0..l).map(|b| (off_index(b * n + i, b * n + j) + 1, 1.0)).collect();
            map.off.push((i, j, Affine { terms: re, constant: 0.0 }, Affine { terms: im, constant: 0.0 }));
        }
    }

    let mut prob = ConicProblem::new(n_vars);
    let mut obj = QuadraticFn::zero(n_vars);
    add_pattern_mse(up, &map, &mut obj, n_vars, ScaleMode::Explicit);
    add_proximal_cross(up, &mut obj, base, target, rho);
    for a in 0..d {
        obj.lin[diag_index(a)] += 0.5 * rho;
    }
    prob.objective = obj;

    for dm in &map.diag {
        prob.add_lin_eq(dm.terms.clone(), per_antenna);
    }
    let mut lmi = HermitianLmiBuilder::new(d + 1);
    for a in 0..d {
        lmi.real_part(diag_index(a), a, a, 1.0);
        for b in (a + 1)..d {
            lmi.real_part(off_index(a, b), a, b, 1.0);
            lmi.imag_part(off_index(a, b) + 1, a, b, 1.0);
        }
    }
    for (blk, &col) in up.lift.columns.iter().enumerate() {
        for i in 0..n {
            let (re, im) = up.lift.index(i, col);
            lmi.real_part(base + re, blk * n + i, d, 1.0);
            lmi.imag_part(base + im, blk * n + i, d, 1.0);
        }
    }
    lmi.constant(d, d, Complex::from(1.0));
    prob.add_lmi(lmi.build());
    prob.add_lin_le(vec![(0, -1.0)], -ALPHA_FLOOR);

    // Start: p = 0, R = (P/N)/L · I, which meets the equalities strictly
    // inside the cone.
    let mut x0 = DVector::zeros(n_vars);
    for a in 0..d {
        x0[diag_index(a)] = per_antenna / l as f64;
    }
    x0[0] = 1.0;
    let sol = conic::solve_from(&prob, &x0, settings)?;
    solve_status(&prob, &sol, settings)?;
    let x = &sol.x;
    let mut s = CMatrix::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = Complex::from(map.diag[i].terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>());
    }
    for (i, j, re, im) in &map.off {
        let z = Complex::new(
            re.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>(),
            im.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>(),
        );
        s[(*i, *j)] = z;
        s[(*j, *i)] = z.conj();
    }
    let precoder = up.lift.unlift(&x.rows(base, up.lift.len()).into_owned(), up.n_users + 1);
    let alpha = if up.lambda == 0.0 {
        best_scale(&up.gains_of(&s), &up.desired, ALPHA_FLOOR)
    } else {
        x[0]
    };
    let mut r = CMatrix::zeros(d, d);
    for a in 0..d {
        r[(a, a)] = Complex::from(x[diag_index(a)]);
        for b in (a + 1)..d {
            let z = Complex::new(x[off_index(a, b)], x[off_index(a, b) + 1]);
            r[(a, b)] = z;
            r[(b, a)] = z.conj();
        }
    }
    let objective = up.objective(alpha, &s, &precoder, target, rho);
    let out = SdrSolution {
        alpha,
        precoder,
        aggregate: s,
        objective,
        diagnostics: SdrDiagnostics {
            schur_gap: 0.0,
            schur_min_eig: 0.0,
            rank_ratio: 0.0,
            antenna_power_dev: 0.0,
            newton_steps: sol.newton_steps,
        },
    };
    // Diagnostics from the solved R itself rather than the reconstruction.
    let p = out.stacked(&up.lift.columns);
    let gap = &r - &p * p.adjoint();
    let mut diag = diagnostics(&out, &up.lift.columns, per_antenna, sol.newton_steps);
    diag.schur_gap = gap.norm();
    diag.schur_min_eig = gap.symmetric_eigenvalues().min();
    Ok(SdrSolution { diagnostics: diag, ..out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_normal_matrix;
    use crate::precoder::{antenna_powers, vec_precoder};
    use crate::radar::beampattern_from_steering;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_problem(mode: AccessMode, n: usize, k: usize, lambda: f64) -> UProblem {
        let grid: Vec<f64> = (-90..=90).step_by(5).map(|a| a as f64).collect();
        let desired = grid.iter().map(|a| if a.abs() <= 10.0 { 1.0 } else { 0.0 }).collect();
        UProblem::new(mode, n, k, 4.0, lambda, steering_matrix(&grid, n, 0.5), desired)
    }

    #[test]
    fn proximal_only_limit_is_row_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let up = small_problem(AccessMode::Rsma, 4, 2, 0.0);
        let target_p = complex_normal_matrix(&mut rng, 4, 3, 1.0);
        let target = vec_precoder(&target_p);
        let sol = solve_sdr(&up, &target, 1.0, None, &Settings::default()).unwrap();
        let oracle = crate::precoder::scale_rows_to(&target_p, 1.0, &[0, 1, 2]);
        assert!((&sol.precoder - &oracle).norm() < 1e-5, "{}", (&sol.precoder - &oracle).norm());
        // No feasible point is closer to the target.
        for _ in 0..200 {
            let q = crate::precoder::clip_rows(&complex_normal_matrix(&mut rng, 4, 3, 1.0), 1.0);
            assert!((&q - &target_p).norm() >= (&sol.precoder - &target_p).norm() - 1e-6);
        }
    }

    #[test]
    fn feasible_pattern_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4;
        let p0 = crate::precoder::scale_rows_to(&complex_normal_matrix(&mut rng, n, 3, 1.0), 1.0, &[0, 1, 2]);
        let mut up = small_problem(AccessMode::Rsma, n, 2, 1.0);
        up.desired = beampattern_from_steering(&p0, &up.steering);
        let sol = solve_sdr(&up, &vec_precoder(&p0), 1e-6, None, &Settings::default()).unwrap();
        let mse = mse_from_gains(&up.gains_of(&sol.aggregate), sol.alpha, &up.desired);
        let scale: f64 = up.desired.iter().map(|d| d * d).sum();
        assert!(mse / scale < 1e-6, "relative mse {}", mse / scale);
    }

    #[test]
    fn reduced_and_full_lift_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (mode, lambda) in [(AccessMode::Rsma, 1e-2), (AccessMode::Sdma, 1.0), (AccessMode::Rsma, 0.0)] {
            let up = small_problem(mode, 3, 2, lambda);
            let target = vec_precoder(&complex_normal_matrix(&mut rng, 3, 3, 1.0));
            let a = solve_sdr(&up, &target, 0.5, None, &Settings::default()).unwrap();
            let b = solve_sdr_full_lift(&up, &target, 0.5, &Settings::default()).unwrap();
            let scale = 1.0 + a.objective.abs();
            assert!((a.objective - b.objective).abs() / scale < 1e-6, "{mode:?}: {} vs {}", a.objective, b.objective);
            assert!(b.diagnostics.schur_min_eig >= -1e-7);
            assert!(b.diagnostics.antenna_power_dev < 1e-6);
        }
    }

    #[test]
    fn relaxation_invariants_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for mode in AccessMode::ALL {
            let up = small_problem(mode, 4, 3, 1e-3);
            let target_p = complex_normal_matrix(&mut rng, 4, 4, 1.0);
            let sol = solve_sdr(&up, &vec_precoder(&target_p), 1.0, Some(&target_p), &Settings::default()).unwrap();
            assert!(sol.diagnostics.schur_min_eig >= -1e-7);
            assert!(sol.diagnostics.antenna_power_dev < 1e-6);
            assert!(sol.alpha >= ALPHA_FLOOR);
            assert!(antenna_powers(&sol.precoder).iter().all(|&e| e <= 1.0 + 1e-6));
            if !mode.has_common() {
                assert_eq!(sol.precoder.column(0).norm(), 0.0);
            }
            // Any rank-one point built from the target at per-antenna
            // equality is feasible, so it cannot beat the relaxation.
            let cols = active_columns(mode, 3);
            let mut q = crate::precoder::scale_rows_to(&target_p, 1.0, &cols);
            for c in 0..4 {
                if !cols.contains(&c) {
                    q.column_mut(c).fill(Complex::from(0.0));
                }
            }
            let s = &q * q.adjoint();
            let alpha = best_scale(&up.gains_of(&s), &up.desired, ALPHA_FLOOR);
            let rank_one = up.objective(alpha, &s, &q, &vec_precoder(&target_p), 1.0);
            assert!(sol.objective <= rank_one + 1e-6 * (1.0 + rank_one.abs()));
        }
    }

    #[test]
    fn extracted_vector_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let up = small_problem(AccessMode::Rsma, 3, 2, 1e-2);
        let target = vec_precoder(&complex_normal_matrix(&mut rng, 3, 3, 1.0));
        let sol = solve_sdr(&up, &target, 1.0, None, &Settings::default()).unwrap();
        let u = extract_precoder(&sol, 2);
        assert_eq!(u[0].re, sol.alpha);
        assert_eq!(u[1], Complex::from(0.0));
        assert_eq!(crate::precoder::select_precoder(&u, 2), vec_precoder(&sol.precoder));
    }
}
