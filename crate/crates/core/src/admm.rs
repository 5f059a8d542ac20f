//! ADMM coupling of the communication (v) and radar (u) subproblems through
//! a consensus constraint on the precoder.

use std::io::Write;

use nalgebra::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_normal, SaaSampleSet};
use crate::error::OptimError;
use crate::precoder::{active_columns, mrt_svd_init, scale_rows_to, vec_precoder};
use crate::radar::{best_scale, mse_from_gains};
use crate::rates::RateReport;
use crate::scenario::ValidatedScenario;
use crate::sdr::{solve_sdr, SdrDiagnostics, UProblem, ALPHA_FLOOR};
use crate::wmmse::{run_ao, AoOptions, Proximal, VProblem};
use crate::{CMatrix, CVector};

/// Share of the power given to private streams by the initial precoder.
pub const INIT_PRIVATE_SHARE: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct AdmmOptions {
    pub rho: f64,
    /// Primal and dual residual threshold.
    pub tol: f64,
    pub max_iters: usize,
    pub ao: AoOptions,
}

impl AdmmOptions {
    pub fn from_scenario(s: &ValidatedScenario) -> Self {
        Self {
            rho: s.solver.admm_penalty,
            tol: s.solver.admm_tol,
            max_iters: s.solver.max_admm_iters,
            ao: AoOptions::from_scenario(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmTraceRow {
    pub iter: usize,
    /// `‖D_p(v − u)‖`.
    pub r: f64,
    /// `‖D_p(u − u_prev)‖`.
    pub q: f64,
    /// AWSR of the v-side precoder.
    pub awsr: f64,
    /// Beampattern MSE of the u-side aggregate covariance.
    pub mse: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    /// u-side precoder with every antenna at its power budget.
    pub precoder: CMatrix,
    pub common_splits: Vec<f64>,
    /// Pattern scale fitted to the final precoder.
    pub alpha: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Iteration whose precoder was returned.
    pub selected_iter: usize,
    pub trace: Vec<AdmmTraceRow>,
    pub sdr: Vec<SdrDiagnostics>,
    /// Sample-average rates of the final precoder.
    pub rates: RateReport,
    /// Beampattern MSE of the final precoder at `alpha`.
    pub mse: f64,
}

/// `(‖D_p(v − u)‖, ‖D_p(u − u_prev)‖)` on precoder vectors.
pub fn residuals(v: &CVector, u: &CVector, u_prev: &CVector) -> (f64, f64) {
    ((v - u).norm(), (u - u_prev).norm())
}

/// Initial scaled dual `d⁰` with i.i.d. `CN(0, 1)` entries.
pub fn draw_dual_init<R: Rng + ?Sized>(rng: &mut R, n_tx: usize, n_users: usize) -> CVector {
    CVector::from_fn(n_tx * (n_users + 1), |_, _| complex_normal(rng, 1.0))
}

/// Runs the ADMM loop for one channel estimate. `d0` is the initial scaled
/// dual (see [`draw_dual_init`]); entries of inactive precoder columns are
/// ignored.
pub fn run_admm(scenario: &ValidatedScenario, h_est: &CMatrix, saa: &SaaSampleSet, d0: &CVector, opts: &AdmmOptions) -> Result<OptimizationResult, OptimError> {
    let vp = VProblem::from_scenario(scenario, h_est);
    let up = UProblem::from_scenario(scenario);
    let n = vp.n_tx;
    let k = vp.n_users;
    let cols = active_columns(vp.mode, k);
    let per_antenna = vp.per_antenna_power();

    let mut d = d0.clone();
    for c in 0..=k {
        if !cols.contains(&c) {
            d.rows_mut(c * n, n).fill(Complex::from(0.0));
        }
    }

    let p0 = mrt_svd_init(h_est, vp.power, INIT_PRIVATE_SHARE, vp.mode);
    let mut p_v = p0.clone();
    let mut vars: Option<Vec<f64>> = None;
    let mut p_u = p0;
    let mut u = vec_precoder(&p_u);
    let mut trace = Vec::new();
    let mut sdr = Vec::new();
    let mut best: Option<(f64, usize, CMatrix, Vec<f64>)> = None;
    let mut converged = false;

    for iter in 1..=opts.max_iters {
        let prox = Proximal { center: &u - &d, rho: opts.rho };
        let ao = run_ao(&vp, saa, &p_v, vars.as_deref(), Some(&prox), &opts.ao)?;
        p_v = ao.precoder;
        vars = Some(ao.rate_vars.clone());
        let v = vec_precoder(&p_v);

        let target = &v + &d;
        let sol = solve_sdr(&up, &target, opts.rho, Some(&p_u), &opts.ao.settings)?;
        let u_next = vec_precoder(&sol.precoder);
        d += &v - &u_next;
        let (r, q) = residuals(&v, &u_next, &u);
        let mse = mse_from_gains(&up.gains_of(&sol.aggregate), sol.alpha, &up.desired);
        trace.push(AdmmTraceRow {
            iter,
            r,
            q,
            awsr: vp.awsr(&p_v, ao.rate_vars.as_slice(), saa),
            mse,
            alpha: sol.alpha,
        });
        sdr.push(sol.diagnostics);
        u = u_next;
        p_u = sol.precoder;

        let score = r.max(q);
        if best.as_ref().is_none_or(|b| score <= b.0) {
            best = Some((score, iter, p_u.clone(), vp.common_splits(&ao.rate_vars)));
        }
        if r <= opts.tol && q <= opts.tol {
            converged = true;
            break;
        }
    }

    let (_, selected_iter, p_sel, splits) = best.expect("at least one ADMM iteration");
    let mut precoder = scale_rows_to(&p_sel, per_antenna, &cols);
    for c in 0..=k {
        if !cols.contains(&c) {
            precoder.column_mut(c).fill(Complex::from(0.0));
        }
    }
    let gains = up.gains_of(&(&precoder * precoder.adjoint()));
    let alpha = best_scale(&gains, &up.desired, ALPHA_FLOOR);
    let mse = mse_from_gains(&gains, alpha, &up.desired);
    let rates = vp.rate_report(&precoder, saa);
    Ok(OptimizationResult {
        precoder,
        common_splits: splits,
        alpha,
        converged,
        iterations: trace.len(),
        selected_iter,
        trace,
        sdr,
        rates,
        mse,
    })
}

/// Runs the v-update alone (no radar coupling) from the MRT-SVD start.
pub fn run_comms_only(scenario: &ValidatedScenario, h_est: &CMatrix, saa: &SaaSampleSet, opts: &AoOptions) -> Result<crate::wmmse::AoResult, OptimError> {
    let vp = VProblem::from_scenario(scenario, h_est);
    let p0 = mrt_svd_init(h_est, vp.power, INIT_PRIVATE_SHARE, vp.mode);
    run_ao(&vp, saa, &p0, None, None, opts)
}

pub fn write_admm_trace_csv<W: Write>(trace: &[AdmmTraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iter,r,q,awsr,mse,alpha")?;
    for t in trace {
        writeln!(out, "{},{:e},{:e},{:e},{:e},{:e}", t.iter, t.r, t.q, t.awsr, t.mse, t.alpha)?;
    }
    Ok(())
}
