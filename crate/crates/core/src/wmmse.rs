//! Sample-average WMMSE alternating optimization of the average weighted
//! sum-rate, with an optional proximal term coupling the precoder to an
//! ADMM consensus point.
//!
//! Every stream decoded at a receiver is a [`StreamTerm`]: the receiving
//! user, the precoder column of the stream and the columns whose power
//! reaches the equalizer (the stream itself plus everything not yet
//! cancelled). RSMA, SDMA and NOMA differ only in which terms exist and how
//! the rate variables tie them together.

use std::f64::consts::LN_2;
use std::io::Write;

use conic::{ConicProblem, QuadForm, QuadraticFn, Settings, Status};
use nalgebra::{Complex, DVector};

use crate::channel::SaaSampleSet;
use crate::error::OptimError;
use crate::precoder::{active_columns, clip_rows, vec_precoder, RealLift};
use crate::rates::{allocate_common, average_rates, noma_average_rates, noma_order, AverageRates, RateReport};
use crate::scenario::{AccessMode, ValidatedScenario};
use crate::{CMatrix, CVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamTerm {
    pub user: usize,
    pub stream: usize,
    /// Precoder columns in the receive power `T`, including `stream`.
    pub interferers: Vec<usize>,
}

/// `|hᴴ p_j|²` summed over `cols`, plus noise.
pub fn receive_power(p: &CMatrix, h: &CMatrix, user: usize, cols: &[usize], noise: f64) -> f64 {
    let hk = h.column(user);
    cols.iter().map(|&j| hk.dotc(&p.column(j)).norm_sqr()).sum::<f64>() + noise
}

/// MMSE equalizer of one stream: `(g, T, hᴴ p_s)` with `g = p_sᴴ h / T`.
pub fn mmse_equalizer(p: &CMatrix, h: &CMatrix, term: &StreamTerm, noise: f64) -> (Complex<f64>, f64, Complex<f64>) {
    let t = receive_power(p, h, term.user, &term.interferers, noise);
    let z = h.column(term.user).dotc(&p.column(term.stream));
    (z.conj() / t, t, z)
}

/// RSMA common and private equalizers of user `k`.
pub fn mmse_equalizers(p: &CMatrix, h: &CMatrix, k: usize, noise: f64) -> (Complex<f64>, Complex<f64>) {
    let users = p.ncols() - 1;
    let common = StreamTerm { user: k, stream: 0, interferers: (0..=users).collect() };
    let private = StreamTerm { user: k, stream: k + 1, interferers: (1..=users).collect() };
    (mmse_equalizer(p, h, &common, noise).0, mmse_equalizer(p, h, &private, noise).0)
}

/// `ε = |g|² T − 2 Re(g hᴴp) + 1`.
pub fn mse(g: Complex<f64>, t: f64, z: Complex<f64>) -> f64 {
    g.norm_sqr() * t - 2.0 * (g * z).re + 1.0
}

pub fn mmse_weight(eps: f64) -> f64 {
    1.0 / eps
}

/// `ξ = (w ε − 1)/ln 2 − log₂ w + 1`, the rate-in-bits form: for every
/// `w > 0` it bounds `1 − R` from above, with equality at `w = 1/ε`.
pub fn augmented_mse(eps: f64, w: f64) -> f64 {
    (w * eps - 1.0) / LN_2 - w.log2() + 1.0
}

/// Sample averages of the per-realization quantities of one stream term.
#[derive(Debug, Clone, PartialEq)]
pub struct Saf {
    /// Mean `w |g|²`.
    pub t: f64,
    /// Mean `w |g|² h hᴴ`.
    pub psi: CMatrix,
    /// Mean `w h ḡ`.
    pub f: CVector,
    pub w: f64,
    /// Mean `log₂ w`.
    pub v: f64,
}

impl Saf {
    /// The augmented MSE at `p` for the equalizers and weights frozen in
    /// this SAF: `(∑_j p_jᴴ Ψ p_j + t σ² − 2 Re(fᴴ p_s) + w − 1)/ln 2 − v + 1`.
    pub fn awmse(&self, p: &CMatrix, term: &StreamTerm, noise: f64) -> f64 {
        let quad: f64 = term
            .interferers
            .iter()
            .map(|&j| {
                let pj = p.column(j);
                pj.dotc(&(&self.psi * pj)).re
            })
            .sum();
        (quad + self.t * noise - 2.0 * self.f.dotc(&p.column(term.stream)).re + self.w - 1.0) / LN_2 - self.v + 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafBundle {
    pub terms: Vec<Saf>,
}

/// Per-term averages over the SAA set of the MMSE equalizers and weights
/// at `p`.
pub fn build_safs(p: &CMatrix, saa: &SaaSampleSet, terms: &[StreamTerm], noise: f64) -> SafBundle {
    let n = p.nrows();
    let m = saa.len() as f64;
    let out = terms
        .iter()
        .map(|term| {
            let mut acc = Saf {
                t: 0.0,
                psi: CMatrix::zeros(n, n),
                f: CVector::zeros(n),
                w: 0.0,
                v: 0.0,
            };
            for h in &saa.realizations {
                let (g, t_rx, z) = mmse_equalizer(p, h, term, noise);
                let w = mmse_weight(mse(g, t_rx, z));
                let hk = h.column(term.user);
                let tw = w * g.norm_sqr();
                acc.t += tw;
                acc.psi.gerc(Complex::from(tw), &hk, &hk, Complex::from(1.0));
                acc.f.axpy(Complex::from(w) * g.conj(), &hk, Complex::from(1.0));
                acc.w += w;
                acc.v += w.log2();
            }
            acc.t /= m;
            acc.psi /= Complex::from(m);
            acc.f /= Complex::from(m);
            acc.w /= m;
            acc.v /= m;
            acc
        })
        .collect();
    SafBundle { terms: out }
}

/// Proximal coupling `(ρ/2)‖vec P − center‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Proximal {
    pub center: CVector,
    pub rho: f64,
}

impl Proximal {
    pub fn penalty(&self, p: &CMatrix) -> f64 {
        0.5 * self.rho * (vec_precoder(p) - &self.center).norm_squared()
    }
}

/// The v-update subproblem for one channel estimate.
#[derive(Debug, Clone)]
pub struct VProblem {
    pub mode: AccessMode,
    pub n_tx: usize,
    pub n_users: usize,
    /// Total power in noise units.
    pub power: f64,
    pub noise: f64,
    pub weights: Vec<f64>,
    pub qos: f64,
    /// NOMA decoding order; identity otherwise.
    pub order: Vec<usize>,
    pub terms: Vec<StreamTerm>,
    pub lift: RealLift,
}

impl VProblem {
    pub fn new(mode: AccessMode, power: f64, weights: Vec<f64>, qos: f64, h_est: &CMatrix) -> Self {
        let (n_tx, n_users) = h_est.shape();
        assert_eq!(weights.len(), n_users, "one weight per user");
        let order = match mode {
            AccessMode::Noma => noma_order(h_est),
            _ => (0..n_users).collect(),
        };
        let all: Vec<usize> = (0..=n_users).collect();
        let privates: Vec<usize> = (1..=n_users).collect();
        let mut terms = Vec::new();
        match mode {
            AccessMode::Rsma => {
                for k in 0..n_users {
                    terms.push(StreamTerm { user: k, stream: 0, interferers: all.clone() });
                }
                for k in 0..n_users {
                    terms.push(StreamTerm { user: k, stream: k + 1, interferers: privates.clone() });
                }
            }
            AccessMode::Sdma => {
                for k in 0..n_users {
                    terms.push(StreamTerm { user: k, stream: k + 1, interferers: privates.clone() });
                }
            }
            AccessMode::Noma => {
                for k in 0..n_users {
                    for i in 0..=k {
                        terms.push(StreamTerm {
                            user: order[k],
                            stream: order[i] + 1,
                            interferers: order[i..].iter().map(|u| u + 1).collect(),
                        });
                    }
                }
            }
        }
        Self {
            mode,
            n_tx,
            n_users,
            power,
            noise: 1.0,
            weights,
            qos,
            order,
            terms,
            lift: RealLift::new(n_tx, active_columns(mode, n_users)),
        }
    }

    pub fn from_scenario(scenario: &ValidatedScenario, h_est: &CMatrix) -> Self {
        let s = &scenario.system;
        Self::new(s.access_mode, s.normalized_power(), s.weights.clone(), s.qos_rate, h_est)
    }

    pub fn per_antenna_power(&self) -> f64 {
        self.power / self.n_tx as f64
    }

    /// Rate variables after the lifted precoder: negated common portions
    /// (RSMA), negated stream rates (NOMA), none for SDMA.
    pub fn n_rate_vars(&self) -> usize {
        match self.mode {
            AccessMode::Sdma => 0,
            _ => self.n_users,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.lift.len() + self.n_rate_vars()
    }

    pub fn average_rates(&self, p: &CMatrix, saa: &SaaSampleSet) -> AverageRates {
        match self.mode {
            AccessMode::Noma => AverageRates {
                common: vec![0.0; self.n_users],
                private: noma_average_rates(p, saa, &self.order, self.noise),
            },
            _ => average_rates(p, saa, self.noise),
        }
    }

    pub fn rate_report(&self, p: &CMatrix, saa: &SaaSampleSet) -> RateReport {
        crate::rates::average_report(self.mode, p, saa, &self.order, self.noise, &self.weights, self.qos)
    }

    /// Rate variables matching `p`: the common-rate allocation for RSMA,
    /// the stream rates for NOMA (both negated).
    pub fn initial_rate_vars(&self, p: &CMatrix, saa: &SaaSampleSet) -> Vec<f64> {
        let r = self.average_rates(p, saa);
        match self.mode {
            AccessMode::Rsma => {
                let rc = r.common.iter().cloned().fold(f64::INFINITY, f64::min);
                allocate_common(rc, &r.private, &self.weights, self.qos).iter().map(|c| -c).collect()
            }
            AccessMode::Sdma => vec![],
            AccessMode::Noma => r.private.iter().map(|v| -v).collect(),
        }
    }

    /// `∑ μ_k (C_k + R̄_k)` with `C_k` read from the rate variables (RSMA)
    /// and `R̄` the sample-average rates of `p`.
    pub fn awsr(&self, p: &CMatrix, rate_vars: &[f64], saa: &SaaSampleSet) -> f64 {
        let r = self.average_rates(p, saa);
        let mut total = 0.0;
        for k in 0..self.n_users {
            let common = if self.mode == AccessMode::Rsma { -rate_vars[k] } else { 0.0 };
            total += self.weights[k] * (common + r.private[k]);
        }
        total
    }

    /// Common-rate splits `C_k` implied by the rate variables.
    pub fn common_splits(&self, rate_vars: &[f64]) -> Vec<f64> {
        match self.mode {
            AccessMode::Rsma => rate_vars.iter().map(|x| (-x).max(0.0)).collect(),
            _ => vec![0.0; self.n_users],
        }
    }

    fn add_hermitian_block(&self, q: &mut QuadForm, offset: usize, m: &CMatrix, scale: f64) {
        let n = self.n_tx;
        for i in 0..2 * n {
            for j in i..2 * n {
                let v = match (i < n, j < n) {
                    (true, true) => m[(i, j)].re,
                    (true, false) => -m[(i, j - n)].im,
                    (false, true) => m[(i - n, j)].im,
                    (false, false) => m[(i - n, j - n)].re,
                };
                q.add_sym(offset + i, offset + j, scale * v);
            }
        }
    }

    /// Adds `scale·ξ̄(P)` for one term into `f`.
    fn add_awmse(&self, f: &mut QuadraticFn, saf: &Saf, term: &StreamTerm, scale: f64) {
        let s = scale / LN_2;
        for &col in &term.interferers {
            if let Some(b) = self.lift.block(col) {
                self.add_hermitian_block(&mut f.quad, b, &saf.psi, s);
            }
        }
        if self.lift.block(term.stream).is_some() {
            for n in 0..self.n_tx {
                let (re, im) = self.lift.index(n, term.stream);
                f.lin[re] -= 2.0 * s * saf.f[n].re;
                f.lin[im] -= 2.0 * s * saf.f[n].im;
            }
        }
        f.constant += s * (saf.t * self.noise + saf.w - 1.0) + scale * (1.0 - saf.v);
    }

    fn empty_fn(&self) -> QuadraticFn {
        QuadraticFn {
            quad: QuadForm::sparse(),
            lin: DVector::zeros(self.n_vars()),
            constant: 0.0,
        }
    }

    /// The convex subproblem for frozen SAFs. Also returns, per user, the
    /// index of its QoS constraint in `quad_le` (or `lin_le` for NOMA).
    fn build_qcqp(&self, safs: &SafBundle, prox: Option<&Proximal>) -> (ConicProblem, Vec<usize>) {
        let nv = self.n_vars();
        let base = self.lift.len();
        let k_users = self.n_users;
        let mut prob = ConicProblem::new(nv);
        let mut obj = self.empty_fn();
        let mut qos_idx = Vec::with_capacity(k_users);

        match self.mode {
            AccessMode::Rsma => {
                for k in 0..k_users {
                    let mu = self.weights[k];
                    self.add_awmse(&mut obj, &safs.terms[k_users + k], &self.terms[k_users + k], mu);
                    obj.lin[base + k] += mu;
                }
                for k in 0..k_users {
                    let mut c = self.empty_fn();
                    self.add_awmse(&mut c, &safs.terms[k], &self.terms[k], 1.0);
                    c.constant -= 1.0;
                    for j in 0..k_users {
                        c.lin[base + j] -= 1.0;
                    }
                    prob.add_quad_le(c);
                }
                for k in 0..k_users {
                    let mut c = self.empty_fn();
                    self.add_awmse(&mut c, &safs.terms[k_users + k], &self.terms[k_users + k], 1.0);
                    c.lin[base + k] += 1.0;
                    c.constant += self.qos - 1.0;
                    qos_idx.push(prob.quad_le.len());
                    prob.add_quad_le(c);
                    prob.add_lin_le(vec![(base + k, 1.0)], 0.0);
                }
            }
            AccessMode::Sdma => {
                for k in 0..k_users {
                    self.add_awmse(&mut obj, &safs.terms[k], &self.terms[k], self.weights[k]);
                    let mut c = self.empty_fn();
                    self.add_awmse(&mut c, &safs.terms[k], &self.terms[k], 1.0);
                    c.constant += self.qos - 1.0;
                    qos_idx.push(prob.quad_le.len());
                    prob.add_quad_le(c);
                }
            }
            AccessMode::Noma => {
                for (saf, term) in safs.terms.iter().zip(&self.terms) {
                    let mut c = self.empty_fn();
                    self.add_awmse(&mut c, saf, term, 1.0);
                    c.constant -= 1.0;
                    c.lin[base + term.stream - 1] -= 1.0;
                    prob.add_quad_le(c);
                }
                for k in 0..k_users {
                    obj.lin[base + k] += self.weights[k];
                    qos_idx.push(prob.lin_le.len());
                    prob.add_lin_le(vec![(base + k, 1.0)], -self.qos);
                }
            }
        }

        let limit = self.per_antenna_power();
        for n in 0..self.n_tx {
            let mut c = QuadraticFn {
                quad: QuadForm::sparse(),
                lin: DVector::zeros(nv),
                constant: -limit,
            };
            for &col in &self.lift.columns {
                let (re, im) = self.lift.index(n, col);
                c.quad.add_sym(re, re, 1.0);
                c.quad.add_sym(im, im, 1.0);
            }
            prob.add_quad_le(c);
        }

        if let Some(px) = prox {
            let half = 0.5 * px.rho;
            for &col in &self.lift.columns {
                for n in 0..self.n_tx {
                    let (re, im) = self.lift.index(n, col);
                    let c = px.center[col * self.n_tx + n];
                    obj.quad.add_sym(re, re, half);
                    obj.quad.add_sym(im, im, half);
                    obj.lin[re] -= px.rho * c.re;
                    obj.lin[im] -= px.rho * c.im;
                }
            }
            obj.constant += half * px.center.norm_squared();
        }
        prob.objective = obj;
        (prob, qos_idx)
    }

    /// A strictly feasible starting point near `(p, vars)` for the
    /// subproblem, or `None` when the rate variables cannot be placed
    /// strictly inside (the solver then runs its own phase I).
    fn interior_hint(&self, safs: &SafBundle, p: &CMatrix, vars: &[f64]) -> Option<(CMatrix, Vec<f64>)> {
        let p = p * Complex::from(0.9);
        let xi: Vec<f64> = safs.terms.iter().zip(&self.terms).map(|(s, t)| s.awmse(&p, t, self.noise)).collect();
        let k_users = self.n_users;
        let vars = match self.mode {
            AccessMode::Rsma => {
                let ub: Vec<f64> = (0..k_users).map(|k| (1.0 - self.qos - xi[k_users + k]).min(0.0)).collect();
                let lower = xi[..k_users].iter().cloned().fold(f64::NEG_INFINITY, f64::max) - 1.0;
                let slack = ub.iter().sum::<f64>() - lower;
                if !(slack > 0.0) {
                    return None;
                }
                ub.iter().map(|u| u - slack / (2 * k_users) as f64).collect()
            }
            AccessMode::Sdma => {
                if xi.iter().any(|x| *x >= 1.0 - self.qos) {
                    return None;
                }
                vars.to_vec()
            }
            AccessMode::Noma => {
                let mut lb = vec![f64::NEG_INFINITY; k_users];
                for (x, t) in xi.iter().zip(&self.terms) {
                    lb[t.stream - 1] = lb[t.stream - 1].max(x - 1.0);
                }
                if lb.iter().any(|l| *l >= -self.qos) {
                    return None;
                }
                lb.iter().map(|l| 0.5 * (l - self.qos)).collect()
            }
        };
        Some((p, vars))
    }

    /// Users whose QoS constraint is violated at `x`.
    fn qos_violators(&self, prob: &ConicProblem, qos_idx: &[usize], x: &DVector<f64>) -> Vec<usize> {
        let users: Vec<usize> = (0..self.n_users)
            .filter(|&k| {
                let v = match self.mode {
                    AccessMode::Noma => prob.lin_le[qos_idx[k]].row.dot(x) - prob.lin_le[qos_idx[k]].rhs,
                    _ => prob.quad_le[qos_idx[k]].eval(x),
                };
                v > 0.0
            })
            .collect();
        if users.is_empty() {
            (0..self.n_users).collect()
        } else {
            users
        }
    }
}

#[derive(Debug, Clone)]
pub struct QcqpSolution {
    pub precoder: CMatrix,
    pub rate_vars: Vec<f64>,
    /// Subproblem objective (minimization form).
    pub objective: f64,
    pub newton_steps: usize,
}

/// Least-infeasible point of a subproblem whose QoS constraints cannot be
/// met at the current linearization.
#[derive(Debug, Clone)]
struct Infeasible {
    precoder: CMatrix,
    /// Phase I optimum: the smallest uniform constraint violation.
    violation: f64,
    users: Vec<usize>,
}

/// Solves the convex subproblem for frozen SAFs, starting phase I from
/// `(hint_p, hint_vars)`.
pub fn solve_qcqp(
    vp: &VProblem,
    safs: &SafBundle,
    prox: Option<&Proximal>,
    hint_p: &CMatrix,
    hint_vars: &[f64],
    settings: &Settings,
) -> Result<QcqpSolution, OptimError> {
    solve_restricted(vp, safs, prox, hint_p, hint_vars, settings)?.map_err(|inf| OptimError::InfeasibleQos { users: inf.users })
}

fn solve_restricted(
    vp: &VProblem,
    safs: &SafBundle,
    prox: Option<&Proximal>,
    hint_p: &CMatrix,
    hint_vars: &[f64],
    settings: &Settings,
) -> Result<Result<QcqpSolution, Infeasible>, OptimError> {
    let (prob, qos_idx) = vp.build_qcqp(safs, prox);
    let interior = vp.interior_hint(safs, hint_p, hint_vars);
    let (hint_p, hint_vars) = match &interior {
        Some((p, v)) => (p, v.as_slice()),
        None => (hint_p, hint_vars),
    };
    let mut hint = DVector::zeros(vp.n_vars());
    hint.rows_mut(0, vp.lift.len()).copy_from(&vp.lift.lift(hint_p));
    for (i, v) in hint_vars.iter().enumerate() {
        hint[vp.lift.len() + i] = *v;
    }
    let sol = conic::solve_from(&prob, &hint, settings)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => {
            return Ok(Err(Infeasible {
                precoder: vp.lift.unlift(&sol.x, vp.n_users + 1),
                violation: sol.infeasibility.unwrap_or(f64::INFINITY),
                users: vp.qos_violators(&prob, &qos_idx, &sol.x),
            }))
        }
        _ if sol.max_violation <= settings.feas_tol => {}
        _ => {
            return Err(OptimError::Solver {
                stage: "communication",
                message: sol.message.clone(),
                dump: prob.dump(),
            })
        }
    }
    let base = vp.lift.len();
    Ok(Ok(QcqpSolution {
        precoder: vp.lift.unlift(&sol.x, vp.n_users + 1),
        rate_vars: (0..vp.n_rate_vars()).map(|i| sol.x[base + i]).collect(),
        objective: sol.objective_value,
        newton_steps: sol.newton_steps,
    }))
}

/// Re-linearizations allowed while searching for a QoS-feasible start.
const MAX_RESTORATIONS: usize = 50;

/// Moves `p` into the QoS-feasible region of the convex restriction. Each
/// round re-linearizes at the least-infeasible point of the previous one;
/// the restriction is tight there, so the violation cannot grow. Gives up
/// once the violation stops shrinking.
fn restore_feasibility(
    vp: &VProblem,
    saa: &SaaSampleSet,
    prox: Option<&Proximal>,
    first: Infeasible,
    settings: &Settings,
) -> Result<CMatrix, OptimError> {
    let mut last = first;
    for _ in 0..MAX_RESTORATIONS {
        let p = clip_rows(&last.precoder, vp.per_antenna_power());
        let safs = build_safs(&p, saa, &vp.terms, vp.noise);
        let vars = vp.initial_rate_vars(&p, saa);
        match solve_restricted(vp, &safs, prox, &p, &vars, settings)? {
            Ok(_) => return Ok(p),
            Err(next) => {
                let stalled = next.violation > last.violation * (1.0 - 1e-3);
                last = next;
                if stalled {
                    break;
                }
            }
        }
    }
    Err(OptimError::InfeasibleQos { users: last.users })
}

#[derive(Debug, Clone, Copy)]
pub struct AoOptions {
    /// Stop once the objective moves by at most this much.
    pub tol: f64,
    pub max_iters: usize,
    pub settings: Settings,
}

impl AoOptions {
    pub fn from_scenario(s: &ValidatedScenario) -> Self {
        Self {
            tol: s.solver.ao_tol,
            max_iters: s.solver.max_ao_iters,
            settings: Settings {
                gap_tol: s.solver.conic_gap_tol,
                feas_tol: s.solver.conic_feas_tol,
                ..Settings::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoTraceRow {
    pub iter: usize,
    pub awsr: f64,
    pub penalty: f64,
    /// `awsr − penalty`; non-decreasing along the trace.
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct AoResult {
    pub precoder: CMatrix,
    pub rate_vars: Vec<f64>,
    pub trace: Vec<AoTraceRow>,
    pub converged: bool,
    pub newton_steps: usize,
}

impl AoResult {
    pub fn final_objective(&self) -> f64 {
        self.trace.last().map(|r| r.objective).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Alternates MMSE equalizer/weight updates with the convex precoder
/// update, starting from `p_init` (rows above the per-antenna budget are
/// scaled down first). A step that would lower the objective is rejected
/// and ends the run. When the QoS constraints cannot be met around
/// `p_init`, the start is first moved to a point where they can.
pub fn run_ao(
    vp: &VProblem,
    saa: &SaaSampleSet,
    p_init: &CMatrix,
    init_vars: Option<&[f64]>,
    prox: Option<&Proximal>,
    opts: &AoOptions,
) -> Result<AoResult, OptimError> {
    let mut p = clip_rows(p_init, vp.per_antenna_power());
    for col in 0..p.ncols() {
        if !vp.lift.columns.contains(&col) {
            p.column_mut(col).fill(Complex::from(0.0));
        }
    }
    let mut vars = match init_vars {
        Some(v) => v.to_vec(),
        None => vp.initial_rate_vars(&p, saa),
    };
    let row = |iter: usize, p: &CMatrix, vars: &[f64]| {
        let awsr = vp.awsr(p, vars, saa);
        let penalty = prox.map(|x| x.penalty(p)).unwrap_or(0.0);
        AoTraceRow { iter, awsr, penalty, objective: awsr - penalty }
    };
    let mut trace = vec![row(0, &p, &vars)];
    let mut converged = false;
    let mut newton_steps = 0;
    for iter in 1..=opts.max_iters {
        let safs = build_safs(&p, saa, &vp.terms, vp.noise);
        let sol = match solve_restricted(vp, &safs, prox, &p, &vars, &opts.settings)? {
            Ok(sol) => sol,
            Err(inf) if iter == 1 => {
                p = restore_feasibility(vp, saa, prox, inf, &opts.settings)?;
                vars = vp.initial_rate_vars(&p, saa);
                trace = vec![row(0, &p, &vars)];
                let safs = build_safs(&p, saa, &vp.terms, vp.noise);
                solve_qcqp(vp, &safs, prox, &p, &vars, &opts.settings)?
            }
            Err(inf) => return Err(OptimError::InfeasibleQos { users: inf.users }),
        };
        newton_steps += sol.newton_steps;
        let next = row(iter, &sol.precoder, &sol.rate_vars);
        let prev = trace.last().expect("trace starts non-empty").objective;
        if next.objective < prev {
            converged = true;
            break;
        }
        p = sol.precoder;
        vars = sol.rate_vars;
        trace.push(next);
        if (next.objective - prev).abs() <= opts.tol {
            converged = true;
            break;
        }
    }
    Ok(AoResult {
        precoder: p,
        rate_vars: vars,
        trace,
        converged,
        newton_steps,
    })
}

pub fn write_ao_trace_csv<W: Write>(trace: &[AoTraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iter,awsr,penalty,objective")?;
    for r in trace {
        writeln!(out, "{},{:e},{:e},{:e}", r.iter, r.awsr, r.penalty, r.objective)?;
    }
    Ok(())
}
