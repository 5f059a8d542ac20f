use nalgebra::{DMatrix, DVector};

use crate::error::ProblemError;
use crate::problem::{ConicProblem, Lmi, QuadForm, QuadraticFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    /// Stop when the barrier duality-gap bound is below `gap_tol·(1 + |f₀|)`.
    pub gap_tol: f64,
    /// Largest constraint violation accepted for an `Optimal` point.
    pub feas_tol: f64,
    /// Total Newton-step budget across phase I and phase II.
    pub max_newton: usize,
    /// Barrier parameter growth per outer iteration.
    pub mu: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            gap_tol: 1e-9,
            feas_tol: 1e-6,
            max_newton: 2000,
            mu: 20.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: DVector<f64>,
    pub objective_value: f64,
    pub status: Status,
    pub max_violation: f64,
    /// Barrier gap bound `m/t` at exit.
    pub gap: f64,
    pub newton_steps: usize,
    /// Optimal phase-I value when infeasibility was certified: the smallest
    /// achievable uniform constraint violation (> 0).
    pub infeasibility: Option<f64>,
    pub message: String,
}

/// Solves `problem` starting from the origin.
pub fn solve(problem: &ConicProblem, settings: &Settings) -> Result<ConicSolution, ProblemError> {
    solve_from(problem, &DVector::zeros(problem.n_vars), settings)
}

/// Solves `problem` with `hint` as the phase-I starting point. When `hint`
/// is strictly feasible, phase I is skipped.
pub fn solve_from(
    problem: &ConicProblem,
    hint: &DVector<f64>,
    settings: &Settings,
) -> Result<ConicSolution, ProblemError> {
    problem.validate()?;
    if hint.len() != problem.n_vars {
        return Err(ProblemError::Dimension(format!(
            "hint has length {}, expected {}",
            hint.len(),
            problem.n_vars
        )));
    }

    let mut budget = settings.max_newton;
    let x0 = project_affine(problem, hint);
    let start = if strictly_feasible(problem, &x0) {
        x0
    } else {
        match phase_one(problem, &x0, settings, &mut budget) {
            PhaseOne::Feasible(x) => x,
            PhaseOne::Infeasible { x, s_star, steps } => {
                let max_violation = problem.max_violation(&x);
                return Ok(ConicSolution {
                    objective_value: problem.objective.eval(&x),
                    x,
                    status: Status::Infeasible,
                    max_violation,
                    gap: f64::NAN,
                    newton_steps: steps,
                    infeasibility: Some(s_star),
                    message: format!("phase I optimum {s_star:.3e} ≥ 0: no strictly feasible point"),
                });
            }
            PhaseOne::Failed { x, status, message } => {
                let max_violation = problem.max_violation(&x);
                return Ok(ConicSolution {
                    objective_value: problem.objective.eval(&x),
                    x,
                    status,
                    max_violation,
                    gap: f64::NAN,
                    newton_steps: settings.max_newton - budget,
                    infeasibility: None,
                    message,
                });
            }
        }
    };

    let run = barrier(problem, start, settings, &mut budget, |_, _| false);
    let max_violation = problem.max_violation(&run.x);
    let mut status = run.status;
    let mut message = run.message;
    if status == Status::Optimal && max_violation > settings.feas_tol {
        status = Status::NumericalFailure;
        message = format!("final point violates constraints by {max_violation:.3e}");
    }
    Ok(ConicSolution {
        objective_value: problem.objective.eval(&run.x),
        x: run.x,
        status,
        max_violation,
        gap: run.gap,
        newton_steps: settings.max_newton - budget,
        infeasibility: None,
        message,
    })
}

struct BarrierRun {
    x: DVector<f64>,
    status: Status,
    gap: f64,
    message: String,
}

/// Strict feasibility of the inequality part; equalities are assumed to
/// hold already.
fn strictly_feasible(p: &ConicProblem, x: &DVector<f64>) -> bool {
    p.quad_le.iter().all(|f| f.eval(x) < 0.0)
        && p.lin_le.iter().all(|c| c.row.dot(x) < c.rhs)
        && p.lmis.iter().all(|l| l.eval(x).cholesky().is_some())
}

/// Least-squares correction of `x` onto `{A x = b}`.
fn project_affine(p: &ConicProblem, x: &DVector<f64>) -> DVector<f64> {
    if p.lin_eq.is_empty() {
        return x.clone();
    }
    let (a, b) = eq_matrix(p);
    let r = &b - &a * x;
    if r.amax() == 0.0 {
        return x.clone();
    }
    let svd = a.transpose().svd(true, true);
    // x + Aᵀ (A Aᵀ)⁺ r, written through the SVD of Aᵀ = U Σ Vᵀ:
    // Aᵀ (A Aᵀ)⁺ = U Σ⁻¹ Vᵀ.
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let smax = svd.singular_values.max();
    let cutoff = smax * 1e-12 * (a.nrows().max(a.ncols()) as f64);
    let mut y = vt * &r;
    for (k, s) in svd.singular_values.iter().enumerate() {
        y[k] = if *s > cutoff { y[k] / s } else { 0.0 };
    }
    x + u * y
}

fn eq_matrix(p: &ConicProblem) -> (DMatrix<f64>, DVector<f64>) {
    let mut a = DMatrix::zeros(p.lin_eq.len(), p.n_vars);
    let mut b = DVector::zeros(p.lin_eq.len());
    for (k, e) in p.lin_eq.iter().enumerate() {
        for &(i, v) in &e.row.coeffs {
            a[(k, i)] += v;
        }
        b[k] = e.rhs;
    }
    (a, b)
}

enum PhaseOne {
    Feasible(DVector<f64>),
    Infeasible {
        x: DVector<f64>,
        s_star: f64,
        steps: usize,
    },
    Failed {
        x: DVector<f64>,
        status: Status,
        message: String,
    },
}

/// Minimizes the uniform violation `s` subject to `fᵢ(x) ≤ s`,
/// `aⱼ·x − bⱼ ≤ s`, `F(x) + sI ⪰ 0`, `s ≥ −1`, keeping `A x = b`.
/// Stops at the first centered point with `s < 0`.
fn phase_one(p: &ConicProblem, x0: &DVector<f64>, settings: &Settings, budget: &mut usize) -> PhaseOne {
    let n = p.n_vars;
    let s_idx = n;
    let mut aux = ConicProblem::new(n + 1);
    let mut obj = DVector::zeros(n + 1);
    obj[s_idx] = 1.0;
    aux.objective = QuadraticFn::linear(obj, 0.0);
    for f in &p.quad_le {
        let quad = match &f.quad {
            QuadForm::Zero => QuadForm::Zero,
            QuadForm::Sparse(e) => QuadForm::Sparse(e.clone()),
            QuadForm::Dense(q) => {
                let mut big = DMatrix::zeros(n + 1, n + 1);
                big.view_mut((0, 0), (n, n)).copy_from(q);
                QuadForm::Dense(big)
            }
        };
        let mut lin = DVector::zeros(n + 1);
        lin.rows_mut(0, n).copy_from(&f.lin);
        lin[s_idx] = -1.0;
        aux.add_quad_le(QuadraticFn {
            quad,
            lin,
            constant: f.constant,
        });
    }
    for c in &p.lin_le {
        let mut coeffs = c.row.coeffs.clone();
        coeffs.push((s_idx, -1.0));
        aux.add_lin_le(coeffs, c.rhs);
    }
    for e in &p.lin_eq {
        aux.add_lin_eq(e.row.coeffs.clone(), e.rhs);
    }
    for l in &p.lmis {
        let mut coeffs = l.coeffs.clone();
        coeffs.resize(n + 1, Vec::new());
        coeffs[s_idx] = (0..l.dim).map(|i| (i, i, 1.0)).collect();
        aux.add_lmi(Lmi {
            dim: l.dim,
            constant: l.constant.clone(),
            coeffs,
        });
    }
    aux.add_lin_le(vec![(s_idx, -1.0)], 1.0);

    let viol = p.max_violation(x0);
    let s0 = viol + 1.0_f64.max(0.1 * viol.abs());
    let mut start = DVector::zeros(n + 1);
    start.rows_mut(0, n).copy_from(x0);
    start[s_idx] = s0;

    let before = *budget;
    let run = barrier(&aux, start, settings, budget, |x, centered| centered && x[s_idx] < 0.0);
    let x = run.x.rows(0, n).into_owned();
    let s = run.x[s_idx];
    if s < 0.0 && strictly_feasible(p, &x) {
        return PhaseOne::Feasible(x);
    }
    match run.status {
        Status::Optimal => PhaseOne::Infeasible {
            x,
            s_star: s,
            steps: before - *budget,
        },
        status => PhaseOne::Failed {
            x,
            status,
            message: format!("phase I stopped at s = {s:.3e}: {}", run.message),
        },
    }
}

/// Cached derivative data at a strictly feasible point.
struct Local {
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

/// Barrier-augmented value `t·f₀ + φ`, or `None` outside the domain.
fn merit(p: &ConicProblem, x: &DVector<f64>, t: f64) -> Option<f64> {
    let mut phi = 0.0;
    for f in &p.quad_le {
        let v = f.eval(x);
        if !(v < 0.0) {
            return None;
        }
        phi -= (-v).ln();
    }
    for c in &p.lin_le {
        let s = c.rhs - c.row.dot(x);
        if !(s > 0.0) {
            return None;
        }
        phi -= s.ln();
    }
    for l in &p.lmis {
        let chol = l.eval(x).cholesky()?;
        let ld: f64 = chol.l_dirty().diagonal().iter().take(l.dim).map(|d| d.ln()).sum();
        phi -= 2.0 * ld;
    }
    let v = t * p.objective.eval(x) + phi;
    v.is_finite().then_some(v)
}

/// Derivative of `t·f₀ + φ` along `dx` at `x`, or `None` outside the domain.
/// Used by the line search because it does not suffer the cancellation that
/// plagues merit differences once `t·f₀` dominates.
fn merit_slope(p: &ConicProblem, x: &DVector<f64>, dx: &DVector<f64>, t: f64) -> Option<f64> {
    let (_, g0) = p.objective.eval_grad(x);
    let mut d = t * g0.dot(dx);
    for f in &p.quad_le {
        let (v, g) = f.eval_grad(x);
        if !(v < 0.0) {
            return None;
        }
        d += g.dot(dx) / -v;
    }
    for c in &p.lin_le {
        let s = c.rhs - c.row.dot(x);
        if !(s > 0.0) {
            return None;
        }
        d += c.row.dot(dx) / s;
    }
    for l in &p.lmis {
        let chol = l.eval(x).cholesky()?;
        let mut dir = DMatrix::zeros(l.dim, l.dim);
        for (i, entries) in l.coeffs.iter().enumerate() {
            if dx[i] == 0.0 {
                continue;
            }
            for &(a, b, v) in entries {
                dir[(a, b)] += v * dx[i];
            }
        }
        d -= chol.solve(&dir).trace();
    }
    d.is_finite().then_some(d)
}

fn local_model(p: &ConicProblem, x: &DVector<f64>, t: f64, obj_hess: &DMatrix<f64>) -> Option<Local> {
    let n = p.n_vars;
    let (_, g0) = p.objective.eval_grad(x);
    let mut grad = g0 * t;
    let mut hess = obj_hess * t;

    for f in &p.quad_le {
        let (v, g) = f.eval_grad(x);
        if !(v < 0.0) {
            return None;
        }
        let inv = -1.0 / v;
        grad.axpy(inv, &g, 1.0);
        hess.ger(inv * inv, &g, &g, 1.0);
        f.quad.add_scaled_to(&mut hess, 2.0 * inv);
    }
    for c in &p.lin_le {
        let s = c.rhs - c.row.dot(x);
        if !(s > 0.0) {
            return None;
        }
        let inv = 1.0 / s;
        for &(i, a) in &c.row.coeffs {
            grad[i] += a * inv;
            for &(j, b) in &c.row.coeffs {
                hess[(i, j)] += a * b * inv * inv;
            }
        }
    }
    for l in &p.lmis {
        let chol = l.eval(x).cholesky()?;
        let w = chol.inverse();
        let active: Vec<usize> = (0..l.coeffs.len().min(n)).filter(|&i| !l.coeffs[i].is_empty()).collect();
        for &i in &active {
            let g: f64 = l.coeffs[i].iter().map(|&(a, b, v)| v * w[(b, a)]).sum();
            grad[i] -= g;
        }
        for (ii, &i) in active.iter().enumerate() {
            for &j in &active[ii..] {
                let mut h = 0.0;
                for &(a, b, v) in &l.coeffs[i] {
                    for &(c, d, u) in &l.coeffs[j] {
                        h += v * u * w[(b, c)] * w[(d, a)];
                    }
                }
                hess[(i, j)] += h;
                if i != j {
                    hess[(j, i)] += h;
                }
            }
        }
    }
    Some(Local { grad, hess })
}

/// Newton direction for `min t f₀ + φ` on `{A x = b}` (feasible start).
fn newton_direction(local: &Local, eq: Option<&DMatrix<f64>>) -> Option<DVector<f64>> {
    let n = local.grad.len();
    let mut h = local.hess.clone();
    let scale = h.diagonal().amax().max(1e-300);
    let ridge = 1e-14 * (1.0 + scale);
    for i in 0..n {
        h[(i, i)] += ridge;
    }
    match eq {
        None => {
            if let Some(ch) = h.clone().cholesky() {
                return Some(ch.solve(&(-&local.grad)));
            }
            h.lu().solve(&(-&local.grad))
        }
        Some(a) => {
            let m = a.nrows();
            let mut kkt = DMatrix::zeros(n + m, n + m);
            kkt.view_mut((0, 0), (n, n)).copy_from(&h);
            kkt.view_mut((n, 0), (m, n)).copy_from(a);
            kkt.view_mut((0, n), (n, m)).copy_from(&a.transpose());
            let mut rhs = DVector::zeros(n + m);
            rhs.rows_mut(0, n).copy_from(&(-&local.grad));
            let sol = kkt.lu().solve(&rhs)?;
            Some(sol.rows(0, n).into_owned())
        }
    }
}

/// Barrier weight whose centering condition `t∇f₀ + ∇φ = 0` is best met at
/// `x` in the barrier-Hessian norm; falls back to `m/(1 + |f₀|)`.
fn initial_t(p: &ConicProblem, x: &DVector<f64>, m: f64, obj_hess: &DMatrix<f64>, eq: Option<&DMatrix<f64>>) -> f64 {
    let f0 = p.objective.eval(x);
    let fallback = (m / (1.0 + f0.abs())).max(1e-12);
    let Some(barrier_only) = local_model(p, x, 0.0, obj_hess) else {
        return fallback;
    };
    let (_, g0) = p.objective.eval_grad(x);
    let solve_with = |g: &DVector<f64>| {
        newton_direction(
            &Local {
                grad: g.clone(),
                hess: barrier_only.hess.clone(),
            },
            eq,
        )
    };
    let (Some(y0), Some(yb)) = (solve_with(&g0), solve_with(&barrier_only.grad)) else {
        return fallback;
    };
    let denom = -g0.dot(&y0);
    if !(denom > 0.0 && denom.is_finite()) {
        return fallback;
    }
    // Unit Newton decrement for the objective term alone.
    let unit = 1.0 / denom.sqrt();
    let balanced = g0.dot(&yb) / denom;
    if balanced.is_finite() && balanced > unit {
        balanced
    } else {
        unit.max(1e-12)
    }
}

/// Feasible-start barrier method. `stop(x, centered)` may end the run early.
fn barrier<F>(p: &ConicProblem, mut x: DVector<f64>, settings: &Settings, budget: &mut usize, stop: F) -> BarrierRun
where
    F: Fn(&DVector<f64>, bool) -> bool,
{
    let m = p.barrier_degree();
    let obj_hess = p.objective.quad.to_dense(p.n_vars) * 2.0;
    let eq = (!p.lin_eq.is_empty()).then(|| eq_matrix(p).0);

    if m == 0.0 {
        return unconstrained(p, x, &obj_hess, eq.as_ref(), budget);
    }

    let mut t = initial_t(p, &x, m, &obj_hess, eq.as_ref());

    loop {
        // Centering.
        let mut centered = false;
        let mut last_decrement = f64::INFINITY;
        let mut stalls = 0;
        for _ in 0..100 {
            if *budget == 0 {
                return BarrierRun {
                    x,
                    status: Status::MaxIter,
                    gap: m / t,
                    message: "Newton budget exhausted".into(),
                };
            }
            *budget -= 1;
            let Some(local) = local_model(p, &x, t, &obj_hess) else {
                return BarrierRun {
                    x,
                    status: Status::NumericalFailure,
                    gap: m / t,
                    message: "iterate left the barrier domain".into(),
                };
            };
            let Some(dx) = newton_direction(&local, eq.as_ref()) else {
                return BarrierRun {
                    x,
                    status: Status::NumericalFailure,
                    gap: m / t,
                    message: format!("singular Newton system at t = {t:.3e}"),
                };
            };
            let slope = local.grad.dot(&dx);
            if !slope.is_finite() {
                return BarrierRun {
                    x,
                    status: Status::NumericalFailure,
                    gap: m / t,
                    message: "non-finite Newton step".into(),
                };
            }
            let decrement = -slope;
            if decrement / 2.0 <= 1e-10 || slope >= 0.0 {
                centered = true;
                break;
            }
            // Once the decrement is small, rounding in `t∇f₀ + ∇φ` sets a
            // floor it cannot go below; the objective error left there is
            // about `decrement / t`.
            if decrement < 1e-4 && decrement > 0.5 * last_decrement {
                stalls += 1;
                if stalls >= 3 {
                    centered = true;
                    break;
                }
            } else {
                stalls = 0;
            }
            last_decrement = decrement;
            let Some(base) = merit(p, &x, t) else {
                return BarrierRun {
                    x,
                    status: Status::NumericalFailure,
                    gap: m / t,
                    message: "merit undefined at iterate".into(),
                };
            };
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let trial = &x + &dx * step;
                if let Some(v) = merit(p, &trial, t) {
                    // Convex along the ray: a non-positive slope at the trial
                    // point means the merit still decreased.
                    let downhill = || merit_slope(p, &trial, &dx, t).is_some_and(|d| d <= 0.0);
                    if v <= base + 0.01 * step * slope || downhill() {
                        x = trial;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                // No measurable progress left at this t; treat as centered.
                centered = true;
                break;
            }
            if stop(&x, false) {
                return BarrierRun {
                    x,
                    status: Status::Optimal,
                    gap: m / t,
                    message: "stopped early".into(),
                };
            }
        }
        if stop(&x, centered) {
            return BarrierRun {
                x,
                status: Status::Optimal,
                gap: m / t,
                message: "stopped early".into(),
            };
        }
        let f0 = p.objective.eval(&x);
        if m / t <= settings.gap_tol * (1.0 + f0.abs()) {
            return BarrierRun {
                x,
                status: Status::Optimal,
                gap: m / t,
                message: "converged".into(),
            };
        }
        t *= settings.mu;
    }
}

/// Equality-constrained QP without inequalities: one Newton step is exact.
fn unconstrained(
    p: &ConicProblem,
    x: DVector<f64>,
    obj_hess: &DMatrix<f64>,
    eq: Option<&DMatrix<f64>>,
    budget: &mut usize,
) -> BarrierRun {
    let (_, g) = p.objective.eval_grad(&x);
    *budget = budget.saturating_sub(1);
    let local = Local {
        grad: g,
        hess: obj_hess.clone(),
    };
    match newton_direction(&local, eq) {
        Some(dx) => BarrierRun {
            x: x + dx,
            status: Status::Optimal,
            gap: 0.0,
            message: "solved KKT system".into(),
        },
        None => BarrierRun {
            x,
            status: Status::NumericalFailure,
            gap: f64::NAN,
            message: "singular KKT system".into(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmi::{HermitianLmiBuilder, LmiBuilder};
    use nalgebra::Complex;

    fn settings() -> Settings {
        Settings::default()
    }

    #[test]
    fn scalar_qp_with_lower_bound() {
        // minimize x² s.t. 1 − x ≤ 0
        let mut p = ConicProblem::new(1);
        p.objective.quad = QuadForm::Dense(DMatrix::from_element(1, 1, 1.0));
        p.add_lin_le(vec![(0, -1.0)], -1.0);
        let sol = solve(&p, &settings()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-7, "{}", sol.x[0]);
        assert!((sol.objective_value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn trace_minimization_with_pinned_corner() {
        // minimize tr X s.t. X ⪰ 0, X₁₁ = 2; X is 3×3, variables upper triangle.
        let n = 3;
        let index: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let mut p = ConicProblem::new(index.len());
        let mut lin = DVector::zeros(index.len());
        let mut lmi = LmiBuilder::new(n);
        for (k, &(i, j)) in index.iter().enumerate() {
            if i == j {
                lin[k] = 1.0;
            }
            lmi.coeff(k, i, j, 1.0);
        }
        p.objective = QuadraticFn::linear(lin, 0.0);
        p.add_lin_eq(vec![(0, 1.0)], 2.0);
        p.add_lmi(lmi.build());
        let sol = solve(&p, &settings()).unwrap();
        assert_eq!(sol.status, Status::Optimal, "{}", sol.message);
        assert!((sol.objective_value - 2.0).abs() < 1e-6);
        for (k, &(i, j)) in index.iter().enumerate() {
            let expect = if (i, j) == (0, 0) { 2.0 } else { 0.0 };
            assert!((sol.x[k] - expect).abs() < 1e-4, "X[{i}{j}] = {}", sol.x[k]);
        }
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut p = ConicProblem::new(2);
        p.objective = QuadraticFn::linear(DVector::from_vec(vec![1.0, 1.0]), 0.0);
        p.add_lin_le(vec![(0, 1.0)], -1.0);
        p.add_lin_le(vec![(0, -1.0)], -1.0);
        let sol = solve(&p, &settings()).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
        let s = sol.infeasibility.unwrap();
        assert!((s - 1.0).abs() < 1e-3, "uniform violation {s}");
    }

    #[test]
    fn disjoint_balls_are_infeasible() {
        // ‖x‖² ≤ 1 and ‖x − (3,0)‖² ≤ 1
        let mut p = ConicProblem::new(2);
        let id = DMatrix::identity(2, 2);
        p.add_quad_le(QuadraticFn {
            quad: QuadForm::Dense(id.clone()),
            lin: DVector::zeros(2),
            constant: -1.0,
        });
        p.add_quad_le(QuadraticFn {
            quad: QuadForm::Dense(id),
            lin: DVector::from_vec(vec![-6.0, 0.0]),
            constant: 8.0,
        });
        let sol = solve(&p, &settings()).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
    }

    #[test]
    fn objective_scaling_leaves_argmin_unchanged() {
        let mut p = ConicProblem::new(2);
        p.objective = QuadraticFn {
            quad: QuadForm::Dense(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])),
            lin: DVector::from_vec(vec![-3.0, 1.0]),
            constant: 0.0,
        };
        p.add_quad_le(QuadraticFn {
            quad: QuadForm::Dense(DMatrix::identity(2, 2)),
            lin: DVector::zeros(2),
            constant: -0.25,
        });
        let base = solve(&p, &settings()).unwrap();
        for scale in [1e-3, 7.0, 1e4] {
            let mut q = p.clone();
            q.objective = p.objective.scaled(scale);
            let sol = solve(&q, &settings()).unwrap();
            assert_eq!(sol.status, Status::Optimal);
            assert!((&sol.x - &base.x).norm() < 1e-6, "scale {scale}");
        }
    }

    #[test]
    fn hermitian_block_recovers_rank_one_projection() {
        // minimize −Re(zᴴ M z)-style linear objective over a 2×2 Hermitian
        // X ⪰ 0 with unit trace: optimum is the top eigenvalue of M.
        let m = [[Complex::new(1.0, 0.0), Complex::new(0.5, 0.5)], [Complex::new(0.5, -0.5), Complex::new(0.0, 0.0)]];
        // variables: x00, x11, re x01, im x01
        let mut p = ConicProblem::new(4);
        p.objective = QuadraticFn::linear(
            DVector::from_vec(vec![-m[0][0].re, -m[1][1].re, -2.0 * m[0][1].re, -2.0 * m[0][1].im]),
            0.0,
        );
        p.add_lin_eq(vec![(0, 1.0), (1, 1.0)], 1.0);
        let mut lmi = HermitianLmiBuilder::new(2);
        lmi.real_part(0, 0, 0, 1.0);
        lmi.real_part(1, 1, 1, 1.0);
        lmi.real_part(2, 0, 1, 1.0);
        lmi.imag_part(3, 0, 1, 1.0);
        p.add_lmi(lmi.build());
        let sol = solve(&p, &settings()).unwrap();
        assert_eq!(sol.status, Status::Optimal, "{}", sol.message);
        // eigenvalues of [[1, a], [ā, 0]] with |a|² = 0.5
        let top = 0.5 + (0.25_f64 + 0.5).sqrt();
        assert!((sol.objective_value + top).abs() < 1e-6, "{}", sol.objective_value);
    }

    #[test]
    fn warm_start_from_feasible_hint_skips_phase_one() {
        let mut p = ConicProblem::new(1);
        p.objective.quad = QuadForm::Dense(DMatrix::from_element(1, 1, 1.0));
        p.add_lin_le(vec![(0, -1.0)], -1.0);
        let cold = solve(&p, &settings()).unwrap();
        let warm = solve_from(&p, &DVector::from_element(1, 1.5), &settings()).unwrap();
        assert!(warm.newton_steps < cold.newton_steps);
        assert!((warm.x[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn dump_lists_every_block() {
        let mut p = ConicProblem::new(2);
        p.objective = QuadraticFn::linear(DVector::from_vec(vec![1.0, 0.0]), 0.5);
        p.add_lin_le(vec![(1, 1.0)], 3.0);
        p.add_lin_eq(vec![(0, 1.0)], 1.0);
        let mut lmi = LmiBuilder::new(2);
        lmi.constant(0, 0, 1.0);
        lmi.coeff(1, 0, 1, 1.0);
        p.add_lmi(lmi.build());
        let text = p.dump();
        assert!(text.starts_with("vars 2\n"));
        for needle in ["objective constant", "objective lin 0", "lin_le[0]", "lin_eq[0]", "lmi[0] dim 2", "lmi[0] F2 0 1"] {
            assert!(text.contains(needle), "missing {needle}:\n{text}");
        }
    }
}
