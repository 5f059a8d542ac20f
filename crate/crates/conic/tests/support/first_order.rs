//! Slow first-order reference solvers used as independent oracles for the
//! interior-point backend. They share no code with it.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// `xᵀ Q x + cᵀ x + d` with dense `Q`.
#[derive(Clone, Debug)]
pub struct DenseQuad {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl DenseQuad {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.q * x)) + self.c.dot(x) + self.d
    }
    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x * 2.0 + &self.c
    }
}

/// minimize f₀ s.t. fᵢ ≤ 0, all dense quadratics.
#[derive(Clone, Debug)]
pub struct DenseQcqp {
    pub objective: DenseQuad,
    pub constraints: Vec<DenseQuad>,
}

fn random_psd<R: Rng>(rng: &mut R, n: usize, ridge: f64) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    (b.transpose() * b) / n as f64 + DMatrix::identity(n, n) * ridge
}

/// Random QCQP with a strongly convex objective and `m` ellipsoidal
/// constraints, strictly feasible at the origin.
pub fn random_qcqp<R: Rng>(rng: &mut R, n: usize, m: usize) -> DenseQcqp {
    let objective = DenseQuad {
        q: random_psd(rng, n, 0.1),
        c: DVector::from_fn(n, |_, _| (rng.random::<f64>() * 2.0 - 1.0) * 4.0),
        d: 0.0,
    };
    let constraints = (0..m)
        .map(|_| DenseQuad {
            q: random_psd(rng, n, 0.05),
            c: DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0),
            d: -(0.5 + rng.random::<f64>()),
        })
        .collect();
    DenseQcqp { objective, constraints }
}

/// Projected accelerated gradient ascent on the Lagrange dual. For fixed
/// multipliers `y ≥ 0` the Lagrangian minimizer is a linear solve, and
/// Slater's condition makes the dual optimum equal the primal one.
pub fn dual_projected_gradient(p: &DenseQcqp) -> (DVector<f64>, f64) {
    let m = p.constraints.len();
    let inner = |y: &DVector<f64>| -> (DVector<f64>, f64, DVector<f64>) {
        let mut q = p.objective.q.clone();
        let mut c = p.objective.c.clone();
        let mut d = p.objective.d;
        for (i, f) in p.constraints.iter().enumerate() {
            q += &f.q * y[i];
            c += &f.c * y[i];
            d += f.d * y[i];
        }
        let x = q.clone().cholesky().expect("positive definite Lagrangian").solve(&(-&c * 0.5));
        let value = x.dot(&(&q * &x)) + c.dot(&x) + d;
        let grad = DVector::from_fn(m, |i, _| p.constraints[i].eval(&x));
        (x, value, grad)
    };
    let project = |y: DVector<f64>| y.map(|v| v.max(0.0));
    let mut y = DVector::zeros(m);
    let mut z = y.clone();
    let mut theta: f64 = 1.0;
    let mut step = 1.0;
    for _ in 0..50_000 {
        let (_, _, gy) = inner(&y);
        // KKT at x(y): primal feasibility and complementary slackness.
        let kkt = (0..m).map(|i| gy[i].max(0.0).max((y[i] * gy[i]).abs())).fold(0.0, f64::max);
        if kkt < 1e-9 {
            break;
        }
        let (_, gz, grad) = inner(&z);
        let mut y_new;
        loop {
            y_new = project(&z + &grad * step);
            let d = &y_new - &z;
            let (_, gy, _) = inner(&y_new);
            // concave ascent sufficient condition
            if gy >= gz + grad.dot(&d) - d.norm_squared() / (2.0 * step) - 1e-15 * gz.abs() {
                break;
            }
            step *= 0.5;
        }
        let moved = (&y_new - &y).norm();
        let theta_new = (1.0 + (1.0 + 4.0 * theta * theta).sqrt()) / 2.0;
        if inner(&y_new).1 < inner(&y).1 {
            theta = 1.0;
            z = y.clone();
            continue;
        }
        z = &y_new + (&y_new - &y) * ((theta - 1.0) / theta_new);
        y = y_new;
        theta = theta_new;
        step *= 1.1;
        if moved < 1e-14 * (1.0 + y.norm()) {
            break;
        }
    }
    let (x, _, _) = inner(&y);
    let v = p.objective.eval(&x);
    (x, v)
}

/// Standard-form SDP: minimize ⟨C, X⟩ s.t. ⟨Aᵢ, X⟩ = bᵢ, X ⪰ 0.
#[derive(Clone, Debug)]
pub struct StandardSdp {
    pub c: DMatrix<f64>,
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<f64>,
}

fn random_sym<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    (&m + m.transpose()) * 0.5
}

/// Random SDP with strictly feasible primal and dual, hence a finite optimum.
pub fn random_sdp<R: Rng>(rng: &mut R, n: usize, m: usize) -> StandardSdp {
    let x0 = random_psd(rng, n, 0.5);
    let a: Vec<DMatrix<f64>> = (0..m).map(|_| random_sym(rng, n)).collect();
    let b = a.iter().map(|ai| ai.dot(&x0)).collect();
    let z0 = random_psd(rng, n, 0.5);
    let mut c = z0;
    for ai in &a {
        c += ai * (rng.random::<f64>() * 2.0 - 1.0);
    }
    StandardSdp { c, a, b }
}

fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut d = eig.eigenvalues.clone();
    d.apply(|v| *v = v.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// ADMM on `X ∈ {A(X) = b}`, `Z ⪰ 0`, `X = Z`.
pub fn sdp_admm(p: &StandardSdp, iters: usize) -> (DMatrix<f64>, f64) {
    let n = p.c.nrows();
    let m = p.a.len();
    let vec = |x: &DMatrix<f64>| DVector::from_iterator(n * n, x.iter().cloned());
    let amat = DMatrix::from_fn(m, n * n, |i, k| p.a[i][k]);
    let gram_inv = (&amat * amat.transpose()).try_inverse().expect("independent constraints");
    let b = DVector::from_vec(p.b.clone());
    let rho = 1.0;
    let mut z = DMatrix::<f64>::zeros(n, n);
    let mut u = DMatrix::<f64>::zeros(n, n);
    let mut x = DMatrix::<f64>::zeros(n, n);
    for _ in 0..iters {
        let v = vec(&(&z - &u - &p.c / rho));
        let corr = amat.transpose() * (&gram_inv * (&amat * &v - &b));
        let xv = v - corr;
        x = DMatrix::from_iterator(n, n, xv.iter().cloned());
        z = project_psd(&(&x + &u));
        u += &x - &z;
    }
    let v = p.c.dot(&z);
    let _ = x;
    (z, v)
}
