use nalgebra::{DMatrix, DVector};

use crate::error::ProblemError;

/// Symmetric quadratic form `xᵀ Q x`.
///
/// `Sparse` stores every nonzero of the full symmetric matrix (both halves),
/// which keeps `Q x` and Hessian accumulation a single pass over the list.
#[derive(Debug, Clone, Default)]
pub enum QuadForm {
    #[default]
    Zero,
    Dense(DMatrix<f64>),
    Sparse(Vec<(usize, usize, f64)>),
}

impl QuadForm {
    /// Empty sparse form; fill with [`QuadForm::add_sym`].
    pub fn sparse() -> Self {
        QuadForm::Sparse(Vec::new())
    }

    /// Adds `v` at `(i, j)` and `(j, i)` (once on the diagonal).
    ///
    /// Panics when called on a dense or zero form.
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        match self {
            QuadForm::Sparse(entries) => {
                if v == 0.0 {
                    return;
                }
                entries.push((i, j, v));
                if i != j {
                    entries.push((j, i, v));
                }
            }
            _ => panic!("add_sym on a non-sparse quadratic form"),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            QuadForm::Zero => true,
            QuadForm::Sparse(e) => e.is_empty(),
            QuadForm::Dense(_) => false,
        }
    }

    /// `Q x`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            QuadForm::Zero => DVector::zeros(x.len()),
            QuadForm::Dense(q) => q * x,
            QuadForm::Sparse(entries) => {
                let mut y = DVector::zeros(x.len());
                for &(i, j, v) in entries {
                    y[i] += v * x[j];
                }
                y
            }
        }
    }

    /// `h += scale * Q`.
    pub fn add_scaled_to(&self, h: &mut DMatrix<f64>, scale: f64) {
        match self {
            QuadForm::Zero => {}
            QuadForm::Dense(q) => *h += q * scale,
            QuadForm::Sparse(entries) => {
                for &(i, j, v) in entries {
                    h[(i, j)] += scale * v;
                }
            }
        }
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(n, n);
        self.add_scaled_to(&mut h, 1.0);
        h
    }

    fn max_index(&self) -> Option<usize> {
        match self {
            QuadForm::Zero => None,
            QuadForm::Dense(q) => Some(q.nrows().max(q.ncols()).saturating_sub(1)),
            QuadForm::Sparse(e) => e.iter().map(|&(i, j, _)| i.max(j)).max(),
        }
    }
}

/// `f(x) = xᵀ Q x + cᵀ x + d` (note: no factor ½ on the quadratic term).
#[derive(Debug, Clone)]
pub struct QuadraticFn {
    pub quad: QuadForm,
    pub lin: DVector<f64>,
    pub constant: f64,
}

impl QuadraticFn {
    pub fn zero(n: usize) -> Self {
        Self {
            quad: QuadForm::Zero,
            lin: DVector::zeros(n),
            constant: 0.0,
        }
    }

    pub fn linear(lin: DVector<f64>, constant: f64) -> Self {
        Self {
            quad: QuadForm::Zero,
            lin,
            constant,
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        let qx = self.quad.apply(x);
        x.dot(&qx) + self.lin.dot(x) + self.constant
    }

    /// Value and gradient in one pass.
    pub fn eval_grad(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let qx = self.quad.apply(x);
        let value = x.dot(&qx) + self.lin.dot(x) + self.constant;
        (value, qx * 2.0 + &self.lin)
    }

    /// Multiplies the whole function by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let quad = match &self.quad {
            QuadForm::Zero => QuadForm::Zero,
            QuadForm::Dense(q) => QuadForm::Dense(q * s),
            QuadForm::Sparse(e) => QuadForm::Sparse(e.iter().map(|&(i, j, v)| (i, j, v * s)).collect()),
        };
        Self {
            quad,
            lin: &self.lin * s,
            constant: self.constant * s,
        }
    }
}

/// Sparse linear row `∑ coeffs · x`.
#[derive(Debug, Clone, Default)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
}

impl LinearRow {
    pub fn new(coeffs: Vec<(usize, f64)>) -> Self {
        Self { coeffs }
    }

    pub fn dot(&self, x: &DVector<f64>) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * x[i]).sum()
    }
}

/// `row · x ≤ rhs`.
#[derive(Debug, Clone)]
pub struct LinearIneq {
    pub row: LinearRow,
    pub rhs: f64,
}

/// `row · x = rhs`.
#[derive(Debug, Clone)]
pub struct LinearEq {
    pub row: LinearRow,
    pub rhs: f64,
}

/// Linear matrix inequality `F₀ + ∑ᵢ xᵢ Fᵢ ⪰ 0` over real symmetric matrices.
///
/// `coeffs[i]` lists the nonzeros of `Fᵢ`, both halves included, so that
/// traces against a dense symmetric matrix are plain sums over the list.
#[derive(Debug, Clone)]
pub struct Lmi {
    pub dim: usize,
    pub constant: DMatrix<f64>,
    pub coeffs: Vec<Vec<(usize, usize, f64)>>,
}

impl Lmi {
    pub fn eval(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut f = self.constant.clone();
        for (i, entries) in self.coeffs.iter().enumerate() {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for &(r, c, v) in entries {
                f[(r, c)] += xi * v;
            }
        }
        f
    }
}

/// A convex problem in the shape the optimizer emits:
///
/// ```text
/// minimize    f₀(x)
/// subject to  fᵢ(x) ≤ 0          (convex quadratics)
///             aⱼ · x ≤ bⱼ
///             A x = b
///             F_l(x) ⪰ 0         (LMIs)
/// ```
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub n_vars: usize,
    pub objective: QuadraticFn,
    pub quad_le: Vec<QuadraticFn>,
    pub lin_le: Vec<LinearIneq>,
    pub lin_eq: Vec<LinearEq>,
    pub lmis: Vec<Lmi>,
}

impl ConicProblem {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: QuadraticFn::zero(n_vars),
            quad_le: Vec::new(),
            lin_le: Vec::new(),
            lin_eq: Vec::new(),
            lmis: Vec::new(),
        }
    }

    pub fn add_quad_le(&mut self, f: QuadraticFn) {
        self.quad_le.push(f);
    }

    pub fn add_lin_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.lin_le.push(LinearIneq {
            row: LinearRow::new(coeffs),
            rhs,
        });
    }

    pub fn add_lin_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.lin_eq.push(LinearEq {
            row: LinearRow::new(coeffs),
            rhs,
        });
    }

    /// `xᵢ ≥ 0`.
    pub fn add_nonneg(&mut self, i: usize) {
        self.add_lin_le(vec![(i, -1.0)], 0.0);
    }

    pub fn add_lmi(&mut self, lmi: Lmi) {
        self.lmis.push(lmi);
    }

    /// Barrier parameter: number of scalar inequalities plus LMI dimensions.
    pub fn barrier_degree(&self) -> f64 {
        (self.quad_le.len() + self.lin_le.len() + self.lmis.iter().map(|l| l.dim).sum::<usize>()) as f64
    }

    /// Checks that every quadratic form is PSD (eigmin ≥ −1e−9 relative).
    ///
    /// Costs one dense eigendecomposition per quadratic, so `solve` does not
    /// call it.
    pub fn check_convexity(&self) -> Result<(), ProblemError> {
        let n = self.n_vars;
        let fns = std::iter::once(("objective".to_string(), &self.objective))
            .chain(self.quad_le.iter().enumerate().map(|(k, f)| (format!("quadratic constraint {k}"), f)));
        for (what, f) in fns {
            if f.quad.is_zero() {
                continue;
            }
            let q = f.quad.to_dense(n);
            let eigmin = min_eigenvalue(&q);
            if eigmin < -1e-9 * (1.0 + q.amax()) {
                return Err(ProblemError::NotConvex(format!("{what}: min eigenvalue {eigmin:.3e}")));
            }
        }
        Ok(())
    }

    /// Checks dimensions and symmetry of the data.
    pub fn validate(&self) -> Result<(), ProblemError> {
        let n = self.n_vars;
        let check_fn = |f: &QuadraticFn, what: &str| -> Result<(), ProblemError> {
            if f.lin.len() != n {
                return Err(ProblemError::Dimension(format!(
                    "{what}: linear term has length {}, expected {n}",
                    f.lin.len()
                )));
            }
            if let Some(m) = f.quad.max_index() {
                if m >= n {
                    return Err(ProblemError::Dimension(format!("{what}: quadratic index {m} out of range")));
                }
            }
            if let QuadForm::Dense(q) = &f.quad {
                if q.nrows() != n || q.ncols() != n {
                    return Err(ProblemError::Dimension(format!("{what}: dense Q is not {n}x{n}")));
                }
            }
            Ok(())
        };
        check_fn(&self.objective, "objective")?;
        for (k, f) in self.quad_le.iter().enumerate() {
            check_fn(f, &format!("quadratic constraint {k}"))?;
        }
        let rows = self.lin_le.iter().map(|c| &c.row).chain(self.lin_eq.iter().map(|e| &e.row));
        for (k, row) in rows.enumerate() {
            if row.coeffs.iter().any(|&(i, _)| i >= n) {
                return Err(ProblemError::Dimension(format!("linear row {k} references a variable out of range")));
            }
        }
        for (k, l) in self.lmis.iter().enumerate() {
            if l.constant.nrows() != l.dim || l.constant.ncols() != l.dim {
                return Err(ProblemError::Dimension(format!("lmi {k}: constant is not {0}x{0}", l.dim)));
            }
            if l.coeffs.len() > n {
                return Err(ProblemError::Dimension(format!("lmi {k}: more coefficient blocks than variables")));
            }
            if (&l.constant - l.constant.transpose()).amax() > 1e-12 * (1.0 + l.constant.amax()) {
                return Err(ProblemError::NotSymmetric(format!("lmi {k}: constant block")));
            }
            for (i, entries) in l.coeffs.iter().enumerate() {
                let mut m = DMatrix::<f64>::zeros(l.dim, l.dim);
                for &(r, c, v) in entries {
                    if r >= l.dim || c >= l.dim {
                        return Err(ProblemError::Dimension(format!("lmi {k}: entry out of range for variable {i}")));
                    }
                    m[(r, c)] += v;
                }
                if (&m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
                    return Err(ProblemError::NotSymmetric(format!("lmi {k}: coefficient of variable {i}")));
                }
            }
        }
        Ok(())
    }

    /// Largest constraint violation at `x` (0 when feasible).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let mut v: f64 = 0.0;
        for f in &self.quad_le {
            v = v.max(f.eval(x));
        }
        for c in &self.lin_le {
            v = v.max(c.row.dot(x) - c.rhs);
        }
        for e in &self.lin_eq {
            v = v.max((e.row.dot(x) - e.rhs).abs());
        }
        for l in &self.lmis {
            v = v.max(-min_eigenvalue(&l.eval(x)));
        }
        v
    }

    /// Plain-text dump of the problem data for cross-solver debugging.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let write_fn = |s: &mut String, name: &str, f: &QuadraticFn| {
            let _ = writeln!(s, "{name} constant {:.17e}", f.constant);
            for (i, c) in f.lin.iter().enumerate() {
                if *c != 0.0 {
                    let _ = writeln!(s, "{name} lin {i} {c:.17e}");
                }
            }
            let q = f.quad.to_dense(self.n_vars);
            for i in 0..self.n_vars {
                for j in i..self.n_vars {
                    if q[(i, j)] != 0.0 {
                        let _ = writeln!(s, "{name} quad {i} {j} {:.17e}", q[(i, j)]);
                    }
                }
            }
        };
        let _ = writeln!(s, "vars {}", self.n_vars);
        write_fn(&mut s, "objective", &self.objective);
        for (k, f) in self.quad_le.iter().enumerate() {
            write_fn(&mut s, &format!("quad_le[{k}]"), f);
        }
        for (k, c) in self.lin_le.iter().enumerate() {
            let terms: Vec<String> = c.row.coeffs.iter().map(|(i, a)| format!("{i}:{a:.17e}")).collect();
            let _ = writeln!(s, "lin_le[{k}] {} <= {:.17e}", terms.join(" "), c.rhs);
        }
        for (k, c) in self.lin_eq.iter().enumerate() {
            let terms: Vec<String> = c.row.coeffs.iter().map(|(i, a)| format!("{i}:{a:.17e}")).collect();
            let _ = writeln!(s, "lin_eq[{k}] {} = {:.17e}", terms.join(" "), c.rhs);
        }
        for (k, l) in self.lmis.iter().enumerate() {
            let _ = writeln!(s, "lmi[{k}] dim {}", l.dim);
            for r in 0..l.dim {
                for c in r..l.dim {
                    if l.constant[(r, c)] != 0.0 {
                        let _ = writeln!(s, "lmi[{k}] F0 {r} {c} {:.17e}", l.constant[(r, c)]);
                    }
                }
            }
            for (i, entries) in l.coeffs.iter().enumerate() {
                for &(r, c, v) in entries.iter().filter(|e| e.0 <= e.1) {
                    let _ = writeln!(s, "lmi[{k}] F{} {r} {c} {v:.17e}", i + 1);
                }
            }
        }
        s
    }
}

/// Smallest eigenvalue of a symmetric matrix (−∞ for empty input is avoided:
/// returns 0).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}
