use nalgebra::{Complex, DMatrix};

use crate::problem::Lmi;

/// Accumulates a real symmetric LMI `F₀ + ∑ xᵢ Fᵢ ⪰ 0`.
#[derive(Debug, Clone)]
pub struct LmiBuilder {
    dim: usize,
    constant: DMatrix<f64>,
    coeffs: Vec<Vec<(usize, usize, f64)>>,
}

impl LmiBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            constant: DMatrix::zeros(dim, dim),
            coeffs: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `v` to `F₀` at `(r, c)` and `(c, r)`.
    pub fn constant(&mut self, r: usize, c: usize, v: f64) {
        self.constant[(r, c)] += v;
        if r != c {
            self.constant[(c, r)] += v;
        }
    }

    /// Adds `v` to `F_var` at `(r, c)` and `(c, r)`.
    pub fn coeff(&mut self, var: usize, r: usize, c: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        if self.coeffs.len() <= var {
            self.coeffs.resize(var + 1, Vec::new());
        }
        self.coeffs[var].push((r, c, v));
        if r != c {
            self.coeffs[var].push((c, r, v));
        }
    }

    pub fn build(self) -> Lmi {
        Lmi {
            dim: self.dim,
            constant: self.constant,
            coeffs: self.coeffs,
        }
    }
}

/// Complex Hermitian LMI `M(x) ⪰ 0`, stored through the real embedding
/// `[[Re M, −Im M], [Im M, Re M]]`, which is PSD exactly when `M` is.
///
/// Each eigenvalue of `M` appears twice in the embedding, so the barrier
/// degree is `2·dim`.
#[derive(Debug, Clone)]
pub struct HermitianLmiBuilder {
    dim: usize,
    inner: LmiBuilder,
}

impl HermitianLmiBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            inner: LmiBuilder::new(2 * dim),
        }
    }

    /// Sets the constant entry `M(r, c) = z` (and `M(c, r) = z̄`).
    /// Diagonal entries must be real.
    pub fn constant(&mut self, r: usize, c: usize, z: Complex<f64>) {
        let d = self.dim;
        if r == c {
            debug_assert!(z.im == 0.0, "Hermitian diagonal must be real");
            self.inner.constant(r, r, z.re);
            self.inner.constant(r + d, r + d, z.re);
            return;
        }
        self.inner.constant(r, c, z.re);
        self.inner.constant(r + d, c + d, z.re);
        // Im block: lift(r+d, c) = Im M(r,c), lift(r, c+d) = −Im M(r,c)
        // and their mirrors; the symmetric helper covers (c, r+d) etc.
        self.inner.constant(r + d, c, z.im);
        self.inner.constant(r, c + d, -z.im);
    }

    /// Variable `var` adds `scale` to `Re M(r, c)` (and `Re M(c, r)`).
    pub fn real_part(&mut self, var: usize, r: usize, c: usize, scale: f64) {
        let d = self.dim;
        self.inner.coeff(var, r, c, scale);
        self.inner.coeff(var, r + d, c + d, scale);
    }

    /// Variable `var` adds `j·scale` to `M(r, c)` and `−j·scale` to `M(c, r)`.
    /// Requires `r != c`.
    pub fn imag_part(&mut self, var: usize, r: usize, c: usize, scale: f64) {
        assert!(r != c, "imaginary part on a Hermitian diagonal");
        let d = self.dim;
        self.inner.coeff(var, r + d, c, scale);
        self.inner.coeff(var, r, c + d, -scale);
    }

    pub fn build(self) -> Lmi {
        self.inner.build()
    }
}

/// Recovers the complex Hermitian matrix from its real embedding.
pub fn hermitian_from_embedding(m: &DMatrix<f64>) -> DMatrix<Complex<f64>> {
    let d = m.nrows() / 2;
    DMatrix::from_fn(d, d, |r, c| Complex::new(m[(r, c)], m[(r + d, c)]))
}
