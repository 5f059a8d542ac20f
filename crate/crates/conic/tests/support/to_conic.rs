//! Converters from the oracle's dense test problems to `ConicProblem`.
#![allow(dead_code)]

use conic::{ConicProblem, LmiBuilder, QuadForm, QuadraticFn};
use nalgebra::DVector;

use super::first_order::{DenseQcqp, DenseQuad, StandardSdp};

fn to_fn(q: &DenseQuad) -> QuadraticFn {
    QuadraticFn {
        quad: QuadForm::Dense(q.q.clone()),
        lin: q.c.clone(),
        constant: q.d,
    }
}

pub fn qcqp_problem(p: &DenseQcqp) -> ConicProblem {
    let n = p.objective.c.len();
    let mut cp = ConicProblem::new(n);
    cp.objective = to_fn(&p.objective);
    for c in &p.constraints {
        cp.add_quad_le(to_fn(c));
    }
    cp
}

/// Variables are the upper-triangular entries of `X`, row by row.
pub fn sdp_problem(p: &StandardSdp) -> (ConicProblem, Vec<(usize, usize)>) {
    let n = p.c.nrows();
    let mut index = Vec::new();
    for i in 0..n {
        for j in i..n {
            index.push((i, j));
        }
    }
    let nv = index.len();
    let mut cp = ConicProblem::new(nv);
    let weight = |m: &nalgebra::DMatrix<f64>, (i, j): (usize, usize)| if i == j { m[(i, i)] } else { 2.0 * m[(i, j)] };
    cp.objective = QuadraticFn::linear(DVector::from_fn(nv, |k, _| weight(&p.c, index[k])), 0.0);
    for (a, b) in p.a.iter().zip(&p.b) {
        let coeffs = index.iter().enumerate().map(|(k, &ij)| (k, weight(a, ij))).collect();
        cp.add_lin_eq(coeffs, *b);
    }
    let mut lmi = LmiBuilder::new(n);
    for (k, &(i, j)) in index.iter().enumerate() {
        lmi.coeff(k, i, j, 1.0);
    }
    cp.add_lmi(lmi.build());
    (cp, index)
}
