//! Normal-equation least squares with a Cholesky solve and a ridge fallback.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par;

/// Factorizations whose squared pivot ratio exceeds this are treated as singular.
pub const MAX_CONDITION: f64 = 1e14;
/// Ridge added on fallback, relative to the Gram trace.
pub const RIDGE_FACTOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub coefficients: Vec<f64>,
    /// `(max Lᵢᵢ / min Lᵢᵢ)²` of the Cholesky factor actually used.
    pub condition_estimate: f64,
    /// The ridge fallback was needed.
    pub regularized: bool,
}

fn pivot_ratio(l: &DMatrix<f64>) -> f64 {
    let d = l.diagonal();
    let max = d.iter().copied().fold(0.0, f64::max);
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    (max / min).powi(2)
}

/// Solves `G x = r` for a symmetric positive semi-definite Gram matrix.
///
/// A failed or badly conditioned factorization is retried on `G + λI` with
/// `λ = 1e−10·trace(G)`.
pub fn solve_gram(gram: DMatrix<f64>, rhs: DVector<f64>) -> Result<Solution> {
    let n = gram.nrows();
    if gram.ncols() != n || rhs.len() != n {
        return Err(Error::invalid("Gram system shape mismatch"));
    }
    if n == 0 {
        return Ok(Solution {
            coefficients: Vec::new(),
            condition_estimate: 1.0,
            regularized: false,
        });
    }
    if gram.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("Gram system has non-finite entries"));
    }
    if let Some(ch) = gram.clone().cholesky() {
        let cond = pivot_ratio(ch.l_dirty());
        if cond.is_finite() && cond <= MAX_CONDITION {
            return Ok(Solution {
                coefficients: ch.solve(&rhs).iter().copied().collect(),
                condition_estimate: cond,
                regularized: false,
            });
        }
    }
    let trace = gram.trace();
    if trace <= 0.0 {
        // every column vanishes on the nodes
        return Ok(Solution {
            coefficients: vec![0.0; n],
            condition_estimate: f64::INFINITY,
            regularized: true,
        });
    }
    let mut g = gram;
    let lambda = RIDGE_FACTOR * trace;
    for i in 0..n {
        g[(i, i)] += lambda;
    }
    let ch = g
        .cholesky()
        .ok_or_else(|| Error::Unsupported("Gram matrix is not positive semi-definite".into()))?;
    Ok(Solution {
        coefficients: ch.solve(&rhs).iter().copied().collect(),
        condition_estimate: pivot_ratio(ch.l_dirty()),
        regularized: true,
    })
}

/// Nodes per block in [`dense_normal_equations`]; fixed so sums do not depend on threads.
pub const CHUNK: usize = 2048;

/// Accumulates `AᵀWA` and `AᵀWb` over quadrature nodes.
///
/// `row(i, out)` fills the `k` design values at node `i` and returns the target value there.
/// Rows are evaluated block by block (in parallel when enabled) and each block is folded in
/// with a matrix product, in block order.
pub fn dense_normal_equations<R>(
    weights: &[f64],
    k: usize,
    parallel: bool,
    row: R,
) -> (DMatrix<f64>, DVector<f64>)
where
    R: Fn(usize, &mut [f64]) -> f64 + Sync + Send,
{
    let mut gram = DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    let nodes = weights.len();
    let mut start = 0;
    while start < nodes {
        let len = CHUNK.min(nodes - start);
        let rows = par::map_range(len, parallel, |r| {
            let i = start + r;
            let mut v = vec![0.0; k];
            let y = row(i, &mut v);
            let s = weights[i].sqrt();
            for e in v.iter_mut() {
                *e *= s;
            }
            (v, y * s)
        });
        let mut b = DMatrix::zeros(len, k);
        let mut yv = DVector::zeros(len);
        for (r, (v, y)) in rows.into_iter().enumerate() {
            for (c, e) in v.into_iter().enumerate() {
                b[(r, c)] = e;
            }
            yv[r] = y;
        }
        gram.gemm_tr(1.0, &b, &b, 1.0);
        rhs.gemv_tr(1.0, &b, &yv, 1.0);
        start += len;
    }
    (gram, rhs)
}
