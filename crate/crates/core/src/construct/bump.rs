use crate::error::{Error, Result};
use crate::network::{AffineMap, DeepReluNet};

const SECOND_DIFF: [f64; 3] = [1.0, -2.0, 1.0];

/// `G(x) = ReLU(x) − 2ReLU(x−1) + ReLU(x−2)`: the unit tent on `[0, 2]`, depth 2.
pub fn bump_1d() -> DeepReluNet {
    let l1 = AffineMap::dense(vec![vec![1.0]; 3], vec![0.0, -1.0, -2.0]).expect("static shape");
    let l2 = AffineMap::dense(vec![SECOND_DIFF.to_vec()], vec![0.0]).expect("static shape");
    DeepReluNet::new(1, vec![l1, l2]).expect("static shape")
}

/// `F(x) = G(G(x₁) + … + G(xₙ) − (n−1))`, supported on `[0, 2]ⁿ` with `F(1,…,1) = 1`; depth 3.
pub fn bump_nd(n: usize) -> Result<DeepReluNet> {
    if n == 0 {
        return Err(Error::invalid("bump dimension must be >= 1"));
    }
    let l1 = AffineMap::sparse(
        3 * n,
        n,
        (0..3 * n).map(|r| (r, r / 3, 1.0)).collect(),
        (0..3 * n).map(|r| -((r % 3) as f64)).collect(),
    )?;
    let inner: Vec<f64> = (0..n).flat_map(|_| SECOND_DIFF).collect();
    let l2 = AffineMap::dense(
        vec![inner; 3],
        (0..3).map(|k| -((n - 1) as f64) - k as f64).collect(),
    )?;
    let l3 = AffineMap::dense(vec![SECOND_DIFF.to_vec()], vec![0.0])?;
    DeepReluNet::new(n, vec![l1, l2, l3])
}

/// `t·F((x − z)/σ)`, supported on `z + σ[0, 2]ⁿ`.
pub fn family_member(n: usize, z: &[f64], sigma: f64, t: f64) -> Result<DeepReluNet> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if z.len() != n {
        return Err(Error::invalid(format!("offset has length {}, expected {n}", z.len())));
    }
    let inv = 1.0 / sigma;
    let lambda = AffineMap::sparse(
        n,
        n,
        (0..n).map(|i| (i, i, inv)).collect(),
        z.iter().map(|zi| -zi / sigma).collect(),
    )?;
    bump_nd(n)?.precompose(&lambda)?.scale_output(t)
}

/// Closed form of `G`.
pub fn tent(x: f64) -> f64 {
    (1.0 - (x - 1.0).abs()).max(0.0)
}

/// Closed form of `F`: `max(0, Σ G(xᵢ) − (n−1))`, since `G(s) = s` on `[0, 1]`.
pub fn bump_value(x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|&v| tent(v)).sum();
    (s - (x.len() as f64 - 1.0)).max(0.0)
}
