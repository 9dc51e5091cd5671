use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{bump, relative, Atom, FitMode, FitReport};
use crate::error::{Error, Result};
use crate::lstsq;
use crate::network::DeepReluNet;
use crate::par;
use crate::quadrature::{self, box_nodes, Domain, QuadratureConfig, MAX_DIM};

/// Largest lattice the builder will assemble.
pub const MAX_MEMBERS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Bounded box covered by member peaks.
    pub domain: Domain,
    pub sigma: f64,
    pub mode: FitMode,
}

impl GridSpec {
    pub fn new(domain: Domain, sigma: f64, mode: FitMode) -> Result<Self> {
        let g = Self { domain, sigma, mode };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if !matches!(self.domain, Domain::Box { .. }) || !self.domain.is_finite() {
            return Err(Error::invalid("grid domain must be a bounded box"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Lattice of peaks `lo + (j + ½)σ` covering a box, one per width-`σ` cell.
/// Member `i` is `F((x − zᵢ)/σ)` with `zᵢ = centerᵢ − σ·𝟙`, supported on `centerᵢ ± σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    lo: Vec<f64>,
    counts: Vec<usize>,
    sigma: f64,
}

impl Lattice {
    pub fn new(axes: &[(f64, f64)], sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(Error::invalid("lattice dimension out of range"));
        }
        let mut counts = Vec::with_capacity(axes.len());
        for &(lo, hi) in axes {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!("lattice axis [{lo}, {hi}] must be bounded")));
            }
            let r = (hi - lo) / sigma;
            let m = if (r - r.round()).abs() <= 1e-9 * r.max(1.0) {
                r.round()
            } else {
                r.ceil()
            };
            counts.push((m as usize).max(1));
        }
        let total = counts.iter().try_fold(1usize, |a, &c| a.checked_mul(c));
        if total.is_none_or(|t| t > MAX_MEMBERS) {
            return Err(Error::invalid(format!(
                "lattice with {counts:?} cells exceeds {MAX_MEMBERS} members"
            )));
        }
        Ok(Self {
            lo: axes.iter().map(|a| a.0).collect(),
            counts,
            sigma,
        })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    fn coord(&self, d: usize, j: usize) -> f64 {
        self.lo[d] + (j as f64 + 0.5) * self.sigma
    }

    fn multi_index(&self, mut i: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for d in (0..self.dim()).rev() {
            idx[d] = i % self.counts[d];
            i /= self.counts[d];
        }
        idx
    }

    pub fn center(&self, i: usize) -> Vec<f64> {
        let idx = self.multi_index(i);
        (0..self.dim()).map(|d| self.coord(d, idx[d])).collect()
    }

    pub fn offset(&self, i: usize) -> Vec<f64> {
        self.center(i).into_iter().map(|c| c - self.sigma).collect()
    }

    /// Union of member supports.
    pub fn hull(&self) -> Vec<(f64, f64)> {
        (0..self.dim())
            .map(|d| (self.coord(d, 0) - self.sigma, self.coord(d, self.counts[d] - 1) + self.sigma))
            .collect()
    }

    /// Every coordinate-aligned crease of the members, per axis.
    pub fn knots(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|d| {
                (0..=self.counts[d] + 1)
                    .map(|k| self.lo[d] + (k as f64 - 0.5) * self.sigma)
                    .collect()
            })
            .collect()
    }

    /// Calls `f(i, Fᵢ(x))` for each member that is nonzero at `x`, in increasing `i`.
    pub fn for_each_member(&self, x: &[f64], mut f: impl FnMut(usize, f64)) {
        let n = self.dim();
        let mut cand = [[(0usize, 0.0f64); 2]; MAX_DIM];
        let mut ncand = [0usize; MAX_DIM];
        for d in 0..n {
            let k = ((x[d] - self.lo[d]) / self.sigma - 0.5).floor();
            for j in [k, k + 1.0] {
                if j < 0.0 || j >= self.counts[d] as f64 {
                    continue;
                }
                let j = j as usize;
                let g = 1.0 - (x[d] - self.coord(d, j)).abs() / self.sigma;
                if g > 0.0 {
                    cand[d][ncand[d]] = (j, g);
                    ncand[d] += 1;
                }
            }
            if ncand[d] == 0 {
                return;
            }
        }
        let mut pick = [0usize; MAX_DIM];
        loop {
            let mut flat = 0;
            let mut s = 0.0;
            for d in 0..n {
                let (j, g) = cand[d][pick[d]];
                flat = flat * self.counts[d] + j;
                s += g;
            }
            let v = s - (n as f64 - 1.0);
            if v > 0.0 {
                f(flat, v);
            }
            let mut d = n;
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                pick[d] += 1;
                if pick[d] < ncand[d] {
                    break;
                }
                pick[d] = 0;
            }
        }
    }

    /// `Σ tᵢ Fᵢ(x)`.
    pub fn expand(&self, coeffs: &[f64], x: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_each_member(x, |i, v| s += coeffs[i] * v);
        s
    }

    pub fn atoms(&self) -> Vec<Atom> {
        (0..self.len())
            .map(|i| Atom {
                z: self.offset(i),
                sigma: self.sigma,
            })
            .collect()
    }

    /// The expansion as one depth-3 ReLU net.
    pub fn to_net(&self, coeffs: &[f64]) -> Result<DeepReluNet> {
        let members = (0..self.len())
            .map(|i| bump::family_member(self.dim(), &self.offset(i), self.sigma, coeffs[i]))
            .collect::<Result<Vec<_>>>()?;
        DeepReluNet::sum_all(&members)
    }
}

fn merged_knots(cfg: &QuadratureConfig, extra: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    extra
        .into_iter()
        .enumerate()
        .map(|(d, mut k)| {
            k.extend_from_slice(cfg.knots.get(d).map(Vec::as_slice).unwrap_or(&[]));
            k
        })
        .collect()
}

pub(crate) fn pow_abs(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else {
        a.powf(p)
    }
}

/// `(I^{1/p}, error carried through the root)`.
pub(crate) fn root(i: f64, di: f64, p: f64) -> (f64, f64) {
    if i > 0.0 {
        let v = i.powf(1.0 / p);
        (v, v / (p * i) * di)
    } else {
        (0.0, di.powf(1.0 / p))
    }
}

/// `∫ |target|ᵖ` outside a bounded box, on a grid whose core contains the box.
pub(crate) fn outer_tail<F>(target: &F, hull: &[(f64, f64)], cfg: &QuadratureConfig) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let reach = hull.iter().fold(0.0f64, |m, &(lo, hi)| m.max(lo.abs()).max(hi.abs()));
    let mut tcfg = cfg.clone();
    tcfg.r0 = cfg.r0.max(reach);
    let inside = |x: &[f64]| hull.iter().zip(x).all(|(&(lo, hi), &v)| lo <= v && v <= hi);
    let p_tail = |x: &[f64]| if inside(x) { 0.0 } else { target(x) };
    let r = quadrature::integrate(p_tail, &Domain::real_line(hull.len()), &tcfg)?;
    Ok((r.value, r.abs_error_estimate))
}

/// Least-squares system over a node set, accumulated sparsely in node order.
fn lattice_normal_equations<F>(
    lat: &Lattice,
    target: &F,
    axes: &[(f64, f64)],
    cfg: &QuadratureConfig,
) -> Result<(DMatrix<f64>, DVector<f64>)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let nodes = box_nodes(axes, cfg)?;
    let k = lat.len();
    let mut gram = DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    let mut start = 0;
    while start < nodes.len() {
        let len = lstsq::CHUNK.min(nodes.len() - start);
        let rows = par::map_range(len, cfg.parallel, |r| {
            let x = nodes.point(start + r);
            let mut m: Vec<(usize, f64)> = Vec::with_capacity(1 << lat.dim());
            lat.for_each_member(x, |i, v| m.push((i, v)));
            (target(x), m)
        });
        for (r, (y, m)) in rows.into_iter().enumerate() {
            let w = nodes.weights[start + r];
            for &(a, va) in &m {
                rhs[a] += w * va * y;
                for &(b, vb) in &m {
                    gram[(a, b)] += w * va * vb;
                }
            }
        }
        start += len;
    }
    Ok((gram, rhs))
}

/// Fits `Σ tᵢ F((x − zᵢ)/σ)` to `target` with one member per lattice cell of the grid box.
///
/// Fitting and residual measurement share the quadrature nodes of the lattice hull (the box
/// grown by `σ/2`), with cells split on every lattice crease. The residual adds the mass of
/// `|target|ᵖ` outside the hull, where the net vanishes, so it is an `L^p(ℝⁿ)` value.
pub fn build_depth3_approximator<F>(
    target: F,
    grid: &GridSpec,
    p: f64,
    cfg: &QuadratureConfig,
) -> Result<(DeepReluNet, FitReport)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    grid.validate()?;
    cfg.validate()?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("p must be finite and >= 1, got {p}")));
    }
    let Domain::Box { axes } = &grid.domain else {
        unreachable!("validated above")
    };
    let lat = Lattice::new(axes, grid.sigma)?;
    let hull = lat.hull();
    let mut qcfg = cfg.clone();
    qcfg.knots = merged_knots(cfg, lat.knots());

    let (coefficients, condition_estimate, regularized) = match grid.mode {
        FitMode::Sample => (
            par::map_range(lat.len(), cfg.parallel, |i| target(&lat.center(i))),
            1.0,
            false,
        ),
        FitMode::LeastSquares => {
            let (g, r) = lattice_normal_equations(&lat, &target, &hull, &qcfg)?;
            let s = lstsq::solve_gram(g, r)?;
            (s.coefficients, s.condition_estimate, s.regularized)
        }
    };

    let hull_dom = Domain::new_box(hull.clone())?;
    let err = quadrature::integrate(
        |x: &[f64]| pow_abs(lat.expand(&coefficients, x) - target(x), p),
        &hull_dom,
        &qcfg,
    )?;
    let tin = quadrature::integrate(|x: &[f64]| pow_abs(target(x), p), &hull_dom, &qcfg)?;
    let (tail, tail_err) = outer_tail(&|x: &[f64]| pow_abs(target(x), p), &hull, &qcfg)?;
    let (residual_lp, residual_error_estimate) =
        root(err.value + tail, err.abs_error_estimate + tail_err, p);
    let (target_norm, _) = root(tin.value + tail, 0.0, p);

    let net = lat.to_net(&coefficients)?;
    let report = FitReport {
        mode: grid.mode,
        atoms: lat.atoms(),
        dictionary_size: coefficients.len(),
        coefficients,
        p,
        residual_lp,
        residual_error_estimate,
        target_norm,
        relative_residual: relative(residual_lp, target_norm),
        condition_estimate,
        regularized,
    };
    Ok((net, report))
}
