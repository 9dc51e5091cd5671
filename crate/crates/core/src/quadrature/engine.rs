use super::{Domain, GaussLegendre, QuadratureConfig, QuadratureResult, MAX_DIM};
use crate::error::{Error, Result};
use crate::exact::Neumaier;
use crate::par;

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    value: f64,
    err: f64,
    abs: f64,
    cells: u64,
}

#[derive(Default)]
struct Acc {
    value: Neumaier,
    err: Neumaier,
    abs: Neumaier,
    cells: u64,
}

impl Acc {
    fn push(&mut self, s: Sums) {
        self.value.add(s.value);
        self.err.add(s.err);
        self.abs.add(s.abs);
        self.cells += s.cells;
    }

    fn sums(&self) -> Sums {
        Sums {
            value: self.value.value(),
            err: self.err.value(),
            abs: self.abs.value(),
            cells: self.cells,
        }
    }
}

struct Rules {
    hi: GaussLegendre,
    lo: GaussLegendre,
}

impl Rules {
    fn new(order: usize) -> Self {
        Self {
            hi: GaussLegendre::new(order),
            lo: GaussLegendre::new((order / 2).max(1)),
        }
    }
}

/// Breakpoints of `cells` equal cells on `[lo, hi]`, split further at interior knots.
fn axis_breaks(lo: f64, hi: f64, cells: usize, knots: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = (0..=cells)
        .map(|i| {
            if i == cells {
                hi
            } else {
                lo + (hi - lo) * (i as f64 / cells as f64)
            }
        })
        .collect();
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let tol = 1e-12 * scale;
    let mut extra: Vec<f64> = knots.iter().copied().filter(|&k| k > lo + tol && k < hi - tol).collect();
    if !extra.is_empty() {
        b.append(&mut extra);
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() <= tol);
        // dedup keeps the earlier entry, so the endpoints survive
        *b.last_mut().unwrap() = hi;
    }
    b
}

/// Sum of a tensor rule over one cell; returns `(Σ w f, Σ w |f|)`.
fn cell_rule<F: Fn(&[f64]) -> f64>(f: &F, lo: &[f64], hi: &[f64], rule: &GaussLegendre) -> (f64, f64) {
    let n = lo.len();
    let q = rule.order();
    let mut mid = [0.0; MAX_DIM];
    let mut half = [0.0; MAX_DIM];
    for d in 0..n {
        mid[d] = 0.5 * (lo[d] + hi[d]);
        half[d] = 0.5 * (hi[d] - lo[d]);
    }
    let mut idx = [0usize; MAX_DIM];
    let mut x = [0.0; MAX_DIM];
    let mut sum = 0.0;
    let mut abs = 0.0;
    loop {
        let mut w = 1.0;
        for d in 0..n {
            x[d] = mid[d] + half[d] * rule.nodes[idx[d]];
            w *= half[d] * rule.weights[idx[d]];
        }
        let v = f(&x[..n]);
        sum += w * v;
        abs += w * v.abs();
        let mut d = n;
        loop {
            if d == 0 {
                return (sum, abs);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < q {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Integrates over the product grid given by per-axis breakpoints.
fn grid<F: Fn(&[f64]) -> f64 + Sync>(f: &F, breaks: &[Vec<f64>], rules: &Rules, parallel: bool) -> Sums {
    let n = breaks.len();
    let counts: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
    let inner: usize = counts[1..].iter().product();
    let rows = par::map_range(counts[0], parallel, |i0| {
        let mut acc = Acc::default();
        let mut idx = [0usize; MAX_DIM];
        idx[0] = i0;
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for _ in 0..inner {
            for d in 0..n {
                lo[d] = breaks[d][idx[d]];
                hi[d] = breaks[d][idx[d] + 1];
            }
            let (v, a) = cell_rule(f, &lo[..n], &hi[..n], &rules.hi);
            let (v2, _) = cell_rule(f, &lo[..n], &hi[..n], &rules.lo);
            acc.push(Sums {
                value: v,
                err: (v - v2).abs(),
                abs: a,
                cells: 1,
            });
            let mut d = n;
            while d > 1 {
                d -= 1;
                idx[d] += 1;
                if idx[d] < counts[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        acc.sums()
    });
    let mut acc = Acc::default();
    for r in rows {
        acc.push(r);
    }
    acc.sums()
}

fn truncate(axes: &[(f64, f64)], r: f64) -> Vec<(f64, f64)> {
    axes.iter()
        .map(|&(lo, hi)| match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (lo, hi),
            (false, false) => (-r, r),
            (false, true) => ((-r).min(hi - r), hi),
            (true, false) => (lo, r.max(lo + r)),
        })
        .collect()
}

fn breaks_for(intervals: &[(f64, f64)], cells: impl Fn(usize) -> usize, cfg: &QuadratureConfig) -> Vec<Vec<f64>> {
    intervals
        .iter()
        .enumerate()
        .map(|(d, &(lo, hi))| axis_breaks(lo, hi, cells(d), cfg.knots_on_axis(d)))
        .collect()
}

/// `B_k \ B_{k−1}` as at most `2n` disjoint boxes, integrated in a fixed order.
fn shell<F: Fn(&[f64]) -> f64 + Sync>(
    f: &F,
    inner: &[(f64, f64)],
    outer: &[(f64, f64)],
    cfg: &QuadratureConfig,
    rules: &Rules,
) -> Sums {
    let n = inner.len();
    let mut acc = Acc::default();
    for i in 0..n {
        let ext = [(outer[i].0, inner[i].0), (inner[i].1, outer[i].1)];
        for seg in ext {
            if seg.1 <= seg.0 {
                continue;
            }
            let mut iv: Vec<(f64, f64)> = Vec::with_capacity(n);
            iv.extend_from_slice(&inner[..i]);
            iv.push(seg);
            iv.extend_from_slice(&outer[i + 1..]);
            let b = breaks_for(
                &iv,
                |d| {
                    let c = cfg.cells_on_axis(d);
                    if d == i {
                        (c / 2).max(1)
                    } else {
                        c
                    }
                },
                cfg,
            );
            acc.push(grid(f, &b, rules, cfg.parallel));
        }
    }
    acc.sums()
}

fn finish(s: Sums, tail: f64, radius: f64, converged: bool) -> QuadratureResult {
    QuadratureResult {
        value: s.value,
        abs_error_estimate: s.err + tail,
        truncation_radius: radius,
        cells_evaluated: s.cells,
        converged,
    }
}

fn integrate_box<F: Fn(&[f64]) -> f64 + Sync>(
    f: &F,
    axes: &[(f64, f64)],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    let rules = Rules::new(cfg.order);
    if axes.iter().all(|(lo, hi)| lo.is_finite() && hi.is_finite()) {
        let b = breaks_for(axes, |d| cfg.cells_on_axis(d), cfg);
        let s = grid(f, &b, &rules, cfg.parallel);
        return check_finite(finish(s, 0.0, 0.0, true));
    }
    let mut r = cfg.r0;
    let mut inner = truncate(axes, r);
    let core = grid(f, &breaks_for(&inner, |d| cfg.cells_on_axis(d), cfg), &rules, cfg.parallel);
    let mut acc = Acc::default();
    acc.push(core);
    let mut last_shell_abs = f64::INFINITY;
    for _ in 0..cfg.max_doublings {
        r *= 2.0;
        let outer = truncate(axes, r);
        let s = shell(f, &inner, &outer, cfg, &rules);
        acc.push(s);
        inner = outer;
        last_shell_abs = s.abs;
        let total = acc.sums();
        if !total.value.is_finite() {
            break;
        }
        if s.abs <= cfg.abs_tol.max(cfg.rel_tol * total.abs) {
            return check_finite(finish(total, s.abs, r, true));
        }
    }
    let partial = finish(acc.sums(), last_shell_abs, r, false);
    Err(Error::NonConvergence {
        message: format!(
            "newest shell still carries mass {last_shell_abs:.3e} after {} doublings",
            cfg.max_doublings
        ),
        partial,
    })
}

fn check_finite(r: QuadratureResult) -> Result<QuadratureResult> {
    if r.value.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonConvergence {
            message: "integrand produced non-finite values".into(),
            partial: QuadratureResult { converged: false, ..r },
        })
    }
}

/// `∫_d f`.
///
/// Cones are mapped to boxes by `(t, u) ↦ (t, u·c·t)` with `u ∈ [−1, 1]` and Jacobian `c·|t|`;
/// knot hints then refer to `(t, u)`.
pub fn integrate<F>(f: F, d: &Domain, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    d.validate()?;
    cfg.validate()?;
    match d {
        Domain::Box { axes } => integrate_box(&f, axes, cfg),
        &Domain::Cone { c, two_sided } => {
            let t_lo = if two_sided { f64::NEG_INFINITY } else { 0.0 };
            let axes = [(t_lo, f64::INFINITY), (-1.0, 1.0)];
            let g = |p: &[f64]| {
                let t = p[0];
                if t == 0.0 {
                    return 0.0;
                }
                c * t.abs() * f(&[t, p[1] * c * t])
            };
            integrate_box(&g, &axes, cfg)
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("p must be finite and >= 1, got {p}")));
    }
    Ok(())
}

fn root(r: QuadratureResult, p: f64) -> QuadratureResult {
    let (value, err) = if p == 1.0 {
        (r.value, r.abs_error_estimate)
    } else if r.value > 0.0 {
        let v = r.value.powf(1.0 / p);
        (v, v / (p * r.value) * r.abs_error_estimate)
    } else {
        (0.0, r.abs_error_estimate.powf(1.0 / p))
    };
    QuadratureResult {
        value,
        abs_error_estimate: err,
        ..r
    }
}

/// `(∫_d |f|ᵖ)^{1/p}`, with the error estimate carried through the root.
pub fn lp_norm<F>(f: F, d: &Domain, p: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_p(p)?;
    let g = |x: &[f64]| {
        let v = f(x).abs();
        if p == 1.0 {
            v
        } else if p == 2.0 {
            v * v
        } else {
            v.powf(p)
        }
    };
    match integrate(g, d, cfg) {
        Ok(r) => Ok(root(r, p)),
        Err(Error::NonConvergence { message, partial }) => Err(Error::NonConvergence {
            message,
            partial: root(partial, p),
        }),
        Err(e) => Err(e),
    }
}

/// `‖f − g‖_{L^p(d)}`.
pub fn lp_distance<F, G>(f: F, g: G, d: &Domain, p: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> f64 + Sync,
{
    lp_norm(|x: &[f64]| f(x) - g(x), d, p, cfg)
}

/// Quadrature nodes of a bounded box, in the order [`integrate`] visits them.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub dim: usize,
    /// Row-major, `dim` coordinates per node.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// `Σ wᵢ f(xᵢ)` in node order.
    pub fn apply(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut s = Neumaier::default();
        for i in 0..self.len() {
            s.add(self.weights[i] * f(self.point(i)));
        }
        s.value()
    }
}

/// The high-order nodes and weights [`integrate`] uses on the bounded box `axes`
/// (and on the core of an unbounded domain truncated to the same box).
pub fn box_nodes(axes: &[(f64, f64)], cfg: &QuadratureConfig) -> Result<NodeSet> {
    let d = Domain::new_box(axes.to_vec())?;
    if !d.is_finite() {
        return Err(Error::invalid("box_nodes needs a bounded box"));
    }
    cfg.validate()?;
    let n = axes.len();
    let rule = GaussLegendre::new(cfg.order);
    let q = rule.order();
    let breaks = breaks_for(axes, |d| cfg.cells_on_axis(d), cfg);
    let counts: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
    let cells: usize = counts.iter().product();
    let per_cell = q.pow(n as u32);
    let mut points = Vec::with_capacity(cells * per_cell * n);
    let mut weights = Vec::with_capacity(cells * per_cell);
    let mut cidx = [0usize; MAX_DIM];
    for _ in 0..cells {
        let mut mid = [0.0; MAX_DIM];
        let mut half = [0.0; MAX_DIM];
        for d in 0..n {
            let (lo, hi) = (breaks[d][cidx[d]], breaks[d][cidx[d] + 1]);
            mid[d] = 0.5 * (lo + hi);
            half[d] = 0.5 * (hi - lo);
        }
        let mut idx = [0usize; MAX_DIM];
        for _ in 0..per_cell {
            let mut w = 1.0;
            for d in 0..n {
                points.push(mid[d] + half[d] * rule.nodes[idx[d]]);
                w *= half[d] * rule.weights[idx[d]];
            }
            weights.push(w);
            let mut d = n;
            while d > 0 {
                d -= 1;
                idx[d] += 1;
                if idx[d] < q {
                    break;
                }
                idx[d] = 0;
            }
        }
        let mut d = n;
        while d > 0 {
            d -= 1;
            cidx[d] += 1;
            if cidx[d] < counts[d] {
                break;
            }
            cidx[d] = 0;
        }
    }
    Ok(NodeSet { dim: n, points, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn unit_square() {
        let r = integrate(|_| 1.0, &Domain::cube(2, 0.0, 1.0), &cfg()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert_eq!(r.truncation_radius, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn gaussian_on_the_line() {
        let r = integrate(|x| (-x[0] * x[0]).exp(), &Domain::real_line(1), &cfg()).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-6);
        assert!(r.truncation_radius >= 8.0);
        assert!(r.abs_error_estimate >= 0.0);
    }

    #[test]
    fn half_line_exponential() {
        let d = Domain::new_box(vec![(1.0, f64::INFINITY)]).unwrap();
        let r = integrate(|x| (-x[0]).exp(), &d, &cfg()).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn divergent_integrand_reports_partial() {
        let e = integrate(|_| 1.0, &Domain::real_line(1), &cfg()).unwrap_err();
        match e {
            Error::NonConvergence { partial, .. } => {
                assert!(!partial.converged);
                assert_eq!(partial.truncation_radius, 4.0 * 4096.0);
                assert!((partial.value - 2.0 * 4.0 * 4096.0).abs() < 1e-6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn knots_split_cells() {
        let b = axis_breaks(0.0, 1.0, 4, &[0.3, 0.5, 2.0, 0.0]);
        assert_eq!(b, vec![0.0, 0.25, 0.3, 0.5, 0.75, 1.0]);
        let f = |x: &[f64]| (x[0] - 0.3).abs();
        let c = cfg().with_cells(3).with_knots(vec![vec![0.3]]);
        let r = integrate(f, &Domain::cube(1, 0.0, 1.0), &c).unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-15);
    }

    #[test]
    fn cone_area() {
        let c = 1.5;
        let t_max = 3.0;
        let r = integrate(
            |x| if x[0] < t_max { 1.0 } else { 0.0 },
            &Domain::cone(c, false).unwrap(),
            &cfg().with_knots(vec![vec![t_max]]),
        )
        .unwrap();
        assert!((r.value - c * t_max * t_max).abs() < 1e-9);
    }

    #[test]
    fn norms() {
        let relu = |x: &[f64]| x[0].max(0.0);
        let r = lp_norm(relu, &Domain::cube(2, 0.0, 1.0), 1.0, &cfg()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        let d = Domain::new_box(vec![(-2.0, 2.0), (0.0, 2.0)]).unwrap();
        let r = lp_norm(relu, &d, 1.0, &cfg()).unwrap();
        assert!((r.value - 4.0).abs() < 1e-3);
        let z = lp_norm(|_| 0.0, &Domain::real_line(2), 2.0, &cfg()).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(lp_norm(relu, &d, 0.5, &cfg()).is_err());
        let same = lp_distance(relu, relu, &d, 2.0, &cfg()).unwrap();
        assert_eq!(same.value, 0.0);
    }

    #[test]
    fn l2_root_error_propagation() {
        let r = root(
            QuadratureResult {
                value: 4.0,
                abs_error_estimate: 0.4,
                truncation_radius: 0.0,
                cells_evaluated: 1,
                converged: true,
            },
            2.0,
        );
        assert_eq!(r.value, 2.0);
        assert!((r.abs_error_estimate - 0.1).abs() < 1e-15);
    }

    #[test]
    fn node_set_matches_integrate() {
        let c = cfg().with_cells(5).with_order(4).with_knots(vec![vec![0.1], vec![]]);
        let axes = [(-1.0, 2.0), (0.0, 1.0)];
        let ns = box_nodes(&axes, &c).unwrap();
        assert_eq!(ns.len(), 6 * 5 * 16);
        let f = |x: &[f64]| (x[0] * x[1]).sin() + x[0].abs();
        let a = ns.apply(f);
        let b = integrate(f, &Domain::new_box(axes.to_vec()).unwrap(), &c).unwrap().value;
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn parallel_flag_does_not_change_bits() {
        let f = |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1])).exp() * (1.0 + x[0]).cos();
        let d = Domain::real_line(2);
        let a = integrate(f, &d, &cfg().with_cells(16)).unwrap();
        let b = integrate(f, &d, &cfg().with_cells(16).with_parallel(false)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a, b);
    }
}
