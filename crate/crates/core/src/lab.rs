//! Expressivity experiments on the plane: norm growth of ridge sums over expanding boxes,
//! the tent integral over a cone, and fit-then-probe runs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::lstsq;
use crate::network::{Neuron, ShallowNet};
use crate::quadrature::{self, box_nodes, lp_norm, Domain, QuadratureConfig, QuadratureResult};

/// Radii used when a caller gives none.
pub const DEFAULT_RADII: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub radii: Vec<f64>,
    pub norms: Vec<f64>,
    pub p: f64,
    pub domain_family: String,
}

impl GrowthProfile {
    /// `norms[k+1] / norms[k]`; infinite when `norms[k]` is zero and the next is not.
    pub fn ratios(&self) -> Vec<f64> {
        self.norms.windows(2).map(|w| w[1] / w[0]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("R,norm\n");
        for (r, n) in self.radii.iter().zip(&self.norms) {
            s.push_str(&format!("{r:.16e},{n:.16e}\n"));
        }
        s
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::invalid("radius list is empty"));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!("radii must be positive and strictly increasing, got {radii:?}")));
    }
    Ok(())
}

/// Creases of axis-aligned neurons, per axis.
fn aligned_knots(net: &ShallowNet) -> Vec<Vec<f64>> {
    let mut knots = vec![Vec::new(); net.dim()];
    for n in net.neurons() {
        let nz: Vec<usize> = (0..n.y.len()).filter(|&j| n.y[j] != 0.0).collect();
        if let [j] = nz[..] {
            knots[j].push(-n.rho / n.y[j]);
        }
    }
    knots
}

fn norms_over<B>(net: &ShallowNet, radii: &[f64], p: f64, cfg: &QuadratureConfig, boxes: B) -> Result<Vec<f64>>
where
    B: Fn(f64) -> Vec<(f64, f64)>,
{
    let mut qcfg = cfg.clone();
    qcfg.knots = aligned_knots(net);
    radii
        .iter()
        .map(|&r| {
            let d = Domain::new_box(boxes(r))?;
            Ok(lp_norm(|x: &[f64]| net.eval_fast(x), &d, p, &qcfg)?.value)
        })
        .collect()
}

/// `‖net‖_{L^p([−R,R]×[0,R])}` for each radius.
pub fn ridge_norm_growth(net: &ShallowNet, radii: &[f64], p: f64, cfg: &QuadratureConfig) -> Result<GrowthProfile> {
    if net.dim() != 2 {
        return Err(Error::invalid(format!("growth profiles need a planar net, got dim {}", net.dim())));
    }
    check_radii(radii)?;
    let norms = norms_over(net, radii, p, cfg, |r| vec![(-r, r), (0.0, r)])?;
    Ok(GrowthProfile {
        radii: radii.to_vec(),
        norms,
        p,
        domain_family: "[-R,R]x[0,R]".into(),
    })
}

/// `h(t) = ReLU(t+2) − 2ReLU(t+1) + ReLU(t)`, the tent on `[−2, 0]`.
pub fn cone_tent(t: f64) -> f64 {
    let r = |v: f64| v.max(0.0);
    r(t + 2.0) - 2.0 * r(t + 1.0) + r(t)
}

/// `∫ |h(t)|` over `{|x| < c·t}`, or over `{|x| < c·|t|}` when two-sided.
pub fn cone_example_integral(c: f64, two_sided: bool, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    let d = Domain::cone(c, two_sided)?;
    let mut qcfg = cfg.clone();
    qcfg.knots = vec![vec![-2.0, -1.0, 0.0], Vec::new()];
    quadrature::integrate(|x: &[f64]| cone_tent(x[0]).abs(), &d, &qcfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentWithInexpressivity,
    NetVanishes,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Number of random-direction neurons.
    pub k: usize,
    pub inner_r: f64,
    pub outer_radii: Vec<f64>,
    pub p: f64,
    pub seed: u64,
    /// Minimum outer-norm ratio per doubling of the radius.
    pub growth_floor: f64,
    /// A net whose inner norm is below this counts as zero.
    pub vanish_threshold: f64,
    /// A fit is good when the inner residual is below this fraction of the target norm.
    pub fit_fraction: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            k: 100,
            inner_r: 4.0,
            outer_radii: vec![8.0, 16.0, 32.0],
            p: 1.0,
            seed: 0,
            growth_floor: 1.5,
            vanish_threshold: 1e-8,
            fit_fraction: 0.5,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("probe needs K >= 1"));
        }
        if !(self.inner_r.is_finite() && self.inner_r > 0.0) {
            return Err(Error::invalid("inner_r must be positive"));
        }
        check_radii(&self.outer_radii)?;
        if self.outer_radii[0] <= self.inner_r {
            return Err(Error::invalid("outer radii must exceed inner_r"));
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::invalid("p must be finite and >= 1"));
        }
        if !(self.growth_floor.is_finite() && self.growth_floor > 0.0)
            || !(self.vanish_threshold.is_finite() && self.vanish_threshold >= 0.0)
            || !(self.fit_fraction.is_finite() && self.fit_fraction > 0.0)
        {
            return Err(Error::invalid("probe thresholds must be finite and positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub inner_residual: f64,
    pub target_inner_norm: f64,
    pub net_inner_norm: f64,
    /// Norms of the fitted net alone over `[−R,R]²`.
    pub outer_norms: GrowthProfile,
    pub verdict: Verdict,
    pub net: ShallowNet,
}

/// Neurons `φ(⟨(cos θ, sin θ), x⟩ − sᵢ)` with creases `sᵢ` spread evenly over `[−R, R]`.
///
/// Angles are jittered strata: one uniform draw inside each of `K` equal arcs, with the arcs
/// assigned to creases by a seeded shuffle.
pub fn probe_dictionary(k: usize, r: f64, seed: u64) -> Vec<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arcs: Vec<usize> = (0..k).collect();
    arcs.shuffle(&mut rng);
    arcs.into_iter()
        .enumerate()
        .map(|(i, arc)| {
            let u: f64 = rng.gen();
            let theta = std::f64::consts::TAU * (arc as f64 + u) / k as f64;
            let s = -r + 2.0 * r * (i as f64 + 0.5) / k as f64;
            (vec![theta.cos(), theta.sin()], -s)
        })
        .collect()
}

/// Verdict from the numbers alone.
pub fn classify(
    inner_residual: f64,
    target_inner_norm: f64,
    net_inner_norm: f64,
    outer: &GrowthProfile,
    cfg: &ProbeConfig,
) -> Verdict {
    if net_inner_norm < cfg.vanish_threshold {
        return Verdict::NetVanishes;
    }
    let good_fit = inner_residual < cfg.fit_fraction * target_inner_norm;
    let grows = outer.norms.windows(2).zip(outer.radii.windows(2)).all(|(n, r)| {
        let need = cfg.growth_floor.powf((r[1] / r[0]).log2());
        n[1] > n[0] && n[1] >= need * n[0]
    });
    if good_fit && grows {
        Verdict::ConsistentWithInexpressivity
    } else {
        Verdict::Inconclusive
    }
}

/// Fits a `K`-neuron shallow net (plus constant) to `target` by least squares on
/// `[−R,R]²`, then measures the fit and the net's own norms over larger squares.
pub fn fit_and_probe<F>(target: F, activation: &Activation, probe: &ProbeConfig, cfg: &QuadratureConfig) -> Result<ProbeReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    probe.validate()?;
    cfg.validate()?;
    activation.validate()?;
    let r = probe.inner_r;
    let dict = probe_dictionary(probe.k, r, probe.seed);
    let inner = vec![(-r, r), (-r, r)];
    let nodes = box_nodes(&inner, cfg)?;
    let cols = probe.k + 1;
    let (g, rhs) = lstsq::dense_normal_equations(&nodes.weights, cols, cfg.parallel, |i, out| {
        let x = nodes.point(i);
        for (o, (y, rho)) in out.iter_mut().zip(&dict) {
            *o = activation.eval(y[1].mul_add(x[1], y[0].mul_add(x[0], *rho)));
        }
        out[probe.k] = 1.0;
        target(x)
    });
    let sol = lstsq::solve_gram(g, rhs)?;
    let c = &sol.coefficients;
    let neurons = dict
        .into_iter()
        .zip(c)
        .map(|((y, rho), &t)| Neuron::new(t, y, rho))
        .collect();
    let net = ShallowNet::new(2, activation.clone(), c[probe.k], neurons)?;

    let inner_dom = Domain::new_box(inner)?;
    let inner_residual =
        quadrature::lp_distance(|x: &[f64]| net.eval_fast(x), &target, &inner_dom, probe.p, cfg)?.value;
    let target_inner_norm = lp_norm(&target, &inner_dom, probe.p, cfg)?.value;
    let net_inner_norm = lp_norm(|x: &[f64]| net.eval_fast(x), &inner_dom, probe.p, cfg)?.value;
    let norms = norms_over(&net, &probe.outer_radii, probe.p, cfg, |r| vec![(-r, r), (-r, r)])?;
    let outer_norms = GrowthProfile {
        radii: probe.outer_radii.clone(),
        norms,
        p: probe.p,
        domain_family: "[-R,R]^2".into(),
    };
    let verdict = classify(inner_residual, target_inner_norm, net_inner_norm, &outer_norms, probe);
    Ok(ProbeReport {
        inner_residual,
        target_inner_norm,
        net_inner_norm,
        outer_norms,
        verdict,
        net,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(act: Activation, y: [f64; 2], rho: f64) -> ShallowNet {
        ShallowNet::new(2, act, 0.0, vec![Neuron::new(1.0, y.to_vec(), rho)]).unwrap()
    }

    #[test]
    fn relu_unit_growth_is_cubic() {
        let net = unit(Activation::Relu, [1.0, 0.0], 0.0);
        let g = ridge_norm_growth(&net, &[1.0, 2.0, 4.0], 1.0, &QuadratureConfig::default()).unwrap();
        for (r, n) in g.radii.iter().zip(&g.norms) {
            assert!((n - r.powi(3) / 2.0).abs() < 1e-12 * r.powi(3));
        }
        assert_eq!(g.to_csv().lines().next(), Some("R,norm"));
    }

    #[test]
    fn zero_net_has_zero_norms() {
        let net = ShallowNet::constant(2, Activation::Logistic, 0.0).unwrap();
        let g = ridge_norm_growth(&net, &DEFAULT_RADII, 2.0, &QuadratureConfig::default()).unwrap();
        assert!(g.norms.iter().all(|&n| n == 0.0));
    }

    #[test]
    fn radius_checks() {
        let net = unit(Activation::Relu, [1.0, 0.0], 0.0);
        let cfg = QuadratureConfig::default();
        assert!(ridge_norm_growth(&net, &[2.0, 1.0], 1.0, &cfg).is_err());
        assert!(ridge_norm_growth(&net, &[], 1.0, &cfg).is_err());
        let three = ShallowNet::constant(3, Activation::Relu, 1.0).unwrap();
        assert!(ridge_norm_growth(&three, &[1.0], 1.0, &cfg).is_err());
    }

    #[test]
    fn cone_values() {
        let cfg = QuadratureConfig::default();
        // the tent cancels to rounding level on t >= 0
        assert!(cone_example_integral(1.0, false, &cfg).unwrap().value.abs() < 1e-12);
        for c in [1.0, 3.0] {
            let v = cone_example_integral(c, true, &cfg).unwrap().value;
            assert!((v - 2.0 * c).abs() < 1e-12, "c={c}: {v}");
        }
    }

    #[test]
    fn dictionary_is_seeded() {
        let a = probe_dictionary(10, 4.0, 7);
        assert_eq!(a, probe_dictionary(10, 4.0, 7));
        assert_ne!(a, probe_dictionary(10, 4.0, 8));
        assert_eq!(a[0].1, 4.0 - 0.4);
        assert!(a.iter().all(|(y, _)| (y[0].hypot(y[1]) - 1.0).abs() < 1e-15));
    }

    #[test]
    fn verdict_rules() {
        let cfg = ProbeConfig::default();
        let prof = |norms: Vec<f64>| GrowthProfile {
            radii: vec![8.0, 16.0, 32.0],
            norms,
            p: 1.0,
            domain_family: String::new(),
        };
        let growing = prof(vec![1.0, 2.0, 4.0]);
        assert_eq!(classify(0.1, 1.0, 1.0, &growing, &cfg), Verdict::ConsistentWithInexpressivity);
        assert_eq!(classify(0.1, 1.0, 0.0, &growing, &cfg), Verdict::NetVanishes);
        assert_eq!(classify(0.6, 1.0, 1.0, &growing, &cfg), Verdict::Inconclusive);
        assert_eq!(classify(0.1, 1.0, 1.0, &prof(vec![1.0, 1.4, 3.0]), &cfg), Verdict::Inconclusive);
        let mut wide = cfg.clone();
        wide.outer_radii = vec![8.0, 32.0];
        let two = GrowthProfile {
            radii: vec![8.0, 32.0],
            norms: vec![1.0, 2.0],
            p: 1.0,
            domain_family: String::new(),
        };
        // two doublings need 1.5² = 2.25
        assert_eq!(classify(0.1, 1.0, 1.0, &two, &wide), Verdict::Inconclusive);
    }

    #[test]
    fn zero_target_vanishes() {
        let probe = ProbeConfig {
            k: 12,
            ..ProbeConfig::default()
        };
        let cfg = QuadratureConfig::default().with_cells(16);
        let r = fit_and_probe(|_: &[f64]| 0.0, &Activation::Relu, &probe, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::NetVanishes);
    }
}
