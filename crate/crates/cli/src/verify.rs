use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use uatlab::activation::difference_integral;
use uatlab::construct::{bump_1d, bump_nd};
use uatlab::quadrature::lp_norm;
use uatlab::{Activation, AsymptoticAffine, CustomActivation, DifferenceUnit, Domain, Neuron, QuadratureConfig, ShallowNet};

use crate::config::VerifyConfig;
use crate::output::fmt_f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    /// integrals of first differences
    Difference,
    /// limits of unit-step differences and the binomial form
    Limits,
    /// G and F bump identities
    Bump,
    /// norm law for ridge lifts
    Lifting,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub group: Group,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
}

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn push(&mut self, group: Group, name: String, got: uatlab::Result<f64>, expected: f64, tolerance: f64) {
        let (measured, passed) = match got {
            Ok(v) => (v, (v - expected).abs() <= tolerance),
            Err(e) => {
                eprintln!("{name}: {e}");
                (f64::NAN, false)
            }
        };
        self.checks.push(Check { group, name, passed, measured, expected, tolerance });
    }
}

/// Logistic scaled by 0.9 while still claiming the logistic limits.
fn broken_logistic() -> Activation {
    Activation::Custom(CustomActivation::new(
        "broken_logistic",
        |x| 0.9 * Activation::Logistic.eval(x),
        Some(AsymptoticAffine::new(0.0, 1.0, 0.0, 0.0)),
    ))
}

fn difference(s: &mut Suite, logistic: &Activation) {
    let cfg = QuadratureConfig::default();
    let mut cases: Vec<(Activation, f64)> = [0.5, 1.0, 2.0, 2.5].iter().map(|&r| (logistic.clone(), r)).collect();
    cases.extend([Activation::Relu, Activation::ELU, Activation::Softplus].map(|a| (a, 1.5)));
    for (act, rho) in cases {
        let got = DifferenceUnit::new(act.clone(), 1, rho).and_then(|u| difference_integral(&u, &cfg)).map(|r| r.value);
        s.push(Group::Difference, format!("difference_integral[{},rho={rho}]", act.name()), got, rho, 1e-6);
    }
}

fn limits(s: &mut Suite, logistic: &Activation) {
    let table = [
        (logistic.clone(), 0.0, 0.0),
        (Activation::Relu, 1.0, 0.0),
        (Activation::ELU, 1.0, 0.0),
        (Activation::Softplus, 1.0, 0.0),
        (Activation::leaky_relu(0.1).unwrap(), 1.0, 0.1),
    ];
    for (act, hi, lo) in table {
        for (x, want) in [(50.0, hi), (-50.0, lo)] {
            let got = DifferenceUnit::new(act.clone(), 1, 1.0).map(|u| u.eval(x));
            s.push(Group::Limits, format!("unit_difference_limit[{},x={x}]", act.name()), got, want, 1e-6);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for act in Activation::builtins(0.1) {
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let u = DifferenceUnit::new(act.clone(), rng.gen_range(1..=4), rng.gen_range(-2.0..2.0)).unwrap();
            let x = rng.gen_range(-20.0..20.0);
            worst = worst.max((u.eval(x) - u.eval_binomial(x)).abs());
        }
        s.push(Group::Limits, format!("binomial_form[{}]", act.name()), Ok(worst), 0.0, 1e-12);
    }
}

fn bump(s: &mut Suite, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outside = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { rng.gen_range(-100.0..0.0) } else { rng.gen_range(2.0..100.0) };
    let g = bump_1d();
    s.push(Group::Bump, "G(1)".into(), g.eval(&[1.0]), 1.0, 0.0);
    s.push(Group::Bump, "G(0.5)".into(), g.eval(&[0.5]), 0.5, 0.0);
    let worst = (0..10_000).map(|_| g.eval(&[outside(&mut rng)]).map(f64::abs)).try_fold(0.0f64, |m, v| v.map(|v| m.max(v)));
    s.push(Group::Bump, "G_off_support".into(), worst, 0.0, 0.0);
    for n in 1..=3 {
        let f = match bump_nd(n) {
            Ok(f) => f,
            Err(e) => {
                s.push(Group::Bump, format!("F{n}"), Err(e), 0.0, 0.0);
                continue;
            }
        };
        s.push(Group::Bump, format!("F{n}_depth"), Ok(f.depth() as f64), 3.0, 0.0);
        s.push(Group::Bump, format!("F{n}(1,...,1)"), f.eval(&vec![1.0; n]), 1.0, 0.0);
        let worst = (0..10_000)
            .map(|_| {
                let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..3.0)).collect();
                let j = rng.gen_range(0..n);
                x[j] = outside(&mut rng);
                f.eval(&x).map(f64::abs)
            })
            .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)));
        s.push(Group::Bump, format!("F{n}_off_support"), worst, 0.0, 0.0);
    }
}

/// Random sum of tents as a 1-D ReLU net, with creases and sign changes.
fn random_tents(rng: &mut ChaCha8Rng) -> (ShallowNet, Vec<f64>) {
    let mut neurons = Vec::new();
    let mut knots = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let (m, w, h): (f64, f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(0.3..1.5), rng.gen_range(-2.0..2.0));
        for (k, c) in [(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)] {
            neurons.push(Neuron::new(h * c, vec![1.0 / w], -(m + k * w) / w));
            knots.push(m + k * w);
        }
    }
    let net = ShallowNet::new(1, Activation::Relu, 0.0, neurons).expect("finite tents");
    knots.sort_by(f64::total_cmp);
    let mut kinks = knots.clone();
    for w in knots.windows(2) {
        let (a, b) = (net.eval_fast(&[w[0]]), net.eval_fast(&[w[1]]));
        if a * b < 0.0 {
            kinks.push(w[0] + (w[1] - w[0]) * a / (a - b));
        }
    }
    kinks.sort_by(f64::total_cmp);
    (net, kinks)
}

fn lifting(s: &mut Suite, seed: u64, trials: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let (g, kinks) = random_tents(&mut rng);
        let p = [2.0, 3.0][trial % 2];
        let n = 1 + (trial / 2) % 2;
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mut y = vec![sign * rng.gen_range(0.5..2.0)];
        y.extend((0..n).map(|_| rng.gen_range(-1.0..1.0)));
        let got = (|| {
            let line_cfg = QuadratureConfig::default().with_knots(vec![kinks.clone()]);
            let line = lp_norm(|x: &[f64]| g.eval_fast(x), &Domain::real_line(1), p, &line_cfg)?.value;
            let lifted = g.lift_ridge(&y)?;
            let reach = kinks.iter().fold(0.0f64, |m, k| m.max(k.abs())) + y[1..].iter().map(|v| v.abs()).sum::<f64>();
            let mut cells = vec![64];
            cells.extend(std::iter::repeat_n(16, n));
            let cfg = QuadratureConfig::default().with_r0(reach / y[0].abs()).with_axis_cells(cells);
            let strip = lp_norm(|x: &[f64]| lifted.eval_fast(x), &Domain::strip(n), p, &cfg)?.value;
            Ok(strip / (y[0].abs().powf(-1.0 / p) * line))
        })();
        s.push(Group::Lifting, format!("lifting_law[trial={trial},n={n},p={p}]"), got, 1.0, 1e-4);
    }
}

pub fn run(cfg: &VerifyConfig, only: &[Group], inject_fault: bool) -> Vec<Check> {
    let wanted = |g: Group| only.is_empty() || only.contains(&g);
    let logistic = if inject_fault { broken_logistic() } else { Activation::Logistic };
    let mut s = Suite { checks: Vec::new() };
    if wanted(Group::Difference) {
        difference(&mut s, &logistic);
    }
    if wanted(Group::Limits) {
        limits(&mut s, &logistic);
    }
    if wanted(Group::Bump) {
        bump(&mut s, cfg.seed);
    }
    if wanted(Group::Lifting) {
        lifting(&mut s, cfg.seed, cfg.lifting_trials);
    }
    s.checks
}

pub fn to_csv(checks: &[Check]) -> String {
    let mut out = String::from("group,check,passed,measured,expected,tolerance\n");
    for c in checks {
        let group = serde_json::to_value(c.group).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        out.push_str(&format!(
            "{group},\"{}\",{},{},{},{}\n",
            c.name,
            c.passed,
            fmt_f(c.measured),
            fmt_f(c.expected),
            fmt_f(c.tolerance)
        ));
    }
    out
}
