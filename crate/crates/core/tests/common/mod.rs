#![allow(dead_code)]

use rand::Rng;
use uatlab::{Activation, AffineMap, DeepReluNet, Neuron, ShallowNet};

/// Sum of one to three random tents written as a 1-D ReLU net, with the kinks of its
/// absolute value (creases plus sign changes).
pub fn random_tents<R: Rng>(rng: &mut R) -> (ShallowNet, Vec<f64>) {
    let mut neurons = Vec::new();
    let mut knots = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let m: f64 = rng.gen_range(-2.0..2.0);
        let w: f64 = rng.gen_range(0.3..1.5);
        let h: f64 = rng.gen_range(-2.0..2.0);
        for (k, c) in [(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)] {
            neurons.push(Neuron::new(h * c, vec![1.0 / w], -(m + k * w) / w));
            knots.push(m + k * w);
        }
    }
    let net = ShallowNet::new(1, Activation::Relu, 0.0, neurons).unwrap();
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

/// Plain `t₀ + Σ tᵢ φ(⟨yᵢ,x⟩+ϱᵢ)` with naive summation.
pub fn by_hand(net: &ShallowNet, x: &[f64]) -> f64 {
    let mut s = net.t0();
    for n in net.neurons() {
        let mut a = n.rho;
        for (y, v) in n.y.iter().zip(x) {
            a += y * v;
        }
        s += n.t * net.activation().eval(a);
    }
    s
}

pub fn random_shallow<R: Rng>(rng: &mut R, dim: usize, act: Activation, width: usize) -> ShallowNet {
    let neurons = (0..width)
        .map(|_| {
            Neuron::new(
                rng.gen_range(-2.0..2.0),
                (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                rng.gen_range(-2.0..2.0),
            )
        })
        .collect();
    ShallowNet::new(dim, act, rng.gen_range(-1.0..1.0), neurons).unwrap()
}

pub fn random_map<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> AffineMap {
    let w = (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-1.5..1.5)).collect()).collect();
    AffineMap::dense(w, (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_deep<R: Rng>(rng: &mut R, dim: usize, widths: &[usize]) -> DeepReluNet {
    let mut layers = Vec::new();
    let mut cols = dim;
    for &w in widths.iter().chain([1].iter()) {
        layers.push(random_map(rng, w, cols));
        cols = w;
    }
    DeepReluNet::new(dim, layers).unwrap()
}

pub fn apply_by_hand(m: &AffineMap, x: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| m.bias()[i] + (0..m.cols()).map(|j| m.entry(i, j) * x[j]).sum::<f64>())
        .collect()
}

pub fn deep_by_hand(net: &DeepReluNet, x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    let last = net.layers().len() - 1;
    for (k, m) in net.layers().iter().enumerate() {
        v = apply_by_hand(m, &v);
        if k < last {
            v.iter_mut().for_each(|a| *a = a.max(0.0));
        }
    }
    v[0]
}


/// `∫ |γ|^p` over ℝ for a compactly supported piecewise-linear `γ`, exactly piece by piece.
/// `kinks` must contain every crease and sign change.
pub fn pl_power_integral(g: &ShallowNet, kinks: &[f64], p: f64) -> f64 {
    let mut total = 0.0;
    for w in kinks.windows(2) {
        let (a, b) = (g.eval_fast(&[w[0]]).abs(), g.eval_fast(&[w[1]]).abs());
        let len = w[1] - w[0];
        total += if a == b {
            len * a.powf(p)
        } else {
            len * (b.powf(p + 1.0) - a.powf(p + 1.0)) / ((p + 1.0) * (b - a))
        };
    }
    total
}
