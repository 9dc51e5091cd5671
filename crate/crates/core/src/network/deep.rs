use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactSum;

/// `x ↦ W x + b` with `W` stored row-compressed. Entries given at construction are kept
/// even when zero, so dense layers stay dense through serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
}

impl AffineMap {
    /// Dense matrix given row by row.
    pub fn dense(w: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let rows = w.len();
        let cols = w.first().map_or(0, Vec::len);
        if w.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged weight matrix"));
        }
        let entries = w
            .into_iter()
            .enumerate()
            .flat_map(|(i, r)| r.into_iter().enumerate().map(move |(j, v)| (i, j, v)))
            .collect();
        Self::sparse(rows, cols, entries, b)
    }

    /// Matrix given as `(row, col, value)` triples; missing entries are zero.
    pub fn sparse(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>, b: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("layer shape must be nonempty, got {rows}x{cols}")));
        }
        if b.len() != rows {
            return Err(Error::invalid(format!("bias length {} != rows {rows}", b.len())));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite bias"));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        for (k, &(i, j, v)) in entries.iter().enumerate() {
            if i >= rows || j >= cols {
                return Err(Error::invalid(format!("entry ({i},{j}) outside {rows}x{cols}")));
            }
            if k > 0 && entries[k - 1].0 == i && entries[k - 1].1 == j {
                return Err(Error::invalid(format!("duplicate entry ({i},{j})")));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite weight at ({i},{j})")));
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            vals.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            vals,
            b,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::sparse(n, n, (0..n).map(|i| (i, i, 1.0)).collect(), vec![0.0; n])
            .expect("identity is well formed")
    }

    /// `x ↦ x + c`.
    pub fn translation(c: Vec<f64>) -> Result<Self> {
        let n = c.len();
        Self::sparse(n, n, (0..n).map(|i| (i, i, 1.0)).collect(), c)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_dense(&self) -> bool {
        self.nnz() == self.rows * self.cols
    }

    /// Stored `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// `W x + b`, each row correctly rounded. Zero inputs are skipped.
    pub fn apply(&self, x: &[f64], out: &mut Vec<f64>, acc: &mut ExactSum) {
        out.clear();
        for i in 0..self.rows {
            acc.clear();
            acc.add(self.b[i]);
            for (j, w) in self.row(i) {
                let xj = x[j];
                if xj != 0.0 {
                    acc.add_product(w, xj);
                }
            }
            out.push(acc.value());
        }
    }

    fn scaled(&self, t: f64) -> Self {
        Self {
            vals: self.vals.iter().map(|v| v * t).collect(),
            b: self.b.iter().map(|v| v * t).collect(),
            ..self.clone()
        }
    }

    /// `[self; −self]`.
    fn split_signs(&self) -> Self {
        let mut entries: Vec<_> = self.entries().collect();
        entries.extend(self.entries().map(|(i, j, v)| (i + self.rows, j, -v)));
        let mut b = self.b.clone();
        b.extend(self.b.iter().map(|v| -v));
        Self::sparse(2 * self.rows, self.cols, entries, b).expect("shape preserved")
    }
}

/// Affine layers with ReLU after every layer but the last. Depth is the number of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepReluNet {
    dim_in: usize,
    layers: Vec<AffineMap>,
}

impl DeepReluNet {
    pub fn new(dim_in: usize, layers: Vec<AffineMap>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a deep net needs at least one layer"));
        }
        let mut width = dim_in;
        for (k, l) in layers.iter().enumerate() {
            if l.cols != width {
                return Err(Error::invalid(format!(
                    "layer {k} expects {} inputs, previous width is {width}",
                    l.cols
                )));
            }
            width = l.rows;
        }
        Ok(Self { dim_in, layers })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.layers.last().map_or(0, AffineMap::rows)
    }

    /// Hidden layers plus one.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[AffineMap] {
        &self.layers
    }

    /// Full output vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim_in {
            return Err(Error::invalid(format!(
                "point has length {}, net expects {}",
                x.len(),
                self.dim_in
            )));
        }
        let mut acc = ExactSum::new();
        let mut h = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            l.apply(&h, &mut z, &mut acc);
            if k < last {
                for v in z.iter_mut() {
                    *v = if *v > 0.0 { *v } else { 0.0 };
                }
            }
            std::mem::swap(&mut h, &mut z);
        }
        Ok(h)
    }

    /// Scalar output; errors when the net has more than one output.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if self.dim_out() != 1 {
            return Err(Error::invalid(format!(
                "eval needs a scalar net, this one has {} outputs",
                self.dim_out()
            )));
        }
        Ok(self.forward(x)?[0])
    }

    /// `t·self`.
    pub fn scale_output(&self, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::invalid("output scale must be finite"));
        }
        let mut layers = self.layers.clone();
        let last = layers.len() - 1;
        layers[last] = layers[last].scaled(t);
        Ok(Self {
            dim_in: self.dim_in,
            layers,
        })
    }

    /// One extra layer through `z = ReLU(z) − ReLU(−z)` on the output; doubles the last width.
    pub fn pad_depth(&self) -> Self {
        let mut layers = self.layers.clone();
        let last = layers.pop().expect("nonempty");
        let m = last.rows;
        layers.push(last.split_signs());
        let mut entries: Vec<_> = (0..m).map(|i| (i, i, 1.0)).collect();
        entries.extend((0..m).map(|i| (i, i + m, -1.0)));
        layers.push(AffineMap::sparse(m, 2 * m, entries, vec![0.0; m]).expect("shape preserved"));
        Self {
            dim_in: self.dim_in,
            layers,
        }
    }

    pub fn padded_to(&self, depth: usize) -> Self {
        let mut n = self.clone();
        while n.depth() < depth {
            n = n.pad_depth();
        }
        n
    }

    /// A net evaluating to `Σ nets`. Shallower summands are padded with the identity gadget;
    /// first layers are stacked, middle layers placed block-diagonally, output layers
    /// concatenated with their biases added.
    pub fn sum_all(nets: &[DeepReluNet]) -> Result<Self> {
        let first = nets.first().ok_or_else(|| Error::invalid("sum of no nets"))?;
        let (dim_in, dim_out) = (first.dim_in, first.dim_out());
        if let Some(bad) = nets.iter().find(|n| n.dim_in != dim_in || n.dim_out() != dim_out) {
            return Err(Error::invalid(format!(
                "cannot add nets {}->{} and {}->{}",
                dim_in,
                dim_out,
                bad.dim_in,
                bad.dim_out()
            )));
        }
        let depth = nets.iter().map(DeepReluNet::depth).max().unwrap_or(1);
        let padded: Vec<DeepReluNet> = nets.iter().map(|n| n.padded_to(depth)).collect();

        let mut bias_out = vec![ExactSum::new(); dim_out];
        for n in &padded {
            for (acc, b) in bias_out.iter_mut().zip(&n.layers[depth - 1].b) {
                acc.add(*b);
            }
        }
        let bias_out: Vec<f64> = bias_out.iter().map(ExactSum::value).collect();

        if depth == 1 {
            let mut sums: std::collections::BTreeMap<(usize, usize), ExactSum> = Default::default();
            for n in &padded {
                for (i, j, v) in n.layers[0].entries() {
                    sums.entry((i, j)).or_default().add(v);
                }
            }
            let entries = sums.into_iter().map(|((i, j), s)| (i, j, s.value())).collect();
            let l = AffineMap::sparse(dim_out, dim_in, entries, bias_out)?;
            return DeepReluNet::new(dim_in, vec![l]);
        }

        let mut layers = Vec::with_capacity(depth);
        for k in 0..depth {
            let mut entries = Vec::new();
            let mut b = Vec::new();
            let (mut row_off, mut col_off) = (0, 0);
            for n in &padded {
                let l = &n.layers[k];
                let last = k == depth - 1;
                let ro = if last { 0 } else { row_off };
                let co = if k == 0 { 0 } else { col_off };
                entries.extend(l.entries().map(|(i, j, v)| (i + ro, j + co, v)));
                if !last {
                    b.extend_from_slice(&l.b);
                }
                row_off += l.rows;
                col_off += l.cols;
            }
            let rows = if k == depth - 1 { dim_out } else { row_off };
            let cols = if k == 0 { dim_in } else { col_off };
            if k == depth - 1 {
                b = bias_out.clone();
            }
            layers.push(AffineMap::sparse(rows, cols, entries, b)?);
        }
        DeepReluNet::new(dim_in, layers)
    }

    /// `x ↦ self(Λx)`, folding `Λ` into the first layer.
    pub fn precompose(&self, lambda: &AffineMap) -> Result<Self> {
        if lambda.rows != self.dim_in {
            return Err(Error::invalid(format!(
                "affine map lands in dimension {}, net expects {}",
                lambda.rows, self.dim_in
            )));
        }
        let w1 = &self.layers[0];
        let mut entries = Vec::new();
        let mut b = Vec::with_capacity(w1.rows);
        let mut row_acc: std::collections::BTreeMap<usize, ExactSum> = Default::default();
        for i in 0..w1.rows {
            row_acc.clear();
            let mut bias = ExactSum::new();
            bias.add(w1.b[i]);
            for (k, w) in w1.row(i) {
                bias.add_product(w, lambda.b[k]);
                for (j, a) in lambda.row(k) {
                    row_acc.entry(j).or_default().add_product(w, a);
                }
            }
            entries.extend(row_acc.iter().map(|(&j, s)| (i, j, s.value())));
            b.push(bias.value());
        }
        let mut layers = self.layers.clone();
        layers[0] = AffineMap::sparse(w1.rows, lambda.cols, entries, b)?;
        DeepReluNet::new(lambda.cols, layers)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Dense(Vec<Vec<f64>>),
    Sparse(SparseRepr),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SparseRepr {
    shape: (usize, usize),
    entries: Vec<(usize, usize, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRepr {
    w: MatrixRepr,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetRepr {
    layers: Vec<LayerRepr>,
}

impl Serialize for DeepReluNet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let w = if l.is_dense() {
                    MatrixRepr::Dense((0..l.rows).map(|i| l.row(i).map(|(_, v)| v).collect()).collect())
                } else {
                    MatrixRepr::Sparse(SparseRepr {
                        shape: (l.rows, l.cols),
                        entries: l.entries().collect(),
                    })
                };
                LayerRepr { w, b: l.b.clone() }
            })
            .collect();
        NetRepr { layers }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DeepReluNet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = NetRepr::deserialize(d)?;
        let layers = repr
            .layers
            .into_iter()
            .map(|l| match l.w {
                MatrixRepr::Dense(w) => AffineMap::dense(w, l.b),
                MatrixRepr::Sparse(sp) => AffineMap::sparse(sp.shape.0, sp.shape.1, sp.entries, l.b),
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let dim_in = layers.first().map_or(0, AffineMap::cols);
        DeepReluNet::new(dim_in, layers).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent() -> DeepReluNet {
        DeepReluNet::new(
            1,
            vec![
                AffineMap::dense(vec![vec![1.0]; 3], vec![0.0, -1.0, -2.0]).unwrap(),
                AffineMap::dense(vec![vec![1.0, -2.0, 1.0]], vec![0.0]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_layer() {
        let id = DeepReluNet::new(1, vec![AffineMap::identity(1)]).unwrap();
        assert_eq!(id.eval(&[-3.5]).unwrap(), -3.5);
        assert_eq!(id.depth(), 1);
    }

    #[test]
    fn shape_checks() {
        assert!(AffineMap::dense(vec![vec![1.0], vec![1.0, 2.0]], vec![0.0, 0.0]).is_err());
        assert!(AffineMap::sparse(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0)], vec![0.0; 2]).is_err());
        assert!(AffineMap::sparse(2, 2, vec![(2, 0, 1.0)], vec![0.0; 2]).is_err());
        let l = AffineMap::identity(2);
        assert!(DeepReluNet::new(3, vec![l]).is_err());
        assert!(tent().eval(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn tent_values() {
        let g = tent();
        assert_eq!(g.eval(&[1.0]).unwrap(), 1.0);
        assert_eq!(g.eval(&[0.5]).unwrap(), 0.5);
        assert_eq!(g.eval(&[2.7]).unwrap(), 0.0);
        assert_eq!(g.eval(&[-0.3]).unwrap(), 0.0);
    }

    #[test]
    fn padding_keeps_values() {
        let g = tent();
        for d in 2..6 {
            let p = g.padded_to(d);
            assert_eq!(p.depth(), d);
            for x in [-1.0, 0.25, 1.0, 1.7, 3.0] {
                assert_eq!(p.eval(&[x]).unwrap(), g.eval(&[x]).unwrap());
            }
        }
        let affine = DeepReluNet::new(1, vec![AffineMap::dense(vec![vec![-2.0]], vec![1.0]).unwrap()]).unwrap();
        assert_eq!(affine.pad_depth().eval(&[3.0]).unwrap(), -5.0);
    }

    #[test]
    fn sums() {
        let g = tent();
        let s = DeepReluNet::sum_all(&[g.clone(), g.scale_output(-1.0).unwrap()]).unwrap();
        for x in [0.3, 1.0, 1.9] {
            assert_eq!(s.eval(&[x]).unwrap(), 0.0);
        }
        let affine = DeepReluNet::new(1, vec![AffineMap::dense(vec![vec![2.0]], vec![1.0]).unwrap()]).unwrap();
        let mixed = DeepReluNet::sum_all(&[affine.clone(), g.clone()]).unwrap();
        assert_eq!(mixed.depth(), 2);
        assert_eq!(mixed.eval(&[1.0]).unwrap(), 4.0);
        let two = DeepReluNet::sum_all(&[affine.clone(), affine]).unwrap();
        assert_eq!(two.depth(), 1);
        assert_eq!(two.eval(&[1.5]).unwrap(), 8.0);
        let other = DeepReluNet::new(2, vec![AffineMap::identity(2)]).unwrap();
        assert!(DeepReluNet::sum_all(&[g, other]).is_err());
    }

    #[test]
    fn precomposition() {
        let g = tent();
        let shifted = g.precompose(&AffineMap::translation(vec![-5.0]).unwrap()).unwrap();
        assert_eq!(shifted.eval(&[6.0]).unwrap(), 1.0);
        let same = g.precompose(&AffineMap::identity(1)).unwrap();
        assert_eq!(same.eval(&[0.7]).unwrap(), g.eval(&[0.7]).unwrap());
        let proj = AffineMap::sparse(1, 2, vec![(0, 1, 1.0)], vec![0.0]).unwrap();
        let g2 = g.precompose(&proj).unwrap();
        assert_eq!(g2.dim_in(), 2);
        assert_eq!(g2.eval(&[100.0, 1.0]).unwrap(), 1.0);
        assert!(g.precompose(&AffineMap::identity(2)).is_err());
    }

    #[test]
    fn json_forms_round_trip() {
        let g = tent();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.starts_with(r#"{"layers":[{"w":[[1.0],[1.0],[1.0]]"#));
        let back: DeepReluNet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let proj = AffineMap::sparse(1, 2, vec![(0, 1, -0.0)], vec![0.1]).unwrap();
        let sp = g.precompose(&proj).unwrap();
        let s = serde_json::to_string(&sp).unwrap();
        assert!(s.contains(r#""shape":[3,2]"#));
        let back: DeepReluNet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, sp);
        assert!(serde_json::from_str::<DeepReluNet>(r#"{"layers":[]}"#).is_err());
        assert!(serde_json::from_str::<DeepReluNet>(
            r#"{"layers":[{"w":[[1.0]],"b":[0.0]},{"w":[[1.0,1.0]],"b":[0.0]}]}"#
        )
        .is_err());
    }
}
