//! Fast many-point evaluation and forward-mode derivatives.
//!
//! [`SparseNet`] is a compressed-row cache of a [`Network`] used by the metric
//! loops; storage of record stays dense. Derivatives are propagated as truncated
//! multivariate Taylor polynomials ("jets") of total degree ≤ n.

use crate::multi_index::MultiIndex;
use crate::network::{Activation, Network};
use crate::scalar::Scalar;

/// Layout of truncated Taylor coefficients in `d` variables up to total order `n`.
#[derive(Clone, Debug)]
pub struct JetSpace {
    pub d: usize,
    pub order: u32,
    pub indices: Vec<MultiIndex>,
    /// `(a, b, c)` with `indices[a] + indices[b] = indices[c]`.
    products: Vec<(usize, usize, usize)>,
    factorials: Vec<f64>,
}

impl JetSpace {
    pub fn new(d: usize, order: u32) -> JetSpace {
        let indices = MultiIndex::all_up_to(d, order);
        let mut products = Vec::new();
        for (a, ia) in indices.iter().enumerate() {
            for (b, ib) in indices.iter().enumerate() {
                if ia.order() + ib.order() <= order {
                    let sum = ia.add(ib);
                    let c = indices.iter().position(|m| *m == sum).expect("closed under addition");
                    products.push((a, b, c));
                }
            }
        }
        let factorials = indices.iter().map(MultiIndex::factorial_f64).collect();
        JetSpace { d, order, indices, products, factorials }
    }

    /// Number of coefficients per jet.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.indices.iter().position(|m| m == alpha)
    }

    /// Seed jets for the identity map at `x`: `x_i + dx_i`.
    pub fn seed<S: Scalar>(&self, x: &[f64]) -> Vec<S> {
        let xs: Vec<S> = x.iter().map(|&v| S::from_f64(v)).collect();
        self.seed_at(&xs)
    }

    /// Seed jets at a point given in the evaluation scalar type.
    pub fn seed_at<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let m = self.len();
        let mut out = vec![S::zero(); x.len() * m];
        for (i, &xi) in x.iter().enumerate() {
            out[i * m] = xi;
            if self.order >= 1 {
                out[i * m + 1 + i] = S::one();
            }
        }
        out
    }

    /// Convert a jet's Taylor coefficients into derivatives `D^α`.
    pub fn derivatives<S: Scalar>(&self, jet: &[S]) -> Vec<S> {
        jet.iter().zip(&self.factorials).map(|(c, f)| c.scale(*f)).collect()
    }

    fn square_into<S: Scalar>(&self, u: &[S], out: &mut [S]) {
        for o in out.iter_mut() {
            *o = S::zero();
        }
        for &(a, b, c) in &self.products {
            out[c] += u[a] * u[b];
        }
    }
}

#[derive(Clone, Debug)]
struct SparseLayer {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    bias: Vec<f64>,
    acts: Vec<Activation>,
}

/// Compressed-row evaluation cache for a network.
#[derive(Clone, Debug)]
pub struct SparseNet {
    pub input_dim: usize,
    pub output_dim: usize,
    layers: Vec<SparseLayer>,
    max_dim: usize,
}

impl SparseNet {
    pub fn from_network(net: &Network) -> SparseNet {
        let mut max_dim = net.input_dim;
        let layers = net
            .layers
            .iter()
            .map(|l| {
                max_dim = max_dim.max(l.out_dim());
                let mut row_ptr = vec![0];
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                for row in &l.weights {
                    for (c, &w) in row.iter().enumerate() {
                        if w != 0.0 {
                            cols.push(c);
                            vals.push(w);
                        }
                    }
                    row_ptr.push(cols.len());
                }
                SparseLayer { row_ptr, cols, vals, bias: l.bias.clone(), acts: l.activations.clone() }
            })
            .collect();
        SparseNet { input_dim: net.input_dim, output_dim: net.output_dim(), layers, max_dim }
    }

    /// Number of stored nonzero weights.
    pub fn nnz(&self) -> usize {
        self.layers.iter().map(|l| l.vals.len()).sum()
    }

    pub fn evaluate<S: Scalar>(&self, x: &[f64]) -> Vec<S> {
        let mut a: Vec<S> = Vec::with_capacity(self.max_dim);
        let mut b: Vec<S> = Vec::with_capacity(self.max_dim);
        a.extend(x.iter().map(|&v| S::from_f64(v)));
        for l in &self.layers {
            b.clear();
            for r in 0..l.bias.len() {
                let mut acc = S::zero();
                for k in l.row_ptr[r]..l.row_ptr[r + 1] {
                    acc += a[l.cols[k]].scale(l.vals[k]);
                }
                b.push(l.acts[r].apply(acc + S::from_f64(l.bias[r])));
            }
            std::mem::swap(&mut a, &mut b);
        }
        a
    }

    /// Output jets (flat, `output_dim × space.len()`) at `x`.
    pub fn jets<S: Scalar>(&self, x: &[f64], space: &JetSpace) -> Vec<S> {
        self.jets_from(space.seed(x), space)
    }

    /// Propagate arbitrary input jets (flat, `input_dim × space.len()`).
    pub fn jets_from<S: Scalar>(&self, input: Vec<S>, space: &JetSpace) -> Vec<S> {
        let m = space.len();
        debug_assert_eq!(input.len(), self.input_dim * m);
        let mut a = input;
        let mut b: Vec<S> = Vec::with_capacity(self.max_dim * m);
        let mut tmp = vec![S::zero(); m];
        for l in &self.layers {
            let n = l.bias.len();
            b.clear();
            b.resize(n * m, S::zero());
            for r in 0..n {
                let out = &mut b[r * m..(r + 1) * m];
                for k in l.row_ptr[r]..l.row_ptr[r + 1] {
                    let w = l.vals[k];
                    let src = &a[l.cols[k] * m..(l.cols[k] + 1) * m];
                    for (o, s) in out.iter_mut().zip(src) {
                        *o += s.scale(w);
                    }
                }
                out[0] += S::from_f64(l.bias[r]);
                match l.acts[r] {
                    Activation::Identity => {}
                    Activation::ReLU => {
                        if !out[0].is_positive() {
                            out.iter_mut().for_each(|o| *o = S::zero());
                        }
                    }
                    Activation::ReLUSquared => {
                        if out[0].is_positive() {
                            space.square_into(out, &mut tmp);
                            out.copy_from_slice(&tmp);
                        } else {
                            out.iter_mut().for_each(|o| *o = S::zero());
                        }
                    }
                }
            }
            std::mem::swap(&mut a, &mut b);
        }
        a
    }

    /// `D^α φ_o(x)` for every α in `space` and every output `o` (flat, output-major).
    pub fn derivatives<S: Scalar>(&self, x: &[f64], space: &JetSpace) -> Vec<S> {
        let xs: Vec<S> = x.iter().map(|&v| S::from_f64(v)).collect();
        self.derivatives_at(&xs, space)
    }

    /// As [`SparseNet::derivatives`] at a point given in the scalar type.
    pub fn derivatives_at<S: Scalar>(&self, x: &[S], space: &JetSpace) -> Vec<S> {
        let jets = self.jets_from::<S>(space.seed_at(x), space);
        let m = space.len();
        let mut out = Vec::with_capacity(jets.len());
        for o in 0..self.output_dim {
            out.extend(space.derivatives(&jets[o * m..(o + 1) * m]));
        }
        out
    }

    /// First-layer preactivation breakpoints: `(w, b)` per neuron.
    pub fn first_layer_rows(&self) -> Vec<(Vec<(usize, f64)>, f64)> {
        let Some(l) = self.layers.first() else { return Vec::new() };
        if self.layers.len() == 1 {
            return Vec::new();
        }
        (0..l.bias.len())
            .map(|r| {
                let terms = (l.row_ptr[r]..l.row_ptr[r + 1]).map(|k| (l.cols[k], l.vals[k])).collect();
                (terms, l.bias[r])
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Layer, Network};
    use crate::scalar::Dd;

    fn square_net() -> Network {
        Network::new(
            1,
            vec![
                Layer { weights: vec![vec![1.0], vec![-1.0]], bias: vec![0.0, 0.0], activations: vec![Activation::ReLUSquared; 2] },
                Layer::affine(vec![vec![1.0, 1.0]], vec![0.0]),
            ],
            "sq",
        )
        .unwrap()
    }

    #[test]
    fn jets_of_square_give_all_derivatives() {
        let net = SparseNet::from_network(&square_net());
        let sp = JetSpace::new(1, 3);
        let d = net.derivatives::<f64>(&[0.5], &sp);
        assert_eq!(d, vec![0.25, 1.0, 2.0, 0.0]);
        let d = net.derivatives::<f64>(&[-2.0], &sp);
        assert_eq!(d, vec![4.0, -4.0, 2.0, 0.0]);
    }

    #[test]
    fn stacked_square_gives_fourth_power_jets() {
        let sq = square_net();
        let q = Network::stack(&sq, &sq).unwrap();
        let net = SparseNet::from_network(&q);
        let sp = JetSpace::new(1, 3);
        let d = net.derivatives::<f64>(&[0.3], &sp);
        let x: f64 = 0.3;
        let expect = [x.powi(4), 4.0 * x.powi(3), 12.0 * x * x, 24.0 * x];
        for (a, b) in d.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn sparse_matches_dense_in_both_scalars() {
        let sq = square_net();
        let net = SparseNet::from_network(&sq);
        for x in [-1.3, 0.0, 0.7] {
            assert_eq!(net.evaluate::<f64>(&[x]), sq.evaluate(&[x]).unwrap());
            let dd: Vec<Dd> = net.evaluate(&[x]);
            assert_eq!(dd[0].to_f64(), x * x);
        }
    }
}
