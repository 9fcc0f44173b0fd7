//! Layer-by-layer network assembly from affine expressions.
//!
//! A [`Lin`] is an affine combination of the values of the *previous* layer (or
//! of the inputs while the first hidden layer is open). Each call to
//! [`NetBuilder::neuron`] adds a neuron to the open layer and returns a `Lin`
//! naming it, valid once the next layer is opened.

use std::collections::BTreeMap;

use crate::network::{Activation, Layer, Metadata, Network};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lin {
    pub terms: BTreeMap<usize, f64>,
    pub constant: f64,
}

impl Lin {
    pub fn var(i: usize) -> Lin {
        Lin::term(i, 1.0)
    }

    pub fn term(i: usize, w: f64) -> Lin {
        let mut terms = BTreeMap::new();
        terms.insert(i, w);
        Lin { terms, constant: 0.0 }
    }

    pub fn constant(c: f64) -> Lin {
        Lin { terms: BTreeMap::new(), constant: c }
    }

    pub fn scaled(&self, w: f64) -> Lin {
        Lin { terms: self.terms.iter().map(|(&k, &v)| (k, v * w)).collect(), constant: self.constant * w }
    }

    pub fn plus(&self, other: &Lin) -> Lin {
        self.plus_scaled(other, 1.0)
    }

    pub fn minus(&self, other: &Lin) -> Lin {
        self.plus_scaled(other, -1.0)
    }

    pub fn plus_scaled(&self, other: &Lin, w: f64) -> Lin {
        let mut out = self.clone();
        for (&k, &v) in &other.terms {
            *out.terms.entry(k).or_insert(0.0) += v * w;
        }
        out.constant += other.constant * w;
        out
    }

    pub fn shifted(&self, c: f64) -> Lin {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    pub fn neg(&self) -> Lin {
        self.scaled(-1.0)
    }

    fn row(&self, dim: usize) -> Vec<f64> {
        let mut r = vec![0.0; dim];
        for (&k, &v) in &self.terms {
            r[k] += v;
        }
        r
    }
}

pub struct NetBuilder {
    input_dim: usize,
    layers: Vec<Layer>,
    open: Vec<(Lin, Activation)>,
    prev_dim: usize,
}

impl NetBuilder {
    pub fn new(input_dim: usize) -> NetBuilder {
        NetBuilder { input_dim, layers: Vec::new(), open: Vec::new(), prev_dim: input_dim }
    }

    /// Input variable `i` (valid while the first layer is open).
    pub fn input(&self, i: usize) -> Lin {
        Lin::var(i)
    }

    pub fn neuron(&mut self, lin: Lin, act: Activation) -> Lin {
        debug_assert!(lin.terms.keys().all(|&k| k < self.prev_dim));
        self.open.push((lin, act));
        Lin::var(self.open.len() - 1)
    }

    pub fn relu(&mut self, lin: Lin) -> Lin {
        self.neuron(lin, Activation::ReLU)
    }

    /// Carry a value of unknown sign: `σ(u) − σ(−u)`.
    pub fn carry(&mut self, u: &Lin) -> Lin {
        let p = self.relu(u.clone());
        let n = self.relu(u.neg());
        p.minus(&n)
    }

    /// Carry a value known to be `≥ −shift` on the domain through one ReLU.
    pub fn carry_shifted(&mut self, u: &Lin, shift: f64) -> Lin {
        self.relu(u.shifted(shift)).shifted(-shift)
    }

    /// Exact product with four ReLU² neurons: `((u+v)² − (u−v)²)/4`.
    pub fn mul_sq(&mut self, u: &Lin, v: &Lin) -> Lin {
        let s = u.plus(v);
        let d = u.minus(v);
        let a = self.neuron(s.clone(), Activation::ReLUSquared);
        let b = self.neuron(s.neg(), Activation::ReLUSquared);
        let c = self.neuron(d.clone(), Activation::ReLUSquared);
        let e = self.neuron(d.neg(), Activation::ReLUSquared);
        a.plus(&b).minus(&c).minus(&e).scaled(0.25)
    }

    /// Close the open layer; returned `Lin`s from it become valid.
    pub fn end_layer(&mut self) {
        assert!(!self.open.is_empty(), "empty hidden layer");
        let open = std::mem::take(&mut self.open);
        let n = open.len();
        let mut weights = Vec::with_capacity(n);
        let mut bias = Vec::with_capacity(n);
        let mut activations = Vec::with_capacity(n);
        for (lin, act) in open {
            weights.push(lin.row(self.prev_dim));
            bias.push(lin.constant);
            activations.push(act);
        }
        self.layers.push(Layer { weights, bias, activations });
        self.prev_dim = n;
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn finish(mut self, outputs: &[Lin], label: &str) -> Network {
        assert!(self.open.is_empty(), "unterminated layer");
        let weights = outputs.iter().map(|l| l.row(self.prev_dim)).collect();
        let bias = outputs.iter().map(|l| l.constant).collect();
        self.layers.push(Layer::affine(weights, bias));
        let net = Network { input_dim: self.input_dim, layers: self.layers, metadata: Metadata { label: label.into(), ..Default::default() } };
        debug_assert!(net.validate().is_ok());
        net
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carry_and_product() {
        let mut b = NetBuilder::new(2);
        let x = b.input(0);
        let y = b.input(1);
        let p = b.mul_sq(&x, &y);
        let cx = b.carry(&x);
        b.end_layer();
        let net = b.finish(&[p, cx], "t");
        assert_eq!(net.evaluate(&[3.0, -0.5]).unwrap(), vec![-1.5, 3.0]);
        assert_eq!(net.width(), 6);
    }
}
