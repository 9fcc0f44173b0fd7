//! Layered feed-forward networks with per-neuron activations.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::eval::SparseNet;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    ReLU,
    ReLUSquared,
}

impl Activation {
    #[inline]
    pub fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Identity => x,
            Activation::ReLU => {
                if x.is_positive() {
                    x
                } else {
                    S::zero()
                }
            }
            Activation::ReLUSquared => {
                if x.is_positive() {
                    x * x
                } else {
                    S::zero()
                }
            }
        }
    }

    /// Derivative with the a.e. convention `σ′(0) = 0`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::ReLU => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::ReLUSquared => 2.0 * x.max(0.0),
        }
    }
}

/// Which activation family a network (or padding) belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Relu,
    Relu2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Row-major, `out_dim × in_dim`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activations: Vec<Activation>,
}

impl Layer {
    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn affine(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Layer {
        let n = bias.len();
        Layer { weights, bias, activations: vec![Activation::Identity; n] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub label: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

/// Hidden layers followed by one affine output layer (always the last entry of `layers`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub input_dim: usize,
    pub layers: Vec<Layer>,
    pub metadata: Metadata,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeBudget {
    pub max_width: u64,
    pub max_depth: u64,
}

impl SizeBudget {
    pub fn new(max_width: u64, max_depth: u64) -> Self {
        SizeBudget { max_width, max_depth }
    }

    pub fn admits(&self, net: &Network) -> bool {
        net.width() as u64 <= self.max_width && net.depth() as u64 <= self.max_depth
    }
}

/// How `parallel` routes the input to its components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputMode {
    /// Every component reads the full (common) input.
    Shared,
    /// Components read consecutive, disjoint slices of the input.
    Disjoint,
}

impl Network {
    /// Validate dimensions and the identity output convention.
    pub fn new(input_dim: usize, layers: Vec<Layer>, label: impl Into<String>) -> Result<Network> {
        let net = Network { input_dim, layers, metadata: Metadata { label: label.into(), ..Default::default() } };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidParameter("input_dim must be positive".into()));
        }
        let Some(last) = self.layers.last() else {
            return Err(Error::InvalidParameter("network has no output layer".into()));
        };
        if last.activations.iter().any(|a| *a != Activation::Identity) {
            return Err(Error::InvalidParameter("output layer must be Identity".into()));
        }
        let mut prev = self.input_dim;
        for (li, layer) in self.layers.iter().enumerate() {
            let n = layer.bias.len();
            if layer.weights.len() != n || layer.activations.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "layer {li}: weights rows {}, bias {}, activations {} disagree",
                    layer.weights.len(),
                    n,
                    layer.activations.len()
                )));
            }
            for row in &layer.weights {
                if row.len() != prev {
                    return Err(Error::DimensionMismatch { expected: prev, got: row.len() });
                }
            }
            if li + 1 < self.layers.len() && n == 0 {
                return Err(Error::InvalidParameter(format!("hidden layer {li} is empty")));
            }
            prev = n;
        }
        Ok(())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.metadata.label = label.into();
        self
    }

    pub fn with_note(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.metadata.notes.insert(key.to_string(), value.to_string());
        self
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::out_dim)
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    /// Maximum hidden-layer size (0 for a purely affine network).
    pub fn width(&self) -> usize {
        self.hidden().iter().map(Layer::out_dim).max().unwrap_or(0)
    }

    pub fn hidden(&self) -> &[Layer] {
        &self.layers[..self.layers.len() - 1]
    }

    pub fn output_layer(&self) -> &Layer {
        self.layers.last().expect("validated network")
    }

    pub fn family(&self) -> Family {
        let sq = self.layers.iter().flat_map(|l| &l.activations).any(|a| *a == Activation::ReLUSquared);
        if sq {
            Family::Relu2
        } else {
            Family::Relu
        }
    }

    pub fn neuron_count(&self) -> usize {
        self.hidden().iter().map(Layer::out_dim).sum()
    }

    /// Forward pass.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.evaluate_as::<f64>(x)
    }

    /// Forward pass carried out in scalar type `S`.
    pub fn evaluate_as<S: Scalar>(&self, x: &[f64]) -> Result<Vec<S>> {
        self.check_input(x.len())?;
        let mut h: Vec<S> = x.iter().map(|&v| S::from_f64(v)).collect();
        for layer in &self.layers {
            h = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .zip(&layer.activations)
                .map(|((row, &b), act)| {
                    let mut acc = S::zero();
                    for (w, v) in row.iter().zip(&h) {
                        if *w != 0.0 {
                            acc += v.scale(*w);
                        }
                    }
                    act.apply(acc + S::from_f64(b))
                })
                .collect();
        }
        Ok(h)
    }

    /// Exact Jacobian (`output_dim × input_dim`) by forward-mode chain rule.
    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x.len())?;
        let sparse = SparseNet::from_network(self);
        let space = crate::eval::JetSpace::new(self.input_dim, 1);
        let jets = sparse.jets::<f64>(x, &space);
        let m = space.len();
        Ok((0..self.output_dim())
            .map(|o| (0..self.input_dim).map(|i| jets[o * m + 1 + i]).collect())
            .collect())
    }

    pub(crate) fn check_input(&self, n: usize) -> Result<()> {
        if n != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: n });
        }
        Ok(())
    }

    /// A network with no hidden layer computing `W x + b`.
    pub fn affine(input_dim: usize, weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Network> {
        Network::new(input_dim, vec![Layer::affine(weights, bias)], "affine")
    }

    /// `x ↦ x` realised as `σ(x) − σ(−x)` with `2d` neurons in each of `depth` hidden layers.
    ///
    /// Both families use the same ReLU pairs; `depth == 0` yields the affine identity.
    pub fn pad_identity(d: usize, depth: usize, _family: Family) -> Network {
        let mut layers = Vec::with_capacity(depth + 1);
        let mut prev = d;
        for li in 0..depth {
            let mut weights = Vec::with_capacity(2 * d);
            for i in 0..d {
                for sign in [1.0, -1.0] {
                    let mut row = vec![0.0; prev];
                    if li == 0 {
                        row[i] = sign;
                    } else {
                        row[2 * i] = sign;
                        row[2 * i + 1] = -sign;
                    }
                    weights.push(row);
                }
            }
            layers.push(Layer { weights, bias: vec![0.0; 2 * d], activations: vec![Activation::ReLU; 2 * d] });
            prev = 2 * d;
        }
        let out = (0..d)
            .map(|i| {
                let mut row = vec![0.0; prev];
                if depth == 0 {
                    row[i] = 1.0;
                } else {
                    row[2 * i] = 1.0;
                    row[2 * i + 1] = -1.0;
                }
                row
            })
            .collect();
        layers.push(Layer::affine(out, vec![0.0; d]));
        Network { input_dim: d, layers, metadata: Metadata { label: "identity".into(), ..Default::default() } }
    }

    /// `b ∘ a`; `a`'s output affine map is fused into `b`'s first layer, so depths add.
    pub fn stack(a: &Network, b: &Network) -> Result<Network> {
        if a.output_dim() != b.input_dim {
            return Err(Error::DimensionMismatch { expected: b.input_dim, got: a.output_dim() });
        }
        let a_out = a.output_layer();
        let b_first = &b.layers[0];
        let inner = a.hidden().last().map_or(a.input_dim, Layer::out_dim);
        let mut weights = vec![vec![0.0; inner]; b_first.out_dim()];
        let mut bias = b_first.bias.clone();
        for (r, brow) in b_first.weights.iter().enumerate() {
            for (m, &w) in brow.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (c, &v) in a_out.weights[m].iter().enumerate() {
                    if v != 0.0 {
                        weights[r][c] += w * v;
                    }
                }
                bias[r] += w * a_out.bias[m];
            }
        }
        let fused = Layer { weights, bias, activations: b_first.activations.clone() };
        let mut layers: Vec<Layer> = a.hidden().to_vec();
        layers.push(fused);
        layers.extend(b.layers[1..].iter().cloned());
        let label = format!("{} ∘ {}", b.metadata.label, a.metadata.label);
        Ok(Network { input_dim: a.input_dim, layers, metadata: Metadata { label, ..Default::default() } })
    }

    /// Stack a sequence left to right: `nets[n-1] ∘ … ∘ nets[0]`.
    pub fn chain(nets: &[Network]) -> Result<Network> {
        let (first, rest) = nets.split_first().ok_or_else(|| Error::InvalidParameter("empty chain".into()))?;
        let mut acc = first.clone();
        for n in rest {
            acc = Network::stack(&acc, n)?;
        }
        Ok(acc)
    }

    /// Extend to `depth` hidden layers by appending identity layers on the output.
    pub fn pad_to_depth(&self, depth: usize) -> Result<Network> {
        let cur = self.depth();
        if depth < cur {
            return Err(Error::InvalidParameter(format!("cannot shrink depth {cur} to {depth}")));
        }
        if depth == cur {
            return Ok(self.clone());
        }
        let pad = Network::pad_identity(self.output_dim(), depth - cur, self.family());
        let mut out = Network::stack(self, &pad)?;
        out.metadata = self.metadata.clone();
        Ok(out)
    }

    /// Side-by-side composition with concatenated outputs; shallower components are
    /// identity-padded to the common depth.
    pub fn parallel(nets: &[Network], mode: InputMode) -> Result<Network> {
        if nets.is_empty() {
            return Err(Error::InvalidParameter("parallel of zero networks".into()));
        }
        let input_dim = match mode {
            InputMode::Shared => {
                let d = nets[0].input_dim;
                if let Some(bad) = nets.iter().find(|n| n.input_dim != d) {
                    return Err(Error::DimensionMismatch { expected: d, got: bad.input_dim });
                }
                d
            }
            InputMode::Disjoint => nets.iter().map(|n| n.input_dim).sum(),
        };
        let depth = nets.iter().map(Network::depth).max().unwrap_or(0);
        let padded: Vec<Network> = nets.iter().map(|n| n.pad_to_depth(depth)).collect::<Result<_>>()?;
        let mut layers = Vec::with_capacity(depth + 1);
        for li in 0..=depth {
            let rows: usize = padded.iter().map(|n| n.layers[li].out_dim()).sum();
            let cols: usize = if li == 0 { input_dim } else { padded.iter().map(|n| n.layers[li - 1].out_dim()).sum() };
            let mut weights = Vec::with_capacity(rows);
            let mut bias = Vec::with_capacity(rows);
            let mut activations = Vec::with_capacity(rows);
            let mut col_off = 0;
            for n in &padded {
                let l = &n.layers[li];
                for r in 0..l.out_dim() {
                    let mut row = vec![0.0; cols];
                    let off = if li == 0 && mode == InputMode::Shared { 0 } else { col_off };
                    row[off..off + l.weights[r].len()].copy_from_slice(&l.weights[r]);
                    weights.push(row);
                }
                bias.extend_from_slice(&l.bias);
                activations.extend_from_slice(&l.activations);
                col_off += if li == 0 { n.input_dim } else { n.layers[li - 1].out_dim() };
            }
            layers.push(Layer { weights, bias, activations });
        }
        let label = format!("parallel[{}]", nets.iter().map(|n| n.metadata.label.as_str()).collect::<Vec<_>>().join(", "));
        Ok(Network { input_dim, layers, metadata: Metadata { label, ..Default::default() } })
    }

    /// JSON with full round-trip float precision.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Network> {
        let net: Network = serde_json::from_str(s)
            .map_err(|e| Error::Deserialize { line: e.line(), column: e.column(), msg: e.to_string() })?;
        net.validate()?;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_relu() -> Network {
        Network::new(1, vec![Layer { weights: vec![vec![1.0]], bias: vec![0.0], activations: vec![Activation::ReLU] }, Layer::affine(vec![vec![1.0]], vec![0.0])], "relu").unwrap()
    }

    #[test]
    fn relu_kills_negatives() {
        assert_eq!(single_relu().evaluate(&[-1.0]).unwrap(), vec![0.0]);
        assert_eq!(single_relu().jacobian(&[2.0]).unwrap(), vec![vec![1.0]]);
    }

    #[test]
    fn identity_padding() {
        let id = Network::pad_identity(1, 1, Family::Relu);
        assert_eq!(id.evaluate(&[0.37]).unwrap(), vec![0.37]);
        let id3 = Network::pad_identity(3, 5, Family::Relu);
        assert_eq!(id3.width(), 6);
        assert_eq!(id3.depth(), 5);
        assert_eq!(id3.evaluate(&[-1.0, 0.0, 2.0]).unwrap(), vec![-1.0, 0.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let e = single_relu().evaluate(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch { expected: 1, got: 2 }));
        let two = Network::pad_identity(2, 1, Family::Relu);
        assert!(Network::stack(&single_relu(), &two).is_err());
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        let bad = Network::new(1, vec![Layer { weights: vec![vec![1.0]], bias: vec![0.0, 1.0], activations: vec![Activation::ReLU] }], "bad");
        assert!(bad.is_err());
        let relu_out = Network::new(1, vec![Layer { weights: vec![vec![1.0]], bias: vec![0.0], activations: vec![Activation::ReLU] }], "bad");
        assert!(relu_out.is_err());
    }

    #[test]
    fn truncated_json_is_a_parse_error() {
        let s = single_relu().to_json().unwrap();
        let e = Network::from_json(&s[..s.len() / 2]).unwrap_err();
        assert!(matches!(e, Error::Deserialize { line: 1, .. }));
    }
}
