use crate::budget;
use crate::builder::{Lin, NetBuilder};
use crate::error::{invalid, Result};
use crate::multi_index::MultiIndex;
use crate::network::{InputMode, Network};

use super::{BoundCertificate, Built, NormKind};

/// Interval `(a, b)` on which the chained products of the k-fold product operate.
/// `b − a = 2` keeps every scaling weight an exact power of two, so the network
/// realises its ideal function without weight rounding.
pub const MULTIPRODUCT_INTERVAL: (f64, f64) = (-0.5, 1.5);

fn tent(x: f64) -> f64 {
    if x < 0.5 {
        2.0 * x
    } else {
        2.0 - 2.0 * x
    }
}

fn tent_iter(mut x: f64, i: u32) -> f64 {
    for _ in 0..i {
        x = tent(x);
    }
    x
}

/// Slope-change expansion of a continuous piecewise-linear `F` on `[0,1]` with
/// breakpoints `j/2^k`: `F(u) = F(0) + Σ_j c_j σ(u − j/2^k)` for `u ∈ [0,1]`.
fn pl_expansion(k: u32, f: impl Fn(f64) -> f64) -> (f64, Vec<f64>) {
    let n = 1usize << k;
    let h = 1.0 / n as f64;
    let vals: Vec<f64> = (0..=n).map(|j| f(j as f64 * h)).collect();
    let slopes: Vec<f64> = (0..n).map(|j| (vals[j + 1] - vals[j]) * n as f64).collect();
    let mut c = Vec::with_capacity(n);
    c.push(slopes[0]);
    for j in 1..n {
        c.push(slopes[j] - slopes[j - 1]);
    }
    (vals[0], c)
}

/// One interpolant-of-x² pipeline advancing `k` tent compositions per hidden layer.
///
/// After stage `m` it holds `y = g^{∘(m+1)k}(u)` and
/// `S = u − Σ_{i ≤ (m+1)k} g^{∘i}(u)/4^i`.
pub(crate) struct SquareBlock {
    k: u32,
    stage: u32,
    input: Lin,
    abs: bool,
    y: Lin,
    s: Lin,
}

impl SquareBlock {
    /// `abs`: the block squares `|v|`, with `|v| = σ(v) + σ(−v)` folded into the first layer.
    pub(crate) fn new(v: Lin, abs: bool, k: u32) -> SquareBlock {
        SquareBlock { k, stage: 0, input: v.clone(), abs, y: v.clone(), s: v }
    }

    pub(crate) fn emit_layer(&mut self, b: &mut NetBuilder) {
        let k = self.k;
        let n = 1usize << k;
        let h = 1.0 / n as f64;
        let mut basis = Vec::with_capacity(n);
        let carry;
        if self.stage == 0 {
            if self.abs {
                let p = b.relu(self.input.clone());
                let q = b.relu(self.input.neg());
                basis.push(p.plus(&q));
            } else {
                basis.push(b.relu(self.input.clone()));
            }
            for j in 1..n {
                basis.push(b.relu(self.input.shifted(-(j as f64) * h)));
            }
            carry = basis[0].clone();
        } else {
            for j in 0..n {
                basis.push(b.relu(self.y.shifted(-(j as f64) * h)));
            }
            carry = b.relu(self.s.clone());
        }
        let first = self.stage * k;
        let (y0, cy) = pl_expansion(k, |u| tent_iter(u, k));
        let (g0, cg) = pl_expansion(k, |u| {
            let mut acc = 0.0;
            let mut v = u;
            for i in 1..=k {
                v = tent(v);
                acc -= v * 0.25f64.powi((first + i) as i32);
            }
            acc
        });
        let mut y = Lin::constant(y0);
        let mut s = carry.shifted(g0);
        for j in 0..n {
            y = y.plus_scaled(&basis[j], cy[j]);
            s = s.plus_scaled(&basis[j], cg[j]);
        }
        self.y = y;
        self.s = s;
        self.stage += 1;
    }

    pub(crate) fn value(&self) -> &Lin {
        &self.s
    }
}

/// Piecewise-linear interpolant `f_s` of `x²` at the points `j/2^s`, `s = 2Lk`.
pub fn build_sawtooth_square(n: u64, l: u64) -> Result<Built> {
    if n == 0 || l == 0 {
        return Err(invalid("N and L must be positive"));
    }
    let k = budget::sawtooth_k(n);
    let mut b = NetBuilder::new(1);
    let mut blk = SquareBlock::new(b.input(0), false, k);
    for _ in 0..2 * l {
        blk.emit_layer(&mut b);
        b.end_layer();
    }
    let s = 2 * l * k as u64;
    let net = b
        .finish(&[blk.value().clone()], "sawtooth-square")
        .with_note("N", n)
        .with_note("L", l)
        .with_note("k", k)
        .with_note("s", s);
    let cert = BoundCertificate::new(NormKind::W1Inf, "(0,1)", (n as f64).powi(-(l as i32)), "N^-L").with_self_norm(2.0);
    Ok(Built { network: net, budget: budget::sawtooth(n, l), certificate: Some(cert) })
}

/// Emits `2(ψ(|x+y|/2) − ψ(|x|/2) − ψ(|y|/2))` on normalised inputs `u, v`; returns the
/// three blocks for lockstep emission.
fn product_blocks(u: &Lin, v: &Lin, k: u32) -> [SquareBlock; 3] {
    [
        SquareBlock::new(u.plus(v).scaled(0.5), true, k),
        SquareBlock::new(u.scaled(0.5), true, k),
        SquareBlock::new(v.scaled(0.5), true, k),
    ]
}

fn product_value(blocks: &[SquareBlock; 3]) -> Lin {
    blocks[0].value().minus(blocks[1].value()).minus(blocks[2].value()).scaled(2.0)
}

/// Approximate `xy` on `(0,1)²`.
pub fn build_product2(n: u64, l: u64) -> Result<Built> {
    if n == 0 || l == 0 {
        return Err(invalid("N and L must be positive"));
    }
    let k = budget::sawtooth_k(n);
    let mut b = NetBuilder::new(2);
    let mut blocks = product_blocks(&b.input(0), &b.input(1), k);
    for _ in 0..2 * l {
        for blk in &mut blocks {
            blk.emit_layer(&mut b);
        }
        b.end_layer();
    }
    let net = b.finish(&[product_value(&blocks)], "product2").with_note("N", n).with_note("L", l);
    let cert = BoundCertificate::new(NormKind::W1Inf, "(0,1)^2", 6.0 * (n as f64).powi(-(l as i32)), "6 N^-L")
        .with_self_norm(12.0);
    Ok(Built { network: net, budget: budget::product2(n, l), certificate: Some(cert) })
}

/// Approximate `xy` on `(a,b)²` via
/// `(b−a)² ψ((x−a)/(b−a), (y−a)/(b−a)) + a(x−a) + a(y−a) + a²`.
///
/// `a(x−a) + a(y−a) = a·t` with `t ≥ 0` on the domain, so `t` rides through a single
/// ReLU per layer (width `≤ 9N + 1`).
pub fn build_product2_scaled(n: u64, l: u64, a: f64, bb: f64) -> Result<Built> {
    if n == 0 || l == 0 {
        return Err(invalid("N and L must be positive"));
    }
    if !(a < bb) || !a.is_finite() || !bb.is_finite() {
        return Err(invalid(format!("need a < b, got a = {a}, b = {bb}")));
    }
    let w = bb - a;
    let k = budget::sawtooth_k(n);
    let mut b = NetBuilder::new(2);
    let x = b.input(0).shifted(-a);
    let y = b.input(1).shifted(-a);
    let mut blocks = product_blocks(&x.scaled(1.0 / w), &y.scaled(1.0 / w), k);
    let mut t = x.plus(&y);
    for _ in 0..2 * l {
        for blk in &mut blocks {
            blk.emit_layer(&mut b);
        }
        if a != 0.0 {
            t = b.relu(t);
        }
        b.end_layer();
    }
    let mut out = product_value(&blocks).scaled(w * w).shifted(a * a);
    if a != 0.0 {
        out = out.plus_scaled(&t, a);
    }
    let net = b
        .finish(&[out], "product2-scaled")
        .with_note("N", n)
        .with_note("L", l)
        .with_note("a", a)
        .with_note("b", bb);
    let cert = BoundCertificate::new(
        NormKind::W1Inf,
        &format!("({a},{bb})^2"),
        6.0 * w * w * (n as f64).powi(-(l as i32)),
        "6 (b-a)^2 N^-L",
    )
    .with_self_norm(12.0 * w * w);
    Ok(Built { network: net, budget: budget::product2_scaled(n, l), certificate: Some(cert) })
}

/// Carry `dim` values that are `≥ −shift` on the domain through `depth` layers of single ReLUs.
pub fn carry_shifted(dim: usize, depth: usize, shift: f64) -> Network {
    let mut b = NetBuilder::new(dim);
    let mut vals: Vec<Lin> = (0..dim).map(|i| b.input(i)).collect();
    for _ in 0..depth {
        vals = vals.iter().map(|v| b.carry_shifted(v, shift)).collect();
        b.end_layer();
    }
    b.finish(&vals, "carry")
}

/// Approximate `x₁x₂⋯x_k` on `(0,1)^k` by chaining a two-factor product on
/// [`MULTIPRODUCT_INTERVAL`] with precision `(N+1, 7kL)`.
pub fn build_multiproduct(n: u64, l: u64, k: u64) -> Result<Built> {
    if k < 2 {
        return Err(invalid(format!("k-fold product needs k ≥ 2, got {k}")));
    }
    if n == 0 || l == 0 {
        return Err(invalid("N and L must be positive"));
    }
    let (a, bb) = MULTIPRODUCT_INTERVAL;
    let phi1 = build_product2_scaled(n + 1, 7 * k * l, a, bb)?.network;
    let stage_depth = phi1.depth();
    let mut stages = Vec::with_capacity(k as usize - 1);
    for i in 1..k {
        // input: (p, x_{i+1}, …, x_k) for i ≥ 2, (x_1, …, x_k) for i = 1
        let rest = (k - i - 1) as usize;
        let stage = if rest == 0 {
            phi1.clone()
        } else {
            Network::parallel(&[phi1.clone(), carry_shifted(rest, stage_depth, -a)], InputMode::Disjoint)?
        };
        stages.push(stage);
    }
    let net = Network::chain(&stages)?
        .with_label("multiproduct")
        .with_note("N", n)
        .with_note("L", l)
        .with_note("k", k);
    let bound = 10.0 * (k - 1) as f64 * ((n + 1) as f64).powi(-((7 * k * l) as i32));
    let cert = BoundCertificate::new(NormKind::W1Inf, "(0,1)^k", bound, "10(k-1)(N+1)^(-7kL)").with_self_norm(18.0);
    Ok(Built { network: net, budget: budget::multiproduct(n, l, k), certificate: Some(cert) })
}

/// Approximate `xᵅ` on `[0,1]^d` as a k-fold product of duplicated coordinates padded with ones.
pub fn build_monomial_relu(n: u64, l: u64, alpha: &MultiIndex, k: u64) -> Result<Built> {
    let order = alpha.order() as u64;
    if order > k {
        return Err(invalid(format!("|alpha| = {order} exceeds k = {k}")));
    }
    if n == 0 || l == 0 || alpha.dim() == 0 {
        return Err(invalid("N, L and d must be positive"));
    }
    let d = alpha.dim();
    let expand = alpha.expand();
    let net = if order <= 1 {
        let row = (0..d).map(|i| if expand.first() == Some(&i) { 1.0 } else { 0.0 }).collect();
        let bias = if order == 0 { 1.0 } else { 0.0 };
        Network::affine(d, vec![row], vec![bias])?
    } else {
        let weights = (0..k as usize)
            .map(|z| (0..d).map(|i| if expand.get(z) == Some(&i) { 1.0 } else { 0.0 }).collect())
            .collect();
        let bias = (0..k as usize).map(|z| if z < expand.len() { 0.0 } else { 1.0 }).collect();
        let lift = Network::affine(d, weights, bias)?;
        Network::stack(&lift, &build_multiproduct(n, l, k)?.network)?
    };
    let net = net
        .with_label("monomial-relu")
        .with_note("alpha", alpha)
        .with_note("N", n)
        .with_note("L", l)
        .with_note("k", k);
    let bound = 10.0 * k as f64 * ((n + 1) as f64).powi(-((7 * k * l) as i32));
    let cert = BoundCertificate::new(NormKind::W1Inf, "[0,1]^d", bound, "10k(N+1)^(-7kL)").with_self_norm(18.0);
    Ok(Built { network: net, budget: budget::monomial_relu(n, l, k), certificate: Some(cert) })
}
