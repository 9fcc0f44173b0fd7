use crate::budget;
use crate::builder::{Lin, NetBuilder};
use crate::error::{invalid, precondition, Result};
use crate::multi_index::MultiIndex;
use crate::network::Network;

use super::{BoundCertificate, Built, NormKind};

fn exact_cert(domain: &str) -> BoundCertificate {
    BoundCertificate::new(NormKind::LInf, domain, 0.0, "exact")
}

/// `x² = σ₁²(x) + σ₁²(−x)`.
pub fn build_exact_square() -> Network {
    let mut b = NetBuilder::new(1);
    let x = b.input(0);
    let p = b.neuron(x.clone(), crate::network::Activation::ReLUSquared);
    let q = b.neuron(x.neg(), crate::network::Activation::ReLUSquared);
    b.end_layer();
    b.finish(&[p.plus(&q)], "exact-square")
}

/// `xy = ((x+y)² − (x−y)²)/4`.
pub fn build_exact_product2() -> Network {
    let mut b = NetBuilder::new(2);
    let (x, y) = (b.input(0), b.input(1));
    let p = b.mul_sq(&x, &y);
    b.end_layer();
    b.finish(&[p], "exact-product2")
}

/// Layer schedule for one monomial: `P` chains multiply one new factor per layer
/// for `ℓ*` layers, then a pairwise tree combines the chains.
#[derive(Clone, Debug)]
struct MonoSchedule {
    chains: Vec<Vec<usize>>,
    lstar: usize,
    layer: usize,
    vals: Vec<Lin>,
    pos: Vec<usize>,
}

impl MonoSchedule {
    /// Factors `factors` (length ≥ 2) using at most `n` chains and `l` chain layers,
    /// minimising depth `ℓ* + ⌈log₂P⌉`.
    fn plan(factors: &[usize], n: u64, l: u64) -> Option<MonoSchedule> {
        let k = factors.len() as u64;
        let mut best: Option<(u64, u64, u64)> = None;
        for p in 1..=n.min(k) {
            let lstar = k.div_ceil(p).saturating_sub(1).max(1);
            if lstar > l {
                continue;
            }
            let depth = lstar + budget::ceil_log2(p) as u64;
            if best.is_none_or(|(bd, bp, _)| depth < bd || (depth == bd && p < bp)) {
                best = Some((depth, p, lstar));
            }
        }
        let (_, p, lstar) = best?;
        let p = p as usize;
        let base = factors.len() / p;
        let extra = factors.len() % p;
        let mut chains = Vec::with_capacity(p);
        let mut it = factors.iter().copied();
        for c in 0..p {
            let len = base + usize::from(c < extra);
            chains.push(it.by_ref().take(len).collect());
        }
        Some(MonoSchedule { chains, lstar: lstar as usize, layer: 0, vals: Vec::new(), pos: vec![0; p] })
    }

    fn depth(&self) -> usize {
        self.lstar + budget::ceil_log2(self.chains.len() as u64) as usize
    }

    fn done(&self) -> bool {
        self.layer == self.depth()
    }

    /// Whether the next emitted layer reads `x` from the previous layer.
    fn needs_x_next(&self) -> bool {
        self.layer < self.lstar
    }

    /// Emit this schedule's neurons into the open layer; `xs` are the input
    /// coordinates as seen by that layer.
    fn emit(&mut self, b: &mut NetBuilder, xs: &[Lin]) {
        if self.layer == 0 {
            self.vals = self
                .chains
                .iter()
                .zip(self.pos.iter_mut())
                .map(|(ch, pos)| {
                    if ch.len() >= 2 {
                        *pos = 2;
                        b.mul_sq(&xs[ch[0]], &xs[ch[1]])
                    } else {
                        *pos = 1;
                        b.carry(&xs[ch[0]])
                    }
                })
                .collect();
        } else if self.layer < self.lstar {
            let mut next = Vec::with_capacity(self.vals.len());
            for ((ch, pos), v) in self.chains.iter().zip(self.pos.iter_mut()).zip(&self.vals) {
                if *pos < ch.len() {
                    next.push(b.mul_sq(v, &xs[ch[*pos]]));
                    *pos += 1;
                } else {
                    next.push(b.carry(v));
                }
            }
            self.vals = next;
        } else {
            let mut next = Vec::with_capacity(self.vals.len().div_ceil(2));
            for pair in self.vals.chunks(2) {
                next.push(if pair.len() == 2 { b.mul_sq(&pair[0], &pair[1]) } else { b.carry(&pair[0]) });
            }
            self.vals = next;
        }
        self.layer += 1;
    }

    fn value(&self) -> &Lin {
        debug_assert!(self.done());
        &self.vals[0]
    }
}

fn affine_term(coef: f64, alpha: &MultiIndex) -> Lin {
    match alpha.expand().first() {
        None => Lin::constant(coef),
        Some(&i) => Lin::term(i, coef),
    }
}

/// Exact `xᵅ` on ℝ^d with width `≤ 4N+2d` and depth `≤ L+⌈log₂N⌉`.
pub fn build_exact_monomial_sigma2(n: u64, l: u64, alpha: &MultiIndex) -> Result<Built> {
    if n == 0 || l == 0 || alpha.dim() == 0 {
        return Err(invalid("N, L and d must be positive"));
    }
    let k = alpha.order() as u64;
    let cap = n * l + (1u64 << budget::floor_log2(n));
    if cap < k {
        return Err(precondition(format!("N·L + 2^⌊log₂N⌋ ≥ |alpha| violated: {cap} < {k}")));
    }
    let d = alpha.dim();
    let budget = budget::monomial_sigma2(n, l, d as u64);
    let label = "exact-monomial-sigma2";
    if k <= 1 {
        let lin = affine_term(1.0, alpha);
        let row = (0..d).map(|i| lin.terms.get(&i).copied().unwrap_or(0.0)).collect();
        let net = Network::affine(d, vec![row], vec![lin.constant])?.with_label(label).with_note("alpha", alpha);
        return Ok(Built { network: net, budget, certificate: Some(exact_cert("R^d")) });
    }
    let mut sched = MonoSchedule::plan(&alpha.expand(), n, l).expect("precondition implies a feasible plan");
    let mut b = NetBuilder::new(d);
    let mut xs: Vec<Lin> = (0..d).map(Lin::var).collect();
    while !sched.done() {
        let carry_x = sched.needs_x_next() && sched.layer + 1 < sched.lstar;
        sched.emit(&mut b, &xs);
        if carry_x {
            xs = xs.iter().map(|x| b.carry(x)).collect();
        }
        b.end_layer();
    }
    let net = b
        .finish(&[sched.value().clone()], label)
        .with_note("alpha", alpha)
        .with_note("N", n)
        .with_note("L", l);
    Ok(Built { network: net, budget, certificate: Some(exact_cert("R^d")) })
}

/// Exact `P(x) = Σ_j c_j x^{α_j}` on ℝ^d: an `a × b` grid of monomial blocks
/// (`a` side by side, `b` in sequence) with shared identity channels and a running sum.
pub fn build_exact_polynomial_sigma2(n: u64, l: u64, a: u64, bb: u64, terms: &[(f64, MultiIndex)]) -> Result<Built> {
    if n == 0 || l == 0 || a == 0 || bb == 0 {
        return Err(invalid("N, L, a, b must be positive"));
    }
    let Some(d) = terms.first().map(|t| t.1.dim()) else {
        return Err(invalid("polynomial has no terms"));
    };
    if d == 0 || terms.iter().any(|t| t.1.dim() != d) {
        return Err(invalid("all multi-indices must share a positive dimension"));
    }
    let j = terms.len() as u64;
    if a * bb < j {
        return Err(precondition(format!("a·b ≥ J violated: {} < {j}", a * bb)));
    }
    let kmax = terms.iter().map(|t| t.1.order() as u64).max().unwrap_or(0);
    if !budget::log_slack_at_least(n, l, 2 * bb, bb, bb * kmax) {
        return Err(precondition(format!(
            "(L − 2b − b·log₂N)·N ≥ b·max|α| violated for N={n}, L={l}, b={bb}, max|α|={kmax}"
        )));
    }
    let budget = budget::polynomial_sigma2(n, l, a, d as u64);
    let stage_depth = (l / bb) as usize;
    let chain_layers = (l / bb).saturating_sub(budget::ceil_log2(n) as u64);

    // affine part seeds the running sum; higher-degree terms go on the grid
    let mut acc = Lin::constant(0.0);
    let mut grid: Vec<Vec<(f64, MonoSchedule)>> = vec![Vec::new(); bb as usize];
    let mut slot = 0usize;
    for (c, alpha) in terms {
        if alpha.order() <= 1 {
            acc = acc.plus(&affine_term(*c, alpha));
        } else {
            let sched = MonoSchedule::plan(&alpha.expand(), n, chain_layers).expect("precondition implies a feasible plan");
            debug_assert!(sched.depth() <= stage_depth);
            grid[slot / a as usize].push((*c, sched));
        }
        slot += 1;
    }
    let stages_used = grid.iter().rposition(|s| !s.is_empty()).map_or(0, |p| p + 1);
    let mut b = NetBuilder::new(d);
    let mut xs: Vec<Lin> = (0..d).map(Lin::var).collect();
    if stages_used > 0 {
        let last_stage_depth = grid[stages_used - 1].iter().map(|(_, s)| s.depth()).max().unwrap_or(0);
        let total = (stages_used - 1) * stage_depth + last_stage_depth;
        let mut stage_blocks: Vec<(f64, MonoSchedule)> = Vec::new();
        for layer in 0..total {
            if layer % stage_depth == 0 {
                stage_blocks = std::mem::take(&mut grid[layer / stage_depth]);
            }
            for (_, s) in stage_blocks.iter_mut().filter(|(_, s)| !s.done()) {
                s.emit(&mut b, &xs);
            }
            let new_acc = b.carry(&acc);
            let next_xs: Vec<Lin> = if layer + 1 < total { xs.iter().map(|x| b.carry(x)).collect() } else { Vec::new() };
            b.end_layer();
            acc = new_acc;
            xs = next_xs;
            // fold finished blocks into the running sum
            let mut keep = Vec::with_capacity(stage_blocks.len());
            for (c, s) in stage_blocks.drain(..) {
                if s.done() {
                    acc = acc.plus_scaled(s.value(), c);
                } else {
                    keep.push((c, s));
                }
            }
            stage_blocks = keep;
        }
    }
    let net = b
        .finish(&[acc], "exact-polynomial-sigma2")
        .with_note("terms", terms.len())
        .with_note("N", n)
        .with_note("L", l)
        .with_note("a", a)
        .with_note("b", bb);
    Ok(Built { network: net, budget, certificate: Some(exact_cert("R^d")) })
}
