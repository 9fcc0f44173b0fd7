//! Piecewise Taylor compilation of smooth targets into σ₁ / σ₂ networks,
//! with certification against the stated error rates.
//!
//! `φ(x) = Σ_{|α|≤s−1} φ̃(φ_α(ψ(x))/α!, P_α(x − ψ(x)/K))`: a step network `ψ` locates
//! the cell, point matchers `φ_α` recall the Taylor coefficients at the cell's
//! lower corner, monomial networks `P_α` evaluate the local powers and `φ̃`
//! multiplies the two.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget;
use crate::error::{invalid, precondition, Error, Result};
use crate::eval::{JetSpace, SparseNet};
use crate::metrics::{estimate_lp_error, estimate_sup_error, loglog_slope, ErrorReport, GridSpec, LpEstimate, MonomialReference, Reference};
use crate::multi_index::MultiIndex;
use crate::network::{Family, InputMode, Network, SizeBudget};
use crate::primitives::{
    build_exact_monomial_sigma2, build_exact_product2, build_monomial_relu, build_point_matcher, build_product2_scaled,
    build_step, BoundCertificate, BuildMode, Built, NormKind, MIN_DIRECT_DELTA,
};
use crate::targets::TargetFunction;

/// Thin slabs `(k/K − δ, k/K)`, `k = 1..K−1`, along every axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriflingSpec {
    pub d: usize,
    #[serde(rename = "K")]
    pub k: u64,
    pub delta: f64,
}

impl TriflingSpec {
    pub fn new(d: usize, k: u64, delta: f64) -> Result<TriflingSpec> {
        if d == 0 || k == 0 {
            return Err(invalid("d and K must be positive"));
        }
        if !(delta > 0.0 && delta < 1.0 / k as f64) {
            return Err(invalid(format!("delta = {delta} outside (0, 1/K) with K = {k}")));
        }
        Ok(TriflingSpec { d, k, delta })
    }

    fn coord_in(&self, x: f64) -> bool {
        let kf = self.k as f64;
        let j = (x * kf).floor() + 1.0;
        j >= 1.0 && j <= kf - 1.0 && x > j / kf - self.delta && x < j / kf
    }

    /// `x ∈ Ω`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().any(|&v| self.coord_in(v))
    }

    /// `Kdδ ≥ vol(Ω)`.
    pub fn volume_bound(&self) -> f64 {
        self.k as f64 * self.d as f64 * self.delta
    }

    /// Cell `β` with `x ∈ Q_β`, or `None` on Ω.
    pub fn cell(&self, x: &[f64]) -> Option<Vec<u64>> {
        if self.contains(x) {
            return None;
        }
        Some(x.iter().map(|&v| ((v * self.k as f64).floor().max(0.0) as u64).min(self.k - 1)).collect())
    }
}

/// Bijection `i ↔ η` with `i = Σ_j η_j K^{j−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellIndexMap {
    pub d: usize,
    pub k: u64,
    pub len: u64,
}

pub fn cell_index_map(d: usize, k: u64) -> Result<CellIndexMap> {
    if d == 0 || k == 0 {
        return Err(invalid("d and K must be positive"));
    }
    let len = (k as u128).checked_pow(d as u32).filter(|&v| v <= 1u128 << 53);
    match len {
        Some(len) => Ok(CellIndexMap { d, k, len: len as u64 }),
        None => Err(Error::IndexOverflow(format!("{k}^{d}"))),
    }
}

impl CellIndexMap {
    pub fn digits(&self, mut i: u64) -> Vec<u64> {
        debug_assert!(i < self.len);
        (0..self.d)
            .map(|_| {
                let r = i % self.k;
                i /= self.k;
                r
            })
            .collect()
    }

    pub fn index(&self, eta: &[u64]) -> u64 {
        eta.iter().rev().fold(0, |acc, &e| acc * self.k + e)
    }
}

/// Compile-time parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompileParams {
    pub s: u32,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "L")]
    pub l: u64,
    /// Target Sobolev order (σ₂ only; σ₁ always certifies order 1).
    #[serde(rename = "n")]
    pub order: u32,
    pub p: f64,
    pub mode: BuildMode,
    /// Trifling width; `None` means `1/(3K)`.
    pub delta: Option<f64>,
    /// Lift the `s ≤ 5`, `d ≤ 3` guard.
    pub allow_large: bool,
}

impl CompileParams {
    pub fn new(s: u32, d: usize, n: u64, l: u64) -> CompileParams {
        CompileParams { s, d, n, l, order: 1, p: 1.0, mode: BuildMode::Direct, delta: None, allow_large: false }
    }

    pub fn order(mut self, order: u32) -> Self {
        self.order = order;
        self
    }

    pub fn mode(mut self, mode: BuildMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn cells_per_axis(&self) -> u64 {
        budget::cells_per_axis(self.n, self.l, self.d as u32)
    }

    /// Certified Sobolev order for `family`.
    pub fn certified_order(&self, family: Family) -> u32 {
        match family {
            Family::Relu => 1,
            Family::Relu2 => self.order,
        }
    }

    /// Off-Ω rate `(NL)^{−2(s−n)/d}`.
    pub fn rate(&self, family: Family) -> f64 {
        let n = self.certified_order(family) as f64;
        ((self.n * self.l) as f64).powf(-2.0 * (self.s as f64 - n) / self.d as f64)
    }

    fn validate(&self, family: Family, f: &TargetFunction) -> Result<()> {
        if self.n == 0 || self.l == 0 || self.d == 0 {
            return Err(invalid("N, L and d must be positive"));
        }
        if !self.allow_large && (self.s > 5 || self.d > 3) {
            return Err(invalid(format!("s = {} and d = {} exceed the guard s ≤ 5, d ≤ 3 (set allow_large)", self.s, self.d)));
        }
        if f.d != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: f.d });
        }
        if f.s < self.s {
            return Err(precondition(format!(
                "target `{}` is certified for derivatives up to order {} only, need s = {}",
                f.id, f.s, self.s
            )));
        }
        if !(f.certified_bound < 1.0) {
            return Err(precondition(format!("target `{}` violates ‖∂^α f‖_∞ < 1", f.id)));
        }
        match family {
            Family::Relu => {
                if self.s < 2 {
                    return Err(precondition(format!("σ₁ compilation needs smoothness s > 1, got s = {}", self.s)));
                }
            }
            Family::Relu2 => {
                if self.s < 1 {
                    return Err(precondition("σ₂ compilation needs s ≥ 1"));
                }
                if self.order >= self.s {
                    return Err(precondition(format!("need n < s, got n = {}, s = {}", self.order, self.s)));
                }
                if !budget::log_slack_at_least(self.n, self.l, 2, 1, self.s as u64) {
                    return Err(precondition(format!(
                        "(L − 2 − log₂N)·N ≥ s violated for N = {}, L = {}, s = {}",
                        self.n, self.l, self.s
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `ξ_{α,i} = (∂^α f(η(i)/K) + 1)/2` for `|α| ≤ s−1` and every cell `i`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaylorCoefficientTable {
    #[serde(rename = "K")]
    pub k: u64,
    pub d: usize,
    pub indices: Vec<MultiIndex>,
    /// `values[a][i]` for `indices[a]`.
    pub values: Vec<Vec<f64>>,
}

impl TaylorCoefficientTable {
    pub fn build(f: &TargetFunction, s: u32, k: u64) -> Result<TaylorCoefficientTable> {
        let map = cell_index_map(f.d, k)?;
        let indices = MultiIndex::all_up_to(f.d, s - 1);
        let corners: Vec<Vec<f64>> =
            (0..map.len).map(|i| map.digits(i).iter().map(|&e| e as f64 / k as f64).collect()).collect();
        let values = indices
            .iter()
            .map(|a| corners.iter().map(|c| ((f.derivative(c, a) + 1.0) / 2.0).clamp(0.0, 1.0)).collect())
            .collect();
        Ok(TaylorCoefficientTable { k, d: f.d, indices, values })
    }

    pub fn xi(&self, alpha: usize, i: u64) -> f64 {
        self.values[alpha][i as usize]
    }
}

/// Size of one building block against its own formula.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComponentSize {
    pub name: String,
    pub width: usize,
    pub depth: usize,
    pub budget_width: u64,
    pub budget_depth: u64,
    pub within: bool,
}

impl ComponentSize {
    fn of(name: String, b: &Built) -> ComponentSize {
        ComponentSize {
            name,
            width: b.network.width(),
            depth: b.network.depth(),
            budget_width: b.budget.max_width,
            budget_depth: b.budget.max_depth,
            within: b.within_budget(),
        }
    }
}

/// Compiled network with its building blocks.
#[derive(Clone, Debug)]
pub struct CompiledNetwork {
    pub family: Family,
    pub params: CompileParams,
    pub target: TargetFunction,
    pub network: Network,
    /// Width/depth formula for the whole construction.
    pub budget: SizeBudget,
    pub certificate: BoundCertificate,
    pub trifling: TriflingSpec,
    pub table: TaylorCoefficientTable,
    pub step: Built,
    pub matchers: Vec<Built>,
    pub monomials: Vec<Built>,
    pub product: Built,
}

impl CompiledNetwork {
    pub fn k(&self) -> u64 {
        self.trifling.k
    }

    pub fn order(&self) -> u32 {
        self.params.certified_order(self.family)
    }

    pub fn within_budget(&self) -> bool {
        self.budget.admits(&self.network)
    }

    pub fn components(&self) -> Vec<ComponentSize> {
        let mut out = vec![ComponentSize::of(format!("step ({})", self.params.mode), &self.step)];
        for (a, m) in self.table.indices.iter().zip(&self.matchers) {
            out.push(ComponentSize::of(format!("matcher {a} ({})", self.params.mode), m));
        }
        for (a, m) in self.table.indices.iter().zip(&self.monomials) {
            out.push(ComponentSize::of(format!("monomial {a}"), m));
        }
        out.push(ComponentSize::of("product".into(), &self.product));
        out
    }

    /// `φ_α(i) = 2·matcher_α(i) − 1`.
    pub fn encoded_coefficient(&self, alpha: usize, i: u64) -> f64 {
        2.0 * self.matchers[alpha].network.evaluate(&[i as f64]).expect("scalar input")[0] - 1.0
    }

    pub fn formula_diagnostics(&self) -> FormulaDiagnostics {
        formula_diagnostics(self.family, &self.params, self.k())
    }
}

fn factorial(alpha: &MultiIndex) -> f64 {
    alpha.factorial_f64()
}

/// σ₁ network with `‖f − φ‖_{W^{1,∞}([0,1]^d∖Ω)} ≤ 84(s+1)^d 8^s (NL)^{−2(s−1)/d}`.
pub fn compile_relu(f: &TargetFunction, params: &CompileParams) -> Result<CompiledNetwork> {
    compile(Family::Relu, f, params)
}

/// σ₂ network with `‖f − φ‖_{W^{n,∞}([0,1]^d∖Ω)} ≤ 2(s+1)^d 8^{s−n} (NL)^{−2(s−n)/d}`.
pub fn compile_relu2(f: &TargetFunction, params: &CompileParams) -> Result<CompiledNetwork> {
    compile(Family::Relu2, f, params)
}

pub fn compile(family: Family, f: &TargetFunction, params: &CompileParams) -> Result<CompiledNetwork> {
    params.validate(family, f)?;
    let (s, d, n, l) = (params.s, params.d, params.n, params.l);
    let k = params.cells_per_axis();
    let map = cell_index_map(d, k)?;
    let delta = params.delta.unwrap_or(1.0 / (3.0 * k as f64));
    let trifling = TriflingSpec::new(d, k, delta)?;
    let table = TaylorCoefficientTable::build(f, s, k)?;

    // stage A: x ↦ (ψ(x₁), …, ψ(x_d), x)
    let step = build_step(n, l, d as u32, delta, params.mode)?;
    let dup_rows = (0..2 * d).map(|r| unit_row(d, r % d)).collect();
    let dup = Network::affine(d, dup_rows, vec![0.0; 2 * d])?;
    let mut a_parts = vec![step.network.clone(); d];
    a_parts.push(Network::pad_identity(d, step.network.depth(), family));
    let stage_a = Network::stack(&dup, &Network::parallel(&a_parts, InputMode::Disjoint)?)?;

    // stage B: per α, (φ_α(ψ)/α!, P_α(x − ψ/K))
    let mut matchers = Vec::with_capacity(table.indices.len());
    let mut monomials = Vec::with_capacity(table.indices.len());
    let mut b_parts = Vec::with_capacity(2 * table.indices.len());
    let digit_row: Vec<f64> = (0..2 * d).map(|j| if j < d { (k as f64).powi(j as i32) } else { 0.0 }).collect();
    let idx = Network::affine(2 * d, vec![digit_row], vec![0.0])?;
    let h_rows: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..2 * d).map(|j| if j == i { -1.0 / k as f64 } else if j == d + i { 1.0 } else { 0.0 }).collect())
        .collect();
    let h = Network::affine(2 * d, h_rows, vec![0.0; d])?;
    for (ai, alpha) in table.indices.iter().enumerate() {
        let matcher = build_point_matcher(n, l, s as u64, &table.values[ai], params.mode)?;
        let fact = factorial(alpha);
        let post = Network::affine(1, vec![vec![2.0 / fact]], vec![-1.0 / fact])?;
        b_parts.push(Network::chain(&[idx.clone(), matcher.network.clone(), post])?);
        let mono = match family {
            Family::Relu => build_monomial_relu(n, l, alpha, s as u64)?,
            Family::Relu2 => build_exact_monomial_sigma2(n, l, alpha)?,
        };
        b_parts.push(Network::stack(&h, &mono.network)?);
        matchers.push(matcher);
        monomials.push(mono);
    }
    let stage_b = Network::parallel(&b_parts, InputMode::Shared)?;

    // stage C: Σ_α φ̃(a_α, m_α)
    let product = match family {
        Family::Relu => build_product2_scaled(n + 1, 2 * s as u64 * (l + 1), -3.0, 3.0)?,
        Family::Relu2 => Built {
            network: build_exact_product2(),
            budget: SizeBudget::new(4, 1),
            certificate: Some(BoundCertificate::new(NormKind::LInf, "R^2", 0.0, "exact")),
        },
    };
    let terms = table.indices.len();
    let stage_c = Network::parallel(&vec![product.network.clone(); terms], InputMode::Disjoint)?;
    let sum = Network::affine(terms, vec![vec![1.0; terms]], vec![0.0])?;
    let label = match family {
        Family::Relu => "taylor-relu",
        Family::Relu2 => "taylor-relu2",
    };
    let network = Network::chain(&[stage_a, stage_b, stage_c, sum])?
        .with_label(label)
        .with_note("target", &f.id)
        .with_note("s", s)
        .with_note("d", d)
        .with_note("N", n)
        .with_note("L", l)
        .with_note("K", k)
        .with_note("cells", map.len)
        .with_note("delta", delta)
        .with_note("mode", params.mode);

    let (sd, s1) = (s as f64, (s + 1) as f64);
    let (budget, certificate) = match family {
        Family::Relu => (
            budget::compile_relu(n, l, s as u64, d as u64),
            BoundCertificate::new(
                NormKind::W1Inf,
                "[0,1]^d \\ Omega",
                84.0 * s1.powi(d as i32) * 8f64.powi(s as i32) * params.rate(family),
                "84 (s+1)^d 8^s (NL)^(-2(s-1)/d)",
            )
            .with_self_norm(432.0 * sd.powi(d as i32)),
        ),
        Family::Relu2 => (
            budget::compile_relu2(n, l, s as u64, d as u64),
            BoundCertificate::new(
                NormKind::WnInf(params.order),
                "[0,1]^d \\ Omega",
                2.0 * s1.powi(d as i32) * 8f64.powi((s - params.order) as i32) * params.rate(family),
                "2 (s+1)^d 8^(s-n) (NL)^(-2(s-n)/d)",
            )
            .with_self_norm(sd.powi(d as i32)),
        ),
    };
    Ok(CompiledNetwork {
        family,
        params: CompileParams { delta: Some(delta), ..params.clone() },
        target: f.clone(),
        network,
        budget,
        certificate,
        trifling,
        table,
        step,
        matchers,
        monomials,
        product,
    })
}

fn unit_row(len: usize, i: usize) -> Vec<f64> {
    let mut r = vec![0.0; len];
    r[i] = 1.0;
    r
}

/// Closed-form error terms from the construction's analysis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormulaDiagnostics {
    /// Product-network error `216(N+1)^{−2s(L+1)}` (σ₁; 0 for σ₂).
    pub eps1: f64,
    /// Monomial error `10s(N+1)^{−7sL}` (σ₁; 0 for σ₂).
    pub eps2: f64,
    /// Coefficient quantization `2N^{−2s}L^{−2s}`.
    pub eps3: f64,
    pub e11_bound: f64,
    pub e12_bound: f64,
    pub e2_bound: f64,
}

pub fn formula_diagnostics(family: Family, p: &CompileParams, k: u64) -> FormulaDiagnostics {
    let (s, d) = (p.s as i32, p.d as i32);
    let (nf, lf, kf, sf) = (p.n as f64, p.l as f64, k as f64, p.s as f64);
    let eps3 = 2.0 * nf.powi(-2 * s) * lf.powi(-2 * s);
    match family {
        Family::Relu => {
            let eps1 = 216.0 * (nf + 1.0).powf(-2.0 * sf * (lf + 1.0));
            let eps2 = 10.0 * sf * (nf + 1.0).powf(-7.0 * sf * lf);
            FormulaDiagnostics {
                eps1,
                eps2,
                eps3,
                e11_bound: sf.powi(d) * (2.0 * eps1 + 3.0 * eps3),
                e12_bound: sf.powi(d) * (eps1 + eps2),
                e2_bound: sf.powi(d - 1) * kf.powi(-(s - 1)),
            }
        }
        Family::Relu2 => {
            let o = p.order as i32;
            FormulaDiagnostics {
                eps1: 0.0,
                eps2: 0.0,
                eps3,
                e11_bound: sf.powi(d) * eps3,
                e12_bound: 0.0,
                e2_bound: ((s - o + 1) as f64).powi(d - 1) * kf.powi(-(s - o)),
            }
        }
    }
}

/// Sample maxima of the three error sources, summed over `α` where applicable.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MeasuredDiagnostics {
    /// `Σ_α sup ‖φ̃(φ_α/α!, P_α) − φ̃(∂^α f/α!, P_α)‖` (coefficient encoding).
    pub e11: f64,
    /// `Σ_α sup ‖φ̃(∂^α f/α!, P_α) − ∂^α f/α!·h^α‖` (products and monomials).
    pub e12: f64,
    /// `sup ‖f − Σ_α ∂^α f/α!·h^α‖` (Taylor remainder).
    pub e2: f64,
    /// `max_{α,i} |φ_α(i) − ∂^α f(η(i)/K)|`.
    pub coefficient_error: f64,
    pub samples: usize,
}

/// Measure the error split on off-Ω samples, propagating jets through the sub-networks.
pub fn measure_diagnostics(c: &CompiledNetwork, grid: &GridSpec) -> Result<MeasuredDiagnostics> {
    let order = c.order();
    let d = c.params.d;
    let k = c.k();
    let space = JetSpace::new(d, order);
    let m = space.len();
    let map = cell_index_map(d, k)?;
    let coefficient_error = (0..c.table.indices.len())
        .flat_map(|a| (0..map.len).map(move |i| (a, i)))
        .map(|(a, i)| {
            let corner: Vec<f64> = map.digits(i).iter().map(|&e| e as f64 / k as f64).collect();
            (c.encoded_coefficient(a, i) - c.target.derivative(&corner, &c.table.indices[a])).abs()
        })
        .fold(0.0, f64::max);
    // a_α per cell, from the matcher networks
    let encoded: Vec<Vec<f64>> = (0..c.table.indices.len())
        .map(|a| (0..map.len).map(|i| c.encoded_coefficient(a, i) / factorial(&c.table.indices[a])).collect())
        .collect();
    let monos: Vec<SparseNet> = c.monomials.iter().map(|b| SparseNet::from_network(&b.network)).collect();
    let prod = SparseNet::from_network(&c.product.network);
    let samples = grid.clone().excluding(c.trifling.clone()).samples(None);
    let nalpha = c.table.indices.len();
    let per_sample = |x: &Vec<f64>| -> (Vec<f64>, Vec<f64>, f64) {
        let beta = c.trifling.cell(x).expect("sample off Ω");
        let corner: Vec<f64> = beta.iter().map(|&b| b as f64 / k as f64).collect();
        let hx: Vec<f64> = x.iter().zip(&corner).map(|(a, b)| a - b).collect();
        let i = map.index(&beta) as usize;
        let mut e11 = vec![0.0; nalpha];
        let mut e12 = vec![0.0; nalpha];
        let mut taylor = vec![0.0; m];
        for (ai, alpha) in c.table.indices.iter().enumerate() {
            let mjet = monos[ai].jets::<f64>(&hx, &space);
            let cval = c.target.derivative(&corner, alpha) / factorial(alpha);
            let with_coef = |v: f64| {
                let mut input = vec![0.0; 2 * m];
                input[0] = v;
                input[m..].copy_from_slice(&mjet);
                space.derivatives(&prod.jets_from::<f64>(input, &space))
            };
            let approx = with_coef(encoded[ai][i]);
            let exact_coef = with_coef(cval);
            let mono: Vec<f64> = Reference::<f64>::derivatives(&MonomialReference(alpha.clone()), &hx, &space.indices);
            e11[ai] = approx.iter().zip(&exact_coef).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            e12[ai] = exact_coef.iter().zip(&mono).map(|(a, b)| (a - cval * b).abs()).fold(0.0, f64::max);
            for (t, mv) in taylor.iter_mut().zip(&mono) {
                *t += cval * mv;
            }
        }
        let fd: Vec<f64> = space.indices.iter().map(|g| c.target.derivative(x, g)).collect();
        let e2 = fd.iter().zip(&taylor).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        (e11, e12, e2)
    };
    let zero = || (vec![0.0; nalpha], vec![0.0; nalpha], 0.0);
    let (e11, e12, e2) = samples.points.par_iter().map(per_sample).reduce(zero, |(a1, a2, a3), (b1, b2, b3)| {
        (
            a1.iter().zip(&b1).map(|(x, y)| x.max(*y)).collect(),
            a2.iter().zip(&b2).map(|(x, y)| x.max(*y)).collect(),
            a3.max(b3),
        )
    });
    Ok(MeasuredDiagnostics {
        e11: e11.iter().sum(),
        e12: e12.iter().sum(),
        e2,
        coefficient_error,
        samples: samples.points.len(),
    })
}

/// Structural size of the assembled network.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Structure {
    pub width: usize,
    pub depth: usize,
    pub neurons: usize,
}

/// Everything a certification run produces; serialized as the report JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificationReport {
    pub target: String,
    pub family: Family,
    pub params: CompileParams,
    #[serde(rename = "K")]
    pub k: u64,
    pub constructed: Structure,
    pub budget: SizeBudget,
    pub within_budget: bool,
    pub components: Vec<ComponentSize>,
    pub certificate: BoundCertificate,
    /// Off-Ω `W^{n,∞}` errors.
    pub errors: ErrorReport,
    pub self_norm_ok: bool,
    pub formula: FormulaDiagnostics,
    pub measured: MeasuredDiagnostics,
    pub wp: Option<WpReport>,
    pub pass: bool,
    pub config_hash: Option<String>,
}

/// Off-Ω sup-norm certification of a compiled network on `grid` (exclusion added here).
pub fn certify_sup(c: &CompiledNetwork, grid: &GridSpec) -> Result<ErrorReport> {
    let grid = grid.clone().excluding(c.trifling.clone());
    let rep = estimate_sup_error::<f64, _>(&c.network, &c.target, c.order(), &grid)?;
    Ok(rep.certify(c.certificate.bound_value))
}

/// Compile, certify off Ω, and measure diagnostics; `wp` adds the full-domain `W^{n,p}` check.
pub fn certify(
    family: Family,
    f: &TargetFunction,
    params: &CompileParams,
    sup_grid: &GridSpec,
    wp_points_per_axis: Option<usize>,
) -> Result<CertificationReport> {
    let c = compile(family, f, params)?;
    let errors = certify_sup(&c, sup_grid)?;
    let self_norm_ok = c.certificate.self_norm_bound.is_none_or(|b| errors.network_norm <= b);
    let cap = match sup_grid.d {
        1 => 2048,
        2 => 48,
        _ => 12,
    };
    let measured = measure_diagnostics(&c, &GridSpec { points_per_axis: sup_grid.points_per_axis.min(cap), ..sup_grid.clone() })?;
    let wp = match wp_points_per_axis {
        Some(ppa) => Some(certify_wp(&c, ppa, sup_grid.seed)?),
        None => None,
    };
    let pass = errors.passed() && self_norm_ok && wp.as_ref().is_none_or(|w| w.pass == Some(true));
    Ok(CertificationReport {
        target: f.id.clone(),
        family,
        params: c.params.clone(),
        k: c.k(),
        constructed: Structure { width: c.network.width(), depth: c.network.depth(), neurons: c.network.neuron_count() },
        budget: c.budget,
        within_budget: c.within_budget(),
        components: c.components(),
        certificate: c.certificate.clone(),
        errors,
        self_norm_ok,
        formula: c.formula_diagnostics(),
        measured,
        wp,
        pass,
        config_hash: None,
    })
}

/// Full-domain `W^{n,p}` check with δ chosen by the volume rule.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WpReport {
    pub p: f64,
    /// Off-Ω rate `(NL)^{−2(s−n)/d}`.
    pub epsilon: f64,
    /// δ solving the volume rule before rounding.
    pub delta_rule: f64,
    /// δ actually compiled with (power of two, `≤ 1/(3K)`).
    pub delta: f64,
    /// Sup bound used for `|D^α(f − φ)|` on Ω.
    pub trifling_sup_bound: f64,
    pub lp: Option<LpEstimate>,
    pub bound: f64,
    pub pass: Option<bool>,
    pub skipped: Option<String>,
}

/// Pick δ by `Kdδ·432^p ≤ ε^p` (σ₁) or `Kdδ ≤ ε^p` (σ₂), recompile, and estimate
/// `‖f − φ‖_{W^{n,p}([0,1]^d)}` against `85(s+1)^d 8^s ε` (σ₁) or `3(s+1)^d 8^{s−n} ε` (σ₂).
pub fn certify_wp(compiled: &CompiledNetwork, points_per_axis: usize, seed: u64) -> Result<WpReport> {
    let family = compiled.family;
    let params = &compiled.params;
    let p = params.p;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid(format!("p = {p} outside [1, ∞)")));
    }
    let (s, d) = (params.s as i32, params.d as i32);
    let k = compiled.k() as f64;
    let eps = params.rate(family);
    let order = compiled.order();
    let (delta_rule, self_norm, bound) = match family {
        Family::Relu => (
            eps.powf(p) / (k * d as f64 * 432f64.powf(p)),
            432.0 * (s as f64).powi(d),
            85.0 * ((s + 1) as f64).powi(d) * 8f64.powi(s) * eps,
        ),
        Family::Relu2 => (
            eps.powf(p) / (k * d as f64),
            (s as f64).powi(d),
            3.0 * ((s + 1) as f64).powi(d) * 8f64.powi(s - order as i32) * eps,
        ),
    };
    let nalpha = MultiIndex::all_up_to(params.d, order).len() as f64;
    let trifling_sup_bound = nalpha.powf(1.0 / p) * (1.0 + self_norm);
    let cap = 1.0 / (3.0 * k);
    let raw = delta_rule.min(cap);
    let delta = if raw > 0.0 { 2f64.powi(raw.log2().floor() as i32) } else { 0.0 };
    let skip = |why: String| WpReport {
        p,
        epsilon: eps,
        delta_rule,
        delta,
        trifling_sup_bound,
        lp: None,
        bound,
        pass: None,
        skipped: Some(why),
    };
    if !(delta >= 1e-300) {
        return Ok(skip(format!("δ = {delta:e} underflows (below 1e-300)")));
    }
    if params.mode == BuildMode::Direct && delta < MIN_DIRECT_DELTA {
        return Ok(skip(format!("δ = {delta:e} below the direct-mode step resolution {MIN_DIRECT_DELTA:e}")));
    }
    let recompiled = compile(family, &compiled.target, &CompileParams { delta: Some(delta), ..params.clone() })?;
    let grid = GridSpec::new(params.d, points_per_axis, seed);
    let lp = estimate_lp_error(
        &recompiled.network,
        &compiled.target,
        order,
        p,
        &grid,
        &recompiled.trifling,
        trifling_sup_bound,
    )?;
    Ok(WpReport {
        p,
        epsilon: eps,
        delta_rule,
        delta,
        trifling_sup_bound,
        lp: Some(lp),
        bound,
        pass: Some(lp.total.is_finite() && lp.total <= bound),
        skipped: None,
    })
}

/// One point of a rate sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "L")]
    pub l: u64,
    pub nl: u64,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Rate sweep with the fitted log-log slope of measured error against `NL`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    pub slope: Option<f64>,
}

pub fn sweep(family: Family, f: &TargetFunction, base: &CompileParams, sizes: &[(u64, u64)], grid: &GridSpec) -> Result<Sweep> {
    let mut points = Vec::with_capacity(sizes.len());
    for &(n, l) in sizes {
        let c = compile(family, f, &CompileParams { n, l, ..base.clone() })?;
        let rep = certify_sup(&c, grid)?;
        points.push(SweepPoint { n, l, nl: n * l, measured: rep.sup_error, bound: c.certificate.bound_value, pass: rep.passed() });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.nl as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.measured).collect();
    Ok(Sweep { slope: loglog_slope(&xs, &ys), points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::lookup;

    #[test]
    fn index_map_examples() {
        let m = cell_index_map(2, 3).unwrap();
        assert_eq!(m.digits(5), vec![2, 1]);
        assert_eq!(m.digits(0), vec![0, 0]);
        assert_eq!(m.index(&[2, 1]), 5);
        assert!(matches!(cell_index_map(2, 1 << 27), Err(Error::IndexOverflow(_))));
    }

    #[test]
    fn trifling_membership() {
        let t = TriflingSpec::new(1, 4, 0.05).unwrap();
        assert!(t.contains(&[0.24]));
        assert!(!t.contains(&[0.25]));
        assert!(!t.contains(&[0.19]));
        assert!(!t.contains(&[0.99]));
        assert_eq!(t.cell(&[0.3]), Some(vec![1]));
        assert_eq!(t.cell(&[1.0]), Some(vec![3]));
        assert!((t.volume_bound() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn relu_needs_s_above_one() {
        let f = lookup("sine-product", 1, 2).unwrap();
        let e = compile_relu(&f, &CompileParams::new(1, 1, 2, 2)).unwrap_err();
        assert!(e.to_string().contains("s > 1"));
    }

    #[test]
    fn relu2_precondition() {
        let f = lookup("sine-product", 1, 3).unwrap();
        let e = compile_relu2(&f, &CompileParams::new(3, 1, 1, 4)).unwrap_err();
        assert!(e.to_string().contains("(L − 2 − log₂N)·N ≥ s"));
    }

    #[test]
    fn constant_target_is_reproduced() {
        let f = lookup("constant", 1, 2).unwrap();
        let c = compile_relu(&f, &CompileParams::new(2, 1, 1, 1)).unwrap();
        let v = c.network.evaluate(&[0.4]).unwrap()[0];
        assert!((v - 0.3).abs() < 1e-6, "{v}");
        assert!(c.within_budget());
    }
}
