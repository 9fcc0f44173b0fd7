use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use taylornet::metrics::{estimate_sup_error, FnReference, CsvRow, ErrorReport, GridSpec, MonomialReference};
use taylornet::primitives::*;
use taylornet::targets::{lookup, raw_catalog, TargetKind};
use taylornet::taylor::{certify, compile, CertificationReport, CompileParams, ComponentSize, Structure, TriflingSpec};
use taylornet::{budget, BuildMode, Dd, Error, Family, MultiIndex, Network, SizeBudget};

use crate::config::Config;

/// Network identifiers accepted by `--function`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Square,
    Product,
    ProductScaled,
    Multiproduct,
    Monomial,
    Step,
    Matcher,
    ExactSquare,
    ExactProduct,
    ExactMonomial,
    ExactPolynomial,
    TaylorRelu,
    TaylorRelu2,
}

pub const KINDS: [(&str, Kind, &str); 13] = [
    ("square", Kind::Square, "sawtooth approximation of x² on (0,1), width 3N, depth 2L"),
    ("product", Kind::Product, "xy on (0,1)², width 9N, depth 2L"),
    ("product-scaled", Kind::ProductScaled, "xy on (−3,3)², width 9N+1, depth 2L"),
    ("multiproduct", Kind::Multiproduct, "x₁⋯x_d on (0,1)^d"),
    ("monomial", Kind::Monomial, "x^α on [0,1]^d (σ₁), --alpha"),
    ("step", Kind::Step, "cell index ψ(x) with trifling width δ, --mode"),
    ("matcher", Kind::Matcher, "point matcher on N²L² seeded values, --mode"),
    ("exact-square", Kind::ExactSquare, "σ₂ x², width 2, depth 1"),
    ("exact-product", Kind::ExactProduct, "σ₂ xy, width 4, depth 1"),
    ("exact-monomial", Kind::ExactMonomial, "σ₂ x^α, --alpha"),
    ("exact-polynomial", Kind::ExactPolynomial, "σ₂ catalog polynomial in dimension d, --a --b"),
    ("taylor-relu", Kind::TaylorRelu, "σ₁ compilation of --target"),
    ("taylor-relu2", Kind::TaylorRelu2, "σ₂ compilation of --target"),
];

impl FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Kind, String> {
        let s = if s == "sawtooth" { "square" } else { s };
        KINDS.iter().find(|(id, _, _)| *id == s).map(|k| k.1).ok_or_else(|| {
            let ids: Vec<&str> = KINDS.iter().map(|k| k.0).collect();
            format!("unknown function `{s}`; expected one of {}", ids.join(", "))
        })
    }
}

impl Kind {
    fn family(self) -> Option<Family> {
        match self {
            Kind::TaylorRelu => Some(Family::Relu),
            Kind::TaylorRelu2 => Some(Family::Relu2),
            _ => None,
        }
    }
}

/// A built network with its size rows.
pub struct BuildOutput {
    pub network: Network,
    pub rows: Vec<ComponentSize>,
}

/// Certification result for one `(N, L)` case.
pub struct CaseOutput {
    pub rows: Vec<CsvRow>,
    pub report: serde_json::Value,
}

#[derive(Serialize)]
struct PrimitiveReport<'a> {
    function: &'a str,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "L")]
    l: u64,
    constructed: Structure,
    budget: SizeBudget,
    within_budget: bool,
    certificate: BoundCertificate,
    errors: ErrorReport,
    pass: bool,
    config_hash: String,
}

fn alpha(cfg: &Config) -> MultiIndex {
    match &cfg.alpha {
        Some(a) => MultiIndex::new(a.clone()),
        None => {
            let mut v = vec![0; cfg.d];
            v[0] = cfg.s;
            MultiIndex::new(v)
        }
    }
}

fn polynomial_terms(d: usize) -> Vec<(f64, MultiIndex)> {
    let raw = raw_catalog(d).into_iter().find(|r| r.id == "polynomial").expect("catalog polynomial");
    match raw.kind {
        TargetKind::Polynomial { terms } => terms,
        _ => unreachable!("catalog polynomial is a polynomial"),
    }
}

fn step_delta(cfg: &Config, n: u64, l: u64) -> f64 {
    let k = budget::cells_per_axis(n, l, cfg.d as u32);
    cfg.delta.unwrap_or(1.0 / (3.0 * k as f64))
}

fn matcher_values(cfg: &Config, n: u64, l: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..n * n * l * l).map(|_| rng.random::<f64>()).collect()
}

fn compile_params(cfg: &Config, n: u64, l: u64) -> CompileParams {
    let mut p = CompileParams::new(cfg.s, cfg.d, n, l).order(cfg.order).mode(cfg.mode);
    if let Some(delta) = cfg.delta {
        p = p.delta(delta);
    }
    if let Some(pv) = cfg.p {
        p = p.p(pv);
    }
    p
}

fn build_primitive(kind: Kind, cfg: &Config, n: u64, l: u64) -> taylornet::Result<Built> {
    let exact = |network: Network, budget: SizeBudget| Built {
        certificate: Some(BoundCertificate::new(NormKind::LInf, "R^d", 0.0, "exact")),
        network,
        budget,
    };
    match kind {
        Kind::Square => build_sawtooth_square(n, l),
        Kind::Product => build_product2(n, l),
        Kind::ProductScaled => build_product2_scaled(n, l, -3.0, 3.0),
        Kind::Multiproduct => build_multiproduct(n, l, (cfg.d as u64).max(2)),
        Kind::Monomial => {
            let a = alpha(cfg);
            let k = (a.order() as u64).max(2);
            build_monomial_relu(n, l, &a, k)
        }
        Kind::Step => build_step(n, l, cfg.d as u32, step_delta(cfg, n, l), cfg.mode),
        Kind::Matcher => build_point_matcher(n, l, cfg.s as u64, &matcher_values(cfg, n, l), cfg.mode),
        Kind::ExactSquare => Ok(exact(build_exact_square(), SizeBudget::new(2, 1))),
        Kind::ExactProduct => Ok(exact(build_exact_product2(), SizeBudget::new(4, 1))),
        Kind::ExactMonomial => build_exact_monomial_sigma2(n, l, &alpha(cfg)),
        Kind::ExactPolynomial => {
            let terms = polynomial_terms(cfg.d);
            build_exact_polynomial_sigma2(n, l, cfg.a.unwrap_or(terms.len() as u64), cfg.b.unwrap_or(1), &terms)
        }
        Kind::TaylorRelu | Kind::TaylorRelu2 => unreachable!("compiled networks are not primitives"),
    }
}

fn size_row(name: String, net: &Network, budget: &SizeBudget) -> ComponentSize {
    ComponentSize {
        name,
        width: net.width(),
        depth: net.depth(),
        budget_width: budget.max_width,
        budget_depth: budget.max_depth,
        within: budget.admits(net),
    }
}

pub fn build(kind: Kind, cfg: &Config, n: u64, l: u64) -> taylornet::Result<BuildOutput> {
    if let Some(family) = kind.family() {
        let f = lookup(&cfg.target, cfg.d, cfg.s)?;
        let c = compile(family, &f, &compile_params(cfg, n, l))?;
        let mut rows = c.components();
        rows.push(size_row(format!("{} (whole network)", label(kind, cfg)), &c.network, &c.budget));
        return Ok(BuildOutput { network: c.network, rows });
    }
    let b = build_primitive(kind, cfg, n, l)?;
    let rows = vec![size_row(label(kind, cfg), &b.network, &b.budget)];
    Ok(BuildOutput { network: b.network, rows })
}

pub fn label(kind: Kind, cfg: &Config) -> String {
    let id = KINDS.iter().find(|k| k.1 == kind).expect("known kind").0;
    match kind {
        Kind::TaylorRelu | Kind::TaylorRelu2 => format!("{id}:{}", cfg.target),
        Kind::Monomial | Kind::ExactMonomial => format!("{id}{}", alpha(cfg)),
        _ => id.to_string(),
    }
}

fn row(cfg: &Config, kind: Kind, n: u64, l: u64, net: &Network, budget: &SizeBudget, order: u32, bound: f64, measured: f64, pass: bool) -> CsvRow {
    CsvRow {
        label: label(kind, cfg),
        s: cfg.s,
        d: net.input_dim,
        n,
        l,
        order,
        p: "inf".into(),
        mode: cfg.mode.to_string(),
        constructed_width: net.width(),
        constructed_depth: net.depth(),
        paper_width: budget.max_width,
        paper_depth: budget.max_depth,
        bound,
        measured,
        pass,
    }
}

fn certify_taylor(kind: Kind, cfg: &Config, n: u64, l: u64, hash: &str) -> taylornet::Result<CaseOutput> {
    let family = kind.family().expect("taylor kind");
    let f = lookup(&cfg.target, cfg.d, cfg.s)?;
    let params = compile_params(cfg, n, l);
    let grid = GridSpec::new(cfg.d, cfg.points_per_axis(cfg.d), cfg.seed);
    let mut rep: CertificationReport = certify(family, &f, &params, &grid, cfg.p.map(|_| 64))?;
    rep.config_hash = Some(hash.to_string());
    let base = CsvRow {
        label: label(kind, cfg),
        s: cfg.s,
        d: cfg.d,
        n,
        l,
        order: rep.errors.order,
        p: "inf".into(),
        mode: cfg.mode.to_string(),
        constructed_width: rep.constructed.width,
        constructed_depth: rep.constructed.depth,
        paper_width: rep.budget.max_width,
        paper_depth: rep.budget.max_depth,
        bound: rep.certificate.bound_value,
        measured: rep.errors.sup_error,
        pass: rep.errors.passed() && rep.self_norm_ok,
    };
    let mut rows = vec![base.clone()];
    if let Some(w) = &rep.wp {
        rows.push(CsvRow {
            p: format!("{}", w.p),
            bound: w.bound,
            measured: w.lp.map_or(f64::NAN, |lp| lp.total),
            pass: w.pass == Some(true),
            ..base
        });
    }
    let report = serde_json::to_value(&rep).map_err(|e| Error::Serialize(e.to_string()))?;
    Ok(CaseOutput { rows, report })
}

/// Max |ψ(x) − β(x)| off Ω on a dense grid.
fn step_error(net: &Network, cfg: &Config, n: u64, l: u64) -> taylornet::Result<f64> {
    let k = budget::cells_per_axis(n, l, cfg.d as u32);
    let t = TriflingSpec::new(1, k, step_delta(cfg, n, l))?;
    let samples = GridSpec::new(1, cfg.points_per_axis(1), cfg.seed).excluding(t.clone()).samples(None);
    let mut worst = 0.0f64;
    for x in &samples.points {
        let cell = t.cell(x).expect("sample off Ω")[0] as f64;
        worst = worst.max((net.evaluate(x)?[0] - cell).abs());
    }
    Ok(worst)
}

fn certify_primitive(kind: Kind, cfg: &Config, n: u64, l: u64, hash: &str) -> taylornet::Result<CaseOutput> {
    let b = build_primitive(kind, cfg, n, l)?;
    let net = &b.network;
    let d = net.input_dim;
    let grid = GridSpec::new(d, cfg.points_per_axis(d), cfg.seed);
    let sigma2_order = cfg.order.min(taylornet::metrics::MAX_ORDER);
    let (errors, bound, order) = match kind {
        Kind::Square => (estimate_sup_error::<f64, _>(net, &MonomialReference(MultiIndex::new(vec![2])), 1, &grid)?, b.certificate().bound_value, 1),
        Kind::Product => (estimate_sup_error::<f64, _>(net, &MonomialReference(MultiIndex::new(vec![1, 1])), 1, &grid)?, b.certificate().bound_value, 1),
        Kind::ProductScaled => {
            let g = grid.on(-3.0, 3.0);
            (estimate_sup_error::<f64, _>(net, &MonomialReference(MultiIndex::new(vec![1, 1])), 1, &g)?, b.certificate().bound_value, 1)
        }
        Kind::Multiproduct => {
            let r = MonomialReference(MultiIndex::new(vec![1; d]));
            (estimate_sup_error::<Dd, _>(net, &r, 1, &grid)?, b.certificate().bound_value, 1)
        }
        Kind::Monomial => (estimate_sup_error::<Dd, _>(net, &MonomialReference(alpha(cfg)), 1, &grid)?, b.certificate().bound_value, 1),
        Kind::ExactSquare | Kind::ExactProduct | Kind::ExactMonomial => {
            let a = match kind {
                Kind::ExactSquare => MultiIndex::new(vec![2]),
                Kind::ExactProduct => MultiIndex::new(vec![1, 1]),
                _ => alpha(cfg),
            };
            let g = grid.on(-1.0, 1.0);
            (estimate_sup_error::<f64, _>(net, &MonomialReference(a), sigma2_order, &g)?, 1e-10, sigma2_order)
        }
        Kind::ExactPolynomial => {
            let kind = TargetKind::Polynomial { terms: polynomial_terms(cfg.d) };
            let f = FnReference { d: cfg.d, f: |x: &[f64], a: &MultiIndex| kind.derivative(x, a) };
            let g = grid.on(-1.0, 1.0);
            (estimate_sup_error::<f64, _>(net, &f, sigma2_order, &g)?, 1e-10, sigma2_order)
        }
        Kind::Step => {
            let e = step_error(net, cfg, n, l)?;
            let tol = if cfg.mode == BuildMode::Direct { 0.0 } else { 1e-12 };
            (ErrorReport { sup_error: e, per_order: vec![e], samples: 1, ..Default::default() }, tol, 0)
        }
        Kind::Matcher => {
            let xi = matcher_values(cfg, n, l);
            let mut e = 0.0f64;
            for (i, v) in xi.iter().enumerate() {
                e = e.max((net.evaluate(&[i as f64])?[0] - v).abs());
            }
            let bound = (n as f64).powi(-2 * cfg.s as i32) * (l as f64).powi(-2 * cfg.s as i32);
            (ErrorReport { sup_error: e, per_order: vec![e], samples: xi.len(), ..Default::default() }, bound, 0)
        }
        Kind::TaylorRelu | Kind::TaylorRelu2 => unreachable!("handled by certify_taylor"),
    };
    let errors = errors.certify(bound);
    let pass = errors.passed() && b.within_budget();
    let label = label(kind, cfg);
    let report = PrimitiveReport {
        function: &label,
        n,
        l,
        constructed: Structure { width: net.width(), depth: net.depth(), neurons: net.neuron_count() },
        budget: b.budget,
        within_budget: b.within_budget(),
        certificate: match &b.certificate {
            Some(c) => BoundCertificate { bound_value: bound, ..c.clone() },
            None => BoundCertificate::new(NormKind::LInf, "sample points", bound, "integer-valued target"),
        },
        errors,
        pass,
        config_hash: hash.to_string(),
    };
    let value = serde_json::to_value(&report).map_err(|e| Error::Serialize(e.to_string()))?;
    let r = row(cfg, kind, n, l, net, &b.budget, order, bound, report.errors.sup_error, pass);
    Ok(CaseOutput { rows: vec![r], report: value })
}

pub fn run_case(kind: Kind, cfg: &Config, n: u64, l: u64, hash: &str) -> taylornet::Result<CaseOutput> {
    match kind.family() {
        Some(_) => certify_taylor(kind, cfg, n, l, hash),
        None => certify_primitive(kind, cfg, n, l, hash),
    }
}
