//! Empirical Sobolev-norm errors between networks and reference functions.
//!
//! Sup-norm figures are sample maxima and therefore lower bounds of the true
//! suprema; `measured ≤ bound` is the certification direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::eval::{JetSpace, SparseNet};
use crate::multi_index::MultiIndex;
use crate::network::{Family, Network};
use crate::scalar::Scalar;
use crate::targets::TargetFunction;
use crate::taylor::TriflingSpec;

/// Highest derivative order propagated by the forward-mode evaluator.
pub const MAX_ORDER: u32 = 3;

/// Exact derivatives of a reference function.
pub trait Reference<S: Scalar>: Sync {
    fn dim(&self) -> usize;
    /// `D^α f(x)` for each `α` of `indices`.
    fn derivatives(&self, x: &[S], indices: &[MultiIndex]) -> Vec<S>;
}

impl Reference<f64> for TargetFunction {
    fn dim(&self) -> usize {
        self.d
    }
    fn derivatives(&self, x: &[f64], indices: &[MultiIndex]) -> Vec<f64> {
        indices.iter().map(|a| self.derivative(x, a)).collect()
    }
}

/// Reference from a closure `(x, α) ↦ D^α f(x)`.
pub struct FnReference<F> {
    pub d: usize,
    pub f: F,
}

impl<S: Scalar, F: Fn(&[S], &MultiIndex) -> S + Sync> Reference<S> for FnReference<F> {
    fn dim(&self) -> usize {
        self.d
    }
    fn derivatives(&self, x: &[S], indices: &[MultiIndex]) -> Vec<S> {
        indices.iter().map(|a| (self.f)(x, a)).collect()
    }
}

/// Reference `x ↦ xᵅ` (exact in the scalar type).
pub struct MonomialReference(pub MultiIndex);

impl<S: Scalar> Reference<S> for MonomialReference {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn derivatives(&self, xs: &[S], indices: &[MultiIndex]) -> Vec<S> {
        indices
            .iter()
            .map(|g| match self.0.checked_sub(g) {
                None => S::zero(),
                Some(rest) => {
                    let c: f64 = self.0 .0.iter().zip(&g.0).map(|(&a, &b)| ((a - b + 1)..=a).map(f64::from).product::<f64>()).product();
                    rest.pow(xs).scale(c)
                }
            })
            .collect()
    }
}

/// Jittered midpoint grid on `[lo, hi]^d`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub points_per_axis: usize,
    /// Jitter half-width as a fraction of the spacing.
    pub jitter: f64,
    pub breakpoint_tol: f64,
    pub exclude: Option<TriflingSpec>,
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
}

/// Generated sample set.
#[derive(Clone, Debug)]
pub struct Samples {
    pub points: Vec<Vec<f64>>,
    /// Cell volume per sample.
    pub weight: f64,
    pub excluded: usize,
    pub redrawn: usize,
}

impl GridSpec {
    pub fn new(d: usize, points_per_axis: usize, seed: u64) -> GridSpec {
        GridSpec { d, points_per_axis, jitter: 0.25, breakpoint_tol: 1e-9, exclude: None, seed, lo: 0.0, hi: 1.0 }
    }

    /// Roughly `total` points in dimension `d`.
    pub fn with_total(d: usize, total: usize, seed: u64) -> GridSpec {
        let ppa = (total as f64).powf(1.0 / d as f64).round().max(1.0) as usize;
        GridSpec::new(d, ppa, seed)
    }

    pub fn on(mut self, lo: f64, hi: f64) -> GridSpec {
        self.lo = lo;
        self.hi = hi;
        self
    }

    pub fn excluding(mut self, t: TriflingSpec) -> GridSpec {
        self.exclude = Some(t);
        self
    }

    pub fn jitter(mut self, j: f64) -> GridSpec {
        self.jitter = j;
        self
    }

    pub fn total(&self) -> usize {
        self.points_per_axis.pow(self.d as u32)
    }

    /// Samples, redrawing jitter near first-layer breakpoints of `net` and
    /// dropping points inside the excluded region.
    pub fn samples(&self, net: Option<&Network>) -> Samples {
        let rows = net.map(|n| SparseNet::from_network(n).first_layer_rows()).unwrap_or_default();
        let norms: Vec<f64> = rows.iter().map(|(t, _)| t.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()).collect();
        let near_breakpoint = |x: &[f64]| {
            rows.iter().zip(&norms).any(|((terms, b), nrm)| {
                *nrm > 0.0 && {
                    let v: f64 = terms.iter().map(|(c, w)| w * x[*c]).sum::<f64>() + b;
                    v.abs() < self.breakpoint_tol * nrm
                }
            })
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.points_per_axis;
        let h = (self.hi - self.lo) / n as f64;
        let total = self.total();
        let mut points = Vec::with_capacity(total);
        let (mut excluded, mut redrawn) = (0, 0);
        let mut idx = vec![0usize; self.d];
        for _ in 0..total {
            let mut x = vec![0.0; self.d];
            for attempt in 0..16 {
                for (xi, &j) in x.iter_mut().zip(&idx) {
                    let jit = if self.jitter > 0.0 { rng.random_range(-self.jitter..self.jitter) } else { 0.0 };
                    *xi = (self.lo + (j as f64 + 0.5 + jit) * h).clamp(self.lo, self.hi);
                }
                if rows.is_empty() || !near_breakpoint(&x) || self.jitter == 0.0 {
                    break;
                }
                if attempt == 0 {
                    redrawn += 1;
                }
            }
            if self.exclude.as_ref().is_some_and(|t| t.contains(&x)) {
                excluded += 1;
            } else {
                points.push(x);
            }
            for k in 0..self.d {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
            }
        }
        Samples { points, weight: h.powi(self.d as i32), excluded, redrawn }
    }
}

/// Measured errors and verdicts.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ErrorReport {
    pub order: u32,
    /// `per_order[j]` = sample max of `max_{|α|=j} |D^α(φ − f)|`.
    pub per_order: Vec<f64>,
    /// `W^{n,∞}` estimate: max over orders.
    pub sup_error: f64,
    /// Sample max of `max_{|α|≤n} |D^α φ|`.
    pub network_norm: f64,
    pub lp_error: Option<f64>,
    pub certificate: Option<f64>,
    pub pass: Option<bool>,
    pub samples: usize,
    pub excluded: usize,
    pub redrawn: usize,
    pub note: String,
}

impl ErrorReport {
    /// Compare against a bound; positive and finite measurements are also required.
    pub fn certify(mut self, bound: f64) -> ErrorReport {
        self.certificate = Some(bound);
        self.pass = Some(self.sup_error.is_finite() && self.sup_error <= bound && self.samples > 0);
        self
    }

    pub fn passed(&self) -> bool {
        self.pass == Some(true)
    }
}

fn check_order(net: &Network, n: u32) -> Result<()> {
    if net.family() == Family::Relu && n > 1 {
        return Err(invalid(format!(
            "order {n} requested for a ReLU-only network; piecewise-linear networks support orders ≤ 1"
        )));
    }
    if n > MAX_ORDER {
        return Err(invalid(format!("order {n} exceeds the forward-mode limit {MAX_ORDER}")));
    }
    Ok(())
}

/// Deterministic fraction in `(−½, ½)` for sample `i`, coordinate `j`.
fn low_bits(i: usize, j: usize) -> f64 {
    let h = ((i as u64) << 8 | j as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// Per-sample max errors by order, and max |D^α φ|.
///
/// Wider scalar types see sample points extended below the `f64` grid, so
/// derivatives are read at generic points rather than at the dyadic
/// breakpoints every `f64` coincides with in deep sawtooth networks.
fn pointwise<S: Scalar, R: Reference<S> + ?Sized>(
    sparse: &SparseNet,
    space: &JetSpace,
    reference: &R,
    i: usize,
    x: &[f64],
) -> (Vec<f64>, f64) {
    let xs: Vec<S> = x.iter().enumerate().map(|(j, &v)| S::refine(v, low_bits(i, j))).collect();
    let d_net = sparse.derivatives_at::<S>(&xs, space);
    let d_ref = reference.derivatives(&xs, &space.indices);
    let mut per = vec![0.0f64; space.order as usize + 1];
    let mut norm = 0.0f64;
    for ((a, r), alpha) in d_net.iter().zip(&d_ref).zip(&space.indices) {
        let e = (*a - *r).abs().to_f64();
        let o = alpha.order() as usize;
        per[o] = per[o].max(if e.is_nan() { f64::INFINITY } else { e });
        norm = norm.max(a.to_f64().abs());
    }
    (per, norm)
}

/// Sample-max `W^{n,∞}` error of a scalar-output network against `reference`.
pub fn estimate_sup_error<S: Scalar, R: Reference<S> + ?Sized>(
    net: &Network,
    reference: &R,
    order: u32,
    grid: &GridSpec,
) -> Result<ErrorReport> {
    check_order(net, order)?;
    if reference.dim() != net.input_dim || grid.d != net.input_dim {
        return Err(crate::error::Error::DimensionMismatch { expected: net.input_dim, got: reference.dim() });
    }
    let sparse = SparseNet::from_network(net);
    let space = JetSpace::new(net.input_dim, order);
    let samples = grid.samples(Some(net));
    let (per, norm) = samples
        .points
        .par_iter()
        .enumerate()
        .map(|(i, x)| pointwise::<S, R>(&sparse, &space, reference, i, x))
        .reduce(
            || (vec![0.0; order as usize + 1], 0.0),
            |(a, na), (b, nb)| (a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(), na.max(nb)),
        );
    let sup = per.iter().copied().fold(0.0, f64::max);
    Ok(ErrorReport {
        order,
        per_order: per,
        sup_error: sup,
        network_norm: norm,
        samples: samples.points.len(),
        excluded: samples.excluded,
        redrawn: samples.redrawn,
        note: "sample maxima: lower bounds of the true sup norms".into(),
        ..Default::default()
    })
}

/// Split `W^{n,p}` estimate.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct LpEstimate {
    /// `Σ_α ∫_{off Ω} |D^α(φ − f)|^p` by jittered midpoint quadrature.
    pub off_omega: f64,
    /// `vol(Ω)·bound^p ≤ Kdδ·bound^p`.
    pub omega: f64,
    /// `(off_omega + omega)^{1/p}`.
    pub total: f64,
}

/// `‖φ − f‖_{W^{n,p}([0,1]^d)}`: quadrature off Ω, analytic volume bound on Ω.
pub fn estimate_lp_error<R: Reference<f64> + ?Sized>(
    net: &Network,
    reference: &R,
    order: u32,
    p: f64,
    grid: &GridSpec,
    trifling: &TriflingSpec,
    sup_bound_on_trifling: f64,
) -> Result<LpEstimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid(format!("p = {p} outside [1, ∞)")));
    }
    check_order(net, order)?;
    let grid = grid.clone().excluding(trifling.clone());
    let sparse = SparseNet::from_network(net);
    let space = JetSpace::new(net.input_dim, order);
    let samples = grid.samples(Some(net));
    // collected in order and summed sequentially so results do not depend on the thread count
    let terms: Vec<f64> = samples
        .points
        .par_iter()
        .map(|x| {
            let dn = sparse.derivatives::<f64>(x, &space);
            let dr = reference.derivatives(x, &space.indices);
            dn.iter().zip(&dr).map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>()
        })
        .collect();
    let sum: f64 = terms.iter().sum();
    let off = sum * samples.weight;
    let omega = trifling.volume_bound() * sup_bound_on_trifling.powf(p);
    Ok(LpEstimate { off_omega: off, omega, total: (off + omega).powf(1.0 / p) })
}

/// One results row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub label: String,
    pub s: u32,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "L")]
    pub l: u64,
    #[serde(rename = "n")]
    pub order: u32,
    pub p: String,
    pub mode: String,
    pub constructed_width: usize,
    pub constructed_depth: usize,
    pub paper_width: u64,
    pub paper_depth: u64,
    pub bound: f64,
    pub measured: f64,
    pub pass: bool,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::build_exact_square;

    #[test]
    fn grid_points_are_inside_and_deterministic() {
        let g = GridSpec::new(2, 10, 7);
        let a = g.samples(None);
        let b = g.samples(None);
        assert_eq!(a.points, b.points);
        assert_eq!(a.points.len(), 100);
        assert!(a.points.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn exclusion_drops_trifling_points() {
        let t = TriflingSpec::new(1, 4, 1.0 / 12.0).unwrap();
        let s = GridSpec::new(1, 1200, 1).excluding(t.clone()).samples(None);
        assert!(s.points.iter().all(|x| !t.contains(x)));
        assert!(s.excluded > 0);
    }

    #[test]
    fn exact_square_has_no_error() {
        let net = build_exact_square();
        let r = FnReference { d: 1, f: |x: &[f64], a: &MultiIndex| -> f64 { match a.order() {
            0 => x[0] * x[0],
            1 => 2.0 * x[0],
            2 => 2.0,
            _ => 0.0,
        } } };
        let rep = estimate_sup_error::<f64, _>(&net, &r, 3, &GridSpec::new(1, 1000, 3)).unwrap();
        assert!(rep.sup_error <= 1e-12);
    }

    #[test]
    fn relu_order_guard() {
        let net = crate::primitives::build_sawtooth_square(1, 1).unwrap().network;
        let r = MonomialReference(MultiIndex::new(vec![2]));
        let e = estimate_sup_error::<f64, _>(&net, &r, 2, &GridSpec::new(1, 10, 0)).unwrap_err();
        assert!(e.to_string().contains("ReLU-only"));
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-2.0)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 2.0).abs() < 1e-12);
    }
}
