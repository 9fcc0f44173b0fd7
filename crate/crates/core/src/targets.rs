//! Smooth test functions with analytic derivatives and certified sup-norm bounds.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{invalid, Error, Result};
use crate::multi_index::{binomial, MultiIndex};

/// Analytic family of a target; values are before the scale factor `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TargetKind {
    /// `Π sin(xᵢ + aᵢ)`.
    SineProduct { shifts: Vec<f64> },
    /// `exp(−Σ(xᵢ − 1/2)²)`.
    Gaussian,
    /// `Σ c_β x^β`.
    Polynomial { terms: Vec<(f64, MultiIndex)> },
    Constant { value: f64 },
    /// `sin(x)/(1+x)`, one-dimensional.
    SinRatio,
}

/// Unscaled function data with analytic derivative bounds on `[0,1]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawFunction {
    pub id: String,
    pub d: usize,
    pub kind: TargetKind,
}

/// `c · raw` with `‖∂^α f‖_∞ ≤ certified_bound < 1` for all `|α| ≤ s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetFunction {
    pub id: String,
    pub d: usize,
    pub s: u32,
    pub scale: f64,
    pub kind: TargetKind,
    pub certified_bound: f64,
    pub derivation: String,
}

/// Coefficients of the physicists' Hermite polynomial `H_m`, lowest degree first.
fn hermite(m: u32) -> Vec<f64> {
    let mut prev = vec![1.0];
    if m == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 2.0];
    for k in 1..m {
        let mut next = vec![0.0; cur.len() + 1];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] += 2.0 * c;
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] -= 2.0 * k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn poly_eval(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

fn falling(b: u32, a: u32) -> f64 {
    ((b - a + 1)..=b).map(f64::from).product()
}

impl TargetKind {
    pub fn derivative(&self, x: &[f64], alpha: &MultiIndex) -> f64 {
        match self {
            TargetKind::SineProduct { shifts } => x
                .iter()
                .zip(shifts)
                .zip(&alpha.0)
                .map(|((xi, a), &m)| (xi + a + m as f64 * FRAC_PI_2).sin())
                .product(),
            TargetKind::Gaussian => x
                .iter()
                .zip(&alpha.0)
                .map(|(xi, &m)| {
                    let u = xi - 0.5;
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    sign * poly_eval(&hermite(m), u) * (-u * u).exp()
                })
                .product(),
            TargetKind::Polynomial { terms } => terms
                .iter()
                .filter_map(|(c, beta)| {
                    let rest = beta.checked_sub(alpha)?;
                    let coef: f64 = beta.0.iter().zip(&alpha.0).map(|(&b, &a)| falling(b, a)).product();
                    Some(c * coef * rest.pow(x))
                })
                .sum(),
            TargetKind::Constant { value } => {
                if alpha.order() == 0 {
                    *value
                } else {
                    0.0
                }
            }
            TargetKind::SinRatio => {
                let n = alpha.0[0];
                let t = x[0];
                (0..=n)
                    .map(|j| {
                        let r = n - j;
                        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                        binomial(n, j)
                            * (t + j as f64 * FRAC_PI_2).sin()
                            * sign
                            * falling(r, r)
                            * (1.0 + t).powi(-(r as i32) - 1)
                    })
                    .sum()
            }
        }
    }

    /// Analytic (triangle-inequality) bound on `‖∂^α raw‖_{L∞([0,1]^d)}`.
    pub fn derivative_bound(&self, alpha: &MultiIndex) -> f64 {
        match self {
            TargetKind::SineProduct { .. } => 1.0,
            TargetKind::Gaussian => alpha
                .0
                .iter()
                .map(|&m| hermite(m).iter().enumerate().map(|(j, c)| c.abs() * 0.5f64.powi(j as i32)).sum::<f64>())
                .product(),
            TargetKind::Polynomial { terms } => terms
                .iter()
                .filter(|(_, beta)| beta.checked_sub(alpha).is_some())
                .map(|(c, beta)| c.abs() * beta.0.iter().zip(&alpha.0).map(|(&b, &a)| falling(b, a)).product::<f64>())
                .sum(),
            TargetKind::Constant { value } => {
                if alpha.order() == 0 {
                    value.abs()
                } else {
                    0.0
                }
            }
            TargetKind::SinRatio => {
                let n = alpha.0[0];
                (0..=n).map(|j| binomial(n, j) * falling(n - j, n - j)).sum()
            }
        }
    }
}

impl RawFunction {
    pub fn new(id: &str, d: usize, kind: TargetKind) -> Result<RawFunction> {
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        match &kind {
            TargetKind::SineProduct { shifts } if shifts.len() != d => {
                return Err(invalid("sine product needs one shift per coordinate"))
            }
            TargetKind::Polynomial { terms } if terms.iter().any(|t| t.1.dim() != d) => {
                return Err(invalid("polynomial term dimension mismatch"))
            }
            TargetKind::SinRatio if d != 1 => return Err(invalid("sin-ratio is one-dimensional")),
            _ => {}
        }
        Ok(RawFunction { id: id.into(), d, kind })
    }

    pub fn derivative(&self, x: &[f64], alpha: &MultiIndex) -> f64 {
        self.kind.derivative(x, alpha)
    }

    /// Analytic (triangle-inequality) bound on `‖∂^α raw‖_{L∞([0,1]^d)}`.
    pub fn derivative_bound(&self, alpha: &MultiIndex) -> f64 {
        self.kind.derivative_bound(alpha)
    }

    fn max_bound(&self, s: u32) -> f64 {
        MultiIndex::all_up_to(self.d, s).iter().map(|a| self.derivative_bound(a)).fold(0.0, f64::max)
    }
}

/// Multiply by `c = min(1, 0.95 / max_{|α|≤s} bound_α)` so the hypothesis `‖∂^α f‖ < 1` holds.
pub fn rescale_to_unit_ball(raw: RawFunction, s: u32) -> Result<TargetFunction> {
    let m = raw.max_bound(s);
    if !m.is_finite() {
        return Err(invalid(format!("`{}`: derivative bounds are not finite", raw.id)));
    }
    let c = if m > 0.0 { (0.95 / m).min(1.0) } else { 1.0 };
    let derivation = format!("max_(|a|<={s}) analytic bound = {m:.6}; scale c = min(1, 0.95/max) = {c:.6}");
    Ok(TargetFunction { id: raw.id, d: raw.d, s, scale: c, kind: raw.kind, certified_bound: c * m, derivation })
}

/// Fixed scale `c`; rejected unless `c·max bound < 1`.
pub fn with_scale(raw: RawFunction, s: u32, c: f64) -> Result<TargetFunction> {
    let m = raw.max_bound(s);
    let b = c.abs() * m;
    if !(b < 1.0) {
        return Err(invalid(format!("`{}`: scaled bound {b} is not below 1", raw.id)));
    }
    let derivation = format!("max_(|a|<={s}) analytic bound = {m:.6}; fixed scale c = {c}");
    Ok(TargetFunction { id: raw.id, d: raw.d, s, scale: c, kind: raw.kind, certified_bound: b, derivation })
}

impl TargetFunction {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.derivative(x, &MultiIndex::zero(self.d))
    }

    /// `∂^α f(x)`.
    pub fn derivative(&self, x: &[f64], alpha: &MultiIndex) -> f64 {
        self.scale * self.kind.derivative(x, alpha)
    }

    pub fn derivative_bound(&self, alpha: &MultiIndex) -> f64 {
        self.scale.abs() * self.kind.derivative_bound(alpha)
    }
}

/// Raw definitions behind the catalog identifiers.
pub fn raw_catalog(d: usize) -> Vec<RawFunction> {
    let mut out = vec![
        RawFunction::new("sine-product", d, TargetKind::SineProduct { shifts: (0..d).map(|i| 0.3 + 0.2 * i as f64).collect() }),
        RawFunction::new("gaussian", d, TargetKind::Gaussian),
        RawFunction::new("polynomial", d, TargetKind::Polynomial { terms: catalog_polynomial(d) }),
        RawFunction::new("constant", d, TargetKind::Constant { value: 0.3 }),
    ];
    if d == 1 {
        out.push(RawFunction::new("half-sine", 1, TargetKind::SineProduct { shifts: vec![0.0] }));
        out.push(RawFunction::new("sin-ratio", 1, TargetKind::SinRatio));
    }
    out.into_iter().map(|r| r.expect("catalog entries are well formed")).collect()
}

fn catalog_polynomial(d: usize) -> Vec<(f64, MultiIndex)> {
    let mut terms = vec![(0.4, MultiIndex::new({
        let mut v = vec![0; d];
        v[0] = 2;
        v
    }))];
    if d >= 2 {
        let mut v = vec![0; d];
        v[0] = 1;
        v[1] = 1;
        terms.push((-0.25, MultiIndex::new(v)));
    }
    terms.push((0.2, MultiIndex::unit(d, d - 1)));
    terms.push((0.1, MultiIndex::zero(d)));
    terms
}

/// Catalog identifiers available in dimension `d`.
pub fn catalog_ids(d: usize) -> Vec<String> {
    raw_catalog(d).into_iter().map(|r| r.id).collect()
}

/// All catalog targets for dimension `d` and smoothness `s`.
pub fn catalog(d: usize, s: u32) -> Vec<TargetFunction> {
    catalog_ids(d).iter().map(|id| lookup(id, d, s).expect("catalog id")).collect()
}

/// Look a target up by identifier.
pub fn lookup(id: &str, d: usize, s: u32) -> Result<TargetFunction> {
    let raw = raw_catalog(d).into_iter().find(|r| r.id == id).ok_or_else(|| Error::UnknownTarget(id.into()))?;
    match id {
        "half-sine" => with_scale(raw, s, 0.5),
        "constant" => with_scale(raw, s, 1.0),
        _ => rescale_to_unit_ball(raw, s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_recurrence() {
        assert_eq!(hermite(2), vec![-2.0, 0.0, 4.0]);
        assert_eq!(hermite(3), vec![0.0, -12.0, 0.0, 8.0]);
    }

    #[test]
    fn constant_has_vanishing_derivatives() {
        let f = lookup("constant", 2, 3).unwrap();
        assert_eq!(f.value(&[0.2, 0.9]), 0.3);
        assert_eq!(f.derivative(&[0.2, 0.9], &MultiIndex::new(vec![1, 0])), 0.0);
        assert!(f.certified_bound < 1.0);
    }

    #[test]
    fn half_sine_fourth_derivative() {
        let f = lookup("half-sine", 1, 4).unwrap();
        let x = 0.7;
        assert!((f.derivative(&[x], &MultiIndex::new(vec![4])) - 0.5 * x.sin()).abs() < 1e-15);
        assert_eq!(f.certified_bound, 0.5);
    }

    #[test]
    fn sine_rescales_to_095() {
        let raw = RawFunction::new("sin", 1, TargetKind::SineProduct { shifts: vec![0.0] }).unwrap();
        let f = rescale_to_unit_ball(raw, 3).unwrap();
        assert_eq!(f.scale, 0.95);
    }

    #[test]
    fn small_functions_are_left_alone() {
        let raw = RawFunction::new("c", 1, TargetKind::Constant { value: 0.1 }).unwrap();
        assert_eq!(rescale_to_unit_ball(raw, 2).unwrap().scale, 1.0);
    }

    #[test]
    fn unknown_id() {
        assert!(matches!(lookup("nope", 1, 2), Err(Error::UnknownTarget(_))));
        assert!(with_scale(RawFunction::new("s", 1, TargetKind::Gaussian).unwrap(), 2, 1.0).is_err());
    }
}
