use serde::{Deserialize, Serialize};

use crate::budget;
use crate::builder::{Lin, NetBuilder};
use crate::error::{invalid, Result};
use crate::network::SizeBudget;

use super::Built;

/// `Direct`: exact, two-layer (step) / three-layer (matcher) constructions with
/// data-dependent width. `Budget`: deeper constructions that fit the stated
/// width/depth formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuildMode {
    #[default]
    Direct,
    Budget,
}

impl std::str::FromStr for BuildMode {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(BuildMode::Direct),
            "budget" => Ok(BuildMode::Budget),
            other => Err(invalid(format!("unknown mode `{other}` (expected direct|budget)"))),
        }
    }
}

impl std::fmt::Display for BuildMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BuildMode::Direct => "direct",
            BuildMode::Budget => "budget",
        })
    }
}

/// Grid on which direct-mode ramp endpoints are placed.
const RAMP_GRID: f64 = 1.0 / (1u64 << 50) as f64;
/// Smallest δ the direct-mode step resolves exactly.
pub const MIN_DIRECT_DELTA: f64 = 1.0 / (1u64 << 45) as f64;

/// `ψ(x) = k` on `[k/K, (k+1)/K − δ·1_{k<K−1}]`, `K = ⌊N^{1/d}⌋²⌊L^{2/d}⌋`.
pub fn build_step(n: u64, l: u64, d: u32, delta: f64, mode: BuildMode) -> Result<Built> {
    if n == 0 || l == 0 || d == 0 {
        return Err(invalid("N, L and d must be positive"));
    }
    let k_cells = budget::cells_per_axis(n, l, d);
    if k_cells == 0 {
        return Err(invalid("K must be at least 1"));
    }
    let dmax = 1.0 / (3.0 * k_cells as f64);
    if !(delta > 0.0 && delta <= dmax) {
        return Err(invalid(format!("delta = {delta} outside (0, 1/(3K)] with K = {k_cells}")));
    }
    let built = match mode {
        BuildMode::Direct => step_direct(k_cells, delta)?,
        BuildMode::Budget => step_budget(n, l, d, delta),
    };
    Ok(built)
}

fn step_direct(k_cells: u64, delta: f64) -> Result<Built> {
    if delta < MIN_DIRECT_DELTA {
        return Err(invalid(format!("delta = {delta:e} below direct-mode resolution {MIN_DIRECT_DELTA:e}")));
    }
    let kf = k_cells as f64;
    // largest power of two ≤ δ/2
    let dp = 2f64.powi((delta / 2.0).log2().floor() as i32);
    let mut b = NetBuilder::new(1);
    let x = b.input(0);
    let mut ramps = Vec::new();
    for k in 1..k_cells {
        let lo = k as f64 / kf - delta;
        let a = ((lo / RAMP_GRID).ceil() + 1.0) * RAMP_GRID;
        let bk = a + dp;
        debug_assert!(bk < k as f64 / kf);
        let p = b.relu(x.shifted(-a));
        let q = b.relu(x.shifted(-bk));
        ramps.push(p.minus(&q).scaled(1.0 / dp));
    }
    if k_cells == 1 {
        ramps.push(b.relu(x.scaled(0.0)));
    }
    b.end_layer();
    // each clamp is summed in isolation so saturated values are exactly 0 or 1
    let mut out = Lin::constant(0.0);
    for r in &ramps {
        out = out.plus(&b.relu(r.clone()));
    }
    b.end_layer();
    let net = b.finish(&[out], "step-direct").with_note("K", k_cells).with_note("delta", delta).with_note("mode", "direct");
    Ok(Built { network: net, budget: SizeBudget::new(2 * k_cells, 2), certificate: None })
}

/// Ramp indicator of `r ≥ c` whose transition sits inside `(c − w, c)`.
fn indicator(b: &mut NetBuilder, r: &Lin, c: f64, w: f64) -> Lin {
    let p = b.relu(r.shifted(-c + 0.75 * w));
    let q = b.relu(r.shifted(-c + 0.25 * w));
    p.minus(&q).scaled(2.0 / w)
}

fn step_budget(n: u64, l: u64, d: u32, delta: f64) -> Built {
    let nn = budget::int_root_floor(n, d);
    let m = budget::int_root_floor(l * l, d);
    let k_cells = nn * nn * m;
    // ramp width in t = Kx units: a power of two inside the trifling width Kδ keeps
    // saturated ramp differences exact
    let w = 2f64.powi((k_cells as f64 * delta).log2().floor() as i32);
    let mut b = NetBuilder::new(1);
    let mut r = b.input(0).scaled(k_cells as f64);
    let mut idx = Lin::constant(0.0);
    let mut any = false;
    // clip Kx at K − w so the top cell never reaches the threshold K
    let kw = k_cells as f64 - w;
    let clip = |b: &mut NetBuilder, r: &Lin, any: bool| if any { None } else { Some(b.relu(r.shifted(-kw))) };
    // two radix-nn levels with place values nn·m and m
    for place in [nn * m, m] {
        if nn <= 1 {
            break;
        }
        let mut count = Lin::constant(0.0);
        for j in 1..nn {
            let ind = indicator(&mut b, &r, (j * place) as f64, w);
            count = count.plus(&ind);
        }
        let rc = b.relu(r.clone());
        let ic = if any { b.relu(idx.clone()) } else { Lin::constant(0.0) };
        let top = clip(&mut b, &r, any);
        b.end_layer();
        any = true;
        r = rc.plus_scaled(&count, -(place as f64));
        if let Some(t) = top {
            r = r.minus(&t);
        }
        idx = ic.plus_scaled(&count, place as f64);
    }
    // binary levels for the remaining factor m
    let bits = budget::ceil_log2(m);
    for bit in (0..bits).rev() {
        let c = (1u64 << bit) as f64;
        let ind = indicator(&mut b, &r, c, w);
        let rc = b.relu(r.clone());
        let ic = if any { b.relu(idx.clone()) } else { Lin::constant(0.0) };
        let top = clip(&mut b, &r, any);
        b.end_layer();
        any = true;
        r = rc.plus_scaled(&ind, -c);
        if let Some(t) = top {
            r = r.minus(&t);
        }
        idx = ic.plus_scaled(&ind, c);
    }
    if !any {
        let z = b.relu(r.scaled(0.0));
        b.end_layer();
        idx = z.scaled(0.0);
    }
    let net = b.finish(&[idx], "step-budget").with_note("K", k_cells).with_note("delta", delta).with_note("mode", "budget");
    Built { network: net, budget: budget::step(n, l, d), certificate: None }
}

/// Network with `|φ(i) − ξᵢ| ≤ N^{−2s}L^{−2s}` at `i = 0..len−1` and `0 ≤ φ ≤ 1` on ℝ.
pub fn build_point_matcher(n: u64, l: u64, s: u64, xi: &[f64], mode: BuildMode) -> Result<Built> {
    if n == 0 || l == 0 || s == 0 {
        return Err(invalid("N, L and s must be positive"));
    }
    if xi.is_empty() || xi.len() as u64 > n * n * l * l {
        return Err(invalid(format!("need 1 ≤ len(xi) ≤ N²L² = {}, got {}", n * n * l * l, xi.len())));
    }
    if let Some(bad) = xi.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(invalid(format!("xi value {bad} outside [0,1]")));
    }
    match mode {
        BuildMode::Direct => Ok(matcher_direct(xi)),
        BuildMode::Budget => matcher_budget(n, l, s, xi),
    }
}

/// `σ(v) − σ(v−1)` on an open layer.
fn clamp_head(b: &mut NetBuilder, v: &Lin) -> Lin {
    let p = b.relu(v.clone());
    let q = b.relu(v.shifted(-1.0));
    p.minus(&q)
}

fn matcher_direct(xi: &[f64]) -> Built {
    let m = xi.len();
    let mut b = NetBuilder::new(1);
    let x = b.input(0);
    // h_j = σ(x − j), j = −1..=m
    let h: Vec<Lin> = (-1..=m as i64).map(|j| b.relu(x.shifted(-(j as f64)))).collect();
    b.end_layer();
    let mut v = Lin::constant(0.0);
    for (j, &val) in xi.iter().enumerate() {
        // hat centred at j: h_{j−1} − 2h_j + h_{j+1}
        let hat = b.relu(h[j].plus_scaled(&h[j + 1], -2.0).plus(&h[j + 2]));
        v = v.plus_scaled(&hat, val);
    }
    b.end_layer();
    let out = clamp_head(&mut b, &v);
    b.end_layer();
    let net = b.finish(&[out], "point-matcher-direct").with_note("points", m).with_note("mode", "direct");
    Built { network: net, budget: SizeBudget::new(m as u64 + 2, 3), certificate: None }
}

fn matcher_budget(n: u64, l: u64, s: u64, xi: &[f64]) -> Result<Built> {
    let formula = budget::point_matcher(n, l, s);
    let m = xi.len();
    let mut b = NetBuilder::new(1);
    let x = b.input(0);
    let hi = (m - 1) as f64;
    let c0 = b.relu(x.clone());
    let c1 = b.relu(x.shifted(-hi));
    b.end_layer();
    let mut c = c0.minus(&c1);
    // F(c) = ξ₀ + Σ_j Δ_j σ(c − j), slope changes of the interpolant
    let deltas: Vec<f64> = (0..m.saturating_sub(1))
        .map(|j| {
            let right = xi[j + 1] - xi[j];
            let left = if j == 0 { 0.0 } else { xi[j] - xi[j - 1] };
            right - left
        })
        .collect();
    let chunk = (formula.max_width as usize).saturating_sub(3).max(1);
    let mut acc = Lin::constant(xi[0]);
    let mut first = true;
    for part in deltas.chunks(chunk).enumerate() {
        let (ci, ds) = part;
        let base = ci * chunk;
        let mut add = Lin::constant(0.0);
        for (o, &dj) in ds.iter().enumerate() {
            let t = b.relu(c.shifted(-((base + o) as f64)));
            add = add.plus_scaled(&t, dj);
        }
        let carried = if first { acc.clone() } else { b.carry(&acc) };
        let cc = b.relu(c.clone());
        b.end_layer();
        first = false;
        acc = carried.plus(&add);
        c = cc;
    }
    let out = clamp_head(&mut b, &acc);
    b.end_layer();
    let net = b.finish(&[out], "point-matcher-budget").with_note("points", m).with_note("mode", "budget");
    if !formula.admits(&net) {
        return Err(invalid(format!(
            "budget-mode point matcher needs width {} depth {}, budget allows {} × {}",
            net.width(),
            net.depth(),
            formula.max_width,
            formula.max_depth
        )));
    }
    Ok(Built { network: net, budget: formula, certificate: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_step_examples() {
        // N=2, L=1, d=1 → K = 4
        let s = build_step(2, 1, 1, 1.0 / 12.0, BuildMode::Direct).unwrap().network;
        assert_eq!(s.evaluate(&[0.0]).unwrap()[0], 0.0);
        assert_eq!(s.evaluate(&[0.26]).unwrap()[0], 1.0);
        assert_eq!(s.evaluate(&[0.999]).unwrap()[0], 3.0);
        assert_eq!(s.depth(), 2);
    }

    #[test]
    fn single_cell_step_is_zero() {
        let s = build_step(1, 1, 1, 0.3, BuildMode::Direct).unwrap().network;
        for x in [0.0, 0.5, 1.0] {
            assert_eq!(s.evaluate(&[x]).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn delta_range_checked() {
        assert!(build_step(2, 1, 1, 0.2, BuildMode::Direct).is_err());
        assert!(build_step(2, 1, 1, 0.0, BuildMode::Budget).is_err());
    }

    #[test]
    fn matcher_constant_data() {
        let m = build_point_matcher(2, 1, 2, &[0.5; 4], BuildMode::Direct).unwrap().network;
        for i in 0..4 {
            assert_eq!(m.evaluate(&[i as f64]).unwrap()[0], 0.5);
        }
        assert!(build_point_matcher(1, 1, 2, &[0.5, 0.5], BuildMode::Direct).is_err());
        assert!(build_point_matcher(2, 1, 2, &[1.5], BuildMode::Direct).is_err());
    }
}
