use taylornet::budget;
use taylornet::metrics::{estimate_sup_error, GridSpec, MonomialReference};
use taylornet::primitives::*;
use taylornet::{BuildMode, Dd, MultiIndex, NormKind};

fn square_ref() -> MonomialReference {
    MonomialReference(MultiIndex::new(vec![2]))
}

fn product_ref() -> MonomialReference {
    MonomialReference(MultiIndex::new(vec![1, 1]))
}

#[test]
fn sawtooth_meets_size_and_error_bounds() {
    for n in [1, 2, 4] {
        for l in [1, 2, 3] {
            let b = build_sawtooth_square(n, l).unwrap();
            assert!(b.within_budget(), "N={n} L={l}: {}x{}", b.network.width(), b.network.depth());
            assert_eq!(b.certificate().norm, NormKind::W1Inf);
            let rep = estimate_sup_error::<f64, _>(&b.network, &square_ref(), 1, &GridSpec::new(1, 4000, 11)).unwrap();
            let bound = (n as f64).powi(-(l as i32));
            assert!(rep.per_order[0] <= rep.per_order[1] + 1e-15);
            assert!(rep.sup_error <= bound, "N={n} L={l}: {} > {bound}", rep.sup_error);
        }
    }
}

#[test]
fn sawtooth_is_exact_at_dyadic_breakpoints() {
    for (n, l) in [(1, 1), (2, 2), (4, 2)] {
        let net = build_sawtooth_square(n, l).unwrap().network;
        let m = 2 * budget::sawtooth_k(n) * l as u32;
        let steps = 1u64 << m;
        for j in 0..=steps {
            let x = j as f64 / steps as f64;
            let y = net.evaluate(&[x]).unwrap()[0];
            assert!((y - x * x).abs() <= 1e-12, "N={n} L={l} x={x}");
        }
    }
}

#[test]
fn sawtooth_width_example() {
    let b = build_sawtooth_square(2, 2).unwrap();
    assert!(b.network.width() <= 6 && b.network.depth() <= 4);
}

#[test]
fn product_on_unit_square() {
    let b = build_product2(2, 2).unwrap();
    assert!(b.within_budget());
    let rep = estimate_sup_error::<f64, _>(&b.network, &product_ref(), 1, &GridSpec::new(2, 100, 3)).unwrap();
    assert!(rep.sup_error <= 6.0 / 4.0);
    assert_eq!(b.network.evaluate(&[0.0, 0.7]).unwrap()[0].abs(), 0.0);
}

#[test]
fn scaled_product_on_symmetric_interval() {
    let b = build_product2_scaled(2, 2, -3.0, 3.0).unwrap();
    assert!(b.within_budget());
    let grid = GridSpec::new(2, 100, 5).on(-3.0, 3.0);
    let rep = estimate_sup_error::<f64, _>(&b.network, &product_ref(), 1, &grid).unwrap();
    assert!(rep.sup_error <= 6.0 * 36.0 / 4.0);
    let v = b.network.evaluate(&[-2.0, 1.5]).unwrap()[0];
    assert!((v + 3.0).abs() <= 6.0 * 36.0 / 4.0);
}

#[test]
fn multiproduct_cube() {
    let b = build_multiproduct(1, 1, 3).unwrap();
    assert!(b.within_budget());
    let r = MonomialReference(MultiIndex::new(vec![1, 1, 1]));
    let rep = estimate_sup_error::<f64, _>(&b.network, &r, 1, &GridSpec::new(3, 12, 2)).unwrap();
    assert!(rep.sup_error <= b.certificate().bound_value);
}

#[test]
fn monomial_in_double_double() {
    let alpha = MultiIndex::new(vec![2, 1]);
    let b = build_monomial_relu(2, 2, &alpha, 3).unwrap();
    assert!(b.within_budget());
    let rep = estimate_sup_error::<Dd, _>(&b.network, &MonomialReference(alpha), 1, &GridSpec::new(2, 8, 4)).unwrap();
    // 30·3^{−42} ≈ 3.2e−19 lies far below f64 resolution
    assert!(rep.sup_error <= b.certificate().bound_value, "{}", rep.sup_error);
}

#[test]
fn low_order_monomials_are_affine() {
    let one = build_monomial_relu(1, 1, &MultiIndex::zero(2), 2).unwrap().network;
    assert_eq!(one.depth(), 0);
    assert_eq!(one.evaluate(&[0.3, 0.4]).unwrap()[0], 1.0);
    let x2 = build_monomial_relu(1, 1, &MultiIndex::unit(2, 1), 2).unwrap().network;
    assert_eq!(x2.evaluate(&[0.3, 0.4]).unwrap()[0], 0.4);
}

#[test]
fn step_maps_cells_to_indices() {
    // N=2, L=1, d=1 → K=4
    let delta = 1.0 / 12.0;
    for mode in [BuildMode::Direct, BuildMode::Budget] {
        let s = build_step(2, 1, 1, delta, mode).unwrap();
        for k in 0..4u32 {
            let lo = k as f64 / 4.0;
            let hi = if k < 3 { (k + 1) as f64 / 4.0 - delta } else { 1.0 };
            for t in 0..=50 {
                let x = lo + (hi - lo) * t as f64 / 50.0;
                let v = s.network.evaluate(&[x]).unwrap()[0];
                assert!((v - k as f64).abs() <= 1e-12, "{mode} x={x} v={v}");
            }
        }
    }
}

#[test]
fn budget_step_fits_its_formula() {
    for (n, l, d) in [(2, 1, 1), (4, 2, 1), (9, 3, 2), (8, 2, 3)] {
        let k = budget::cells_per_axis(n, l, d);
        let s = build_step(n, l, d, 1.0 / (3.0 * k as f64), BuildMode::Budget).unwrap();
        assert!(s.within_budget(), "N={n} L={l} d={d}: {}x{}", s.network.width(), s.network.depth());
    }
}

#[test]
fn point_matcher_interpolates_in_both_modes() {
    let xi: Vec<f64> = (0..16).map(|i| ((i * 7) % 16) as f64 / 15.0).collect();
    for mode in [BuildMode::Direct, BuildMode::Budget] {
        let m = build_point_matcher(2, 2, 2, &xi, mode).unwrap();
        for (i, v) in xi.iter().enumerate() {
            assert!((m.network.evaluate(&[i as f64]).unwrap()[0] - v).abs() <= 1e-12);
        }
        for x in [-3.0, 0.4, 7.5, 100.0] {
            let y = m.network.evaluate(&[x]).unwrap()[0];
            assert!((0.0..=1.0).contains(&y));
        }
    }
    assert!(build_point_matcher(2, 2, 2, &xi, BuildMode::Budget).unwrap().within_budget());
}

#[test]
fn exact_sigma2_blocks() {
    let sq = build_exact_square();
    let pr = build_exact_product2();
    for x in [-1.0, -0.3, 0.0, 0.6, 1.0] {
        assert!((sq.evaluate(&[x]).unwrap()[0] - x * x).abs() <= 1e-15);
        for y in [-0.9, 0.2, 0.8] {
            assert!((pr.evaluate(&[x, y]).unwrap()[0] - x * y).abs() <= 1e-15);
        }
    }
}

#[test]
fn exact_polynomial_with_affine_terms() {
    let terms = vec![
        (0.5, MultiIndex::new(vec![2, 0])),
        (-0.25, MultiIndex::new(vec![1, 1])),
        (0.2, MultiIndex::new(vec![0, 1])),
        (0.1, MultiIndex::zero(2)),
    ];
    let b = build_exact_polynomial_sigma2(2, 8, 2, 2, &terms).unwrap();
    assert!(b.within_budget(), "{}x{}", b.network.width(), b.network.depth());
    for (x, y) in [(0.3, -0.4), (-1.0, 1.0), (0.0, 0.5)] {
        let want = 0.5 * x * x - 0.25 * x * y + 0.2 * y + 0.1;
        assert!((b.network.evaluate(&[x, y]).unwrap()[0] - want).abs() <= 1e-12);
    }
}
