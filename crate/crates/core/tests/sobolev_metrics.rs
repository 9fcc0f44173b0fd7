use taylornet::metrics::{estimate_lp_error, estimate_sup_error, FnReference, GridSpec, MonomialReference};
use taylornet::primitives::{build_exact_square, build_sawtooth_square};
use taylornet::taylor::TriflingSpec;
use taylornet::{MultiIndex, Network};

fn x_squared() -> MonomialReference {
    MonomialReference(MultiIndex::new(vec![2]))
}

fn thin_omega() -> TriflingSpec {
    TriflingSpec::new(1, 2, 1e-300).unwrap()
}

#[test]
fn exact_square_has_no_error_up_to_order_three() {
    let net = build_exact_square();
    let r = estimate_sup_error::<f64, _>(&net, &x_squared(), 3, &GridSpec::new(1, 500, 1)).unwrap();
    assert!(r.sup_error <= 1e-12, "{:?}", r.per_order);
    assert_eq!(r.per_order.len(), 4);
}

#[test]
fn sawtooth_orders_are_ordered_and_bounded() {
    let b = build_sawtooth_square(2, 2).unwrap();
    let r = estimate_sup_error::<f64, _>(&b.network, &x_squared(), 1, &GridSpec::new(1, 4096, 2)).unwrap();
    assert!(r.per_order[0] <= r.per_order[1]);
    assert!(r.per_order[1] <= 0.25);
    assert!(r.certify(0.25).passed());
}

#[test]
fn relu_network_refuses_second_order() {
    let b = build_sawtooth_square(2, 1).unwrap();
    let e = estimate_sup_error::<f64, _>(&b.network, &x_squared(), 2, &GridSpec::new(1, 10, 0)).unwrap_err();
    assert!(e.to_string().contains("ReLU"));
}

#[test]
fn thin_exclusion_matches_no_exclusion() {
    let b = build_sawtooth_square(2, 2).unwrap();
    let g = GridSpec::new(1, 2048, 4);
    let plain = estimate_sup_error::<f64, _>(&b.network, &x_squared(), 1, &g).unwrap();
    let thin = estimate_sup_error::<f64, _>(&b.network, &x_squared(), 1, &g.clone().excluding(TriflingSpec::new(1, 4, 1e-9).unwrap())).unwrap();
    assert!((plain.sup_error - thin.sup_error).abs() <= 1e-2 * plain.sup_error);
}

#[test]
fn sup_estimate_is_monotone_on_nested_grids() {
    let b = build_sawtooth_square(2, 2).unwrap();
    // odd refinements of [0, 0.9] nest and keep the centre off the dyadic breakpoints
    let mut last = 0.0;
    for ppa in [1, 3, 9, 27, 81, 243, 729] {
        let g = GridSpec::new(1, ppa, 0).jitter(0.0).on(0.0, 0.9);
        let r = estimate_sup_error::<f64, _>(&b.network, &x_squared(), 1, &g).unwrap();
        assert!(r.sup_error >= last * (1.0 - 1e-12), "{ppa}: {} < {last}", r.sup_error);
        last = r.sup_error;
    }
}

#[test]
fn lp_quadrature_matches_fine_reference() {
    let b = build_sawtooth_square(2, 2).unwrap();
    let omega = thin_omega();
    for order in [0, 1] {
        let fine = estimate_lp_error(&b.network, &x_squared(), order, 1.0, &GridSpec::new(1, 1_000_000, 9), &omega, 0.0).unwrap();
        let coarse = estimate_lp_error(&b.network, &x_squared(), order, 1.0, &GridSpec::new(1, 4096, 10), &omega, 0.0).unwrap();
        let rel = (coarse.total - fine.total).abs() / fine.total;
        assert!(rel < 0.01, "order {order}: {} vs {}", coarse.total, fine.total);
    }
}

#[test]
fn omega_part_is_the_closed_form() {
    let b = build_sawtooth_square(2, 1).unwrap();
    let t = TriflingSpec::new(1, 8, 1e-3).unwrap();
    let lp = estimate_lp_error(&b.network, &x_squared(), 1, 2.0, &GridSpec::new(1, 64, 0), &t, 3.0).unwrap();
    assert_eq!(lp.omega, 8.0 * 1e-3 * 9.0);
    assert!((lp.total - (lp.off_omega + lp.omega).sqrt()).abs() < 1e-15);
}

#[test]
fn zero_network_against_zero_target() {
    let net = Network::affine(2, vec![vec![0.0, 0.0]], vec![0.0]).unwrap();
    let zero = FnReference { d: 2, f: |_: &[f64], _: &MultiIndex| 0.0f64 };
    let t = TriflingSpec::new(2, 2, 1e-300).unwrap();
    let lp = estimate_lp_error(&net, &zero, 1, 1.0, &GridSpec::new(2, 32, 0), &t, 0.0).unwrap();
    assert_eq!(lp.total, 0.0);
}

#[test]
fn doubling_resolution_is_stable() {
    let b = build_sawtooth_square(3, 2).unwrap();
    let omega = thin_omega();
    for p in [1.0, 2.0, 3.5] {
        let a = estimate_lp_error(&b.network, &x_squared(), 1, p, &GridSpec::new(1, 2048, 1), &omega, 0.0).unwrap();
        let c = estimate_lp_error(&b.network, &x_squared(), 1, p, &GridSpec::new(1, 4096, 2), &omega, 0.0).unwrap();
        assert!((a.total - c.total).abs() < 0.02 * c.total, "p={p}: {} vs {}", a.total, c.total);
    }
}

#[test]
fn p_below_one_is_rejected() {
    let b = build_sawtooth_square(1, 1).unwrap();
    assert!(estimate_lp_error(&b.network, &x_squared(), 0, 0.5, &GridSpec::new(1, 8, 0), &thin_omega(), 0.0).is_err());
}
