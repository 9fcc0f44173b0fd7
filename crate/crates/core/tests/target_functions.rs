use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taylornet::targets::{catalog, catalog_ids, lookup, raw_catalog, rescale_to_unit_ball, RawFunction, TargetKind};
use taylornet::MultiIndex;

fn bump(x: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[i] += h;
    y
}

#[test]
fn first_derivatives_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = 1e-6;
    for d in 1..=3 {
        for f in catalog(d, 3) {
            for _ in 0..1000 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
                for i in 0..d {
                    let fd = (f.value(&bump(&x, i, h)) - f.value(&bump(&x, i, -h))) / (2.0 * h);
                    let an = f.derivative(&x, &MultiIndex::unit(d, i));
                    assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{} d={d}: {fd} vs {an}", f.id);
                }
            }
        }
    }
}

#[test]
fn higher_derivatives_match_differences_of_lower_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    for d in 1..=2 {
        for f in catalog(d, 4) {
            for alpha in MultiIndex::all_up_to(d, 3) {
                for i in 0..d {
                    let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..0.9)).collect();
                    let up = alpha.add(&MultiIndex::unit(d, i));
                    let fd = (f.derivative(&bump(&x, i, h), &alpha) - f.derivative(&bump(&x, i, -h), &alpha)) / (2.0 * h);
                    let an = f.derivative(&x, &up);
                    assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{} {up}: {fd} vs {an}", f.id);
                }
            }
        }
    }
}

#[test]
fn certified_bounds_hold_on_dense_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in 1..=2 {
        let s = 3;
        for f in catalog(d, s) {
            assert!(f.certified_bound < 1.0, "{}", f.id);
            let alphas = MultiIndex::all_up_to(d, s);
            let mut worst = 0.0f64;
            for _ in 0..100_000 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..=1.0)).collect();
                for a in &alphas {
                    worst = worst.max(f.derivative(&x, a).abs());
                }
            }
            assert!(worst <= f.certified_bound, "{}: grid max {worst} > {}", f.id, f.certified_bound);
        }
    }
}

#[test]
fn catalog_covers_required_families() {
    for d in 1..=3 {
        let ids = catalog_ids(d);
        for want in ["sine-product", "gaussian", "polynomial", "constant"] {
            assert!(ids.iter().any(|i| i == want), "{want} missing for d={d}");
        }
    }
    let poly = raw_catalog(2).into_iter().find(|r| r.id == "polynomial").unwrap();
    if let TargetKind::Polynomial { terms } = poly.kind {
        assert!(terms.iter().map(|t| t.0.abs()).sum::<f64>() < 1.0);
    }
}

#[test]
fn constant_has_no_derivatives() {
    let f = lookup("constant", 2, 3).unwrap();
    assert_eq!(f.value(&[0.1, 0.9]), 0.3);
    for a in MultiIndex::all_up_to(2, 3).into_iter().filter(|a| a.order() > 0) {
        assert_eq!(f.derivative(&[0.4, 0.4], &a), 0.0);
    }
}

#[test]
fn half_sine_fourth_derivative() {
    let f = lookup("half-sine", 1, 4).unwrap();
    for x in [0.0, 0.3, 1.0] {
        let d4 = f.derivative(&[x], &MultiIndex::new(vec![4]));
        assert!((d4 - 0.5 * f64::sin(x)).abs() < 1e-15);
    }
    assert!(f.certified_bound <= 0.5);
}

#[test]
fn sine_is_scaled_to_095() {
    let raw = RawFunction::new("sin", 1, TargetKind::SineProduct { shifts: vec![0.0] }).unwrap();
    let f = rescale_to_unit_ball(raw, 4).unwrap();
    assert!((f.scale - 0.95).abs() < 1e-15);
    assert!(f.derivation.contains("0.95"));
}

#[test]
fn small_polynomial_keeps_unit_scale() {
    let raw = RawFunction::new("p", 1, TargetKind::Polynomial { terms: vec![(0.1, MultiIndex::new(vec![2]))] }).unwrap();
    let f = rescale_to_unit_ball(raw, 3).unwrap();
    assert_eq!(f.scale, 1.0);
}

#[test]
fn unknown_identifier_is_rejected() {
    assert!(lookup("no-such-function", 1, 2).is_err());
    assert!(lookup("sin-ratio", 2, 2).is_err());
}
