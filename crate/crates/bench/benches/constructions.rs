use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use taylornet::primitives::{build_product2, build_sawtooth_square, build_step};
use taylornet::taylor::{compile, CompileParams};
use taylornet::targets::lookup;
use taylornet::{BuildMode, Dd, Family, JetSpace, SparseNet};

fn sawtooth(c: &mut Criterion) {
    let mut g = c.benchmark_group("sawtooth");
    for (n, l) in [(2, 2), (4, 4), (8, 8)] {
        g.bench_with_input(BenchmarkId::new("build", format!("N{n}L{l}")), &(n, l), |b, &(n, l)| b.iter(|| build_sawtooth_square(n, l).unwrap()));
        let net = build_sawtooth_square(n, l).unwrap().network;
        g.bench_with_input(BenchmarkId::new("eval", format!("N{n}L{l}")), &net, |b, net| b.iter(|| net.evaluate(black_box(&[0.3141])).unwrap()));
    }
    g.finish();
}

fn primitives(c: &mut Criterion) {
    c.bench_function("product2 N4L4", |b| b.iter(|| build_product2(4, 4).unwrap()));
    c.bench_function("step direct N4L4 d2", |b| b.iter(|| build_step(4, 4, 2, 1e-3, BuildMode::Direct).unwrap()));
    c.bench_function("step budget N4L4 d2", |b| b.iter(|| build_step(4, 4, 2, 1e-3, BuildMode::Budget).unwrap()));
}

fn compiler(c: &mut Criterion) {
    let mut g = c.benchmark_group("compile");
    g.sample_size(10);
    let f = lookup("sine-product", 2, 2).unwrap();
    for (family, name) in [(Family::Relu, "relu"), (Family::Relu2, "relu2")] {
        let params = CompileParams::new(2, 2, 2, 6).order(1);
        g.bench_function(format!("{name} sine-product d2 N2L6"), |b| b.iter(|| compile(family, &f, &params).unwrap()));
    }
    g.finish();
}

fn jets(c: &mut Criterion) {
    let f = lookup("gaussian", 2, 2).unwrap();
    let net = compile(Family::Relu, &f, &CompileParams::new(2, 2, 2, 2)).unwrap().network;
    let sparse = SparseNet::from_network(&net);
    let mut g = c.benchmark_group("jets");
    for order in [0, 1] {
        let space = JetSpace::new(2, order);
        g.bench_function(format!("f64 order {order}"), |b| b.iter(|| sparse.jets::<f64>(black_box(&[0.37, 0.61]), &space)));
        g.bench_function(format!("dd order {order}"), |b| b.iter(|| sparse.jets::<Dd>(black_box(&[0.37, 0.61]), &space)));
    }
    g.finish();
}

criterion_group!(benches, sawtooth, primitives, compiler, jets);
criterion_main!(benches);
