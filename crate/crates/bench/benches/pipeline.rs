use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nomograph::{
    anova_decompose, approximate, build_forms, solve_sdr, DMatrix, MultiPoly, Options, SdpProblem,
};

fn benchmark() -> MultiPoly {
    let inner = MultiPoly::from_terms(
        2,
        vec![(vec![1, 0], 1.0), (vec![1, 1], 1.0), (vec![0, 1], 1.0)],
    )
    .unwrap();
    inner.pow(2).scale(1.0 / 9.0)
}

fn forms(c: &mut Criterion) {
    let f = benchmark();
    let mut g = c.benchmark_group("build_forms");
    for d in [5usize, 10, 20] {
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| build_forms(black_box(&f), d).unwrap())
        });
    }
    g.finish();
}

fn anova(c: &mut Criterion) {
    let f = benchmark();
    c.bench_function("anova_decompose/order2", |b| {
        b.iter(|| anova_decompose(black_box(&f), 2).unwrap())
    });
}

fn relaxation(c: &mut Criterion) {
    let f = benchmark();
    let mut g = c.benchmark_group("solve_sdr");
    g.sample_size(10);
    for d in [5usize, 10] {
        let q = build_forms(&f, d).unwrap();
        let p = SdpProblem::new(q.a_lift.clone(), q.b_lift.clone(), DMatrix::identity(d, d));
        g.bench_with_input(BenchmarkId::from_parameter(d), &p, |b, p| {
            b.iter(|| solve_sdr(black_box(p)).unwrap())
        });
    }
    g.finish();
}

fn end_to_end(c: &mut Criterion) {
    let f = benchmark();
    let mut g = c.benchmark_group("approximate");
    g.sample_size(10);
    g.bench_function("D=20", |b| {
        b.iter(|| approximate(black_box(&f), &Options::new(20)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, forms, anova, relaxation, end_to_end);
criterion_main!(benches);
