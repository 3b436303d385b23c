use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use summing_bench::{covering_lp, random_operator, random_tensor};
use summing_core::{projective_norm, solve_lp, summing_constant, PhiMap, SummingConfig};

fn lp(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_lp");
    for (rows, cols) in [(16, 8), (64, 16), (256, 32)] {
        let p = covering_lp(rows, cols, 1);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{rows}x{cols}")), &p, |b, p| b.iter(|| solve_lp(black_box(p)).unwrap()));
    }
    g.finish();
}

fn summing(c: &mut Criterion) {
    let mut g = c.benchmark_group("summing_constant");
    g.sample_size(10);
    let cfg = SummingConfig::default();
    for n in [2, 3, 4] {
        let t = random_operator(n, 2);
        let phi = PhiMap::identity(t.domain.clone());
        for r in [1.0, 2.0] {
            g.bench_function(BenchmarkId::new(format!("r{r}"), n), |b| b.iter(|| summing_constant(&t, &phi, r, &cfg).unwrap()));
        }
    }
    g.finish();
}

fn projective(c: &mut Criterion) {
    let mut g = c.benchmark_group("projective_norm");
    g.sample_size(10);
    for n in [2] {
        let v = random_tensor(n, 3);
        g.bench_with_input(BenchmarkId::from_parameter(n), &v, |b, v| b.iter(|| projective_norm(v, 4).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, lp, summing, projective);
criterion_main!(benches);
