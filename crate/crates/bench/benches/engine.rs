use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hsb_bench::sample_matrices;
use hsb_core::counterexample::{estimate_i, matrix_with_slope};
use hsb_core::dyadic::{ratio_scan, SumKind, SumParams};
use hsb_core::trilinear::{block_grid, dyadic_block_check, leibniz_inequality_scan};
use hsb_core::{
    decide, decide_type_specific, evaluate_conditions, exception_list_verdict,
    grouped_rules_verdict, q, Dim, FamilyId,
};
use std::hint::black_box;

fn oracle(c: &mut Criterion) {
    let ms = sample_matrices();
    let mut g = c.benchmark_group("oracle");
    g.bench_function("evaluate_conditions", |b| {
        b.iter(|| {
            ms.iter()
                .map(|m| evaluate_conditions(black_box(m), Dim::THREE).len())
                .sum::<usize>()
        })
    });
    g.bench_function("grouped_rules", |b| {
        b.iter(|| {
            ms.iter()
                .filter(|m| grouped_rules_verdict(black_box(m)).is_ok_and(|r| r.passed()))
                .count()
        })
    });
    g.bench_function("exception_list", |b| {
        b.iter(|| {
            ms.iter()
                .filter(|m| exception_list_verdict(black_box(m)).is_ok_and(|r| r.passed()))
                .count()
        })
    });
    g.bench_function("decide", |b| {
        b.iter(|| {
            ms.iter()
                .filter(|m| decide(black_box(m), Dim::THREE).is_product())
                .count()
        })
    });
    g.bench_function("decide_type_specific", |b| {
        b.iter(|| {
            ms.iter()
                .filter(|m| decide_type_specific(black_box(m)).2.is_product())
                .count()
        })
    });
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(10);
    for k in [1u8, 5, 9] {
        let id = FamilyId::new(k).unwrap();
        let m = matrix_with_slope(id, Dim::THREE, &q(0, 1));
        g.bench_with_input(BenchmarkId::new("estimate_i_20k", k), &id, |b, &id| {
            b.iter(|| {
                estimate_i(id, &m, 128.0, Dim::THREE, 20_000, 1)
                    .unwrap()
                    .i_hat
            })
        });
    }
    g.bench_function("leibniz_100k", |b| {
        b.iter(|| {
            leibniz_inequality_scan(100_000, 1, Dim::THREE)
                .unwrap()
                .max_ratio_n92
        })
    });
    let spec = &block_grid()[0];
    g.bench_function("block_check_100k", |b| {
        b.iter(|| dyadic_block_check(spec, 100_000, 1).unwrap().j_hat)
    });
    g.finish();
}

fn dyadic(c: &mut Criterion) {
    let params = SumParams {
        p: q(1, 2),
        b0: q(0, 1),
        b1: q(1, 4),
        b2: q(1, 3),
        a: q(0, 1),
    };
    c.bench_function("dyadic/sigma_scan_6_20", |b| {
        b.iter(|| {
            ratio_scan(SumKind::SigmaP, black_box(&params), 0, 6..=20)
                .unwrap()
                .slope
        })
    });
}

criterion_group!(benches, oracle, monte_carlo, dyadic);
criterion_main!(benches);
