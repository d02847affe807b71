//! Parallel pool against a single worker on the heavy loops. Build with
//! `--no-default-features` to time the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use selfnorm::applications::{random_points, tsp_martingale_diffs};
use selfnorm::exec::with_jobs;
use selfnorm::montecarlo::{estimate_tails, exact_tails_rademacher, Statistic, TailEvent, Window};
use selfnorm::processes::{DifferenceModel, Family, StatsRequest};

const SETTINGS: [(&str, Option<usize>); 2] = [("jobs1", Some(1)), ("pool", None)];

fn peeling_events() -> Vec<TailEvent> {
    [0.5, 1.0, 1.5, 2.0]
        .iter()
        .map(|&x| {
            TailEvent::ratio(Statistic::SqrtBracket, x, StatsRequest::default()).with_window(Window {
                stat: Statistic::SqrtBracket,
                lo: 10.0,
                hi: 20.0,
            })
        })
        .collect()
}

fn bench_tails(c: &mut Criterion) {
    let model = DifferenceModel::new(Family::BoundedAbove {
        y_cap: 1.0,
        base: Box::new(Family::Gaussian { sd: 1.0 }),
    })
    .unwrap();
    let events = peeling_events();
    let mut g = c.benchmark_group("estimate_tails_n100_20k");
    g.sample_size(10);
    for (name, jobs) in SETTINGS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_jobs(jobs, || estimate_tails(&model, 100, black_box(&events), 20_000, 0.99, 7).unwrap()))
        });
    }
    g.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let events = peeling_events();
    let mut g = c.benchmark_group("exact_oracle_n16");
    g.sample_size(10);
    for (name, jobs) in SETTINGS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_jobs(jobs, || exact_tails_rademacher(16, black_box(&events)).unwrap()))
        });
    }
    g.finish();
}

fn bench_tsp(c: &mut Criterion) {
    let points = random_points(9, 2, 3, 0);
    let mut g = c.benchmark_group("tsp_martingale_diffs_n9");
    g.sample_size(10);
    for (name, jobs) in SETTINGS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_jobs(jobs, || tsp_martingale_diffs(black_box(&points), 1000, 11).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_tails, bench_oracle, bench_tsp);
criterion_main!(benches);
