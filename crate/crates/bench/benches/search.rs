use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use levelup_core::ingest::{synth_generate, SynthSpec};
use levelup_core::{
    enforce, equality_frontier, mrc_frontier, pareto_prune, Constraint, Direction, FairnessMeasure, FrontierPoint,
    ScoredDataset, Statistic,
};

fn rare_event(rows: usize) -> ScoredDataset {
    synth_generate(&SynthSpec::rare_event(0.05, rows, 17)).unwrap().scored()
}

fn bench_enforce(c: &mut Criterion) {
    let mut group = c.benchmark_group("enforce");
    group.sample_size(10);
    for rows in [500, 2000] {
        let scored = rare_event(rows);
        let cases = [
            ("unconstrained", Constraint::Unconstrained),
            (
                "demographic_parity",
                Constraint::Equality {
                    measure: FairnessMeasure::DemographicParity,
                    epsilon: 0.01,
                },
            ),
            (
                "min_selection_rate",
                Constraint::MinimumRate {
                    statistic: Statistic::SelectionRate,
                    tau: 0.1,
                },
            ),
        ];
        for (name, constraint) in cases {
            group.bench_with_input(BenchmarkId::new(name, rows), &scored, |b, s| {
                b.iter(|| enforce(black_box(s), &constraint).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_frontier(c: &mut Criterion) {
    let scored = synth_generate(&SynthSpec::base_rate_gap(5)).unwrap().scored();
    let mut group = c.benchmark_group("frontier");
    group.sample_size(10);
    group.bench_function("equality_dp_20", |b| {
        b.iter(|| equality_frontier(black_box(&scored), FairnessMeasure::DemographicParity, 20).unwrap())
    });
    group.bench_function("min_tnr_20", |b| {
        b.iter(|| mrc_frontier(black_box(&scored), Statistic::Tnr, 20).unwrap())
    });
    group.finish();
}

fn bench_pareto(c: &mut Criterion) {
    let scored = synth_generate(&SynthSpec::base_rate_gap(5)).unwrap().scored();
    let template = equality_frontier(&scored, FairnessMeasure::DemographicParity, 4)
        .unwrap()
        .sweep
        .remove(0);
    let mut state = 0x9e37_79b9_7f4a_7c15_u64;
    let mut unit = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let points: Vec<FrontierPoint> = (0..5000)
        .map(|_| FrontierPoint {
            accuracy: unit(),
            objective_value: unit(),
            ..template.clone()
        })
        .collect();
    c.bench_function("pareto_prune_5000", |b| {
        b.iter(|| pareto_prune(black_box(&points), Direction::Minimize))
    });
}

criterion_group!(benches, bench_enforce, bench_frontier, bench_pareto);
criterion_main!(benches);
