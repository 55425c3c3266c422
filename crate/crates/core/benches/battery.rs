use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use degiorgi::constants::DgParams;
use degiorgi::corpus::{generate_field, run_corpus, CorpusConfig};
use degiorgi::verify::{check_dg_membership, DgCheckOptions};
use degiorgi::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn dg_sampling(c: &mut Criterion) {
    let cfg = CorpusConfig::default();
    let u = generate_field(&cfg, 0).unwrap();
    let dg = DgParams::new(0.5, 20.0, 0.0, 1.0);
    let mut group = c.benchmark_group("dg_membership_200");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            let opts = DgCheckOptions {
                exec,
                ..Default::default()
            };
            b.iter(|| black_box(check_dg_membership(&u, &dg, &opts).unwrap()))
        });
    }
    group.finish();
}

fn corpus(c: &mut Criterion) {
    let cfg = CorpusConfig {
        n: 8,
        seed: 1,
        ..Default::default()
    };
    let mut group = c.benchmark_group("corpus_8");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(run_corpus(&cfg, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, dg_sampling, corpus);
criterion_main!(benches);
