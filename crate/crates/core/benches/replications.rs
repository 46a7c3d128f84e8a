use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

use wnc_sched::exec::{par_map, seq_map};
use wnc_sched::netsim::{stream_rng, BernoulliTraffic, TrafficSpec};
use wnc_sched::relay::{run_policy_with, RunOptions};
use wnc_sched::scheduler::ProposedPolicy;
use wnc_sched::{ArrivalPattern, CostModel};

fn replicate(p: &ArrivalPattern, cm: &CostModel, rep: u64) -> f64 {
    let u = stream_rng(7, rep).gen::<f64>();
    let mut pol = ProposedPolicy::<f64>::new(cm, u).unwrap();
    run_policy_with(p, &mut pol, cm, RunOptions { keep_trace: false, slots: Some(p.horizon()) })
        .unwrap()
        .ledger
        .total_f64()
}

fn replications(c: &mut Criterion) {
    let cm = CostModel::integer(10).unwrap();
    let spec = TrafficSpec::bernoulli(BernoulliTraffic::new(0.5, 0.3, 0.0).unwrap(), 10_000, 1);
    let mut group = c.benchmark_group("proposed_policy_replications");
    group.sample_size(10);
    for reps in [4usize, 20] {
        let jobs: Vec<(u64, ArrivalPattern)> = (0..reps as u64).map(|r| (r, spec.pattern(r).unwrap())).collect();
        group.bench_with_input(BenchmarkId::new("sequential", reps), &jobs, |b, jobs| {
            b.iter(|| seq_map(jobs, |(r, p)| replicate(black_box(p), &cm, *r)))
        });
        group.bench_with_input(BenchmarkId::new("parallel", reps), &jobs, |b, jobs| {
            b.iter(|| par_map(jobs, |(r, p)| replicate(black_box(p), &cm, *r)))
        });
    }
    group.finish();
}

criterion_group!(benches, replications);
criterion_main!(benches);
