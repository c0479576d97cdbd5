use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use quadhinf::fixtures::Axis;
use quadhinf::quadsim::{ExperimentSuite, InnerLoop, QuadrotorParams};
use quadhinf::sysid::{identify, IdentifyOptions};
use quadhinf::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn suite() -> ExperimentSuite {
    ExperimentSuite {
        sweep: 20.0,
        periods: 2,
        ..ExperimentSuite::new(Axis::Pitch, 4, 1)
    }
}

fn generation(c: &mut Criterion) {
    let (params, inner, suite) = (QuadrotorParams::default(), InnerLoop::default(), suite());
    let mut g = c.benchmark_group("generate_suite");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| suite.generate(&params, &inner, exec).unwrap())
        });
    }
    g.finish();
}

fn identification(c: &mut Criterion) {
    let records = suite()
        .generate(&QuadrotorParams::default(), &InnerLoop::default(), Execution::Parallel)
        .unwrap();
    let opts = IdentifyOptions::default();
    let mut g = c.benchmark_group("identify");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| identify(&records, &opts, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, generation, identification);
criterion_main!(benches);
