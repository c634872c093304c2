use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fidelity_core::cf::{run_cf, CfAlgorithm};
use fidelity_core::dr::run_dr;
use fidelity_core::{Ensemble, Exec, GaussianWavepacket, SystemSpec};

const N1: usize = 4096;

fn setup(d: usize) -> (SystemSpec, GaussianWavepacket) {
    (
        SystemSpec::kicked_rotor(d, 0.2, 1e-4, N1).unwrap(),
        GaussianWavepacket::on_torus(d, 1.5, 0.0, N1).unwrap(),
    )
}

fn execs() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)]
}

fn dr(c: &mut Criterion) {
    let (spec, state) = setup(20);
    let mut group = c.benchmark_group("dr_d20_t100");
    for (name, exec) in execs() {
        let ens = Ensemble::new(4096, 1).with_exec(exec);
        group.bench_with_input(BenchmarkId::from_parameter(name), &ens, |b, ens| {
            b.iter(|| run_dr(&state, &spec, 100, ens).unwrap())
        });
    }
    group.finish();
}

fn echo2(c: &mut Criterion) {
    let (spec, state) = setup(20);
    let steps: Vec<usize> = (0..=40).collect();
    let mut group = c.benchmark_group("echo2_d20_t40");
    group.sample_size(10);
    for (name, exec) in execs() {
        let ens = Ensemble::new(1024, 1).with_exec(exec);
        group.bench_with_input(BenchmarkId::from_parameter(name), &ens, |b, ens| {
            b.iter(|| run_cf(CfAlgorithm::echo(2.0), &state, &spec, &steps, ens).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, dr, echo2);
criterion_main!(benches);
