use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dtc_core::model::{DisorderDistribution, FloquetDriveSpec, ModelKind};
use dtc_core::parallel::Execution;
use dtc_core::sweep::{run_campaign, Campaign, InitialStates, ObservableId, Parameter, SweepAxis};

fn campaign(model: ModelKind) -> Campaign {
    let base = FloquetDriveSpec {
        n_qubits: 4,
        epsilon: 0.0,
        t1: 1.0,
        t2: 1.0,
        model,
        h2i_pulses: 0,
        distribution: DisorderDistribution {
            j0: 5.0,
            sigma_j: 3.0,
            h0: 2.0e4,
            sigma_h: 50.0,
        },
    };
    Campaign::new(
        base,
        InitialStates::Fixed("1000".into()),
        vec![SweepAxis::linear(Parameter::Epsilon, 0.0, 0.2, 8).unwrap()],
        vec![ObservableId::Z(1), ObservableId::Z(3)],
        200,
        64,
        0,
    )
}

fn ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for model in [ModelKind::Ising, ModelKind::Heisenberg] {
        let campaign = campaign(model);
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, model), &exec, |b, &exec| {
                b.iter(|| run_campaign(&campaign, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, ensemble);
criterion_main!(benches);
