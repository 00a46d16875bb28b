use criterion::{black_box, criterion_group, criterion_main, Criterion};
use quench_core::experiments::{run_periodic_quench, sweep, SweepGrid, DEFAULT_CYCLES};
use quench_core::{
    assemble_hamiltonian, eig_sym, propagate, protocol_segments, ProtocolKind, StateVector, SystemParams,
};

fn eigensolver(c: &mut Criterion) {
    let p = SystemParams::reference();
    let h = assemble_hamiltonian(&p, p.g0_ghz);
    c.bench_function("eig_sym 62x62", |b| b.iter(|| eig_sym(black_box(&h)).unwrap()));
}

fn free_decay(c: &mut Criterion) {
    let p = SystemParams::reference();
    let protocol = protocol_segments(ProtocolKind::Free { total_ns: 70.0 }, p.g0_ghz).unwrap();
    let initial = StateVector::excited(p.n_sites);
    c.bench_function("propagate free 70 ns, dt 0.01", |b| {
        b.iter(|| propagate(black_box(&p), &protocol, 0.01, &initial).unwrap())
    });
}

fn periodic_quench(c: &mut Criterion) {
    let p = SystemParams::reference();
    c.bench_function("run_periodic_quench tau 1, delta 13", |b| {
        b.iter(|| run_periodic_quench(black_box(&p), 1.0, 13.0, DEFAULT_CYCLES, 0.01).unwrap())
    });
}

fn small_sweep(c: &mut Criterion) {
    let p = SystemParams::reference();
    let grid = SweepGrid {
        tau_ns: vec![1.0, 2.0],
        delta_ns: vec![3.0, 13.0],
        omega0_ghz: vec![8.74, 8.54],
    };
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("2x2x2 grid", |b| {
        b.iter(|| sweep(black_box(&p), &grid, DEFAULT_CYCLES, 0.01).unwrap())
    });
    group.finish();
}

criterion_group!(benches, eigensolver, free_decay, periodic_quench, small_sweep);
criterion_main!(benches);
