//! Criterion benchmarks for the hot kernels: circuit simulation, the
//! parameter-shift Jacobian, canonical keys and the Fréchet distance.

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use qmolgen_core::dataset::{load_sdf, BUNDLED_SAMPLE};
use qmolgen_core::metrics::{batch_embed, frechet_distance, BatchStatistics};
use qmolgen_core::molgraph::canonical_key;
use qmolgen_core::qsim::{parameter_shift_grad, run_ansatz, Entanglement};
use qmolgen_core::rng::{stream, Purpose};
use qmolgen_core::{CircuitParams, CircuitSpec};
use rand::Rng;

/// Random angles and latent for a circuit shape.
pub fn circuit(qubits: usize, layers: usize, patches: usize) -> (CircuitSpec, CircuitParams, Vec<f64>) {
    let mut rng = stream(17, Purpose::Evaluation, (qubits * 100 + layers * 10 + patches) as u64);
    let spec = CircuitSpec::new(qubits, layers, patches, Entanglement::AllToAll).expect("spec");
    let angles = (0..spec.num_angles()).map(|_| rng.random_range(-PI..PI)).collect();
    let params = CircuitParams::new(&spec, angles).expect("params");
    let latent = (0..spec.feature_width()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    (spec, params, latent)
}

pub fn ansatz(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_ansatz");
    for (q, l, p) in [(4, 2, 2), (8, 1, 1), (8, 2, 1), (2, 2, 4)] {
        let (spec, params, z) = circuit(q, l, p);
        group.bench_with_input(BenchmarkId::from_parameter(format!("q{q}-l{l}-p{p}")), &(), |b, _| {
            b.iter(|| run_ansatz(&spec, &params, black_box(&z)).unwrap())
        });
    }
    group.finish();
}

pub fn parameter_shift(c: &mut Criterion) {
    let mut group = c.benchmark_group("parameter_shift");
    for (q, l, p) in [(4, 2, 2), (8, 1, 1)] {
        let (spec, params, z) = circuit(q, l, p);
        group.bench_with_input(BenchmarkId::from_parameter(format!("q{q}-l{l}-p{p}")), &(), |b, _| {
            b.iter(|| parameter_shift_grad(&spec, &params, black_box(&z)).unwrap())
        });
    }
    group.finish();
}

pub fn canonical(c: &mut Criterion) {
    let (graphs, _) = load_sdf(BUNDLED_SAMPLE);
    let graphs = &graphs[..100];
    c.bench_function("canonical_key/100 molecules", |b| {
        b.iter(|| {
            for g in graphs {
                black_box(canonical_key(g).unwrap());
            }
        })
    });
}

pub fn frechet(c: &mut Criterion) {
    let (graphs, _) = load_sdf(BUNDLED_SAMPLE);
    let a = BatchStatistics::from_rows(&batch_embed(&graphs[..128]).unwrap()).unwrap();
    let b = BatchStatistics::from_rows(&batch_embed(&graphs[128..256]).unwrap()).unwrap();
    c.bench_function("frechet/189-dim", |bench| {
        bench.iter(|| frechet_distance(black_box(&a), black_box(&b)).unwrap())
    });
}

pub fn benchmarks(c: &mut Criterion) {
    ansatz(c);
    parameter_shift(c);
    canonical(c);
    frechet(c);
}
