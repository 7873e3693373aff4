//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line, then exits non-zero if any
//! criterion failed.

use std::collections::HashSet;
use std::error::Error;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use qmolgen_cli::{cmd_evaluate, cmd_train, data, EvaluateRequest, RunConfig, TrainFlags};
use qmolgen_core::dataset::DatasetSplit;
use qmolgen_core::gan::{gradient_penalty, preset, TrainOptions, Trainer};
use qmolgen_core::metrics::{
    batch_quality, chem_scores, drug_candidate_score, frechet_distance, logp, np_score, qed, sa_score,
    wasserstein1_1d, BatchStatistics, ChemContext, EnvironmentTable, MetricsReport, NpModel, ScoreTables,
};
use qmolgen_core::molgraph::{canonical_key, Atom, Bond, N_MAX};
use qmolgen_core::nn::{Activation, DenseNet, Layer};
use qmolgen_core::qsim::{parameter_shift_grad, run_ansatz, Entanglement, Gate};
use qmolgen_core::rng::{stream, Purpose};
use qmolgen_core::{CircuitParams, CircuitSpec, CriticModel, MolecularGraph, StateVector};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, Box<dyn Error>>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail.into())
    }
}

fn rng(tag: u64) -> rand_chacha::ChaCha8Rng {
    stream(0xACCE_0000 + tag, Purpose::Evaluation, 0)
}

// ---------------------------------------------------------------- 1

fn parameter_shift_vs_finite_differences() -> Outcome {
    const H: f64 = 1e-5;
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    let mut entries = 0usize;
    for _ in 0..100 {
        let ent = if r.random() { Entanglement::AllToAll } else { Entanglement::Ring };
        let spec = CircuitSpec::new(r.random_range(1..=6), r.random_range(1..=3), r.random_range(1..=2), ent)?;
        let angles: Vec<f64> = (0..spec.num_angles()).map(|_| r.random_range(-PI..PI)).collect();
        let z: Vec<f64> = (0..spec.feature_width()).map(|_| r.random_range(-1.0..=1.0)).collect();
        let shift = parameter_shift_grad(&spec, &CircuitParams::new(&spec, angles.clone())?, &z)?;
        for j in 0..angles.len() {
            let mut plus = angles.clone();
            plus[j] += H;
            let mut minus = angles.clone();
            minus[j] -= H;
            let fp = run_ansatz(&spec, &CircuitParams::new(&spec, plus)?, &z)?;
            let fm = run_ansatz(&spec, &CircuitParams::new(&spec, minus)?, &z)?;
            for i in 0..spec.feature_width() {
                let fd = (fp.values()[i] - fm.values()[i]) / (2.0 * H);
                worst = worst.max((shift.get(i, j) - fd).abs());
                entries += 1;
            }
        }
    }
    let secs = start.elapsed();
    verdict(
        worst < 1e-6 && secs < Duration::from_secs(60),
        format!("max |shift - fd| = {worst:.2e} over {entries} entries in {:.2}s", secs.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- 2

/// Dense complex matrix, row-major.
#[derive(Clone)]
struct Mat {
    dim: usize,
    a: Vec<Complex64>,
}

impl Mat {
    fn identity(dim: usize) -> Self {
        let mut a = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            a[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Mat { dim, a }
    }

    fn kron(&self, o: &Mat) -> Mat {
        let dim = self.dim * o.dim;
        let mut a = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..o.dim {
                    for l in 0..o.dim {
                        a[(i * o.dim + k) * dim + j * o.dim + l] = self.a[i * self.dim + j] * o.a[k * o.dim + l];
                    }
                }
            }
        }
        Mat { dim, a }
    }

    fn mul(&self, o: &Mat) -> Mat {
        let n = self.dim;
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                for j in 0..n {
                    a[i * n + j] += x * o.a[k * n + j];
                }
            }
        }
        Mat { dim: n, a }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rotation(axis: char, t: f64) -> Mat {
    let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
    let a = match axis {
        'x' => vec![c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)],
        'y' => vec![c(co, 0.0), c(-si, 0.0), c(si, 0.0), c(co, 0.0)],
        _ => vec![c(co, -si), c(0.0, 0.0), c(0.0, 0.0), c(co, si)],
    };
    Mat { dim: 2, a }
}

/// `u` on `qubit` of an `n`-qubit register; qubit 0 is the rightmost
/// Kronecker factor.
fn lift(n: usize, qubit: usize, u: &Mat) -> Mat {
    let id = Mat::identity(2);
    let mut m = Mat::identity(1);
    for q in (0..n).rev() {
        m = m.kron(if q == qubit { u } else { &id });
    }
    m
}

fn cz_matrix(n: usize, a: usize, b: usize) -> Mat {
    let mut m = Mat::identity(1 << n);
    for i in 0..1 << n {
        if (i >> a) & 1 == 1 && (i >> b) & 1 == 1 {
            m.a[i * (1 << n) + i] = c(-1.0, 0.0);
        }
    }
    m
}

fn cnot_matrix(n: usize, control: usize, target: usize) -> Mat {
    let dim = 1 << n;
    let mut a = vec![c(0.0, 0.0); dim * dim];
    for i in 0..dim {
        let j = if (i >> control) & 1 == 1 { i ^ (1 << target) } else { i };
        a[j * dim + i] = c(1.0, 0.0);
    }
    Mat { dim, a }
}

fn gate_matrix(n: usize, g: &Gate) -> Mat {
    match *g {
        Gate::Rx { qubit, theta } => lift(n, qubit, &rotation('x', theta)),
        Gate::Ry { qubit, theta } => lift(n, qubit, &rotation('y', theta)),
        Gate::Rz { qubit, theta } => lift(n, qubit, &rotation('z', theta)),
        Gate::Cz { a, b } => cz_matrix(n, a, b),
        Gate::Cnot { control, target } => cnot_matrix(n, control, target),
    }
}

/// First column of the product unitary, i.e. the image of |0…0⟩.
fn oracle_state(n: usize, gates: &[Gate]) -> Vec<Complex64> {
    let mut u = Mat::identity(1 << n);
    for g in gates {
        u = gate_matrix(n, g).mul(&u);
    }
    (0..1 << n).map(|i| u.a[i * (1 << n)]).collect()
}

fn oracle_pairs(n: usize, ent: Entanglement) -> Vec<(usize, usize)> {
    match ent {
        Entanglement::AllToAll => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        Entanglement::Ring if n == 2 => vec![(0, 1)],
        Entanglement::Ring if n > 2 => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        Entanglement::Ring => Vec::new(),
    }
}

fn simulator_vs_unitary_oracle() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = r.random_range(2..=4);
        let layers = r.random_range(1..=3);
        let patches = r.random_range(1..=2);
        let ent = if r.random() { Entanglement::AllToAll } else { Entanglement::Ring };
        let spec = CircuitSpec::new(n, layers, patches, ent)?;
        let angles: Vec<f64> = (0..spec.num_angles()).map(|_| r.random_range(-PI..PI)).collect();
        let z: Vec<f64> = (0..spec.feature_width()).map(|_| r.random_range(-1.0..=1.0)).collect();
        let got = run_ansatz(&spec, &CircuitParams::new(&spec, angles.clone())?, &z)?;
        for p in 0..patches {
            let mut gates = Vec::new();
            for q in 0..n {
                gates.push(Gate::Ry { qubit: q, theta: z[p * n + q].acos() });
            }
            for l in 0..layers {
                for q in 0..n {
                    let base = ((p * layers + l) * n + q) * 3;
                    gates.push(Gate::Rx { qubit: q, theta: angles[base] });
                    gates.push(Gate::Ry { qubit: q, theta: angles[base + 1] });
                    gates.push(Gate::Rz { qubit: q, theta: angles[base + 2] });
                }
                for (a, b) in oracle_pairs(n, ent) {
                    gates.push(Gate::Cz { a, b });
                }
            }
            let psi = oracle_state(n, &gates);
            for q in 0..n {
                let ez: f64 = psi
                    .iter()
                    .enumerate()
                    .map(|(i, a)| if (i >> q) & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
                    .sum();
                worst = worst.max((got.values()[p * n + q] - ez).abs());
            }
        }
    }

    let mut state = StateVector::zero(6)?;
    let mut drift = 0.0f64;
    for _ in 0..1000 {
        let q = r.random_range(0..6);
        let mut other = r.random_range(0..5);
        if other >= q {
            other += 1;
        }
        let theta = r.random_range(-PI..PI);
        let g = match r.random_range(0..5) {
            0 => Gate::Rx { qubit: q, theta },
            1 => Gate::Ry { qubit: q, theta },
            2 => Gate::Rz { qubit: q, theta },
            3 => Gate::Cz { a: q, b: other },
            _ => Gate::Cnot { control: q, target: other },
        };
        state.apply(&g)?;
        drift = drift.max((state.norm() - 1.0).abs());
    }
    verdict(
        worst < 1e-10 && drift < 1e-12,
        format!("max feature error {worst:.2e} on 50 circuits; norm drift {drift:.2e} over 1000 gates"),
    )
}

// ---------------------------------------------------------------- 3

fn gp_machinery() -> Outcome {
    const H: f64 = 1e-6;
    let mut r = rng(3);
    let acts = [Activation::Tanh, Activation::Sigmoid, Activation::LeakyRelu, Activation::Identity];
    let mut worst = 0.0f64;
    for k in 0..50 {
        let net = if k < 25 {
            let mut widths = vec![r.random_range(2..=12)];
            for _ in 0..r.random_range(1..=2) {
                widths.push(r.random_range(2..=10));
            }
            widths.push(1);
            let hidden = acts[r.random_range(0..acts.len())];
            let out = acts[r.random_range(0..acts.len())];
            DenseNet::glorot(&widths, hidden, out, &mut r)?
        } else {
            let names = ["MolGAN", "QGAN-HG", "QWGAN-HG-GP", "QWGAN-GP-HG-P4-L2"];
            let cfg = preset(names[k % names.len()])?;
            CriticModel::init(&cfg, &mut r)?.net().clone()
        };
        let x: Vec<f64> = (0..net.input_width()).map(|_| r.random_range(-1.0..1.0)).collect();
        let (_, tape) = net.forward(&x)?;
        let g = net.backward(&tape, &[1.0])?.input;
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += H;
            let mut xm = x.clone();
            xm[i] -= H;
            let fd = (net.predict(&xp)?[0] - net.predict(&xm)?[0]) / (2.0 * H);
            worst = worst.max((g[i] - fd).abs() / scale);
        }
    }

    let width = qmolgen_core::metrics::EMBED_WIDTH;
    let mut unit = vec![0.0; width];
    unit[..4].fill(0.5);
    let linear = CriticModel::new(DenseNet::new(vec![Layer::new(width, 1, unit, vec![0.25], Activation::Identity)?])?)?;
    let constant = CriticModel::new(DenseNet::new(vec![Layer::new(
        width,
        1,
        vec![0.0; width],
        vec![0.7],
        Activation::Identity,
    )?])?)?;
    let batch = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..8).map(|_| (0..width).map(|_| r.random()).collect()).collect()
    };
    let (real, fake) = (batch(&mut r), batch(&mut r));
    let k = 10.0;
    let zero = gradient_penalty(&linear, &real, &fake, k, &mut r)?;
    let full = gradient_penalty(&constant, &real, &fake, k, &mut r)?;
    verdict(
        worst < 1e-5 && zero == 0.0 && full == k,
        format!("max relative input-gradient error {worst:.2e} on 50 nets; GP unit-linear {zero}, constant {full} (k = {k})"),
    )
}

// ---------------------------------------------------------------- 4

/// Principal square root by Denman–Beavers iteration.
fn sqrtm_newton(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse().expect("invertible");
        let zi = z.clone().try_inverse().expect("invertible");
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta < 1e-15 * y.norm() {
            break;
        }
    }
    y
}

fn frechet_oracle(m1: &[f64], c1: &DMatrix<f64>, m2: &[f64], c2: &DMatrix<f64>) -> f64 {
    let mean: f64 = m1.iter().zip(m2).map(|(a, b)| (a - b).powi(2)).sum();
    mean + c1.trace() + c2.trace() - 2.0 * sqrtm_newton(&(c1 * c2)).trace()
}

fn random_psd(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let m = &a * a.transpose() + DMatrix::identity(n, n) * 0.05;
    (&m + m.transpose()) * 0.5
}

fn frechet_checks() -> Outcome {
    let mut r = rng(4);
    let c = random_psd(&mut r, 5);
    let m: Vec<f64> = (0..5).map(|_| r.random_range(-1.0..1.0)).collect();
    let s = BatchStatistics::new(m.clone(), c.clone())?;
    let same = frechet_distance(&s, &s)?;
    let one_d = frechet_distance(
        &BatchStatistics::new(vec![0.0], DMatrix::from_element(1, 1, 1.0))?,
        &BatchStatistics::new(vec![1.0], DMatrix::from_element(1, 1, 1.0))?,
    )?;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (c1, c2) = (random_psd(&mut r, 5), random_psd(&mut r, 5));
        let m1: Vec<f64> = (0..5).map(|_| r.random_range(-2.0..2.0)).collect();
        let m2: Vec<f64> = (0..5).map(|_| r.random_range(-2.0..2.0)).collect();
        let got = frechet_distance(&BatchStatistics::new(m1.clone(), c1.clone())?, &BatchStatistics::new(m2.clone(), c2.clone())?)?;
        worst = worst.max((got - frechet_oracle(&m1, &c1, &m2, &c2)).abs());
    }
    verdict(
        same.abs() < 1e-9 && (one_d - 1.0).abs() < 1e-9 && worst < 1e-8,
        format!("identical {same:.2e}; 1-D {one_d}; max oracle gap {worst:.2e} on 20 pairs"),
    )
}

// ---------------------------------------------------------------- 5

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn wasserstein_exact() -> Outcome {
    let mut r = rng(5);
    let mut sets = 0;
    let mut mismatches = 0;
    for n in 1..=6 {
        let perms = permutations(n);
        for _ in 0..200 {
            let draw = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
                (0..n).map(|_| r.random_range(-20..=20) as f64 * 0.25).collect()
            };
            let (a, b) = (draw(&mut r), draw(&mut r));
            let best = perms
                .iter()
                .map(|p| p.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).abs()).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                / n as f64;
            if wasserstein1_1d(&a, &b)? != best {
                mismatches += 1;
            }
            sets += 1;
        }
    }
    verdict(mismatches == 0, format!("{mismatches} mismatches over {sets} sample-set pairs (n = 1..6)"))
}

// ---------------------------------------------------------------- 6

fn valence(code: u8) -> u32 {
    [0, 4, 3, 2, 1][code as usize]
}

/// All 3-slot atom vectors (padding included) with every bond assignment
/// that does not touch padding.
fn small_graphs() -> Vec<(Vec<u8>, Vec<Vec<u8>>)> {
    let mut out = Vec::new();
    for a in 0..125u32 {
        let atoms = vec![(a % 5) as u8, (a / 5 % 5) as u8, (a / 25) as u8];
        for b in 0..64u32 {
            let (b01, b02, b12) = ((b % 4) as u8, (b / 4 % 4) as u8, (b / 16) as u8);
            let bonds = vec![vec![0, b01, b02], vec![b01, 0, b12], vec![b02, b12, 0]];
            let touches_pad = (0..3).any(|i| (0..3).any(|j| bonds[i][j] != 0 && (atoms[i] == 0 || atoms[j] == 0)));
            if !touches_pad {
                out.push((atoms.clone(), bonds));
            }
        }
    }
    out
}

fn oracle_valid(atoms: &[u8], bonds: &[Vec<u8>]) -> bool {
    let heavy: Vec<usize> = (0..atoms.len()).filter(|&i| atoms[i] != 0).collect();
    if heavy.is_empty() {
        return false;
    }
    for &i in &heavy {
        let used: u32 = bonds[i].iter().map(|&b| b as u32).sum();
        if used > valence(atoms[i]) {
            return false;
        }
    }
    let mut seen = vec![heavy[0]];
    let mut k = 0;
    while k < seen.len() {
        let v = seen[k];
        for &u in &heavy {
            if bonds[v][u] != 0 && !seen.contains(&u) {
                seen.push(u);
            }
        }
        k += 1;
    }
    seen.len() == heavy.len()
}

fn validity_exhaustive() -> Outcome {
    let mut checked = 0;
    let mut disagreements = 0;
    let mut valid = 0;
    for (atoms, bonds) in small_graphs() {
        let g = MolecularGraph::from_codes(&atoms, &bonds)?;
        let expected = oracle_valid(&atoms, &bonds);
        valid += expected as usize;
        if g.is_valid() != expected {
            disagreements += 1;
        }
        checked += 1;
    }
    verdict(
        disagreements == 0,
        format!("{disagreements} disagreements over {checked} graphs ({valid} valid)"),
    )
}

// ---------------------------------------------------------------- 7

fn iso_by_permutation(a: &(Vec<u8>, Vec<Vec<u8>>), b: &(Vec<u8>, Vec<Vec<u8>>)) -> bool {
    permutations(3).iter().any(|p| {
        (0..3).all(|i| a.0[p[i]] == b.0[i]) && (0..3).all(|i| (0..3).all(|j| a.1[p[i]][p[j]] == b.1[i][j]))
    })
}

fn canonical_key_checks() -> Outcome {
    let mut r = rng(7);
    let graphs = data::load(None)?.graphs;
    let mut picks: Vec<usize> = (0..graphs.len()).collect();
    picks.shuffle(&mut r);
    let mut relabel_failures = 0;
    for &i in &picks[..100] {
        let g = &graphs[i];
        let key = canonical_key(g)?;
        for _ in 0..200 {
            let mut perm: [usize; N_MAX] = std::array::from_fn(|k| k);
            perm.shuffle(&mut r);
            if canonical_key(&g.permuted(&perm))? != key {
                relabel_failures += 1;
            }
        }
    }

    let three: Vec<(Vec<u8>, Vec<Vec<u8>>)> = small_graphs()
        .into_iter()
        .filter(|(a, b)| a.iter().all(|&x| x != 0) && oracle_valid(a, b))
        .collect();
    let keys: Vec<Vec<u8>> = three
        .iter()
        .map(|(a, b)| canonical_key(&MolecularGraph::from_codes(a, b).expect("graph")).expect("valid"))
        .collect();
    let mut pairs = 0u64;
    let mut pair_failures = 0u64;
    for i in 0..three.len() {
        for j in i..three.len() {
            if (keys[i] == keys[j]) != iso_by_permutation(&three[i], &three[j]) {
                pair_failures += 1;
            }
            pairs += 1;
        }
    }
    verdict(
        relabel_failures == 0 && pair_failures == 0,
        format!(
            "{relabel_failures} failures over 100 x 200 relabelings; {pair_failures} disagreements over {pairs} pairs of {} 3-atom graphs",
            three.len()
        ),
    )
}

// ---------------------------------------------------------------- 8

fn training_trend() -> Outcome {
    let start = Instant::now();
    let graphs = data::load(None)?.graphs;
    let config = preset("QWGAN-GP-HG-P2-L2")?;
    let seeds = [1u64, 2, 3, 4, 5];
    let drops: Vec<Result<(f64, f64), String>> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let (graphs, config) = (graphs.clone(), config.clone());
                s.spawn(move || -> Result<(f64, f64), String> {
                    let split = DatasetSplit::new(graphs, seed).map_err(|e| e.to_string())?;
                    let options = TrainOptions {
                        iterations: 300,
                        batch_size: 32,
                        eval_interval: 1,
                        eval_samples: 128,
                        seed,
                    };
                    let mut trainer = Trainer::new(config, options, &split).map_err(|e| e.to_string())?;
                    let log = trainer.run(|_, _| {}).map_err(|e| e.to_string())?;
                    let f: Vec<f64> = log.records().iter().map(|r| r.frechet).collect();
                    let first = f[..20].iter().sum::<f64>() / 20.0;
                    let last = f[f.len() - 20..].iter().sum::<f64>() / 20.0;
                    Ok((first, last))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread")).collect()
    });
    let mut passing = 0;
    let mut parts = Vec::new();
    for (seed, d) in seeds.iter().zip(&drops) {
        match d {
            Ok((first, last)) => {
                let drop = 1.0 - last / first;
                if last < first && drop >= 0.30 {
                    passing += 1;
                }
                parts.push(format!("seed {seed}: {first:.2} -> {last:.2} ({:.0}%)", 100.0 * drop));
            }
            Err(e) => parts.push(format!("seed {seed}: error {e}")),
        }
    }
    verdict(
        passing >= 4,
        format!(
            "{passing}/5 seeds drop >= 30% [{}] in {:.0}s",
            parts.join("; "),
            start.elapsed().as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 9

fn train_is_byte_identical() -> Outcome {
    let dir = tempfile::tempdir()?;
    let run_a = RunConfig::for_preset("QGAN-HG", 20, 7, dir.path().join("a"));
    let mut run_b = run_a.clone();
    run_b.output_dir = dir.path().join("b");
    let a = cmd_train(&run_a, &TrainFlags::default())?;
    let b = cmd_train(&run_b, &TrainFlags::default())?;
    let bytes_a = std::fs::read(&a.log_path)?;
    let bytes_b = std::fs::read(&b.log_path)?;
    let ck_same = std::fs::read(&a.checkpoint_path)? == std::fs::read(&b.checkpoint_path)?;
    verdict(
        bytes_a == bytes_b && a.log.len() == 20 && ck_same,
        format!(
            "{} rows, {} bytes, logs identical {}, checkpoints identical {ck_same}",
            a.log.len(),
            bytes_a.len(),
            bytes_a == bytes_b
        ),
    )
}

// ---------------------------------------------------------------- 10

fn range_problems(r: &MetricsReport) -> Vec<String> {
    let mut bad = Vec::new();
    let unit = [
        ("validity", r.validity),
        ("uniqueness", r.uniqueness),
        ("novelty", r.novelty),
        ("diversity", r.diversity),
        ("qed_score", r.qed_score),
        ("drug_candidate_score", r.drug_candidate_score),
    ];
    for (name, v) in unit {
        if !(0.0..=1.0).contains(&v) {
            bad.push(format!("{} {name} = {v}", r.label));
        }
    }
    if !(r.frechet >= 0.0 && r.frechet.is_finite()) {
        bad.push(format!("{} frechet = {}", r.label, r.frechet));
    }
    if !(r.wasserstein >= 0.0 && r.wasserstein.is_finite()) {
        bad.push(format!("{} wasserstein = {}", r.label, r.wasserstein));
    }
    if !(1.0..=10.0).contains(&r.sa_score) || !(-5.0..=5.0).contains(&r.np_score) || !r.logp_score.is_finite() {
        bad.push(format!("{} sa/np/logp = {}/{}/{}", r.label, r.sa_score, r.np_score, r.logp_score));
    }
    bad.extend(r.range_violations());
    bad
}

fn mol(atoms: &[Atom], bonds: &[(usize, usize, Bond)]) -> MolecularGraph {
    let mut g = MolecularGraph::with_atoms(atoms).expect("atoms");
    for &(i, j, b) in bonds {
        g.set_bond(i, j, b).expect("bond");
    }
    g
}

fn single_chain(atoms: &[Atom]) -> MolecularGraph {
    let bonds: Vec<(usize, usize, Bond)> = (1..atoms.len()).map(|i| (i - 1, i, Bond::Single)).collect();
    mol(atoms, &bonds)
}

/// Hand-evaluated scores for one fixture, from the builtin table values.
struct Expected {
    name: &'static str,
    mol: MolecularGraph,
    logp: f64,
    /// `(x - mu) / sigma` for molecular weight, acceptors, donors,
    /// rotatable bonds and rings.
    qed_z: [f64; 5],
    sa: f64,
    np: f64,
    novel: bool,
}

fn fixture_scores() -> Result<(usize, f64), Box<dyn Error>> {
    use Atom::{C, F, N, O};
    let t = ScoreTables::builtin();
    // Reference corpus: ethane, ethanol, methanol. Radius-1 environment
    // counts: C-(C) 3, C-(C,O) 1, O-(C) 2, C-(O) 1; maximum 3. The NP
    // reference (oxygen-bearing) keeps ethanol and methanol: C-(C) 1,
    // C-(C,O) 1, O-(C) 2, C-(O) 1.
    let training = vec![single_chain(&[C, C]), single_chain(&[C, C, O]), single_chain(&[C, O])];
    let envs = EnvironmentTable::from_graphs(&training);
    let np_model = NpModel::oxygen_rich_reference(&training);
    let keys: HashSet<Vec<u8>> = training.iter().map(|g| canonical_key(g).unwrap()).collect();

    let (mc, mn, mo, mf, mh) = (12.011, 14.007, 15.999, 18.998, 1.008);
    let qz = |mw: f64, hba: f64, hbd: f64, rot: f64, rings: f64| {
        [(mw - 300.0) / 120.0, (hba - 3.0) / 2.5, (hbd - 1.0) / 1.5, (rot - 3.0) / 3.0, (rings - 1.0) / 1.0]
    };
    let ln4 = 4.0f64.ln();
    let fixtures = vec![
        Expected {
            name: "methane",
            mol: single_chain(&[C]),
            logp: 0.1441 + 4.0 * 0.1230,
            qed_z: qz(mc + 4.0 * mh, 0.0, 0.0, 0.0, 0.0),
            sa: 1.0 + ln4,
            np: 0.0,
            novel: true,
        },
        Expected {
            name: "ethanol",
            mol: single_chain(&[C, C, O]),
            logp: (0.1441 + 3.0 * 0.1230) + (-0.2035 + 2.0 * 0.1230) + (-0.2893 + 0.2980),
            qed_z: qz(2.0 * mc + mo + 6.0 * mh, 1.0, 1.0, 0.0, 0.0),
            sa: 1.0 + (0.0 + (4.0f64 / 2.0).ln() + (4.0f64 / 3.0).ln()) / 3.0,
            np: (2.0f64 / 4.0).ln() / 3.0,
            novel: false,
        },
        Expected {
            name: "acetonitrile",
            mol: mol(&[C, C, N], &[(0, 1, Bond::Single), (1, 2, Bond::Triple)]),
            logp: (0.1441 + 3.0 * 0.1230) - 0.2035 - 0.4806,
            qed_z: qz(2.0 * mc + mn + 3.0 * mh, 1.0, 0.0, 0.0, 0.0),
            sa: 1.0 + 2.0 * ln4 / 3.0,
            np: (2.0f64 / 4.0).ln() / 3.0,
            novel: true,
        },
        Expected {
            name: "cyclopropane",
            mol: mol(&[C, C, C], &[(0, 1, Bond::Single), (1, 2, Bond::Single), (0, 2, Bond::Single)]),
            logp: 3.0 * (0.1441 + 2.0 * 0.1230),
            qed_z: qz(3.0 * mc + 6.0 * mh, 0.0, 0.0, 0.0, 1.0),
            sa: 1.0 + ln4 + 0.5,
            np: 0.0,
            novel: true,
        },
        Expected {
            name: "1-fluoroheptane",
            mol: single_chain(&[F, C, C, C, C, C, C, C]),
            logp: 0.4202 + (-0.2035 + 2.0 * 0.1230) + 5.0 * (0.1441 + 2.0 * 0.1230) + (0.1441 + 3.0 * 0.1230),
            qed_z: qz(7.0 * mc + mf + 15.0 * mh, 0.0, 0.0, 5.0, 0.0),
            sa: 1.0 + 7.0 * ln4 / 8.0 + 0.25 * 2.0,
            np: (2.0f64 / 4.0).ln() / 8.0,
            novel: true,
        },
    ];
    let mut worst = 0.0f64;
    for e in &fixtures {
        let qed_hand = (-e.qed_z.iter().map(|z| 0.5 * z * z).sum::<f64>() / 5.0).exp();
        let hump = (-0.5 * ((e.logp - 2.0) / 2.0).powi(2)).exp();
        let novelty: f64 = if e.novel { 1.0 } else { 0.5 };
        let drug_hand = ((qed_hand.ln() + hump.ln() + ((10.0 - e.sa) / 9.0).ln() + novelty.ln()) / 4.0).exp();
        let got = [
            logp(&e.mol, &t)?,
            qed(&e.mol, &t)?,
            sa_score(&e.mol, &envs, &t)?,
            np_score(&e.mol, &np_model, &t)?,
            drug_candidate_score(&e.mol, &keys, &envs, &t),
        ];
        let want = [e.logp, qed_hand, e.sa, e.np, drug_hand];
        for (k, (g, w)) in got.iter().zip(want).enumerate() {
            let err = (g - w).abs();
            if err >= 1e-12 {
                return Err(format!("{} score {k}: got {g}, hand {w}", e.name).into());
            }
            worst = worst.max(err);
        }
    }
    Ok((fixtures.len(), worst))
}

fn metric_ranges() -> Outcome {
    let dir = tempfile::tempdir()?;
    let run = RunConfig::for_preset("QWGAN-GP-HG-P2-L1", 30, 11, dir.path().join("run"));
    let trained = cmd_train(&run, &TrainFlags::default())?;
    let generated = cmd_evaluate(&EvaluateRequest {
        checkpoint: trained.checkpoint_path,
        dataset: None,
        n_samples: 1000,
        seed: 11,
        output: dir.path().join("eval"),
        config: Some(run),
    })?
    .report;

    let graphs = data::load(None)?.graphs;
    let ctx = ChemContext::from_training(&graphs, ScoreTables::builtin());
    let stats = BatchStatistics::of_batch(&graphs)?;
    let dataset = MetricsReport::new(
        "dataset",
        frechet_distance(&stats, &stats)?,
        0.0,
        batch_quality(&graphs, &ctx.training_keys)?,
        chem_scores(&graphs, &ctx)?,
    );
    let mut problems = range_problems(&generated);
    problems.extend(range_problems(&dataset));
    let t = &ctx.tables;
    for g in &graphs {
        let q = qed(g, t)?;
        let sa = sa_score(g, &ctx.training_envs, t)?;
        let np = np_score(g, &ctx.np, t)?;
        let d = drug_candidate_score(g, &ctx.training_keys, &ctx.training_envs, t);
        if !(0.0..=1.0).contains(&q) || !(1.0..=10.0).contains(&sa) || !(-5.0..=5.0).contains(&np) || !(0.0..=1.0).contains(&d) {
            problems.push(format!("dataset molecule out of range: qed {q} sa {sa} np {np} drug {d}"));
        }
    }
    let (n_fixtures, worst) = fixture_scores()?;
    verdict(
        problems.is_empty(),
        format!(
            "{} range problems over 1000 generated (validity {:.3}) + 1000 dataset molecules; {n_fixtures} fixtures match hand values (max error {worst:.1e}){}",
            problems.len(),
            generated.validity,
            if problems.is_empty() { String::new() } else { format!(": {}", problems.join("; ")) }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("quantum gradient correctness", parameter_shift_vs_finite_differences),
        ("simulator fidelity", simulator_vs_unitary_oracle),
        ("gradient-penalty machinery", gp_machinery),
        ("Frechet distance", frechet_checks),
        ("Wasserstein-1 exactness", wasserstein_exact),
        ("validity oracle", validity_exhaustive),
        ("canonical key", canonical_key_checks),
        ("training trend", training_trend),
        ("determinism", train_is_byte_identical),
        ("metric ranges", metric_ranges),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}").into())
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
