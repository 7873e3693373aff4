//! Continuous relaxation of [`MolecularGraph`] exchanged between generator
//! and critic.

use super::{Atom, Bond, GraphError, MolecularGraph, N_MAX};

pub const ATOM_TYPES: usize = 5;
pub const BOND_TYPES: usize = 4;

const SIMPLEX_TOL: f64 = 1e-9;

/// Per-atom type distributions and per-pair bond-type distributions.
///
/// `bond_probs` is stored row-major over `(i, j)` pairs, `N_MAX * N_MAX`
/// slices. Slices are symmetric and the diagonal is one-hot "none".
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGraph {
    atom_probs: Vec<[f64; ATOM_TYPES]>,
    bond_probs: Vec<[f64; BOND_TYPES]>,
}

fn check_simplex(p: &[f64], what: &str) -> Result<(), GraphError> {
    if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(GraphError::Dense(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(GraphError::Dense(format!("{what} sums to {s}")));
    }
    Ok(())
}

impl DenseGraph {
    pub fn new(
        atom_probs: Vec<[f64; ATOM_TYPES]>,
        bond_probs: Vec<[f64; BOND_TYPES]>,
    ) -> Result<Self, GraphError> {
        if atom_probs.len() != N_MAX || bond_probs.len() != N_MAX * N_MAX {
            return Err(GraphError::Dense("wrong tensor shape".into()));
        }
        for (i, row) in atom_probs.iter().enumerate() {
            check_simplex(row, &format!("atom row {i}"))?;
        }
        for i in 0..N_MAX {
            for j in 0..N_MAX {
                let s = &bond_probs[i * N_MAX + j];
                check_simplex(s, &format!("bond slice ({i}, {j})"))?;
                if s != &bond_probs[j * N_MAX + i] {
                    return Err(GraphError::Asymmetric(i, j));
                }
                if i == j && s != &[1.0, 0.0, 0.0, 0.0] {
                    return Err(GraphError::Dense(format!("diagonal slice {i} is not one-hot none")));
                }
            }
        }
        Ok(Self {
            atom_probs,
            bond_probs,
        })
    }

    /// One-hot encoding of a discrete graph.
    pub fn from_graph(mol: &MolecularGraph) -> Self {
        let atom_probs = (0..N_MAX)
            .map(|i| {
                let mut r = [0.0; ATOM_TYPES];
                r[mol.atom(i).code() as usize] = 1.0;
                r
            })
            .collect();
        let bond_probs = (0..N_MAX * N_MAX)
            .map(|k| {
                let mut r = [0.0; BOND_TYPES];
                r[mol.bond(k / N_MAX, k % N_MAX).code() as usize] = 1.0;
                r
            })
            .collect();
        Self {
            atom_probs,
            bond_probs,
        }
    }

    pub fn atom_probs(&self) -> &[[f64; ATOM_TYPES]] {
        &self.atom_probs
    }

    pub fn bond_probs(&self, i: usize, j: usize) -> &[f64; BOND_TYPES] {
        &self.bond_probs[i * N_MAX + j]
    }

    /// Argmax decoding; ties go to the lower code and bonds touching a
    /// padding atom are dropped.
    pub fn decode(&self) -> MolecularGraph {
        let mut atoms = [Atom::Pad; N_MAX];
        for (slot, row) in atoms.iter_mut().zip(&self.atom_probs) {
            *slot = Atom::ALL[argmax(row)];
        }
        let mut bonds = [[Bond::None; N_MAX]; N_MAX];
        for i in 0..N_MAX {
            for j in i + 1..N_MAX {
                if !atoms[i].is_heavy() || !atoms[j].is_heavy() {
                    continue;
                }
                let a = self.bond_probs(i, j);
                let b = self.bond_probs(j, i);
                let sym: [f64; BOND_TYPES] = std::array::from_fn(|k| 0.5 * (a[k] + b[k]));
                let bond = Bond::ALL[argmax(&sym)];
                bonds[i][j] = bond;
                bonds[j][i] = bond;
            }
        }
        MolecularGraph::from_parts_unchecked(atoms, bonds)
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = k;
        }
    }
    best
}

/// Free-function form of [`DenseGraph::decode`].
pub fn decode(dense: &DenseGraph) -> MolecularGraph {
    dense.decode()
}
