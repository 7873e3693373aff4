//! Molecular graphs: the discrete atom-vector/bond-matrix form, its
//! continuous relaxation, validity, canonical keys and fingerprints.

mod canon;
mod dense;
mod fingerprint;

use serde::{Deserialize, Serialize};

pub use canon::canonical_key;
pub use dense::{decode, DenseGraph, ATOM_TYPES, BOND_TYPES};
pub use fingerprint::{environment_keys, fingerprint, tanimoto, Fingerprint, FINGERPRINT_BITS};

/// Maximum number of heavy atoms per molecule.
pub const N_MAX: usize = 9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("atom code {0} outside 0..=4")]
    AtomCode(u8),
    #[error("bond code {0} outside 0..=3")]
    BondCode(u8),
    #[error("at most {N_MAX} atoms supported, got {0}")]
    TooManyAtoms(usize),
    #[error("bond matrix is not {0}x{0}")]
    BondShape(usize),
    #[error("bond matrix not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("self bond on atom {0}")]
    SelfBond(usize),
    #[error("bond ({0}, {1}) touches a padding atom")]
    BondToPadding(usize, usize),
    #[error("index {0} out of range")]
    Index(usize),
    #[error("molecule is not chemically valid")]
    InvalidMolecule,
    #[error("dense graph {0}")]
    Dense(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(u8)]
pub enum Atom {
    #[default]
    Pad = 0,
    C = 1,
    N = 2,
    O = 3,
    F = 4,
}

impl Atom {
    pub const ALL: [Atom; 5] = [Atom::Pad, Atom::C, Atom::N, Atom::O, Atom::F];

    pub fn from_code(code: u8) -> Result<Self, GraphError> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or(GraphError::AtomCode(code))
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_symbol(symbol: &str) -> Option<Self> {
        match symbol {
            "C" => Some(Atom::C),
            "N" => Some(Atom::N),
            "O" => Some(Atom::O),
            "F" => Some(Atom::F),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Atom::Pad => "*",
            Atom::C => "C",
            Atom::N => "N",
            Atom::O => "O",
            Atom::F => "F",
        }
    }

    /// Neutral valence; 0 for padding.
    pub fn max_valence(self) -> u8 {
        match self {
            Atom::Pad => 0,
            Atom::C => 4,
            Atom::N => 3,
            Atom::O => 2,
            Atom::F => 1,
        }
    }

    pub fn is_heavy(self) -> bool {
        self != Atom::Pad
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(u8)]
pub enum Bond {
    #[default]
    None = 0,
    Single = 1,
    Double = 2,
    Triple = 3,
}

impl Bond {
    pub const ALL: [Bond; 4] = [Bond::None, Bond::Single, Bond::Double, Bond::Triple];

    pub fn from_code(code: u8) -> Result<Self, GraphError> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or(GraphError::BondCode(code))
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    /// Bond order contributed to each endpoint's valence.
    pub fn order(self) -> u8 {
        self as u8
    }
}

/// Fixed-size atom vector plus symmetric bond matrix.
///
/// Construction enforces the structural invariants (symmetric, zero
/// diagonal, no bonds to padding); chemical validity is a separate check,
/// see [`MolecularGraph::is_valid`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct MolecularGraph {
    atoms: [Atom; N_MAX],
    bonds: [[Bond; N_MAX]; N_MAX],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    atoms: Vec<u8>,
    bonds: Vec<Vec<u8>>,
}

impl TryFrom<RawGraph> for MolecularGraph {
    type Error = GraphError;
    fn try_from(raw: RawGraph) -> Result<Self, GraphError> {
        if raw.atoms.len() != N_MAX {
            return Err(GraphError::TooManyAtoms(raw.atoms.len()));
        }
        MolecularGraph::from_codes(&raw.atoms, &raw.bonds)
    }
}

impl From<MolecularGraph> for RawGraph {
    fn from(g: MolecularGraph) -> Self {
        RawGraph {
            atoms: g.atom_codes(),
            bonds: g.bond_codes(),
        }
    }
}

impl MolecularGraph {
    /// Builds a graph from integer codes. `atoms` may be shorter than
    /// [`N_MAX`]; the remainder is padding. `bonds` must be square with the
    /// same size as `atoms`.
    pub fn from_codes(atoms: &[u8], bonds: &[Vec<u8>]) -> Result<Self, GraphError> {
        let n = atoms.len();
        if n > N_MAX {
            return Err(GraphError::TooManyAtoms(n));
        }
        if bonds.len() != n || bonds.iter().any(|row| row.len() != n) {
            return Err(GraphError::BondShape(n));
        }
        let mut g = MolecularGraph::default();
        for (slot, &code) in g.atoms.iter_mut().zip(atoms) {
            *slot = Atom::from_code(code)?;
        }
        for i in 0..n {
            for j in 0..n {
                let b = Bond::from_code(bonds[i][j])?;
                if bonds[j][i] != bonds[i][j] {
                    return Err(GraphError::Asymmetric(i, j));
                }
                if i == j && b != Bond::None {
                    return Err(GraphError::SelfBond(i));
                }
                if b != Bond::None && (!g.atoms[i].is_heavy() || !g.atoms[j].is_heavy()) {
                    return Err(GraphError::BondToPadding(i, j));
                }
                g.bonds[i][j] = b;
            }
        }
        Ok(g)
    }

    /// Graph with the given atoms in the leading slots and no bonds.
    pub fn with_atoms(atoms: &[Atom]) -> Result<Self, GraphError> {
        if atoms.len() > N_MAX {
            return Err(GraphError::TooManyAtoms(atoms.len()));
        }
        let mut g = MolecularGraph::default();
        g.atoms[..atoms.len()].copy_from_slice(atoms);
        Ok(g)
    }

    /// Sets the bond between `i` and `j` (both directions).
    pub fn set_bond(&mut self, i: usize, j: usize, bond: Bond) -> Result<(), GraphError> {
        if i >= N_MAX {
            return Err(GraphError::Index(i));
        }
        if j >= N_MAX {
            return Err(GraphError::Index(j));
        }
        if i == j {
            return if bond == Bond::None {
                Ok(())
            } else {
                Err(GraphError::SelfBond(i))
            };
        }
        if bond != Bond::None && (!self.atoms[i].is_heavy() || !self.atoms[j].is_heavy()) {
            return Err(GraphError::BondToPadding(i, j));
        }
        self.bonds[i][j] = bond;
        self.bonds[j][i] = bond;
        Ok(())
    }

    pub fn with_bond(mut self, i: usize, j: usize, bond: Bond) -> Result<Self, GraphError> {
        self.set_bond(i, j, bond)?;
        Ok(self)
    }

    pub(crate) fn from_parts_unchecked(
        atoms: [Atom; N_MAX],
        bonds: [[Bond; N_MAX]; N_MAX],
    ) -> Self {
        Self { atoms, bonds }
    }

    pub fn atom(&self, i: usize) -> Atom {
        self.atoms[i]
    }

    pub fn atoms(&self) -> &[Atom; N_MAX] {
        &self.atoms
    }

    pub fn bond(&self, i: usize, j: usize) -> Bond {
        self.bonds[i][j]
    }

    pub fn atom_codes(&self) -> Vec<u8> {
        self.atoms.iter().map(|a| a.code()).collect()
    }

    pub fn bond_codes(&self) -> Vec<Vec<u8>> {
        self.bonds
            .iter()
            .map(|row| row.iter().map(|b| b.code()).collect())
            .collect()
    }

    /// Indices of non-padding atoms, ascending.
    pub fn heavy_atoms(&self) -> impl Iterator<Item = usize> + '_ {
        (0..N_MAX).filter(move |&i| self.atoms[i].is_heavy())
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.heavy_atoms().count()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, Bond)> + '_ {
        (0..N_MAX).filter_map(move |j| {
            let b = self.bonds[i][j];
            (b != Bond::None).then_some((j, b))
        })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    /// Sum of bond orders at atom `i`.
    pub fn bond_order_sum(&self, i: usize) -> u8 {
        self.neighbors(i).map(|(_, b)| b.order()).sum()
    }

    /// Hydrogens needed to fill the neutral valence (0 when over-valent).
    pub fn implicit_hydrogens(&self, i: usize) -> u8 {
        self.atoms[i]
            .max_valence()
            .saturating_sub(self.bond_order_sum(i))
    }

    /// Bonded atom pairs `(i, j, bond)` with `i < j`.
    pub fn bond_list(&self) -> Vec<(usize, usize, Bond)> {
        let mut out = Vec::new();
        for i in 0..N_MAX {
            for j in i + 1..N_MAX {
                if self.bonds[i][j] != Bond::None {
                    out.push((i, j, self.bonds[i][j]));
                }
            }
        }
        out
    }

    /// True when the heavy-atom subgraph is connected (vacuously false when
    /// there are no heavy atoms).
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.heavy_atoms().next() else {
            return false;
        };
        let mut seen = [false; N_MAX];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for (u, _) in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        self.heavy_atoms().all(|i| seen[i])
    }

    /// Valence, non-emptiness and connectivity check.
    pub fn is_valid(&self) -> bool {
        self.heavy_atoms()
            .all(|i| self.bond_order_sum(i) <= self.atoms[i].max_valence())
            && self.is_connected()
    }

    /// Number of independent cycles (edges − vertices + components).
    pub fn ring_count(&self) -> usize {
        let n = self.heavy_atom_count();
        if n == 0 {
            return 0;
        }
        let e = self.bond_list().len();
        let components = self.component_count();
        (e + components).saturating_sub(n)
    }

    fn component_count(&self) -> usize {
        let mut seen = [false; N_MAX];
        let mut count = 0;
        for s in self.heavy_atoms() {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for (u, _) in self.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        count
    }

    /// Length of the shortest cycle through bond (i, j), if the bond is in a
    /// ring.
    pub fn smallest_ring_through(&self, i: usize, j: usize) -> Option<usize> {
        if self.bonds[i][j] == Bond::None {
            return None;
        }
        // BFS from i to j without using the edge (i, j).
        let mut dist = [usize::MAX; N_MAX];
        dist[i] = 0;
        let mut queue = std::collections::VecDeque::from([i]);
        while let Some(v) = queue.pop_front() {
            for (u, _) in self.neighbors(v) {
                if (v == i && u == j) || (v == j && u == i) {
                    continue;
                }
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        (dist[j] != usize::MAX).then(|| dist[j] + 1)
    }

    /// Atoms renumbered so that `perm[old] = new`.
    pub fn permuted(&self, perm: &[usize; N_MAX]) -> Self {
        let mut g = MolecularGraph::default();
        for old in 0..N_MAX {
            g.atoms[perm[old]] = self.atoms[old];
            for old_j in 0..N_MAX {
                g.bonds[perm[old]][perm[old_j]] = self.bonds[old][old_j];
            }
        }
        g
    }
}

/// Free-function form of [`MolecularGraph::is_valid`].
pub fn is_valid(mol: &MolecularGraph) -> bool {
    mol.is_valid()
}


#[cfg(test)]
mod tests {
    use super::tests_support::*;
    use super::*;

    #[test]
    fn validity_examples() {
        let c = MolecularGraph::with_atoms(&[Atom::C]).unwrap();
        assert!(c.is_valid());

        let mut star = MolecularGraph::with_atoms(&[Atom::C; 6]).unwrap();
        for k in 1..5 {
            star.set_bond(0, k, Bond::Single).unwrap();
        }
        star.set_bond(4, 5, Bond::Single).unwrap();
        assert!(star.is_valid());
        star.set_bond(0, 5, Bond::Single).unwrap();
        assert!(!star.is_valid());

        let split = MolecularGraph::with_atoms(&[Atom::C, Atom::C]).unwrap();
        assert!(!split.is_valid());
        assert!(!MolecularGraph::default().is_valid());
    }

    #[test]
    fn structural_invariants_enforced() {
        assert!(matches!(
            MolecularGraph::from_codes(&[1, 5], &[vec![0, 0], vec![0, 0]]),
            Err(GraphError::AtomCode(5))
        ));
        assert!(matches!(
            MolecularGraph::from_codes(&[1, 1], &[vec![0, 1], vec![2, 0]]),
            Err(GraphError::Asymmetric(0, 1))
        ));
        assert!(matches!(
            MolecularGraph::from_codes(&[1, 0], &[vec![0, 1], vec![1, 0]]),
            Err(GraphError::BondToPadding(0, 1))
        ));
        assert!(matches!(
            MolecularGraph::from_codes(&[1], &[vec![1]]),
            Err(GraphError::SelfBond(0))
        ));
        assert!(matches!(
            MolecularGraph::from_codes(&[1, 1], &[vec![0, 4], vec![4, 0]]),
            Err(GraphError::BondCode(4))
        ));
    }

    #[test]
    fn json_schema() {
        let g = chain(&[Atom::N, Atom::O]);
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["atoms"], serde_json::json!([2, 3, 0, 0, 0, 0, 0, 0, 0]));
        assert_eq!(v["bonds"][0][1], 1);
        assert_eq!(v["bonds"][1][0], 1);
        let back: MolecularGraph = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
        let bad = serde_json::json!({"atoms": [1, 1], "bonds": [[0, 1], [1, 0]]});
        assert!(serde_json::from_value::<MolecularGraph>(bad).is_err());
    }

    #[test]
    fn rings() {
        assert_eq!(chain(&[Atom::C; 5]).ring_count(), 0);
        let hex = carbon_ring(6);
        assert_eq!(hex.ring_count(), 1);
        assert_eq!(hex.smallest_ring_through(0, 1), Some(6));
        assert_eq!(chain(&[Atom::C; 3]).smallest_ring_through(0, 1), None);
    }

    #[test]
    fn implicit_h() {
        let g = chain(&[Atom::C, Atom::O]);
        assert_eq!(g.implicit_hydrogens(0), 3);
        assert_eq!(g.implicit_hydrogens(1), 1);
    }
}
