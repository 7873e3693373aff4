//! Simplified molecule scores: logP, QED, SA, NP and a drug-candidate
//! composite. All parameters come from [`ScoreTables`].

use std::collections::{HashMap, HashSet};

use super::tables::ScoreTables;
use super::MetricsError;
use crate::molgraph::{canonical_key, environment_keys, Atom, Bond, MolecularGraph};

/// Counts of radius-1 atom environments over a corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnvironmentTable {
    counts: HashMap<Vec<u8>, u64>,
    max: u64,
}

impl EnvironmentTable {
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a MolecularGraph>) -> Self {
        let mut counts: HashMap<Vec<u8>, u64> = HashMap::new();
        for g in graphs {
            for env in environment_keys(g) {
                *counts.entry(env).or_default() += 1;
            }
        }
        let max = counts.values().copied().max().unwrap_or(0);
        Self { counts, max }
    }

    pub fn count(&self, env: &[u8]) -> u64 {
        self.counts.get(env).copied().unwrap_or(0)
    }

    pub fn max_count(&self) -> u64 {
        self.max
    }
}

fn require_valid(mol: &MolecularGraph) -> Result<(), MetricsError> {
    if mol.is_valid() {
        Ok(())
    } else {
        Err(MetricsError::InvalidMolecule)
    }
}

fn hetero_neighbors(mol: &MolecularGraph, i: usize) -> usize {
    mol.neighbors(i)
        .filter(|&(j, _)| matches!(mol.atom(j), Atom::N | Atom::O | Atom::F))
        .count()
}

/// Atom-contribution logP with implicit-hydrogen terms.
pub fn logp(mol: &MolecularGraph, t: &ScoreTables) -> Result<f64, MetricsError> {
    require_valid(mol)?;
    let mut total = 0.0;
    for i in mol.heavy_atoms() {
        let atom = mol.atom(i);
        let ctx = hetero_neighbors(mol, i).min(3);
        total += t.logp[atom.code() as usize][ctx];
        let h_value = if atom == Atom::C {
            t.logp_h_carbon
        } else {
            t.logp_h_hetero
        };
        total += mol.implicit_hydrogens(i) as f64 * h_value;
    }
    Ok(total)
}

/// Inputs to the simplified QED.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QedProperties {
    pub molecular_weight: f64,
    pub hba: f64,
    pub hbd: f64,
    pub rotatable_bonds: f64,
    pub rings: f64,
}

pub fn molecular_weight(mol: &MolecularGraph, t: &ScoreTables) -> f64 {
    mol.heavy_atoms()
        .map(|i| t.mass[mol.atom(i).code() as usize] + mol.implicit_hydrogens(i) as f64 * t.mass_h)
        .sum()
}

pub fn rotatable_bonds(mol: &MolecularGraph) -> usize {
    mol.bond_list()
        .into_iter()
        .filter(|&(i, j, b)| {
            b == Bond::Single
                && mol.degree(i) >= 2
                && mol.degree(j) >= 2
                && mol.smallest_ring_through(i, j).is_none()
        })
        .count()
}

pub fn qed_properties(mol: &MolecularGraph, t: &ScoreTables) -> Result<QedProperties, MetricsError> {
    require_valid(mol)?;
    let polar = |i: usize| matches!(mol.atom(i), Atom::N | Atom::O);
    Ok(QedProperties {
        molecular_weight: molecular_weight(mol, t),
        hba: mol.heavy_atoms().filter(|&i| polar(i)).count() as f64,
        hbd: mol
            .heavy_atoms()
            .filter(|&i| polar(i) && mol.implicit_hydrogens(i) > 0)
            .count() as f64,
        rotatable_bonds: rotatable_bonds(mol) as f64,
        rings: mol.ring_count() as f64,
    })
}

/// Geometric mean of the five floored desirabilities.
pub fn qed_from_properties(p: &QedProperties, t: &ScoreTables) -> f64 {
    let d = [
        t.qed_mw.eval(p.molecular_weight),
        t.qed_hba.eval(p.hba),
        t.qed_hbd.eval(p.hbd),
        t.qed_rotb.eval(p.rotatable_bonds),
        t.qed_rings.eval(p.rings),
    ];
    geometric_mean(&d, t.qed_floor)
}

pub fn qed(mol: &MolecularGraph, t: &ScoreTables) -> Result<f64, MetricsError> {
    Ok(qed_from_properties(&qed_properties(mol, t)?, t))
}

fn geometric_mean(values: &[f64], floor: f64) -> f64 {
    let s: f64 = values.iter().map(|v| v.clamp(floor, 1.0).ln()).sum();
    (s / values.len() as f64).exp().min(1.0)
}

/// Structural complexity term of the SA score.
pub fn sa_penalty(mol: &MolecularGraph, t: &ScoreTables) -> f64 {
    let rings = mol.ring_count() as f64;
    let macrocycle = mol
        .bond_list()
        .into_iter()
        .any(|(i, j, _)| mol.smallest_ring_through(i, j).is_some_and(|s| s > 6));
    let atoms = mol.heavy_atom_count() as f64;
    t.sa_ring_weight * rings
        + if macrocycle { t.sa_macrocycle_weight } else { 0.0 }
        + t.sa_size_weight * (atoms - t.sa_size_free).max(0.0)
}

/// Environment rarity against the training split plus complexity penalty,
/// rescaled to [1, 10].
pub fn sa_score(
    mol: &MolecularGraph,
    training: &EnvironmentTable,
    t: &ScoreTables,
) -> Result<f64, MetricsError> {
    require_valid(mol)?;
    let envs = environment_keys(mol);
    let top = training.max_count() as f64 + 1.0;
    let rarity = envs
        .iter()
        .map(|e| (top / (training.count(e) as f64 + 1.0)).ln())
        .sum::<f64>()
        / envs.len() as f64;
    Ok((1.0 + t.sa_scale * (rarity + sa_penalty(mol, t))).clamp(1.0, 10.0))
}

/// Environment-frequency tables for the NP-likeness stand-in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NpModel {
    pub reference: EnvironmentTable,
    pub all: EnvironmentTable,
}

impl NpModel {
    pub fn new(reference: EnvironmentTable, all: EnvironmentTable) -> Self {
        Self { reference, all }
    }

    /// Reference split = molecules with at least one oxygen and no more
    /// nitrogens than oxygens, an oxygen-rich proxy for natural products.
    pub fn oxygen_rich_reference(graphs: &[MolecularGraph]) -> Self {
        let count = |g: &MolecularGraph, a: Atom| g.heavy_atoms().filter(|&i| g.atom(i) == a).count();
        let reference = graphs.iter().filter(|g| {
            let o = count(g, Atom::O);
            o > 0 && count(g, Atom::N) <= o
        });
        Self::new(EnvironmentTable::from_graphs(reference), EnvironmentTable::from_graphs(graphs))
    }
}

pub fn np_score(mol: &MolecularGraph, model: &NpModel, t: &ScoreTables) -> Result<f64, MetricsError> {
    require_valid(mol)?;
    let s = t.np_smoothing;
    let envs = environment_keys(mol);
    let mean = envs
        .iter()
        .map(|e| ((model.reference.count(e) as f64 + s) / (model.all.count(e) as f64 + s)).ln())
        .sum::<f64>()
        / envs.len() as f64;
    Ok(mean.clamp(-t.np_clamp, t.np_clamp))
}

/// Geometric mean of QED, logP desirability, SA desirability and a novelty
/// indicator. Invalid molecules score 0.
pub fn drug_candidate_score(
    mol: &MolecularGraph,
    training_keys: &HashSet<Vec<u8>>,
    training_envs: &EnvironmentTable,
    t: &ScoreTables,
) -> f64 {
    if !mol.is_valid() {
        return 0.0;
    }
    let q = qed(mol, t).expect("valid");
    let lp = logp(mol, t).expect("valid");
    let sa = sa_score(mol, training_envs, t).expect("valid");
    let novel = !training_keys.contains(&canonical_key(mol).expect("valid"));
    drug_candidate_from_components(q, lp, sa, novel, t)
}

pub fn drug_candidate_from_components(qed: f64, logp: f64, sa: f64, novel: bool, t: &ScoreTables) -> f64 {
    let parts = [
        qed,
        t.drug_logp.eval(logp),
        (10.0 - sa) / 9.0,
        if novel { t.drug_novel } else { t.drug_known },
    ];
    geometric_mean(&parts, t.drug_floor)
}
