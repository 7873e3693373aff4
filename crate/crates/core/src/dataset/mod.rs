//! QM9-style molecule files to training graphs.

mod sdf;

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::molgraph::{Atom, Bond, MolecularGraph, N_MAX};

pub use sdf::{parse_sdf, write_mol_block, ParseOutcome, ParseWarning, SdfRecord};

/// About a thousand synthetic QM9-style molecules (explicit hydrogens) plus a
/// few records the loader rejects. Regenerate with the `synth_sample`
/// example.
pub const BUNDLED_SAMPLE: &[u8] = include_bytes!("../../data/qm9_sample.sdf");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("dataset is empty")]
    Empty,
    #[error("graph {0} in split is not a valid molecule")]
    InvalidGraph(usize),
    #[error("batch size {requested} exceeds dataset size {available}")]
    BatchTooLarge { requested: usize, available: usize },
}

/// Why a parsed record was not turned into a training graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    TooLarge,
    UnsupportedBond,
    InvalidValence,
    UnsupportedElement,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::TooLarge => "too_large",
            Rejection::UnsupportedBond => "unsupported_bond",
            Rejection::InvalidValence => "invalid_valence",
            Rejection::UnsupportedElement => "unsupported_element",
        })
    }
}

/// Maps a heavy-atom record onto the padded atom vector / bond matrix.
pub fn to_graph(record: &SdfRecord) -> Result<MolecularGraph, Rejection> {
    if record.atom_symbols.len() > N_MAX {
        return Err(Rejection::TooLarge);
    }
    if record.bond_triples.iter().any(|&(_, _, o)| o > 3) {
        return Err(Rejection::UnsupportedBond);
    }
    let atoms = record
        .atom_symbols
        .iter()
        .map(|s| Atom::from_symbol(s).ok_or(Rejection::UnsupportedElement))
        .collect::<Result<Vec<_>, _>>()?;
    let mut g = MolecularGraph::with_atoms(&atoms).map_err(|_| Rejection::TooLarge)?;
    for &(i, j, order) in &record.bond_triples {
        let bond = Bond::from_code(order).map_err(|_| Rejection::UnsupportedBond)?;
        if i == 0 || j == 0 {
            return Err(Rejection::InvalidValence);
        }
        g.set_bond(i - 1, j - 1, bond)
            .map_err(|_| Rejection::InvalidValence)?;
    }
    if !g.is_valid() {
        return Err(Rejection::InvalidValence);
    }
    Ok(g)
}

/// Inverse of [`to_graph`] for a valid graph.
pub fn to_record(mol: &MolecularGraph, name: &str) -> SdfRecord {
    let heavy: Vec<usize> = mol.heavy_atoms().collect();
    let mut index_of = [0usize; N_MAX];
    for (k, &i) in heavy.iter().enumerate() {
        index_of[i] = k + 1;
    }
    SdfRecord {
        name: name.to_string(),
        atom_symbols: heavy
            .iter()
            .map(|&i| mol.atom(i).symbol().to_string())
            .collect(),
        bond_triples: mol
            .bond_list()
            .into_iter()
            .map(|(i, j, b)| (index_of[i], index_of[j], b.order()))
            .collect(),
    }
}

/// Parse and filter statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub blocks: usize,
    pub parse_failures: usize,
    pub accepted: usize,
    pub rejected: BTreeMap<Rejection, usize>,
}

impl LoadReport {
    pub fn acceptance_rate(&self) -> f64 {
        if self.blocks == 0 {
            0.0
        } else {
            self.accepted as f64 / self.blocks as f64
        }
    }
}

/// Parses SDF bytes and keeps the records that map onto valid graphs.
pub fn load_sdf(input: &[u8]) -> (Vec<MolecularGraph>, LoadReport) {
    let parsed = parse_sdf(input);
    let mut report = LoadReport {
        blocks: parsed.records.len() + parsed.warnings.len(),
        parse_failures: parsed.warnings.len(),
        ..Default::default()
    };
    let mut graphs = Vec::new();
    for record in &parsed.records {
        match to_graph(record) {
            Ok(g) => graphs.push(g),
            Err(r) => *report.rejected.entry(r).or_default() += 1,
        }
    }
    report.accepted = graphs.len();
    (graphs, report)
}

/// Immutable pool of valid training graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    graphs: Vec<MolecularGraph>,
    seed: u64,
}

impl DatasetSplit {
    pub fn new(graphs: Vec<MolecularGraph>, seed: u64) -> Result<Self, DatasetError> {
        if graphs.is_empty() {
            return Err(DatasetError::Empty);
        }
        if let Some(i) = graphs.iter().position(|g| !g.is_valid()) {
            return Err(DatasetError::InvalidGraph(i));
        }
        Ok(Self { graphs, seed })
    }

    pub fn graphs(&self) -> &[MolecularGraph] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Uniform sample without replacement.
pub fn sample_batch<R: Rng + ?Sized>(
    split: &DatasetSplit,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<MolecularGraph>, DatasetError> {
    if batch_size > split.len() {
        return Err(DatasetError::BatchTooLarge {
            requested: batch_size,
            available: split.len(),
        });
    }
    Ok(rand::seq::index::sample(rng, split.len(), batch_size)
        .into_iter()
        .map(|i| split.graphs[i].clone())
        .collect())
}
