//! Hashed local-environment fingerprints and Tanimoto similarity.

use super::{GraphError, MolecularGraph};

pub const FINGERPRINT_BITS: usize = 512;
const WORDS: usize = FINGERPRINT_BITS / 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fingerprint {
    bits: [u64; WORDS],
}

impl Fingerprint {
    pub fn from_bits(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Fingerprint::default();
        for i in indices {
            fp.set(i % FINGERPRINT_BITS);
        }
        fp
    }

    fn set(&mut self, i: usize) {
        self.bits[i / 64] |= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Radius-1 environment of every heavy atom: the atom code followed by its
/// sorted `(bond code, neighbour atom code)` pairs.
pub fn environment_keys(mol: &MolecularGraph) -> Vec<Vec<u8>> {
    mol.heavy_atoms()
        .map(|i| {
            let mut nb: Vec<(u8, u8)> = mol
                .neighbors(i)
                .map(|(j, b)| (b.code(), mol.atom(j).code()))
                .collect();
            nb.sort_unstable();
            let mut env = vec![mol.atom(i).code()];
            env.extend(nb.into_iter().flat_map(|(b, a)| [b, a]));
            env
        })
        .collect()
}

/// Sets one bit per radius-0 and radius-1 atom environment.
pub fn fingerprint(mol: &MolecularGraph) -> Result<Fingerprint, GraphError> {
    if !mol.is_valid() {
        return Err(GraphError::InvalidMolecule);
    }
    let mut fp = Fingerprint::default();
    for env in environment_keys(mol) {
        fp.set(fnv1a(&[0, env[0]]) as usize % FINGERPRINT_BITS);
        let mut tagged = Vec::with_capacity(env.len() + 1);
        tagged.push(1);
        tagged.extend_from_slice(&env);
        fp.set(fnv1a(&tagged) as usize % FINGERPRINT_BITS);
    }
    Ok(fp)
}

/// |a ∧ b| / |a ∨ b|; two empty fingerprints score 0.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.bits.iter().zip(&b.bits) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        log::warn!("tanimoto of two empty fingerprints, returning 0");
        return 0.0;
    }
    inter as f64 / union as f64
}
