//! Isomorphism-invariant keys.
//!
//! Colour refinement (1-WL) seeded with atom codes, followed by
//! individualization of every vertex of the first non-singleton class and
//! recursion. Each leaf is a discrete colouring, i.e. an ordering of the
//! atoms; the key is the lexicographically smallest serialization over all
//! leaves. Colours are ranks of sorted signatures, so the search never
//! depends on the input numbering.

use super::{Bond, GraphError, MolecularGraph};

struct Local {
    atoms: Vec<u8>,
    adj: Vec<Vec<u8>>,
}

/// Returns a byte string equal for isomorphic molecules and distinct
/// otherwise: `[n, atom codes…, upper-triangle bond codes…]` in canonical
/// order.
pub fn canonical_key(mol: &MolecularGraph) -> Result<Vec<u8>, GraphError> {
    if !mol.is_valid() {
        return Err(GraphError::InvalidMolecule);
    }
    let heavy: Vec<usize> = mol.heavy_atoms().collect();
    let local = Local {
        atoms: heavy.iter().map(|&i| mol.atom(i).code()).collect(),
        adj: heavy
            .iter()
            .map(|&i| heavy.iter().map(|&j| mol.bond(i, j).code()).collect())
            .collect(),
    };
    let colors = rank(&local.atoms.iter().map(|&a| vec![a as u32]).collect::<Vec<_>>());
    let mut best: Option<Vec<u8>> = None;
    search(&local, colors, &mut best);
    Ok(best.expect("at least one leaf"))
}

/// Dense ranks of signatures in sorted order.
fn rank(signatures: &[Vec<u32>]) -> Vec<u32> {
    let mut sorted: Vec<&Vec<u32>> = signatures.iter().collect();
    sorted.sort();
    sorted.dedup();
    signatures
        .iter()
        .map(|s| sorted.binary_search(&s).expect("present") as u32)
        .collect()
}

fn class_count(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn refine(g: &Local, mut colors: Vec<u32>) -> Vec<u32> {
    let n = colors.len();
    let mut classes = class_count(&colors);
    loop {
        let signatures: Vec<Vec<u32>> = (0..n)
            .map(|v| {
                let mut nb: Vec<(u32, u32)> = (0..n)
                    .filter(|&u| g.adj[v][u] != Bond::None.code())
                    .map(|u| (g.adj[v][u] as u32, colors[u]))
                    .collect();
                nb.sort_unstable();
                let mut sig = vec![colors[v]];
                sig.extend(nb.into_iter().flat_map(|(b, c)| [b, c]));
                sig
            })
            .collect();
        let next = rank(&signatures);
        let next_classes = class_count(&next);
        colors = next;
        if next_classes == classes {
            return colors;
        }
        classes = next_classes;
    }
}

fn search(g: &Local, colors: Vec<u32>, best: &mut Option<Vec<u8>>) {
    let colors = refine(g, colors);
    let n = colors.len();
    let mut counts = vec![0usize; n];
    for &c in &colors {
        counts[c as usize] += 1;
    }
    match counts.iter().position(|&k| k > 1) {
        None => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&v| colors[v]);
            let key = serialize(g, &order);
            if best.as_ref().is_none_or(|b| key < *b) {
                *best = Some(key);
            }
        }
        Some(target) => {
            for v in (0..n).filter(|&v| colors[v] as usize == target) {
                let sigs: Vec<Vec<u32>> = (0..n)
                    .map(|u| vec![colors[u], u32::from(u != v)])
                    .collect();
                search(g, rank(&sigs), best);
            }
        }
    }
}

fn serialize(g: &Local, order: &[usize]) -> Vec<u8> {
    let n = order.len();
    let mut key = Vec::with_capacity(1 + n + n * (n - 1) / 2);
    key.push(n as u8);
    key.extend(order.iter().map(|&v| g.atoms[v]));
    for a in 0..n {
        for b in a + 1..n {
            key.push(g.adj[order[a]][order[b]]);
        }
    }
    key
}
