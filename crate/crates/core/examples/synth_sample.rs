//! Regenerates `data/qm9_sample.sdf`, the bundled QM9-style training file.
//!
//! Molecules are grown at random over {C, N, O, F} with at most nine heavy
//! atoms, a few ring closures and some unsaturation, with element and size
//! frequencies roughly following QM9. A handful of records that the loader
//! must reject (too large, aromatic bonds, sulfur, a broken counts line)
//! are mixed in so the acceptance statistics have something to report.
//!
//! ```text
//! cargo run -p qmolgen-core --example synth_sample > crates/core/data/qm9_sample.sdf
//! ```

use std::collections::{HashSet, VecDeque};

use qmolgen_core::dataset::write_mol_block;
use qmolgen_core::molgraph::{canonical_key, Atom, Bond, MolecularGraph, N_MAX};
use qmolgen_core::rng::{stream, Purpose};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

const TARGET: usize = 1000;

fn pick<R: Rng, T: Copy>(rng: &mut R, table: &[(T, f64)]) -> T {
    let total: f64 = table.iter().map(|t| t.1).sum();
    let mut x = rng.random_range(0.0..total);
    for &(v, w) in table {
        if x < w {
            return v;
        }
        x -= w;
    }
    table[table.len() - 1].0
}

fn free_valence(g: &MolecularGraph, i: usize) -> u8 {
    g.atom(i).max_valence() - g.bond_order_sum(i)
}

fn distance(g: &MolecularGraph, from: usize, to: usize) -> usize {
    let mut dist = [usize::MAX; N_MAX];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(i) = queue.pop_front() {
        for (j, _) in g.neighbors(i) {
            if dist[j] == usize::MAX {
                dist[j] = dist[i] + 1;
                queue.push_back(j);
            }
        }
    }
    dist[to]
}

fn grow<R: Rng>(rng: &mut R) -> MolecularGraph {
    let n = pick(rng, &[(9, 0.55), (8, 0.2), (7, 0.12), (6, 0.07), (5, 0.03), (4, 0.02), (3, 0.01)]);
    let elements = [(Atom::C, 0.68), (Atom::N, 0.12), (Atom::O, 0.17), (Atom::F, 0.03)];
    let mut atoms = vec![Atom::C];
    let mut g = MolecularGraph::with_atoms(&atoms).unwrap();
    while atoms.len() < n {
        let parents: Vec<usize> = (0..atoms.len()).filter(|&i| free_valence(&g, i) > 0).collect();
        let Some(&parent) = parents.choose(rng) else { break };
        atoms.push(pick(rng, &elements));
        let mut next = MolecularGraph::with_atoms(&atoms).unwrap();
        for (i, j, b) in g.bond_list() {
            next.set_bond(i, j, b).unwrap();
        }
        next.set_bond(parent, atoms.len() - 1, Bond::Single).unwrap();
        g = next;
    }
    let rings = pick(rng, &[(0, 0.4), (1, 0.45), (2, 0.15)]);
    for _ in 0..rings {
        let mut pairs = Vec::new();
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                let d = distance(&g, i, j);
                if (2..=5).contains(&d) && free_valence(&g, i) > 0 && free_valence(&g, j) > 0 {
                    pairs.push((i, j));
                }
            }
        }
        if let Some(&(i, j)) = pairs.choose(rng) {
            g.set_bond(i, j, Bond::Single).unwrap();
        }
    }
    let upgrades = pick(rng, &[(0, 0.45), (1, 0.4), (2, 0.15)]);
    for _ in 0..upgrades {
        let candidates: Vec<(usize, usize, Bond)> = g
            .bond_list()
            .into_iter()
            .filter(|&(i, j, b)| b != Bond::Triple && free_valence(&g, i) > 0 && free_valence(&g, j) > 0)
            .collect();
        if let Some(&(i, j, b)) = candidates.choose(rng) {
            let up = if b == Bond::Single { Bond::Double } else { Bond::Triple };
            g.set_bond(i, j, up).unwrap();
        }
    }
    g
}

/// Hand-written block for structures the graph type cannot hold.
fn raw_block(name: &str, symbols: &[&str], bonds: &[(usize, usize, u8)]) -> String {
    let mut s = format!("{name}\n  qmolgen\n\n");
    s += &format!("{:>3}{:>3}  0  0  0  0  0  0  0  0999 V2000\n", symbols.len(), bonds.len());
    for sym in symbols {
        s += &format!("    0.0000    0.0000    0.0000 {sym:<3} 0  0  0  0  0  0  0  0  0  0  0  0\n");
    }
    for (a, b, o) in bonds {
        s += &format!("{a:>3}{b:>3}{o:>3}  0\n");
    }
    s + "M  END\n"
}

fn carbon_chain(name: &str, n: usize) -> String {
    let mut symbols = vec!["C"; n];
    let mut bonds: Vec<(usize, usize, u8)> = (1..n).map(|i| (i, i + 1, 1)).collect();
    for i in 1..=n {
        let h = if i == 1 || i == n { 3 } else { 2 };
        for _ in 0..h {
            symbols.push("H");
            bonds.push((i, symbols.len(), 1));
        }
    }
    raw_block(name, &symbols, &bonds)
}

fn main() {
    let mut rng = stream(2024, Purpose::Data, 0);
    let mut seen = HashSet::new();
    let mut mols = Vec::new();
    while mols.len() < TARGET {
        let g = grow(&mut rng);
        if g.is_valid() && seen.insert(canonical_key(&g).unwrap()) {
            mols.push(g);
        }
    }

    let mut blocks: Vec<String> = mols
        .iter()
        .enumerate()
        .map(|(k, g)| write_mol_block(g, &format!("synth_{:04}", k + 1), true))
        .collect();
    for k in 0..8 {
        blocks.push(carbon_chain(&format!("reject_large_{k}"), 10 + k % 3));
    }
    for k in 0..3 {
        let ring: Vec<(usize, usize, u8)> = (1..=6).map(|i| (i, i % 6 + 1, 4)).collect();
        blocks.push(raw_block(&format!("reject_aromatic_{k}"), &["C"; 6], &ring));
    }
    for k in 0..2 {
        blocks.push(raw_block(&format!("reject_sulfur_{k}"), &["C", "S"], &[(1, 2, 1)]));
    }
    blocks.push("reject_corrupt\n  qmolgen\n\n  x  y  0  0  0  0  0  0  0  0999 V2000\nM  END\n".into());
    blocks.shuffle(&mut rng);

    let mut out = String::new();
    for b in blocks {
        out += &b;
        out += "$$$$\n";
    }
    print!("{out}");
}
