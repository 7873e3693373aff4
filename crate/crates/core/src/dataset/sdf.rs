//! Minimal MOL/SDF V2000 reader and writer.
//!
//! Only the parts the graph model needs are read: the name line, the counts
//! line, element symbols from the atom block and the bond block. Coordinates,
//! property blocks and data items are skipped. Hydrogens are dropped with
//! their bonds and the remaining atoms renumbered.

use std::fmt::Write as _;

use crate::molgraph::{MolecularGraph, N_MAX};

/// One heavy-atom record. Bond indices are 1-based into `atom_symbols`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SdfRecord {
    pub name: String,
    pub atom_symbols: Vec<String>,
    pub bond_triples: Vec<(usize, usize, u8)>,
}

/// A record that could not be read; parsing continues with the next one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    /// 0-based position of the block in the input.
    pub block: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOutcome {
    pub records: Vec<SdfRecord>,
    pub warnings: Vec<ParseWarning>,
}

const ALLOWED: [&str; 5] = ["C", "N", "O", "F", "H"];

fn fixed_field(line: &str, start: usize, end: usize) -> Option<&str> {
    line.get(start..end.min(line.len())).map(str::trim)
}

fn parse_counts(line: &str) -> Result<(usize, usize), String> {
    if line.contains("V3000") {
        return Err("V3000 records are not supported".into());
    }
    let fixed = fixed_field(line, 0, 3)
        .and_then(|a| a.parse().ok())
        .zip(fixed_field(line, 3, 6).and_then(|b| b.parse().ok()));
    match fixed {
        Some(c) => Ok(c),
        None => Err(format!("malformed counts line {line:?}")),
    }
}

fn parse_atom_symbol(line: &str) -> Option<String> {
    let fixed = fixed_field(line, 31, 34).filter(|s| !s.is_empty());
    fixed
        .map(str::to_string)
        .or_else(|| line.split_whitespace().nth(3).map(str::to_string))
}

fn parse_block(lines: &[&str]) -> Result<SdfRecord, String> {
    if lines.len() < 4 {
        return Err("truncated header".into());
    }
    let name = lines[0].trim().to_string();
    let (n_atoms, n_bonds) = parse_counts(lines[3])?;
    if lines.len() < 4 + n_atoms + n_bonds {
        return Err("truncated atom or bond block".into());
    }

    let mut heavy_index = vec![None; n_atoms];
    let mut atom_symbols = Vec::new();
    for (k, line) in lines[4..4 + n_atoms].iter().enumerate() {
        let sym = parse_atom_symbol(line).ok_or_else(|| format!("bad atom line {}", k + 1))?;
        if !ALLOWED.contains(&sym.as_str()) {
            return Err(format!("unsupported element {sym}"));
        }
        if sym != "H" {
            atom_symbols.push(sym);
            heavy_index[k] = Some(atom_symbols.len());
        }
    }

    let mut bond_triples = Vec::new();
    for line in &lines[4 + n_atoms..4 + n_atoms + n_bonds] {
        let field = |s, e| fixed_field(line, s, e).and_then(|v| v.parse::<usize>().ok());
        let (a, b, order) = match (field(0, 3), field(3, 6), field(6, 9)) {
            (Some(a), Some(b), Some(o)) => (a, b, o),
            _ => return Err(format!("malformed bond line {line:?}")),
        };
        if a == 0 || b == 0 || a > n_atoms || b > n_atoms {
            return Err(format!("bond index out of range ({a}, {b})"));
        }
        if !(1..=4).contains(&order) {
            return Err(format!("bond order {order} not in 1..=4"));
        }
        if let (Some(i), Some(j)) = (heavy_index[a - 1], heavy_index[b - 1]) {
            bond_triples.push((i, j, order as u8));
        }
    }
    Ok(SdfRecord {
        name,
        atom_symbols,
        bond_triples,
    })
}

/// Splits `input` on `$$$$` lines and reads each block. A trailing block
/// without a terminator is read too, so a bare MOL file yields one record.
pub fn parse_sdf(input: &[u8]) -> ParseOutcome {
    let text = String::from_utf8_lossy(input);
    let mut out = ParseOutcome::default();
    let mut block: Vec<&str> = Vec::new();
    let mut index = 0;
    let mut finish = |block: &mut Vec<&str>, out: &mut ParseOutcome| {
        if block.iter().all(|l| l.trim().is_empty()) {
            block.clear();
            return;
        }
        match parse_block(block) {
            Ok(r) => out.records.push(r),
            Err(message) => {
                log::warn!("skipping SDF block {index}: {message}");
                out.warnings.push(ParseWarning {
                    block: index,
                    message,
                })
            }
        }
        index += 1;
        block.clear();
    };
    for line in text.lines() {
        if line.trim_end() == "$$$$" {
            finish(&mut block, &mut out);
        } else {
            block.push(line);
        }
    }
    finish(&mut block, &mut out);
    out
}

/// Writes `mol` as a V2000 MOL block (no terminator). With
/// `explicit_hydrogens`, implicit hydrogens are emitted as H atoms bonded to
/// their parent. Coordinates are all zero.
pub fn write_mol_block(mol: &MolecularGraph, name: &str, explicit_hydrogens: bool) -> String {
    let heavy: Vec<usize> = mol.heavy_atoms().collect();
    let mut index_of = [0usize; N_MAX];
    for (k, &i) in heavy.iter().enumerate() {
        index_of[i] = k + 1;
    }
    let mut symbols: Vec<&str> = heavy.iter().map(|&i| mol.atom(i).symbol()).collect();
    let mut bonds: Vec<(usize, usize, u8)> = mol
        .bond_list()
        .into_iter()
        .map(|(i, j, b)| (index_of[i], index_of[j], b.order()))
        .collect();
    if explicit_hydrogens {
        for &i in &heavy {
            for _ in 0..mol.implicit_hydrogens(i) {
                symbols.push("H");
                bonds.push((index_of[i], symbols.len(), 1));
            }
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "{name}");
    let _ = writeln!(s, "  qmolgen");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>3}{:>3}  0  0  0  0  0  0  0  0999 V2000",
        symbols.len(),
        bonds.len()
    );
    for sym in &symbols {
        let _ = writeln!(
            s,
            "{:>10.4}{:>10.4}{:>10.4} {:<3} 0  0  0  0  0  0  0  0  0  0  0  0",
            0.0, 0.0, 0.0, sym
        );
    }
    for (a, b, o) in &bonds {
        let _ = writeln!(s, "{a:>3}{b:>3}{o:>3}  0");
    }
    s.push_str("M  END\n");
    s
}
