//! Side-channel ligand chemistry features.
//!
//! One line per atom: `index atomic_number chirality degree formal_charge
//! implicit_valence num_hs hybridization aromatic ring_count ring_flags`,
//! whitespace separated, where `index` is 0-based in ligand atom order and
//! `ring_flags` is six `0`/`1` characters. `#` starts a comment.

use flowsite_core::mol::{AtomFeatures, LigandGraph};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("atom {index} is outside a ligand of {atoms} atoms")]
    Index { index: usize, atoms: usize },
    #[error("atom {index}: file says element {file}, structure says {structure}")]
    Element { index: usize, file: u8, structure: u8 },
}

pub fn parse_features(text: &str) -> Result<Vec<(usize, AtomFeatures)>, FeatureError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| FeatureError::Line { line: n + 1, msg };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 11 {
            return Err(err(format!("expected 11 fields, found {}", f.len())));
        }
        let int = |i: usize| -> Result<i64, FeatureError> {
            f[i].parse().map_err(|_| err(format!("field {} is not an integer: {:?}", i + 1, f[i])))
        };
        let flags = f[10].as_bytes();
        if flags.len() != 6 || flags.iter().any(|c| *c != b'0' && *c != b'1') {
            return Err(err(format!("ring flags must be six 0/1 characters, got {:?}", f[10])));
        }
        let mut ring_flags = [false; 6];
        for (r, c) in ring_flags.iter_mut().zip(flags) {
            *r = *c == b'1';
        }
        let index = int(0)?;
        if index < 0 {
            return Err(err("negative atom index".into()));
        }
        out.push((
            index as usize,
            AtomFeatures {
                atomic_number: int(1)? as u8,
                chirality: int(2)? as i8,
                degree: int(3)? as u8,
                formal_charge: int(4)? as i8,
                implicit_valence: int(5)? as u8,
                num_hs: int(6)? as u8,
                hybridization: int(7)? as u8,
                aromatic: int(8)? != 0,
                ring_count: int(9)? as u8,
                ring_flags,
            },
        ));
    }
    Ok(out)
}

/// Overwrites the perception features of listed atoms. Element and degree
/// stay as derived from the structure; a disagreeing element is an error.
pub fn apply_features(ligand: &mut LigandGraph, features: &[(usize, AtomFeatures)]) -> Result<(), FeatureError> {
    let atoms = ligand.len();
    for &(index, f) in features {
        if index >= atoms {
            return Err(FeatureError::Index { index, atoms });
        }
        let atom = ligand.atom_mut(index);
        if f.atomic_number != atom.element {
            return Err(FeatureError::Element {
                index,
                file: f.atomic_number,
                structure: atom.element,
            });
        }
        let degree = atom.features.degree;
        atom.features = AtomFeatures { degree, ..f };
    }
    Ok(())
}
