use alloc::vec::Vec;

use super::{LigandGraph, MolError};
use crate::geom::dist;

/// Heavy-atom distance (Å) that links two molecules into one multi-ligand.
pub const MULTILIGAND_CUTOFF: f64 = 4.0;

fn touching(a: &LigandGraph, b: &LigandGraph) -> Result<bool, MolError> {
    let ca = a.coords().ok_or(MolError::MissingCoordinates)?;
    let cb = b.coords().ok_or(MolError::MissingCoordinates)?;
    Ok(ca
        .iter()
        .any(|&p| cb.iter().any(|&q| dist(p, q) <= MULTILIGAND_CUTOFF)))
}

/// Merges every molecule reachable from `primary` through chains of
/// close contacts. Molecules keep their input order and internal bonds.
pub fn group_multiligand(ligands: &[LigandGraph], primary: usize) -> Result<LigandGraph, MolError> {
    let n = ligands.len();
    if primary >= n {
        return Err(MolError::Length {
            what: "primary ligand index",
            expected: n,
            got: primary,
        });
    }
    let mut in_group = alloc::vec![false; n];
    in_group[primary] = true;
    let mut stack = alloc::vec![primary];
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !in_group[j] && touching(&ligands[i], &ligands[j])? {
                in_group[j] = true;
                stack.push(j);
            }
        }
    }
    let mut atoms = Vec::new();
    let mut bonds = Vec::new();
    let mut coords = Vec::new();
    for (lig, _) in ligands.iter().zip(&in_group).filter(|(_, &g)| g) {
        let off = atoms.len();
        atoms.extend(lig.atoms().iter().cloned());
        bonds.extend(lig.bonds().into_iter().map(|(a, b)| (a + off, b + off)));
        coords.extend_from_slice(lig.coords().ok_or(MolError::MissingCoordinates)?);
    }
    let features: Vec<_> = atoms.iter().map(|a: &super::LigandAtom| a.features).collect();
    let mut merged = LigandGraph::new(atoms, &bonds, Some(coords))?;
    for (i, f) in features.into_iter().enumerate() {
        merged.atom_mut(i).features = f;
    }
    Ok(merged)
}
