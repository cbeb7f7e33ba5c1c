use alloc::vec::Vec;
use rand::Rng;

use super::{LigandAtom, LigandGraph, MolError, Protein, Residue};
use crate::geom::{dist2, Vec3};
use crate::rng::seeded;

/// Chain-position window excluded from contact counts and removed with the
/// chosen residue.
pub const FAKE_WINDOW: usize = 7;
/// Minimum number of contacting residues for a fake-ligand candidate.
pub const FAKE_CONTACT_MIN: usize = 4;

/// A protein residue recast as a ligand, with its neighborhood removed.
#[derive(Debug, Clone, PartialEq)]
pub struct FakeLigand {
    pub ligand: LigandGraph,
    /// The protein without the chosen residue and its window.
    pub protein: Protein,
    /// Index of the chosen residue in the input protein.
    pub source: usize,
    /// Indices of removed residues in the input protein.
    pub removed: Vec<usize>,
}

fn in_window(pos: &[usize], chains: &[char], i: usize, j: usize) -> bool {
    chains[i] == chains[j] && pos[i].abs_diff(pos[j]) <= FAKE_WINDOW
}

fn residues_touch(a: &Residue, b: &Residue) -> bool {
    // Cheap reject: side chains reach at most ~8 Å from Cα.
    if dist2(a.ca, b.ca) > 24.0 * 24.0 {
        return false;
    }
    let cut2 = super::CONTACT_CUTOFF * super::CONTACT_CUTOFF;
    a.heavy_atoms()
        .any(|p| b.heavy_atoms().any(|q| dist2(p, q) <= cut2))
}

/// Number of residues outside the chain window that contact residue `i`.
pub(crate) fn contact_counts(protein: &Protein) -> Vec<usize> {
    let pos = protein.chain_positions();
    let chains: Vec<char> = protein.residues.iter().map(|r| r.chain).collect();
    let n = protein.len();
    let mut counts = alloc::vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if !in_window(&pos, &chains, i, j)
                && residues_touch(&protein.residues[i], &protein.residues[j])
            {
                counts[i] += 1;
                counts[j] += 1;
            }
        }
    }
    counts
}

/// Picks a buried residue uniformly at random and turns its C, Cα and side
/// chain into a ligand. Returns `None` when no residue qualifies.
pub fn make_fake_ligand(protein: &Protein, seed: u64) -> Result<Option<FakeLigand>, MolError> {
    let candidates: Vec<usize> = contact_counts(protein)
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= FAKE_CONTACT_MIN)
        .map(|(i, _)| i)
        .collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    let mut rng = seeded(seed);
    let source = candidates[rng.random_range(0..candidates.len())];
    let r = &protein.residues[source];

    let mut atoms = alloc::vec![LigandAtom::new(6, "C"), LigandAtom::new(6, "CA")];
    let mut coords: Vec<Vec3> = alloc::vec![r.c, r.ca];
    for a in &r.side_chain {
        atoms.push(LigandAtom::new(a.element, a.name.clone()));
        coords.push(a.pos);
    }
    let ligand = LigandGraph::with_inferred_bonds(atoms, coords)?;

    let pos = protein.chain_positions();
    let chains: Vec<char> = protein.residues.iter().map(|r| r.chain).collect();
    let (removed, kept): (Vec<usize>, Vec<usize>) =
        (0..protein.len()).partition(|&j| in_window(&pos, &chains, source, j));
    let reduced = Protein::new(kept.iter().map(|&j| protein.residues[j].clone()).collect());
    Ok(Some(FakeLigand {
        ligand,
        protein: reduced,
        source,
        removed,
    }))
}
