use alloc::string::String;
use alloc::vec::Vec;

use super::{chi_angles, LigandGraph, MolError, PocketBackbone, Residue};
use crate::geom::{dist2, Vec3};

/// Heavy-atom distance (Å) below which a residue counts as a ligand contact.
pub const CONTACT_CUTOFF: f64 = 4.0;

/// True per residue iff any of its heavy atoms lies within the contact
/// cutoff of any ligand atom.
pub fn contact_mask(residues: &[Residue], ligand: &[Vec3]) -> Vec<bool> {
    let cut2 = CONTACT_CUTOFF * CONTACT_CUTOFF;
    residues
        .iter()
        .map(|r| {
            r.heavy_atoms()
                .any(|a| ligand.iter().any(|&l| dist2(a, l) <= cut2))
        })
        .collect()
}

/// One training or evaluation example.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSample {
    pub id: String,
    pub ligand: LigandGraph,
    pub pocket: PocketBackbone,
    pub contacts: Vec<bool>,
    /// Ground-truth χ angles per pocket residue.
    pub torsions: Vec<[Option<f64>; 4]>,
}

impl ComplexSample {
    pub fn new(
        id: impl Into<String>,
        ligand: LigandGraph,
        pocket: PocketBackbone,
    ) -> Result<Self, MolError> {
        let id = id.into();
        let coords = ligand.coords().ok_or(MolError::MissingCoordinates)?;
        if pocket.is_empty() {
            return Err(MolError::EmptyPocket(id));
        }
        let contacts = contact_mask(&pocket.residues, coords);
        if !contacts.iter().any(|&c| c) {
            return Err(MolError::NoContacts(id));
        }
        let torsions = pocket.residues.iter().map(chi_angles).collect();
        Ok(Self {
            id,
            ligand,
            pocket,
            contacts,
            torsions,
        })
    }

    /// Ground-truth ligand coordinates.
    pub fn x1(&self) -> &[Vec3] {
        self.ligand.coords().expect("checked at construction")
    }

    pub fn num_contacts(&self) -> usize {
        self.contacts.iter().filter(|&&c| c).count()
    }
}
