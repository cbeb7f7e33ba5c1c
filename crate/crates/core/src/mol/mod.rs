//! Ligand and protein structures, pockets, radius graphs and the data
//! augmentations used for training.

pub mod cluster;
pub mod element;
mod fake;
mod ligand;
mod multiligand;
mod pocket;
mod protein;
mod radius;
mod sample;

pub use cluster::{cluster_sequences, global_identity};
pub use fake::{make_fake_ligand, FakeLigand, FAKE_CONTACT_MIN, FAKE_WINDOW};
pub use ligand::{AtomFeatures, LigandAtom, LigandGraph, FEATURE_WIDTH};
pub use multiligand::{group_multiligand, MULTILIGAND_CUTOFF};
pub use pocket::{
    extract_distance_pocket, extract_pocket, extract_radius_pocket, radius_pocket_radius,
    PocketMode, PocketNoise,
};
pub use protein::{chi_angles, Atom, PocketBackbone, Protein, Residue, ResidueType, NUM_RESIDUE_TYPES};
pub use radius::{build_radius_graph, Edge, RadiusCutoffs, RadiusGraph};
pub use sample::{contact_mask, ComplexSample, CONTACT_CUTOFF};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MolError {
    #[error("ligand has no heavy atoms")]
    EmptyLigand,
    #[error("bond ({0}, {1}) references a missing atom or itself")]
    BadBond(usize, usize),
    #[error("ligand coordinates are required")]
    MissingCoordinates,
    #[error("{what}: expected {expected} entries, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("complex {0}: pocket is empty")]
    EmptyPocket(String),
    #[error("complex {0}: no pocket residue contacts the ligand")]
    NoContacts(String),
    #[error("residue sequence indices not increasing in chain {0}")]
    Unordered(char),
}
