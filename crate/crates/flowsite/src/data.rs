//! Loading complexes named by a manifest and turning them into training
//! or inference samples.

use std::path::{Path, PathBuf};

use flowsite_core::mol::{
    extract_pocket, make_fake_ligand, ComplexSample, LigandGraph, MolError, PocketMode, PocketNoise, Protein,
};
use flowsite_core::rng::{derive, seeded};
use rand::Rng;

use crate::features::{apply_features, parse_features, FeatureError};
use crate::manifest::Entry;
use crate::pdb::{parse_ligand, parse_protein, PdbError};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Pdb { path: PathBuf, source: PdbError },
    #[error("{path}: {source}")]
    Features { path: PathBuf, source: FeatureError },
    #[error("{0}")]
    Mol(#[from] MolError),
}

/// A protein with its bound ligand as read from disk.
#[derive(Debug, Clone)]
pub struct Complex {
    pub id: String,
    pub protein: Protein,
    pub ligand: LigandGraph,
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.into(), source })
}

pub fn load_complex(entry: &Entry) -> Result<Complex, LoadError> {
    let protein = parse_protein(&read(&entry.protein)?)
        .map_err(|source| LoadError::Pdb { path: entry.protein.clone(), source })?
        .protein;
    let mut ligand = parse_ligand(&read(&entry.ligand)?).map_err(|source| LoadError::Pdb { path: entry.ligand.clone(), source })?;
    if let Some(path) = &entry.features {
        let f = parse_features(&read(path)?).map_err(|source| LoadError::Features { path: path.clone(), source })?;
        apply_features(&mut ligand, &f).map_err(|source| LoadError::Features { path: path.clone(), source })?;
    }
    Ok(Complex {
        id: entry.id.clone(),
        protein,
        ligand,
    })
}

/// Loads every entry, logging and counting failures.
pub fn load_all(entries: &[Entry]) -> (Vec<Complex>, usize) {
    let mut out = Vec::with_capacity(entries.len());
    let mut skipped = 0;
    for e in entries {
        match load_complex(e) {
            Ok(c) => out.push(c),
            Err(err) => {
                log::warn!("skipping {}: {err}", e.id);
                skipped += 1;
            }
        }
    }
    (out, skipped)
}

/// Noise-free pocket around the stored ligand pose.
pub fn inference_sample(c: &Complex, mode: PocketMode) -> Result<ComplexSample, MolError> {
    let coords = c.ligand.coords().ok_or(MolError::MissingCoordinates)?;
    let pocket = extract_pocket(mode, &c.protein, coords, PocketNoise::NONE, 0, &c.id)?;
    ComplexSample::new(c.id.clone(), c.ligand.clone(), pocket)
}

/// Training view of a complex: optionally a fake ligand cut from the
/// protein, and a noisy pocket. Everything is drawn from `seed`.
pub fn training_sample(
    c: &Complex,
    mode: PocketMode,
    noise: PocketNoise,
    fake_probability: f64,
    seed: u64,
) -> Result<ComplexSample, MolError> {
    let mut rng = seeded(seed);
    if fake_probability > 0.0 && rng.random::<f64>() < fake_probability {
        if let Some(fake) = make_fake_ligand(&c.protein, derive(seed, 1))? {
            let coords = fake.ligand.coords().ok_or(MolError::MissingCoordinates)?;
            let pocket = extract_pocket(mode, &fake.protein, coords, noise, derive(seed, 2), &c.id)?;
            return ComplexSample::new(c.id.clone(), fake.ligand, pocket);
        }
    }
    let coords = c.ligand.coords().ok_or(MolError::MissingCoordinates)?;
    let pocket = extract_pocket(mode, &c.protein, coords, noise, derive(seed, 2), &c.id)?;
    ComplexSample::new(c.id.clone(), c.ligand.clone(), pocket)
}
