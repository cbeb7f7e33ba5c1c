use alloc::string::ToString;
use alloc::vec::Vec;

use super::{MolError, PocketBackbone, Protein, Residue};
use crate::geom::{self, dist, Vec3};
use crate::rng::{normal, seeded};

/// Noisy-distance cutoff for pocket membership (Å).
pub const POCKET_CUTOFF: f64 = 14.0;
/// Residues closer than this (Å) define the pocket center.
pub const CENTER_CUTOFF: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PocketNoise {
    pub distance: f64,
    pub center: f64,
}

impl Default for PocketNoise {
    fn default() -> Self {
        Self {
            distance: 0.5,
            center: 0.2,
        }
    }
}

impl PocketNoise {
    pub const NONE: Self = Self {
        distance: 0.0,
        center: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PocketMode {
    #[default]
    Distance,
    Radius,
}

fn min_distance(p: Vec3, ligand: &[Vec3]) -> f64 {
    ligand.iter().map(|&l| dist(p, l)).fold(f64::INFINITY, f64::min)
}

/// Mean Cα of residues with distance below the center cutoff, falling back
/// to the closest residue.
fn center_from(residues: &[Residue], d: &[f64]) -> Vec3 {
    let close: Vec<Vec3> = residues
        .iter()
        .zip(d)
        .filter(|(_, &d)| d < CENTER_CUTOFF)
        .map(|(r, _)| r.ca)
        .collect();
    if !close.is_empty() {
        return geom::centroid(&close);
    }
    let best = d
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    residues[best].ca
}

fn finish(
    protein: &Protein,
    keep: &[bool],
    center: Vec3,
    id: &str,
) -> Result<PocketBackbone, MolError> {
    let residues: Vec<Residue> = protein
        .residues
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r.clone())
        .collect();
    if residues.is_empty() {
        return Err(MolError::EmptyPocket(id.to_string()));
    }
    PocketBackbone::new(residues, center)
}

/// Noisy per-residue Cα-to-ligand distances and the noisy pocket center.
fn noisy_distances_and_center(
    protein: &Protein,
    ligand: &[Vec3],
    noise: PocketNoise,
    seed: u64,
) -> (Vec<f64>, Vec3) {
    let mut rng = seeded(seed);
    let d: Vec<f64> = protein
        .residues
        .iter()
        .map(|r| min_distance(r.ca, ligand) + noise.distance * normal(&mut rng))
        .collect();
    let mut center = center_from(&protein.residues, &d);
    for c in center.iter_mut() {
        *c += noise.center * normal(&mut rng);
    }
    (d, center)
}

pub fn extract_distance_pocket(
    protein: &Protein,
    ligand: &[Vec3],
    noise: PocketNoise,
    seed: u64,
    id: &str,
) -> Result<PocketBackbone, MolError> {
    if ligand.is_empty() {
        return Err(MolError::MissingCoordinates);
    }
    let (d, center) = noisy_distances_and_center(protein, ligand, noise, seed);
    let keep: Vec<bool> = d.iter().map(|&d| d < POCKET_CUTOFF).collect();
    finish(protein, &keep, center, id)
}

pub fn radius_pocket_radius(diameter: f64) -> f64 {
    7.0 + f64::min(5.0, diameter / 2.0)
}

pub fn extract_radius_pocket(
    protein: &Protein,
    ligand: &[Vec3],
    noise: PocketNoise,
    seed: u64,
    id: &str,
) -> Result<PocketBackbone, MolError> {
    if ligand.is_empty() {
        return Err(MolError::MissingCoordinates);
    }
    let exact: Vec<f64> = protein
        .residues
        .iter()
        .map(|r| min_distance(r.ca, ligand))
        .collect();
    let ball = center_from(&protein.residues, &exact);
    let mut diameter = 0.0f64;
    for i in 0..ligand.len() {
        for j in i + 1..ligand.len() {
            diameter = diameter.max(dist(ligand[i], ligand[j]));
        }
    }
    let radius = radius_pocket_radius(diameter);
    let (_, center) = noisy_distances_and_center(protein, ligand, noise, seed);
    let mut rng = seeded(crate::rng::derive(seed, 1));
    let keep: Vec<bool> = protein
        .residues
        .iter()
        .map(|r| dist(r.ca, ball) + noise.distance * normal(&mut rng) < radius)
        .collect();
    finish(protein, &keep, center, id)
}

pub fn extract_pocket(
    mode: PocketMode,
    protein: &Protein,
    ligand: &[Vec3],
    noise: PocketNoise,
    seed: u64,
    id: &str,
) -> Result<PocketBackbone, MolError> {
    match mode {
        PocketMode::Distance => extract_distance_pocket(protein, ligand, noise, seed, id),
        PocketMode::Radius => extract_radius_pocket(protein, ligand, noise, seed, id),
    }
}
