//! Small synthetic complexes: a short hetero-atom chain wrapped by a shell of
//! residues with ideal backbone geometry. Used by tests and for quick
//! overfitting runs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::geom::{add, cross, dot, normalized, scale, sub, Vec3};
use crate::mol::{
    extract_pocket, Atom, ComplexSample, LigandAtom, LigandGraph, MolError, PocketMode, PocketNoise,
    Protein, Residue, ResidueType,
};
use crate::rng::{normal, seeded};

// Types whose first χ atom is CG, plus alanine.
const TYPES: [ResidueType; 14] = [
    ResidueType::Ala,
    ResidueType::Arg,
    ResidueType::Asn,
    ResidueType::Asp,
    ResidueType::Gln,
    ResidueType::Glu,
    ResidueType::His,
    ResidueType::Leu,
    ResidueType::Lys,
    ResidueType::Met,
    ResidueType::Phe,
    ResidueType::Pro,
    ResidueType::Trp,
    ResidueType::Tyr,
];

// C, N, O, P, S.
const ELEMENTS: [u8; 5] = [6, 7, 8, 15, 16];

/// A synthetic protein and bound ligand.
#[derive(Debug, Clone)]
pub struct ToyComplex {
    pub protein: Protein,
    pub ligand: LigandGraph,
}

impl ToyComplex {
    /// Pocket from the noise-free distance rule.
    pub fn sample(&self, id: &str) -> Result<ComplexSample, MolError> {
        let coords = self.ligand.coords().ok_or(MolError::MissingCoordinates)?;
        let pocket = extract_pocket(PocketMode::Distance, &self.protein, coords, PocketNoise::NONE, 0, id)?;
        ComplexSample::new(id, self.ligand.clone(), pocket)
    }
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = [normal(rng), normal(rng), normal(rng)];
        let n = dot(v, v);
        if n > 1e-6 {
            return normalized(v);
        }
    }
}

fn perpendicular<R: Rng + ?Sized>(u: Vec3, rng: &mut R) -> Vec3 {
    loop {
        let r = random_unit(rng);
        let p = sub(r, scale(u, dot(r, u)));
        if dot(p, p) > 1e-4 {
            return normalized(p);
        }
    }
}

fn ligand_chain<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec3> {
    let mut pts: Vec<Vec3> = vec![[0.0; 3]];
    let mut dir = random_unit(rng);
    while pts.len() < n {
        // Bend by roughly the tetrahedral supplement, avoiding clashes.
        let p = perpendicular(dir, rng);
        let bend = 70.0 * PI / 180.0;
        let next_dir = normalized(add(scale(dir, libm::cos(bend)), scale(p, libm::sin(bend))));
        let cand = add(*pts.last().unwrap(), scale(next_dir, 1.5));
        if pts[..pts.len() - 1].iter().all(|q| crate::geom::dist(*q, cand) > 2.2) {
            pts.push(cand);
            dir = next_dir;
        }
    }
    let c = crate::geom::centroid(&pts);
    pts.iter().map(|p| sub(*p, c)).collect()
}

fn fibonacci(i: usize, n: usize) -> Vec3 {
    let golden = PI * (3.0 - libm::sqrt(5.0));
    let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
    let r = libm::sqrt(1.0 - y * y);
    let th = golden * i as f64;
    [r * libm::cos(th), y, r * libm::sin(th)]
}

/// Builds a complex with `atoms` ligand atoms and `residues` residues, all
/// geometry drawn from `seed`.
pub fn toy_complex(seed: u64, atoms: usize, residues: usize) -> ToyComplex {
    let mut rng = seeded(seed);
    let coords = ligand_chain(atoms.max(1), &mut rng);
    // Each element differs from the two before it, so an atom is told
    // apart from its chain neighbours by features alone.
    let mut elements: Vec<u8> = Vec::with_capacity(coords.len());
    while elements.len() < coords.len() {
        let z = ELEMENTS[rng.random_range(0..ELEMENTS.len())];
        if !elements.iter().rev().take(2).any(|&e| e == z) {
            elements.push(z);
        }
    }
    let lig_atoms = elements
        .iter()
        .enumerate()
        .map(|(i, &z)| LigandAtom::new(z, format!("{}{}", crate::mol::element::symbol(z), i + 1)))
        .collect();
    let bonds: Vec<(usize, usize)> = (1..coords.len()).map(|i| (i - 1, i)).collect();
    let ligand = LigandGraph::new(lig_atoms, &bonds, Some(coords.clone())).expect("valid chain");

    let mut res = Vec::with_capacity(residues);
    for i in 0..residues {
        let u = fibonacci(i, residues);
        let reach = coords.iter().map(|p| dot(*p, u)).fold(f64::NEG_INFINITY, f64::max);
        let ca = scale(u, reach + 4.6);
        // Local frame with z pointing away from the ligand.
        let e1 = perpendicular(u, &mut rng);
        let e2 = cross(u, e1);
        let at = |x: f64, y: f64, z: f64| add(ca, add(scale(e1, x), add(scale(e2, y), scale(u, z))));
        let kind = TYPES[rng.random_range(0..TYPES.len())];
        let n = at(-0.525, 1.363, 0.0);
        let c = at(1.526, 0.0, 0.0);
        let o = at(2.153, -1.062, 0.0);
        let cb = at(-0.529, -0.774, -1.205);
        let mut side_chain = vec![Atom { name: "CB".into(), element: 6, pos: cb }];
        if kind != ResidueType::Ala {
            // CG at a random χ1 with ideal bond length and angle.
            let chi = rng.random_range(-PI..PI);
            let b = normalized(sub(cb, ca));
            let nn = normalized(cross(sub(n, ca), b));
            let m = cross(nn, b);
            let ang = 111.0 * PI / 180.0;
            let local = [
                -1.52 * libm::cos(ang),
                1.52 * libm::sin(ang) * libm::cos(chi),
                1.52 * libm::sin(ang) * libm::sin(chi),
            ];
            let pos = add(
                cb,
                add(scale(b, local[0]), add(scale(m, -local[1]), scale(nn, local[2]))),
            );
            side_chain.push(Atom { name: "CG".into(), element: 6, pos });
        }
        res.push(Residue {
            kind,
            chain: 'A',
            seq: i as i32 + 1,
            icode: ' ',
            n,
            ca,
            c,
            o,
            side_chain,
        });
    }
    ToyComplex {
        protein: Protein::new(res),
        ligand,
    }
}
