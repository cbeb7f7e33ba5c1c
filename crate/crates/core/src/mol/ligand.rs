use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{element, MolError};
use crate::geom::{dist, Vec3};

/// Numbers per atom in the encoded feature vector.
pub const FEATURE_WIDTH: usize = 15;

/// Per-atom chemistry features. Everything except the atomic number and
/// degree defaults to zero unless supplied from an external feature file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AtomFeatures {
    pub atomic_number: u8,
    pub chirality: i8,
    pub degree: u8,
    pub formal_charge: i8,
    pub implicit_valence: u8,
    pub num_hs: u8,
    pub hybridization: u8,
    pub aromatic: bool,
    pub ring_count: u8,
    pub ring_flags: [bool; 6],
}

impl AtomFeatures {
    pub fn encode(&self) -> [f64; FEATURE_WIDTH] {
        let mut out = [0.0; FEATURE_WIDTH];
        out[0] = self.atomic_number as f64;
        out[1] = self.chirality as f64;
        out[2] = self.degree as f64;
        out[3] = self.formal_charge as f64;
        out[4] = self.implicit_valence as f64;
        out[5] = self.num_hs as f64;
        out[6] = self.hybridization as f64;
        out[7] = self.aromatic as u8 as f64;
        out[8] = self.ring_count as f64;
        for (o, f) in out[9..].iter_mut().zip(self.ring_flags) {
            *o = f as u8 as f64;
        }
        out
    }

    /// Inverse of [`encode`](Self::encode); values are rounded to integers.
    pub fn decode(v: &[f64; FEATURE_WIDTH]) -> Self {
        let r = |x: f64| libm::round(x);
        let mut ring_flags = [false; 6];
        for (f, x) in ring_flags.iter_mut().zip(&v[9..]) {
            *f = *x != 0.0;
        }
        Self {
            atomic_number: r(v[0]) as u8,
            chirality: r(v[1]) as i8,
            degree: r(v[2]) as u8,
            formal_charge: r(v[3]) as i8,
            implicit_valence: r(v[4]) as u8,
            num_hs: r(v[5]) as u8,
            hybridization: r(v[6]) as u8,
            aromatic: v[7] != 0.0,
            ring_count: r(v[8]) as u8,
            ring_flags,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LigandAtom {
    pub element: u8,
    pub name: String,
    pub features: AtomFeatures,
}

impl LigandAtom {
    pub fn new(element: u8, name: impl Into<String>) -> Self {
        Self {
            element,
            name: name.into(),
            features: AtomFeatures {
                atomic_number: element,
                ..Default::default()
            },
        }
    }
}

/// Heavy-atom chemical graph with optional coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LigandGraph {
    atoms: Vec<LigandAtom>,
    adjacency: Vec<bool>,
    components: Vec<usize>,
    coords: Option<Vec<Vec3>>,
}

impl LigandGraph {
    /// Builds the graph from explicit bonds. Degrees are overwritten from
    /// the bond list.
    pub fn new(
        atoms: Vec<LigandAtom>,
        bonds: &[(usize, usize)],
        coords: Option<Vec<Vec3>>,
    ) -> Result<Self, MolError> {
        let n = atoms.len();
        if n == 0 {
            return Err(MolError::EmptyLigand);
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(MolError::Length {
                    what: "ligand coordinates",
                    expected: n,
                    got: c.len(),
                });
            }
        }
        let mut adjacency = vec![false; n * n];
        for &(a, b) in bonds {
            if a >= n || b >= n || a == b {
                return Err(MolError::BadBond(a, b));
            }
            adjacency[a * n + b] = true;
            adjacency[b * n + a] = true;
        }
        let mut g = Self {
            atoms,
            adjacency,
            components: Vec::new(),
            coords,
        };
        for i in 0..n {
            g.atoms[i].features.degree = g.neighbors(i).count() as u8;
        }
        g.components = connected_components(n, &g.bonds());
        Ok(g)
    }

    /// Builds the graph with bonds inferred from covalent radii.
    pub fn with_inferred_bonds(atoms: Vec<LigandAtom>, coords: Vec<Vec3>) -> Result<Self, MolError> {
        if coords.len() != atoms.len() {
            return Err(MolError::Length {
                what: "ligand coordinates",
                expected: atoms.len(),
                got: coords.len(),
            });
        }
        let elements: Vec<u8> = atoms.iter().map(|a| a.element).collect();
        let bonds = infer_bonds(&elements, &coords);
        Self::new(atoms, &bonds, Some(coords))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[LigandAtom] {
        &self.atoms
    }

    pub fn atom_mut(&mut self, i: usize) -> &mut LigandAtom {
        &mut self.atoms[i]
    }

    pub fn bonded(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.len() + j]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.len();
        (0..n).filter(move |&j| self.adjacency[i * n + j])
    }

    /// Bonds as `(i, j)` with `i < j`.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.adjacency[i * n + j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn components(&self) -> &[usize] {
        &self.components
    }

    pub fn num_components(&self) -> usize {
        self.components.iter().max().map_or(0, |m| m + 1)
    }

    pub fn coords(&self) -> Option<&[Vec3]> {
        self.coords.as_deref()
    }

    pub fn set_coords(&mut self, coords: Vec<Vec3>) -> Result<(), MolError> {
        if coords.len() != self.len() {
            return Err(MolError::Length {
                what: "ligand coordinates",
                expected: self.len(),
                got: coords.len(),
            });
        }
        self.coords = Some(coords);
        Ok(())
    }

    pub fn features(&self) -> Vec<[f64; FEATURE_WIDTH]> {
        self.atoms.iter().map(|a| a.features.encode()).collect()
    }

    /// Maximum pairwise distance between atoms, 0 for a single atom.
    pub fn diameter(&self) -> Option<f64> {
        let c = self.coords.as_ref()?;
        let mut d = 0.0f64;
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                d = d.max(dist(c[i], c[j]));
            }
        }
        Some(d)
    }
}

/// All pairs closer than the covalent-radius threshold.
pub fn infer_bonds(elements: &[u8], coords: &[Vec3]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..elements.len() {
        for j in i + 1..elements.len() {
            if element::bonded(elements[i], elements[j], dist(coords[i], coords[j])) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Component ids numbered in order of first appearance.
pub(crate) fn connected_components(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        ids[i] = label[r];
    }
    ids
}
