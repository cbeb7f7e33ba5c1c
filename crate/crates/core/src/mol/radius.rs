use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::geom::{dist, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub dist: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusCutoffs {
    pub ligand: f64,
    pub protein: f64,
    pub cross: f64,
}

impl Default for RadiusCutoffs {
    fn default() -> Self {
        Self {
            ligand: 50.0,
            protein: 50.0,
            cross: 30.0,
        }
    }
}

/// Edge lists of the four kinds. Indices are local to the ligand atom list
/// or the residue list; both directions of every pair are stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RadiusGraph {
    pub ligand_ligand: Vec<Edge>,
    pub protein_protein: Vec<Edge>,
    /// `src` is a ligand atom, `dst` a residue.
    pub ligand_protein: Vec<Edge>,
    /// `src` is a residue, `dst` a ligand atom.
    pub protein_ligand: Vec<Edge>,
}

impl RadiusGraph {
    pub fn num_edges(&self) -> usize {
        self.ligand_ligand.len()
            + self.protein_protein.len()
            + self.ligand_protein.len()
            + self.protein_ligand.len()
    }
}

type Cell = (i64, i64, i64);

struct Grid {
    size: f64,
    cells: BTreeMap<Cell, Vec<usize>>,
}

impl Grid {
    fn new(points: &[Vec3], size: f64) -> Self {
        let mut cells: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
        for (i, &p) in points.iter().enumerate() {
            cells.entry(cell(p, size)).or_default().push(i);
        }
        Self { size, cells }
    }

    /// Candidates in the 27 cells around `p`, in ascending index order.
    fn near(&self, p: Vec3) -> Vec<usize> {
        let (x, y, z) = cell(p, self.size);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(v) = self.cells.get(&(x + dx, y + dy, z + dz)) {
                        out.extend_from_slice(v);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn cell(p: Vec3, size: f64) -> Cell {
    let f = |v: f64| libm::floor(v / size) as i64;
    (f(p[0]), f(p[1]), f(p[2]))
}

fn within(from: &[Vec3], to: &[Vec3], cutoff: f64, skip_self: bool) -> Vec<Edge> {
    let mut out = Vec::new();
    if from.is_empty() || to.is_empty() {
        return out;
    }
    let grid = Grid::new(to, cutoff.max(1e-6));
    for (i, &p) in from.iter().enumerate() {
        for j in grid.near(p) {
            if skip_self && i == j {
                continue;
            }
            let d = dist(p, to[j]);
            if d <= cutoff {
                out.push(Edge { src: i, dst: j, dist: d });
            }
        }
    }
    out
}

pub fn build_radius_graph(ligand: &[Vec3], residues_ca: &[Vec3], cutoffs: RadiusCutoffs) -> RadiusGraph {
    let ligand_protein = within(ligand, residues_ca, cutoffs.cross, false);
    let protein_ligand = ligand_protein
        .iter()
        .map(|e| Edge {
            src: e.dst,
            dst: e.src,
            dist: e.dist,
        })
        .collect();
    RadiusGraph {
        ligand_ligand: within(ligand, ligand, cutoffs.ligand, true),
        protein_protein: within(residues_ca, residues_ca, cutoffs.protein, true),
        ligand_protein,
        protein_ligand,
    }
}
