//! The complete vector-field network: equivariant refinement stack, and for
//! joint design the invariant attention stack with its heads.

use alloc::vec::Vec;

use crate::diff::{DiffError, Graph, ParamStore, Tensor};
use crate::equivariant::{EquivariantConfig, EquivariantStack, StackInput};
use crate::flow::{FlowNetwork, NetInput, NetOutput, TYPE_SLOTS};
use crate::geom::{sub, Vec3};
use crate::invariant::{residue_geometry, residue_geometry_width, InvariantConfig, InvariantInput, InvariantStack};
use crate::mol::{LigandGraph, PocketBackbone, NUM_RESIDUE_TYPES};
use crate::nn::rbf_rows;
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelKind {
    /// Ligand structure only; residue types are inputs.
    #[default]
    HarmonicFlow,
    /// Ligand structure plus pocket residue types.
    FlowSite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub equivariant: EquivariantConfig,
    pub invariant: InvariantConfig,
    /// Seed of the parameter initialization.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::HarmonicFlow,
            equivariant: EquivariantConfig::default(),
            invariant: InvariantConfig::default(),
            seed: 0,
        }
    }
}

const ELEMENT_SLOTS: [u8; 9] = [6, 7, 8, 9, 15, 16, 17, 35, 53];

/// Width of [`ligand_node_features`] rows.
pub const LIGAND_FEATURE_WIDTH: usize = ELEMENT_SLOTS.len() + 1 + 14;

/// One-hot element (common organic elements plus "other") followed by the
/// remaining chemistry features.
pub fn ligand_node_features(ligand: &LigandGraph) -> Tensor {
    let mut data = Vec::with_capacity(ligand.len() * LIGAND_FEATURE_WIDTH);
    for atom in ligand.atoms() {
        let slot = ELEMENT_SLOTS
            .iter()
            .position(|&z| z == atom.element)
            .unwrap_or(ELEMENT_SLOTS.len());
        for i in 0..=ELEMENT_SLOTS.len() {
            data.push((i == slot) as u8 as f64);
        }
        data.extend_from_slice(&atom.features.encode()[1..]);
    }
    Tensor::matrix(ligand.len(), LIGAND_FEATURE_WIDTH, data)
}

/// Per-residue vectors from Cα to N, C and O as `[L * 3, 3]`.
pub fn residue_vectors(pocket: &PocketBackbone) -> Tensor {
    let mut data = Vec::with_capacity(pocket.len() * 9);
    for r in &pocket.residues {
        let v = [sub(r.n, r.ca), sub(r.c, r.ca), sub(r.o, r.ca)];
        for d in 0..3 {
            for c in v {
                data.push(c[d]);
            }
        }
    }
    Tensor::matrix(pocket.len() * 3, 3, data)
}

fn one_hot_types(pocket: &PocketBackbone) -> Tensor {
    let mut data = Vec::with_capacity(pocket.len() * TYPE_SLOTS);
    for r in &pocket.residues {
        let mut row = [0.0; TYPE_SLOTS];
        row[r.kind.index()] = 1.0;
        data.extend_from_slice(&row);
    }
    Tensor::matrix(pocket.len(), TYPE_SLOTS, data)
}

fn rows_tensor(rows: &[[f64; TYPE_SLOTS]]) -> Tensor {
    Tensor::matrix(rows.len(), TYPE_SLOTS, rows.iter().flatten().copied().collect())
}

fn hcat(a: &Tensor, b: &Tensor) -> Tensor {
    let (r, wa, wb) = (a.rows(), a.row_len(), b.row_len());
    let mut data = Vec::with_capacity(r * (wa + wb));
    for i in 0..r {
        data.extend_from_slice(a.row(i));
        data.extend_from_slice(b.row(i));
    }
    Tensor::matrix(r, wa + wb, data)
}

fn repeat_row(row: &Tensor, n: usize) -> Tensor {
    let mut data = Vec::with_capacity(n * row.len());
    for _ in 0..n {
        data.extend_from_slice(row.data());
    }
    Tensor::matrix(n, row.len(), data)
}

#[derive(Debug, Clone)]
pub struct FlowModel {
    cfg: ModelConfig,
    store: ParamStore,
    tfn: EquivariantStack,
    gat: Option<InvariantStack>,
}

impl FlowModel {
    pub fn new(cfg: ModelConfig) -> Self {
        let mut rng = seeded(cfg.seed);
        let mut store = ParamStore::new();
        let tfn = EquivariantStack::new(&mut store, cfg.equivariant, LIGAND_FEATURE_WIDTH, TYPE_SLOTS, &mut rng);
        let gat = (cfg.kind == ModelKind::FlowSite).then(|| {
            let t = cfg.equivariant.time_centers;
            let ns = cfg.equivariant.scalars;
            let lw = LIGAND_FEATURE_WIDTH + t + ns;
            let rw = residue_geometry_width(cfg.invariant.rbf_centers) + TYPE_SLOTS + t + ns;
            InvariantStack::new(&mut store, cfg.invariant, lw, rw, &mut rng)
        });
        Self { cfg, store, tfn, gat }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn kind(&self) -> ModelKind {
        self.cfg.kind
    }
}

impl FlowNetwork for FlowModel {
    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn forward(
        &self,
        g: &mut Graph,
        ligand: &LigandGraph,
        pocket: &PocketBackbone,
        input: &NetInput<'_>,
    ) -> Result<NetOutput, DiffError> {
        let lig_feat = ligand_node_features(ligand);
        let residue_features = match self.gat {
            Some(_) => rows_tensor(input.self_cond_types),
            None => one_hot_types(pocket),
        };
        let ca: Vec<Vec3> = pocket.ca();
        let stack = self.tfn.run(
            g,
            &self.store,
            &StackInput {
                ligand_features: lig_feat.clone(),
                residue_features,
                ca: &ca,
                residue_vectors: residue_vectors(pocket),
                x_t: input.x_t,
                self_cond: input.self_cond,
                t: input.t,
            },
        )?;
        let Some(gat) = &self.gat else {
            return Ok(NetOutput {
                positions: stack.positions,
                residue_logits: None,
                torsions: None,
            });
        };

        let pred = *stack.positions.last().expect("at least one layer");
        let pred = g.detach(pred);
        let pv = g.value(pred);
        let pred_pos: Vec<Vec3> = (0..pv.rows()).map(|r| {
            let p = pv.row(r);
            [p[0], p[1], p[2]]
        }).collect();
        let (tc, tw) = self.cfg.equivariant.time_centers();
        let temb = rbf_rows(&[input.t], &tc, tw);
        let lig_in = hcat(&lig_feat, &repeat_row(&temb, ligand.len()));
        let geo = residue_geometry(pocket, &gat.cfg);
        let res_in = hcat(
            &hcat(&geo, &rows_tensor(input.self_cond_types)),
            &repeat_row(&temb, pocket.len()),
        );
        let out = gat.run(
            g,
            &self.store,
            &InvariantInput {
                ligand_features: lig_in,
                residue_features: res_in,
                ligand: &pred_pos,
                pocket,
                tfn_scalars: stack.scalars,
            },
        )?;
        debug_assert_eq!(g.value(out.residue_logits).last_dim(), NUM_RESIDUE_TYPES);
        Ok(NetOutput {
            positions: stack.positions,
            residue_logits: Some(out.residue_logits),
            torsions: Some(out.torsions),
        })
    }
}
