use alloc::vec;
use alloc::vec::Vec;

use crate::diff::{DiffError, Graph, ParamStore, Var};
use crate::geom::Vec3;
use crate::mol::{LigandGraph, PocketBackbone, NUM_RESIDUE_TYPES};

/// Residue self-conditioning slots: 20 types plus the mask token.
pub const TYPE_SLOTS: usize = NUM_RESIDUE_TYPES + 1;

/// Rows that put all mass on the mask token.
pub fn mask_rows(n: usize) -> Vec<[f64; TYPE_SLOTS]> {
    let mut row = [0.0; TYPE_SLOTS];
    row[NUM_RESIDUE_TYPES] = 1.0;
    vec![row; n]
}

/// Inputs of one vector-field evaluation.
#[derive(Debug, Clone)]
pub struct NetInput<'a> {
    pub x_t: &'a [Vec3],
    /// Previous structure estimate.
    pub self_cond: &'a [Vec3],
    /// Previous residue-type estimate per pocket residue.
    pub self_cond_types: &'a [[f64; TYPE_SLOTS]],
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct NetOutput {
    /// Ligand positions `[n, 3]` after each refinement layer; the last one
    /// is the structure prediction.
    pub positions: Vec<Var>,
    /// Residue-type logits `[L, 20]`.
    pub residue_logits: Option<Var>,
    /// Unnormalized (sin, cos) pairs `[L, 8]` for four χ angles.
    pub torsions: Option<Var>,
}

impl NetOutput {
    pub fn prediction(&self) -> Var {
        *self.positions.last().expect("at least one refinement layer")
    }
}

/// A vector field predicting clean ligand coordinates (and optionally
/// residue types) from a noisy state.
pub trait FlowNetwork {
    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;
    fn forward(
        &self,
        g: &mut Graph,
        ligand: &LigandGraph,
        pocket: &PocketBackbone,
        input: &NetInput<'_>,
    ) -> Result<NetOutput, DiffError>;
}
