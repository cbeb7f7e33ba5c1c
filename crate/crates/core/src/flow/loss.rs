use alloc::vec;

use crate::diff::{DiffError, Graph, Tensor, Var};
use crate::geom::Vec3;
use crate::mol::{ResidueType, NUM_RESIDUE_TYPES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub cfm: f64,
    pub refine: f64,
    pub residue_type: f64,
    pub torsion: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            cfm: 1.0,
            refine: 1.0,
            residue_type: 0.2,
            torsion: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub l_cfm: f64,
    pub l_refine: f64,
    pub l_type: f64,
    pub l_torsion: f64,
    pub total: f64,
    pub weights: LossWeights,
}

impl LossReport {
    pub fn new(l_cfm: f64, l_refine: f64, l_type: f64, l_torsion: f64, weights: LossWeights) -> Self {
        let total = weights.cfm * l_cfm
            + weights.refine * l_refine
            + weights.residue_type * l_type
            + weights.torsion * l_torsion;
        Self {
            l_cfm,
            l_refine,
            l_type,
            l_torsion,
            total,
            weights,
        }
    }
}

/// Mean over atoms of the squared distance to the target coordinates.
pub fn mean_square_distance(g: &mut Graph, pred: Var, target: &[Vec3]) -> Result<Var, DiffError> {
    let n = target.len();
    let flat = target.iter().flatten().copied().collect();
    let t = g.constant(Tensor::matrix(n, 3, flat));
    let d = g.sub(pred, t)?;
    let sq = g.mul(d, d)?;
    let s = g.sum_all(sq);
    Ok(g.scale(s, 1.0 / n.max(1) as f64))
}

/// Mean cross-entropy of `[L, 20]` logits against the true types. Masked
/// (unknown) targets are skipped; `None` when no target remains.
pub fn cross_entropy(
    g: &mut Graph,
    logits: Var,
    truth: &[ResidueType],
) -> Result<Option<Var>, DiffError> {
    let l = truth.len();
    let mut onehot = vec![0.0; l * NUM_RESIDUE_TYPES];
    let mut count = 0usize;
    for (i, t) in truth.iter().enumerate() {
        if !t.is_mask() {
            onehot[i * NUM_RESIDUE_TYPES + t.index()] = 1.0;
            count += 1;
        }
    }
    if count == 0 {
        return Ok(None);
    }
    let logp = g.log_softmax(logits, 1)?;
    let target = g.constant(Tensor::matrix(l, NUM_RESIDUE_TYPES, onehot));
    let picked = g.mul(logp, target)?;
    let s = g.sum_all(picked);
    Ok(Some(g.scale(s, -1.0 / count as f64)))
}
