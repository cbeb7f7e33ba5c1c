use alloc::vec::Vec;

use super::network::{mask_rows, FlowNetwork, NetInput, TYPE_SLOTS};
use super::prior::HarmonicPrior;
use super::train::{positions, probabilities};
use super::FlowError;
use crate::diff::Graph;
use crate::geom::Vec3;
use crate::metrics::rmsd;
use crate::mol::{LigandGraph, PocketBackbone, ResidueType, NUM_RESIDUE_TYPES};
use crate::rng::seeded;

/// One vector-field evaluation during integration.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    /// Coordinates fed to the model at time `t`.
    pub x_t: Vec<Vec3>,
    /// The model's clean-structure estimate at this step.
    pub x1_pred: Vec<Vec3>,
    /// The model's residue-type estimate (mask rows when the model has no
    /// residue head).
    pub types: Vec<[f64; TYPE_SLOTS]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<FlowState>,
}

impl Trajectory {
    /// The sampled structure: the last clean-structure estimate.
    pub fn final_positions(&self) -> &[Vec3] {
        &self.states.last().expect("nonempty trajectory").x1_pred
    }

    pub fn final_probabilities(&self) -> &[[f64; TYPE_SLOTS]] {
        &self.states.last().expect("nonempty trajectory").types
    }

    /// Argmax residue types of the final estimate, `None` for a
    /// structure-only model.
    pub fn designed_types(&self) -> Option<Vec<ResidueType>> {
        let rows = self.final_probabilities();
        if rows.iter().any(|r| r[NUM_RESIDUE_TYPES] != 0.0) {
            return None;
        }
        Some(
            rows.iter()
                .map(|r| {
                    let (best, _) = r[..NUM_RESIDUE_TYPES]
                        .iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
                    ResidueType::ALL[best]
                })
                .collect(),
        )
    }
}

/// Euler integration with self-conditioning: `steps - 1` updates
/// `x += dt (x1_pred - x) / (1 - t)` followed by a final evaluation whose
/// estimate is the sample.
pub fn euler_integrate<M: FlowNetwork>(
    model: &M,
    ligand: &LigandGraph,
    pocket: &PocketBackbone,
    steps: usize,
    seed: u64,
) -> Result<Trajectory, FlowError> {
    if steps == 0 {
        return Err(FlowError::NoSteps);
    }
    let prior = HarmonicPrior::new(ligand)?;
    let mut rng = seeded(seed);
    let mut x = prior.sample(pocket.center, &mut rng);
    let mut self_cond = prior.sample(pocket.center, &mut rng);
    let mut types = mask_rows(pocket.len());
    let dt = 1.0 / steps as f64;
    let mut states = Vec::with_capacity(steps);
    for step in 0..steps {
        let t = step as f64 * dt;
        let mut g = Graph::new();
        let input = NetInput {
            x_t: &x,
            self_cond: &self_cond,
            self_cond_types: &types,
            t,
        };
        let out = model.forward(&mut g, ligand, pocket, &input)?;
        let pred = positions(&g, out.prediction());
        if let Some(logits) = out.residue_logits {
            types = probabilities(&mut g, logits)?;
        }
        if pred.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite(step));
        }
        states.push(FlowState {
            t,
            x_t: x.clone(),
            x1_pred: pred.clone(),
            types: types.clone(),
        });
        if step + 1 < steps {
            let k = dt / (1.0 - t);
            for (xi, pi) in x.iter_mut().zip(&pred) {
                for d in 0..3 {
                    xi[d] += k * (pi[d] - xi[d]);
                }
            }
            if x.iter().flatten().any(|v| !v.is_finite()) {
                return Err(FlowError::NonFinite(step));
            }
        }
        self_cond = pred;
    }
    Ok(Trajectory { states })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub step: usize,
    pub t: f64,
    pub rmsd_to_final: f64,
    /// Mean Shannon entropy (nats) of the residue-type rows.
    pub entropy: f64,
}

fn entropy(row: &[f64]) -> f64 {
    -row.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * libm::log(p))
        .sum::<f64>()
}

pub fn entropy_trace(trajectory: &Trajectory) -> Vec<TracePoint> {
    let last = trajectory.final_positions();
    trajectory
        .states
        .iter()
        .enumerate()
        .map(|(step, s)| {
            let n = s.types.len().max(1) as f64;
            TracePoint {
                step,
                t: s.t,
                rmsd_to_final: rmsd(&s.x1_pred, last).unwrap_or(0.0),
                entropy: s.types.iter().map(|r| entropy(r)).sum::<f64>() / n,
            }
        })
        .collect()
}
