use alloc::vec::Vec;
use rand::Rng;

use super::loss::{cross_entropy, mean_square_distance, LossReport, LossWeights};
use super::network::{mask_rows, FlowNetwork, NetInput, NetOutput, TYPE_SLOTS};
use super::prior::{interpolate, HarmonicPrior};
use super::FlowError;
use crate::diff::{adam_update, AdamConfig, DiffError, Graph, Var};
use crate::geom::Vec3;
use crate::invariant::torsion_loss;
use crate::mol::{ComplexSample, NUM_RESIDUE_TYPES};
use crate::rng::{derive, seeded};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub sigma: f64,
    pub weights: LossWeights,
    pub adam: AdamConfig,
    /// Probability of running the detached self-conditioning pass.
    pub self_condition: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            weights: LossWeights::default(),
            adam: AdamConfig::default(),
            self_condition: 0.5,
        }
    }
}

/// Loss graph for one sample.
pub struct SampleLoss {
    pub total: Var,
    pub l_cfm: Var,
    pub l_refine: Option<Var>,
    pub l_type: Option<Var>,
    pub l_torsion: Option<Var>,
    /// Outputs of the self-conditioning pass, if one ran. Their values fed
    /// the main pass only through detached copies.
    pub first_pass: Option<NetOutput>,
    pub t: f64,
}

pub(crate) fn probabilities(g: &mut Graph, logits: Var) -> Result<Vec<[f64; TYPE_SLOTS]>, DiffError> {
    let p = g.softmax(logits, 1)?;
    let p = g.detach(p);
    let v = g.value(p);
    Ok((0..v.rows())
        .map(|r| {
            let mut row = [0.0; TYPE_SLOTS];
            row[..NUM_RESIDUE_TYPES].copy_from_slice(v.row(r));
            row
        })
        .collect())
}

pub(crate) fn positions(g: &Graph, x: Var) -> Vec<Vec3> {
    let v = g.value(x);
    (0..v.rows()).map(|r| {
        let p = v.row(r);
        [p[0], p[1], p[2]]
    }).collect()
}

/// Builds the training loss for one sample in `g`.
pub fn sample_loss<M: FlowNetwork, R: Rng + ?Sized>(
    model: &M,
    g: &mut Graph,
    sample: &ComplexSample,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<SampleLoss, FlowError> {
    let x1 = sample.x1();
    let center = sample.pocket.center;
    let prior = HarmonicPrior::new(&sample.ligand)?;
    let t: f64 = rng.random();
    let x0 = prior.sample(center, rng);
    let x = interpolate(&x0, x1, t, cfg.sigma, rng);
    let mut self_cond = prior.sample(center, rng);
    let mut self_types = mask_rows(sample.pocket.len());
    let s: f64 = rng.random();

    let mut first_pass = None;
    if s < cfg.self_condition {
        let input = NetInput {
            x_t: &x,
            self_cond: &self_cond,
            self_cond_types: &self_types,
            t,
        };
        let out = model.forward(g, &sample.ligand, &sample.pocket, &input)?;
        let pred = g.detach(out.prediction());
        let next_cond = positions(g, pred);
        if let Some(logits) = out.residue_logits {
            self_types = probabilities(g, logits)?;
        }
        self_cond = next_cond;
        first_pass = Some(out);
    }

    let input = NetInput {
        x_t: &x,
        self_cond: &self_cond,
        self_cond_types: &self_types,
        t,
    };
    let out = model.forward(g, &sample.ligand, &sample.pocket, &input)?;
    let w = cfg.weights;
    let l_cfm = mean_square_distance(g, out.prediction(), x1)?;
    let mut total = g.scale(l_cfm, w.cfm);

    let k = out.positions.len();
    let mut l_refine = None;
    for &p in &out.positions[..k - 1] {
        let l = mean_square_distance(g, p, x1)?;
        l_refine = Some(match l_refine {
            Some(acc) => g.add(acc, l)?,
            None => l,
        });
    }
    if let Some(l) = l_refine {
        let term = g.scale(l, w.refine);
        total = g.add(total, term)?;
    }

    let mut l_type = None;
    if let Some(logits) = out.residue_logits {
        l_type = cross_entropy(g, logits, &sample.pocket.types())?;
        if let Some(l) = l_type {
            let term = g.scale(l, w.residue_type);
            total = g.add(total, term)?;
        }
    }

    let mut l_torsion = None;
    if let Some(tor) = out.torsions {
        l_torsion = torsion_loss(g, tor, &sample.torsions)?;
        if let Some(l) = l_torsion {
            let term = g.scale(l, w.torsion);
            total = g.add(total, term)?;
        }
    }

    Ok(SampleLoss {
        total,
        l_cfm,
        l_refine,
        l_type,
        l_torsion,
        first_pass,
        t,
    })
}

/// One optimizer step over `batch`. Sample `i` draws its randomness from
/// `derive(seed, i)`.
pub fn train_step<M: FlowNetwork>(
    model: &mut M,
    batch: &[ComplexSample],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<LossReport, FlowError> {
    if batch.is_empty() {
        return Err(FlowError::EmptyBatch);
    }
    model.params_mut().zero_grad();
    let mut sums = [0.0; 4];
    for (i, sample) in batch.iter().enumerate() {
        let mut rng = seeded(derive(seed, i as u64));
        let mut g = Graph::new();
        let loss = sample_loss(&*model, &mut g, sample, cfg, &mut rng)?;
        let val = |v: Option<Var>| v.map_or(0.0, |v| g.value(v).item());
        let parts = [
            g.value(loss.l_cfm).item(),
            val(loss.l_refine),
            val(loss.l_type),
            val(loss.l_torsion),
        ];
        if !parts.iter().all(|p| p.is_finite()) || !g.value(loss.total).item().is_finite() {
            model.params_mut().zero_grad();
            return Err(FlowError::NonFiniteLoss(sample.id.clone()));
        }
        g.backward(loss.total)?;
        g.accumulate_param_grads(model.params_mut());
        for (s, p) in sums.iter_mut().zip(parts) {
            *s += p;
        }
    }
    let b = batch.len() as f64;
    model.params_mut().scale_grads(1.0 / b);
    adam_update(model.params_mut(), &cfg.adam);
    Ok(LossReport::new(
        sums[0] / b,
        sums[1] / b,
        sums[2] / b,
        sums[3] / b,
        cfg.weights,
    ))
}
