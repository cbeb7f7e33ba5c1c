//! Invariant graph attention over the predicted complex, with residue-type
//! and side-chain torsion heads.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::diff::{DiffError, Graph, ParamStore, Tensor, Var};
use crate::equivariant::{global_edges, EdgeKind};
use crate::geom::{dihedral, dist, Vec3};
use crate::mol::{build_radius_graph, PocketBackbone, RadiusCutoffs, Residue, NUM_RESIDUE_TYPES};
use crate::nn::{linspace, rbf_embed, Linear, Mlp};
use crate::rng::SeededRng;

/// Weight of the norm penalty in the torsion loss.
pub const TORSION_NORM_WEIGHT: f64 = 0.02;
/// Torsions per residue.
pub const NUM_TORSIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantConfig {
    pub layers: usize,
    pub hidden: usize,
    pub rbf_centers: usize,
    /// Upper end of the inter-node distance basis (Å).
    pub rbf_max: f64,
    /// Upper end of the intra-residue distance basis (Å).
    pub intra_max: f64,
    pub cutoffs: RadiusCutoffs,
}

impl Default for InvariantConfig {
    fn default() -> Self {
        Self {
            layers: 4,
            hidden: 64,
            rbf_centers: 16,
            rbf_max: 30.0,
            intra_max: 6.0,
            cutoffs: RadiusCutoffs::default(),
        }
    }
}

fn basis(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    let c = linspace(lo, hi, n);
    let w = if c.len() > 1 { c[1] - c[0] } else { hi.max(1.0) };
    (c, w)
}

fn residue_points(r: &Residue) -> [Vec3; 5] {
    [r.n, r.ca, r.c, r.o, r.virtual_atom()]
}

fn consecutive(a: &Residue, b: &Residue) -> bool {
    a.chain == b.chain && b.seq == a.seq + 1 && dist(a.c, b.n) < 2.0
}

/// Width of [`residue_geometry`] rows for a basis of `g` centers.
pub fn residue_geometry_width(g: usize) -> usize {
    10 * g + 6
}

/// Invariant per-residue encodings: radial basis of the ten distances among
/// N, Cα, C, O and the virtual atom, then cos φ, cos ψ, cos ω with a
/// presence flag each.
pub fn residue_geometry(pocket: &PocketBackbone, cfg: &InvariantConfig) -> Tensor {
    let (c, w) = basis(0.0, cfg.intra_max, cfg.rbf_centers);
    let res = &pocket.residues;
    let width = residue_geometry_width(cfg.rbf_centers);
    let mut data = Vec::with_capacity(res.len() * width);
    for (i, r) in res.iter().enumerate() {
        let p = residue_points(r);
        for a in 0..5 {
            for b in a + 1..5 {
                data.extend(rbf_embed(dist(p[a], p[b]), &c, w));
            }
        }
        let prev = i.checked_sub(1).map(|j| &res[j]).filter(|q| consecutive(q, r));
        let next = res.get(i + 1).filter(|q| consecutive(r, q));
        let phi = prev.map(|q| dihedral(q.c, r.n, r.ca, r.c));
        let psi = next.map(|q| dihedral(r.n, r.ca, r.c, q.n));
        let omega = next.map(|q| dihedral(r.ca, r.c, q.n, q.ca));
        for a in [phi, psi, omega] {
            data.push(a.map_or(0.0, libm::cos));
            data.push(a.is_some() as u8 as f64);
        }
    }
    Tensor::matrix(res.len(), width, data)
}

/// Raw invariant edge features of one kind.
fn edge_features(
    kind: EdgeKind,
    pairs: &[(usize, usize)],
    n_lig: usize,
    ligand: &[Vec3],
    residues: &[Residue],
    cfg: &InvariantConfig,
) -> Tensor {
    let (c, w) = basis(0.0, cfg.rbf_max, cfg.rbf_centers);
    let mut data = Vec::new();
    let mut width = 0;
    for &(s, d) in pairs {
        let dists: Vec<f64> = match kind {
            EdgeKind::LigandLigand => vec![dist(ligand[s], ligand[d])],
            EdgeKind::ProteinProtein => {
                let a = residue_points(&residues[s - n_lig]);
                let b = residue_points(&residues[d - n_lig]);
                a.iter().flat_map(|&p| b.iter().map(move |&q| dist(p, q))).collect()
            }
            EdgeKind::LigandProtein => residues[d - n_lig]
                .backbone()
                .iter()
                .map(|&q| dist(ligand[s], q))
                .collect(),
            EdgeKind::ProteinLigand => residues[s - n_lig]
                .backbone()
                .iter()
                .map(|&q| dist(ligand[d], q))
                .collect(),
        };
        width = dists.len() * c.len();
        for d in dists {
            data.extend(rbf_embed(d, &c, w));
        }
    }
    Tensor::matrix(pairs.len(), width, data)
}

/// Raw feature width per edge kind.
pub fn edge_feature_width(kind: EdgeKind, g: usize) -> usize {
    match kind {
        EdgeKind::LigandLigand => g,
        EdgeKind::ProteinProtein => 25 * g,
        EdgeKind::LigandProtein | EdgeKind::ProteinLigand => 4 * g,
    }
}

/// Attention-weighted aggregation. `scores` is `[E]` or `[E, 1]`, `values`
/// is `[E, H]`; nodes without incoming edges keep their row of `h`.
/// Returns the new features and the attention coefficients.
pub fn attention_aggregate(
    g: &mut Graph,
    h: Var,
    scores: Var,
    values: Var,
    dst: Arc<[usize]>,
) -> Result<(Var, Var), DiffError> {
    let n = g.value(h).rows();
    let e = dst.len();
    let scores = g.reshape(scores, &[e])?;
    let attn = g.segment_softmax(scores, dst.clone())?;
    let weighted = g.mul_col(values, attn)?;
    let agg = g.scatter_add_rows(weighted, dst.clone(), n)?;
    let mut keep = vec![1.0; n];
    for &d in dst.iter() {
        keep[d] = 0.0;
    }
    let keep = g.constant(Tensor::vector(&keep));
    let kept = g.mul_col(h, keep)?;
    Ok((g.add(agg, kept)?, attn))
}

/// `e_ji <- Omega(h_j | e_ji | h_i)`.
pub fn edge_update(
    g: &mut Graph,
    store: &ParamStore,
    omega: &Linear,
    h: Var,
    e: Var,
    src: Arc<[usize]>,
    dst: Arc<[usize]>,
) -> Result<Var, DiffError> {
    let hj = g.gather_rows(h, src)?;
    let hi = g.gather_rows(h, dst)?;
    let x = g.concat(&[hj, e, hi], 1)?;
    omega.forward(g, store, x)
}

#[derive(Debug, Clone)]
struct GatLayer {
    pi: [Mlp; 4],
    xi: [Mlp; 4],
    omega: [Linear; 4],
}

/// Edges of one kind for the attention stack.
#[derive(Debug, Clone)]
pub struct GatEdges {
    pub kind: EdgeKind,
    pub src: Arc<[usize]>,
    pub dst: Arc<[usize]>,
    pub feat: Var,
}

impl GatLayer {
    fn new(store: &mut ParamStore, name: &str, h: usize, rng: &mut SeededRng) -> Self {
        let k = |p: &str, i: usize| format!("{name}.{p}{i}");
        Self {
            pi: core::array::from_fn(|i| Mlp::new(store, &k("pi", i), [3 * h, h, 1], rng)),
            xi: core::array::from_fn(|i| Mlp::new(store, &k("xi", i), [2 * h, h, h], rng)),
            omega: core::array::from_fn(|i| Linear::new(store, &k("omega", i), 3 * h, h, true, rng)),
        }
    }

    fn forward(&self, g: &mut Graph, store: &ParamStore, h: Var, edges: &mut [GatEdges]) -> Result<Var, DiffError> {
        if edges.is_empty() {
            return Ok(h);
        }
        let mut scores = Vec::new();
        let mut values = Vec::new();
        let mut dst = Vec::new();
        for set in edges.iter() {
            let k = set.kind as usize;
            let hj = g.gather_rows(h, set.src.clone())?;
            let hi = g.gather_rows(h, set.dst.clone())?;
            let x = g.concat(&[hj, set.feat, hi], 1)?;
            scores.push(self.pi[k].forward(g, store, x)?);
            let x = g.concat(&[set.feat, hj], 1)?;
            values.push(self.xi[k].forward(g, store, x)?);
            dst.extend_from_slice(&set.dst);
        }
        let scores = g.concat(&scores, 0)?;
        let values = g.concat(&values, 0)?;
        let (h, _) = attention_aggregate(g, h, scores, values, dst.into())?;
        for set in edges.iter_mut() {
            let k = set.kind as usize;
            set.feat = edge_update(g, store, &self.omega[k], h, set.feat, set.src.clone(), set.dst.clone())?;
        }
        Ok(h)
    }
}

/// Inputs of the invariant stack.
#[derive(Debug, Clone)]
pub struct InvariantInput<'a> {
    /// `[n, F]` ligand features (chemistry and time embedding).
    pub ligand_features: Tensor,
    /// `[L, F']` residue features (geometry, self-conditioning, time).
    pub residue_features: Tensor,
    /// Predicted ligand coordinates.
    pub ligand: &'a [Vec3],
    pub pocket: &'a PocketBackbone,
    /// Final scalar features of the equivariant stack, `[n + L, n_s]`.
    pub tfn_scalars: Var,
}

#[derive(Debug, Clone)]
pub struct InvariantOutput {
    /// `[L, 20]`
    pub residue_logits: Var,
    /// `[L, 8]` unnormalized (sin, cos) per torsion.
    pub torsions: Var,
}

#[derive(Debug, Clone)]
pub struct InvariantStack {
    pub cfg: InvariantConfig,
    embed_ligand: Linear,
    embed_residue: Linear,
    embed_edges: [Linear; 4],
    layers: Vec<GatLayer>,
    residue_head: Linear,
    torsion_head: Linear,
}

impl InvariantStack {
    pub fn new(
        store: &mut ParamStore,
        cfg: InvariantConfig,
        ligand_width: usize,
        residue_width: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let h = cfg.hidden;
        Self {
            embed_ligand: Linear::new(store, "gat.embed_ligand", ligand_width, h, true, rng),
            embed_residue: Linear::new(store, "gat.embed_residue", residue_width, h, true, rng),
            embed_edges: EdgeKind::ALL.map(|k| {
                let w = edge_feature_width(k, cfg.rbf_centers);
                Linear::new(store, &format!("gat.embed_edge{}", k as usize), w, h, true, rng)
            }),
            layers: (0..cfg.layers)
                .map(|l| GatLayer::new(store, &format!("gat.layer{l}"), h, rng))
                .collect(),
            residue_head: Linear::with_gain(store, "gat.residue_head", h, NUM_RESIDUE_TYPES, true, 0.5, rng),
            torsion_head: Linear::new(store, "gat.torsion_head", h, 2 * NUM_TORSIONS, true, rng),
            cfg,
        }
    }

    pub fn run(&self, g: &mut Graph, store: &ParamStore, input: &InvariantInput<'_>) -> Result<InvariantOutput, DiffError> {
        let n = input.ligand.len();
        let l = input.pocket.len();
        let lig_idx: Arc<[usize]> = (0..n).collect();
        let res_idx: Arc<[usize]> = (n..n + l).collect();
        let tfn_l = g.gather_rows(input.tfn_scalars, lig_idx)?;
        let tfn_r = g.gather_rows(input.tfn_scalars, res_idx.clone())?;
        let lf = g.constant(input.ligand_features.clone());
        let rf = g.constant(input.residue_features.clone());
        let lf = g.concat(&[lf, tfn_l], 1)?;
        let rf = g.concat(&[rf, tfn_r], 1)?;
        let hl = self.embed_ligand.forward(g, store, lf)?;
        let hr = self.embed_residue.forward(g, store, rf)?;
        let mut h = g.concat(&[hl, hr], 0)?;

        let ca = input.pocket.ca();
        let rg = build_radius_graph(input.ligand, &ca, self.cfg.cutoffs);
        let mut edges = Vec::new();
        for (kind, pairs) in global_edges(&rg, n) {
            if pairs.is_empty() {
                continue;
            }
            let raw = edge_features(kind, &pairs, n, input.ligand, &input.pocket.residues, &self.cfg);
            let raw = g.constant(raw);
            let feat = self.embed_edges[kind as usize].forward(g, store, raw)?;
            edges.push(GatEdges {
                kind,
                src: pairs.iter().map(|p| p.0).collect(),
                dst: pairs.iter().map(|p| p.1).collect(),
                feat,
            });
        }
        for layer in &self.layers {
            h = layer.forward(g, store, h, &mut edges)?;
        }
        let hr = g.gather_rows(h, res_idx)?;
        Ok(InvariantOutput {
            residue_logits: self.residue_head.forward(g, store, hr)?,
            torsions: self.torsion_head.forward(g, store, hr)?,
        })
    }
}

/// Mean over torsions with ground truth of `|s/|s| - (sin a, cos a)|^2`,
/// plus a penalty on `| |s| - 1 |`. `None` when nothing has ground truth.
pub fn torsion_loss(
    g: &mut Graph,
    pred: Var,
    truth: &[[Option<f64>; NUM_TORSIONS]],
) -> Result<Option<Var>, DiffError> {
    let mut rows = Vec::new();
    let mut target = Vec::new();
    for (r, angles) in truth.iter().enumerate() {
        for (k, a) in angles.iter().enumerate() {
            if let Some(a) = a {
                rows.push(r * NUM_TORSIONS + k);
                target.push(libm::sin(*a));
                target.push(libm::cos(*a));
            }
        }
    }
    if rows.is_empty() {
        return Ok(None);
    }
    let m = rows.len();
    let l = g.value(pred).rows();
    let pairs = g.reshape(pred, &[l * NUM_TORSIONS, 2])?;
    let s = g.gather_rows(pairs, rows.into())?;
    let sq = g.mul(s, s)?;
    let n2 = g.sum_axis(sq, 1)?;
    let n2 = g.add_scalar(n2, 1e-12);
    let norm = g.sqrt(n2);
    let inv = g.recip(norm);
    let unit = g.mul_col(s, inv)?;
    let t = g.constant(Tensor::matrix(m, 2, target));
    let diff = g.sub(unit, t)?;
    let d2 = g.mul(diff, diff)?;
    let angular = g.sum_all(d2);
    let angular = g.scale(angular, 1.0 / m as f64);
    let dev = g.add_scalar(norm, -1.0);
    let pos = g.relu(dev);
    let neg = g.scale(dev, -1.0);
    let neg = g.relu(neg);
    let abs = g.add(pos, neg)?;
    let pen = g.mean_all(abs);
    let pen = g.scale(pen, TORSION_NORM_WEIGHT);
    Ok(Some(g.add(angular, pen)?))
}
