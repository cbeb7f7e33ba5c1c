//! Equivariant refinement layers over scalar and 3-vector node features.
//!
//! Node order is ligand atoms first, then residues. Vector features are
//! stored as `[nodes * 3, channels]` with row `3 * node + axis`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::diff::{DiffError, Graph, ParamId, ParamStore, Tensor, Var};
use crate::geom::{dist, Vec3};
use crate::mol::{build_radius_graph, Edge, RadiusCutoffs, RadiusGraph};
use crate::nn::{linspace, rbf_rows, rbf_var, Linear};
use crate::rng::SeededRng;

/// Offset under the square root when turning displacements into
/// distances, keeping directions finite for coincident nodes.
pub const DISTANCE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivariantConfig {
    pub layers: usize,
    pub scalars: usize,
    pub vectors: usize,
    pub rbf_centers: usize,
    pub rbf_max: f64,
    pub time_centers: usize,
    pub cutoffs: RadiusCutoffs,
    /// Build each layer's geometry from detached positions.
    pub detach_positions: bool,
    /// Enable the vector-cross-vector path. It produces pseudovectors, so
    /// the stack is then only rotation (not reflection) equivariant.
    pub cross_path: bool,
}

impl Default for EquivariantConfig {
    fn default() -> Self {
        Self {
            layers: 6,
            scalars: 32,
            vectors: 8,
            rbf_centers: 32,
            rbf_max: 50.0,
            time_centers: 16,
            cutoffs: RadiusCutoffs::default(),
            detach_positions: true,
            cross_path: false,
        }
    }
}

impl EquivariantConfig {
    pub fn distance_centers(&self) -> (Vec<f64>, f64) {
        let c = linspace(0.0, self.rbf_max, self.rbf_centers);
        let w = if c.len() > 1 { c[1] - c[0] } else { self.rbf_max.max(1.0) };
        (c, w)
    }

    pub fn time_centers(&self) -> (Vec<f64>, f64) {
        let c = linspace(0.0, 1.0, self.time_centers);
        let w = if c.len() > 1 { c[1] - c[0] } else { 1.0 };
        (c, w)
    }
}

/// Per-edge (or per-node) features: scalars `[E, C]`, vectors `[E*3, C]`.
#[derive(Debug, Clone, Copy)]
pub struct Irreps {
    pub s: Var,
    pub v: Var,
}

/// Per-row, per-channel weights of each tensor-product path, all `[E, C]`.
#[derive(Debug, Clone, Copy)]
pub struct PathWeights {
    /// scalar x scalar -> scalar
    pub ss: Var,
    /// vector . vector -> scalar
    pub dot: Var,
    /// scalar(a) x vector(b) -> vector
    pub sv: Var,
    /// vector(a) x scalar(b) -> vector
    pub vs: Var,
    /// vector x vector -> pseudovector
    pub cross: Option<Var>,
}

fn rep3(rows: usize) -> Arc<[usize]> {
    (0..rows * 3).map(|r| r / 3).collect()
}

fn rows3(index: &[usize]) -> Arc<[usize]> {
    index.iter().flat_map(|&i| [3 * i, 3 * i + 1, 3 * i + 2]).collect()
}

fn shift3(rows: usize, by: usize) -> Arc<[usize]> {
    (0..rows * 3).map(|r| r - r % 3 + (r % 3 + by) % 3).collect()
}

/// Sums each consecutive triple of rows: `[E*3, C] -> [E, C]`.
fn sum3(g: &mut Graph, x: Var) -> Result<Var, DiffError> {
    let (r, c) = (g.value(x).rows(), g.value(x).row_len());
    let x = g.reshape(x, &[r / 3, 3, c])?;
    g.sum_axis(x, 1)
}

/// Channel-wise cross product of two `[E*3, C]` vector arrays.
fn cross_channels(g: &mut Graph, a: Var, b: Var) -> Result<Var, DiffError> {
    let e = g.value(a).rows() / 3;
    let (p1, p2) = (shift3(e, 1), shift3(e, 2));
    let a1 = g.gather_rows(a, p1.clone())?;
    let a2 = g.gather_rows(a, p2.clone())?;
    let b1 = g.gather_rows(b, p1)?;
    let b2 = g.gather_rows(b, p2)?;
    let l = g.mul(a1, b2)?;
    let r = g.mul(a2, b1)?;
    g.sub(l, r)
}

/// Order-1 tensor product of `a` and `b` with per-path weights.
pub fn tp_l1(g: &mut Graph, a: Irreps, b: Irreps, w: &PathWeights) -> Result<Irreps, DiffError> {
    let e = g.value(a.s).rows();
    let r3 = rep3(e);
    let ss = g.mul(a.s, b.s)?;
    let ss = g.mul(ss, w.ss)?;
    let vv = g.mul(a.v, b.v)?;
    let dot = sum3(g, vv)?;
    let dot = g.mul(dot, w.dot)?;
    let s = g.add(ss, dot)?;

    let sa = g.gather_rows(a.s, r3.clone())?;
    let sv = g.mul(sa, b.v)?;
    let wsv = g.gather_rows(w.sv, r3.clone())?;
    let sv = g.mul(sv, wsv)?;
    let sb = g.gather_rows(b.s, r3.clone())?;
    let vs = g.mul(a.v, sb)?;
    let wvs = g.gather_rows(w.vs, r3.clone())?;
    let vs = g.mul(vs, wvs)?;
    let mut v = g.add(sv, vs)?;
    if let Some(wc) = w.cross {
        let c = cross_channels(g, a.v, b.v)?;
        let wc = g.gather_rows(wc, r3)?;
        let c = g.mul(c, wc)?;
        v = g.add(v, c)?;
    }
    Ok(Irreps { s, v })
}

/// The four edge kinds, each with its own weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    LigandLigand,
    ProteinProtein,
    LigandProtein,
    ProteinLigand,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 4] = [
        Self::LigandLigand,
        Self::ProteinProtein,
        Self::LigandProtein,
        Self::ProteinLigand,
    ];
}

/// Edges of one kind with global node indices and geometry.
#[derive(Debug, Clone)]
pub struct EdgeSet {
    pub kind: EdgeKind,
    pub src: Arc<[usize]>,
    pub dst: Arc<[usize]>,
    /// Edge features `[E, G]`.
    pub feat: Var,
    /// Unit direction `[E*3, 1]` from receiver to sender.
    pub dir: Var,
}

impl EdgeSet {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }
}

/// Global-index edge lists of a radius graph, in kind order.
pub fn global_edges(rg: &RadiusGraph, n_ligand: usize) -> [(EdgeKind, Vec<(usize, usize)>); 4] {
    let map = |v: &[Edge], so: usize, doff: usize| -> Vec<(usize, usize)> {
        v.iter().map(|e| (e.src + so, e.dst + doff)).collect()
    };
    [
        (EdgeKind::LigandLigand, map(&rg.ligand_ligand, 0, 0)),
        (EdgeKind::ProteinProtein, map(&rg.protein_protein, n_ligand, n_ligand)),
        (EdgeKind::LigandProtein, map(&rg.ligand_protein, 0, n_ligand)),
        (EdgeKind::ProteinLigand, map(&rg.protein_ligand, n_ligand, 0)),
    ]
}

fn positions_of(t: &Tensor) -> Vec<Vec3> {
    (0..t.rows()).map(|r| {
        let p = t.row(r);
        [p[0], p[1], p[2]]
    }).collect()
}

/// Radius graph over the current ligand positions and static residues,
/// with differentiable distances and directions.
pub fn build_edges(
    g: &mut Graph,
    cfg: &EquivariantConfig,
    ligand: Var,
    ca: &[Vec3],
    self_cond: &[Vec3],
) -> Result<Vec<EdgeSet>, DiffError> {
    let lig_vals = positions_of(g.value(ligand));
    let n = lig_vals.len();
    let rg = build_radius_graph(&lig_vals, ca, cfg.cutoffs);
    let ca_t = g.constant(Tensor::matrix(ca.len(), 3, ca.iter().flatten().copied().collect()));
    let all = if ca.is_empty() { ligand } else { g.concat(&[ligand, ca_t], 0)? };
    let (centers, width) = cfg.distance_centers();
    let mut out = Vec::new();
    for (kind, pairs) in global_edges(&rg, n) {
        if pairs.is_empty() {
            continue;
        }
        let src: Arc<[usize]> = pairs.iter().map(|p| p.0).collect();
        let dst: Arc<[usize]> = pairs.iter().map(|p| p.1).collect();
        let ps = g.gather_rows(all, src.clone())?;
        let pd = g.gather_rows(all, dst.clone())?;
        let rel = g.sub(ps, pd)?;
        let sq = g.mul(rel, rel)?;
        let s = g.sum_axis(sq, 1)?;
        let s = g.add_scalar(s, DISTANCE_EPS);
        let d = g.sqrt(s);
        let inv = g.recip(d);
        let dir = g.mul_col(rel, inv)?;
        let dir = g.reshape(dir, &[pairs.len() * 3, 1])?;
        let mut feat = rbf_var(g, d, &centers, width)?;
        if kind == EdgeKind::LigandLigand {
            let sc: Vec<f64> = pairs.iter().map(|&(a, b)| dist(self_cond[a], self_cond[b])).collect();
            let sc = g.constant(rbf_rows(&sc, &centers, width));
            feat = g.concat(&[feat, sc], 1)?;
        }
        out.push(EdgeSet { kind, src, dst, feat, dir });
    }
    Ok(out)
}

/// Edge-conditioned generator of path weights.
#[derive(Debug, Clone, Copy)]
struct EdgeNet {
    w_e: Linear,
    w_a: Linear,
    w_b: Linear,
    out: Linear,
}

/// One refinement layer: message passing followed by a ligand position
/// update.
#[derive(Debug, Clone)]
pub struct RefinementLayer {
    psi: [EdgeNet; 4],
    mix_ss: Linear,
    mix_vs: Linear,
    mix_sv: Linear,
    mix_vv: Linear,
    mix_cross: Option<Linear>,
    bn_gamma: ParamId,
    bn_beta: ParamId,
    bn_logscale: ParamId,
    /// Vector channels to one 3-vector per ligand atom.
    pub phi: Linear,
    ns: usize,
    nv: usize,
}

/// Node features of the whole graph.
#[derive(Debug, Clone, Copy)]
pub struct NodeState {
    pub s: Var,
    pub v: Var,
}

impl RefinementLayer {
    pub fn new(store: &mut ParamStore, name: &str, cfg: &EquivariantConfig, rng: &mut SeededRng) -> Self {
        let (ns, nv) = (cfg.scalars, cfg.vectors);
        let paths = 2 * ns + 2 * nv + if cfg.cross_path { nv } else { 0 };
        let psi = EdgeKind::ALL.map(|k| {
            let g = cfg.rbf_centers * if k == EdgeKind::LigandLigand { 2 } else { 1 };
            let p = format!("{name}.psi{}", k as usize);
            EdgeNet {
                w_e: Linear::new(store, &format!("{p}.edge"), g, ns, false, rng),
                w_a: Linear::new(store, &format!("{p}.dst"), ns, ns, false, rng),
                w_b: Linear::new(store, &format!("{p}.src"), ns, ns, true, rng),
                out: Linear::with_gain(store, &format!("{p}.out"), ns, paths, true, 0.5, rng),
            }
        });
        Self {
            psi,
            mix_ss: Linear::new(store, &format!("{name}.mix_ss"), ns, ns, false, rng),
            mix_vs: Linear::new(store, &format!("{name}.mix_vs"), nv, ns, false, rng),
            mix_sv: Linear::new(store, &format!("{name}.mix_sv"), ns, nv, false, rng),
            mix_vv: Linear::new(store, &format!("{name}.mix_vv"), nv, nv, false, rng),
            mix_cross: cfg
                .cross_path
                .then(|| Linear::new(store, &format!("{name}.mix_cross"), nv, nv, false, rng)),
            bn_gamma: store.add(format!("{name}.bn.gamma"), Tensor::full(&[ns], 1.0)),
            bn_beta: store.add(format!("{name}.bn.beta"), Tensor::zeros(&[ns])),
            bn_logscale: store.add(format!("{name}.bn.logscale"), Tensor::zeros(&[nv])),
            phi: Linear::with_gain(store, &format!("{name}.phi"), nv, 1, false, 0.1, rng),
            ns,
            nv,
        }
    }

    /// Updates node features in place and returns the new ligand positions.
    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        h: &mut NodeState,
        edges: &[EdgeSet],
        x: Var,
    ) -> Result<Var, DiffError> {
        let (ns, nv) = (self.ns, self.nv);
        let n_nodes = g.value(h.s).rows();
        let n_lig = g.value(x).rows();
        let sw_ss = self.mix_ss.forward(g, store, h.s)?;
        let vw_vs = self.mix_vs.forward(g, store, h.v)?;
        let sw_sv = self.mix_sv.forward(g, store, h.s)?;
        let vw_vv = self.mix_vv.forward(g, store, h.v)?;
        let vw_cross = match &self.mix_cross {
            Some(m) => Some(m.forward(g, store, h.v)?),
            None => None,
        };

        let mut degree = vec![0usize; n_nodes];
        let mut acc_s: Option<Var> = None;
        let mut acc_v: Option<Var> = None;
        for set in edges.iter().filter(|s| !s.is_empty()) {
            let net = &self.psi[set.kind as usize];
            let e = set.len();
            for &d in set.dst.iter() {
                degree[d] += 1;
            }
            let a = net.w_a.forward(g, store, h.s)?;
            let b = net.w_b.forward(g, store, h.s)?;
            let pre = net.w_e.forward(g, store, set.feat)?;
            let a = g.gather_rows(a, set.dst.clone())?;
            let b = g.gather_rows(b, set.src.clone())?;
            let pre = g.add(pre, a)?;
            let pre = g.add(pre, b)?;
            let hid = g.silu(pre);
            let psi = net.out.forward(g, store, hid)?;
            let p_ss = g.slice(psi, 1, 0, ns)?;
            let p_vs = g.slice(psi, 1, ns, 2 * ns)?;
            let p_sv = g.slice(psi, 1, 2 * ns, 2 * ns + nv)?;
            let p_vv = g.slice(psi, 1, 2 * ns + nv, 2 * ns + 2 * nv)?;

            let src3 = rows3(&set.src);
            let r3 = rep3(e);
            // Y0 (x) s  and  Y1 . V
            let s_j = g.gather_rows(sw_ss, set.src.clone())?;
            let ss = g.mul(p_ss, s_j)?;
            let v_j = g.gather_rows(vw_vs, src3.clone())?;
            let proj = g.mul_col(v_j, set.dir)?;
            let dot = sum3(g, proj)?;
            let dot = g.mul(p_vs, dot)?;
            let msg_s = g.add(ss, dot)?;
            // Y1 (x) s  and  Y0 (x) V
            let s_j = g.gather_rows(sw_sv, set.src.clone())?;
            let sv = g.mul(p_sv, s_j)?;
            let sv = g.gather_rows(sv, r3.clone())?;
            let sv = g.mul_col(sv, set.dir)?;
            let v_j = g.gather_rows(vw_vv, src3.clone())?;
            let p_vv = g.gather_rows(p_vv, r3.clone())?;
            let vv = g.mul(p_vv, v_j)?;
            let mut msg_v = g.add(sv, vv)?;
            if let Some(vc) = vw_cross {
                let p_c = g.slice(psi, 1, 2 * ns + 2 * nv, 2 * ns + 3 * nv)?;
                let u = g.gather_rows(vc, src3)?;
                let ones = g.constant(Tensor::full(&[1, nv], 1.0));
                let dirs = g.matmul(set.dir, ones)?;
                let c = cross_channels(g, dirs, u)?;
                let p_c = g.gather_rows(p_c, r3)?;
                let c = g.mul(c, p_c)?;
                msg_v = g.add(msg_v, c)?;
            }

            let sum_s = g.scatter_add_rows(msg_s, set.dst.clone(), n_nodes)?;
            let sum_v = g.scatter_add_rows(msg_v, rows3(&set.dst), n_nodes * 3)?;
            acc_s = Some(match acc_s {
                Some(t) => g.add(t, sum_s)?,
                None => sum_s,
            });
            acc_v = Some(match acc_v {
                Some(t) => g.add(t, sum_v)?,
                None => sum_v,
            });
        }

        if let (Some(acc_s), Some(acc_v)) = (acc_s, acc_v) {
            let inv: Vec<f64> = degree
                .iter()
                .map(|&d| if d > 0 { 1.0 / d as f64 } else { 0.0 })
                .collect();
            let inv3: Vec<f64> = inv.iter().flat_map(|&v| [v, v, v]).collect();
            let inv = g.constant(Tensor::vector(&inv));
            let inv3 = g.constant(Tensor::vector(&inv3));
            let mean_s = g.mul_col(acc_s, inv)?;
            let mean_v = g.mul_col(acc_v, inv3)?;
            let active: Arc<[usize]> = (0..n_nodes).filter(|&i| degree[i] > 0).collect();
            let (ds, dv) = self.batch_norm(g, store, mean_s, mean_v, &active, n_nodes)?;
            h.s = g.add(h.s, ds)?;
            h.v = g.add(h.v, dv)?;
        }

        let lig_v = g.slice(h.v, 0, 0, 3 * n_lig)?;
        let delta = self.phi.forward(g, store, lig_v)?;
        let delta = g.reshape(delta, &[n_lig, 3])?;
        g.add(x, delta)
    }

    /// Normalization over the nodes that received messages, using the
    /// statistics of this graph. Vectors are only rescaled per channel.
    fn batch_norm(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        s: Var,
        v: Var,
        active: &Arc<[usize]>,
        n_nodes: usize,
    ) -> Result<(Var, Var), DiffError> {
        let gamma = g.param(store, self.bn_gamma);
        let beta = g.param(store, self.bn_beta);
        let logscale = g.param(store, self.bn_logscale);

        let sa = g.gather_rows(s, active.clone())?;
        let sa = g.normalize(sa, 0)?;
        let sa = g.mul_row(sa, gamma)?;
        let sa = g.add_row(sa, beta)?;
        let s_out = g.scatter_add_rows(sa, active.clone(), n_nodes)?;

        let act3 = rows3(active);
        let va = g.gather_rows(v, act3.clone())?;
        let sq = g.mul(va, va)?;
        let ms = g.mean_axis(sq, 0)?;
        let ms = g.scale(ms, 3.0);
        let ms = g.add_scalar(ms, crate::diff::NORM_EPS);
        let rms = g.sqrt(ms);
        let inv = g.recip(rms);
        let gain = g.exp(logscale);
        let factor = g.mul(inv, gain)?;
        let va = g.mul_row(va, factor)?;
        let v_out = g.scatter_add_rows(va, act3, n_nodes * 3)?;
        Ok((s_out, v_out))
    }
}

/// Inputs of the equivariant stack for one evaluation.
#[derive(Debug, Clone)]
pub struct StackInput<'a> {
    /// `[n, F]` ligand atom features.
    pub ligand_features: Tensor,
    /// `[L, 21]` residue scalar inputs.
    pub residue_features: Tensor,
    /// Residue backbones, used for Cα positions and initial vectors.
    pub ca: &'a [Vec3],
    /// `[L * 3, 3]` columns Cα→N, Cα→C, Cα→O.
    pub residue_vectors: Tensor,
    pub x_t: &'a [Vec3],
    pub self_cond: &'a [Vec3],
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct StackOutput {
    /// Ligand positions after each layer.
    pub positions: Vec<Var>,
    /// Final scalar node features `[N, n_s]`.
    pub scalars: Var,
    /// Final vector node features `[N * 3, n_v]`.
    pub vectors: Var,
}

/// Input embeddings plus the refinement layers.
#[derive(Debug, Clone)]
pub struct EquivariantStack {
    pub cfg: EquivariantConfig,
    embed_ligand: Linear,
    embed_residue: Linear,
    embed_time: Linear,
    embed_vectors: Linear,
    pub layers: Vec<RefinementLayer>,
}

impl EquivariantStack {
    pub fn new(
        store: &mut ParamStore,
        cfg: EquivariantConfig,
        ligand_width: usize,
        residue_width: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let ns = cfg.scalars;
        Self {
            embed_ligand: Linear::new(store, "tfn.embed_ligand", ligand_width, ns, true, rng),
            embed_residue: Linear::new(store, "tfn.embed_residue", residue_width, ns, true, rng),
            embed_time: Linear::new(store, "tfn.embed_time", cfg.time_centers, ns, false, rng),
            embed_vectors: Linear::new(store, "tfn.embed_vectors", 3, cfg.vectors, false, rng),
            layers: (0..cfg.layers)
                .map(|k| RefinementLayer::new(store, &format!("tfn.layer{k}"), &cfg, rng))
                .collect(),
            cfg,
        }
    }

    pub fn run(&self, g: &mut Graph, store: &ParamStore, input: &StackInput<'_>) -> Result<StackOutput, DiffError> {
        let n = input.x_t.len();
        let l = input.ca.len();
        let lf = g.constant(input.ligand_features.clone());
        let rf = g.constant(input.residue_features.clone());
        let sl = self.embed_ligand.forward(g, store, lf)?;
        let s0 = if l > 0 {
            let sr = self.embed_residue.forward(g, store, rf)?;
            g.concat(&[sl, sr], 0)?
        } else {
            sl
        };
        let (tc, tw) = self.cfg.time_centers();
        let temb = g.constant(rbf_rows(&[input.t], &tc, tw));
        let temb = self.embed_time.forward(g, store, temb)?;
        let temb = g.reshape(temb, &[self.cfg.scalars])?;
        let s0 = g.add_row(s0, temb)?;

        let mut vin = vec![0.0; n * 3 * 3];
        vin.extend_from_slice(input.residue_vectors.data());
        let vin = g.constant(Tensor::matrix((n + l) * 3, 3, vin));
        let v0 = self.embed_vectors.forward(g, store, vin)?;

        let mut h = NodeState { s: s0, v: v0 };
        let mut x = g.constant(Tensor::matrix(n, 3, input.x_t.iter().flatten().copied().collect()));
        let mut positions = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let geo = if self.cfg.detach_positions { g.detach(x) } else { x };
            let edges = build_edges(g, &self.cfg, geo, input.ca, input.self_cond)?;
            x = layer.forward(g, store, &mut h, &edges, x)?;
            positions.push(x);
        }
        Ok(StackOutput {
            positions,
            scalars: h.s,
            vectors: h.v,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn irreps(g: &mut Graph, s: &[f64], v: &[f64], c: usize) -> Irreps {
        let e = s.len() / c;
        Irreps {
            s: g.constant(Tensor::matrix(e, c, s.to_vec())),
            v: g.constant(Tensor::matrix(e * 3, c, v.to_vec())),
        }
    }

    fn weights(g: &mut Graph, vals: [f64; 5]) -> PathWeights {
        let mut w = |x: f64| g.constant(Tensor::matrix(1, 1, vec![x]));
        PathWeights {
            ss: w(vals[0]),
            dot: w(vals[1]),
            sv: w(vals[2]),
            vs: w(vals[3]),
            cross: Some(w(vals[4])),
        }
    }

    #[test]
    fn scalar_times_vector() {
        let mut g = Graph::new();
        let a = irreps(&mut g, &[2.0], &[0.0, 0.0, 0.0], 1);
        let b = irreps(&mut g, &[0.0], &[1.0, 0.0, 0.0], 1);
        let w = weights(&mut g, [0.0, 0.0, 1.0, 0.0, 0.0]);
        let out = tp_l1(&mut g, a, b, &w).unwrap();
        assert_eq!(g.value(out.v).data(), &[2.0, 0.0, 0.0]);
    }

    #[test]
    fn basis_dot_and_cross() {
        let mut g = Graph::new();
        let a = irreps(&mut g, &[0.0], &[1.0, 0.0, 0.0], 1);
        let b = irreps(&mut g, &[0.0], &[0.0, 1.0, 0.0], 1);
        let w = weights(&mut g, [1.0, 1.0, 0.0, 0.0, 1.0]);
        let out = tp_l1(&mut g, a, b, &w).unwrap();
        assert_eq!(g.value(out.s).data(), &[0.0]);
        assert_eq!(g.value(out.v).data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn zero_weights_zero_output() {
        let mut g = Graph::new();
        let a = irreps(&mut g, &[1.5, -2.0], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2);
        let b = irreps(&mut g, &[0.5, 3.0], &[6.0, 5.0, 4.0, 3.0, 2.0, 1.0], 2);
        let z = g.constant(Tensor::zeros(&[1, 2]));
        let w = PathWeights { ss: z, dot: z, sv: z, vs: z, cross: Some(z) };
        let out = tp_l1(&mut g, a, b, &w).unwrap();
        assert!(g.value(out.s).data().iter().all(|&x| x == 0.0));
        assert!(g.value(out.v).data().iter().all(|&x| x == 0.0));
    }
}
