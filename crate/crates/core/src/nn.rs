//! Parameterized building blocks shared by the networks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::diff::{DiffError, Graph, ParamId, ParamStore, Tensor, Var};
use crate::rng::{normal, SeededRng};

/// Weight `[fan_in, fan_out]` drawn from `N(0, gain^2 / fan_in)`.
pub fn init_weight(store: &mut ParamStore, name: String, fan_in: usize, fan_out: usize, gain: f64, rng: &mut SeededRng) -> ParamId {
    let sd = gain / libm::sqrt(fan_in.max(1) as f64);
    let data: Vec<f64> = (0..fan_in * fan_out).map(|_| sd * normal(rng)).collect();
    store.add(name, Tensor::matrix(fan_in, fan_out, data))
}

#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, bias: bool, rng: &mut SeededRng) -> Self {
        Self::with_gain(store, name, fan_in, fan_out, bias, 1.0, rng)
    }

    pub fn with_gain(
        store: &mut ParamStore,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        bias: bool,
        gain: f64,
        rng: &mut SeededRng,
    ) -> Self {
        let w = init_weight(store, format!("{name}.w"), fan_in, fan_out, gain, rng);
        let b = bias.then(|| store.add(format!("{name}.b"), Tensor::zeros(&[fan_out])));
        Self { w, b }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var, DiffError> {
        let w = g.param(store, self.w);
        let y = g.matmul(x, w)?;
        match self.b {
            Some(b) => {
                let b = g.param(store, b);
                g.add_row(y, b)
            }
            None => Ok(y),
        }
    }
}

/// Two linear layers with a SiLU in between.
#[derive(Debug, Clone, Copy)]
pub struct Mlp {
    pub first: Linear,
    pub second: Linear,
}

impl Mlp {
    pub fn new(store: &mut ParamStore, name: &str, dims: [usize; 3], rng: &mut SeededRng) -> Self {
        Self {
            first: Linear::new(store, &format!("{name}.0"), dims[0], dims[1], true, rng),
            second: Linear::new(store, &format!("{name}.1"), dims[1], dims[2], true, rng),
        }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var, DiffError> {
        let h = self.first.forward(g, store, x)?;
        let h = g.silu(h);
        self.second.forward(g, store, h)
    }
}

/// Evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Gaussian radial basis `exp(-(d - c)^2 / (2 w^2))` for each center.
pub fn rbf_embed(d: f64, centers: &[f64], width: f64) -> Vec<f64> {
    centers
        .iter()
        .map(|&c| {
            let z = (d - c) / width;
            libm::exp(-0.5 * z * z)
        })
        .collect()
}

/// Radial basis of an `[E]` or `[E, 1]` distance array as `[E, G]`.
pub fn rbf_var(g: &mut Graph, d: Var, centers: &[f64], width: f64) -> Result<Var, DiffError> {
    let e = g.value(d).len();
    let d = g.reshape(d, &[e, 1])?;
    let ones = g.constant(Tensor::full(&[1, centers.len()], 1.0));
    let tiled = g.matmul(d, ones)?;
    let neg_c = g.constant(Tensor::vector(&centers.iter().map(|c| -c).collect::<Vec<_>>()));
    let z = g.add_row(tiled, neg_c)?;
    let z2 = g.mul(z, z)?;
    let s = g.scale(z2, -0.5 / (width * width));
    Ok(g.exp(s))
}

/// Constant `[rows, G]` radial basis of known distances.
pub fn rbf_rows(distances: &[f64], centers: &[f64], width: f64) -> Tensor {
    let data = distances.iter().flat_map(|&d| rbf_embed(d, centers, width)).collect();
    Tensor::matrix(distances.len(), centers.len(), data)
}
