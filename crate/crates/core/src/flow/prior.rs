use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::FlowError;
use crate::geom::Vec3;
use crate::linalg::symmetric_eigen;
use crate::mol::LigandGraph;
use crate::rng::{normal, seeded};

/// Eigenvalues below this count as zero modes; nonzero modes are clamped
/// to at least this value before inversion.
pub const ZERO_EIGENVALUE: f64 = 1e-8;

#[derive(Debug, Clone)]
struct Component {
    atoms: Vec<usize>,
    /// Nonzero modes as (eigenvalue, eigenvector over `atoms`).
    modes: Vec<(f64, Vec<f64>)>,
    zero_modes: usize,
}

/// Gaussian over coordinates whose precision is the bond-graph Laplacian,
/// decomposed once per ligand.
#[derive(Debug, Clone)]
pub struct HarmonicPrior {
    n: usize,
    laplacian: Vec<f64>,
    components: Vec<Component>,
}

impl HarmonicPrior {
    pub fn new(ligand: &LigandGraph) -> Result<Self, FlowError> {
        let n = ligand.len();
        let mut laplacian = vec![0.0; n * n];
        for (i, j) in ligand.bonds() {
            laplacian[i * n + j] -= 1.0;
            laplacian[j * n + i] -= 1.0;
            laplacian[i * n + i] += 1.0;
            laplacian[j * n + j] += 1.0;
        }
        let mut components = Vec::new();
        for c in 0..ligand.num_components() {
            let atoms: Vec<usize> = (0..n).filter(|&i| ligand.components()[i] == c).collect();
            let m = atoms.len();
            let mut block = vec![0.0; m * m];
            for (a, &i) in atoms.iter().enumerate() {
                for (b, &j) in atoms.iter().enumerate() {
                    block[a * m + b] = laplacian[i * n + j];
                }
            }
            let eig = symmetric_eigen(&block, m)?;
            let mut modes = Vec::new();
            let mut zero_modes = 0;
            for (lambda, v) in eig.values.into_iter().zip(eig.vectors) {
                if lambda < ZERO_EIGENVALUE {
                    zero_modes += 1;
                } else {
                    modes.push((lambda.max(ZERO_EIGENVALUE), v));
                }
            }
            components.push(Component {
                atoms,
                modes,
                zero_modes,
            });
        }
        Ok(Self {
            n,
            laplacian,
            components,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Row-major `L = D - A`.
    pub fn laplacian(&self) -> &[f64] {
        &self.laplacian
    }

    /// Eigenvalues of all components, zero modes included, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .components
            .iter()
            .flat_map(|c| {
                core::iter::repeat_n(0.0, c.zero_modes).chain(c.modes.iter().map(|m| m.0))
            })
            .collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    pub fn num_zero_modes(&self) -> usize {
        self.components.iter().map(|c| c.zero_modes).sum()
    }

    /// One draw; every component's centroid sits at `center`.
    pub fn sample<R: Rng + ?Sized>(&self, center: Vec3, rng: &mut R) -> Vec<Vec3> {
        let mut x = vec![center; self.n];
        for comp in &self.components {
            for (lambda, v) in &comp.modes {
                let sd = 1.0 / libm::sqrt(*lambda);
                let c = [
                    sd * normal(rng),
                    sd * normal(rng),
                    sd * normal(rng),
                ];
                for (&atom, &vk) in comp.atoms.iter().zip(v) {
                    for d in 0..3 {
                        x[atom][d] += c[d] * vk;
                    }
                }
            }
        }
        x
    }
}

pub fn harmonic_prior_sample(
    ligand: &LigandGraph,
    center: Vec3,
    seed: u64,
) -> Result<Vec<Vec3>, FlowError> {
    let prior = HarmonicPrior::new(ligand)?;
    Ok(prior.sample(center, &mut seeded(seed)))
}

/// Draw from `N(t x1 + (1 - t) x0, sigma^2 I)`.
pub fn interpolate<R: Rng + ?Sized>(
    x0: &[Vec3],
    x1: &[Vec3],
    t: f64,
    sigma: f64,
    rng: &mut R,
) -> Vec<Vec3> {
    x0.iter()
        .zip(x1)
        .map(|(a, b)| {
            let mut p = [0.0; 3];
            for d in 0..3 {
                p[d] = t * b[d] + (1.0 - t) * a[d];
                if sigma > 0.0 {
                    p[d] += sigma * normal(rng);
                }
            }
            p
        })
        .collect()
}
