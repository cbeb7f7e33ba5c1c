use super::graph::{Graph, Var};
use super::tensor::Tensor;
use super::DiffError;

/// Outcome of a gradient check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdReport {
    pub max_rel_error: f64,
    /// Coordinate where the maximum was attained.
    pub worst_index: usize,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FdError {
    #[error("finite-difference step {0} outside [1e-7, 1e-3]")]
    Step(f64),
    #[error("non-finite derivative estimate at coordinate {index}")]
    NonFinite { index: usize },
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// Compares the reverse-mode gradient of the scalar function `f` at
/// `point` against central differences with step `h`.
///
/// The error per coordinate is `|analytic - numeric| / (|analytic| + 1e-8)`.
pub fn finite_difference_check<F>(f: F, point: &Tensor, h: f64) -> Result<FdReport, FdError>
where
    F: Fn(&mut Graph, Var) -> Result<Var, DiffError>,
{
    if !(1e-7..=1e-3).contains(&h) {
        return Err(FdError::Step(h));
    }
    let mut g = Graph::new();
    let x = g.variable(point.clone());
    let y = f(&mut g, x)?;
    g.backward(y)?;
    let analytic = g.grad(x);

    let eval = |p: Tensor| -> Result<f64, DiffError> {
        let mut g = Graph::new();
        let x = g.constant(p);
        let y = f(&mut g, x)?;
        Ok(g.value(y).item())
    };

    let mut report = FdReport {
        max_rel_error: 0.0,
        worst_index: 0,
    };
    for i in 0..point.len() {
        let mut plus = point.clone();
        plus.data_mut()[i] += h;
        let mut minus = point.clone();
        minus.data_mut()[i] -= h;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * h);
        let a = analytic.data()[i];
        if !numeric.is_finite() || !a.is_finite() {
            return Err(FdError::NonFinite { index: i });
        }
        let err = libm::fabs(a - numeric) / (libm::fabs(a) + 1e-8);
        if err > report.max_rel_error {
            report = FdReport {
                max_rel_error: err,
                worst_index: i,
            };
        }
    }
    Ok(report)
}
