extern crate std;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn add_example() {
    let mut g = Graph::new();
    let a = g.constant(Tensor::vector(&[1.0, 2.0]));
    let b = g.constant(Tensor::vector(&[3.0, 4.0]));
    let c = g.add(a, b).unwrap();
    assert_eq!(g.value(c).data(), &[4.0, 6.0]);
}

#[test]
fn softmax_of_equal_logits_is_uniform() {
    let mut g = Graph::new();
    let a = g.constant(Tensor::vector(&[0.0, 0.0]));
    let s = g.softmax(a, 0).unwrap();
    assert_eq!(g.value(s).data(), &[0.5, 0.5]);
}

#[test]
fn cross_of_basis_vectors() {
    let mut g = Graph::new();
    let a = g.constant(Tensor::matrix(1, 3, vec![1.0, 0.0, 0.0]));
    let b = g.constant(Tensor::matrix(1, 3, vec![0.0, 1.0, 0.0]));
    let c = g.cross3(a, b).unwrap();
    assert_eq!(g.value(c).data(), &[0.0, 0.0, 1.0]);
    let d = g.dot3(a, b).unwrap();
    assert_eq!(g.value(d).data(), &[0.0]);
}

#[test]
fn shape_mismatch_names_both_shapes() {
    let mut g = Graph::new();
    let a = g.constant(Tensor::zeros(&[2, 3]));
    let b = g.constant(Tensor::zeros(&[3, 2]));
    let err = g.add(a, b).unwrap_err();
    let msg = std::format!("{err}");
    assert!(msg.contains("[2, 3]") && msg.contains("[3, 2]"), "{msg}");
    assert!(g.matmul(a, a).is_err());
}

#[test]
fn backward_of_sum_of_squares() {
    let mut g = Graph::new();
    let x = g.variable(Tensor::vector(&[1.0, 2.0, 3.0]));
    let sq = g.mul(x, x).unwrap();
    let y = g.sum_all(sq);
    g.backward(y).unwrap();
    assert_eq!(g.grad(x).data(), &[2.0, 4.0, 6.0]);
}

#[test]
fn backward_of_sin_at_zero() {
    let mut g = Graph::new();
    let x = g.variable(Tensor::scalar(0.0));
    let y = g.sin(x);
    g.backward(y).unwrap();
    assert_eq!(g.grad(x).item(), 1.0);
}

#[test]
fn detached_branch_gets_zero_gradient() {
    let mut g = Graph::new();
    let x = g.variable(Tensor::vector(&[1.0, -2.0]));
    let sq = g.mul(x, x).unwrap();
    let d = g.detach(sq);
    assert!(g.is_detached(d));
    let s = g.scale(d, 3.0);
    let y = g.sum_all(s);
    g.backward(y).unwrap();
    assert!(g.grad(x).data().iter().all(|&v| v == 0.0));
}

#[test]
fn detach_only_blocks_its_own_path() {
    let mut g = Graph::new();
    let x = g.variable(Tensor::vector(&[2.0]));
    let d = g.detach(x);
    let p = g.mul(x, d).unwrap();
    let y = g.sum_all(p);
    g.backward(y).unwrap();
    // d(x * stop(x))/dx = stop(x)
    assert_eq!(g.grad(x).data(), &[2.0]);
}

#[test]
fn non_scalar_root_rejected() {
    let mut g = Graph::new();
    let x = g.variable(Tensor::vector(&[1.0, 2.0]));
    assert!(matches!(g.backward(x), Err(DiffError::NonScalarRoot(_))));
}

#[test]
fn fd_step_out_of_range() {
    let r = finite_difference_check(|g, x| Ok(g.sum_all(x)), &Tensor::vector(&[1.0]), 1.0);
    assert_eq!(r, Err(FdError::Step(1.0)));
}

#[test]
fn fd_norm_squared() {
    let r = finite_difference_check(
        |g, x| {
            let sq = g.mul(x, x)?;
            Ok(g.sum_all(sq))
        },
        &Tensor::vector(&[1.0, 1.0]),
        1e-5,
    )
    .unwrap();
    assert!(r.max_rel_error < 1e-6, "{r:?}");
}

#[test]
fn fd_detached_input_reports_zero() {
    let r = finite_difference_check(
        |g, x| {
            let d = g.detach(x);
            let c = g.constant(Tensor::vector(&[0.0, 0.0]));
            let _ = d;
            Ok(g.sum_all(c))
        },
        &Tensor::vector(&[0.3, 0.7]),
        1e-5,
    )
    .unwrap();
    assert_eq!(r.max_rel_error, 0.0);
}

#[test]
fn fd_relu_away_from_kink() {
    let r = finite_difference_check(
        |g, x| {
            let y = g.relu(x);
            Ok(g.sum_all(y))
        },
        &Tensor::vector(&[1.0]),
        1e-5,
    )
    .unwrap();
    assert!(r.max_rel_error < 1e-6, "{r:?}");
}

#[test]
fn fd_reports_nan_coordinate() {
    let r = finite_difference_check(
        |g, x| {
            let s = g.sqrt(x);
            Ok(g.sum_all(s))
        },
        // sqrt(0 - h) is NaN; only the second coordinate sees it
        &Tensor::vector(&[1.0, 0.0]),
        1e-5,
    );
    assert_eq!(r, Err(FdError::NonFinite { index: 1 }));
}

#[test]
fn segment_softmax_rows_sum_to_one() {
    let mut g = Graph::new();
    let x = g.constant(Tensor::vector(&[libm::log(3.0), 0.0, 5.0, 1.0, -2.0]));
    let seg: Arc<[usize]> = Arc::from(vec![0, 0, 1, 2, 2]);
    let s = g.segment_softmax(x, seg).unwrap();
    let v = g.value(s).data();
    assert!(close(&v[..2], &[0.75, 0.25], 1e-12));
    assert_eq!(v[2], 1.0);
    assert!((v[3] + v[4] - 1.0).abs() < 1e-12);
}

#[test]
fn gather_and_scatter_are_adjoint() {
    let mut g = Graph::new();
    let x = g.constant(Tensor::matrix(3, 2, vec![1., 2., 3., 4., 5., 6.]));
    let idx: Arc<[usize]> = Arc::from(vec![2, 0, 2]);
    let gx = g.gather_rows(x, idx.clone()).unwrap();
    assert_eq!(g.value(gx).data(), &[5., 6., 1., 2., 5., 6.]);
    let sx = g.scatter_add_rows(gx, idx, 3).unwrap();
    assert_eq!(g.value(sx).data(), &[1., 2., 0., 0., 10., 12.]);
}

#[test]
fn concat_and_slice() {
    let mut g = Graph::new();
    let a = g.constant(Tensor::matrix(2, 1, vec![1., 2.]));
    let b = g.constant(Tensor::matrix(2, 2, vec![3., 4., 5., 6.]));
    let c = g.concat(&[a, b], 1).unwrap();
    assert_eq!(g.value(c).data(), &[1., 3., 4., 2., 5., 6.]);
    let s = g.slice(c, 1, 1, 3).unwrap();
    assert_eq!(g.value(s), g.value(b));
}

// Random-point gradient checks, one per op, 100 points each.

type OpFn = fn(&mut Graph, Var) -> Result<Var, DiffError>;

fn project(g: &mut Graph, y: Var, seed: u64) -> Result<Var, DiffError> {
    // Contract a non-scalar output with fixed weights so every output
    // coordinate influences the checked scalar.
    let shape = g.value(y).shape().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w = g.constant(Tensor::new(&shape, w));
    let p = g.mul(y, w)?;
    Ok(g.sum_all(p))
}

fn check_op(name: &str, shape: &[usize], op: OpFn, positive: bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1FF);
    for trial in 0..100 {
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = rng.random_range(-2.0..2.0);
                if positive {
                    v.abs() + 0.5
                } else if v.abs() < 0.05 {
                    v + 0.2
                } else {
                    v
                }
            })
            .collect();
        let point = Tensor::new(shape, data);
        let r = finite_difference_check(
            |g, x| {
                let y = op(g, x)?;
                project(g, y, 7)
            },
            &point,
            1e-5,
        )
        .unwrap();
        assert!(
            r.max_rel_error < 1e-4,
            "{name} trial {trial}: {r:?} at {point:?}"
        );
    }
}

fn other(g: &mut Graph, shape: &[usize], seed: u64) -> Var {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    g.constant(Tensor::new(shape, w))
}

#[test]
fn fd_elementwise_ops() {
    check_op("add", &[2, 3], |g, x| { let o = other(g, &[2, 3], 1); g.add(x, o) }, false);
    check_op("sub", &[2, 3], |g, x| { let o = other(g, &[2, 3], 1); g.sub(o, x) }, false);
    check_op("mul", &[2, 3], |g, x| g.mul(x, x), false);
    check_op("scale", &[4], |g, x| Ok(g.scale(x, -2.5)), false);
    check_op("add_scalar", &[4], |g, x| Ok(g.add_scalar(x, 3.0)), false);
    check_op("silu", &[5], |g, x| Ok(g.silu(x)), false);
    check_op("relu", &[5], |g, x| Ok(g.relu(x)), false);
    check_op("exp", &[5], |g, x| Ok(g.exp(x)), false);
    check_op("sin", &[5], |g, x| Ok(g.sin(x)), false);
    check_op("cos", &[5], |g, x| Ok(g.cos(x)), false);
    check_op("sqrt", &[5], |g, x| Ok(g.sqrt(x)), true);
    check_op("recip", &[5], |g, x| Ok(g.recip(x)), true);
}

#[test]
fn fd_broadcast_ops() {
    check_op("add_row.x", &[3, 2], |g, x| { let b = other(g, &[2], 2); g.add_row(x, b) }, false);
    check_op("add_row.b", &[2], |g, b| { let x = other(g, &[3, 2], 2); g.add_row(x, b) }, false);
    check_op("mul_row.x", &[3, 2], |g, x| { let w = other(g, &[2], 3); g.mul_row(x, w) }, false);
    check_op("mul_row.w", &[2], |g, w| { let x = other(g, &[3, 2], 3); g.mul_row(x, w) }, false);
    check_op("mul_col.x", &[3, 2], |g, x| { let c = other(g, &[3, 1], 4); g.mul_col(x, c) }, false);
    check_op("mul_col.c", &[3], |g, c| { let x = other(g, &[3, 2], 4); g.mul_col(x, c) }, false);
}

#[test]
fn fd_structural_ops() {
    check_op("matmul.a", &[2, 3], |g, a| { let b = other(g, &[3, 4], 5); g.matmul(a, b) }, false);
    check_op("matmul.b", &[3, 4], |g, b| { let a = other(g, &[2, 3], 5); g.matmul(a, b) }, false);
    check_op("concat0", &[2, 3], |g, x| { let o = other(g, &[1, 3], 6); g.concat(&[o, x, x], 0) }, false);
    check_op("concat1", &[2, 3], |g, x| { let o = other(g, &[2, 2], 6); g.concat(&[x, o, x], 1) }, false);
    check_op("slice", &[2, 3, 2], |g, x| g.slice(x, 1, 1, 3), false);
    check_op("sum_axis", &[2, 3, 2], |g, x| g.sum_axis(x, 1), false);
    check_op("mean_axis", &[2, 3], |g, x| g.mean_axis(x, 0), false);
    check_op("reshape", &[2, 3], |g, x| g.reshape(x, &[3, 2]), false);
    check_op("gather", &[3, 2], |g, x| g.gather_rows(x, Arc::from(vec![2, 0, 2, 1])), false);
    check_op("scatter", &[4, 2], |g, x| g.scatter_add_rows(x, Arc::from(vec![1, 0, 1, 2]), 3), false);
}

#[test]
fn fd_normalizing_ops() {
    check_op("softmax", &[3, 4], |g, x| g.softmax(x, 1), false);
    check_op("softmax0", &[3, 4], |g, x| g.softmax(x, 0), false);
    check_op("log_softmax", &[3, 4], |g, x| g.log_softmax(x, 1), false);
    check_op("segment_softmax", &[5], |g, x| g.segment_softmax(x, Arc::from(vec![0, 1, 0, 1, 1])), false);
    check_op("layer_norm", &[3, 4], |g, x| g.layer_norm(x), false);
    check_op("batch_norm", &[4, 3], |g, x| g.normalize(x, 0), false);
    check_op("norm_last", &[4, 3], |g, x| g.norm_last(x), false);
}

#[test]
fn fd_vector_ops() {
    check_op("cross3.a", &[2, 3], |g, a| { let b = other(g, &[2, 3], 8); g.cross3(a, b) }, false);
    check_op("cross3.b", &[2, 3], |g, b| { let a = other(g, &[2, 3], 8); g.cross3(a, b) }, false);
    check_op("dot3", &[2, 3], |g, a| { let b = other(g, &[2, 3], 9); g.dot3(a, b) }, false);
}

#[test]
fn param_gradients_flow_back_to_store() {
    let mut store = ParamStore::new();
    let w = store.add("w", Tensor::vector(&[2.0, -1.0]));
    let mut g = Graph::new();
    let wv = g.param(&store, w);
    assert_eq!(g.param(&store, w), wv);
    let sq = g.mul(wv, wv).unwrap();
    let y = g.sum_all(sq);
    g.backward(y).unwrap();
    g.accumulate_param_grads(&mut store);
    assert_eq!(store.get(w).grad.data(), &[4.0, -2.0]);
}
