use flowsite_core::diff::{finite_difference_check, Graph, Tensor, Var};
use flowsite_core::equivariant::EquivariantConfig;
use flowsite_core::flow::{mask_rows, sample_loss, FlowNetwork, NetInput, TrainConfig, TYPE_SLOTS};
use flowsite_core::geom::{add, mat_vec, rotation_from_quaternion, Mat3, Vec3};
use flowsite_core::invariant::InvariantConfig;
use flowsite_core::model::{FlowModel, ModelConfig, ModelKind};
use flowsite_core::mol::{ComplexSample, PocketBackbone};
use flowsite_core::rng::{normal, seeded};
use flowsite_core::toy::toy_complex;
use rand::Rng;

fn small_config(kind: ModelKind, seed: u64) -> ModelConfig {
    ModelConfig {
        kind,
        equivariant: EquivariantConfig {
            layers: 3,
            scalars: 12,
            vectors: 4,
            ..Default::default()
        },
        invariant: InvariantConfig {
            layers: 2,
            hidden: 16,
            ..Default::default()
        },
        seed,
    }
}

fn sample(seed: u64, atoms: usize, residues: usize) -> ComplexSample {
    toy_complex(seed, atoms, residues).sample("toy").unwrap()
}

fn random_orthogonal(rng: &mut impl Rng, reflect: bool) -> Mat3 {
    let q = [normal(rng), normal(rng), normal(rng), normal(rng)];
    let mut m = rotation_from_quaternion(q);
    if reflect {
        for row in &mut m {
            row[0] = -row[0];
        }
    }
    m
}

fn transform(m: &Mat3, u: Vec3, p: Vec3) -> Vec3 {
    add(mat_vec(m, p), u)
}

fn transform_pocket(m: &Mat3, u: Vec3, pocket: &PocketBackbone) -> PocketBackbone {
    let mut out = pocket.clone();
    for r in &mut out.residues {
        for p in [&mut r.n, &mut r.ca, &mut r.c, &mut r.o] {
            *p = transform(m, u, *p);
        }
        for a in &mut r.side_chain {
            a.pos = transform(m, u, a.pos);
        }
    }
    out.center = transform(m, u, out.center);
    out
}

fn jitter(points: &[Vec3], rng: &mut impl Rng, s: f64) -> Vec<Vec3> {
    points
        .iter()
        .map(|p| [p[0] + s * normal(rng), p[1] + s * normal(rng), p[2] + s * normal(rng)])
        .collect()
}

fn random_types(n: usize, rng: &mut impl Rng) -> Vec<[f64; TYPE_SLOTS]> {
    (0..n)
        .map(|_| {
            let mut row = [0.0; TYPE_SLOTS];
            let mut total = 0.0;
            for v in &mut row[..20] {
                *v = rng.random::<f64>();
                total += *v;
            }
            for v in &mut row[..20] {
                *v /= total;
            }
            row
        })
        .collect()
}

struct Forward {
    positions: Vec<Vec<Vec3>>,
    probs: Option<Tensor>,
}

fn forward(model: &FlowModel, s: &ComplexSample, pocket: &PocketBackbone, x: &[Vec3], sc: &[Vec3], types: &[[f64; TYPE_SLOTS]], t: f64) -> Forward {
    let mut g = Graph::new();
    let out = model
        .forward(&mut g, &s.ligand, pocket, &NetInput { x_t: x, self_cond: sc, self_cond_types: types, t })
        .unwrap();
    let positions = out
        .positions
        .iter()
        .map(|&p| {
            let v = g.value(p);
            (0..v.rows()).map(|r| [v.row(r)[0], v.row(r)[1], v.row(r)[2]]).collect()
        })
        .collect();
    let probs = out.residue_logits.map(|l| {
        let p = g.softmax(l, 1).unwrap();
        g.value(p).clone()
    });
    Forward { positions, probs }
}

fn rel_error(a: &[Vec3], b: &[Vec3]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(p, q)| (0..3).map(|d| (p[d] - q[d]).powi(2)).sum::<f64>()).sum();
    let den: f64 = b.iter().map(|q| q.iter().map(|v| v * v).sum::<f64>()).sum();
    (num / den).sqrt()
}

fn check_equivariance(kind: ModelKind, cross_path: bool, reflect: bool) {
    for seed in 0..20 {
        let mut cfg = small_config(kind, seed);
        cfg.equivariant.cross_path = cross_path;
        let model = FlowModel::new(cfg);
        let s = sample(seed, 7, 10);
        let mut rng = seeded(1000 + seed);
        let x = jitter(s.x1(), &mut rng, 1.0);
        let sc = jitter(s.x1(), &mut rng, 1.0);
        let types = if rng.random::<bool>() { mask_rows(s.pocket.len()) } else { random_types(s.pocket.len(), &mut rng) };
        let t = rng.random::<f64>();
        let m = random_orthogonal(&mut rng, reflect);
        let u = [normal(&mut rng) * 10.0, normal(&mut rng) * 10.0, normal(&mut rng) * 10.0];

        let base = forward(&model, &s, &s.pocket, &x, &sc, &types, t);
        let tx: Vec<Vec3> = x.iter().map(|p| transform(&m, u, *p)).collect();
        let tsc: Vec<Vec3> = sc.iter().map(|p| transform(&m, u, *p)).collect();
        let moved = forward(&model, &s, &transform_pocket(&m, u, &s.pocket), &tx, &tsc, &types, t);
        for (k, (a, b)) in base.positions.iter().zip(&moved.positions).enumerate() {
            let expected: Vec<Vec3> = a.iter().map(|p| transform(&m, u, *p)).collect();
            let e = rel_error(b, &expected);
            assert!(e < 1e-8, "seed {seed} layer {k}: {e}");
        }
        if let (Some(a), Some(b)) = (&base.probs, &moved.probs) {
            let e = a.max_abs_diff(b) / a.norm();
            assert!(e < 1e-8, "seed {seed} probabilities: {e}");
        }
    }
}

#[test]
fn stack_is_rotation_and_translation_equivariant() {
    check_equivariance(ModelKind::FlowSite, false, false);
}

#[test]
fn stack_is_reflection_equivariant() {
    check_equivariance(ModelKind::FlowSite, false, true);
}

#[test]
fn cross_path_stays_rotation_equivariant() {
    check_equivariance(ModelKind::HarmonicFlow, true, false);
}

#[test]
fn cross_path_breaks_reflection() {
    let mut cfg = small_config(ModelKind::HarmonicFlow, 3);
    cfg.equivariant.cross_path = true;
    let model = FlowModel::new(cfg);
    let s = sample(3, 7, 10);
    let mut rng = seeded(5);
    let x = jitter(s.x1(), &mut rng, 1.0);
    let types = mask_rows(s.pocket.len());
    let m = random_orthogonal(&mut rng, true);
    let base = forward(&model, &s, &s.pocket, &x, &x, &types, 0.4);
    let tx: Vec<Vec3> = x.iter().map(|p| mat_vec(&m, *p)).collect();
    let moved = forward(&model, &s, &transform_pocket(&m, [0.0; 3], &s.pocket), &tx, &tx, &types, 0.4);
    let expected: Vec<Vec3> = base.positions.last().unwrap().iter().map(|p| mat_vec(&m, *p)).collect();
    assert!(rel_error(moved.positions.last().unwrap(), &expected) > 1e-6);
}

#[test]
fn zero_parameters_leave_positions_unchanged() {
    let mut model = FlowModel::new(small_config(ModelKind::HarmonicFlow, 0));
    for p in model.params_mut().iter_mut() {
        p.value = p.value.map(|_| 0.0);
    }
    let s = sample(0, 6, 8);
    let mut rng = seeded(2);
    let x = jitter(s.x1(), &mut rng, 1.0);
    let out = forward(&model, &s, &s.pocket, &x, &x, &mask_rows(s.pocket.len()), 0.3);
    assert_eq!(out.positions.len(), 3);
    for p in &out.positions {
        assert_eq!(p, &x);
    }
}

#[test]
fn single_layer_gives_one_update() {
    let mut cfg = small_config(ModelKind::HarmonicFlow, 0);
    cfg.equivariant.layers = 1;
    let model = FlowModel::new(cfg);
    let s = sample(0, 6, 8);
    let out = forward(&model, &s, &s.pocket, s.x1(), s.x1(), &mask_rows(s.pocket.len()), 0.3);
    assert_eq!(out.positions.len(), 1);
    assert_ne!(out.positions[0], s.x1());
}

#[test]
fn detached_positions_pass_gradient_through_identity_only() {
    let model = FlowModel::new(small_config(ModelKind::FlowSite, 4));
    let s = sample(4, 6, 8);
    let mut g = Graph::new();
    let types = mask_rows(s.pocket.len());
    let out = model
        .forward(&mut g, &s.ligand, &s.pocket, &NetInput { x_t: s.x1(), self_cond: s.x1(), self_cond_types: &types, t: 0.5 })
        .unwrap();
    let last = out.prediction();
    let sq = g.mul(last, last).unwrap();
    let loss = g.sum_all(sq);
    g.backward(loss).unwrap();
    let k = out.positions.len();
    let final_grad = g.grad(last);
    assert!(final_grad.norm() > 0.0);
    for i in 0..k - 1 {
        assert_eq!(g.grad(out.positions[i]), final_grad, "layer {i}");
    }
}

#[test]
fn self_conditioning_pass_receives_no_gradient() {
    for kind in [ModelKind::HarmonicFlow, ModelKind::FlowSite] {
        let model = FlowModel::new(small_config(kind, 6));
        let s = sample(6, 6, 8);
        let cfg = TrainConfig { self_condition: 1.0, ..Default::default() };
        let mut g = Graph::new();
        let loss = sample_loss(&model, &mut g, &s, &cfg, &mut seeded(9)).unwrap();
        g.backward(loss.total).unwrap();
        let first = loss.first_pass.expect("self-conditioning pass ran");
        let mut vars: Vec<Var> = first.positions.clone();
        vars.extend(first.residue_logits);
        vars.extend(first.torsions);
        for v in vars {
            assert!(g.grad(v).data().iter().all(|&x| x == 0.0));
        }
        // The main pass does receive gradient.
        assert!(g.grad(loss.l_cfm).norm() > 0.0);
    }
}

#[test]
fn self_conditioning_skipped_at_zero_probability() {
    let model = FlowModel::new(small_config(ModelKind::HarmonicFlow, 6));
    let s = sample(6, 6, 8);
    let cfg = TrainConfig { self_condition: 0.0, ..Default::default() };
    let mut g = Graph::new();
    let loss = sample_loss(&model, &mut g, &s, &cfg, &mut seeded(9)).unwrap();
    assert!(loss.first_pass.is_none());
}

/// Full training loss as a function of one parameter tensor, with the
/// geometry left attached so every path is exercised. The self-conditioning
/// pass is off: its detached output depends on the parameters, which finite
/// differences would see and the gradient by design does not. For the joint
/// model only the attention stack is probed, since it reads detached
/// predicted positions.
fn stack_gradient_error(kind: ModelKind, seed: u64) -> f64 {
    let mut cfg = small_config(kind, seed);
    cfg.equivariant.detach_positions = false;
    let model = FlowModel::new(cfg);
    let s = sample(seed, 5, 7);
    let train = TrainConfig { self_condition: 0.0, ..Default::default() };
    let mut rng = seeded(seed);
    let prefix = if kind == ModelKind::FlowSite { "gat." } else { "" };
    let candidates: Vec<_> = model
        .params()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.value.len() <= 48 && p.name.starts_with(prefix))
        .map(|(i, _)| i)
        .collect();
    let mut worst: f64 = 0.0;
    for _ in 0..2 {
        let idx = candidates[rng.random_range(0..candidates.len())];
        let name = &model.params().iter().nth(idx).unwrap().name;
        let id = model.params().find(name).unwrap();
        let point = model.params().get(id).value.clone();
        let r = finite_difference_check(
            |g, x| {
                g.bind_param(id, x);
                let l = sample_loss(&model, g, &s, &train, &mut seeded(seed + 77)).map_err(|e| match e {
                    flowsite_core::flow::FlowError::Diff(d) => d,
                    other => panic!("{other}"),
                })?;
                Ok(l.total)
            },
            &point,
            1e-5,
        )
        .unwrap();
        worst = worst.max(r.max_rel_error);
    }
    worst
}

#[test]
fn full_stack_loss_matches_finite_differences() {
    for seed in 0..20 {
        let kind = if seed % 2 == 0 { ModelKind::HarmonicFlow } else { ModelKind::FlowSite };
        let e = stack_gradient_error(kind, seed);
        assert!(e < 1e-4, "seed {seed}: {e}");
    }
}

