//! Acceptance suite, run without the libtest harness so every criterion
//! prints its `criterion N: PASS|FAIL` line. Exits nonzero if any fails.
//!
//! Arguments: plain words select criteria whose name contains them;
//! `--skip WORD` drops them. The two overfit criteria train full-size
//! models and take tens of minutes each on one core.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use flowsite::commands;
use flowsite::config::{Mode, RunConfig};
use flowsite_core::diff::{finite_difference_check, DiffError, Graph, ParamStore, Tensor, Var};
use flowsite_core::flow::{
    euler_integrate, mask_rows, sample_loss, FlowError, FlowNetwork, HarmonicPrior, NetInput, NetOutput,
    TrainConfig,
};
use flowsite_core::geom::{add, dist, mat_vec, rotation_from_quaternion, Mat3, Vec3};
use flowsite_core::metrics::{best_of_k, blosum_score, rmsd, EvalRecord};
use flowsite_core::model::{FlowModel, ModelConfig, ModelKind};
use flowsite_core::mol::{
    extract_pocket, ComplexSample, LigandAtom, LigandGraph, PocketBackbone, PocketMode, PocketNoise, Protein,
    Residue, ResidueType,
};
use flowsite_core::rng::{normal, seeded};
use flowsite_core::toy::toy_complex;
use nalgebra::DMatrix;
use rand::Rng;
use tempfile::TempDir;

fn report(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

// Autodiff soundness.

type OpFn = fn(&mut Graph, Var) -> Result<Var, DiffError>;

fn fixed(g: &mut Graph, shape: &[usize], seed: u64) -> Var {
    let mut rng = seeded(seed);
    let n = shape.iter().product();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    g.constant(Tensor::new(shape, w))
}

/// Worst relative error of one op over 100 random points, with non-scalar
/// outputs contracted against fixed weights.
fn op_error(shape: &[usize], op: OpFn, positive: bool) -> f64 {
    let mut rng = seeded(0xACCE);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
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
        let r = finite_difference_check(
            |g, x| {
                let y = op(g, x)?;
                let shape = g.value(y).shape().to_vec();
                let w = fixed(g, &shape, 7);
                let p = g.mul(y, w)?;
                Ok(g.sum_all(p))
            },
            &Tensor::new(shape, data),
            1e-5,
        )
        .unwrap();
        worst = worst.max(r.max_rel_error);
    }
    worst
}

fn ops() -> Vec<(&'static str, Vec<usize>, OpFn, bool)> {
    vec![
        ("add", vec![2, 3], |g, x| { let o = fixed(g, &[2, 3], 1); g.add(x, o) }, false),
        ("sub", vec![2, 3], |g, x| { let o = fixed(g, &[2, 3], 1); g.sub(o, x) }, false),
        ("mul", vec![2, 3], |g, x| g.mul(x, x), false),
        ("scale", vec![4], |g, x| Ok(g.scale(x, -2.5)), false),
        ("add_scalar", vec![4], |g, x| Ok(g.add_scalar(x, 3.0)), false),
        ("silu", vec![5], |g, x| Ok(g.silu(x)), false),
        ("relu", vec![5], |g, x| Ok(g.relu(x)), false),
        ("exp", vec![5], |g, x| Ok(g.exp(x)), false),
        ("sin", vec![5], |g, x| Ok(g.sin(x)), false),
        ("cos", vec![5], |g, x| Ok(g.cos(x)), false),
        ("sqrt", vec![5], |g, x| Ok(g.sqrt(x)), true),
        ("recip", vec![5], |g, x| Ok(g.recip(x)), true),
        ("add_row", vec![3, 2], |g, x| { let b = fixed(g, &[2], 2); g.add_row(x, b) }, false),
        ("add_row.bias", vec![2], |g, b| { let x = fixed(g, &[3, 2], 2); g.add_row(x, b) }, false),
        ("mul_row", vec![3, 2], |g, x| { let w = fixed(g, &[2], 3); g.mul_row(x, w) }, false),
        ("mul_row.weight", vec![2], |g, w| { let x = fixed(g, &[3, 2], 3); g.mul_row(x, w) }, false),
        ("mul_col", vec![3, 2], |g, x| { let c = fixed(g, &[3, 1], 4); g.mul_col(x, c) }, false),
        ("mul_col.column", vec![3], |g, c| { let x = fixed(g, &[3, 2], 4); g.mul_col(x, c) }, false),
        ("matmul.left", vec![2, 3], |g, a| { let b = fixed(g, &[3, 4], 5); g.matmul(a, b) }, false),
        ("matmul.right", vec![3, 4], |g, b| { let a = fixed(g, &[2, 3], 5); g.matmul(a, b) }, false),
        ("concat", vec![2, 3], |g, x| { let o = fixed(g, &[2, 2], 6); g.concat(&[x, o, x], 1) }, false),
        ("slice", vec![2, 3, 2], |g, x| g.slice(x, 1, 1, 3), false),
        ("sum_axis", vec![2, 3, 2], |g, x| g.sum_axis(x, 1), false),
        ("mean_axis", vec![2, 3], |g, x| g.mean_axis(x, 0), false),
        ("mean_all", vec![2, 3], |g, x| Ok(g.mean_all(x)), false),
        ("reshape", vec![2, 3], |g, x| g.reshape(x, &[3, 2]), false),
        ("gather_rows", vec![3, 2], |g, x| g.gather_rows(x, Arc::from(vec![2, 0, 2, 1])), false),
        ("scatter_add_rows", vec![4, 2], |g, x| g.scatter_add_rows(x, Arc::from(vec![1, 0, 1, 2]), 3), false),
        ("softmax", vec![3, 4], |g, x| g.softmax(x, 1), false),
        ("log_softmax", vec![3, 4], |g, x| g.log_softmax(x, 1), false),
        ("segment_softmax", vec![5], |g, x| g.segment_softmax(x, Arc::from(vec![0, 1, 0, 1, 1])), false),
        ("layer_norm", vec![3, 4], |g, x| g.layer_norm(x), false),
        ("normalize", vec![4, 3], |g, x| g.normalize(x, 0), false),
        ("norm_last", vec![4, 3], |g, x| g.norm_last(x), false),
        ("cross3", vec![2, 3], |g, a| { let b = fixed(g, &[2, 3], 8); g.cross3(a, b) }, false),
        ("dot3", vec![2, 3], |g, a| { let b = fixed(g, &[2, 3], 9); g.dot3(a, b) }, false),
    ]
}

/// Full-size structure model, positions left attached, self-conditioning
/// off (its detached output moves under finite differences but by design
/// carries no gradient). Two random parameter tensors per seed.
fn stack_error(seed: u64) -> f64 {
    let mut cfg = ModelConfig { kind: ModelKind::HarmonicFlow, seed, ..Default::default() };
    cfg.equivariant.detach_positions = false;
    let model = FlowModel::new(cfg);
    let s = toy_complex(seed, 5, 7).sample("toy").unwrap();
    let train = TrainConfig { self_condition: 0.0, ..Default::default() };
    let names: Vec<String> = model.params().iter().filter(|p| p.value.len() <= 48).map(|p| p.name.clone()).collect();
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..2 {
        let id = model.params().find(&names[rng.random_range(0..names.len())]).unwrap();
        let point = model.params().get(id).value.clone();
        let r = finite_difference_check(
            |g, x| {
                g.bind_param(id, x);
                let l = sample_loss(&model, g, &s, &train, &mut seeded(seed + 77)).map_err(|e| match e {
                    FlowError::Diff(d) => d,
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

fn criterion_01_autodiff() -> bool {
    let mut worst_op = ("", 0.0f64);
    for (name, shape, op, positive) in ops() {
        let e = op_error(&shape, op, positive);
        if e > worst_op.1 {
            worst_op = (name, e);
        }
    }
    let stack = (0..20).map(stack_error).fold(0.0f64, f64::max);
    let pass = worst_op.1 < 1e-4 && stack < 1e-4;
    report(1, pass, &format!("worst op {} {:.2e}, stack {:.2e} over 20 seeds", worst_op.0, worst_op.1, stack));
    pass
}

// Harmonic prior.

fn chain(n: usize) -> LigandGraph {
    let atoms = (0..n).map(|i| LigandAtom::new(6, format!("C{i}"))).collect();
    let bonds: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    LigandGraph::new(atoms, &bonds, None).unwrap()
}

fn criterion_02_prior() -> bool {
    let mut worst: f64 = 0.0;
    let mut pair = 0.0;
    for n in 2..=5 {
        // Path-graph Laplacian built from the bond list, independently of
        // the library.
        let mut lap = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            lap[(i - 1, i - 1)] += 1.0;
            lap[(i, i)] += 1.0;
            lap[(i - 1, i)] -= 1.0;
            lap[(i, i - 1)] -= 1.0;
        }
        let pinv = lap.pseudo_inverse(1e-10).unwrap();
        let prior = HarmonicPrior::new(&chain(n)).unwrap();
        let samples = 10_000;
        let mut rng = seeded(100 + n as u64);
        let mut acc = vec![0.0; n * n];
        for _ in 0..samples {
            let x = prior.sample([2.0, -1.0, 0.5], &mut rng);
            for i in 0..n {
                for j in 0..n {
                    acc[i * n + j] += (0..3).map(|k| (x[i][k] - x[j][k]).powi(2)).sum::<f64>();
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let expected = 3.0 * (pinv[(i, i)] + pinv[(j, j)] - 2.0 * pinv[(i, j)]);
                let got = acc[i * n + j] / samples as f64;
                worst = worst.max((got / expected - 1.0).abs());
                if n == 2 {
                    pair = got;
                }
            }
        }
    }
    let pass = worst < 0.05 && (pair / 3.0 - 1.0).abs() < 0.05;
    report(2, pass, &format!("worst relative deviation {:.3}, pair E|d|^2 = {pair:.3} (expect 3.0)", worst));
    pass
}

// Equivariance.

fn random_orthogonal(rng: &mut impl Rng, reflect: bool) -> Mat3 {
    let mut m = rotation_from_quaternion([normal(rng), normal(rng), normal(rng), normal(rng)]);
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

fn jitter(points: &[Vec3], rng: &mut impl Rng) -> Vec<Vec3> {
    points.iter().map(|p| [p[0] + normal(rng), p[1] + normal(rng), p[2] + normal(rng)]).collect()
}

fn rows(t: &Tensor) -> Vec<Vec3> {
    (0..t.rows()).map(|r| [t.row(r)[0], t.row(r)[1], t.row(r)[2]]).collect()
}

fn run(model: &FlowModel, s: &ComplexSample, pocket: &PocketBackbone, input: &NetInput<'_>) -> (Vec<Vec<Vec3>>, Option<Tensor>) {
    let mut g = Graph::new();
    let out = model.forward(&mut g, &s.ligand, pocket, input).unwrap();
    let pos = out.positions.iter().map(|&p| rows(g.value(p))).collect();
    let probs = out.residue_logits.map(|l| {
        let p = g.softmax(l, 1).unwrap();
        g.value(p).clone()
    });
    (pos, probs)
}

fn rel_error(a: &[Vec3], b: &[Vec3]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(p, q)| (0..3).map(|d| (p[d] - q[d]).powi(2)).sum::<f64>()).sum();
    let den: f64 = b.iter().map(|q| q.iter().map(|v| v * v).sum::<f64>()).sum();
    (num / den).sqrt()
}

fn criterion_03_equivariance() -> bool {
    let (mut pos_err, mut prob_err) = (0.0f64, 0.0f64);
    for seed in 0..20 {
        let kind = if seed % 2 == 0 { ModelKind::FlowSite } else { ModelKind::HarmonicFlow };
        let model = FlowModel::new(ModelConfig { kind, seed, ..Default::default() });
        let s = toy_complex(seed, 8, 12).sample("toy").unwrap();
        let mut rng = seeded(500 + seed);
        let x = jitter(s.x1(), &mut rng);
        let sc = jitter(s.x1(), &mut rng);
        let types = mask_rows(s.pocket.len());
        let t = rng.random::<f64>();
        for reflect in [false, true] {
            let m = random_orthogonal(&mut rng, reflect);
            let u = [10.0 * normal(&mut rng), 10.0 * normal(&mut rng), 10.0 * normal(&mut rng)];
            let base = run(&model, &s, &s.pocket, &NetInput { x_t: &x, self_cond: &sc, self_cond_types: &types, t });
            let tx: Vec<Vec3> = x.iter().map(|p| transform(&m, u, *p)).collect();
            let tsc: Vec<Vec3> = sc.iter().map(|p| transform(&m, u, *p)).collect();
            let moved = run(
                &model,
                &s,
                &transform_pocket(&m, u, &s.pocket),
                &NetInput { x_t: &tx, self_cond: &tsc, self_cond_types: &types, t },
            );
            for (a, b) in base.0.iter().zip(&moved.0) {
                let expect: Vec<Vec3> = a.iter().map(|p| transform(&m, u, *p)).collect();
                pos_err = pos_err.max(rel_error(b, &expect));
            }
            if let (Some(a), Some(b)) = (base.1, moved.1) {
                prob_err = prob_err.max(a.max_abs_diff(&b) / a.norm());
            }
        }
    }
    let pass = pos_err < 1e-8 && prob_err < 1e-8;
    report(3, pass, &format!("positions {pos_err:.2e}, probabilities {prob_err:.2e} over 20 seeds"));
    pass
}

// Integrator.

/// Predicts the true pose regardless of input.
struct Oracle {
    x1: Vec<Vec3>,
    store: ParamStore,
}

impl FlowNetwork for Oracle {
    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn forward(&self, g: &mut Graph, _: &LigandGraph, _: &PocketBackbone, _: &NetInput<'_>) -> Result<NetOutput, DiffError> {
        let t = Tensor::matrix(self.x1.len(), 3, self.x1.iter().flatten().copied().collect());
        Ok(NetOutput { positions: vec![g.constant(t)], residue_logits: None, torsions: None })
    }
}

fn criterion_04_integrator() -> bool {
    let s = toy_complex(4, 10, 12).sample("toy").unwrap();
    let oracle = Oracle { x1: s.x1().to_vec(), store: ParamStore::new() };
    let mut worst: f64 = 0.0;
    for steps in [1, 5, 20] {
        let tr = euler_integrate(&oracle, &s.ligand, &s.pocket, steps, 11).unwrap();
        for (a, b) in tr.final_positions().iter().zip(s.x1()) {
            worst = worst.max(dist(*a, *b));
        }
    }
    let pass = worst < 1e-6;
    report(4, pass, &format!("max deviation {worst:.2e} Å for T in {{1, 5, 20}}"));
    pass
}

// Self-conditioning detach.

fn criterion_05_detach() -> bool {
    let mut leaked = 0usize;
    let mut main_grad = f64::INFINITY;
    for kind in [ModelKind::HarmonicFlow, ModelKind::FlowSite] {
        let model = FlowModel::new(ModelConfig { kind, seed: 5, ..Default::default() });
        let s = toy_complex(5, 8, 10).sample("toy").unwrap();
        let cfg = TrainConfig { self_condition: 1.0, ..Default::default() };
        let mut g = Graph::new();
        let loss = sample_loss(&model, &mut g, &s, &cfg, &mut seeded(3)).unwrap();
        g.backward(loss.total).unwrap();
        let first = loss.first_pass.expect("first pass ran");
        let mut vars = first.positions.clone();
        vars.extend(first.residue_logits);
        vars.extend(first.torsions);
        for v in vars {
            leaked += g.grad(v).data().iter().filter(|&&x| x != 0.0).count();
        }
        main_grad = main_grad.min(g.grad(loss.l_cfm).norm());
    }
    let pass = leaked == 0 && main_grad > 0.0;
    report(5, pass, &format!("{leaked} nonzero gradient entries in the first pass"));
    pass
}

// Overfitting runs.

const TOY_ATOMS: usize = 12;
const TOY_RESIDUES: usize = 16;

fn toy_set(dir: &Path) -> PathBuf {
    commands::toy(&dir.join("data"), 3, TOY_ATOMS, TOY_RESIDUES, 0).unwrap()
}

/// One Adam step per epoch: every complex appears `repeats` times in a
/// single batch.
fn overfit_config(dir: &Path, manifest: PathBuf, mode: Mode) -> RunConfig {
    let structure = mode == Mode::Harmonicflow;
    let repeats = if structure { 4 } else { 1 };
    RunConfig {
        mode,
        sigma: 0.5,
        steps: 20,
        layers: 6,
        scalars: 32,
        vectors: 8,
        lr: 3e-3,
        lr_min: 0.1,
        repeats,
        batch_size: 3 * repeats,
        epochs: 2000,
        pocket_noise: false,
        val_every: 2000,
        manifest: Some(manifest),
        out: dir.join("run"),
        ..Default::default()
    }
}

fn train_and_sample(cfg: &mut RunConfig, dir: &Path) -> (Vec<EvalRecord>, PathBuf) {
    let t0 = std::time::Instant::now();
    let s = commands::train(cfg).unwrap();
    println!("trained {} epochs in {:.0} s", s.epochs, t0.elapsed().as_secs_f64());
    cfg.checkpoint = Some(s.last_path.clone());
    let preds = dir.join("samples");
    cfg.out = preds.clone();
    for id in ["toy0", "toy1", "toy2"] {
        commands::sample(cfg, id, 10).unwrap();
    }
    cfg.out = dir.join("eval");
    let e = commands::eval(cfg, &preds).unwrap();
    assert_eq!((e.missing, e.failed), (0, 0));
    (e.rows.into_iter().map(|r| r.record).collect(), s.last_path)
}

fn criterion_06_structure_overfit() -> bool {
    let tmp = TempDir::new().unwrap();
    let manifest = toy_set(tmp.path());
    let mut cfg = overfit_config(tmp.path(), manifest, Mode::Harmonicflow);
    let (records, _) = train_and_sample(&mut cfg, tmp.path());
    let hits: Vec<usize> = records.iter().map(|r| r.rmsds.iter().filter(|&&x| x < 1.0).count()).collect();
    for r in &records {
        let v: Vec<String> = r.rmsds.iter().map(|x| format!("{x:.2}")).collect();
        println!("{}: {}", r.id, v.join(" "));
    }
    let pass = hits.iter().all(|&h| h >= 8);
    report(6, pass, &format!("samples under 1 Å per complex (of 10): {hits:?}, need >= 8 each"));
    pass
}

fn criterion_07_design_overfit() -> bool {
    let tmp = TempDir::new().unwrap();
    let manifest = toy_set(tmp.path());
    let mut cfg = overfit_config(tmp.path(), manifest, Mode::Flowsite);
    let (records, _) = train_and_sample(&mut cfg, tmp.path());
    let recovery: Vec<f64> = records.iter().map(|r| r.recovery.unwrap()).collect();
    let blosum: Vec<f64> = records.iter().map(|r| r.blosum.unwrap()).collect();

    // Soft check: entropy over the last half of the steps never rises.
    let mut calm = 0;
    cfg.out = tmp.path().join("trace");
    for id in ["toy0", "toy1", "toy2"] {
        let tr = commands::trace(&cfg, id).unwrap();
        let half = &tr[tr.len() / 2..];
        let e: Vec<String> = half.iter().map(|p| format!("{:.3e}", p.entropy)).collect();
        println!("{id} entropy, last half: {}", e.join(" "));
        if half.windows(2).all(|w| w[1].entropy <= w[0].entropy + 1e-12) {
            calm += 1;
        }
    }
    println!("entropy nonincreasing over the last half on {calm} of 3 complexes (reported, not gated)");

    let pass = recovery.iter().all(|&r| r == 1.0) && blosum.iter().all(|&b| b == 1.0);
    report(7, pass, &format!("recovery {recovery:?}, blosum {blosum:?} (mean of 10 samples per complex)"));
    pass
}

// Metric oracles.

fn criterion_08_metrics() -> bool {
    use ResidueType::*;
    let a = blosum_score(&[Ala], &[Arg], &[true]).unwrap();
    let b = blosum_score(&[Ala, Ala], &[Ala, Arg], &[true, true]).unwrap();
    let pts: Vec<Vec3> = (0..6).map(|i| [i as f64, -(i as f64), 0.5 * i as f64]).collect();
    let shifted: Vec<Vec3> = pts.iter().map(|p| [p[0] + 3.0, p[1] + 4.0, p[2]]).collect();
    let r = rmsd(&shifted, &pts).unwrap();

    let mut rng = seeded(8);
    let mut monotone = true;
    for trial in 0..200 {
        let records: Vec<EvalRecord> = (0..rng.random_range(1..6))
            .map(|i| EvalRecord {
                id: format!("c{trial}_{i}"),
                rmsds: (0..rng.random_range(1..12)).map(|_| rng.random_range(0.0..10.0)).collect(),
                recovery: None,
                blosum: None,
            })
            .collect();
        for k in 1..12 {
            let (lo, hi) = (best_of_k(&records, k), best_of_k(&records, k + 1));
            monotone &= lo.iter().zip(&hi).all(|(a, b)| b <= a);
        }
    }
    let pass = a == -0.25 && b == 0.375 && (r - 5.0).abs() < 1e-12 && monotone;
    report(8, pass, &format!("blosum {a}, {b}; rmsd {r}; best-of-k monotone {monotone}"));
    pass
}

// Pocket rules.

fn near(rng: &mut impl Rng, p: Vec3) -> Vec3 {
    p.map(|v| v + rng.random_range(-1.5..1.5))
}

fn random_residue(rng: &mut impl Rng, ca: Vec3, seq: i32) -> Residue {
    Residue {
        kind: ResidueType::from_index(rng.random_range(0..20)).unwrap(),
        chain: 'A',
        seq,
        icode: ' ',
        n: near(rng, ca),
        ca,
        c: near(rng, ca),
        o: near(rng, ca),
        side_chain: Vec::new(),
    }
}

struct Expected {
    distance: Vec<usize>,
    radius: Vec<usize>,
    center: Vec3,
}

fn brute_pocket(cas: &[Vec3], ligand: &[Vec3]) -> Expected {
    let d: Vec<f64> = cas.iter().map(|&c| ligand.iter().map(|&l| dist(c, l)).fold(f64::INFINITY, f64::min)).collect();
    let near: Vec<usize> = (0..cas.len()).filter(|&i| d[i] < 8.0).collect();
    let center = if near.is_empty() {
        let mut best = 0;
        for i in 0..cas.len() {
            if d[i] < d[best] {
                best = i;
            }
        }
        cas[best]
    } else {
        let mut c = [0.0; 3];
        for &i in &near {
            for k in 0..3 {
                c[k] += cas[i][k];
            }
        }
        c.map(|v| v / near.len() as f64)
    };
    let mut diameter: f64 = 0.0;
    for a in ligand {
        for b in ligand {
            diameter = diameter.max(dist(*a, *b));
        }
    }
    let radius = 7.0 + (diameter / 2.0).min(5.0);
    Expected {
        distance: (0..cas.len()).filter(|&i| d[i] < 14.0).collect(),
        radius: (0..cas.len()).filter(|&i| dist(cas[i], center) < radius).collect(),
        center,
    }
}

fn criterion_09_pockets() -> bool {
    let mut rng = seeded(9);
    let mut mismatches = 0;
    let (mut fallback, mut capped) = (0, 0);
    for c in 0..50 {
        let spread = rng.random_range(4.0..25.0);
        let cas: Vec<Vec3> = (0..rng.random_range(5..80))
            .map(|_| [rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)])
            .collect();
        let ligand: Vec<Vec3> = (0..rng.random_range(1..15))
            .map(|_| [rng.random_range(-spread..spread), rng.random_range(-spread..spread), rng.random_range(-spread..spread)])
            .collect();
        let residues = cas.iter().enumerate().map(|(i, &ca)| random_residue(&mut rng, ca, i as i32)).collect();
        let protein = Protein::new(residues);
        let want = brute_pocket(&cas, &ligand);
        fallback += !cas.iter().any(|&p| ligand.iter().any(|&l| dist(p, l) < 8.0)) as usize;
        capped += ligand.iter().any(|a| ligand.iter().any(|b| dist(*a, *b) > 10.0)) as usize;
        for (mode, keep) in [(PocketMode::Distance, &want.distance), (PocketMode::Radius, &want.radius)] {
            let got = extract_pocket(mode, &protein, &ligand, PocketNoise::NONE, c, "x");
            let ok = match got {
                Ok(p) => {
                    let seqs: Vec<usize> = p.residues.iter().map(|r| r.seq as usize).collect();
                    seqs == *keep && (0..3).all(|k| (p.center[k] - want.center[k]).abs() < 1e-12)
                }
                Err(_) => keep.is_empty(),
            };
            mismatches += (!ok) as usize;
        }
    }
    let pass = mismatches == 0;
    report(9, pass, &format!("{mismatches} mismatches over 50 complexes x 2 modes ({fallback} without a residue under 8 Å, {capped} with diameter over 10 Å)"));
    pass
}

// Determinism.

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

/// The structure-overfit configuration cut to a few epochs, trained and
/// sampled twice in the same directory.
fn criterion_10_determinism() -> bool {
    let tmp = TempDir::new().unwrap();
    let manifest = toy_set(tmp.path());
    let mut runs = Vec::new();
    for _ in 0..2 {
        let mut cfg = overfit_config(tmp.path(), manifest.clone(), Mode::Harmonicflow);
        cfg.epochs = 10;
        cfg.val_every = 5;
        let s = commands::train(&cfg).unwrap();
        let trained = snapshot(&cfg.out);
        cfg.checkpoint = Some(s.last_path);
        cfg.out = tmp.path().join("samples");
        commands::sample(&cfg, "toy1", 10).unwrap();
        runs.push((trained, snapshot(&cfg.out)));
        fs::remove_dir_all(tmp.path().join("run")).unwrap();
        fs::remove_dir_all(tmp.path().join("samples")).unwrap();
    }
    let files = runs[0].0.len() + runs[0].1.len();
    let pass = runs[0] == runs[1] && files == 14;
    report(10, pass, &format!("{files} files compared byte for byte across two runs"));
    pass
}

fn main() {
    let criteria: [(&str, fn() -> bool); 10] = [
        ("criterion_01_autodiff", criterion_01_autodiff),
        ("criterion_02_prior", criterion_02_prior),
        ("criterion_03_equivariance", criterion_03_equivariance),
        ("criterion_04_integrator", criterion_04_integrator),
        ("criterion_05_detach", criterion_05_detach),
        ("criterion_06_structure_overfit", criterion_06_structure_overfit),
        ("criterion_07_design_overfit", criterion_07_design_overfit),
        ("criterion_08_metrics", criterion_08_metrics),
        ("criterion_09_pockets", criterion_09_pockets),
        ("criterion_10_determinism", criterion_10_determinism),
    ];
    // Flags from cargo's test runner other than --skip are ignored.
    let mut select = Vec::new();
    let mut skip = Vec::new();
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--skip" {
            skip.extend(args.next());
        } else if !a.starts_with('-') {
            select.push(a);
        }
    }
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, run) in criteria {
        let wanted = select.is_empty() || select.iter().any(|s| name.contains(s.as_str()));
        if !wanted || skip.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        ran += 1;
        let t0 = std::time::Instant::now();
        let ok = std::panic::catch_unwind(run).unwrap_or_else(|_| {
            println!("{name}: panicked");
            false
        });
        println!("  ({name}, {:.1} s)", t0.elapsed().as_secs_f64());
        if !ok {
            failed.push(name);
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
