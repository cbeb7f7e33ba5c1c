//! The command implementations behind the binary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use flowsite_core::flow::{entropy_trace, euler_integrate, harmonic_prior_sample, train_step, FlowError, LossReport};
use flowsite_core::linalg::symmetric_eigen;
use flowsite_core::metrics::{best_of_k_stats, blosum_score, median, rmsd, rmsd_stats, sequence_recovery, EvalRecord};
use flowsite_core::model::FlowModel;
use flowsite_core::mol::{ComplexSample, PocketNoise, ResidueType};
use flowsite_core::rng::{derive, seeded};
use flowsite_core::toy::toy_complex;
use rand::seq::SliceRandom;

use crate::checkpoint;
use crate::config::{Mode, RunConfig};
use crate::data::{inference_sample, load_all, training_sample, Complex};
use crate::manifest::read_manifest;
use crate::pdb::{parse_ligand, write_ligand, write_protein};

/// Abort training when more than this fraction of the manifest fails to
/// load.
pub const MAX_SKIPPED_FRACTION: f64 = 0.5;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn load_manifest(cfg: &RunConfig, field: &'static str, path: Option<&Path>) -> Result<Vec<Complex>> {
    let path = RunConfig::require_file(field, path)?;
    let entries = read_manifest(&path)?;
    let (complexes, skipped) = load_all(&entries);
    if skipped as f64 > MAX_SKIPPED_FRACTION * entries.len() as f64 {
        bail!("{skipped} of {} complexes in {} failed to load", entries.len(), path.display());
    }
    let _ = cfg;
    Ok(complexes)
}

fn find<'a>(complexes: &'a [Complex], id: &str) -> Result<&'a Complex> {
    complexes.iter().find(|c| c.id == id).ok_or_else(|| {
        let ids: Vec<&str> = complexes.iter().map(|c| c.id.as_str()).collect();
        anyhow!("no complex {id:?}; available: {}", ids.join(", "))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs: usize,
    pub skipped_steps: usize,
    pub best: Option<f64>,
    pub last: LossReport,
    pub best_path: PathBuf,
    pub last_path: PathBuf,
}

/// Validation score: percentage of samples under 2 Å for structure-only
/// runs, contact-residue recovery for design runs. Higher is better.
pub fn validate(model: &FlowModel, cfg: &RunConfig, samples: &[ComplexSample], seed: u64) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    let mut recovery = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        for k in 0..cfg.val_samples {
            let tr = euler_integrate(model, &s.ligand, &s.pocket, cfg.steps, derive(derive(seed, i as u64), k as u64))?;
            match cfg.mode {
                Mode::Harmonicflow => {
                    hits += (rmsd(tr.final_positions(), s.x1())? < 2.0) as usize;
                    total += 1;
                }
                Mode::Flowsite => {
                    let designed = tr.designed_types().ok_or_else(|| anyhow!("model produced no residue types"))?;
                    recovery.push(sequence_recovery(&designed, &s.pocket.types(), &s.contacts)?);
                }
            }
        }
    }
    Ok(match cfg.mode {
        Mode::Harmonicflow => 100.0 * hits as f64 / total.max(1) as f64,
        Mode::Flowsite => recovery.iter().sum::<f64>() / recovery.len().max(1) as f64,
    })
}

pub fn train(cfg: &RunConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let complexes = load_manifest(cfg, "manifest", cfg.manifest.as_deref())?;
    let val_complexes = match &cfg.val_manifest {
        Some(p) => load_manifest(cfg, "val_manifest", Some(p))?,
        None => complexes.clone(),
    };
    let val: Vec<ComplexSample> = val_complexes
        .iter()
        .map(|c| inference_sample(c, cfg.pocket()))
        .collect::<Result<_, _>>()?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let best_path = cfg.out.join("best.ckpt");
    let last_path = cfg.out.join("last.ckpt");

    let flowsite = cfg.mode == Mode::Flowsite;
    let mut log = create(&cfg.out.join("loss_log.tsv"))?;
    if flowsite {
        writeln!(log, "epoch\tl_cfm\tl_refine\tl_type\tl_torsion\ttotal")?;
    } else {
        writeln!(log, "epoch\tl_cfm\tl_refine\ttotal")?;
    }
    let mut val_log = create(&cfg.out.join("val_log.tsv"))?;
    writeln!(val_log, "epoch\t{}", if flowsite { "recovery" } else { "pct_below_2" })?;

    let mut train_cfg = cfg.train();
    let noise = if cfg.pocket_noise { PocketNoise::default() } else { PocketNoise::NONE };
    let mut model = FlowModel::new(cfg.model());
    let mut best: Option<f64> = None;
    let mut skipped_steps = 0;
    let mut last = LossReport::new(0.0, 0.0, 0.0, 0.0, train_cfg.weights);
    let interval = cfg.validation_interval();
    for epoch in 0..cfg.epochs {
        let epoch_seed = derive(cfg.seed, epoch as u64);
        train_cfg.adam.lr = cfg.lr_at(epoch);
        // Draw k of complex i gets stream k * n + i.
        let n = complexes.len();
        let mut order: Vec<usize> = (0..n * cfg.repeats).collect();
        order.shuffle(&mut seeded(derive(epoch_seed, 0)));
        let mut samples = Vec::with_capacity(order.len());
        for &draw in &order {
            let c = &complexes[draw % n];
            match training_sample(c, cfg.pocket(), noise, cfg.fake_probability(), derive(derive(epoch_seed, 1), draw as u64)) {
                Ok(s) => samples.push(s),
                Err(e) => log::warn!("epoch {}: skipping {}: {e}", epoch + 1, c.id),
            }
        }
        let mut sums = [0.0; 4];
        let mut count = 0usize;
        for (b, batch) in samples.chunks(cfg.batch_size).enumerate() {
            match train_step(&mut model, batch, &train_cfg, derive(derive(epoch_seed, 2), b as u64)) {
                Ok(r) => {
                    let n = batch.len();
                    for (s, v) in sums.iter_mut().zip([r.l_cfm, r.l_refine, r.l_type, r.l_torsion]) {
                        *s += v * n as f64;
                    }
                    count += n;
                }
                Err(FlowError::NonFiniteLoss(id)) => {
                    log::warn!("epoch {}: non-finite loss on {id}; step skipped", epoch + 1);
                    skipped_steps += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let n = count.max(1) as f64;
        last = LossReport::new(sums[0] / n, sums[1] / n, sums[2] / n, sums[3] / n, train_cfg.weights);
        if flowsite {
            writeln!(log, "{}\t{}\t{}\t{}\t{}\t{}", epoch + 1, last.l_cfm, last.l_refine, last.l_type, last.l_torsion, last.total)?;
        } else {
            writeln!(log, "{}\t{}\t{}\t{}", epoch + 1, last.l_cfm, last.l_refine, last.total)?;
        }
        log.flush()?;
        log::info!("epoch {}: loss {:.4}", epoch + 1, last.total);

        let done = epoch + 1;
        if done % interval == 0 || done == cfg.epochs {
            let score = validate(&model, cfg, &val, derive(cfg.seed, u64::MAX))?;
            writeln!(val_log, "{done}\t{score}")?;
            val_log.flush()?;
            log::info!("epoch {done}: validation {score:.4}");
            if best.map_or(true, |b| score > b) {
                best = Some(score);
                checkpoint::save(&best_path, cfg, done as u64, best, &model)?;
            }
        }
    }
    checkpoint::save(&last_path, cfg, cfg.epochs as u64, best, &model)?;
    Ok(TrainSummary {
        epochs: cfg.epochs,
        skipped_steps,
        best,
        last,
        best_path,
        last_path,
    })
}

pub fn sample_name(id: &str, i: usize) -> String {
    format!("{id}_sample{i:02}")
}

/// Writes `count` pose files (and sequence files for design runs) for one
/// complex. Sample `i` uses seed `seed + i`.
pub fn sample(cfg: &RunConfig, id: &str, count: usize) -> Result<Vec<PathBuf>> {
    let ck = checkpoint::load(&RunConfig::require_file("checkpoint", cfg.checkpoint.as_deref())?)?;
    let complexes = load_manifest(cfg, "manifest", cfg.manifest.as_deref())?;
    let c = find(&complexes, id)?;
    let s = inference_sample(c, ck.config.pocket())?;
    fs::create_dir_all(&cfg.out)?;
    let mut written = Vec::new();
    for i in 0..count {
        let tr = euler_integrate(&ck.model, &s.ligand, &s.pocket, cfg.steps, cfg.seed + i as u64)?;
        let path = cfg.out.join(format!("{}.pdb", sample_name(id, i)));
        fs::write(&path, write_ligand(&s.ligand, tr.final_positions()))?;
        written.push(path);
        if let Some(types) = tr.designed_types() {
            let seq: String = types.iter().map(|t| t.one_letter()).collect();
            let path = cfg.out.join(format!("{}.seq", sample_name(id, i)));
            fs::write(&path, format!("{seq}\n"))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub id: String,
    pub status: &'static str,
    pub record: EvalRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub rows: Vec<EvalRow>,
    pub missing: usize,
    pub failed: usize,
}

fn parse_sequence(text: &str) -> Option<Vec<ResidueType>> {
    text.trim().chars().map(ResidueType::from_one_letter).collect()
}

/// Scores every prediction file in `predictions` against the manifest.
/// Complexes without predictions or with unreadable files count as
/// failures.
pub fn eval(cfg: &RunConfig, predictions: &Path) -> Result<EvalSummary> {
    let complexes = load_manifest(cfg, "manifest", cfg.manifest.as_deref())?;
    let mut files: Vec<PathBuf> = fs::read_dir(predictions)
        .with_context(|| format!("reading {}", predictions.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pdb" || x == "seq"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no prediction files in {}", predictions.display());
    }
    let mut rows = Vec::new();
    let (mut missing, mut failed) = (0, 0);
    for c in &complexes {
        let prefix = format!("{}_sample", c.id);
        let mine: Vec<&PathBuf> = files
            .iter()
            .filter(|p| p.file_stem().and_then(|s| s.to_str()).is_some_and(|s| s.strip_prefix(&prefix).is_some_and(|r| r.chars().all(|ch| ch.is_ascii_digit()))))
            .collect();
        let mut record = EvalRecord {
            id: c.id.clone(),
            rmsds: Vec::new(),
            recovery: None,
            blosum: None,
        };
        if mine.is_empty() {
            missing += 1;
            record.rmsds.push(f64::INFINITY);
            rows.push(EvalRow { id: c.id.clone(), status: "missing", record });
            continue;
        }
        let s = inference_sample(c, cfg.pocket())?;
        let truth = s.pocket.types();
        let mut ok = true;
        let (mut rec, mut blo) = (Vec::new(), Vec::new());
        for p in mine {
            let text = fs::read_to_string(p).unwrap_or_default();
            if p.extension().is_some_and(|x| x == "pdb") {
                let r = parse_ligand(&text).ok().and_then(|l| rmsd(l.coords()?, s.x1()).ok());
                match r {
                    Some(r) => record.rmsds.push(r),
                    None => {
                        log::warn!("{}: unreadable or mismatched pose", p.display());
                        record.rmsds.push(f64::INFINITY);
                        ok = false;
                    }
                }
            } else {
                match parse_sequence(&text).filter(|q| q.len() == truth.len()) {
                    Some(q) => {
                        rec.push(sequence_recovery(&q, &truth, &s.contacts)?);
                        blo.push(blosum_score(&truth, &q, &s.contacts)?);
                    }
                    None => {
                        log::warn!("{}: unreadable or mismatched sequence", p.display());
                        rec.push(0.0);
                        blo.push(0.0);
                        ok = false;
                    }
                }
            }
        }
        if !rec.is_empty() {
            record.recovery = Some(rec.iter().sum::<f64>() / rec.len() as f64);
            record.blosum = Some(blo.iter().sum::<f64>() / blo.len() as f64);
        }
        if !ok {
            failed += 1;
        }
        rows.push(EvalRow { id: c.id.clone(), status: if ok { "ok" } else { "failed" }, record });
    }

    fs::create_dir_all(&cfg.out)?;
    let mut out = create(&cfg.out.join("metrics.tsv"))?;
    writeln!(out, "id\tstatus\tsamples\tmin_rmsd\tmedian_rmsd\trecovery\tblosum")?;
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
    for r in &rows {
        let rm = &r.record.rmsds;
        let min = rm.iter().copied().fold(f64::INFINITY, f64::min);
        writeln!(
            out,
            "{}\t{}\t{}\t{:.4}\t{:.4}\t{}\t{}",
            r.id,
            r.status,
            rm.len(),
            min,
            median(rm),
            opt(r.record.recovery),
            opt(r.record.blosum)
        )?;
    }
    out.flush()?;

    let records: Vec<EvalRecord> = rows.iter().map(|r| r.record.clone()).collect();
    let mut summary = create(&cfg.out.join("summary.tsv"))?;
    writeln!(summary, "metric\tvalue")?;
    let all = rmsd_stats(&records);
    writeln!(summary, "complexes\t{}", rows.len())?;
    writeln!(summary, "missing\t{missing}")?;
    writeln!(summary, "failed\t{failed}")?;
    writeln!(summary, "pct_below_2\t{:.2}", all.below_2)?;
    writeln!(summary, "pct_below_5\t{:.2}", all.below_5)?;
    writeln!(summary, "median_rmsd\t{:.4}", all.median)?;
    let max_k = records.iter().map(|r| r.rmsds.len()).max().unwrap_or(1);
    for k in [1, 5, 10].into_iter().filter(|&k| k <= max_k.max(1)) {
        let s = best_of_k_stats(&records, k);
        writeln!(summary, "best_of_{k}_pct_below_2\t{:.2}", s.below_2)?;
        writeln!(summary, "best_of_{k}_pct_below_5\t{:.2}", s.below_5)?;
        writeln!(summary, "best_of_{k}_median_rmsd\t{:.4}", s.median)?;
    }
    // Complexes without sequences count as zero recovery once any exist.
    if records.iter().any(|r| r.recovery.is_some()) {
        let n = records.len() as f64;
        let rec: f64 = records.iter().map(|r| r.recovery.unwrap_or(0.0)).sum::<f64>() / n;
        let blo: f64 = records.iter().map(|r| r.blosum.unwrap_or(0.0)).sum::<f64>() / n;
        writeln!(summary, "recovery\t{rec:.4}")?;
        writeln!(summary, "blosum\t{blo:.4}")?;
    }
    summary.flush()?;
    Ok(EvalSummary { rows, missing, failed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSummary {
    pub samples: usize,
    /// Mean squared distance between bonded atoms over all samples; `None`
    /// without bonds.
    pub bonded_msd: Option<f64>,
    /// The same quantity from the Laplacian pseudoinverse.
    pub expected_msd: Option<f64>,
    pub center: [f64; 3],
}

/// Draws `count` prior samples around the complex's pocket center.
pub fn prior(cfg: &RunConfig, id: &str, count: usize) -> Result<PriorSummary> {
    let complexes = load_manifest(cfg, "manifest", cfg.manifest.as_deref())?;
    let c = find(&complexes, id)?;
    let s = inference_sample(c, cfg.pocket())?;
    let lig = &s.ligand;
    let bonds = lig.bonds();
    fs::create_dir_all(&cfg.out)?;
    let mut acc = 0.0;
    for i in 0..count {
        let x = harmonic_prior_sample(lig, s.pocket.center, cfg.seed + i as u64)?;
        for &(a, b) in &bonds {
            acc += flowsite_core::geom::dist2(x[a], x[b]);
        }
        fs::write(cfg.out.join(format!("{id}_prior{i:02}.pdb")), write_ligand(lig, &x))?;
    }
    let n = lig.len();
    let prior = flowsite_core::flow::HarmonicPrior::new(lig)?;
    let eig = symmetric_eigen(prior.laplacian(), n)?;
    let pinv = |i: usize, j: usize| -> f64 {
        eig.values
            .iter()
            .zip(&eig.vectors)
            .filter(|(l, _)| **l > flowsite_core::flow::ZERO_EIGENVALUE)
            .map(|(l, v)| v[i] * v[j] / l)
            .sum()
    };
    let expected = bonds.iter().map(|&(a, b)| 3.0 * (pinv(a, a) + pinv(b, b) - 2.0 * pinv(a, b))).sum::<f64>();
    let nb = bonds.len() as f64;
    let summary = PriorSummary {
        samples: count,
        bonded_msd: (!bonds.is_empty() && count > 0).then(|| acc / (nb * count as f64)),
        expected_msd: (!bonds.is_empty()).then(|| expected / nb),
        center: s.pocket.center,
    };
    let mut out = create(&cfg.out.join(format!("{id}_prior_summary.tsv")))?;
    writeln!(out, "samples\tbonded_msd\texpected_msd")?;
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
    writeln!(out, "{}\t{}\t{}", count, opt(summary.bonded_msd), opt(summary.expected_msd))?;
    out.flush()?;
    Ok(summary)
}

/// Runs one trajectory and writes the per-step trace and the full
/// trajectory.
pub fn trace(cfg: &RunConfig, id: &str) -> Result<Vec<flowsite_core::flow::TracePoint>> {
    let ck = checkpoint::load(&RunConfig::require_file("checkpoint", cfg.checkpoint.as_deref())?)?;
    let complexes = load_manifest(cfg, "manifest", cfg.manifest.as_deref())?;
    let c = find(&complexes, id)?;
    let s = inference_sample(c, ck.config.pocket())?;
    let tr = euler_integrate(&ck.model, &s.ligand, &s.pocket, cfg.steps, cfg.seed)?;
    let points = entropy_trace(&tr);
    fs::create_dir_all(&cfg.out)?;
    let mut out = create(&cfg.out.join(format!("{id}_trace.tsv")))?;
    writeln!(out, "step\tt\trmsd_to_final\tentropy")?;
    for p in &points {
        writeln!(out, "{}\t{}\t{}\t{}", p.step, p.t, p.rmsd_to_final, p.entropy)?;
    }
    out.flush()?;
    let states: Vec<serde_json::Value> = tr
        .states
        .iter()
        .map(|st| {
            serde_json::json!({
                "t": st.t,
                "x_t": st.x_t,
                "x1_pred": st.x1_pred,
                "types": st.types.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let file = create(&cfg.out.join(format!("{id}_trajectory.json")))?;
    serde_json::to_writer(file, &states)?;
    Ok(points)
}

/// Writes synthetic complexes and a manifest listing them.
pub fn toy(out: &Path, count: usize, atoms: usize, residues: usize, seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(out)?;
    let mut manifest = String::from("id\tprotein\tligand\n");
    for i in 0..count {
        let id = format!("toy{i}");
        let t = toy_complex(derive(seed, i as u64), atoms, residues);
        fs::write(out.join(format!("{id}_protein.pdb")), write_protein(&t.protein))?;
        fs::write(out.join(format!("{id}_ligand.pdb")), write_ligand(&t.ligand, t.ligand.coords().expect("toy ligands have coordinates")))?;
        manifest.push_str(&format!("{id}\t{id}_protein.pdb\t{id}_ligand.pdb\n"));
    }
    let path = out.join("manifest.tsv");
    fs::write(&path, manifest)?;
    Ok(path)
}
