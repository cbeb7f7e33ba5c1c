//! Run configuration: a flat TOML file whose values command-line flags may
//! override.

use std::path::{Path, PathBuf};

use flowsite_core::diff::AdamConfig;
use flowsite_core::equivariant::EquivariantConfig;
use flowsite_core::flow::{LossWeights, TrainConfig};
use flowsite_core::invariant::InvariantConfig;
use flowsite_core::model::{ModelConfig, ModelKind};
use flowsite_core::mol::PocketMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Ligand structure only.
    #[default]
    Harmonicflow,
    /// Ligand structure and pocket residue types.
    Flowsite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PocketKind {
    #[default]
    Distance,
    Radius,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub cfm: f64,
    pub refine: f64,
    #[serde(rename = "type")]
    pub residue_type: f64,
    pub torsion: f64,
}

impl Default for Weights {
    fn default() -> Self {
        let w = LossWeights::default();
        Self {
            cfm: w.cfm,
            refine: w.refine,
            residue_type: w.residue_type,
            torsion: w.torsion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub pocket_mode: PocketKind,
    /// Width of the conditional path in Å.
    pub sigma: f64,
    /// Integration steps at inference.
    pub steps: usize,
    /// Equivariant refinement layers.
    pub layers: usize,
    pub scalars: usize,
    pub vectors: usize,
    pub gat_layers: usize,
    pub gat_hidden: usize,
    pub weights: Weights,
    pub lr: f64,
    /// Final learning rate as a fraction of `lr`. Below 1 the rate follows a
    /// cosine from `lr` down to `lr * lr_min` over the run.
    pub lr_min: f64,
    pub batch_size: usize,
    /// Training samples drawn per complex and epoch, each with its own
    /// noise.
    pub repeats: usize,
    pub epochs: usize,
    /// Probability of running the self-conditioning pass in training.
    pub self_condition: f64,
    /// Replace the ligand by a fake ligand cut from the protein.
    pub fake_ligands: bool,
    pub fake_ligand_prob: f64,
    /// Perturb pocket membership and center during training.
    pub pocket_noise: bool,
    /// Epochs between validation runs; 0 picks the mode default.
    pub val_every: usize,
    /// Samples per validation complex.
    pub val_samples: usize,
    pub seed: u64,
    pub manifest: Option<PathBuf>,
    pub val_manifest: Option<PathBuf>,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let eq = EquivariantConfig::default();
        let inv = InvariantConfig::default();
        Self {
            mode: Mode::default(),
            pocket_mode: PocketKind::default(),
            sigma: 0.5,
            steps: 20,
            layers: eq.layers,
            scalars: eq.scalars,
            vectors: eq.vectors,
            gat_layers: inv.layers,
            gat_hidden: inv.hidden,
            weights: Weights::default(),
            lr: 1e-3,
            lr_min: 1.0,
            batch_size: 4,
            repeats: 1,
            epochs: 100,
            self_condition: 0.5,
            fake_ligands: false,
            fake_ligand_prob: 0.2,
            pocket_noise: true,
            val_every: 0,
            val_samples: 1,
            seed: 0,
            manifest: None,
            val_manifest: None,
            out: PathBuf::from("out"),
            checkpoint: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("invalid `{field}`: {msg}")]
    Invalid { field: &'static str, msg: String },
}

fn invalid(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, msg: msg.into() }
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg: Self = toml::from_str(&text).map_err(|source| ConfigError::Toml { path: path.into(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.manifest.as_mut().map(fix);
        cfg.val_manifest.as_mut().map(fix);
        cfg.checkpoint.as_mut().map(fix);
        fix(&mut cfg.out);
        Ok(cfg)
    }

    /// Range checks on every numeric field. Paths are checked by the
    /// commands that need them.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |field, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(field, format!("{v} is outside [0, 1]")))
            }
        };
        let positive = |field, v: usize| {
            if v >= 1 {
                Ok(())
            } else {
                Err(invalid(field, "must be at least 1"))
            }
        };
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma", format!("{} must be a finite value >= 0", self.sigma)));
        }
        positive("steps", self.steps)?;
        positive("layers", self.layers)?;
        positive("scalars", self.scalars)?;
        positive("vectors", self.vectors)?;
        positive("gat_layers", self.gat_layers)?;
        positive("gat_hidden", self.gat_hidden)?;
        positive("batch_size", self.batch_size)?;
        positive("repeats", self.repeats)?;
        positive("epochs", self.epochs)?;
        positive("val_samples", self.val_samples)?;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(invalid("lr", format!("{} must be positive", self.lr)));
        }
        unit("lr_min", self.lr_min)?;
        unit("self_condition", self.self_condition)?;
        unit("fake_ligand_prob", self.fake_ligand_prob)?;
        for (field, w) in [
            ("weights.cfm", self.weights.cfm),
            ("weights.refine", self.weights.refine),
            ("weights.type", self.weights.residue_type),
            ("weights.torsion", self.weights.torsion),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(invalid(field, format!("{w} must be a finite value >= 0")));
            }
        }
        Ok(())
    }

    pub fn require_file(field: &'static str, path: Option<&Path>) -> Result<PathBuf, ConfigError> {
        let p = path.ok_or_else(|| invalid(field, "not set"))?;
        if !p.is_file() {
            return Err(invalid(field, format!("{} does not exist", p.display())));
        }
        Ok(p.to_path_buf())
    }

    pub fn kind(&self) -> ModelKind {
        match self.mode {
            Mode::Harmonicflow => ModelKind::HarmonicFlow,
            Mode::Flowsite => ModelKind::FlowSite,
        }
    }

    pub fn pocket(&self) -> PocketMode {
        match self.pocket_mode {
            PocketKind::Distance => PocketMode::Distance,
            PocketKind::Radius => PocketMode::Radius,
        }
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            kind: self.kind(),
            equivariant: EquivariantConfig {
                layers: self.layers,
                scalars: self.scalars,
                vectors: self.vectors,
                ..Default::default()
            },
            invariant: InvariantConfig {
                layers: self.gat_layers,
                hidden: self.gat_hidden,
                ..Default::default()
            },
            seed: self.seed,
        }
    }

    /// Learning rate for a 0-based epoch.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if self.lr_min >= 1.0 {
            return self.lr;
        }
        let frac = epoch as f64 / self.epochs as f64;
        let cos = 0.5 * (1.0 + (std::f64::consts::PI * frac).cos());
        self.lr * (self.lr_min + (1.0 - self.lr_min) * cos)
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            sigma: self.sigma,
            weights: LossWeights {
                cfm: self.weights.cfm,
                refine: self.weights.refine,
                residue_type: self.weights.residue_type,
                torsion: self.weights.torsion,
            },
            adam: AdamConfig {
                lr: self.lr,
                ..Default::default()
            },
            self_condition: self.self_condition,
        }
    }

    /// Validation cadence in epochs: every epoch for residue design, every
    /// fifth when only structures are sampled.
    pub fn validation_interval(&self) -> usize {
        match (self.val_every, self.mode) {
            (0, Mode::Flowsite) => 1,
            (0, Mode::Harmonicflow) => 5,
            (n, _) => n,
        }
    }

    pub fn fake_probability(&self) -> f64 {
        if self.fake_ligands {
            self.fake_ligand_prob
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        let cfg: RunConfig = toml::from_str("mode = \"flowsite\"\nsigma = 0.25\n[weights]\ntype = 0.5\n").unwrap();
        assert_eq!(cfg.mode, Mode::Flowsite);
        assert_eq!(cfg.weights.residue_type, 0.5);
        assert_eq!(cfg.weights.cfm, 1.0);
        assert_eq!(cfg.validation_interval(), 1);
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let cfg = RunConfig { lr: 2e-3, lr_min: 0.1, epochs: 10, ..Default::default() };
        assert_eq!(cfg.lr_at(0), 2e-3);
        assert!((cfg.lr_at(5) - 1.1e-3).abs() < 1e-15);
        assert!(cfg.lr_at(9) > 2e-4 && cfg.lr_at(9) < cfg.lr_at(8));
        assert_eq!(RunConfig::default().lr_at(50), 1e-3);
    }

    #[test]
    fn errors_name_the_field() {
        let check = |cfg: RunConfig, field: &str| {
            let e = cfg.validate().unwrap_err().to_string();
            assert!(e.contains(&format!("`{field}`")), "{e}");
        };
        check(RunConfig { sigma: -1.0, ..Default::default() }, "sigma");
        check(RunConfig { steps: 0, ..Default::default() }, "steps");
        check(RunConfig { fake_ligand_prob: 1.5, ..Default::default() }, "fake_ligand_prob");
        check(RunConfig { lr: 0.0, ..Default::default() }, "lr");
        check(RunConfig { lr_min: 1.5, ..Default::default() }, "lr_min");
        check(RunConfig { repeats: 0, ..Default::default() }, "repeats");
        let mut w = RunConfig::default();
        w.weights.torsion = -0.1;
        check(w, "weights.torsion");
        assert!(toml::from_str::<RunConfig>("sigmaa = 1.0").is_err());
        let e = RunConfig::require_file("manifest", None).unwrap_err().to_string();
        assert!(e.contains("`manifest`"));
    }
}
