use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use flowsite::commands;
use flowsite::config::{Mode, PocketKind, RunConfig};

#[derive(Parser)]
#[command(name = "flowsite", version, about = "Flow matching for ligand poses and binding-site design")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    pocket_mode: Option<PocketKind>,
    /// Integration steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a manifest.
    Train {
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        val_every: Option<usize>,
    },
    /// Sample poses (and residue designs) for one complex.
    Sample {
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Score a directory of predictions against the manifest.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Draw samples from the harmonic prior of one ligand.
    Prior {
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Per-step RMSD and residue-type entropy along one trajectory.
    Trace {
        #[arg(long)]
        id: String,
    },
    /// Write synthetic complexes and their manifest.
    Toy {
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long, default_value_t = 12)]
        atoms: usize,
        #[arg(long, default_value_t = 16)]
        residues: usize,
    },
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &cli.manifest {
        cfg.manifest = Some(v.clone());
    }
    if let Some(v) = &cli.checkpoint {
        cfg.checkpoint = Some(v.clone());
    }
    if let Some(v) = cli.mode {
        cfg.mode = v;
    }
    if let Some(v) = cli.pocket_mode {
        cfg.pocket_mode = v;
    }
    if let Some(v) = cli.steps {
        cfg.steps = v;
    }
    if let Command::Train { epochs, lr, batch_size, val_every } = &cli.command {
        if let Some(v) = epochs {
            cfg.epochs = *v;
        }
        if let Some(v) = lr {
            cfg.lr = *v;
        }
        if let Some(v) = batch_size {
            cfg.batch_size = *v;
        }
        if let Some(v) = val_every {
            cfg.val_every = *v;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = config(&cli)?;
    match &cli.command {
        Command::Train { .. } => {
            let s = commands::train(&cfg)?;
            println!("trained {} epochs; final loss {:.4}", s.epochs, s.last.total);
            if let Some(b) = s.best {
                println!("best validation score {b:.4}");
            }
            println!("{}\n{}", s.best_path.display(), s.last_path.display());
        }
        Command::Sample { id, count } => {
            for p in commands::sample(&cfg, id, *count)? {
                println!("{}", p.display());
            }
        }
        Command::Eval { predictions } => {
            let s = commands::eval(&cfg, predictions)?;
            print!("{}", std::fs::read_to_string(cfg.out.join("summary.tsv"))?);
            if s.missing > 0 {
                eprintln!("{} complexes have no predictions", s.missing);
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Prior { id, count } => {
            let s = commands::prior(&cfg, id, *count)?;
            let opt = |v: Option<f64>| v.map_or_else(|| "NA".into(), |v| format!("{v:.4}"));
            println!("samples {}", s.samples);
            println!("bonded mean squared distance {} (expected {})", opt(s.bonded_msd), opt(s.expected_msd));
        }
        Command::Trace { id } => {
            println!("step\tt\trmsd_to_final\tentropy");
            for p in commands::trace(&cfg, id)? {
                println!("{}\t{:.3}\t{:.4}\t{:.4}", p.step, p.t, p.rmsd_to_final, p.entropy);
            }
        }
        Command::Toy { count, atoms, residues } => {
            let m = commands::toy(&cfg.out, *count, *atoms, *residues, cfg.seed)?;
            println!("{}", m.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
