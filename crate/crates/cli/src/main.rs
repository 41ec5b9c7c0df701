use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vacgan::datasets::{load_mnist_dir, GaussianMixtureSpec, MNIST_SIDE};
use vacgan::divergence::{random_family, verify_identity};
use vacgan::harness::eval::{class_match_rate, jsd_of_assignments, jsd_of_points, sample_balanced, HistogramBox};
use vacgan::harness::pgm::{density_grid, image_grid};
use vacgan::harness::{run_experiment, train_probe, ConfusionMatrix, ExperimentConfig, Probe, ProbeConfig};
use vacgan::schemes::{stream_rng, streams, TrioState};

#[derive(Parser)]
#[command(name = "vacgan", version, about = "Conditional GAN schemes with a parallel classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one scheme from a JSON experiment config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to runs/<config stem>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check L* = N log N − N·JSD on random discrete families; prints CSV.
    VerifyIdentities {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        support: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Smallest probability of any support point.
        #[arg(long, default_value_t = 1e-6)]
        floor: f64,
    },
    /// Score a checkpoint's samples: nearest mean for mixtures, the probe
    /// for MNIST.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        probe: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        samples_per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a PGM sheet of samples, one row (or panel) per class.
    Grid {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 10)]
        cols: usize,
        #[arg(long, default_value = "samples.pgm")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the MNIST evaluation probe on real data.
    TrainProbe {
        #[arg(long, default_value = "data/mnist")]
        mnist_dir: PathBuf,
        #[arg(long, default_value = "runs/probe")]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn mixture_spec_of(trio: &vacgan::schemes::LoadedTrio) -> CliResult<Option<GaussianMixtureSpec>> {
    match trio.manifest.get_opt("mixture.spec") {
        Some(json) => Ok(Some(serde_json::from_str(json)?)),
        None => Ok(None),
    }
}

fn train(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> CliResult<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = out.unwrap_or_else(|| {
        let stem = config.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from("runs").join(stem)
    });
    let summary = run_experiment(&cfg, &out)?;
    let last = summary.last().copied().unwrap_or_default();
    let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    println!(
        "{} steps in {:.1}s; class_match_rate={} jsd_estimate={}; artifacts in {}",
        summary.steps,
        summary.wall_seconds,
        show(last.class_match_rate),
        show(last.jsd_estimate),
        out.display()
    );
    Ok(())
}

fn verify(n: usize, support: usize, trials: usize, seed: u64, floor: f64) -> CliResult<bool> {
    let mut rng = stream_rng(seed, 0);
    let mut worst: f64 = 0.0;
    println!("trial,cce,jsd,residual");
    for trial in 0..trials {
        let family = random_family(n, support, floor, &mut rng)?;
        let r = verify_identity(&family)?;
        worst = worst.max(r.residual);
        println!("{trial},{},{},{:e}", r.cce, r.jsd, r.residual);
    }
    eprintln!("max residual {worst:e} over {trials} trials");
    Ok(worst <= 1e-9)
}

fn eval(checkpoint: &Path, probe: Option<&Path>, per_class: usize, seed: u64) -> CliResult<()> {
    let trio = TrioState::load(checkpoint)?;
    let n = trio.partition.n_classes;
    let mut rng = stream_rng(seed, streams::EVAL);
    let (x, requested) = sample_balanced(&trio, per_class, &mut rng)?;
    let (assigned, jsd) = match (mixture_spec_of(&trio)?, probe) {
        (Some(spec), _) => {
            let a: Vec<usize> = (0..x.shape()[0]).map(|i| spec.nearest_mean(x.row(i))).collect();
            (a, jsd_of_points(&x, &requested, n, HistogramBox::default())?)
        }
        (None, Some(p)) => {
            let probe = Probe::load(p)?;
            let a = probe.assign(&x)?;
            let j = jsd_of_assignments(&a, &requested, n)?;
            (a, j)
        }
        (None, None) => return Err("this checkpoint needs --probe to be scored".into()),
    };
    println!("scheme={} step={}", trio.scheme, trio.step);
    println!("class_match_rate={:.6}", class_match_rate(&assigned, &requested));
    println!("jsd_estimate={jsd:.6} (max {:.6})", (n as f64).ln());
    print!("{}", ConfusionMatrix::new(n, &assigned, &requested).to_csv());
    Ok(())
}

fn grid(checkpoint: &Path, cols: usize, out: &Path, seed: u64) -> CliResult<()> {
    let trio = TrioState::load(checkpoint)?;
    let n = trio.partition.n_classes;
    let mut rng = stream_rng(seed, streams::EVAL);
    let image = if trio.generator.out_dim() == MNIST_SIDE * MNIST_SIDE {
        let (x, _) = sample_balanced(&trio, cols, &mut rng)?;
        image_grid(&x, n, cols, MNIST_SIDE)?
    } else {
        let (x, requested) = sample_balanced(&trio, cols.max(1000), &mut rng)?;
        density_grid(&x, &requested, n, HistogramBox::default())?
    };
    image.write(out)?;
    println!("wrote {}×{} grid to {}", image.width, image.height, out.display());
    Ok(())
}

fn probe(dir: &Path, out: &Path, epochs: usize, seed: u64) -> CliResult<()> {
    let (train, test) = load_mnist_dir(dir)?;
    let cfg = ProbeConfig {
        epochs,
        ..ProbeConfig::default()
    };
    let p = train_probe(&train, &test, &cfg, seed)?;
    p.save(out)?;
    println!("probe test accuracy {:.4}; saved to {}", p.test_accuracy, out.display());
    p.ensure_trusted()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { config, seed, out } => train(&config, seed, out),
        Command::VerifyIdentities {
            n,
            support,
            trials,
            seed,
            floor,
        } => match verify(n, support, trials, seed, floor) {
            Ok(true) => Ok(()),
            Ok(false) => Err("residual above 1e-9".into()),
            Err(e) => Err(e),
        },
        Command::Eval {
            checkpoint,
            probe,
            samples_per_class,
            seed,
        } => eval(&checkpoint, probe.as_deref(), samples_per_class, seed),
        Command::Grid { checkpoint, cols, out, seed } => grid(&checkpoint, cols, &out, seed),
        Command::TrainProbe {
            mnist_dir,
            out,
            epochs,
            seed,
        } => probe(&mnist_dir, &out, epochs, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
