use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{DatasetConfig, ExperimentConfig};
use super::eval::{class_match_rate, jsd_of_assignments, jsd_of_points, sample_balanced, ConfusionMatrix, HistogramBox};
use super::metrics::{LossMean, MetricsRecord, MetricsWriter, METRICS_HEADER};
use super::pgm::{density_grid, image_grid};
use super::probe::Probe;
use super::{io_err, Result};
use crate::datasets::{load_mnist_dir, minibatches, mixture_dataset, sample_mixture, GaussianMixtureSpec, LabeledBatch, MNIST_SIDE};
use crate::schemes::{stream_rng, streams, train_step, GeneratorSnapshot, Manifest, StepLosses, TrioState};
use crate::tensor::Tensor;

pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const CONFUSION_FILE: &str = "confusion.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub steps: u64,
    pub records: Vec<MetricsRecord>,
    pub confusion: Option<ConfusionMatrix>,
    pub wall_seconds: f64,
}

impl RunSummary {
    pub fn last(&self) -> Option<&MetricsRecord> {
        self.records.last()
    }
}

enum Source {
    /// Fresh draws every step.
    Stream(GaussianMixtureSpec),
    Finite(LabeledBatch),
}

/// How generated samples get a class label.
enum Assigner {
    NearestMean(GaussianMixtureSpec),
    Probe(Box<Probe>),
    None,
}

struct Evaluation {
    assigned: Option<Vec<usize>>,
    requested: Vec<usize>,
    samples: Tensor,
    jsd: Option<f64>,
}

fn evaluate(snapshot: &GeneratorSnapshot, cfg: &ExperimentConfig, assigner: &Assigner) -> Result<Evaluation> {
    // The same latents at every evaluation, so successive rows differ only
    // through the generator.
    let mut rng = stream_rng(cfg.seed, streams::EVAL);
    let (samples, requested) = sample_balanced(snapshot, cfg.eval.samples_per_class, &mut rng)?;
    let n = snapshot.partition.n_classes;
    let (assigned, jsd) = match assigner {
        Assigner::NearestMean(spec) => {
            let a = (0..samples.shape()[0]).map(|i| spec.nearest_mean(samples.row(i))).collect();
            let j = jsd_of_points(&samples, &requested, n, HistogramBox::default())?;
            (Some(a), Some(j))
        }
        Assigner::Probe(p) => {
            let a = p.assign(&samples)?;
            let j = jsd_of_assignments(&a, &requested, n)?;
            (Some(a), Some(j))
        }
        Assigner::None => (None, None),
    };
    Ok(Evaluation {
        assigned,
        requested,
        samples,
        jsd,
    })
}

fn write_grid(snapshot: &GeneratorSnapshot, cfg: &ExperimentConfig, ev: &Evaluation, path: &Path) -> Result<()> {
    let n = snapshot.partition.n_classes;
    let image = match cfg.dataset {
        DatasetConfig::Mixture2d { .. } => density_grid(&ev.samples, &ev.requested, n, HistogramBox::default())?,
        DatasetConfig::Mnist { .. } => {
            let cols = cfg.eval.grid_cols;
            let mut rng = stream_rng(cfg.seed, streams::EVAL);
            let (x, _) = sample_balanced(snapshot, cols, &mut rng)?;
            image_grid(&x, n, cols, MNIST_SIDE)?
        }
    };
    image.write(path)
}

/// Trains `cfg` from scratch and writes its artifacts to `out`:
/// `metrics.csv`, `timing.csv`, `confusion.csv`, `samples_stepNNNN.pgm`,
/// `manifest.txt` and `checkpoint.bin`.
///
/// A non-finite loss aborts the run with an error; rows already written to
/// `metrics.csv` are kept.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let started = Instant::now();
    let t = &cfg.training;
    let n = t.n_classes;

    let mut data_rng = stream_rng(cfg.seed, streams::DATA);
    let (source, assigner) = match &cfg.dataset {
        DatasetConfig::Mixture2d { .. } => {
            let spec = cfg.dataset.mixture_spec(n).expect("mixture dataset has a spec");
            let source = match t.steps_per_epoch {
                Some(_) => Source::Stream(spec.clone()),
                None => Source::Finite(mixture_dataset(&spec, &mut data_rng)?),
            };
            (source, Assigner::NearestMean(spec))
        }
        DatasetConfig::Mnist { dir } => {
            let (train, _) = load_mnist_dir(dir)?;
            let assigner = match &cfg.probe {
                Some(p) => {
                    let probe = Probe::load(p)?;
                    probe.ensure_trusted()?;
                    Assigner::Probe(Box::new(probe))
                }
                None => Assigner::None,
            };
            (Source::Finite(train), assigner)
        }
    };
    let dataset_len = match &source {
        Source::Stream(_) => 0,
        Source::Finite(d) => d.len(),
    };
    let total = cfg.total_steps(dataset_len);

    let mut state = TrioState::new(t, &cfg.architecture(), cfg.adam, cfg.nesterov, cfg.seed)?;
    let mut latent_rng = stream_rng(cfg.seed, streams::LATENT);

    let mut metrics = MetricsWriter::create(&out.join(METRICS_FILE), METRICS_HEADER)?;
    let mut timing = MetricsWriter::create(&out.join(TIMING_FILE), "step,wall_seconds")?;
    let mut records = Vec::new();
    let mut confusion = None;
    let (mut d_mean, mut g_mean, mut c_mean) = (LossMean::default(), LossMean::default(), LossMean::default());

    let mut record = |state: &TrioState,
                      d: &mut LossMean,
                      g: &mut LossMean,
                      c: &mut LossMean,
                      metrics: &mut MetricsWriter,
                      timing: &mut MetricsWriter|
     -> Result<Evaluation> {
        let snap = state.snapshot();
        let ev = evaluate(&snap, cfg, &assigner)?;
        let row = MetricsRecord {
            step: state.step,
            d_loss: d.take(),
            g_loss: g.take(),
            c_loss: c.take(),
            class_match_rate: ev.assigned.as_ref().map(|a| class_match_rate(a, &ev.requested)),
            jsd_estimate: ev.jsd,
        };
        metrics.write_line(&row.to_csv_line())?;
        timing.write_line(&format!("{},{:.3}", state.step, started.elapsed().as_secs_f64()))?;
        records.push(row);
        let final_step = state.step == total;
        if final_step || cfg.eval.grid_every.is_some_and(|k| state.step % k == 0) {
            write_grid(&snap, cfg, &ev, &out.join(format!("samples_step{:04}.pgm", state.step)))?;
        }
        Ok(ev)
    };

    let mut last = record(&state, &mut d_mean, &mut g_mean, &mut c_mean, &mut metrics, &mut timing)?;
    let mut on_step = |state: &mut TrioState, losses: StepLosses| -> Result<()> {
        d_mean.push(Some(losses.d_loss));
        g_mean.push(Some(losses.g_loss));
        c_mean.push(losses.c_loss);
        if state.step % cfg.eval.every_steps == 0 || state.step == total {
            last = record(state, &mut d_mean, &mut g_mean, &mut c_mean, &mut metrics, &mut timing)?;
        }
        Ok(())
    };

    'epochs: for _ in 0..t.epochs {
        match &source {
            Source::Stream(spec) => {
                for _ in 0..t.steps_per_epoch.unwrap_or(0) {
                    let batch = sample_mixture(spec, &mut data_rng, t.batch_size)?;
                    let losses = train_step(&mut state, t, &batch, &mut latent_rng)?;
                    on_step(&mut state, losses)?;
                }
            }
            Source::Finite(data) => {
                let batches = minibatches(data, t.batch_size, &mut data_rng)?;
                let limit = t.steps_per_epoch.unwrap_or(usize::MAX);
                for batch in batches.take(limit) {
                    let losses = train_step(&mut state, t, &batch, &mut latent_rng)?;
                    on_step(&mut state, losses)?;
                    if state.step >= total {
                        break 'epochs;
                    }
                }
            }
        }
    }
    drop(on_step);

    if let Some(a) = &last.assigned {
        let cm = ConfusionMatrix::new(n, a, &last.requested);
        let path = out.join(CONFUSION_FILE);
        std::fs::write(&path, cm.to_csv()).map_err(io_err(&path))?;
        confusion = Some(cm);
    }

    let mut extra = Manifest::default();
    extra.set("dataset", cfg.dataset.name());
    extra.set("seed", cfg.seed);
    if let Some(spec) = cfg.dataset.mixture_spec(n) {
        extra.set("mixture.spec", serde_json::to_string(&spec).expect("mixture spec serialises"));
    }
    state.save(out, &extra)?;

    drop(record);
    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        steps: state.step,
        records,
        confusion,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}
