mod common;

use std::path::Path;

use vacgan::harness::eval::{sample_balanced, ConditionalSampler};
use vacgan::harness::metrics::read_metrics;
use vacgan::harness::{class_match_rate, run_experiment, DatasetConfig, EvalConfig, ExperimentConfig, HarnessError};
use vacgan::optim::{AdamHyper, NesterovHyper};
use vacgan::schemes::{stream_rng, Architecture, Scheme, SchemeConfig, SchemeError, TrioState};
use vacgan::datasets::GaussianMixtureSpec;

fn small(scheme: Scheme, epochs: usize) -> ExperimentConfig {
    let mut training = SchemeConfig::vacgan(4, 4).with_scheme(scheme);
    training.batch_size = 32;
    training.steps_per_epoch = Some(20);
    training.epochs = epochs;
    ExperimentConfig {
        seed: 5,
        dataset: DatasetConfig::Mixture2d { spec: None },
        training,
        architecture: None,
        adam: AdamHyper::default(),
        nesterov: NesterovHyper::default(),
        eval: EvalConfig {
            every_steps: 10,
            samples_per_class: 100,
            grid_every: Some(20),
            grid_cols: 4,
        },
        probe: None,
    }
}

#[test]
fn zero_epochs_leaves_only_the_initial_row() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_experiment(&small(Scheme::Vacgan, 0), dir.path()).unwrap();
    assert_eq!(s.records.len(), 1);
    let r = s.records[0];
    assert_eq!(r.step, 0);
    assert!(r.d_loss.is_none() && r.g_loss.is_none() && r.c_loss.is_none());
    assert!((r.class_match_rate.unwrap() - 0.25).abs() < 0.1);
    let text = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn untrained_generator_sits_near_chance() {
    let cfg = small(Scheme::Vacgan, 0);
    let spec = GaussianMixtureSpec::default_layout(4);
    for seed in 0..3 {
        let st = TrioState::new(&cfg.training, &Architecture::mixture2d(), cfg.adam, cfg.nesterov, seed).unwrap();
        let snap = st.snapshot();
        assert_eq!(snap.n_classes(), 4);
        let (x, req) = sample_balanced(&snap, 2500, &mut stream_rng(seed, 6)).unwrap();
        let assigned: Vec<usize> = (0..x.shape()[0]).map(|i| spec.nearest_mean(x.row(i))).collect();
        let rate = class_match_rate(&assigned, &req);
        assert!((0.15..=0.35).contains(&rate), "seed {seed}: {rate}");
    }
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "timing.csv")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn same_config_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = small(Scheme::Vacgan, 2);
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    let (fa, fb) = (files(a.path()), files(b.path()));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "checkpoint.bin",
            "confusion.csv",
            "manifest.txt",
            "metrics.csv",
            "samples_step0000.pgm",
            "samples_step0020.pgm",
            "samples_step0040.pgm"
        ]
    );
    assert_eq!(fa, fb);
}

#[test]
fn metrics_rows_are_monotone_and_confusion_rows_sum() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_experiment(&small(Scheme::Cgan, 2), dir.path()).unwrap();
    let rows = read_metrics(&dir.path().join("metrics.csv")).unwrap();
    assert_eq!(rows, s.records);
    let steps: Vec<u64> = rows.iter().map(|r| r.step).collect();
    assert_eq!(steps, [0, 10, 20, 30, 40]);
    assert!(rows.iter().skip(1).all(|r| r.c_loss.is_none() && r.d_loss.is_some()));
    assert!(rows.iter().all(|r| r.jsd_estimate.unwrap() <= 4f64.ln() + 1e-12));
    let cm = s.confusion.unwrap();
    for r in 0..4 {
        assert_eq!((0..4).map(|a| cm.get(r, a)).sum::<u64>(), 100);
    }
}

#[test]
fn divergence_aborts_but_keeps_written_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Scheme::Vacgan, 2);
    cfg.adam.learning_rate = 1e300;
    let err = run_experiment(&cfg, dir.path()).unwrap_err();
    assert!(matches!(err, HarnessError::Scheme(SchemeError::NonFinite { .. })), "{err}");
    let text = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(text.starts_with("step,d_loss,g_loss,c_loss,class_match_rate,jsd_estimate\n0,"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
