//! One PASS/FAIL line per acceptance criterion, then a summary count.
//! With `ACCEPTANCE_STRICT=1` any FAIL makes the process exit nonzero.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use vacgan::datasets::idx::IdxFile;
use vacgan::datasets::{load_mnist, load_mnist_dir, DataError};
use vacgan::divergence::{
    cce_of_classifier, max_cce, optimal_classifier, random_distribution, random_family, random_table,
    total_variation, verify_identity, DiscreteDistribution, DistributionFamily,
};
use vacgan::harness::eval::spearman;
use vacgan::harness::{run_experiment, train_probe, ExperimentConfig, ProbeConfig, RunSummary, PROBE_MIN_ACCURACY};

use common::ops::{generator_through_classifier, OP_CASES};
use common::FD_TOL;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn identity_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=10);
        let s = rng.random_range(1..=64);
        let f = random_family(n, s, 1e-6, &mut rng).unwrap();
        worst = worst.max(verify_identity(&f).unwrap().residual);
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-9 && t < Duration::from_secs(10),
        format!("max residual {worst:.3e} (≤ 1e-9) over 1000 families in {:.3}s (< 10s)", t.as_secs_f64()),
    )
}

fn cross_entropy_maximum() -> Outcome {
    let mut rng = common::rng(7);
    let mut worst_identical: f64 = 0.0;
    let mut worst_gap = f64::INFINITY;
    let mut checked = 0;
    for trial in 0..500 {
        let n = rng.random_range(2..=10);
        let s = rng.random_range(2..=64);
        let p = random_distribution(s, 1e-6, &mut rng).unwrap();
        let same = DistributionFamily::uniform(vec![p.clone(); n]).unwrap();
        let r = verify_identity(&same).unwrap();
        worst_identical = worst_identical.max((r.cce - max_cce(n)).abs());

        // Half the trials move exactly 0.01 of mass between two points of
        // one member, the smallest allowed separation.
        let family = if trial % 2 == 0 {
            let mut q = p.probs().to_vec();
            let (hi, lo) = if q[0] >= 0.01 { (0, 1) } else { (1, 0) };
            if q[hi] < 0.01 {
                continue;
            }
            q[hi] -= 0.01;
            q[lo] += 0.01;
            let mut members = vec![p.clone(); n];
            members[n - 1] = DiscreteDistribution::new(q).unwrap();
            DistributionFamily::uniform(members).unwrap()
        } else {
            random_family(n, s, 1e-6, &mut rng).unwrap()
        };
        let m = family.members();
        let tv = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| total_variation(&m[i], &m[j]).unwrap())
            .fold(0.0, f64::max);
        if tv < 0.01 - 1e-12 {
            continue;
        }
        checked += 1;
        let r = verify_identity(&family).unwrap();
        worst_gap = worst_gap.min(max_cce(n) - r.cce);
    }
    outcome(
        worst_identical <= 1e-9 && worst_gap > 1e-6 && checked > 0,
        format!(
            "identical: max |L* − N log N| = {worst_identical:.3e} (≤ 1e-9); separated (TV ≥ 0.01, {checked} families): min N log N − L* = {worst_gap:.3e} (> 1e-6)"
        ),
    )
}

fn optimal_classifier_beats_random() -> Outcome {
    let mut rng = common::rng(99);
    let mut wins = 0;
    let mut total = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=10);
        let s = rng.random_range(1..=64);
        let f = random_family(n, s, 1e-6, &mut rng).unwrap();
        let best = cce_of_classifier(&f, &optimal_classifier(&f).table).unwrap();
        for _ in 0..100 {
            let t = random_table(n, s, &mut rng).unwrap();
            total += 1;
            if best <= cce_of_classifier(&f, &t).unwrap() {
                wins += 1;
            }
        }
    }
    // Grid oracle: argmax over f of m·log f + n·log(1 − f) on 10⁴ points.
    const GRID: usize = 10_000;
    let mut worst_grid: f64 = 0.0;
    let mut worst_table: f64 = 0.0;
    for _ in 0..200 {
        let a = random_distribution(4, 1e-3, &mut rng).unwrap();
        let b = random_distribution(4, 1e-3, &mut rng).unwrap();
        let fam = DistributionFamily::uniform(vec![a.clone(), b.clone()]).unwrap();
        let opt = optimal_classifier(&fam);
        for x in 0..4 {
            let (m, n) = (a.probs()[x], b.probs()[x]);
            let (mut arg, mut val) = (0.0, f64::NEG_INFINITY);
            for k in 1..GRID {
                let f = k as f64 / GRID as f64;
                let v = m * f.ln() + n * (1.0 - f).ln();
                if v > val {
                    (arg, val) = (f, v);
                }
            }
            let closed = m / (m + n);
            worst_grid = worst_grid.max((arg - closed).abs());
            worst_table = worst_table.max((opt.table.row(x)[0] - closed).abs());
        }
    }
    outcome(
        wins == total && worst_grid <= 1e-4 && worst_table <= 1e-15,
        format!(
            "optimal ≤ random in {wins}/{total}; grid argmax within {worst_grid:.2e} of m/(m+n) (≤ 1e-4); table entries within {worst_table:.1e}"
        ),
    )
}

fn autodiff_suite() -> Outcome {
    let mut worst: (f64, &str) = (0.0, "");
    for (k, case) in OP_CASES.iter().enumerate() {
        let mut r = common::rng(1000 + k as u64);
        for _ in 0..50 {
            let e = (case.check)(&mut r);
            if e > worst.0 {
                worst = (e, case.name);
            }
        }
    }
    let mut r = common::rng(77);
    let e2e = (0..50).map(|_| generator_through_classifier(&mut r)).fold(0.0, f64::max);
    outcome(
        worst.0 <= FD_TOL && e2e <= FD_TOL,
        format!(
            "{} ops × 50 instances: max rel err {:.2e} ({}); generator-through-classifier: {e2e:.2e} (≤ 1e-6)",
            OP_CASES.len(),
            worst.0,
            worst.1
        ),
    )
}

fn mixture_run(name: &str) -> Result<RunSummary, String> {
    let cfg = ExperimentConfig::load(&common::configs_dir().join(name)).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_experiment(&cfg, dir.path()).map_err(|e| e.to_string())
}

fn conditional_fidelity(vac: &Result<RunSummary, String>) -> Outcome {
    let gan = mixture_run("mixture2d_gan.json");
    match (vac.as_ref(), gan.as_ref()) {
        (Ok(v), Ok(g)) => {
            let vm = v.last().and_then(|r| r.class_match_rate).unwrap_or(0.0);
            let gm = g.last().and_then(|r| r.class_match_rate).unwrap_or(0.0);
            let secs = v.wall_seconds + g.wall_seconds;
            outcome(
                vm >= 0.80 && (0.15..=0.35).contains(&gm) && secs <= 600.0,
                format!(
                    "vacgan class_match {vm:.4} (≥ 0.80); gan class_match {gm:.4} (in [0.15, 0.35]); {} steps each in {secs:.1}s (≤ 600s)",
                    v.steps
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("run failed: {e}")),
    }
}

fn jsd_monotonicity(vac: &Result<RunSummary, String>) -> Outcome {
    let v = match vac {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let steps: Vec<f64> = v.records.iter().map(|r| r.step as f64).collect();
    let jsd: Vec<f64> = v.records.iter().map(|r| r.jsd_estimate.unwrap_or(0.0)).collect();
    let rho = spearman(&steps, &jsd);
    let last = *jsd.last().unwrap_or(&0.0);
    let floor = 0.5 * 4f64.ln();
    outcome(
        rho >= 0.8 && last >= floor,
        format!(
            "Spearman(step, jsd) = {rho:.4} (≥ 0.8) over {} snapshots; final JSD {last:.4} (≥ {floor:.4})",
            jsd.len()
        ),
    )
}

fn mnist_probe_match() -> Outcome {
    if !common::mnist_available() {
        return outcome(false, format!("MNIST IDX files not found under {}", common::mnist_dir().display()));
    }
    let start = Instant::now();
    let run = || -> Result<(f64, f64), String> {
        let (train, test) = load_mnist_dir(&common::mnist_dir()).map_err(|e| e.to_string())?;
        let probe = train_probe(&train, &test, &ProbeConfig::default(), 0).map_err(|e| e.to_string())?;
        drop((train, test));
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let probe_dir = dir.path().join("probe");
        probe.save(&probe_dir).map_err(|e| e.to_string())?;
        let mut cfg = ExperimentConfig::load(&common::configs_dir().join("mnist_vacgan.json")).map_err(|e| e.to_string())?;
        cfg.dataset = vacgan::harness::DatasetConfig::Mnist { dir: common::mnist_dir() };
        cfg.probe = Some(probe_dir);
        if probe.test_accuracy < PROBE_MIN_ACCURACY {
            return Ok((probe.test_accuracy, 0.0));
        }
        let s = run_experiment(&cfg, &dir.path().join("run")).map_err(|e| e.to_string())?;
        Ok((probe.test_accuracy, s.last().and_then(|r| r.class_match_rate).unwrap_or(0.0)))
    };
    match run() {
        Ok((acc, rate)) => {
            let secs = start.elapsed().as_secs_f64();
            outcome(
                acc >= PROBE_MIN_ACCURACY && rate >= 0.30 && secs <= 1800.0,
                format!("probe test accuracy {acc:.4} (≥ 0.95); vacgan probe match {rate:.4} (≥ 0.30); {secs:.1}s (≤ 1800s)"),
            )
        }
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn determinism() -> Outcome {
    let run = || -> Result<Vec<Vec<u8>>, String> {
        let cfg = ExperimentConfig::load(&common::configs_dir().join("mixture2d_vacgan.json")).map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_experiment(&cfg, dir.path()).map_err(|e| e.to_string())?;
        ["metrics.csv", "checkpoint.bin", "manifest.txt"]
            .iter()
            .map(|f| std::fs::read(dir.path().join(f)).map_err(|e| e.to_string()))
            .collect()
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => outcome(
            a == b,
            format!(
                "metrics.csv ({} B), checkpoint.bin ({} B), manifest.txt identical across two runs: {}",
                a[0].len(),
                a[1].len(),
                a == b
            ),
        ),
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("run failed: {e}")),
    }
}

fn idx_format() -> Outcome {
    let (img, lab) = common::fabricated_idx_pair();
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = (dir.path().join("images"), dir.path().join("labels"));
    std::fs::write(&ip, &img).unwrap();
    std::fs::write(&lp, &lab).unwrap();
    let exact = match load_mnist(&ip, &lp) {
        Ok(b) => {
            b.labels == [7]
                && b.features.shape() == [1, 784]
                && b.features.data().iter().enumerate().all(|(k, &v)| v == (k % 256) as f64 / 255.0)
        }
        Err(_) => false,
    };
    let mut bad = img.clone();
    bad[2] = 0x09;
    let rejected = matches!(IdxFile::parse(&bad), Err(DataError::BadMagic { offset: 0, found: 0x0903 }));
    std::fs::write(&ip, &bad).unwrap();
    let message = load_mnist(&ip, &lp).map(|_| String::new()).unwrap_or_else(|e| e.to_string());
    let positioned = message.contains("byte offset 0");
    outcome(
        exact && rejected && positioned,
        format!("1-image pair parsed exactly: {exact}; bad magic rejected: {rejected}; error: \"{message}\""),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |name: &'static str, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };
    report("identity suite", identity_suite());
    report("cross-entropy maximum, both directions", cross_entropy_maximum());
    report("optimal classifier", optimal_classifier_beats_random());
    report("autodiff finite differences", autodiff_suite());
    let vac = mixture_run("mixture2d_vacgan.json");
    report("conditional fidelity (mixture2d)", conditional_fidelity(&vac));
    report("JSD monotonicity (mixture2d)", jsd_monotonicity(&vac));
    report("MNIST probe match", mnist_probe_match());
    report("determinism", determinism());
    report("IDX format", idx_format());
    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed == 0 || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
