use rand::Rng;

use super::Result;
use crate::divergence::{generalized_jsd, DiscreteDistribution, DistributionFamily};
use crate::schemes::{GeneratorSnapshot, LoadedTrio, SchemeError};
use crate::tensor::Tensor;

/// Anything that produces one sample row per requested class.
pub trait ConditionalSampler {
    fn n_classes(&self) -> usize;
    fn sample_class(&self, labels: &[usize], rng: &mut dyn rand::RngCore) -> std::result::Result<Tensor, SchemeError>;
}

impl ConditionalSampler for GeneratorSnapshot {
    fn n_classes(&self) -> usize {
        self.partition.n_classes
    }

    fn sample_class(&self, labels: &[usize], rng: &mut dyn rand::RngCore) -> std::result::Result<Tensor, SchemeError> {
        self.sample(labels, rng)
    }
}

impl ConditionalSampler for LoadedTrio {
    fn n_classes(&self) -> usize {
        self.partition.n_classes
    }

    fn sample_class(&self, labels: &[usize], rng: &mut dyn rand::RngCore) -> std::result::Result<Tensor, SchemeError> {
        self.snapshot().sample(labels, rng)
    }
}

/// `per_class` copies of each class, class-major.
pub fn balanced_labels(n_classes: usize, per_class: usize) -> Vec<usize> {
    (0..n_classes).flat_map(|c| std::iter::repeat_n(c, per_class)).collect()
}

/// Fraction of positions where `assigned` equals `requested`.
pub fn class_match_rate(assigned: &[usize], requested: &[usize]) -> f64 {
    assert_eq!(assigned.len(), requested.len(), "label lists differ in length");
    if requested.is_empty() {
        return 0.0;
    }
    let hits = assigned.iter().zip(requested).filter(|(a, r)| a == r).count();
    hits as f64 / requested.len() as f64
}

/// Counts of (requested, assigned) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub n_classes: usize,
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize, assigned: &[usize], requested: &[usize]) -> Self {
        let mut counts = vec![0; n_classes * n_classes];
        for (&a, &r) in assigned.iter().zip(requested) {
            counts[r * n_classes + a] += 1;
        }
        Self { n_classes, counts }
    }

    pub fn get(&self, requested: usize, assigned: usize) -> u64 {
        self.counts[requested * self.n_classes + assigned]
    }

    /// Header `requested,assigned_0,...`, then one row per requested class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("requested");
        for a in 0..self.n_classes {
            out.push_str(&format!(",assigned_{a}"));
        }
        out.push('\n');
        for r in 0..self.n_classes {
            out.push_str(&r.to_string());
            for a in 0..self.n_classes {
                out.push_str(&format!(",{}", self.get(r, a)));
            }
            out.push('\n');
        }
        out
    }
}

/// Square binning window in the plane; points outside land in edge bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBox {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Default for HistogramBox {
    fn default() -> Self {
        Self {
            lo: -4.0,
            hi: 4.0,
            bins: 32,
        }
    }
}

impl HistogramBox {
    fn axis(&self, v: f64) -> usize {
        let t = (v - self.lo) / (self.hi - self.lo) * self.bins as f64;
        if t.is_nan() {
            return 0;
        }
        (t.floor().max(0.0) as usize).min(self.bins - 1)
    }

    pub fn cell(&self, x: f64, y: f64) -> usize {
        self.axis(y) * self.bins + self.axis(x)
    }

    pub fn cells(&self) -> usize {
        self.bins * self.bins
    }
}

/// One empirical distribution per requested class over `cells` bins.
pub fn histogram_family(cells: usize, n_classes: usize, bin_of: &[usize], requested: &[usize]) -> Result<DistributionFamily> {
    let mut counts = vec![vec![0.0; cells]; n_classes];
    for (&b, &r) in bin_of.iter().zip(requested) {
        counts[r][b] += 1.0;
    }
    let members = counts
        .iter()
        .map(|c| DiscreteDistribution::from_weights(c))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(DistributionFamily::uniform(members)?)
}

/// Generalized JSD of per-class 2-D histograms of `points` (`[n × 2]`).
pub fn jsd_of_points(points: &Tensor, requested: &[usize], n_classes: usize, window: HistogramBox) -> Result<f64> {
    let bins: Vec<usize> = (0..points.shape()[0])
        .map(|i| {
            let p = points.row(i);
            window.cell(p[0], p[1])
        })
        .collect();
    Ok(generalized_jsd(&histogram_family(window.cells(), n_classes, &bins, requested)?))
}

/// Generalized JSD of per-requested-class histograms of assigned labels.
pub fn jsd_of_assignments(assigned: &[usize], requested: &[usize], n_classes: usize) -> Result<f64> {
    Ok(generalized_jsd(&histogram_family(n_classes, n_classes, assigned, requested)?))
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average ranks.
/// Zero when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman inputs differ in length");
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// `per_class` samples of each class, class-major.
pub fn sample_balanced<S: ConditionalSampler + ?Sized, R: Rng>(
    sampler: &S,
    per_class: usize,
    rng: &mut R,
) -> Result<(Tensor, Vec<usize>)> {
    let labels = balanced_labels(sampler.n_classes(), per_class);
    let x = sampler.sample_class(&labels, rng)?;
    Ok((x, labels))
}
