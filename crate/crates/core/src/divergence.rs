//! Exact information quantities over finite supports.
//!
//! For `N` class-conditional distributions `p_1..p_N` on a shared support of
//! size `S`, the cross-entropy-optimal classifier is
//! `C*(x)[c] = p_c(x) / Σ_i p_i(x)`, its categorical cross-entropy
//! `L* = −Σ_i Σ_x p_i(x) log C*(x)[i]` never exceeds `N log N`, and with
//! uniform class weights `L* = N log N − N · JSD(p_1..p_N)`. Everything here
//! is a finite sum, so those relations can be checked to rounding error.
//!
//! All logarithms are natural (nats).

use rand::Rng;
use thiserror::Error;

use crate::tensor::kernels::clamp_prob;

/// Tolerance on `Σ p = 1` and `Σ π = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivergenceError {
    #[error("distribution is empty")]
    Empty,
    #[error("probability at index {index} is {value}; entries must be finite and non-negative")]
    BadEntry { index: usize, value: f64 },
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("support sizes differ: {0} vs {1}")]
    SupportMismatch(usize, usize),
    #[error("a family needs at least two members, got {0}")]
    TooFewMembers(usize),
    #[error("{members} members but {weights} weights")]
    WeightCount { members: usize, weights: usize },
    #[error("class weights are not uniform; the cross-entropy/JSD identity holds only for weights 1/N")]
    NonUniformWeights,
    #[error("classifier table is {rows}×{cols}, expected {expected_rows} rows × {expected_cols} classes")]
    TableShape {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("classifier row {row} sums to {sum}, not 1")]
    TableRow { row: usize, sum: f64 },
}

pub type Result<T> = std::result::Result<T, DivergenceError>;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(DivergenceError::Empty);
        }
        if let Some((index, &value)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(DivergenceError::BadEntry { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(DivergenceError::NotNormalized(sum));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights (e.g. histogram counts).
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(DivergenceError::BadEntry { index, value });
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(DivergenceError::NotNormalized(total));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(DivergenceError::Empty);
        }
        Self::new(vec![1.0 / size as f64; size])
    }

    pub fn point_mass(size: usize, at: usize) -> Result<Self> {
        let mut p = vec![0.0; size];
        *p.get_mut(at).ok_or(DivergenceError::Empty)? = 1.0;
        Self::new(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }
}

/// Total-variation distance `½ Σ |p − q|`.
pub fn total_variation(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    same_support(p, q)?;
    Ok(0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

fn same_support(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    if p.support_size() != q.support_size() {
        return Err(DivergenceError::SupportMismatch(p.support_size(), q.support_size()));
    }
    Ok(())
}

/// `−Σ p log p`, with `0 · log 0 = 0`.
pub fn shannon_entropy(p: &DiscreteDistribution) -> f64 {
    -p.probs.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KlDivergence {
    Finite(f64),
    /// `q` vanishes at `index` where `p` does not.
    Infinite { index: usize },
}

impl KlDivergence {
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Infinite { .. } => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }
}

/// `Σ p log(p/q)`; flags absolute-continuity violations instead of
/// returning a silent number.
pub fn kl_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<KlDivergence> {
    same_support(p, q)?;
    let mut total = 0.0;
    for (index, (&a, &b)) in p.probs.iter().zip(&q.probs).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(KlDivergence::Infinite { index });
        }
        total += a * (a / b).ln();
    }
    // Rounding can leave a tiny negative total for p ≈ q.
    Ok(KlDivergence::Finite(total.max(0.0)))
}

/// Members `p_1..p_N` on one support with class weights `π`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFamily {
    members: Vec<DiscreteDistribution>,
    weights: Vec<f64>,
}

impl DistributionFamily {
    pub fn new(members: Vec<DiscreteDistribution>, weights: Vec<f64>) -> Result<Self> {
        if members.len() < 2 {
            return Err(DivergenceError::TooFewMembers(members.len()));
        }
        if weights.len() != members.len() {
            return Err(DivergenceError::WeightCount {
                members: members.len(),
                weights: weights.len(),
            });
        }
        let s = members[0].support_size();
        if let Some(m) = members.iter().find(|m| m.support_size() != s) {
            return Err(DivergenceError::SupportMismatch(s, m.support_size()));
        }
        // Validates weights as a distribution in their own right.
        DiscreteDistribution::new(weights.clone())?;
        Ok(Self { members, weights })
    }

    pub fn uniform(members: Vec<DiscreteDistribution>) -> Result<Self> {
        let n = members.len().max(1);
        Self::new(members, vec![1.0 / n as f64; n])
    }

    pub fn members(&self) -> &[DiscreteDistribution] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_classes(&self) -> usize {
        self.members.len()
    }

    pub fn support_size(&self) -> usize {
        self.members[0].support_size()
    }

    pub fn has_uniform_weights(&self) -> bool {
        let u = 1.0 / self.n_classes() as f64;
        self.weights.iter().all(|w| (w - u).abs() <= NORMALIZATION_TOL)
    }

    /// `Σ_i π_i p_i`.
    pub fn mixture(&self) -> DiscreteDistribution {
        let mut m = vec![0.0; self.support_size()];
        for (p, &w) in self.members.iter().zip(&self.weights) {
            for (acc, &v) in m.iter_mut().zip(&p.probs) {
                *acc += w * v;
            }
        }
        DiscreteDistribution { probs: m }
    }
}

/// `H(Σ π_i p_i) − Σ π_i H(p_i)`, clipped at zero against rounding.
pub fn generalized_jsd(family: &DistributionFamily) -> f64 {
    let mixed = shannon_entropy(&family.mixture());
    let avg: f64 = family
        .members
        .iter()
        .zip(&family.weights)
        .map(|(p, w)| w * shannon_entropy(p))
        .sum();
    (mixed - avg).max(0.0)
}

/// Per-support-point class posteriors, one row per retained support point.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierTable {
    /// Support index of each row.
    support: Vec<usize>,
    n_classes: usize,
    outputs: Vec<f64>,
}

impl ClassifierTable {
    /// A table covering the whole support, rows in support order.
    pub fn new(n_classes: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let support = (0..rows.len()).collect();
        Self::with_support(n_classes, support, rows)
    }

    pub fn with_support(n_classes: usize, support: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != n_classes) {
            return Err(DivergenceError::TableShape {
                rows: rows.len(),
                cols: bad.len(),
                expected_rows: support.len(),
                expected_cols: n_classes,
            });
        }
        if rows.len() != support.len() {
            return Err(DivergenceError::TableShape {
                rows: rows.len(),
                cols: n_classes,
                expected_rows: support.len(),
                expected_cols: n_classes,
            });
        }
        for (row, r) in rows.iter().enumerate() {
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL || r.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(DivergenceError::TableRow { row, sum });
            }
        }
        Ok(Self {
            support,
            n_classes,
            outputs: rows.concat(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.outputs[r * self.n_classes..(r + 1) * self.n_classes]
    }

    pub fn rows(&self) -> usize {
        self.support.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalClassifier {
    pub table: ClassifierTable,
    /// Support points where every member has zero mass.
    pub excluded: Vec<usize>,
}

/// `output[x][c] = p_c(x) / Σ_i p_i(x)` at every point with positive total mass.
pub fn optimal_classifier(family: &DistributionFamily) -> OptimalClassifier {
    let n = family.n_classes();
    let mut support = Vec::new();
    let mut excluded = Vec::new();
    let mut outputs = Vec::new();
    for x in 0..family.support_size() {
        let total: f64 = family.members.iter().map(|p| p.probs[x]).sum();
        if total > 0.0 {
            support.push(x);
            outputs.extend(family.members.iter().map(|p| p.probs[x] / total));
        } else {
            excluded.push(x);
        }
    }
    OptimalClassifier {
        table: ClassifierTable {
            support,
            n_classes: n,
            outputs,
        },
        excluded,
    }
}

/// `−Σ_i Σ_x p_i(x) log table[x][i]` with the same probability clamp the
/// training losses use. Support points missing from the table must carry
/// zero mass under every member.
pub fn cce_of_classifier(family: &DistributionFamily, table: &ClassifierTable) -> Result<f64> {
    let s = family.support_size();
    if table.n_classes != family.n_classes() || table.support.iter().any(|&x| x >= s) {
        return Err(DivergenceError::TableShape {
            rows: table.rows(),
            cols: table.n_classes,
            expected_rows: s,
            expected_cols: family.n_classes(),
        });
    }
    let mut total = 0.0;
    for (r, &x) in table.support.iter().enumerate() {
        let row = table.row(r);
        for (i, p) in family.members.iter().enumerate() {
            let mass = p.probs[x];
            if mass > 0.0 {
                total -= mass * clamp_prob(row[i]).ln();
            }
        }
    }
    Ok(total)
}

/// Outcome of checking `L* = N log N − N · JSD`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub cce: f64,
    pub jsd: f64,
    pub residual: f64,
}

pub fn verify_identity(family: &DistributionFamily) -> Result<IdentityReport> {
    if !family.has_uniform_weights() {
        return Err(DivergenceError::NonUniformWeights);
    }
    let n = family.n_classes() as f64;
    let cce = cce_of_classifier(family, &optimal_classifier(family).table)?;
    let jsd = generalized_jsd(family);
    let residual = (cce - (n * n.ln() - n * jsd)).abs();
    Ok(IdentityReport { cce, jsd, residual })
}

/// A distribution on `support` points with every entry at least `floor`:
/// uniform weights renormalised into the mass left after the floors.
pub fn random_distribution<R: Rng + ?Sized>(support: usize, floor: f64, rng: &mut R) -> Result<DiscreteDistribution> {
    let free = 1.0 - floor * support as f64;
    if support == 0 {
        return Err(DivergenceError::Empty);
    }
    if !(floor >= 0.0 && free >= 0.0) {
        return Err(DivergenceError::BadEntry { index: 0, value: floor });
    }
    let raw: Vec<f64> = (0..support).map(|_| rng.random::<f64>() + f64::EPSILON).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|r| floor + free * r / total).collect();
    // Move the rounding error onto the largest entry.
    let err = 1.0 - probs.iter().sum::<f64>();
    let (i, _) = probs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("support is non-empty");
    probs[i] += err;
    DiscreteDistribution::new(probs)
}

/// `n` independent [`random_distribution`]s with uniform weights.
pub fn random_family<R: Rng + ?Sized>(n: usize, support: usize, floor: f64, rng: &mut R) -> Result<DistributionFamily> {
    let members = (0..n)
        .map(|_| random_distribution(support, floor, rng))
        .collect::<Result<Vec<_>>>()?;
    DistributionFamily::uniform(members)
}

/// A classifier table with a random probability row at every support point.
pub fn random_table<R: Rng + ?Sized>(n_classes: usize, support: usize, rng: &mut R) -> Result<ClassifierTable> {
    let rows = (0..support)
        .map(|_| random_distribution(n_classes, 0.0, rng).map(|d| d.probs))
        .collect::<Result<Vec<_>>>()?;
    ClassifierTable::new(n_classes, rows)
}

/// Upper bound of the optimal cross-entropy, `N log N`.
pub fn max_cce(n_classes: usize) -> f64 {
    let n = n_classes as f64;
    n * n.ln()
}
