//! Seedable Monte Carlo oracle for the closed forms.
//!
//! Replication `i` draws exclusively from stream `(seed, i)`, and replications
//! are reduced in fixed-size chunks whose partial moments are merged in chunk
//! order. Results are therefore bitwise identical for any rayon pool size.
//!
//! Two path semantics are available:
//!
//! * [`SimMode::IndependentPaths`]: each of the `ρ^k` paths is its own chain of
//!   `k + 1` independent hops. This is the model behind the binomial count.
//! * [`SimMode::SharedEdges`]: one draw for the origin and one per tree edge,
//!   so sibling paths share the outcome of their common ancestral edges. The
//!   mean count is unchanged; the variance grows.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loss::ArrivalProcess;
use crate::model::RiskModel;
use crate::network::{path_count, Scenario};
use crate::rng::{RngStream, StreamRng};
use crate::severity::SeveritySampler;

/// Largest `ρ^k` a single replication may touch.
pub const MAX_PATHS_PER_REPLICATION: u64 = 1 << 24;
/// Upper bound on `ρ^k · n` for one simulation call.
pub const MAX_PATH_WORK: u64 = 1 << 40;

const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimMode {
    IndependentPaths,
    SharedEdges,
}

/// How a single hop outcome is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HopDraw {
    /// Bernoulli with the hop's survival probability `H̄(d_l)`.
    Bernoulli,
    /// Fresh risk size `X_l` per hop, open when `β_l X_l > c_{r+l}`.
    SeverityThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub replications: u64,
    pub mode: SimMode,
    pub seed: u64,
    pub hop_draw: HopDraw,
}

impl SimConfig {
    pub fn new(replications: u64, mode: SimMode, seed: u64) -> Result<Self> {
        if replications == 0 {
            return Err(Error::InvalidParameter("at least one replication is required".into()));
        }
        Ok(Self {
            replications,
            mode,
            seed,
            hop_draw: HopDraw::Bernoulli,
        })
    }

    pub fn with_hop_draw(mut self, hop_draw: HopDraw) -> Self {
        self.hop_draw = hop_draw;
        self
    }
}

/// Empirical moments of a simulated quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `sqrt(variance / n)`.
    pub std_error: f64,
    /// Standard error of `variance`, from the empirical fourth central moment.
    pub variance_std_error: f64,
    pub replications: u64,
}

impl SimResult {
    /// `(mean - reference) / std_error`; zero when both sides agree exactly.
    pub fn z_score(&self, reference: f64) -> f64 {
        standardized(self.mean - reference, self.std_error)
    }

    /// `(variance - reference) / variance_std_error`.
    pub fn variance_z_score(&self, reference: f64) -> f64 {
        standardized(self.variance - reference, self.variance_std_error)
    }
}

fn standardized(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

// Streaming central moments up to order four (Pébay's one-pass updates), so
// chunk partials can be merged exactly in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    count: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let d = other.mean - self.mean;
        let (d2, d3, d4) = (d * d, d * d * d, d * d * d * d);
        Self {
            count,
            mean: self.mean + d * nb / n,
            m2: self.m2 + other.m2 + d2 * na * nb / n,
            m3: self.m3
                + other.m3
                + d3 * na * nb * (na - nb) / (n * n)
                + 3.0 * d * (na * other.m2 - nb * self.m2) / n,
            m4: self.m4
                + other.m4
                + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
                + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
                + 4.0 * d * (na * other.m3 - nb * self.m3) / n,
        }
    }

    fn finish(self) -> SimResult {
        let n = self.count as f64;
        let (variance, variance_std_error) = if self.count > 3 {
            let variance = self.m2 / (n - 1.0);
            let fourth = self.m4 / n;
            let spread = (fourth - (n - 3.0) / (n - 1.0) * variance * variance).max(0.0);
            (variance, (spread / n).sqrt())
        } else if self.count > 1 {
            (self.m2 / (n - 1.0), f64::INFINITY)
        } else {
            (0.0, f64::INFINITY)
        };
        SimResult {
            mean: self.mean,
            variance,
            std_error: (variance / n).sqrt(),
            variance_std_error,
            replications: self.count,
        }
    }
}

fn chunk_bounds(cfg: &SimConfig) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let n = cfg.replications;
    (0..n.div_ceil(CHUNK))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(move |c| (c * CHUNK, ((c + 1) * CHUNK).min(n)))
}

/// Runs `cfg.replications` independent evaluations of `draw` and reduces them
/// deterministically.
pub fn replicate<F>(cfg: &SimConfig, draw: F) -> SimResult
where
    F: Fn(&mut StreamRng) -> f64 + Sync,
{
    let partials: Vec<Accumulator> = chunk_bounds(cfg)
        .map(|(lo, hi)| {
            let mut acc = Accumulator::default();
            for id in lo..hi {
                let mut rng = RngStream::new(cfg.seed, id).rng();
                acc.push(draw(&mut rng));
            }
            acc
        })
        .collect();
    partials.into_iter().fold(Accumulator::default(), Accumulator::merge).finish()
}

#[derive(Debug, Clone)]
enum HopRule {
    Bernoulli(Vec<f64>),
    Threshold {
        severity: SeveritySampler,
        thresholds: Vec<f64>,
    },
}

/// Draws the number of fully compromised origin-to-generation-`k` paths for
/// one external attack.
#[derive(Debug, Clone)]
pub struct PathCountSampler {
    branching: u32,
    paths: u64,
    mode: SimMode,
    rule: HopRule,
}

impl PathCountSampler {
    pub fn new(model: &RiskModel, scenario: Scenario, mode: SimMode, hop_draw: HopDraw) -> Result<Self> {
        let thresholds = model.thresholds(scenario)?;
        let rule = match hop_draw {
            HopDraw::Bernoulli => {
                HopRule::Bernoulli(thresholds.iter().map(|&d| model.severity.survival(d)).collect())
            }
            HopDraw::SeverityThreshold => HopRule::Threshold {
                severity: model.severity.sampler(),
                thresholds,
            },
        };
        Self::build(model.tree.branching(), scenario.depth(), mode, rule)
    }

    /// Sampler driven directly by per-level hop probabilities `q_0..=q_k`
    /// (`q_0` is the origin).
    pub fn from_hop_probabilities(branching: u32, hop_probs: Vec<f64>, mode: SimMode) -> Result<Self> {
        if hop_probs.is_empty() {
            return Err(Error::InvalidParameter("need at least the origin probability".into()));
        }
        if let Some(q) = hop_probs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::InvalidParameter(format!("hop probability {q} outside [0, 1]")));
        }
        if branching == 0 {
            return Err(Error::InvalidParameter("branching factor must be at least 1".into()));
        }
        let depth = hop_probs.len() - 1;
        Self::build(branching, depth, mode, HopRule::Bernoulli(hop_probs))
    }

    fn build(branching: u32, depth: usize, mode: SimMode, rule: HopRule) -> Result<Self> {
        let paths = path_count(branching, depth)?;
        if paths > MAX_PATHS_PER_REPLICATION {
            return Err(Error::ResourceLimit(format!(
                "{paths} paths per replication exceeds {MAX_PATHS_PER_REPLICATION}; reduce the depth k"
            )));
        }
        Ok(Self { branching, paths, mode, rule })
    }

    pub fn paths(&self) -> u64 {
        self.paths
    }

    pub fn mode(&self) -> SimMode {
        self.mode
    }

    fn check_workload(&self, replications: u64) -> Result<()> {
        match self.paths.checked_mul(replications) {
            Some(work) if work <= MAX_PATH_WORK => Ok(()),
            _ => Err(Error::ResourceLimit(format!(
                "{} paths x {replications} replications exceeds the {MAX_PATH_WORK} path budget; reduce k or the replication count",
                self.paths
            ))),
        }
    }

    #[inline]
    fn hop<R: Rng + ?Sized>(&self, level: usize, rng: &mut R) -> bool {
        match &self.rule {
            HopRule::Bernoulli(q) => rng.random::<f64>() < q[level],
            HopRule::Threshold { severity, thresholds } => severity.sample(rng) > thresholds[level],
        }
    }

    fn depth(&self) -> usize {
        match &self.rule {
            HopRule::Bernoulli(q) => q.len() - 1,
            HopRule::Threshold { thresholds, .. } => thresholds.len() - 1,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let depth = self.depth();
        match self.mode {
            SimMode::IndependentPaths => (0..self.paths)
                .filter(|_| (0..=depth).all(|l| self.hop(l, rng)))
                .count() as u64,
            SimMode::SharedEdges => {
                // Only edges below open nodes can change the count, so the
                // frontier of open nodes is all that needs drawing.
                let mut open = u64::from(self.hop(0, rng));
                for level in 1..=depth {
                    if open == 0 {
                        break;
                    }
                    let edges = open * u64::from(self.branching);
                    open = (0..edges).filter(|_| self.hop(level, rng)).count() as u64;
                }
                open
            }
        }
    }
}

/// Replicated draws of `U_r^(k)`.
pub fn simulate_path_count(model: &RiskModel, scenario: Scenario, cfg: &SimConfig) -> Result<SimResult> {
    let sampler = PathCountSampler::new(model, scenario, cfg.mode, cfg.hop_draw)?;
    simulate_counts(&sampler, cfg)
}

/// Replicated draws from an explicit sampler.
pub fn simulate_counts(sampler: &PathCountSampler, cfg: &SimConfig) -> Result<SimResult> {
    sampler.check_workload(cfg.replications)?;
    Ok(replicate(cfg, |rng| sampler.sample(rng) as f64))
}

/// Empirical histogram of the path count, indexed `0..=ρ^k`.
pub fn path_count_histogram(sampler: &PathCountSampler, cfg: &SimConfig) -> Result<Vec<u64>> {
    sampler.check_workload(cfg.replications)?;
    let bins = sampler.paths as usize + 1;
    let partials: Vec<Vec<u64>> = chunk_bounds(cfg)
        .map(|(lo, hi)| {
            let mut hist = vec![0u64; bins];
            for id in lo..hi {
                let mut rng = RngStream::new(cfg.seed, id).rng();
                hist[sampler.sample(&mut rng) as usize] += 1;
            }
            hist
        })
        .collect();
    Ok(partials.into_iter().fold(vec![0u64; bins], |mut acc, h| {
        acc.iter_mut().zip(h).for_each(|(a, b)| *a += b);
        acc
    }))
}

struct LocalLossSampler {
    counts: PathCountSampler,
    severity: SeveritySampler,
    scale: f64,
}

impl LocalLossSampler {
    fn new(model: &RiskModel, scenario: Scenario, cfg: &SimConfig) -> Result<Self> {
        Ok(Self {
            counts: PathCountSampler::new(model, scenario, cfg.mode, cfg.hop_draw)?,
            severity: model.severity.sampler(),
            scale: model.loss_scale(scenario)?,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let compromised = self.counts.sample(rng);
        let total: f64 = (0..compromised).map(|_| self.severity.sample(rng)).sum();
        self.scale * total
    }
}

/// Replicated draws of `S = Σ_{j=1}^{U} β_k c_{r+k} X_j`.
pub fn simulate_local_loss(model: &RiskModel, scenario: Scenario, cfg: &SimConfig) -> Result<SimResult> {
    let sampler = LocalLossSampler::new(model, scenario, cfg)?;
    sampler.counts.check_workload(cfg.replications)?;
    Ok(replicate(cfg, |rng| sampler.sample(rng)))
}

/// Replicated draws of `L_t`: `N_t ~ Poisson(μt)` independent local losses.
pub fn simulate_aggregate_loss(
    model: &RiskModel,
    scenario: Scenario,
    arrivals: ArrivalProcess,
    cfg: &SimConfig,
) -> Result<SimResult> {
    let sampler = LocalLossSampler::new(model, scenario, cfg)?;
    let rate = arrivals.expected_count();
    let expected_work = (sampler.counts.paths as f64) * (cfg.replications as f64) * rate.max(1.0);
    if expected_work > MAX_PATH_WORK as f64 {
        return Err(Error::ResourceLimit(format!(
            "about {expected_work:.3e} path draws exceeds the {MAX_PATH_WORK} budget; reduce k, n or μt"
        )));
    }
    let arrivals = if rate > 0.0 {
        Some(Poisson::new(rate).map_err(|e| Error::InvalidParameter(format!("Poisson rate {rate}: {e}")))?)
    } else {
        None
    };
    Ok(replicate(cfg, |rng| match &arrivals {
        None => 0.0,
        Some(poisson) => {
            let attacks = poisson.sample(rng) as u64;
            (0..attacks).map(|_| sampler.sample(rng)).sum()
        }
    }))
}
