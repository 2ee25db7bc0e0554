//! Exact brute-force oracles on small trees.
//!
//! An [`EdgeStateEnumeration`] lists every joint outcome of the Bernoulli
//! variables of a depth-`k`, branching-`ρ` tree below an origin: one variable
//! for the origin and one per edge, with level-`l` variables open with
//! probability `q_l`. Node `x` is compromised when its own variable and every
//! ancestor variable are open. From this joint we get the exact law of the
//! number of compromised generation-`k` nodes when paths share edges, and we
//! can check the conditional independence and Bayesian-network factorization
//! of node states directly.

use rayon::prelude::*;

use crate::contagion::path_contagion_prob;
use crate::error::{Error, Result};
use crate::loss::MomentPair;
use crate::model::RiskModel;
use crate::network::{path_count, DecayProfile, ProfileKind, SecurityProfile, TreeSpec};
use crate::quadrature::integrate;
use crate::severity::SeverityModel;
use crate::simulator::SimMode;

/// Largest number of Bernoulli variables the enumeration will visit.
pub const MAX_ENUMERATED_VARIABLES: usize = 24;
/// Largest tree for which the node-state joint is materialized.
pub const MAX_FACTORIZATION_NODES: usize = 16;
/// Residual below which the factorization check passes.
pub const FACTORIZATION_TOLERANCE: f64 = 1e-12;

const BLOCK: u64 = 1 << 12;

/// Common latent variable driving the origin's child edges. With
/// probability `latent_prob` every child edge is open with `open_if_latent`,
/// otherwise with `open_otherwise`. Used as a negative control: siblings are
/// then dependent given their parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiblingCoupling {
    pub latent_prob: f64,
    pub open_if_latent: f64,
    pub open_otherwise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStateEnumeration {
    branching: u32,
    level_probs: Vec<f64>,
    coupling: Option<SiblingCoupling>,
    /// BFS-ordered level of every variable; index 0 is the origin.
    levels: Vec<usize>,
    leaf_start: usize,
}

impl EdgeStateEnumeration {
    /// `level_probs[l]` is `q_l`; `q_0` belongs to the origin.
    pub fn new(branching: u32, level_probs: Vec<f64>) -> Result<Self> {
        if branching == 0 {
            return Err(Error::InvalidParameter("branching factor must be at least 1".into()));
        }
        if level_probs.is_empty() {
            return Err(Error::InvalidParameter("need at least the origin probability".into()));
        }
        if let Some(q) = level_probs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::InvalidParameter(format!("probability {q} outside [0, 1]")));
        }
        let depth = level_probs.len() - 1;
        let mut levels = Vec::new();
        let mut leaf_start = 0;
        for level in 0..=depth {
            let width = path_count(branching, level)?;
            if levels.len() as u64 + width > MAX_ENUMERATED_VARIABLES as u64 {
                return Err(Error::ResourceLimit(format!(
                    "enumeration needs more than {MAX_ENUMERATED_VARIABLES} Bernoulli variables"
                )));
            }
            leaf_start = levels.len();
            levels.extend(std::iter::repeat_n(level, width as usize));
        }
        Ok(Self {
            branching,
            level_probs,
            coupling: None,
            levels,
            leaf_start,
        })
    }

    pub fn with_sibling_coupling(mut self, coupling: SiblingCoupling) -> Result<Self> {
        let probs = [coupling.latent_prob, coupling.open_if_latent, coupling.open_otherwise];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter("coupling probabilities must lie in [0, 1]".into()));
        }
        if self.depth() == 0 {
            return Err(Error::InvalidParameter("coupling needs at least one generation".into()));
        }
        self.coupling = Some(coupling);
        Ok(self)
    }

    pub fn variables(&self) -> usize {
        self.levels.len()
    }

    pub fn depth(&self) -> usize {
        self.level_probs.len() - 1
    }

    pub fn branching(&self) -> u32 {
        self.branching
    }

    fn parent(&self, node: usize) -> usize {
        (node - 1) / self.branching as usize
    }

    /// Latent branches `(weight, level-1 probability override)`.
    fn latent_branches(&self) -> Vec<(f64, Option<f64>)> {
        match self.coupling {
            None => vec![(1.0, None)],
            Some(c) => vec![
                (c.latent_prob, Some(c.open_if_latent)),
                (1.0 - c.latent_prob, Some(c.open_otherwise)),
            ],
        }
    }

    /// Visits every variable assignment with non-zero weight, passing the
    /// node compromise bitmask and its probability.
    fn for_each_outcome(&self, lo: u64, hi: u64, mut visit: impl FnMut(u64, f64)) {
        let n = self.variables();
        let mut open = vec![false; n];
        for (weight, level_one) in self.latent_branches() {
            if weight == 0.0 {
                continue;
            }
            let prob_of = |level: usize| match (level, level_one) {
                (1, Some(q)) => q,
                _ => self.level_probs[level],
            };
            for mask in lo..hi {
                let mut p = weight;
                let mut nodes = 0u64;
                for i in 0..n {
                    let bit = mask >> i & 1 == 1;
                    let q = prob_of(self.levels[i]);
                    p *= if bit { q } else { 1.0 - q };
                    open[i] = bit && (i == 0 || open[self.parent(i)]);
                    if open[i] {
                        nodes |= 1 << i;
                    }
                }
                if p > 0.0 {
                    visit(nodes, p);
                }
            }
        }
    }

    fn blocks(&self) -> Vec<(u64, u64)> {
        let total = 1u64 << self.variables();
        (0..total.div_ceil(BLOCK))
            .map(|b| (b * BLOCK, ((b + 1) * BLOCK).min(total)))
            .collect()
    }

    /// Exact pmf of the number of compromised generation-`k` nodes.
    pub fn exact_path_count_law(&self, mode: SimMode) -> Vec<f64> {
        let leaves = self.variables() - self.leaf_start;
        match mode {
            SimMode::IndependentPaths => {
                let path_prob = match self.coupling {
                    None => self.level_probs.iter().product(),
                    Some(c) => {
                        let mut probs = self.level_probs.clone();
                        probs[1] = c.latent_prob * c.open_if_latent + (1.0 - c.latent_prob) * c.open_otherwise;
                        probs.iter().product()
                    }
                };
                bernoulli_sum_pmf(leaves, path_prob)
            }
            SimMode::SharedEdges => {
                let leaf_mask = ((1u64 << leaves) - 1) << self.leaf_start;
                let partials: Vec<Vec<f64>> = self
                    .blocks()
                    .into_par_iter()
                    .map(|(lo, hi)| {
                        let mut pmf = vec![0.0; leaves + 1];
                        self.for_each_outcome(lo, hi, |nodes, p| {
                            pmf[(nodes & leaf_mask).count_ones() as usize] += p;
                        });
                        pmf
                    })
                    .collect();
                sum_in_order(partials, leaves + 1)
            }
        }
    }

    /// Exact joint distribution of node compromise states, indexed by bitmask.
    pub fn node_joint(&self) -> Result<Vec<f64>> {
        let n = self.variables();
        if n > MAX_FACTORIZATION_NODES {
            return Err(Error::ResourceLimit(format!(
                "node joint over {n} nodes exceeds {MAX_FACTORIZATION_NODES}"
            )));
        }
        let partials: Vec<Vec<f64>> = self
            .blocks()
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut joint = vec![0.0; 1 << n];
                self.for_each_outcome(lo, hi, |nodes, p| joint[nodes as usize] += p);
                joint
            })
            .collect();
        Ok(sum_in_order(partials, 1 << n))
    }
}

fn sum_in_order(partials: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    partials.into_iter().fold(vec![0.0; len], |mut acc, part| {
        acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
        acc
    })
}

/// Pmf of a sum of `trials` independent Bernoulli(`p`) variables, built by
/// repeated convolution.
pub fn bernoulli_sum_pmf(trials: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for _ in 0..trials {
        let mut next = vec![0.0; pmf.len() + 1];
        for (n, &mass) in pmf.iter().enumerate() {
            next[n] += mass * (1.0 - p);
            next[n + 1] += mass * p;
        }
        pmf = next;
    }
    pmf
}

/// Mean and variance of a pmf on `0..len`.
pub fn pmf_moments(pmf: &[f64]) -> MomentPair {
    let mean: f64 = pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let variance = pmf
        .iter()
        .enumerate()
        .map(|(n, p)| (n as f64 - mean).powi(2) * p)
        .sum();
    MomentPair::new(mean, variance)
}

/// Total-variation distance between two pmfs (missing entries count as 0).
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(a, i) - at(b, i)).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationReport {
    /// Largest `|P(a, b | s) − P(a | s) P(b | s)|` over sibling pairs given
    /// their parent's state.
    pub conditional_independence_residual: f64,
    /// Largest `|P(e) − ∏_x P(e_x | e_pa(x))|` over all node configurations.
    pub factorization_residual: f64,
    pub tolerance: f64,
}

impl FactorizationReport {
    pub fn passed(&self) -> bool {
        self.conditional_independence_residual < self.tolerance && self.factorization_residual < self.tolerance
    }
}

/// Checks sibling conditional independence and the parent-conditional
/// factorization of the node-state joint.
pub fn factorization_check(enumeration: &EdgeStateEnumeration) -> Result<FactorizationReport> {
    let joint = enumeration.node_joint()?;
    let n = enumeration.variables();
    let bit = |mask: usize, i: usize| mask >> i & 1;

    // Marginal over an arbitrary set of nodes, keyed by their packed states.
    let marginal = |nodes: &[usize]| {
        let mut m = vec![0.0; 1 << nodes.len()];
        for (mask, &p) in joint.iter().enumerate() {
            let key = nodes.iter().enumerate().fold(0, |k, (j, &x)| k | bit(mask, x) << j);
            m[key] += p;
        }
        m
    };
    let conditional = |table: &[f64], parent_table: &[f64], key: usize, parent_key: usize| {
        if parent_table[parent_key] > 0.0 {
            table[key] / parent_table[parent_key]
        } else {
            0.0
        }
    };

    let mut ci_residual: f64 = 0.0;
    for parent in 0..n {
        let children: Vec<usize> = (1..n).filter(|&c| enumeration.parent(c) == parent).collect();
        let parent_m = marginal(&[parent]);
        for (i, &a) in children.iter().enumerate() {
            for &b in &children[i + 1..] {
                let trio = marginal(&[parent, a, b]);
                let with_a = marginal(&[parent, a]);
                let with_b = marginal(&[parent, b]);
                for s in 0..2 {
                    if parent_m[s] == 0.0 {
                        continue;
                    }
                    for va in 0..2 {
                        for vb in 0..2 {
                            let joint_ab = trio[s | va << 1 | vb << 2] / parent_m[s];
                            let pa = with_a[s | va << 1] / parent_m[s];
                            let pb = with_b[s | vb << 1] / parent_m[s];
                            ci_residual = ci_residual.max((joint_ab - pa * pb).abs());
                        }
                    }
                }
            }
        }
    }

    // Per-node conditional tables P(W_x | W_pa(x)).
    let root = marginal(&[0]);
    let family: Vec<(Vec<f64>, Vec<f64>)> = (1..n)
        .map(|x| {
            let p = enumeration.parent(x);
            (marginal(&[p, x]), marginal(&[p]))
        })
        .collect();
    let mut fact_residual: f64 = 0.0;
    for (mask, &p) in joint.iter().enumerate() {
        let mut product = root[bit(mask, 0)];
        for x in 1..n {
            let parent = enumeration.parent(x);
            let (pair, single) = &family[x - 1];
            let parent_state = bit(mask, parent);
            product *= conditional(pair, single, parent_state | bit(mask, x) << 1, parent_state);
        }
        fact_residual = fact_residual.max((p - product).abs());
    }

    Ok(FactorizationReport {
        conditional_independence_residual: ci_residual,
        factorization_residual: fact_residual,
        tolerance: FACTORIZATION_TOLERANCE,
    })
}

/// Expected number of compromised paths from the root, averaged over random
/// profiles `c_l = scale · u_l` with `u_l` i.i.d. uniform on (0, 1):
/// `ρ^k ∏_{l=0}^{k} ∫_0^1 H̄(scale · u / β_l) du`.
pub fn expected_count_over_profiles(
    scale: f64,
    depth: usize,
    branching: u32,
    severity: &SeverityModel,
    decay: &DecayProfile,
) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    let paths = path_count(branching, depth)? as f64;
    let mut product = 1.0;
    for l in 0..=depth {
        let beta = decay.coefficient(l)?;
        product *= integrate(|u| severity.survival(scale * u / beta), 0.0, 1.0, 1e-11);
    }
    Ok(paths * product)
}

/// Same average estimated by drawing `profiles` seeded scaled-uniform
/// profiles and evaluating `ρ^k P_0^(k)` on each. Returns `(mean, std error)`.
pub fn average_count_over_sampled_profiles(
    scale: f64,
    depth: usize,
    branching: u32,
    severity: &SeverityModel,
    decay: &DecayProfile,
    profiles: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if profiles < 2 {
        return Err(Error::InvalidParameter("need at least two profiles".into()));
    }
    let paths = path_count(branching, depth)? as f64;
    let kind = ProfileKind::ScaledUniform { scale };
    let values = (0..profiles)
        .into_par_iter()
        .map(|i| {
            let profile = SecurityProfile::build(&kind, depth, seed.wrapping_add(i))?;
            let model = RiskModel::new(TreeSpec::new(branching, profile)?, decay.clone(), *severity);
            Ok(paths * path_contagion_prob(&model, model.scenario(0, depth)?)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}
