//! Path-based k-generation contagion probability and the law of the number
//! of fully compromised paths.
//!
//! Each hop `l` of a path succeeds independently with probability
//! `H̄(d_l)`, so a path from an origin at distance `r` is compromised through
//! generation `k` with probability `P = ∏_{l=0}^{k} H̄(c_{r+l} / β_l)`.
//! The `ρ^k` paths below the origin are i.i.d., giving a binomial count.

use crate::error::{Error, Result};
use crate::loss::MomentPair;
use crate::model::RiskModel;
use crate::network::Scenario;
use std::f64::consts::PI;

use crate::special::ln_gamma;

/// `P_r^(k)` together with its per-hop factors `H̄(d_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathProbability {
    pub value: f64,
    /// `ln P`, finite even where `value` underflows to zero.
    pub log_value: f64,
    pub per_hop: Vec<f64>,
}

impl PathProbability {
    /// Probability that the origin itself is compromised, `H̄(c_r)`.
    pub fn origin(&self) -> f64 {
        self.per_hop[0]
    }
}

pub fn path_contagion_prob(model: &RiskModel, scenario: Scenario) -> Result<PathProbability> {
    let per_hop: Vec<f64> = model
        .thresholds(scenario)?
        .into_iter()
        .map(|d| model.severity.survival(d))
        .collect();
    // The plain product keeps `value <= min(per_hop)` exact under rounding;
    // the log sum carries the magnitude when the product underflows.
    let value = per_hop.iter().product();
    let log_value = per_hop.iter().map(|p| p.ln()).sum();
    Ok(PathProbability { value, log_value, per_hop })
}

/// Probability that the origin node is compromised by the external attack.
pub fn origin_compromise_prob(model: &RiskModel, origin: usize) -> Result<f64> {
    Ok(path_contagion_prob(model, model.scenario(origin, 0)?)?.value)
}

/// Binomial law of `U_r^(k)` over `ρ^k` trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCountLaw {
    trials: u64,
    success: f64,
}

impl PathCountLaw {
    pub fn new(trials: u64, success: f64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidParameter("path count law needs at least one trial".into()));
        }
        if !(0.0..=1.0).contains(&success) {
            return Err(Error::InvalidParameter(format!("success probability {success} outside [0, 1]")));
        }
        Ok(Self { trials, success })
    }

    /// Law of compromised paths for a scenario.
    pub fn for_scenario(model: &RiskModel, scenario: Scenario) -> Result<Self> {
        let trials = model.tree.path_count(scenario.depth())?;
        Self::new(trials, path_contagion_prob(model, scenario)?.value)
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn success(&self) -> f64 {
        self.success
    }

    /// `P{U = n}`, evaluated with Loader's saddle-point expansion so each
    /// term keeps near machine relative precision for large `ρ^k`.
    pub fn pmf(&self, n: u64) -> Result<f64> {
        let (trials, p) = (self.trials, self.success);
        if n > trials {
            return Err(Error::InvalidArgument(format!("count {n} outside 0..={trials}")));
        }
        Ok(binomial_pmf(n, trials, p))
    }

    pub fn moments(&self) -> MomentPair {
        let trials = self.trials as f64;
        MomentPair::new(trials * self.success, trials * self.success * (1.0 - self.success))
    }
}

fn binomial_pmf(x: u64, n: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    if p == 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if x == 0 {
        return (nf * (-p).ln_1p()).exp();
    }
    if x == n {
        return (nf * p.ln()).exp();
    }
    let (xf, yf) = (x as f64, (n - x) as f64);
    let lc = stirling_error(nf) - stirling_error(xf) - stirling_error(yf) - deviance(xf, nf * p) - deviance(yf, nf * q);
    let lf = (2.0 * PI).ln() + xf.ln() + (-xf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `ln n! − ln(√(2πn) (n/e)^n)`.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `x ln(x / m) + m − x`, computed without cancellation when `x ≈ m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                break;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{DecayProfile, SecurityProfile, TreeSpec};
    use crate::severity::SeverityModel;

    fn model(levels: &[f64], base: f64) -> RiskModel {
        RiskModel::new(
            TreeSpec::new(2, SecurityProfile::explicit(levels).unwrap()).unwrap(),
            DecayProfile::geometric(base).unwrap(),
            SeverityModel::gamma(5.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn origin_only_equals_survival() {
        let m = model(&[5.0, 5.0, 5.0], 0.95);
        let p = path_contagion_prob(&m, m.scenario(0, 0).unwrap()).unwrap();
        assert!((p.value - 0.440493).abs() < 5e-7);
        assert_eq!(p.per_hop.len(), 1);
        assert_eq!(origin_compromise_prob(&m, 0).unwrap(), p.value);
    }

    #[test]
    fn one_hop_from_root() {
        let m = model(&[5.0, 5.0, 5.0], 0.95);
        let p = path_contagion_prob(&m, m.scenario(0, 1).unwrap()).unwrap();
        // per-hop values 0.440493 and 0.395594, product 0.1742554
        assert!((p.per_hop[0] - 0.440493).abs() < 5e-7);
        assert!((p.per_hop[1] - 0.395592).abs() < 5e-7);
        assert!((p.value - 0.1742554).abs() < 5e-7);
        assert!((p.value - p.per_hop[0] * p.per_hop[1]).abs() < 1e-15);
    }

    #[test]
    fn unreachable_security_gives_zero() {
        let m = model(&[5.0, 1e300, 5.0], 0.95);
        let p = path_contagion_prob(&m, m.scenario(0, 2).unwrap()).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(p.log_value, f64::NEG_INFINITY);
    }

    #[test]
    fn log_value_survives_underflow() {
        let m = model(&[60.0; 31], 1.0);
        let p = path_contagion_prob(&m, m.scenario(0, 30).unwrap()).unwrap();
        assert_eq!(p.value, 0.0);
        let single = m.severity.survival(60.0).ln();
        assert!((p.log_value - 31.0 * single).abs() < 1e-9 * p.log_value.abs());
    }

    #[test]
    fn out_of_range_scenario() {
        let m = model(&[5.0, 5.0], 0.95);
        assert!(m.scenario(1, 1).is_err());
        let foreign = Scenario::new(1, 2, 10).unwrap();
        assert!(matches!(path_contagion_prob(&m, foreign), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn pmf_examples() {
        let law = PathCountLaw::new(4, 0.5).unwrap();
        assert!((law.pmf(2).unwrap() - 0.375).abs() < 1e-15);
        assert!((law.pmf(4).unwrap() - 0.5f64.powi(4)).abs() < 1e-16);
        let dead = PathCountLaw::new(8, 0.0).unwrap();
        assert_eq!(dead.pmf(0).unwrap(), 1.0);
        assert_eq!(dead.pmf(3).unwrap(), 0.0);
        let sure = PathCountLaw::new(8, 1.0).unwrap();
        assert_eq!(sure.pmf(8).unwrap(), 1.0);
        assert_eq!(sure.moments().variance, 0.0);
        assert!(matches!(law.pmf(5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn all_paths_probability() {
        let p: f64 = 0.3;
        let law = PathCountLaw::new(8, p).unwrap();
        assert!((law.pmf(8).unwrap() / p.powi(8) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn moment_examples() {
        let m = PathCountLaw::new(8, 0.25).unwrap().moments();
        assert_eq!((m.mean, m.variance), (2.0, 1.5));
    }

    #[test]
    fn rejects_bad_law() {
        assert!(PathCountLaw::new(0, 0.5).is_err());
        assert!(PathCountLaw::new(2, 1.5).is_err());
        assert!(PathCountLaw::new(2, f64::NAN).is_err());
    }
}
