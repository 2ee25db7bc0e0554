//! Closed-form moments of the per-path loss `Z`, the local loss `S` of one
//! attack and the aggregate loss `L_t` over a Poisson stream of attacks,
//! plus the premium principles priced on top of them.

use std::fmt;

use crate::contagion::{path_contagion_prob, PathCountLaw};
use crate::error::{Error, Result};
use crate::model::RiskModel;
use crate::network::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

impl MomentPair {
    pub fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }

    /// `E[Y²] = Var[Y] + E[Y]²`.
    pub fn second_moment(&self) -> f64 {
        self.variance + self.mean * self.mean
    }
}

/// Homogeneous Poisson arrivals of external attacks with intensity `μ`,
/// observed over `[0, t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalProcess {
    intensity: f64,
    horizon: f64,
}

impl ArrivalProcess {
    pub fn new(intensity: f64, horizon: f64) -> Result<Self> {
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(Error::InvalidParameter(format!("intensity must be positive, got {intensity}")));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be non-negative, got {horizon}")));
        }
        Ok(Self { intensity, horizon })
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `E[N_t] = Var[N_t] = μt`.
    pub fn expected_count(&self) -> f64 {
        self.intensity * self.horizon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PremiumPrinciple {
    ExpectedValue,
    /// `E[L] + δ·sd(L)`.
    StandardDeviation(f64),
}

impl fmt::Display for PremiumPrinciple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PremiumPrinciple::ExpectedValue => write!(f, "expected"),
            PremiumPrinciple::StandardDeviation(delta) => write!(f, "stddev({delta})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PremiumQuote {
    pub principle: PremiumPrinciple,
    pub premium: f64,
}

/// Moments of the loss on a single compromised path, `Z = β_k c_{r+k} X`.
pub fn path_loss_moments(model: &RiskModel, scenario: Scenario) -> Result<MomentPair> {
    let scale = model.loss_scale(scenario)?;
    let (mu, var) = model.severity.moments();
    Ok(MomentPair::new(scale * mu, scale * scale * var))
}

/// Moments of the local loss `S = Σ_{j=1}^{U} Z_j` caused by one origin:
/// `E[S] = ρ^k P β_k c_{r+k} μ_X` and
/// `Var[S] = ρ^k P β_k² c_{r+k}² (σ_X² + (1 − P) μ_X²)`.
pub fn local_loss_moments(model: &RiskModel, scenario: Scenario) -> Result<MomentPair> {
    let paths = model.tree.path_count(scenario.depth())? as f64;
    let p = path_contagion_prob(model, scenario)?.value;
    let scale = model.loss_scale(scenario)?;
    let (mu, var) = model.severity.moments();
    let expected_paths = paths * p;
    Ok(MomentPair::new(
        expected_paths * scale * mu,
        expected_paths * scale * scale * (var + (1.0 - p) * mu * mu),
    ))
}

/// Moments of `L_t`, the compound-Poisson sum of local losses up to `t`.
pub fn aggregate_loss_moments(model: &RiskModel, scenario: Scenario, arrivals: ArrivalProcess) -> Result<MomentPair> {
    let local = local_loss_moments(model, scenario)?;
    Ok(compound_poisson(local, arrivals))
}

/// `E[L] = μt E[S]`, `Var[L] = μt E[S²]`.
pub fn compound_poisson(local: MomentPair, arrivals: ArrivalProcess) -> MomentPair {
    let rate = arrivals.expected_count();
    MomentPair::new(rate * local.mean, rate * local.second_moment())
}

/// Moments of `U` for the scenario.
pub fn path_count_moments(model: &RiskModel, scenario: Scenario) -> Result<MomentPair> {
    Ok(PathCountLaw::for_scenario(model, scenario)?.moments())
}

pub fn premium(moments: MomentPair, principle: PremiumPrinciple) -> Result<PremiumQuote> {
    if moments.variance < 0.0 || moments.variance.is_nan() {
        return Err(Error::Inconsistent(format!("negative loss variance {}", moments.variance)));
    }
    let premium = match principle {
        PremiumPrinciple::ExpectedValue => moments.mean,
        PremiumPrinciple::StandardDeviation(delta) => {
            if !(delta >= 0.0 && delta.is_finite()) {
                return Err(Error::InvalidParameter(format!("loading δ must be non-negative, got {delta}")));
            }
            moments.mean + delta * moments.variance.sqrt()
        }
    };
    Ok(PremiumQuote { principle, premium })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{DecayProfile, SecurityProfile, TreeSpec};
    use crate::severity::SeverityModel;

    fn model(branching: u32, levels: &[f64], base: f64, severity: SeverityModel) -> RiskModel {
        RiskModel::new(
            TreeSpec::new(branching, SecurityProfile::explicit(levels).unwrap()).unwrap(),
            DecayProfile::geometric(base).unwrap(),
            severity,
        )
    }

    fn ga51() -> SeverityModel {
        SeverityModel::gamma(5.0, 1.0).unwrap()
    }

    #[test]
    fn path_loss_identity_scaling() {
        let m = model(2, &[1.0, 1.0], 1.0, ga51());
        let z = path_loss_moments(&m, m.scenario(0, 1).unwrap()).unwrap();
        assert_eq!((z.mean, z.variance), (5.0, 5.0));
    }

    #[test]
    fn path_loss_decayed() {
        let m = model(2, &[3.0; 4], 0.95, ga51());
        let z = path_loss_moments(&m, m.scenario(0, 3).unwrap()).unwrap();
        assert!((z.mean - 12.860625).abs() < 1e-12);
    }

    #[test]
    fn local_loss_without_contagion() {
        let m = model(2, &[1e300, 1.0], 0.95, ga51());
        let s = local_loss_moments(&m, m.scenario(0, 1).unwrap()).unwrap();
        assert_eq!((s.mean, s.variance), (0.0, 0.0));
    }

    #[test]
    fn local_loss_single_sure_path() {
        // thresholds far below the support make every hop succeed
        let m = model(1, &[1e-9, 1e-9], 0.5, SeverityModel::normal(50.0, 1.0).unwrap());
        let s = local_loss_moments(&m, m.scenario(0, 1).unwrap()).unwrap();
        let z = path_loss_moments(&m, m.scenario(0, 1).unwrap()).unwrap();
        assert!((s.mean - z.mean).abs() <= 1e-12 * z.mean);
        assert!((s.variance - z.variance).abs() <= 1e-12 * z.variance);
    }

    #[test]
    fn local_and_aggregate_example() {
        let m = model(2, &[5.0, 5.0, 5.0], 0.95, ga51());
        let scenario = m.scenario(0, 1).unwrap();
        let s = local_loss_moments(&m, scenario).unwrap();
        assert!((s.mean - 8.277).abs() < 5e-4);
        let arrivals = ArrivalProcess::new(1.5, 1.0).unwrap();
        let l = aggregate_loss_moments(&m, scenario, arrivals).unwrap();
        assert!((l.mean - 12.416).abs() < 5e-4);
        assert_eq!(l.variance, 1.5 * (s.variance + s.mean * s.mean));
    }

    #[test]
    fn empty_horizon() {
        let m = model(2, &[5.0, 5.0], 0.95, ga51());
        let l = aggregate_loss_moments(&m, m.scenario(0, 1).unwrap(), ArrivalProcess::new(1.5, 0.0).unwrap()).unwrap();
        assert_eq!((l.mean, l.variance), (0.0, 0.0));
    }

    #[test]
    fn arrival_validation() {
        assert!(ArrivalProcess::new(0.0, 1.0).is_err());
        assert!(ArrivalProcess::new(1.0, -1.0).is_err());
        assert!(ArrivalProcess::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn premium_examples() {
        let m = MomentPair::new(100.0, 400.0);
        assert_eq!(premium(m, PremiumPrinciple::ExpectedValue).unwrap().premium, 100.0);
        assert_eq!(premium(m, PremiumPrinciple::StandardDeviation(0.1)).unwrap().premium, 102.0);
        assert_eq!(premium(m, PremiumPrinciple::StandardDeviation(0.0)).unwrap().premium, 100.0);
        assert!(matches!(
            premium(MomentPair::new(1.0, -1.0), PremiumPrinciple::ExpectedValue),
            Err(Error::Inconsistent(_))
        ));
        assert!(premium(m, PremiumPrinciple::StandardDeviation(-0.1)).is_err());
    }

    #[test]
    fn principle_display() {
        assert_eq!(PremiumPrinciple::ExpectedValue.to_string(), "expected");
        assert_eq!(PremiumPrinciple::StandardDeviation(0.1).to_string(), "stddev(0.1)");
    }
}
