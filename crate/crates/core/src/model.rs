use crate::error::Result;
use crate::network::{self, DecayProfile, Scenario, TreeSpec};
use crate::severity::SeverityModel;

/// Everything an analytic or simulated query needs besides the scenario:
/// tree geometry with its security profile, hop decay and risk size.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskModel {
    pub tree: TreeSpec,
    pub decay: DecayProfile,
    pub severity: SeverityModel,
}

impl RiskModel {
    pub fn new(tree: TreeSpec, decay: DecayProfile, severity: SeverityModel) -> Self {
        Self { tree, decay, severity }
    }

    /// Scenario validated against this tree's radius.
    pub fn scenario(&self, origin: usize, depth: usize) -> Result<Scenario> {
        Scenario::new(origin, depth, self.tree.radius())
    }

    pub fn thresholds(&self, scenario: Scenario) -> Result<Vec<f64>> {
        network::thresholds(scenario, self.tree.profile(), &self.decay)
    }

    /// `β_k · c_{r+k}`, the factor scaling `X` into the per-path loss.
    pub fn loss_scale(&self, scenario: Scenario) -> Result<f64> {
        let beta = self.decay.coefficient(scenario.depth())?;
        let level = self.tree.profile().level(scenario.last_layer()).ok_or(
            crate::Error::OutOfRange {
                origin: scenario.origin(),
                depth: scenario.depth(),
                radius: self.tree.radius(),
            },
        )?;
        Ok(beta * level)
    }
}
