//! Shared fixtures for the criterion benches.

use treerisk_core::{DecayProfile, ProfileKind, RiskModel, SecurityProfile, SeverityModel, TreeSpec};

/// Binary tree of radius 30 with a seeded `C·U(0,1)` profile, `β_l = 0.95^l`
/// and `Ga(5, 1)` risk sizes.
pub fn reference_model(scale: f64, seed: u64) -> RiskModel {
    let profile = SecurityProfile::build(&ProfileKind::ScaledUniform { scale }, 30, seed).expect("valid profile");
    RiskModel::new(
        TreeSpec::new(2, profile).expect("valid tree"),
        DecayProfile::geometric(0.95).expect("valid decay"),
        SeverityModel::gamma(5.0, 1.0).expect("valid severity"),
    )
}
