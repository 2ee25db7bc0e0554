//! Path-based k-generation contagion on regular trees.
//!
//! An external attack of size `X` compromises a node at distance `r` from the
//! root when `X` exceeds the layer's security level `c_r`; from there the
//! attack travels down each of the `ρ^k` paths to generation `k`, hop `l`
//! succeeding when the decayed size `β_l X` exceeds `c_{r+l}`. The crate
//! provides:
//!
//! * [`contagion`]: the per-path probability `P_r^(k)` and the binomial law of
//!   the compromised-path count,
//! * [`loss`]: closed-form moments of per-path, local and compound-Poisson
//!   aggregate losses, and premium principles,
//! * [`simulator`]: a seedable, worker-count-independent Monte Carlo oracle,
//! * [`verifier`]: exact enumeration and quadrature oracles for small cases.

pub mod contagion;
pub mod error;
pub mod loss;
pub mod model;
pub mod network;
pub mod quadrature;
pub mod rng;
pub mod severity;
pub mod simulator;
pub mod special;
pub mod verifier;

pub use contagion::{origin_compromise_prob, path_contagion_prob, PathCountLaw, PathProbability};
pub use error::{Error, Result};
pub use loss::{
    aggregate_loss_moments, local_loss_moments, path_count_moments, path_loss_moments, premium, ArrivalProcess,
    MomentPair, PremiumPrinciple, PremiumQuote,
};
pub use model::RiskModel;
pub use network::{thresholds, DecayProfile, ProfileKind, Provenance, Scenario, SecurityProfile, TreeSpec};
pub use rng::RngStream;
pub use severity::SeverityModel;
pub use simulator::{HopDraw, SimConfig, SimMode, SimResult};
