//! Regular tree geometry, per-layer security levels, hop decay and scenarios.

use std::fmt;

use rand::Rng;
use rand_distr::Open01;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Stream id reserved for profile draws so they never collide with
/// replication streams (which count up from zero).
const PROFILE_STREAM_ID: u64 = u64::MAX;

/// How a [`SecurityProfile`] is generated.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// Levels given verbatim; length must be `radius + 1`.
    Explicit(Vec<f64>),
    /// `c_r = scale * u_r` with `u_r` i.i.d. uniform on (0, 1).
    ScaledUniform { scale: f64 },
    /// `c_r = base * ratio^r`.
    Geometric { base: f64, ratio: f64 },
}

/// Record of how a built profile was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Explicit,
    ScaledUniform { scale: f64, seed: u64 },
    Geometric { base: f64, ratio: f64 },
}

/// Security level per distance from the root, `c_0..=c_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityProfile {
    levels: Vec<f64>,
    provenance: Provenance,
}

impl SecurityProfile {
    /// Builds a profile for a tree of the given radius. `seed` is only
    /// consumed by [`ProfileKind::ScaledUniform`].
    pub fn build(kind: &ProfileKind, radius: usize, seed: u64) -> Result<Self> {
        let len = radius + 1;
        let (levels, provenance) = match *kind {
            ProfileKind::Explicit(ref levels) => {
                if levels.len() != len {
                    return Err(Error::InvalidParameter(format!(
                        "explicit profile has {} levels, radius {radius} needs {len}",
                        levels.len()
                    )));
                }
                (levels.clone(), Provenance::Explicit)
            }
            ProfileKind::ScaledUniform { scale } => {
                check_positive("uniform profile scale", scale)?;
                let mut rng = RngStream::new(seed, PROFILE_STREAM_ID).rng();
                let levels = (0..len)
                    .map(|_| scale * rng.sample::<f64, _>(Open01))
                    .collect();
                (levels, Provenance::ScaledUniform { scale, seed })
            }
            ProfileKind::Geometric { base, ratio } => {
                check_positive("geometric profile base", base)?;
                check_positive("geometric profile ratio", ratio)?;
                let levels = (0..len).map(|r| base * ratio.powi(r as i32)).collect();
                (levels, Provenance::Geometric { base, ratio })
            }
        };
        Self::with_provenance(levels, provenance)
    }

    /// Explicit profile from a slice of levels.
    pub fn explicit(levels: &[f64]) -> Result<Self> {
        Self::with_provenance(levels.to_vec(), Provenance::Explicit)
    }

    fn with_provenance(levels: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("security profile is empty".into()));
        }
        if let Some((r, c)) = levels.iter().enumerate().find(|(_, c)| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "security level c[{r}] = {c} must be positive and finite"
            )));
        }
        Ok(Self { levels, provenance })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level(&self, r: usize) -> Option<f64> {
        self.levels.get(r).copied()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Radius implied by the profile length.
    pub fn radius(&self) -> usize {
        self.levels.len() - 1
    }
}

fn check_positive(what: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be positive and finite, got {value}")))
    }
}

/// Attenuation of the risk size with propagation depth; `β_0 = 1` always.
#[derive(Debug, Clone, PartialEq)]
pub enum DecayProfile {
    /// `β_l = base^l`.
    Geometric { base: f64 },
    /// `β_0..=β_m` given verbatim.
    Explicit(Vec<f64>),
}

impl DecayProfile {
    pub fn geometric(base: f64) -> Result<Self> {
        if !(base > 0.0 && base <= 1.0) {
            return Err(Error::InvalidParameter(format!("decay base must lie in (0, 1], got {base}")));
        }
        Ok(Self::Geometric { base })
    }

    pub fn explicit(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.first() != Some(&1.0) {
            return Err(Error::InvalidParameter("explicit decay must start with β_0 = 1".into()));
        }
        if let Some(b) = coefficients.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
            return Err(Error::InvalidParameter(format!("decay coefficient {b} outside (0, 1]")));
        }
        Ok(Self::Explicit(coefficients))
    }

    /// `β_l`.
    pub fn coefficient(&self, l: usize) -> Result<f64> {
        match self {
            DecayProfile::Geometric { base } => Ok(base.powi(l as i32)),
            DecayProfile::Explicit(coefficients) => coefficients.get(l).copied().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "explicit decay defines {} coefficients, depth {l} requested",
                    coefficients.len()
                ))
            }),
        }
    }
}

impl fmt::Display for DecayProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayProfile::Geometric { base } => write!(f, "geometric({base})"),
            DecayProfile::Explicit(coefficients) => {
                write!(f, "explicit [")?;
                for (i, b) in coefficients.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{b}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Regular tree with branching factor `ρ`, radius `R` and one security level
/// per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec {
    branching: u32,
    profile: SecurityProfile,
}

impl TreeSpec {
    pub fn new(branching: u32, profile: SecurityProfile) -> Result<Self> {
        if branching == 0 {
            return Err(Error::InvalidParameter("branching factor must be at least 1".into()));
        }
        Ok(Self { branching, profile })
    }

    pub fn branching(&self) -> u32 {
        self.branching
    }

    pub fn radius(&self) -> usize {
        self.profile.radius()
    }

    pub fn profile(&self) -> &SecurityProfile {
        &self.profile
    }

    /// Number of paths `ρ^k` from any node to its generation-`k` descendants.
    pub fn path_count(&self, depth: usize) -> Result<u64> {
        path_count(self.branching, depth)
    }
}

pub(crate) fn path_count(branching: u32, depth: usize) -> Result<u64> {
    u32::try_from(depth)
        .ok()
        .and_then(|k| u64::from(branching).checked_pow(k))
        .ok_or_else(|| {
            Error::ResourceLimit(format!("{branching}^{depth} paths overflows a 64-bit count"))
        })
}

/// Origin distance `r` from the root and contagion depth `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scenario {
    origin: usize,
    depth: usize,
}

impl Scenario {
    /// Validates `origin + depth <= radius`.
    pub fn new(origin: usize, depth: usize, radius: usize) -> Result<Self> {
        if origin.checked_add(depth).is_none_or(|end| end > radius) {
            return Err(Error::OutOfRange { origin, depth, radius });
        }
        Ok(Self { origin, depth })
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Distance from the root of the last node on each path, `r + k`.
    pub fn last_layer(&self) -> usize {
        self.origin + self.depth
    }
}

/// Per-hop thresholds `d_l = c_{r+l} / β_l` for `l = 0..=k`.
pub fn thresholds(scenario: Scenario, profile: &SecurityProfile, decay: &DecayProfile) -> Result<Vec<f64>> {
    if scenario.last_layer() > profile.radius() {
        return Err(Error::OutOfRange {
            origin: scenario.origin,
            depth: scenario.depth,
            radius: profile.radius(),
        });
    }
    (0..=scenario.depth)
        .map(|l| Ok(profile.levels[scenario.origin + l] / decay.coefficient(l)?))
        .collect()
}
