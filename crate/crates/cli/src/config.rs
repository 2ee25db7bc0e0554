//! Key-value run configuration.
//!
//! One `key = value` per line, `#` starts a comment. List-valued keys take
//! comma-separated items; integer lists also accept inclusive ranges `a..b`.
//!
//! ```text
//! rho = 2
//! radius = 30
//! profile = uniform(2), uniform(3), uniform(4)
//! decay = geometric(0.95)
//! severity = gamma(5, 1)
//! intensity = 1.5
//! horizon = 1
//! r = 0
//! k = 1..10
//! principle = expected, stddev(0.1)
//! seed = 7
//! ```

use std::fmt::{self, Write as _};
use std::path::PathBuf;

use treerisk_core::{DecayProfile, HopDraw, PremiumPrinciple, ProfileKind, SecurityProfile, SeverityModel, SimMode};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_REPLICATIONS: u64 = 100_000;

/// A security profile recipe. Uniform profiles without their own seed use
/// the run seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    pub seed: Option<u64>,
}

impl ProfileSpec {
    pub fn uniform(scale: f64) -> Self {
        Self {
            kind: ProfileKind::ScaledUniform { scale },
            seed: None,
        }
    }

    /// Seed actually used to draw this profile, if it is random.
    pub fn effective_seed(&self, run_seed: u64) -> Option<u64> {
        match self.kind {
            ProfileKind::ScaledUniform { .. } => Some(self.seed.unwrap_or(run_seed)),
            _ => None,
        }
    }

    pub fn build(&self, radius: usize, run_seed: u64) -> treerisk_core::Result<SecurityProfile> {
        SecurityProfile::build(&self.kind, radius, self.seed.unwrap_or(run_seed))
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.kind, self.seed) {
            (ProfileKind::ScaledUniform { scale }, None) => write!(f, "uniform({scale})"),
            (ProfileKind::ScaledUniform { scale }, Some(seed)) => write!(f, "uniform({scale}, {seed})"),
            (ProfileKind::Geometric { base, ratio }, _) => write!(f, "geometric({base}, {ratio})"),
            (ProfileKind::Explicit(levels), _) => {
                f.write_str("explicit [")?;
                write_joined(f, levels)?;
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub branching: u32,
    pub radius: usize,
    pub profiles: Vec<ProfileSpec>,
    pub decay: DecayProfile,
    pub severities: Vec<SeverityModel>,
    pub intensity: f64,
    pub horizon: f64,
    pub origins: Vec<usize>,
    pub depths: Vec<usize>,
    pub principles: Vec<PremiumPrinciple>,
    pub seed: u64,
    pub replications: u64,
    pub mode: SimMode,
    pub hop_draw: HopDraw,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            branching: 2,
            radius: 30,
            profiles: [2.0, 3.0, 4.0].map(ProfileSpec::uniform).to_vec(),
            decay: DecayProfile::Geometric { base: 0.95 },
            severities: vec![SeverityModel::gamma(5.0, 1.0).expect("valid default severity")],
            intensity: 1.5,
            horizon: 1.0,
            origins: vec![0],
            depths: (1..=10).collect(),
            principles: vec![PremiumPrinciple::ExpectedValue, PremiumPrinciple::StandardDeviation(0.1)],
            seed: DEFAULT_SEED,
            replications: DEFAULT_REPLICATIONS,
            mode: SimMode::IndependentPaths,
            hop_draw: HopDraw::Bernoulli,
            out: None,
        }
    }
}

const KEYS: [&str; 15] = [
    "rho",
    "radius",
    "profile",
    "decay",
    "severity",
    "intensity",
    "horizon",
    "r",
    "k",
    "principle",
    "seed",
    "reps",
    "mode",
    "hop",
    "out",
];

impl RunConfig {
    /// Parses a config, starting from the defaults for keys that are absent.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen: Vec<(&str, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CliError::config(Some(line), None, format!("expected `key = value`, got `{content}`")));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::config(
                    Some(line),
                    Some(key),
                    format!("unknown key; expected one of {}", KEYS.join(", ")),
                ));
            }
            if let Some((_, first)) = seen.iter().find(|(k, _)| *k == key) {
                return Err(CliError::config(Some(line), Some(key), format!("duplicate key (first set on line {first})")));
            }
            seen.push((key, line));
            cfg.set(key, value).map_err(|msg| CliError::config(Some(line), Some(key), msg))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "rho" => {
                self.branching = parse_int(value)?;
                if self.branching == 0 {
                    return Err("branching factor must be at least 1".into());
                }
            }
            "radius" => self.radius = parse_int(value)?,
            "profile" => self.profiles = split_items(value)?.into_iter().map(parse_profile).collect::<Result<_, _>>()?,
            "decay" => self.decay = parse_decay(value)?,
            "severity" => {
                self.severities = split_items(value)?.into_iter().map(parse_severity).collect::<Result<_, _>>()?
            }
            "intensity" => self.intensity = parse_float(value)?,
            "horizon" => self.horizon = parse_float(value)?,
            "r" => self.origins = parse_int_list(value)?,
            "k" => self.depths = parse_int_list(value)?,
            "principle" => {
                self.principles = split_items(value)?.into_iter().map(parse_principle).collect::<Result<_, _>>()?
            }
            "seed" => self.seed = parse_int(value)?,
            "reps" => self.replications = parse_int(value)?,
            "mode" => self.mode = parse_mode(value)?,
            "hop" => self.hop_draw = parse_hop(value)?,
            "out" => self.out = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            _ => unreachable!("keys are checked before dispatch"),
        }
        Ok(())
    }

    /// Checks every parameter that later computation depends on.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: String| Err(CliError::config(None, Some(key), msg));
        if self.branching == 0 {
            return bad("rho", "branching factor must be at least 1".into());
        }
        if self.profiles.is_empty() {
            return bad("profile", "at least one profile is required".into());
        }
        for spec in &self.profiles {
            if let ProfileKind::Explicit(levels) = &spec.kind {
                if levels.len() != self.radius + 1 {
                    return bad(
                        "profile",
                        format!("explicit profile has {} levels, radius {} needs {}", levels.len(), self.radius, self.radius + 1),
                    );
                }
            }
            spec.build(self.radius, self.seed)
                .map_err(|e| CliError::config(None, Some("profile"), e.to_string()))?;
        }
        if self.severities.is_empty() {
            return bad("severity", "at least one severity is required".into());
        }
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return bad("intensity", format!("must be positive and finite, got {}", self.intensity));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return bad("horizon", format!("must be non-negative and finite, got {}", self.horizon));
        }
        if let Some(r) = self.origins.iter().find(|&&r| r > self.radius) {
            return bad("r", format!("origin {r} lies beyond radius {}", self.radius));
        }
        if self.principles.is_empty() {
            return bad("principle", "at least one principle is required".into());
        }
        for p in &self.principles {
            if let PremiumPrinciple::StandardDeviation(delta) = p {
                if !(*delta >= 0.0 && delta.is_finite()) {
                    return bad("principle", format!("loading must be non-negative, got {delta}"));
                }
            }
        }
        if self.replications == 0 {
            return bad("reps", "need at least one replication".into());
        }
        Ok(())
    }

    /// Canonical text form; `parse(&cfg.to_canonical())` gives back `cfg`.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        let joined = |items: Vec<String>| items.join(", ");
        let _ = writeln!(s, "rho = {}", self.branching);
        let _ = writeln!(s, "radius = {}", self.radius);
        let _ = writeln!(s, "profile = {}", joined(self.profiles.iter().map(ToString::to_string).collect()));
        let _ = writeln!(s, "decay = {}", self.decay);
        let _ = writeln!(s, "severity = {}", joined(self.severities.iter().map(ToString::to_string).collect()));
        let _ = writeln!(s, "intensity = {}", self.intensity);
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "r = {}", joined(self.origins.iter().map(ToString::to_string).collect()));
        let _ = writeln!(s, "k = {}", joined(self.depths.iter().map(ToString::to_string).collect()));
        let _ = writeln!(s, "principle = {}", joined(self.principles.iter().map(ToString::to_string).collect()));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "reps = {}", self.replications);
        let _ = writeln!(s, "mode = {}", mode_name(self.mode));
        let _ = writeln!(s, "hop = {}", hop_name(self.hop_draw));
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        s
    }
}

pub fn mode_name(mode: SimMode) -> &'static str {
    match mode {
        SimMode::IndependentPaths => "independent",
        SimMode::SharedEdges => "shared",
    }
}

pub fn hop_name(hop: HopDraw) -> &'static str {
    match hop {
        HopDraw::Bernoulli => "bernoulli",
        HopDraw::SeverityThreshold => "threshold",
    }
}

pub fn parse_mode(value: &str) -> Result<SimMode, String> {
    match value {
        "independent" => Ok(SimMode::IndependentPaths),
        "shared" => Ok(SimMode::SharedEdges),
        _ => Err(format!("mode must be `independent` or `shared`, got `{value}`")),
    }
}

fn parse_hop(value: &str) -> Result<HopDraw, String> {
    match value {
        "bernoulli" => Ok(HopDraw::Bernoulli),
        "threshold" => Ok(HopDraw::SeverityThreshold),
        _ => Err(format!("hop must be `bernoulli` or `threshold`, got `{value}`")),
    }
}

fn write_joined(f: &mut fmt::Formatter<'_>, values: &[f64]) -> fmt::Result {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{v}")?;
    }
    Ok(())
}

fn parse_int<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value.trim().parse().map_err(|_| format!("expected a non-negative integer, got `{value}`"))
}

fn parse_float(value: &str) -> Result<f64, String> {
    let x: f64 = value.trim().parse().map_err(|_| format!("expected a number, got `{value}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got `{value}`"))
    }
}

/// Splits on commas that are not nested inside brackets or parentheses.
fn split_items(value: &str) -> Result<Vec<&str>, String> {
    let mut items = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in value.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(format!("unbalanced `{ch}`"));
                }
            }
            ',' if depth == 0 => {
                items.push(value[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced brackets".into());
    }
    let last = value[start..].trim();
    if !last.is_empty() || !items.is_empty() {
        items.push(last);
    }
    if items.iter().any(|s| s.is_empty()) {
        return Err("empty list item".into());
    }
    Ok(items)
}

fn parse_int_list(value: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in split_items(value)? {
        match item.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi): (usize, usize) = (parse_int(lo)?, parse_int(hi)?);
                if lo > hi {
                    return Err(format!("empty range `{item}`"));
                }
                out.extend(lo..=hi);
            }
            None => out.push(parse_int(item)?),
        }
    }
    Ok(out)
}

/// Splits `name(a, b)` into `("name", ["a", "b"])`.
fn call(item: &str) -> Result<(&str, Vec<&str>), String> {
    let item = item.trim();
    let (name, rest) = item.split_once('(').ok_or_else(|| format!("expected `name(...)`, got `{item}`"))?;
    let args = rest
        .strip_suffix(')')
        .ok_or_else(|| format!("missing `)` in `{item}`"))?;
    let args = if args.trim().is_empty() { Vec::new() } else { args.split(',').map(str::trim).collect() };
    Ok((name.trim(), args))
}

fn explicit_vector(item: &str) -> Option<Result<Vec<f64>, String>> {
    let body = item.trim().strip_prefix("explicit")?.trim();
    let inner = match body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
        Some(inner) => inner,
        None => return Some(Err(format!("expected `explicit [v0, v1, ...]`, got `{item}`"))),
    };
    if inner.trim().is_empty() {
        return Some(Err("explicit vector is empty".into()));
    }
    Some(inner.split(',').map(parse_float).collect())
}

fn arity(name: &str, args: &[&str], allowed: &[usize]) -> Result<(), String> {
    if allowed.contains(&args.len()) {
        Ok(())
    } else {
        Err(format!("`{name}` takes {allowed:?} arguments, got {}", args.len()))
    }
}

fn parse_profile(item: &str) -> Result<ProfileSpec, String> {
    if let Some(levels) = explicit_vector(item) {
        return Ok(ProfileSpec {
            kind: ProfileKind::Explicit(levels?),
            seed: None,
        });
    }
    let (name, args) = call(item)?;
    match name {
        "uniform" => {
            arity(name, &args, &[1, 2])?;
            let scale = parse_float(args[0])?;
            if scale <= 0.0 {
                return Err(format!("uniform scale must be positive, got {scale}"));
            }
            let seed = args.get(1).map(|s| parse_int(s)).transpose()?;
            Ok(ProfileSpec {
                kind: ProfileKind::ScaledUniform { scale },
                seed,
            })
        }
        "geometric" => {
            arity(name, &args, &[2])?;
            Ok(ProfileSpec {
                kind: ProfileKind::Geometric {
                    base: parse_float(args[0])?,
                    ratio: parse_float(args[1])?,
                },
                seed: None,
            })
        }
        _ => Err(format!("unknown profile `{name}`; expected explicit [..], uniform(..) or geometric(..)")),
    }
}

fn parse_decay(item: &str) -> Result<DecayProfile, String> {
    if let Some(coefficients) = explicit_vector(item) {
        return DecayProfile::explicit(coefficients?).map_err(|e| e.to_string());
    }
    let (name, args) = call(item)?;
    match name {
        "geometric" => {
            arity(name, &args, &[1])?;
            DecayProfile::geometric(parse_float(args[0])?).map_err(|e| e.to_string())
        }
        _ => Err(format!("unknown decay `{name}`; expected geometric(b) or explicit [..]")),
    }
}

fn parse_severity(item: &str) -> Result<SeverityModel, String> {
    let (name, args) = call(item)?;
    arity(name, &args, &[2])?;
    let (a, b) = (parse_float(args[0])?, parse_float(args[1])?);
    match name {
        "gamma" => SeverityModel::gamma(a, b),
        "normal" => SeverityModel::normal(a, b),
        _ => return Err(format!("unknown severity `{name}`; expected gamma(shape, rate) or normal(mean, variance)")),
    }
    .map_err(|e| e.to_string())
}

fn parse_principle(item: &str) -> Result<PremiumPrinciple, String> {
    if item.trim() == "expected" {
        return Ok(PremiumPrinciple::ExpectedValue);
    }
    let (name, args) = call(item)?;
    match name {
        "stddev" => {
            arity(name, &args, &[1])?;
            let delta = parse_float(args[0])?;
            if delta < 0.0 {
                return Err(format!("loading must be non-negative, got {delta}"));
            }
            Ok(PremiumPrinciple::StandardDeviation(delta))
        }
        _ => Err(format!("unknown principle `{name}`; expected `expected` or stddev(δ)")),
    }
}
