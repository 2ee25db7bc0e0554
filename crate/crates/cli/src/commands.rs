//! Command implementations. Each returns named tables; nothing here touches
//! the filesystem.

use rand::Rng;
use treerisk_core::simulator::{
    path_count_histogram, simulate_aggregate_loss, simulate_local_loss, simulate_path_count, PathCountSampler,
};
use treerisk_core::special::gamma_q;
use treerisk_core::verifier::{
    average_count_over_sampled_profiles, expected_count_over_profiles, factorization_check, pmf_moments,
    total_variation, EdgeStateEnumeration, SiblingCoupling,
};
use treerisk_core::{
    aggregate_loss_moments, local_loss_moments, origin_compromise_prob, path_contagion_prob, path_count_moments,
    path_loss_moments, premium, ArrivalProcess, Error, PremiumPrinciple, ProfileKind, RiskModel, RngStream, Scenario,
    SecurityProfile, SeverityModel, SimConfig, SimMode, SimResult, TreeSpec,
};

use crate::config::{mode_name, ProfileSpec, RunConfig};
use crate::error::CliError;
use crate::table::{Field, Table};

const SKIPPED: &str = "skipped: r+k exceeds radius";
const VERIFY_PROFILES: u64 = 10_000;

/// A named output table; `name` is the file name used when writing into a
/// directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub name: &'static str,
    pub table: Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Prob,
    Moments,
    Price,
    Simulate,
    Verify,
    Sweep,
    Figures,
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    cfg.validate()?;
    let single = |name, table| Ok(vec![Output { name, table }]);
    match command {
        Command::Prob => single("prob.csv", prob(cfg)?),
        Command::Moments => single("moments.csv", moments(cfg)?),
        Command::Price => single("price.csv", price(cfg)?),
        Command::Simulate => single("simulate.csv", simulate(cfg)?),
        Command::Verify => single("verify.csv", verify(cfg)?),
        Command::Sweep => single("sweep.csv", sweep(cfg)?),
        Command::Figures => figures(cfg),
    }
}

struct Setup {
    profiles: Vec<(ProfileSpec, SecurityProfile)>,
    arrivals: ArrivalProcess,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let profiles = cfg
            .profiles
            .iter()
            .map(|spec| Ok((spec.clone(), spec.build(cfg.radius, cfg.seed)?)))
            .collect::<Result<_, CliError>>()?;
        Ok(Self {
            profiles,
            arrivals: ArrivalProcess::new(cfg.intensity, cfg.horizon)?,
        })
    }

    fn model(&self, cfg: &RunConfig, severity: SeverityModel, profile: usize) -> Result<RiskModel, CliError> {
        let tree = TreeSpec::new(cfg.branching, self.profiles[profile].1.clone())?;
        Ok(RiskModel::new(tree, cfg.decay.clone(), severity))
    }

    fn label(&self, cfg: &RunConfig, severity: SeverityModel, profile: usize) -> Vec<Field> {
        let spec = &self.profiles[profile].0;
        vec![
            Field::text(severity),
            Field::text(spec),
            spec.effective_seed(cfg.seed).into(),
        ]
    }
}

/// `Some(scenario)` when `r + k` fits in the tree.
fn scenario(model: &RiskModel, r: usize, k: usize) -> Result<Option<Scenario>, CliError> {
    match model.scenario(r, k) {
        Ok(s) => Ok(Some(s)),
        Err(Error::OutOfRange { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn skipped_row(mut prefix: Vec<Field>, numeric: usize) -> Vec<Field> {
    prefix.push(Field::text(SKIPPED));
    prefix.extend(std::iter::repeat_n(Field::Empty, numeric));
    prefix
}

/// Visits cells in severity → profile → r → k order.
fn for_each_cell(
    cfg: &RunConfig,
    setup: &Setup,
    depths: &[usize],
    mut visit: impl FnMut(&RiskModel, Vec<Field>, usize, usize, Option<Scenario>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    for &severity in &cfg.severities {
        for profile in 0..setup.profiles.len() {
            let model = setup.model(cfg, severity, profile)?;
            for &r in &cfg.origins {
                for &k in depths {
                    let mut prefix = setup.label(cfg, severity, profile);
                    prefix.extend([Field::Int(r as u64), Field::Int(k as u64)]);
                    visit(&model, prefix, r, k, scenario(&model, r, k)?)?;
                }
            }
        }
    }
    Ok(())
}

const CELL_HEADER: [&str; 5] = ["severity", "profile", "profile_seed", "r", "k"];

fn header(extra: &[&'static str]) -> Vec<&'static str> {
    CELL_HEADER.iter().chain(extra).copied().collect()
}

fn prob(cfg: &RunConfig) -> Result<Table, CliError> {
    let setup = Setup::new(cfg)?;
    let mut table = Table::new(header(&["status", "paths", "probability", "expected_paths"]));
    for_each_cell(cfg, &setup, &cfg.depths, |model, prefix, _, k, scenario| {
        let Some(s) = scenario else {
            table.push(skipped_row(prefix, 3));
            return Ok(());
        };
        let p = path_contagion_prob(model, s)?.value;
        let paths = model.tree.path_count(k)?;
        let mut row = prefix;
        row.extend([Field::text("ok"), Field::Int(paths), Field::Num(p), Field::Num(paths as f64 * p)]);
        table.push(row);
        Ok(())
    })?;
    Ok(table)
}

fn moments(cfg: &RunConfig) -> Result<Table, CliError> {
    let setup = Setup::new(cfg)?;
    let mut table = Table::new(header(&[
        "status",
        "count_mean",
        "count_variance",
        "path_mean",
        "path_variance",
        "local_mean",
        "local_variance",
        "aggregate_mean",
        "aggregate_variance",
    ]));
    for_each_cell(cfg, &setup, &cfg.depths, |model, prefix, _, _, scenario| {
        let Some(s) = scenario else {
            table.push(skipped_row(prefix, 8));
            return Ok(());
        };
        let mut row = prefix;
        row.push(Field::text("ok"));
        for m in [
            path_count_moments(model, s)?,
            path_loss_moments(model, s)?,
            local_loss_moments(model, s)?,
            aggregate_loss_moments(model, s, setup.arrivals)?,
        ] {
            row.extend([Field::Num(m.mean), Field::Num(m.variance)]);
        }
        table.push(row);
        Ok(())
    })?;
    Ok(table)
}

/// Cells in severity → principle → profile → r → k order.
fn priced_cells(
    cfg: &RunConfig,
    setup: &Setup,
    mut visit: impl FnMut(&RiskModel, PremiumPrinciple, Vec<Field>, usize, usize, Option<Scenario>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    for &severity in &cfg.severities {
        for &principle in &cfg.principles {
            for profile in 0..setup.profiles.len() {
                let model = setup.model(cfg, severity, profile)?;
                for &r in &cfg.origins {
                    for &k in &cfg.depths {
                        let label = setup.label(cfg, severity, profile);
                        visit(&model, principle, label, r, k, scenario(&model, r, k)?)?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn price(cfg: &RunConfig) -> Result<Table, CliError> {
    let setup = Setup::new(cfg)?;
    let mut table = Table::new(vec!["k", "r", "principle", "severity", "profile", "profile_seed", "status", "premium"]);
    priced_cells(cfg, &setup, |model, principle, label, r, k, scenario| {
        let mut row = vec![Field::Int(k as u64), Field::Int(r as u64), Field::text(principle)];
        row.extend(label);
        match scenario {
            None => row.extend([Field::text(SKIPPED), Field::Empty]),
            Some(s) => {
                let quote = premium(aggregate_loss_moments(model, s, setup.arrivals)?, principle)?;
                row.extend([Field::text("ok"), Field::Num(quote.premium)]);
            }
        }
        table.push(row);
        Ok(())
    })?;
    Ok(table)
}

fn sweep(cfg: &RunConfig) -> Result<Table, CliError> {
    let setup = Setup::new(cfg)?;
    let mut table = Table::new(vec![
        "severity",
        "principle",
        "profile",
        "profile_seed",
        "r",
        "k",
        "status",
        "probability",
        "count_mean",
        "count_variance",
        "local_mean",
        "local_variance",
        "aggregate_mean",
        "aggregate_variance",
        "premium",
    ]);
    priced_cells(cfg, &setup, |model, principle, label, r, k, scenario| {
        let mut row = vec![label[0].clone(), Field::text(principle), label[1].clone(), label[2].clone()];
        row.extend([Field::Int(r as u64), Field::Int(k as u64)]);
        let Some(s) = scenario else {
            table.push(skipped_row(row, 8));
            return Ok(());
        };
        let count = path_count_moments(model, s)?;
        let local = local_loss_moments(model, s)?;
        let aggregate = aggregate_loss_moments(model, s, setup.arrivals)?;
        row.extend([
            Field::text("ok"),
            Field::Num(path_contagion_prob(model, s)?.value),
            Field::Num(count.mean),
            Field::Num(count.variance),
            Field::Num(local.mean),
            Field::Num(local.variance),
            Field::Num(aggregate.mean),
            Field::Num(aggregate.variance),
            Field::Num(premium(aggregate, principle)?.premium),
        ]);
        table.push(row);
        Ok(())
    })?;
    Ok(table)
}

fn simulate(cfg: &RunConfig) -> Result<Table, CliError> {
    let setup = Setup::new(cfg)?;
    let sim = SimConfig::new(cfg.replications, cfg.mode, cfg.seed)?.with_hop_draw(cfg.hop_draw);
    let mut table = Table::new(header(&[
        "mode",
        "quantity",
        "status",
        "n",
        "mean",
        "variance",
        "std_error",
        "exact_mean",
        "exact_variance",
        "z_score",
    ]));
    for_each_cell(cfg, &setup, &cfg.depths, |model, prefix, _, _, scenario| {
        for quantity in ["count", "local", "aggregate"] {
            let mut row = prefix.clone();
            row.extend([Field::text(mode_name(cfg.mode)), Field::text(quantity)]);
            let Some(s) = scenario else {
                table.push(skipped_row(row, 7));
                continue;
            };
            let (result, exact): (SimResult, _) = match quantity {
                "count" => (simulate_path_count(model, s, &sim)?, path_count_moments(model, s)?),
                "local" => (simulate_local_loss(model, s, &sim)?, local_loss_moments(model, s)?),
                _ => (
                    simulate_aggregate_loss(model, s, setup.arrivals, &sim)?,
                    aggregate_loss_moments(model, s, setup.arrivals)?,
                ),
            };
            row.extend([
                Field::text("ok"),
                Field::Int(result.replications),
                Field::Num(result.mean),
                Field::Num(result.variance),
                Field::Num(result.std_error),
                Field::Num(exact.mean),
                Field::Num(exact.variance),
                Field::finite_or_empty(result.z_score(exact.mean)),
            ]);
            table.push(row);
        }
        Ok(())
    })?;
    Ok(table)
}

fn figures(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let setup = Setup::new(cfg)?;
    let mut depths: Vec<usize> = std::iter::once(0).chain(cfg.depths.iter().copied()).collect();
    depths.sort_unstable();
    depths.dedup();
    let mut probability = Table::new(header(&["status", "probability"]));
    let mut local = Table::new(header(&["status", "local_mean"]));
    for_each_cell(cfg, &setup, &depths, |model, prefix, r, k, scenario| {
        let Some(s) = scenario else {
            probability.push(skipped_row(prefix.clone(), 1));
            local.push(skipped_row(prefix, 1));
            return Ok(());
        };
        let p = if k == 0 { origin_compromise_prob(model, r)? } else { path_contagion_prob(model, s)?.value };
        let mut row = prefix.clone();
        row.extend([Field::text("ok"), Field::Num(p)]);
        probability.push(row);
        let mut row = prefix;
        row.extend([Field::text("ok"), Field::Num(local_loss_moments(model, s)?.mean)]);
        local.push(row);
        Ok(())
    })?;
    Ok(vec![
        Output {
            name: "probability.csv",
            table: probability,
        },
        Output {
            name: "local_loss.csv",
            table: local,
        },
    ])
}

struct Report(Table);

impl Report {
    fn new() -> Self {
        Report(Table::new(vec!["check", "value", "threshold", "status"]))
    }

    fn check(&mut self, name: String, value: f64, threshold: f64, passed: bool) {
        let status = if passed { "pass" } else { "fail" };
        self.0.push(vec![
            Field::Text(name),
            Field::finite_or_empty(value),
            Field::Num(threshold),
            Field::text(status),
        ]);
    }

    /// Passes when `value < threshold`.
    fn below(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.check(name.into(), value, threshold, value < threshold);
    }
}

fn verify(cfg: &RunConfig) -> Result<Table, CliError> {
    let mut report = Report::new();
    let tol = treerisk_core::verifier::FACTORIZATION_TOLERANCE;

    report.below("gamma_survival_q5_at_5", (gamma_q(5.0, 5.0) - 0.4404932850652124).abs(), 1e-10);

    let half = EdgeStateEnumeration::new(2, vec![1.0, 0.5, 0.5])?;
    let shared_law = half.exact_path_count_law(SimMode::SharedEdges);
    let shared = pmf_moments(&shared_law);
    let binomial = pmf_moments(&half.exact_path_count_law(SimMode::IndependentPaths));
    report.below("enumeration_shared_mean_error", (shared.mean - 1.0).abs(), tol);
    report.below("enumeration_shared_variance_error", (shared.variance - 1.0).abs(), tol);
    report.below("enumeration_binomial_variance_error", (binomial.variance - 0.75).abs(), tol);

    let sampler = PathCountSampler::from_hop_probabilities(2, vec![1.0, 0.5, 0.5], SimMode::SharedEdges)?;
    let sim = SimConfig::new(cfg.replications, SimMode::SharedEdges, cfg.seed)?;
    let hist = path_count_histogram(&sampler, &sim)?;
    let empirical: Vec<f64> = hist.iter().map(|&c| c as f64 / cfg.replications as f64).collect();
    report.below("shared_pmf_total_variation", total_variation(&empirical, &shared_law), 0.02);

    let mut rng = RngStream::new(cfg.seed, 0).rng();
    let (mut ci, mut bn) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let q: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let r = factorization_check(&EdgeStateEnumeration::new(2, q)?)?;
        ci = ci.max(r.conditional_independence_residual);
        bn = bn.max(r.factorization_residual);
    }
    report.below("factorization_conditional_independence_residual", ci, tol);
    report.below("factorization_product_residual", bn, tol);
    let coupled = EdgeStateEnumeration::new(2, vec![1.0, 0.5, 0.5])?.with_sibling_coupling(SiblingCoupling {
        latent_prob: 0.5,
        open_if_latent: 0.9,
        open_otherwise: 0.1,
    })?;
    let control = factorization_check(&coupled)?;
    report.check(
        "negative_control_residual".into(),
        control.conditional_independence_residual,
        tol,
        !control.passed(),
    );

    for severity in &cfg.severities {
        for spec in &cfg.profiles {
            let ProfileKind::ScaledUniform { scale } = spec.kind else { continue };
            let quad = expected_count_over_profiles(scale, 1, cfg.branching, severity, &cfg.decay)?;
            let (mean, se) = average_count_over_sampled_profiles(
                scale,
                1,
                cfg.branching,
                severity,
                &cfg.decay,
                VERIFY_PROFILES,
                cfg.seed,
            )?;
            report.below(format!("quadrature_vs_profiles_z {severity} C={scale} k=1"), ((quad - mean) / se).abs(), 3.0);
        }
    }

    let failed = report.0.rows.iter().filter(|r| r[3] == Field::text("fail")).count();
    if failed > 0 {
        return Err(CliError::VerificationFailed { failed, report: report.0 });
    }
    Ok(report.0)
}
