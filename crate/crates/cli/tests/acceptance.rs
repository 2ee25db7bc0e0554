//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p treerisk-cli --test acceptance`.

use std::path::Path;
use std::process::{Command as Process, ExitCode};
use std::time::Instant;

use rand::Rng;
use treerisk_cli::{run, Command, Field, RunConfig, Table};
use treerisk_core::simulator::{
    path_count_histogram, simulate_aggregate_loss, simulate_local_loss, simulate_path_count, PathCountSampler,
};
use treerisk_core::special::gamma_q;
use treerisk_core::verifier::{
    average_count_over_sampled_profiles, expected_count_over_profiles, factorization_check, pmf_moments,
    total_variation, EdgeStateEnumeration, SiblingCoupling, FACTORIZATION_TOLERANCE,
};
use treerisk_core::{
    aggregate_loss_moments, local_loss_moments, path_count_moments, ArrivalProcess, DecayProfile, PremiumPrinciple,
    ProfileKind, RiskModel, RngStream, SecurityProfile, SeverityModel, SimConfig, SimMode, TreeSpec,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn severities() -> [SeverityModel; 2] {
    [SeverityModel::gamma(5.0, 1.0).unwrap(), SeverityModel::normal(5.0, 4.0).unwrap()]
}

fn decay() -> DecayProfile {
    DecayProfile::geometric(0.95).unwrap()
}

fn model(profile: SecurityProfile, severity: SeverityModel) -> RiskModel {
    RiskModel::new(TreeSpec::new(2, profile).unwrap(), decay(), severity)
}

fn constant_model(severity: SeverityModel) -> RiskModel {
    model(SecurityProfile::explicit(&[5.0; 11]).unwrap(), severity)
}

const PROBE_R: [usize; 3] = [0, 2, 4];
const PROBE_K: [usize; 3] = [1, 3, 5];

fn arrivals() -> ArrivalProcess {
    ArrivalProcess::new(1.5, 1.0).unwrap()
}

fn closed_form_vs_monte_carlo() -> Outcome {
    let (mut worst, mut failures, mut checks) = (0.0f64, Vec::new(), 0u64);
    for severity in severities() {
        let m = constant_model(severity);
        for r in PROBE_R {
            for k in PROBE_K {
                let s = m.scenario(r, k).unwrap();
                let cfg = SimConfig::new(100_000, SimMode::IndependentPaths, 1000 + checks).unwrap();
                let pairs = [
                    ("U", simulate_path_count(&m, s, &cfg), path_count_moments(&m, s)),
                    ("S", simulate_local_loss(&m, s, &cfg), local_loss_moments(&m, s)),
                    ("L", simulate_aggregate_loss(&m, s, arrivals(), &cfg), aggregate_loss_moments(&m, s, arrivals())),
                ];
                for (name, sim, exact) in pairs {
                    let z = sim.map_err(|e| e.to_string())?.z_score(exact.map_err(|e| e.to_string())?.mean);
                    checks += 1;
                    worst = worst.max(z.abs());
                    if z.is_nan() || z.abs() >= 4.0 {
                        failures.push(format!("{severity} r={r} k={k} {name}: z={z:.2}"));
                    }
                }
            }
        }
    }
    check(
        failures.is_empty(),
        format!("{checks} means at n=1e5, max |z| = {worst:.2} (limit 4) {}", failures.join("; ")),
    )
}

fn compound_poisson_identity() -> Outcome {
    let mut worst = 0.0f64;
    for severity in severities() {
        let m = constant_model(severity);
        for r in PROBE_R {
            for k in PROBE_K {
                let s = m.scenario(r, k).unwrap();
                let local = local_loss_moments(&m, s).unwrap();
                let agg = aggregate_loss_moments(&m, s, arrivals()).unwrap();
                let identity = arrivals().expected_count() * (local.variance + local.mean * local.mean);
                worst = worst.max((agg.variance - identity).abs() / identity);
            }
        }
    }
    check(worst <= 1e-12, format!("max relative error {worst:.2e} over 18 scenarios (limit 1e-12)"))
}

fn first_generation_averages_and_ordering() -> Outcome {
    let gamma = severities()[0];
    let mut detail = Vec::new();
    let mut ok = true;
    for (scale, reported) in [(2.0, 2.0), (3.0, 1.9), (4.0, 1.6)] {
        let quad = expected_count_over_profiles(scale, 1, 2, &gamma, &decay()).unwrap();
        let (mean, se) = average_count_over_sampled_profiles(scale, 1, 2, &gamma, &decay(), 10_000, 5).unwrap();
        let within = (quad - reported).abs() <= 0.1;
        let agree = (quad - mean).abs() < 3.0 * se;
        ok &= within && agree;
        detail.push(format!("C={scale}: {quad:.4} vs {reported} (profile avg {mean:.4}±{se:.4})"));
    }
    for k in 1..=5 {
        let v: Vec<f64> = [2.0, 3.0, 4.0]
            .iter()
            .map(|&c| expected_count_over_profiles(c, k, 2, &gamma, &decay()).unwrap())
            .collect();
        if !(v[0] > v[1] && v[1] > v[2]) {
            ok = false;
            detail.push(format!("k={k} not decreasing in C: {v:?}"));
        }
    }
    detail.push("k=1..5 strictly decreasing in C".into());
    check(ok, detail.join(", "))
}

fn farther_origins_compromise_more() -> Outcome {
    let kind = ProfileKind::Geometric { base: 8.0, ratio: 0.9 };
    let profile = SecurityProfile::build(&kind, 30, 0).unwrap();
    let mut violations = Vec::new();
    let mut cells = 0;
    for severity in severities() {
        let m = model(profile.clone(), severity);
        for k in 0..=10 {
            let e: Vec<f64> = [0, 2, 4]
                .iter()
                .map(|&r| path_count_moments(&m, m.scenario(r, k).unwrap()).unwrap().mean)
                .collect();
            cells += 1;
            if !(e[0] < e[1] && e[1] < e[2]) {
                violations.push(format!("{severity} k={k}: {e:?}"));
            }
        }
    }
    check(
        violations.is_empty(),
        format!(
            "geometric(8, 0.9) profile, {cells} (severity, k) cells strictly increasing in r ∈ {{0,2,4}} {}",
            violations.join("; ")
        ),
    )
}

fn number(field: &Field) -> f64 {
    match field {
        Field::Num(x) => *x,
        other => panic!("expected a number, got {other:?}"),
    }
}

fn premium_trends() -> Outcome {
    let cfg = RunConfig {
        severities: severities().to_vec(),
        ..RunConfig::default()
    };
    let outputs = run(Command::Price, &cfg).map_err(|e| e.to_string())?;
    let table: &Table = &outputs[0].table;
    let col = |name| table.column(name).unwrap();
    let (k_col, principle, severity, profile, premium) =
        (col("k"), col("principle"), col("severity"), col("profile"), col("premium"));
    let lookup = |sev: &str, prin: &str, prof: &str, k: u64| {
        table
            .rows
            .iter()
            .find(|row| {
                row[severity] == Field::text(sev)
                    && row[principle] == Field::text(prin)
                    && row[profile] == Field::text(prof)
                    && row[k_col] == Field::Int(k)
            })
            .map(|row| number(&row[premium]))
            .unwrap()
    };

    let sd = PremiumPrinciple::StandardDeviation(0.1).to_string();
    let mut cells = 0;
    for sev in severities().map(|s| s.to_string()) {
        for prof in ["uniform(2)", "uniform(3)", "uniform(4)"] {
            for k in 1..=10 {
                cells += 1;
                if lookup(&sev, &sd, prof, k) < lookup(&sev, "expected", prof, k) {
                    return Err(format!("(a) stddev premium below expected premium at {sev} {prof} k={k}"));
                }
            }
        }
    }

    let gamma = severities()[0].to_string();
    let mut crossings = Vec::new();
    for prin in ["expected".to_string(), sd] {
        let above: Vec<bool> = (1..=10)
            .map(|k| lookup(&gamma, &prin, "uniform(4)", k) > lookup(&gamma, &prin, "uniform(2)", k))
            .collect();
        let Some(first_below) = above.iter().position(|a| !a) else {
            return Err(format!("(b) {prin}: C=4 never drops below C=2"));
        };
        if first_below == 0 || above[first_below..].iter().any(|&a| a) {
            return Err(format!("(b) {prin}: no single crossing, C=4 > C=2 pattern {above:?}"));
        }
        crossings.push(format!("{prin} crosses between k={first_below} and k={}", first_below + 1));
    }
    Ok(format!(
        "(a) stddev ≥ expected in all {cells} cells; (b) Ga(5,1), seed {}: {}",
        cfg.seed,
        crossings.join(", ")
    ))
}

fn exact_enumeration() -> Outcome {
    let e = EdgeStateEnumeration::new(2, vec![1.0, 0.5, 0.5]).unwrap();
    let shared_law = e.exact_path_count_law(SimMode::SharedEdges);
    let shared = pmf_moments(&shared_law);
    let binomial = pmf_moments(&e.exact_path_count_law(SimMode::IndependentPaths));
    let sampler = PathCountSampler::from_hop_probabilities(2, vec![1.0, 0.5, 0.5], SimMode::SharedEdges).unwrap();
    let n = 100_000u64;
    let hist = path_count_histogram(&sampler, &SimConfig::new(n, SimMode::SharedEdges, 6).unwrap()).unwrap();
    let empirical: Vec<f64> = hist.iter().map(|&c| c as f64 / n as f64).collect();
    let tv = total_variation(&empirical, &shared_law);
    let exact_ok = (shared.mean - 1.0).abs() < 1e-12
        && (shared.variance - 1.0).abs() < 1e-12
        && (binomial.mean - 1.0).abs() < 1e-12
        && (binomial.variance - 0.75).abs() < 1e-12;
    check(
        exact_ok && tv < 0.02,
        format!(
            "shared mean {} var {}, binomial mean {} var {}, MC TV {tv:.4} (limit 0.02)",
            shared.mean, shared.variance, binomial.mean, binomial.variance
        ),
    )
}

fn factorization_suite() -> Outcome {
    let mut rng = RngStream::new(77, 0).rng();
    let (mut ci, mut bn) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let q: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let report = factorization_check(&EdgeStateEnumeration::new(2, q).unwrap()).unwrap();
        ci = ci.max(report.conditional_independence_residual);
        bn = bn.max(report.factorization_residual);
    }
    let coupled = EdgeStateEnumeration::new(2, vec![1.0, 0.5, 0.5])
        .unwrap()
        .with_sibling_coupling(SiblingCoupling {
            latent_prob: 0.5,
            open_if_latent: 0.9,
            open_otherwise: 0.1,
        })
        .unwrap();
    let control = factorization_check(&coupled).unwrap();
    check(
        ci < FACTORIZATION_TOLERANCE && bn < FACTORIZATION_TOLERANCE && !control.passed(),
        format!(
            "20 draws: max CI residual {ci:.1e}, max factorization residual {bn:.1e} (limit 1e-12); negative control residual {:.3} fails the check: {}",
            control.conditional_independence_residual,
            !control.passed()
        ),
    )
}

fn gamma_survival_numerics() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/gamma_q_oracle.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut worst = 0.0f64;
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        worst = worst.max((gamma_q(v[0], v[1]) - v[2]).abs());
        rows += 1;
    }
    let mut monotone = true;
    for a in [0.5, 2.0, 5.0, 10.0] {
        let mut prev = 1.0;
        for i in 0..=40_000 {
            let q = gamma_q(a, i as f64 * 0.001);
            monotone &= q <= prev;
            prev = q;
        }
    }
    check(
        rows == 200 && worst <= 1e-10 && monotone,
        format!("{rows} oracle points, max abs error {worst:.1e} (limit 1e-10); monotone on 4×40001 grid: {monotone}"),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("run.cfg");
    std::fs::write(
        &config,
        "severity = gamma(5, 1), normal(5, 4)\nr = 0, 2, 26\nk = 1..6\nreps = 4000\nmode = shared\n",
    )
    .map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_treerisk");
    let mut compared = 0;
    for command in ["prob", "moments", "price", "sweep", "simulate", "verify", "figures"] {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "4"] {
            let out = dir.path().join(format!("{command}-{threads}-{}", outputs.len()));
            let status = Process::new(bin)
                .args([command, "--config"])
                .arg(&config)
                .args(["--seed", "11", "--threads", threads, "--out"])
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("`{command}` exited with {status}"));
            }
            let files = if command == "figures" {
                vec![out.join("probability.csv"), out.join("local_loss.csv")]
            } else {
                vec![out]
            };
            let bytes: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
            outputs.push(bytes);
        }
        if outputs.iter().any(|o| *o != outputs[0]) {
            return Err(format!("`{command}` output differs between runs or worker counts"));
        }
        compared += 1;
    }
    check(true, format!("{compared} commands byte-identical across 3 runs (1 and 4 workers)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("closed forms vs Monte Carlo oracle", closed_form_vs_monte_carlo),
        ("compound-Poisson variance identity", compound_poisson_identity),
        ("first-generation profile averages and ordering in C", first_generation_averages_and_ordering),
        ("farther origins compromise more paths", farther_origins_compromise_more),
        ("premium trends under both principles", premium_trends),
        ("exact edge-state enumeration", exact_enumeration),
        ("factorization and negative control", factorization_suite),
        ("gamma survival numerics", gamma_survival_numerics),
        ("CLI determinism across runs and workers", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(criterion).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} [{secs:.1}s] {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name} [{secs:.1}s] {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
