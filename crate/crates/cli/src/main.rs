use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mboxsim::suites::{self, SuiteResult};
use mboxsim::verify::{predicted_case, predicted_correlation, Check};
use mboxsim::{
    exact_mu_average, run_experiment, symmetrize, CompletionKind, CompletionStrategy,
    EntanglementParam, Error, ExperimentConfig, ProtocolId, SettingsSource, Sign, UnitVector3, Vec3,
};

/// Exit status for usage and configuration errors, matching clap's own.
const USAGE: u8 = 2;
const FAILED: u8 = 1;

#[derive(Parser)]
#[command(name = "mboxsim", version, about = "Simulate entangled qubit pairs with one cbit and one M-box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its comparison report.
    Simulate(Simulate),
    /// Run one verification suite and print every check.
    Verify(Verify),
    /// Query the exact branch-conditional oracle.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Args)]
struct Simulate {
    #[arg(long, value_parser = parse_protocol)]
    protocol: ProtocolId,
    /// Entanglement angle in radians, within [0, π/4].
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    /// `random:N` or a CSV file with header ax,ay,az,bx,by,bz.
    #[arg(long, value_parser = parse_settings)]
    settings: SettingsSource,
    /// Rounds per setting.
    #[arg(long)]
    rounds: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_parser = parse_completion, default_value = "normalize")]
    completion: CompletionKind,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
    /// Optional flat CSV with one row per setting.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Kernel,
    Flip,
    Epr2,
    Mbox,
    Oracle,
}

#[derive(Args)]
struct Verify {
    suite: Suite,
    /// Angles in radians; `epr2` accepts a comma-separated list.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    gamma: Vec<f64>,
    /// Grid side for `epr2`.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Sample count; the default depends on the suite.
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact μ-average of `û·v̂` on one branch, next to the design prediction.
    MuAverage(MuAverage),
}

#[derive(Clone, Copy, ValueEnum)]
enum Branch {
    #[value(name = "pq+")]
    Plus,
    #[value(name = "pq-")]
    Minus,
}

#[derive(Args)]
struct MuAverage {
    #[arg(long, value_parser = parse_protocol)]
    protocol: ProtocolId,
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    /// Alice's setting as `x,y,z`.
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    a: UnitVector3,
    /// Bob's setting as `x,y,z`.
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    b: UnitVector3,
    #[arg(long, value_enum)]
    branch: Branch,
    #[arg(long, value_parser = parse_completion, default_value = "normalize")]
    completion: CompletionKind,
}

fn parse_protocol(s: &str) -> Result<ProtocolId, Error> {
    s.parse()
}

fn parse_completion(s: &str) -> Result<CompletionKind, Error> {
    s.parse()
}

fn parse_settings(s: &str) -> Result<SettingsSource, Error> {
    s.parse()
}

fn parse_vector(s: &str) -> Result<UnitVector3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [x, y, z] = parts[..] else {
        return Err(format!("expected three comma-separated components, got {}", parts.len()));
    };
    let v = Vec3::new(x, y, z);
    if (v.norm() - 1.0).abs() > 1e-6 {
        log::warn!("vector {s} has norm {}, normalizing", v.norm());
    }
    UnitVector3::normalize(v).ok_or_else(|| format!("cannot normalize {s}"))
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::BudgetViolation(_) | Error::Decomposition(_) => FAILED,
        _ => USAGE,
    }
}

fn simulate(args: Simulate) -> Result<u8, Error> {
    let config = ExperimentConfig {
        protocol: args.protocol,
        gamma: args.gamma,
        settings: args.settings,
        rounds: args.rounds,
        seed: args.seed,
        completion: args.completion,
        workers: args.workers,
    };
    let report = run_experiment(&config)?;
    report.write_json(&args.out)?;
    if let Some(path) = &args.csv {
        report.write_csv_file(path)?;
    }
    let s = &report.summary;
    println!(
        "{} settings, {} rounds: max TV distance {:.6}, max |z| {:.3}",
        s.settings, s.total_rounds, s.max_tv, s.max_abs_z
    );
    if s.budget_violations > 0 {
        eprintln!("error: {} rounds exceeded the resource budget", s.budget_violations);
        return Ok(FAILED);
    }
    Ok(0)
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("{c}");
    }
}

fn verify(args: Verify) -> Result<u8, Error> {
    let one_gamma = |default: f64| match args.gamma[..] {
        [] => Ok(default),
        [g] => Ok(g),
        _ => Err(Error::Config("this suite takes a single --gamma".into())),
    };
    let result: SuiteResult = match args.suite {
        Suite::Kernel => suites::kernel_suite(20, args.rounds.unwrap_or(1_000_000), 10_000, args.seed)?,
        Suite::Flip => suites::flip_suite(args.rounds.unwrap_or(1000) as usize, args.seed),
        Suite::Mbox => suites::mbox_suite(args.rounds.unwrap_or(1_000_000), args.seed)?,
        Suite::Epr2 => {
            let gammas = if args.gamma.is_empty() {
                vec![PI / 16.0, PI / 8.0, 3.0 * PI / 16.0, PI / 4.0]
            } else {
                args.gamma.clone()
            };
            suites::epr2_checks(&gammas, args.grid)?
        }
        Suite::Oracle => suites::oracle_suite(
            &[ProtocolId::P1, ProtocolId::P2],
            one_gamma(PI / 8.0)?,
            10,
            args.rounds.unwrap_or(100_000),
            args.seed,
        )?,
    };
    print_checks(&result.checks);
    let failed = result.checks.iter().filter(|c| !c.pass).count();
    let name = args.suite.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default();
    if failed == 0 {
        println!("verify {name}: PASS ({} checks)", result.checks.len());
        Ok(0)
    } else {
        println!("verify {name}: FAIL ({failed} of {} checks)", result.checks.len());
        Ok(FAILED)
    }
}

fn mu_average(args: MuAverage) -> Result<u8, Error> {
    if args.protocol == ProtocolId::Tb {
        return Err(Error::Config("the oracle covers p1 and p2 only".into()));
    }
    let param = EntanglementParam::new(args.gamma)?;
    if args.protocol == ProtocolId::P2 && param.gamma() == 0.0 {
        return Err(Error::Config("protocol 2 requires gamma > 0".into()));
    }
    let strategy = CompletionStrategy::from(args.completion);
    let (a, b, _, _) = symmetrize(args.a, args.b);
    let pq = match args.branch {
        Branch::Plus => Sign::Plus,
        Branch::Minus => Sign::Minus,
    };
    let mut oracle = 0.0;
    for p in Sign::BOTH {
        let value = exact_mu_average(&param, a, b, strategy, p, p * pq, args.protocol)?;
        println!("oracle (p = {p:+}): {value:.12}", p = p.value() as i8);
        oracle += value / 2.0;
    }
    let prediction = predicted_correlation(args.protocol, &param, a, b, pq)?;
    if args.protocol == ProtocolId::P2 {
        println!("slice case: {:?}", predicted_case(&param, a, b, pq));
    }
    println!("oracle: {oracle:.12}");
    println!("prediction: {prediction:.12}");
    println!("residual: {:.12e}", (oracle - prediction).abs());
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Verify(args) => verify(args),
        Command::Oracle(OracleCommand::MuAverage(args)) => mu_average(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
