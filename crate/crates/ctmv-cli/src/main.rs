//! `ctmv` — frontier traces, wealth-process Monte Carlo, risky-region
//! sampling, and statistical verification for a continuous-time
//! mean–variance market, from the command line.
//!
//! A market file is a JSON document with keys `horizon`, `breakpoints`,
//! `rate`, `mu`, `sigma`, and optional `delta`: piecewise-constant
//! coefficients, one entry per breakpoint interval.
//!
//! Exit codes: 0 success; 2 invalid input or infeasible market; 3 numerical
//! blowup inside a simulation; 4 verification or self-check failure.
//!
//! Stdout shows six significant digits; file artifacts keep full double
//! precision. Artifacts are staged to temporary files in the output
//! directory and renamed into place only after all of them have been
//! written, so a failed run leaves no partial outputs.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use ctmv::frontier::stock_stats_bs;
use ctmv::simulate::constant_mix_closed_form;
use ctmv::{
    check_separation, estimate_terminal_stats, frontier_points, frontier_slope, points_to_csv,
    premium, run_all, sample_combination_region, sample_risky_region, simulate_wealth, AlphaSpec,
    EfficientSolution, Error, MarketModel, Scheme, SimConfig, Strategy, ValidatedMarket,
    VerifyConfig,
};

// ---------------------------------------------------------------------------
// Command-line surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "ctmv",
    version,
    about = "Continuous-time mean-variance portfolio analytics",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the closed-form efficient frontier to CSV and JSON.
    Frontier(FrontierArgs),
    /// Simulate terminal wealth for one strategy.
    Simulate(SimulateArgs),
    /// Sample the pure-risky region (optionally bond/risky combinations too).
    Region(RegionArgs),
    /// Run the statistical verification report for a market.
    Verify(VerifyArgs),
    /// Reproduce the built-in single-stock reference example.
    Example(ExampleArgs),
}

#[derive(Args)]
struct MarketArgs {
    /// Market definition file (JSON).
    #[arg(long, value_name = "FILE")]
    market: PathBuf,
    /// Initial wealth.
    #[arg(long, default_value_t = 1.0)]
    x0: f64,
}

#[derive(Args)]
struct OutArg {
    /// Directory for output artifacts.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SimArgs {
    /// Number of Monte Carlo paths.
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    /// Number of uniform time steps on [0, T].
    #[arg(long, default_value_t = 250)]
    steps: usize,
    /// RNG seed; falls back to the MVP_SEED environment variable.
    #[arg(long, env = "MVP_SEED", default_value_t = 20240601)]
    seed: u64,
}

#[derive(Args)]
struct FrontierArgs {
    #[command(flatten)]
    market: MarketArgs,
    /// Target expected terminal wealth; repeat to set the sweep range.
    /// One value sweeps up from the risk-free payoff; none uses a default
    /// sweep to 1.25x the risk-free payoff.
    #[arg(long = "z", value_name = "Z", allow_hyphen_values = true)]
    z: Vec<f64>,
    /// Number of frontier points.
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    market: MarketArgs,
    /// Efficient-strategy target expected terminal wealth.
    #[arg(long)]
    z: Option<f64>,
    /// Constant-mix pure-risky weights, comma separated (must sum to 1).
    #[arg(long, value_name = "W1,W2,...", allow_hyphen_values = true)]
    mix: Option<String>,
    /// Simulation scheme: euler or exact (exact requires --z).
    #[arg(long, default_value_t = Scheme::Euler)]
    scheme: Scheme,
    #[command(flatten)]
    sim: SimArgs,
    /// Also write the raw terminal wealth samples (terminal_wealth.csv).
    #[arg(long)]
    dump_terminal: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct RegionArgs {
    #[command(flatten)]
    market: MarketArgs,
    /// Number of pure-risky strategies to sample.
    #[arg(long, default_value_t = 40)]
    strategies: usize,
    #[command(flatten)]
    sim: SimArgs,
    /// Also sample bond/risky combinations of an equal-weight base mix.
    #[arg(long)]
    combine: bool,
    /// Standard-error multiple for the separation summary.
    #[arg(long = "k", default_value_t = 3.0)]
    confidence_k: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    market: MarketArgs,
    /// Target expected terminal wealth; repeatable. Default: the risk-free
    /// payoff and 1.2x the risk-free payoff.
    #[arg(long = "z", value_name = "Z", allow_hyphen_values = true)]
    z: Vec<f64>,
    /// Monte Carlo paths per check.
    #[arg(long, default_value_t = 50_000)]
    paths: usize,
    /// Time steps for the Euler-scheme checks.
    #[arg(long, default_value_t = 250)]
    steps: usize,
    /// RNG seed; falls back to the MVP_SEED environment variable.
    #[arg(long, env = "MVP_SEED", default_value_t = 20240601)]
    seed: u64,
    /// Pure-risky strategies for the separation check.
    #[arg(long, default_value_t = 12)]
    strategies: usize,
    /// Per-axis size of the product-inequality grid.
    #[arg(long, default_value_t = 100)]
    lemma_grid: usize,
    /// Random parameter draws for the dominance inequality.
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    /// Standard-error multiple for statistical flags.
    #[arg(long = "k", default_value_t = 3.0)]
    confidence_k: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ExampleArgs {
    /// Absolute tolerance for each closed-form self-check value
    /// (the premium check uses twice this).
    #[arg(long, default_value_t = 5e-4)]
    tolerance: f64,
    #[command(flatten)]
    out: OutArg,
}

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum CliError {
    /// Library-level failure; maps to exit 2, 3, or 4 by variant.
    Lib(Error),
    /// Unusable file or flag combination; exit 2.
    Input(String),
    /// The verification report concluded FAIL; exit 4.
    VerificationFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(Error::NumericalBlowup { .. }) => 3,
            CliError::Lib(Error::SelfCheckFailed(_)) => 4,
            CliError::Lib(_) | CliError::Input(_) => 2,
            CliError::VerificationFailed => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::VerificationFailed => {
                write!(f, "verification failed; the report lists the failing checks")
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Frontier(args) => cmd_frontier(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Region(args) => cmd_region(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Example(args) => cmd_example(args),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// Six significant digits for stdout; files keep full precision.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i64;
    if !(-5..9).contains(&exponent) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

fn read_model(path: &Path) -> Result<MarketModel, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("malformed market file {}: {e}", path.display())))
}

fn load_market(args: &MarketArgs) -> Result<ValidatedMarket, CliError> {
    check_x0(args.x0)?;
    Ok(read_model(&args.market)?.validate()?)
}

fn check_x0(x0: f64) -> Result<(), CliError> {
    if !x0.is_finite() || x0 <= 0.0 {
        return Err(CliError::Input(format!(
            "initial wealth --x0 must be positive, got {x0}"
        )));
    }
    Ok(())
}

fn parse_mix(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|w| w.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| CliError::Input(format!("cannot parse --mix {spec:?}: {e}")))
}

/// Pretty JSON with a trailing newline, matching the library's report style.
fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON maps of plain values serialize");
    s.push('\n');
    s
}

/// Stage every artifact as a temporary file in `dir`, then rename all into
/// place. Two phases, so a failure while writing leaves nothing behind and a
/// rename never exposes a half-written file.
fn write_artifacts(dir: &Path, artifacts: &[(&str, String)]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let mut staged = Vec::with_capacity(artifacts.len());
    for (name, contents) in artifacts {
        let mut tmp = tempfile::Builder::new()
            .prefix(".ctmv.")
            .tempfile_in(dir)
            .map_err(|e| CliError::Input(format!("cannot stage {name}: {e}")))?;
        tmp.write_all(contents.as_bytes())
            .map_err(|e| CliError::Input(format!("cannot write {name}: {e}")))?;
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, path) in staged {
        tmp.persist(&path)
            .map_err(|e| CliError::Input(format!("cannot write {}: {}", path.display(), e.error)))?;
        written.push(path);
    }
    Ok(written)
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

// ---------------------------------------------------------------------------
// frontier
// ---------------------------------------------------------------------------

fn cmd_frontier(args: FrontierArgs) -> Result<(), CliError> {
    let market = load_market(&args.market)?;
    let x0 = args.market.x0;
    let payoff = market.risk_free_payoff(x0);
    let (z_min, z_max) = match args.z.as_slice() {
        [] => (payoff, 1.25 * payoff),
        [z] => (payoff.min(*z), *z),
        zs => (
            zs.iter().copied().fold(f64::INFINITY, f64::min),
            zs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
    };
    let points = frontier_points(&market, x0, z_min, z_max, args.count)?;
    let slope = frontier_slope(&market);
    let rf = market.risk_free_return();
    let summary = json!({
        "command": "frontier",
        "market": args.market.market.display().to_string(),
        "x0": x0,
        "z_min": z_min,
        "z_max": z_max,
        "count": args.count,
        "n_points": points.len(),
        "slope": slope,
        "risk_free_return": rf,
        "risk_free_payoff": payoff,
    });
    let written = write_artifacts(
        &args.out.out,
        &[
            ("frontier.csv", points_to_csv(&points, rf)),
            ("frontier.json", pretty(&summary)),
        ],
    )?;
    println!(
        "frontier: {} points for z in [{}, {}]",
        points.len(),
        sig6(z_min),
        sig6(z_max)
    );
    println!(
        "slope {}, risk-free return {}, risk-free payoff {}",
        sig6(slope),
        sig6(rf),
        sig6(payoff)
    );
    print_written(&written);
    Ok(())
}

// ---------------------------------------------------------------------------
// example
// ---------------------------------------------------------------------------

/// Built-in single-stock reference market: r = 6%, mu = 12%, sigma = 15%,
/// T = 1 year, x0 = 1.
const EXAMPLE_RATE: f64 = 0.06;
const EXAMPLE_MU: f64 = 0.12;
const EXAMPLE_SIGMA: f64 = 0.15;
const EXAMPLE_HORIZON: f64 = 1.0;

/// Four-decimal reference values the closed forms must reproduce. The
/// premium is the relative Sharpe gain of the frontier over the stock,
/// about 7.85%.
const EXAMPLE_REFERENCE: [(&str, f64); 5] = [
    ("slope", 0.4165),
    ("stock_mean", 0.1275),
    ("stock_std", 0.1701),
    ("stock_sharpe", 0.3862),
    ("premium", 0.0785),
];

fn cmd_example(args: ExampleArgs) -> Result<(), CliError> {
    if !(args.tolerance > 0.0) || !args.tolerance.is_finite() {
        return Err(CliError::Input(format!(
            "--tolerance must be positive, got {}",
            args.tolerance
        )));
    }
    let market =
        MarketModel::black_scholes(EXAMPLE_RATE, EXAMPLE_MU, EXAMPLE_SIGMA, EXAMPLE_HORIZON)
            .validate()?;
    let slope = frontier_slope(&market);
    let stock = stock_stats_bs(EXAMPLE_MU, EXAMPLE_SIGMA, EXAMPLE_RATE, EXAMPLE_HORIZON)?;
    let prem = premium(slope, stock.sharpe)?;
    let values = [
        slope,
        stock.mean_return,
        stock.std_return,
        stock.sharpe,
        prem,
    ];

    let mut failures = Vec::new();
    for ((name, reference), value) in EXAMPLE_REFERENCE.iter().zip(values) {
        let tol = if *name == "premium" {
            2.0 * args.tolerance
        } else {
            args.tolerance
        };
        if (value - reference).abs() > tol {
            failures.push(format!(
                "{name} = {value} vs reference {reference} (tolerance {tol})"
            ));
        }
    }
    if !failures.is_empty() {
        return Err(Error::SelfCheckFailed(failures.join("; ")).into());
    }

    let report = json!({
        "command": "example",
        "parameters": {
            "rate": EXAMPLE_RATE,
            "mu": EXAMPLE_MU,
            "sigma": EXAMPLE_SIGMA,
            "horizon": EXAMPLE_HORIZON,
            "x0": 1.0,
        },
        "values": {
            "slope": slope,
            "stock_mean": stock.mean_return,
            "stock_std": stock.std_return,
            "stock_sharpe": stock.sharpe,
            "premium": prem,
        },
        "reference": serde_json::Map::from_iter(
            EXAMPLE_REFERENCE.iter().map(|(k, v)| ((*k).to_string(), json!(v)))
        ),
        "tolerance": args.tolerance,
        "premium_tolerance": 2.0 * args.tolerance,
        "pass": true,
    });
    let written = write_artifacts(&args.out.out, &[("example.json", pretty(&report))])?;
    println!("slope          {}  (reference 0.4165)", sig6(slope));
    println!(
        "stock mean     {}  (reference 0.1275)",
        sig6(stock.mean_return)
    );
    println!(
        "stock std      {}  (reference 0.1701)",
        sig6(stock.std_return)
    );
    println!("stock sharpe   {}  (reference 0.3862)", sig6(stock.sharpe));
    println!("premium        {}  (reference 0.0785)", sig6(prem));
    println!("self-check passed at tolerance {}", args.tolerance);
    print_written(&written);
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let market = load_market(&args.market)?;
    let x0 = args.market.x0;
    let cfg = SimConfig {
        n_paths: args.sim.paths,
        n_steps: args.sim.steps,
        seed: args.sim.seed,
        scheme: args.scheme,
    };
    let (strategy, strategy_echo, closed_form) = match (args.z, &args.mix) {
        (Some(_), Some(_)) | (None, None) => {
            return Err(CliError::Input(
                "pass exactly one of --z (efficient strategy) and --mix (constant mix)".into(),
            ))
        }
        (Some(z), None) => {
            let sol = EfficientSolution::solve(&market, x0, z)?;
            (
                Strategy::efficient(z),
                json!({"kind": "efficient", "z": z}),
                json!({
                    "mean_return": sol.mean_return,
                    "std_return": sol.std_return,
                    "variance": sol.variance,
                    "gamma": sol.gamma,
                }),
            )
        }
        (None, Some(spec)) => {
            let weights = parse_mix(spec)?;
            let (mean, std) = constant_mix_closed_form(&market, &weights)?;
            (
                Strategy::constant_mix(weights.clone())?,
                json!({"kind": "constant_mix", "weights": weights}),
                json!({"mean_return": mean, "std_return": std}),
            )
        }
    };

    let ensemble = simulate_wealth(&market, x0, &strategy, &cfg)?;
    let stats = estimate_terminal_stats(&ensemble, x0, market.risk_free_return())?;
    let report = json!({
        "command": "simulate",
        "market": args.market.market.display().to_string(),
        "x0": x0,
        "strategy": strategy_echo,
        "config": cfg,
        "cap_violations": ensemble.cap_violations,
        "stats": stats,
        "closed_form": closed_form,
    });
    let mut artifacts = vec![("simulate.json", pretty(&report))];
    if args.dump_terminal {
        let mut csv = String::from("terminal_wealth\n");
        for x in &ensemble.terminal_wealth {
            csv.push_str(&format!("{x}\n"));
        }
        artifacts.push(("terminal_wealth.csv", csv));
    }
    let written = write_artifacts(&args.out.out, &artifacts)?;

    println!(
        "{} scheme, {} paths x {} steps, seed {}",
        cfg.scheme, cfg.n_paths, cfg.n_steps, cfg.seed
    );
    println!(
        "mean return {} (se {}), std {} (se {})",
        sig6(stats.mean_return),
        sig6(stats.se_mean),
        sig6(stats.std_return),
        sig6(stats.se_std)
    );
    match stats.sharpe {
        Some(s) => println!("sharpe {}", sig6(s)),
        None => println!("sharpe undefined (riskless ensemble)"),
    }
    if let Some(v) = ensemble.cap_violations {
        println!("cap violations: {v}");
    }
    print_written(&written);
    Ok(())
}

// ---------------------------------------------------------------------------
// region
// ---------------------------------------------------------------------------

fn cmd_region(args: RegionArgs) -> Result<(), CliError> {
    let market = load_market(&args.market)?;
    let x0 = args.market.x0;
    let cfg = SimConfig {
        n_paths: args.sim.paths,
        n_steps: args.sim.steps,
        seed: args.sim.seed,
        scheme: Scheme::Euler,
    };
    let market_echo = args.market.market.display().to_string();

    let sample = sample_risky_region(&market, x0, args.strategies, &cfg)?;
    let separation = check_separation(&sample, args.confidence_k)?;
    let mut summary = sample.summary_json();
    summary["market"] = json!(market_echo);
    summary["separation"] = serde_json::to_value(&separation)
        .expect("separation report serializes");

    let mut artifacts = vec![
        ("region.csv", sample.to_csv()),
        ("region.json", pretty(&summary)),
    ];

    let mut combo_points = 0;
    if args.combine {
        let m = market.m();
        let base = Strategy::constant_mix(vec![1.0 / m as f64; m])?;
        let specs = [
            AlphaSpec::Threshold {
                barrier: 1.05 * x0,
                below: 1.4,
                above: 0.3,
            },
            AlphaSpec::RandomSwitch {
                intensity: 2.0,
                levels: (0.25, 1.25),
            },
        ];
        let combo = sample_combination_region(&market, x0, &base, &specs, &cfg)?;
        let mut combo_summary = combo.summary_json();
        combo_summary["market"] = json!(market_echo);
        combo_points = combo.points.len();
        artifacts.push(("combination.csv", combo.to_csv()));
        artifacts.push(("combination.json", pretty(&combo_summary)));
    }
    let written = write_artifacts(&args.out.out, &artifacts)?;

    println!(
        "risky region: {} strategies, slope {}, risk-free return {}",
        sample.points.len(),
        sig6(sample.slope),
        sig6(sample.risk_free_return)
    );
    if let (Some(max), Some(label), Some(gap)) = (
        separation.max_sharpe,
        separation.max_sharpe_label.as_deref(),
        separation.gap,
    ) {
        println!("max sharpe {} ({label}), gap to slope {}", sig6(max), sig6(gap));
    }
    if separation.flags.is_empty() {
        println!("separation: no flags at k = {}", separation.confidence_k);
    } else {
        println!(
            "separation: {} point(s) above the slope at k = {}: {}",
            separation.flags.len(),
            separation.confidence_k,
            separation.flags.join(", ")
        );
    }
    if args.combine {
        println!("combination region: {combo_points} points around an equal-weight base");
    }
    print_written(&written);
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    check_x0(args.market.x0)?;
    let model = read_model(&args.market.market)?;
    let x0 = args.market.x0;
    let targets = if args.z.is_empty() {
        match model.validate() {
            Ok(market) => {
                let payoff = market.risk_free_payoff(x0);
                vec![payoff, 1.2 * payoff]
            }
            // Let run_all record the validation failure in the report.
            Err(_) => Vec::new(),
        }
    } else {
        args.z.clone()
    };
    let cfg = VerifyConfig {
        n_paths: args.paths,
        n_steps: args.steps,
        seed: args.seed,
        n_strategies: args.strategies,
        lemma_grid: args.lemma_grid,
        n_draws: args.draws,
        confidence_k: args.confidence_k,
    };
    let report = run_all(&model, x0, &targets, &cfg);
    let written = write_artifacts(&args.out.out, &[("verify_report.json", report.to_json())])?;

    for check in &report.checks {
        let verdict = if check.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {}: statistic {} (threshold {})",
            check.name,
            sig6(check.statistic),
            sig6(check.threshold)
        );
    }
    println!("overall: {}", if report.pass { "PASS" } else { "FAIL" });
    print_written(&written);
    if report.pass {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

// ---------------------------------------------------------------------------
