//! Command-line surface for the two-qubit CHSH / entropy toolkit.
//!
//! Exit codes: 0 success, 1 a verification suite found a counterexample,
//! 2 usage or parse error, 3 invalid state.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use bell_entropy::bell::{
    beta, maximize_beta, settings_from_json, BellError, BellOperator, MeasurementSettings,
    DEFAULT_RESTARTS,
};
use bell_entropy::entropy::{linear_entropy, von_neumann_entropy};
use bell_entropy::regions::{boundary_curve, classify, threshold, RegionId, ThresholdId};
use bell_entropy::states::{density_from_json, DensityMatrix, StateError};
use bell_entropy::verify::{
    attainability_sweep, default_rank_mix, extremal_suite, implication_chain_test,
    mc_region_containment, VerificationReport,
};

#[derive(Parser)]
#[command(
    name = "bell-entropy",
    version,
    about = "CHSH values, entropies, and their compatibility regions for two-qubit states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a state: entropies, CHSH value, region membership, thresholds.
    Analyze {
        /// State file: `{"matrix": [[..4 [re, im] entries..] x 4]}`.
        #[arg(long)]
        state: PathBuf,
        /// Optional settings file `{"a1": [x,y,z], ...}`; without it the
        /// CHSH value is maximized over all settings.
        #[arg(long)]
        settings: Option<PathBuf>,
        /// RNG seed for the maximization (default: BEA_SEED or 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Restart count for the maximization.
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a region's upper boundary as CSV (`beta,bound`).
    Curves {
        #[arg(long, value_enum)]
        region: RegionArg,
        /// Grid size over the full CHSH range, endpoints included.
        #[arg(long, default_value_t = 512)]
        points: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification suites; exits 1 if any counterexample is found.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        /// Sample count (0 makes every suite vacuous). The implications
        /// suite runs `samples` separability checks and `samples / 10`
        /// maximizations; the extremal suite splits over 10 combinations.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// RNG seed (default: BEA_SEED or 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Grid size for the attainability sweeps.
        #[arg(long, default_value_t = 50)]
        grid: usize,
        /// Perturbation size for the extremal suite (at most 1e-3).
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        /// Worker threads for the sample loops (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Also write the JSON reports to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the threshold constants with their common roundings.
    Thresholds,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionArg {
    LinearTotal,
    LinearCond,
    VnTotal,
    VnCond,
}

impl From<RegionArg> for RegionId {
    fn from(value: RegionArg) -> Self {
        match value {
            RegionArg::LinearTotal => RegionId::LinearTotal,
            RegionArg::LinearCond => RegionId::LinearCondSum,
            RegionArg::VnTotal => RegionId::VnTotal,
            RegionArg::VnCond => RegionId::VnCondSum,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum SuiteArg {
    Regions,
    Attain,
    Extremal,
    Implications,
    All,
}

enum CliError {
    /// Malformed input or bad flag combination (exit 2).
    Usage(String),
    /// Structurally valid input that is not a physical state (exit 3).
    InvalidState(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::InvalidState(_) => ExitCode::from(3),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::InvalidState(m) => m,
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("BEA_SEED") {
        Ok(text) => text
            .parse()
            .map_err(|_| CliError::Usage(format!("BEA_SEED is not an integer: {text:?}"))),
        Err(_) => Ok(0),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<DensityMatrix, CliError> {
    let text = read_file(path)?;
    density_from_json(&text).map_err(|e| match e {
        StateError::Format(_) => CliError::Usage(format!("{}: {e}", path.display())),
        other => CliError::InvalidState(format!("{}: {other}", path.display())),
    })
}

fn load_settings(path: &Path) -> Result<MeasurementSettings, CliError> {
    let text = read_file(path)?;
    settings_from_json(&text)
        .map_err(|e: BellError| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    println!("{text}");
    if let Some(path) = out {
        fs::write(path, format!("{text}\n"))
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn settings_value(settings: &MeasurementSettings) -> serde_json::Value {
    let v = |b: &bell_entropy::bell::BlochVector| json!([b.x(), b.y(), b.z()]);
    json!({
        "a1": v(&settings.a1),
        "b1": v(&settings.b1),
        "a2": v(&settings.a2),
        "b2": v(&settings.b2),
    })
}

fn cmd_analyze(
    state: &Path,
    settings: Option<&Path>,
    seed: Option<u64>,
    restarts: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if restarts == 0 {
        return Err(CliError::Usage("--restarts must be at least 1".into()));
    }
    let rho = load_state(state)?;
    let lin = linear_entropy(&rho);
    let vn = von_neumann_entropy(&rho);

    let (chsh, operator) = match settings {
        Some(path) => {
            let parsed = load_settings(path)?;
            let op = BellOperator::new(parsed);
            let value = beta(&rho, &op);
            (json!({"source": "settings", "value": value}), op)
        }
        None => {
            let seed = resolve_seed(seed)?;
            let (value, op) = maximize_beta(&rho, restarts, seed);
            (
                json!({
                    "source": "maximized",
                    "value": value,
                    "restarts": restarts,
                    "seed": seed,
                    "settings": settings_value(op.settings()),
                }),
                op,
            )
        }
    };

    let verdicts = classify(&rho, &operator);
    let report = json!({
        "linear": lin,
        "vonNeumann": vn,
        "chsh": chsh,
        "regions": verdicts.to_vec(),
        "thresholdsCleared": {
            "linearEntropy": lin.s12 >= threshold(ThresholdId::LinearEntropy),
            "linearCondSum": lin.cond_sum >= threshold(ThresholdId::LinearCondSum),
            "vnEntropy": vn.s12 >= threshold(ThresholdId::VnEntropy),
            "vnCondSum": vn.cond_sum >= threshold(ThresholdId::VnCondSum),
        },
    });
    let text = serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    write_output(out, &text)
}

fn cmd_curves(region: RegionId, points: usize, out: Option<&Path>) -> Result<(), CliError> {
    if points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let mut text = String::from("beta,bound\n");
    for (beta_val, bound) in boundary_curve(region, points) {
        text.push_str(&format!("{beta_val:.16e},{bound:.16e}\n"));
    }
    print!("{text}");
    if let Some(path) = out {
        fs::write(path, &text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn vacuous(suite: &str, seed: u64) -> VerificationReport {
    VerificationReport {
        suite: suite.to_string(),
        samples: 0,
        violations: 0,
        worst_margin: None,
        seed,
        failures: Vec::new(),
        notes: vec!["skipped: samples = 0".into()],
        elapsed: std::time::Duration::ZERO,
    }
}

fn cmd_verify(
    suite: SuiteArg,
    samples: u64,
    seed: Option<u64>,
    grid: usize,
    eps: f64,
    threads: Option<usize>,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    if grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(CliError::Usage("--eps must be in (0, 1e-3]".into()));
    }
    let seed = resolve_seed(seed)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))?;
    }

    let mut reports: Vec<VerificationReport> = Vec::new();
    let selected = |wanted: SuiteArg| suite == wanted || suite == SuiteArg::All;
    if selected(SuiteArg::Regions) {
        reports.push(if samples == 0 {
            vacuous("regions", seed)
        } else {
            mc_region_containment(samples, seed, default_rank_mix())
        });
    }
    if selected(SuiteArg::Attain) {
        for region in RegionId::ALL {
            reports.push(if samples == 0 {
                vacuous(&format!("attain:{}", region.label()), seed)
            } else {
                attainability_sweep(region, grid)
            });
        }
    }
    if selected(SuiteArg::Extremal) {
        if samples == 0 {
            reports.push(vacuous("extremal", seed));
        } else {
            reports.extend(extremal_suite(samples, eps, seed));
        }
    }
    if selected(SuiteArg::Implications) {
        reports.push(if samples == 0 {
            vacuous("implications", seed)
        } else {
            implication_chain_test(samples, (samples / 10).max(1), seed)
        });
    }

    for report in &reports {
        eprintln!(
            "{}: {} samples, {} violations, {:.3}s",
            report.suite,
            report.samples,
            report.violations,
            report.elapsed.as_secs_f64()
        );
    }
    let text = serde_json::to_string_pretty(&reports).expect("report serialization cannot fail");
    write_output(out, &text)?;

    let violations: u64 = reports.iter().map(|r| r.violations).sum();
    Ok(if violations == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_thresholds() -> Result<(), CliError> {
    let report = json!({
        "linearEntropy": threshold(ThresholdId::LinearEntropy),
        "linearCondSum": threshold(ThresholdId::LinearCondSum),
        "vnEntropy": threshold(ThresholdId::VnEntropy),
        "vnCondSum": threshold(ThresholdId::VnCondSum),
        "vnCondZeroBeta": threshold(ThresholdId::VnCondZeroBeta),
        "rounded": {
            "linearEntropy": 0.5,
            "linearCondSum": 0.0,
            "vnEntropy": 0.833,
            "vnCondSum": 0.280,
            "vnCondZeroBeta": 2.206,
        },
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serialization cannot fail")
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze {
            state,
            settings,
            seed,
            restarts,
            out,
        } => cmd_analyze(&state, settings.as_deref(), seed, restarts, out.as_deref())
            .map(|()| ExitCode::SUCCESS),
        Command::Curves {
            region,
            points,
            out,
        } => cmd_curves(region.into(), points, out.as_deref()).map(|()| ExitCode::SUCCESS),
        Command::Verify {
            suite,
            samples,
            seed,
            grid,
            eps,
            threads,
            out,
        } => cmd_verify(suite, samples, seed, grid, eps, threads, out.as_deref()),
        Command::Thresholds => cmd_thresholds().map(|()| ExitCode::SUCCESS),
    };
    match outcome {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {}", error.message());
            error.exit_code()
        }
    }
}
