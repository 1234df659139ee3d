//! `verify`: batch runner for the gammalab verification suites.
//!
//! Exit codes: 0 when every verdict passes, 1 when a verdict fails or a
//! suite cannot complete, 2 for invalid arguments or configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use gammalab_core::suites::{run_suite, verdicts_csv, RunConfig, Suite};
use gammalab_core::IdentityVerdict;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(gammalab_core::Error),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Read { .. } => 2,
            CliError::Write { .. } => 1,
        }
    }
}

/// Runs numerical verification suites and writes report.json plus CSV tables.
#[derive(Debug, Parser)]
#[command(name = "verify", version)]
struct Args {
    /// Suite name (laplace, mecke, moments, gamma-marginal, forms, duality,
    /// one-particle, besq, fock or all); same as --suite.
    #[arg(value_name = "SUITE")]
    suite_arg: Option<String>,
    /// Comma-separated suite list.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    shards: Option<String>,
    /// Monte Carlo samples per verdict.
    #[arg(long)]
    n: Option<String>,
    /// Samples for the Mecke form estimator.
    #[arg(long)]
    mecke_n: Option<String>,
    /// Euler–Maruyama paths.
    #[arg(long)]
    em_n: Option<String>,
    /// Samples for the absorption report.
    #[arg(long)]
    absorption_n: Option<String>,
    /// Mass floor of the sampler.
    #[arg(long)]
    eps: Option<String>,
    /// one | s | s2 | cubic:a1,a2,a3 | all
    #[arg(long)]
    coeff: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    /// Gauss–Legendre degree of the Mecke estimator.
    #[arg(long)]
    degree: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Flat key=value config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn build_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.clone(),
            source,
        })?;
        config.apply_kv(&text).map_err(CliError::Config)?;
    }
    if let (Some(a), Some(b)) = (&args.suite_arg, &args.suite) {
        if a != b {
            return Err(CliError::Config(gammalab_core::Error::Parse(format!(
                "conflicting suites `{a}` and `{b}`"
            ))));
        }
    }
    let flags = [
        ("suite", args.suite.as_ref().or(args.suite_arg.as_ref())),
        ("seed", args.seed.as_ref()),
        ("shards", args.shards.as_ref()),
        ("n", args.n.as_ref()),
        ("mecke_n", args.mecke_n.as_ref()),
        ("em_n", args.em_n.as_ref()),
        ("absorption_n", args.absorption_n.as_ref()),
        ("eps", args.eps.as_ref()),
        ("coeff", args.coeff.as_ref()),
        ("dim", args.dim.as_ref()),
        ("degree", args.degree.as_ref()),
        ("out", args.out.as_ref()),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            config.set(key, v).map_err(CliError::Config)?;
        }
    }
    config.validate().map_err(CliError::Config)?;
    Ok(config)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run(config: &RunConfig) -> Result<bool, CliError> {
    fs::create_dir_all(&config.out).map_err(|source| CliError::Write {
        path: config.out.clone(),
        source,
    })?;
    write(&config.out.join("config.txt"), &config.to_kv())?;
    let mut verdicts: Vec<IdentityVerdict> = Vec::new();
    let mut ok = true;
    for &suite in &config.suites {
        match run_suite(suite, config) {
            Ok(output) => {
                for v in &output.verdicts {
                    println!(
                        "{} {suite} {} {}: lhs={:.6e} rhs={:.6e} se={:.2e}",
                        status(v.pass),
                        v.identity,
                        label(v),
                        v.lhs,
                        v.rhs,
                        v.se
                    );
                }
                ok &= output.pass();
                for t in &output.tables {
                    write(&config.out.join(&t.name), &t.csv)?;
                }
                verdicts.extend(output.verdicts);
            }
            Err(e) => {
                eprintln!("suite {suite} could not complete: {e}");
                ok = false;
            }
        }
    }
    let json = serde_json::to_string_pretty(&verdicts).expect("verdicts serialize");
    write(&config.out.join("report.json"), &(json + "\n"))?;
    write(&config.out.join("verdicts.csv"), &verdicts_csv(&verdicts))?;
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("{} verdicts, {failed} failed; report in {}", verdicts.len(), config.out.display());
    Ok(ok)
}

fn label(v: &IdentityVerdict) -> String {
    let parts: Vec<&str> = [v.kind.as_deref(), v.c.as_deref(), v.note.as_deref()]
        .into_iter()
        .flatten()
        .collect();
    format!("[{}]", parts.join(" | "))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = build_config(&args).and_then(|config| run(&config));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("verify: {e}");
            if e.exit_code() == 2 {
                eprintln!("known suites: {}", Suite::ALL.map(Suite::name).join(", "));
            }
            ExitCode::from(e.exit_code())
        }
    }
}
