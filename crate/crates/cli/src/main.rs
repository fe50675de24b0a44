mod checks;
mod commands;
mod config;
mod error;
mod golden;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{parse_field, parse_nu, parse_standard, RunConfig};
use crate::error::CliError;
use crate::golden::{GoldenFile, GoldenStatus, Store};
use crate::output::{canonical, emit};

#[derive(Parser)]
#[command(name = "kisin", version, about = "Kisin varieties of rank-2 phi-modules over F_q((u))")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the phi-module described by the configuration.
    Standard(Common),
    /// Test whether a lattice tuple lies on the variety.
    Member(Common),
    /// List the F_q-points of the variety.
    Enumerate {
        #[command(flatten)]
        common: Common,
        /// Compare against the exhaustive window scan.
        #[arg(long)]
        verify: bool,
    },
    /// Print the Frobenius-fixed point of the tree.
    FixedPoint(Common),
    /// Build and replay the certificate graph on the enumerated points.
    Graph(Common),
    /// Run a seeded verification suite: schubert, fiber, chi, fixpoint or battery.
    Check {
        suite: String,
        #[command(flatten)]
        common: Common,
        /// Overwrite the stored golden values with this run's values.
        #[arg(long)]
        regenerate_golden: bool,
    },
}

#[derive(Args, Default)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dot: Option<PathBuf>,
    /// `p,m` for F_{p^m}.
    #[arg(long)]
    field: Option<String>,
    /// `p=..,n=..,s=..,alpha=..`
    #[arg(long)]
    standard: Option<String>,
    /// `a1,b1;a2,b2;...`
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<String>,
    /// Comma-separated subset of single,chi,mq.
    #[arg(long)]
    rules: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    prec: Option<usize>,
    /// Extra radius for enumeration windows.
    #[arg(long)]
    slack: Option<i64>,
    /// JSON file with a `lattices` array (for `member`).
    #[arg(long)]
    point: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let point = match &self.point {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("--point {}: {e}", path.display())))?;
                Some(
                    serde_json::from_str(&text)
                        .map_err(|e| CliError::Usage(format!("--point {}: {e}", path.display())))?,
                )
            }
            None => None,
        };
        let flags = RunConfig {
            field: self.field.as_deref().map(parse_field).transpose()?,
            standard: self.standard.as_deref().map(parse_standard).transpose()?,
            nu: self.nu.as_deref().map(parse_nu).transpose()?,
            point,
            prec: self.prec,
            slack: self.slack,
            rules: self.rules.clone(),
            out: self.out.clone(),
            dot: self.dot.clone(),
            seed: self.seed,
            jobs: self.jobs,
            module: None,
        };
        let cfg = file.merge(flags);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn install_pool(jobs: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("`jobs`: {e}")))?;
    }
    Ok(())
}

fn run_checks(suite: &str, cfg: &RunConfig, regenerate: bool) -> Result<(), CliError> {
    let seed = cfg.seed();
    let results = checks::run(suite, seed).ok_or_else(|| {
        CliError::Usage(format!("unknown check suite `{suite}`; expected one of {}", checks::SUITES.join(", ")))
    })?;
    let store = Store::from_env();
    let mut report = Vec::new();
    let mut failed = false;
    println!("{:<10} {:>6} {:>9} {:>8}  status", "check", "cases", "failures", "golden");
    for r in &results {
        let file = GoldenFile { config: json!({"check": r.name, "seed": seed}), values: r.values.clone() };
        let golden = store.compare_or_write(&r.name, seed, &file, regenerate)?;
        let ok = r.failures.is_empty() && golden != GoldenStatus::Mismatch;
        failed |= !ok;
        println!(
            "{:<10} {:>6} {:>9} {:>8}  {}",
            r.name,
            r.cases,
            r.failures.len(),
            golden.label(),
            if ok { "PASS" } else { "FAIL" }
        );
        for f in &r.failures {
            println!("  {f}");
        }
        report.push(json!({
            "check": r.name,
            "cases": r.cases,
            "failures": r.failures,
            "golden": golden.label(),
            "pass": ok,
        }));
    }
    if let Some(path) = &cfg.out {
        emit(&canonical(&json!({"seed": seed, "results": report}))?, Some(path))?;
    }
    if failed {
        return Err(CliError::Verification(format!("check {suite} failed")));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (cfg, value) = match &cli.command {
        Command::Check { suite, common, regenerate_golden } => {
            let cfg = common.resolve()?;
            install_pool(cfg.jobs)?;
            return run_checks(suite, &cfg, *regenerate_golden);
        }
        Command::Standard(c) => {
            let cfg = c.resolve()?;
            let v = commands::standard(&cfg)?;
            (cfg, v)
        }
        Command::Member(c) => {
            let cfg = c.resolve()?;
            let v = commands::member(&cfg)?;
            (cfg, v)
        }
        Command::Enumerate { common, verify } => {
            let cfg = common.resolve()?;
            install_pool(cfg.jobs)?;
            let v = commands::enumerate(&cfg, *verify)?;
            (cfg, v)
        }
        Command::FixedPoint(c) => {
            let cfg = c.resolve()?;
            let v = commands::fixed_point_cmd(&cfg)?;
            (cfg, v)
        }
        Command::Graph(c) => {
            let cfg = c.resolve()?;
            install_pool(cfg.jobs)?;
            let v = commands::graph(&cfg)?;
            (cfg, v)
        }
    };
    emit(&canonical(&value)?, cfg.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kisin: {e}");
            e.exit_code()
        }
    }
}
