//! Command-line front end: inspect derived parameters, run the built-in
//! worked example, simulate JSON scenarios, emit converse-bound tables, and
//! run the verification suites.
//!
//! Exit codes: 0 when every check passes, 1 when an assertion fails (the
//! first failing check is named on stderr), 2 when arguments or a config
//! file cannot be parsed or validated.

use std::env;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rdcds::bounds::{build_read_lp, build_update_lp, closed_read_bound, closed_update_bound, lp_min};
use rdcds::sim::{golden_scenario, run_scenario, run_verification, Scenario};
use rdcds::{DropoutSet, Error, Rat, SystemParams};

#[derive(Parser)]
#[command(
    name = "rdcds",
    about = "Robust dynamic coded distributed storage: simulate, bound, verify",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived layout for one parameter tuple N R_r K_c S.
    Params {
        /// Number of servers N.
        servers: usize,
        /// Read threshold R_r.
        read_threshold: usize,
        /// Storage denominator K_c (constrained servers hold a 1/K_c fraction).
        storage_denominator: usize,
        /// Number of storage-constrained servers S (servers 1..=S).
        constrained_servers: usize,
        /// Prime field modulus; defaults to the smallest workable prime.
        #[arg(long)]
        modulus: Option<u64>,
    },
    /// Run the built-in worked example end to end and audit its costs.
    Demo,
    /// Execute a JSON scenario and print the audited report.
    Simulate {
        /// Scenario file (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the scenario seed (takes precedence over RDCDS_SEED).
        #[arg(long)]
        seed: Option<u64>,
        /// Replace every event's dropout list with a seeded random sample,
        /// each server dropping with this probability.
        #[arg(long, value_name = "PROB")]
        random_dropouts: Option<f64>,
        /// Also write the flat cost table to this file.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        /// Also write the JSON report to this file.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Emit a CSV table of closed-form and LP converse bounds.
    ///
    /// Rows cover one representative dropout set per (unconstrained,
    /// constrained) dropout split -- the bounds depend only on those counts --
    /// for every feasible read and every feasible (dropouts, X) update.
    Bounds {
        /// One tuple: N R_r K_c S.
        #[arg(
            value_names = ["N", "R_R", "K_C", "S"],
            num_args = 4,
            required_unless_present = "sweep",
            conflicts_with = "sweep"
        )]
        tuple: Vec<usize>,
        /// Sweep every admissible tuple with N in this range (e.g. 4..8).
        #[arg(long, value_name = "RANGE")]
        sweep: Option<String>,
        /// Also write the table to this file.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run the structural, security, and recoverability suites over a
    /// scenario and print the verification report.
    Verify {
        /// Scenario file (JSON).
        #[arg(long)]
        config: PathBuf,
    },
}

/// Failures bucketed by exit code: bad input (2) vs failed assertion (1).
enum CliError {
    Config(String),
    Check(String),
}

fn config_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

/// Writes to stdout, staying quiet when the reading end (e.g. `head`) has
/// already closed the pipe.
fn emit(text: &str) {
    let mut out = io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() != io::ErrorKind::BrokenPipe {
            panic!("failed writing to stdout: {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Params { servers, read_threshold, storage_denominator, constrained_servers, modulus } => {
            cmd_params(servers, read_threshold, storage_denominator, constrained_servers, modulus)
        }
        Command::Demo => cmd_demo(),
        Command::Simulate { config, seed, random_dropouts, csv, report } => {
            cmd_simulate(&config, seed, random_dropouts, csv.as_deref(), report.as_deref())
        }
        Command::Bounds { tuple, sweep, out } => cmd_bounds(&tuple, sweep.as_deref(), out.as_deref()),
        Command::Verify { config } => cmd_verify(&config),
    }
}

fn build_params(
    servers: usize,
    read_threshold: usize,
    storage_denominator: usize,
    constrained_servers: usize,
    modulus: Option<u64>,
) -> Result<SystemParams, CliError> {
    match modulus {
        Some(q) => {
            SystemParams::with_modulus(servers, read_threshold, storage_denominator, constrained_servers, q)
        }
        None => SystemParams::new(servers, read_threshold, storage_denominator, constrained_servers),
    }
    .map_err(config_err)
}

fn cmd_params(
    servers: usize,
    read_threshold: usize,
    storage_denominator: usize,
    constrained_servers: usize,
    modulus: Option<u64>,
) -> Result<(), CliError> {
    let p = build_params(servers, read_threshold, storage_denominator, constrained_servers, modulus)?;
    let mut s = String::new();
    let _ = writeln!(s, "servers (N):                 {}", p.servers);
    let _ = writeln!(s, "read threshold (R_r):        {}", p.read_threshold);
    let _ = writeln!(s, "storage denominator (K_c):   {}", p.storage_denominator);
    let _ = writeln!(s, "constrained servers (S):     {}", p.constrained_servers);
    let _ = writeln!(s, "field modulus (q):           {}", p.modulus);
    let _ = writeln!(s, "noise rows (Omega):          {}", p.noise_rows());
    let _ = writeln!(
        s,
        "update threshold (X=0):      {}",
        p.update_threshold(0).map_err(config_err)?
    );
    if p.constrained_servers >= p.storage_denominator {
        let _ = writeln!(s, "layered construction:        none (S >= K_c; bounds only)");
        emit(&s);
        return Ok(());
    }
    let d = p.derive().map_err(config_err)?;
    let _ = writeln!(s, "message length (L):          {}", d.message_len);
    let _ = writeln!(s, "pass message length (L/K_c): {}", d.inner_message_len);
    let _ = writeln!(s, "re-encode passes (P):        {}", d.reencode_passes);
    let _ = writeln!(s, "well posed:                  {}", d.well_posed);
    let _ = writeln!(
        s,
        "first layer:                 {} block(s), {} rows, block widths {:?}",
        d.outer.blocks, d.outer.total_rows, d.outer.block_cols
    );
    let _ = writeln!(
        s,
        "second layer:                {} block(s), {} rows, block widths {:?}",
        d.inner.blocks, d.inner.total_rows, d.inner.block_cols
    );
    let frac = |len: usize| Rat::ratio(len as i64, d.message_len as i64);
    let _ = writeln!(
        s,
        "constrained share:           {} symbols ({} of the message)",
        d.constrained_share_len(),
        frac(d.constrained_share_len())
    );
    let _ = writeln!(
        s,
        "unconstrained share:         {} symbols ({} of the message)",
        d.unconstrained_share_len(),
        frac(d.unconstrained_share_len())
    );
    emit(&s);
    Ok(())
}

fn cmd_demo() -> Result<(), CliError> {
    let scenario = golden_scenario();
    let report = run_scenario(&scenario).map_err(config_err)?;
    let mut s = String::new();
    let _ = writeln!(s, "read cost {}", report.events[0].measured_cost);
    let _ = writeln!(s, "update cost {}", report.events[1].measured_cost);
    let _ = writeln!(
        s,
        "threshold {}",
        report.params.update_threshold(report.events[1].x).map_err(config_err)?
    );
    let _ = writeln!(s, "final read cost {}", report.events[2].measured_cost);
    match report.first_failure() {
        Some(failure) => {
            emit(&s);
            Err(CliError::Check(failure))
        }
        None => {
            let _ = writeln!(s, "all demo audits passed");
            emit(&s);
            Ok(())
        }
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Scenario errors come from the input file, so they exit with code 2.
fn scenario_err(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

fn cmd_simulate(
    config: &Path,
    seed: Option<u64>,
    random_dropouts: Option<f64>,
    csv: Option<&Path>,
    report_path: Option<&Path>,
) -> Result<(), CliError> {
    let mut scenario = load_scenario(config)?;
    if let Some(k) = seed {
        scenario.seed = k;
    } else if let Ok(raw) = env::var("RDCDS_SEED") {
        scenario.seed = raw
            .parse()
            .map_err(|_| CliError::Config(format!("RDCDS_SEED must be an unsigned integer, got {raw:?}")))?;
    }
    if let Some(prob) = random_dropouts {
        scenario.random_dropouts = Some(prob);
    }
    let report = run_scenario(&scenario).map_err(scenario_err)?;
    if let Some(path) = csv {
        fs::write(path, report.to_csv())
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = report_path {
        fs::write(path, report.to_json())
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    emit(&report.to_json());
    emit("\n");
    match report.first_failure() {
        Some(failure) => Err(CliError::Check(failure)),
        None => Ok(()),
    }
}

fn cmd_verify(config: &Path) -> Result<(), CliError> {
    let scenario = load_scenario(config)?;
    let report = run_verification(&scenario).map_err(scenario_err)?;
    emit(&report.to_json());
    emit("\n");
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::Check(
            report.first_counterexample.clone().unwrap_or_else(|| "unnamed check".into()),
        ))
    }
}

/// The canonical dropout set with `d1` unconstrained and `d2` constrained
/// servers: prefixes of each group. Bounds depend only on these counts.
fn representative_dropouts(p: &SystemParams, d1: usize, d2: usize) -> Result<DropoutSet, CliError> {
    let s = p.constrained_servers;
    let mut servers: Vec<usize> = (1..=d2).collect();
    servers.extend(s + 1..=s + d1);
    DropoutSet::new(servers, p.servers).map_err(config_err)
}

/// Appends one CSV row per feasible operation on one tuple; returns the first
/// row where the closed form and the LP disagree, if any.
fn bounds_rows(p: &SystemParams, rows: &mut Vec<String>) -> Result<Option<String>, CliError> {
    let n = p.servers;
    let s = p.constrained_servers;
    let omega = p.noise_rows();
    let max_read = n - p.read_threshold;
    let label =
        format!("{}-{}-{}-{}", n, p.read_threshold, p.storage_denominator, s);
    let mut first_bad = None;
    for d in 0..=max_read.max(omega) {
        for d2 in 0..=d.min(s) {
            let d1 = d - d2;
            if d1 > n - s {
                continue;
            }
            let dropouts = representative_dropouts(p, d1, d2)?;
            let drop_label = dropouts
                .servers()
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("|");
            if p.read_case(&dropouts).is_ok() {
                let closed = closed_read_bound(p, &dropouts).map_err(check_err)?;
                let lp = lp_min(&build_read_lp(p, &dropouts).map_err(check_err)?)
                    .map_err(check_err)?;
                let ok = closed == lp;
                let row = format!("{label},{drop_label},,{closed},{lp},{ok}");
                if !ok && first_bad.is_none() {
                    first_bad = Some(row.clone());
                }
                rows.push(row);
            }
            for x in 0..=omega.saturating_sub(d) {
                if p.update_case(&dropouts, x).is_err() {
                    continue;
                }
                let closed = closed_update_bound(p, &dropouts, x).map_err(check_err)?;
                let lp = lp_min(&build_update_lp(p, &dropouts, x).map_err(check_err)?)
                    .map_err(check_err)?;
                let ok = closed == lp;
                let row = format!("{label},{drop_label},{x},{closed},{lp},{ok}");
                if !ok && first_bad.is_none() {
                    first_bad = Some(row.clone());
                }
                rows.push(row);
            }
        }
    }
    Ok(first_bad)
}

/// Bound computations run on already validated inputs, so a failure here is a
/// broken assertion, not a config problem.
fn check_err(e: Error) -> CliError {
    CliError::Check(e.to_string())
}

fn parse_sweep(raw: &str) -> Result<RangeInclusive<usize>, CliError> {
    let bad = || CliError::Config(format!("sweep range {raw:?} is not N, N..M, or N..=M"));
    if let Some((a, b)) = raw.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let lo: usize = a.trim().parse().map_err(|_| bad())?;
        let hi: usize = b.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        Ok(lo..=hi)
    } else {
        let v: usize = raw.trim().parse().map_err(|_| bad())?;
        Ok(v..=v)
    }
}

/// Every tuple the bound table sweeps: layered tuples that are well posed,
/// plus fully constrained tuples (S >= K_c), with K_c capped at N.
fn sweep_tuples(range: RangeInclusive<usize>) -> Vec<SystemParams> {
    let mut out = Vec::new();
    for n in range {
        for r_r in 1..=n {
            for k_c in 1..=n {
                for s in 0..n {
                    let Ok(p) = SystemParams::new(n, r_r, k_c, s) else {
                        continue;
                    };
                    if s < k_c {
                        let Ok(d) = p.derive() else { continue };
                        if !d.well_posed {
                            continue;
                        }
                    }
                    out.push(p);
                }
            }
        }
    }
    out
}

fn cmd_bounds(tuple: &[usize], sweep: Option<&str>, out: Option<&Path>) -> Result<(), CliError> {
    let tuples = match sweep {
        Some(raw) => sweep_tuples(parse_sweep(raw)?),
        None => vec![build_params(tuple[0], tuple[1], tuple[2], tuple[3], None)?],
    };
    if tuples.is_empty() {
        return Err(CliError::Config("sweep matched no admissible tuples".into()));
    }
    let mut rows = vec!["params,dropouts,X,closed_form,lp_min,match".to_string()];
    let mut first_bad = None;
    for p in &tuples {
        let bad = bounds_rows(p, &mut rows)?;
        if first_bad.is_none() {
            first_bad = bad;
        }
    }
    let table = rows.join("\n") + "\n";
    if let Some(path) = out {
        fs::write(path, &table)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    emit(&table);
    match first_bad {
        Some(row) => Err(CliError::Check(format!(
            "closed-form and LP bounds disagree: {row}"
        ))),
        None => Ok(()),
    }
}
