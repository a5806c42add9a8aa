//! Command-line front end: `factor`, `order`, `gcd` and `simulate-state`
//! subcommands with human-readable tables, JSON output in the stable result
//! schema, and optional trace records.
//!
//! Exit statuses: 0 on success (factors found or query answered), 2 when a
//! factoring run exhausts its budget without factors, 1 on usage or domain
//! errors. The `QSHOR_SEED` environment variable supplies a default seed; a
//! key=value config file may fill in flag defaults, flags win.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::gates;
use crate::numtheory;
use crate::pipelines::{
    self, AttemptOutcome, FactoringResult, Method, QoConfig, QoRun, ShorConfig,
};
use crate::statevector::{RegisterLayout, StateVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_FACTORS: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qshor",
    version,
    about = "Statevector factoring simulator with measurement- and selection-driven period finding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Shor,
    Qo,
    Classical,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factor an odd composite with the chosen pipeline
    Factor {
        n: u64,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Seed for every random draw; defaults to $QSHOR_SEED, then 0
        #[arg(long)]
        seed: Option<u64>,
        /// First-register width override (shor)
        #[arg(long)]
        first_register_bits: Option<usize>,
        /// Number of coprime bases (qo)
        #[arg(long)]
        h_cap: Option<usize>,
        /// Phase-ramp parameter (qo)
        #[arg(long)]
        omega: Option<f64>,
        /// Attempt budget; counts questions under qo
        #[arg(long)]
        max_attempts: Option<u32>,
        /// Emit the result as JSON in the stable schema
        #[arg(long)]
        json: bool,
        /// Additionally emit trace records
        #[arg(long)]
        trace: bool,
        /// key=value file supplying flag defaults
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Greatest common divisor, optionally with the recursion table
    Gcd {
        a: u64,
        b: u64,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
    },
    /// Multiplicative order of a modulo n by direct search
    Order {
        a: u64,
        n: u64,
        #[arg(long)]
        json: bool,
    },
    /// Run the order-finding circuit and dump the final statevector
    SimulateState {
        n: u64,
        a: u64,
        #[arg(long)]
        first_register_bits: Option<usize>,
        /// Also print the first-register distribution
        #[arg(long)]
        distribution: bool,
    },
}

#[derive(Debug, Default)]
struct FileConfig {
    seed: Option<u64>,
    first_register_bits: Option<usize>,
    h_cap: Option<usize>,
    omega: Option<f64>,
    max_attempts: Option<u32>,
    method: Option<MethodArg>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for key `{key}`")))
}

fn load_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "seed" => cfg.seed = Some(parse_value(key, value)?),
            "first-register-bits" | "first_register_bits" => {
                cfg.first_register_bits = Some(parse_value(key, value)?)
            }
            "h-cap" | "h_cap" => cfg.h_cap = Some(parse_value(key, value)?),
            "omega" => cfg.omega = Some(parse_value(key, value)?),
            "max-attempts" | "max_attempts" => cfg.max_attempts = Some(parse_value(key, value)?),
            "method" => {
                cfg.method = Some(match value {
                    "shor" => MethodArg::Shor,
                    "qo" => MethodArg::Qo,
                    "classical" => MethodArg::Classical,
                    other => return Err(Error::Config(format!("unknown method `{other}`"))),
                })
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
    }
    Ok(cfg)
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("QSHOR_SEED") {
        Ok(text) => text
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("QSHOR_SEED: bad value `{text}`"))),
        Err(_) => Ok(None),
    }
}

fn outcome_label(outcome: AttemptOutcome) -> &'static str {
    match outcome {
        AttemptOutcome::Success => "success",
        AttemptOutcome::OddPeriod => "odd_period",
        AttemptOutcome::TrivialGcds => "trivial_gcds",
        AttemptOutcome::NoInformation => "no_information",
    }
}

fn method_label(method: Method) -> &'static str {
    match method {
        Method::Shor => "shor",
        Method::Qo => "qo",
        Method::Classical => "classical",
    }
}

fn opt_col(v: Option<u64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn print_result_table<W: Write>(out: &mut W, result: &FactoringResult) -> std::io::Result<()> {
    writeln!(
        out,
        "n = {}  method = {}  seed = {}",
        result.n,
        method_label(result.method),
        result.seed
    )?;
    if !result.attempts.is_empty() {
        writeln!(out, "#  a  t  r  outcome")?;
        for (i, at) in result.attempts.iter().enumerate() {
            writeln!(
                out,
                "{}  {}  {}  {}  {}",
                i + 1,
                at.a,
                opt_col(at.measured_t),
                opt_col(at.candidate_r),
                outcome_label(at.outcome)
            )?;
        }
    }
    match result.factors {
        Some((p, q)) => writeln!(out, "factors: {p} x {q}"),
        None => writeln!(out, "no factors within budget"),
    }
}

/// Run a parsed invocation, writing results to `out` and diagnostics to
/// `err`. Returns the process exit status.
pub fn run<W: Write, E: Write>(cli: &Cli, out: &mut W, err: &mut E) -> i32 {
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch<W: Write>(cli: &Cli, out: &mut W) -> Result<i32> {
    match &cli.command {
        Command::Factor {
            n,
            method,
            seed,
            first_register_bits,
            h_cap,
            omega,
            max_attempts,
            json,
            trace,
            config,
        } => {
            let file = match config {
                Some(path) => load_config(path)?,
                None => FileConfig::default(),
            };
            let seed = match seed.or(file.seed) {
                Some(s) => s,
                None => env_seed()?.unwrap_or(0),
            };
            let method = method.or(file.method).unwrap_or(MethodArg::Shor);
            let first_register_bits = first_register_bits.or(file.first_register_bits);
            let h_cap = h_cap.or(file.h_cap);
            let omega = omega.or(file.omega);
            let max_attempts = max_attempts.or(file.max_attempts);
            run_factor(
                *n,
                method,
                seed,
                first_register_bits,
                h_cap,
                omega,
                max_attempts,
                *json,
                *trace,
                out,
            )
        }
        Command::Gcd { a, b, trace, json } => {
            let (g, gcd_trace) = numtheory::gcd(*a, *b)?;
            if *json {
                let value = if *trace {
                    serde_json::json!({ "a": a, "b": b, "gcd": g, "trace": gcd_trace.rows })
                } else {
                    serde_json::json!({ "a": a, "b": b, "gcd": g })
                };
                writeln!(out, "{value}").ok();
            } else {
                if *trace {
                    writeln!(out, "#  a  b").ok();
                    for row in &gcd_trace.rows {
                        writeln!(out, "{}  {}  {}", row.step, row.a, row.b).ok();
                    }
                }
                writeln!(out, "gcd({a}, {b}) = {g}").ok();
            }
            Ok(EXIT_OK)
        }
        Command::Order { a, n, json } => {
            let order = numtheory::multiplicative_order(*a, *n)?;
            if *json {
                writeln!(out, "{}", serde_json::json!({ "a": a, "n": n, "order": order.r })).ok();
            } else {
                writeln!(out, "{}", order.r).ok();
            }
            Ok(EXIT_OK)
        }
        Command::SimulateState {
            n,
            a,
            first_register_bits,
            distribution,
        } => {
            if *n < 2 {
                return Err(Error::InputTooSmall { n: *n, min: 2 });
            }
            if *n >= numtheory::MAX_MODULUS {
                return Err(Error::InputTooLarge(*n));
            }
            let l = first_register_bits.unwrap_or(numtheory::qubits_to_hold(n * n));
            let width = numtheory::qubits_to_hold(*n);
            let layout = RegisterLayout::new(&[("first", l), ("second", width)])?;
            let mut state = StateVector::zero_state(layout);
            gates::apply_qft(&mut state, "first")?;
            gates::apply_mod_exp(&mut state, "first", "second", *a, *n)?;
            gates::apply_qft(&mut state, "first")?;
            write!(out, "{}", state.dump()).ok();
            if *distribution {
                writeln!(out, "first-register distribution:").ok();
                for (t, p) in state.register_distribution("first")?.iter().enumerate() {
                    if *p > 1e-12 {
                        writeln!(out, "{t} {p:.11e}").ok();
                    }
                }
            }
            Ok(EXIT_OK)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_factor<W: Write>(
    n: u64,
    method: MethodArg,
    seed: u64,
    first_register_bits: Option<usize>,
    h_cap: Option<usize>,
    omega: Option<f64>,
    max_attempts: Option<u32>,
    json: bool,
    trace: bool,
    out: &mut W,
) -> Result<i32> {
    let (result, qo_run): (FactoringResult, Option<QoRun>) = match method {
        MethodArg::Shor => {
            let cfg = ShorConfig {
                first_register_bits,
                max_attempts: max_attempts.unwrap_or(64),
                rng_seed: seed,
                ..ShorConfig::default()
            };
            (pipelines::shor_factor(n, &cfg)?, None)
        }
        MethodArg::Qo => {
            let cfg = QoConfig {
                h_cap: h_cap.unwrap_or(2),
                omega: omega.unwrap_or(0.0),
                max_questions: max_attempts.map(u64::from),
                rng_seed: seed,
                ..QoConfig::default()
            };
            let run = pipelines::qo_factor(n, &cfg)?;
            (run.result.clone(), Some(run))
        }
        MethodArg::Classical => (pipelines::classical_factor(n)?, None),
    };

    if json {
        writeln!(out, "{}", serde_json::to_string(&result).unwrap()).ok();
    } else {
        print_result_table(out, &result).ok();
    }
    if trace {
        if let Some(run) = &qo_run {
            for q in &run.questions {
                writeln!(
                    out,
                    "selection r0={} attempts={} trace={}",
                    q.r0,
                    q.selection_attempts,
                    serde_json::to_string(&q.trace).unwrap()
                )
                .ok();
            }
        }
        for at in &result.attempts {
            if at.gcd_shortcut.is_some() {
                let (_, gcd_trace) = numtheory::gcd(at.a, n)?;
                writeln!(
                    out,
                    "gcd trace a={} {}",
                    at.a,
                    serde_json::to_string(&gcd_trace.rows).unwrap()
                )
                .ok();
            }
        }
    }
    Ok(if result.factors.is_some() {
        EXIT_OK
    } else {
        EXIT_NO_FACTORS
    })
}
