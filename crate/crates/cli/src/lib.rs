//! Command-line driver: loads a scenario, runs the requested checks and writes
//! `report.json` and `report.txt`.
//!
//! Exit codes: 0 when every check passes, 1 when a numerical check fails, 2 for usage
//! and scenario errors (no report is written).

pub mod builtins;
pub mod commands;
pub mod report;
pub mod scenario;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::{Map, Value};

use commands::{FoliationContext, LieContext};
use report::{num, to_json_string, Report};
use scenario::{SchemaError, Scenario};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Bott connection: values, linearity and flatness.
    Bott,
    /// Holonomy action: morphism law, fixed base point, linear parts.
    Holonomy,
    /// Conjugation and bisection routes agree.
    Agree,
    /// Derivative of the adjoint action on the quotient against the Bott map.
    Differentiate,
    /// Ideal exactly when the holonomy action is trivial.
    Normality,
    /// Right invariance of leafwise holonomy.
    Rightinv,
    /// Foliation holonomy, variational transport and their comparison.
    Foliation,
    /// Foliation holonomy recomputed in the pair groupoid.
    Pairdemo,
    /// Every command that applies to the scenario.
    All,
    /// Print the scenario as JSON and exit.
    Show,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bott => "bott",
            Command::Holonomy => "holonomy",
            Command::Agree => "agree",
            Command::Differentiate => "differentiate",
            Command::Normality => "normality",
            Command::Rightinv => "rightinv",
            Command::Foliation => "foliation",
            Command::Pairdemo => "pairdemo",
            Command::All => "all",
            Command::Show => "show",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "holab", version, about = "Holonomy checks for Lie pairs and foliations")]
pub struct Cli {
    pub command: Command,
    /// Scenario JSON file.
    #[arg(long, value_name = "FILE", conflicts_with = "builtin", required_unless_present = "builtin")]
    pub scenario: Option<PathBuf>,
    /// Name of a built-in scenario.
    #[arg(long, value_name = "NAME")]
    pub builtin: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for report.json and report.txt.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Multiplies every residual tolerance.
    #[arg(long, value_name = "X", default_value_t = 1.0)]
    pub tol_scale: f64,
}

/// Outcome of a run that got as far as computing.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub json: String,
    pub text: String,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("{0}")]
    Usage(String),
}

fn load(cli: &Cli) -> Result<Scenario, RunError> {
    match (&cli.scenario, &cli.builtin) {
        (Some(path), _) => Ok(Scenario::load(path)?),
        (None, Some(name)) => builtins::builtin(name).ok_or_else(|| {
            RunError::Usage(format!("unknown built-in scenario `{name}`; available: {}", builtins::NAMES.join(", ")))
        }),
        (None, None) => Err(RunError::Usage("give --scenario FILE or --builtin NAME".into())),
    }
}

const LIE_COMMANDS: [Command; 6] =
    [Command::Bott, Command::Differentiate, Command::Holonomy, Command::Agree, Command::Normality, Command::Rightinv];

/// Runs `command` on `scenario` and renders the reports.
pub fn execute(scenario: &Scenario, command: Command, seed: u64, tol_scale: f64) -> Result<Outcome, RunError> {
    if !(tol_scale > 0.0 && tol_scale.is_finite()) {
        return Err(RunError::Usage(format!("--tol-scale must be positive, got {tol_scale}")));
    }
    let mut report = Report::new();
    let mut ran: Vec<Command> = Vec::new();
    match scenario {
        Scenario::LiePair(s) => {
            let setup = s.build()?;
            let ctx = LieContext { setup: &setup, scenario: s, tol: s.tolerances.scaled(tol_scale), seed };
            let selected: Vec<Command> = match command {
                Command::All => LIE_COMMANDS.to_vec(),
                c if LIE_COMMANDS.contains(&c) => vec![c],
                c => return Err(RunError::Usage(format!("`{}` needs a foliation scenario", c.name()))),
            };
            for c in selected {
                match c {
                    Command::Bott => commands::bott(&ctx, &mut report),
                    Command::Differentiate => commands::differentiate(&ctx, &mut report),
                    Command::Holonomy => commands::holonomy(&ctx, &mut report),
                    Command::Agree => commands::agree(&ctx, &mut report),
                    Command::Normality => commands::normality(&ctx, &mut report),
                    Command::Rightinv => commands::rightinv(&ctx, &mut report),
                    _ => unreachable!(),
                }
                ran.push(c);
            }
        }
        Scenario::Foliation(s) => {
            let setup = s.build()?;
            let ctx = FoliationContext { setup: &setup, tol: s.tolerances.scaled(tol_scale) };
            let graph = setup.model.variant() == holab_core::foliation::Variant::OdeGraph;
            let selected = match command {
                Command::All if graph => vec![Command::Foliation, Command::Pairdemo],
                Command::All | Command::Foliation => vec![Command::Foliation],
                Command::Pairdemo if graph => vec![Command::Pairdemo],
                Command::Pairdemo => {
                    return Err(RunError::Usage("`pairdemo` needs an ode_graph foliation".into()));
                }
                c => return Err(RunError::Usage(format!("`{}` needs a lie_pair scenario", c.name()))),
            };
            for c in selected {
                match c {
                    Command::Foliation => commands::foliation(&ctx, &mut report),
                    Command::Pairdemo => commands::pairdemo(&ctx, &mut report),
                    _ => unreachable!(),
                }
                ran.push(c);
            }
        }
    }
    let mut header = Map::new();
    header.insert("command".into(), Value::String(command.name().into()));
    header.insert("commands_run".into(), Value::Array(ran.iter().map(|c| Value::String(c.name().into())).collect()));
    header.insert("scenario".into(), Value::String(scenario.name().into()));
    header.insert("kind".into(), Value::String(scenario.kind().into()));
    header.insert("seed".into(), Value::from(seed));
    header.insert("tol_scale".into(), num(tol_scale));
    header.insert("holab_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    let json = to_json_string(&report.to_value(header));
    let text = report.to_text(&format!("holab {}: {} (seed {seed}, tol-scale {tol_scale})", command.name(), scenario.name()));
    Ok(Outcome { report, json, text })
}

fn thread_count() -> Result<Option<usize>, RunError> {
    match std::env::var("HOLAB_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunError::Usage(format!("HOLAB_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

fn write_reports(dir: &Path, out: &Outcome) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), &out.json)?;
    std::fs::write(dir.join("report.txt"), &out.text)
}

/// Entry point shared by the binary and the tests. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    let result = (|| -> Result<Option<Outcome>, RunError> {
        let scenario = load(&cli)?;
        if cli.command == Command::Show {
            let _ = writeln!(stdout, "{}", scenario.to_json());
            return Ok(None);
        }
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_count()? {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| RunError::Usage(format!("cannot start worker threads: {e}")))?;
        pool.install(|| execute(&scenario, cli.command, cli.seed, cli.tol_scale)).map(Some)
    })();
    match result {
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
        Ok(None) => EXIT_PASS,
        Ok(Some(outcome)) => {
            if let Err(e) = write_reports(&cli.out, &outcome) {
                let _ = writeln!(stderr, "error: cannot write reports to {}: {e}", cli.out.display());
                return EXIT_FAIL;
            }
            let _ = write!(stdout, "{}", outcome.text);
            if outcome.report.passed() {
                EXIT_PASS
            } else {
                for c in outcome.report.checks().iter().filter(|c| !c.pass) {
                    let _ = writeln!(stderr, "failed: {} = {} ({})", c.name, c.value, c.limit);
                }
                EXIT_FAIL
            }
        }
    }
}
