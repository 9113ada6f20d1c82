//! `collision-reflex` command-line front end.
//!
//! Every analysis of the library is a subcommand. Settings come from an
//! optional JSON [`RunConfig`](config::RunConfig), then `--set key=value`
//! overrides, then subcommand flags. Results go to stdout as JSON or to
//! `--out` as CSV/JSON chosen by extension.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{CommandFactory, FromArgMatches, Parser};

use crate::commands::Command;
use crate::config::{Format, RunConfig};

/// Error with the exit code and tag printed as `error: <code>: <message>`.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Parse(String),
    Domain(String),
    Core(collision_reflex::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use collision_reflex::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Parse(_) => 3,
            CliError::Core(E::Io { .. } | E::Parse { .. }) => 3,
            CliError::Domain(_) | CliError::Core(_) => 1,
        }
    }

    pub fn tag(&self) -> &'static str {
        use collision_reflex::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Parse(_) => "parse",
            CliError::Domain(_) => "domain",
            CliError::Core(e) => match e {
                E::Domain { .. } => "domain",
                E::InvalidModel(_) => "invalid-model",
                E::SingularConfiguration { .. } => "singular",
                E::HorizonExceeded { .. } => "horizon",
                E::InvalidTrace { .. } => "invalid-trace",
                E::TooFewSamples { .. } => "too-few-samples",
                E::NoContact => "no-contact",
                E::AmbiguousContact { .. } => "ambiguous-contact",
                E::Parse { .. } => "parse",
                E::Io { .. } => "io",
            },
        }
    }

    fn message(&self) -> String {
        let text = match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Parse(m) | CliError::Domain(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        };
        text.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

impl From<collision_reflex::Error> for CliError {
    fn from(e: collision_reflex::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "collision-reflex",
    version,
    about = "Collision reflex metric: impulse models, actuator scaling, two-link surfaces and force-trace analysis",
    after_help = "Exit codes: 0 success, 1 domain error, 2 usage error, 3 I/O or parse error.\n\
                  COLLISION_REFLEX_THREADS caps worker threads (0 or unset: automatic)."
)]
pub struct Cli {
    /// JSON run configuration
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override a config value by dotted path, e.g. params.v_0=0.8 (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Write the result here; format follows the extension (.csv or .json)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Format for stdout
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Print the effective configuration instead of running
    #[arg(long, global = true)]
    pub dump_config: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

fn configure_threads() {
    let threads = std::env::var("COLLISION_REFLEX_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if threads > 0 {
        // Fails only when a pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn parse_args<I, T>(argv: I) -> Result<Cli, Result<i32, CliError>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = Cli::command()
        .mut_subcommands(|sub| sub.allow_negative_numbers(true))
        .try_get_matches_from(argv);
    match matches.and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => Ok(cli),
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    Err(Ok(0))
                }
                _ => {
                    let rendered = e.to_string();
                    let first = rendered
                        .lines()
                        .find(|l| !l.trim().is_empty())
                        .unwrap_or("invalid arguments")
                        .trim_start_matches("error: ")
                        .to_string();
                    Err(Err(CliError::Usage(first)))
                }
            }
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    for assignment in &cli.set {
        config = config::apply_set(&config, assignment)?;
    }
    if let Some(command) = &cli.command {
        config = command.apply_flags(config)?;
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let config = effective_config(&cli)?;
    // --out/--format apply to this run only and are not folded into the config
    let out = cli.out.clone().or_else(|| config.io.out.clone());
    let format = match &out {
        Some(path) => output::format_for_path(path)?,
        None => cli.format.or(config.io.format).unwrap_or(Format::Json),
    };

    if cli.dump_config {
        if format == Format::Csv {
            return Err(CliError::Usage("--dump-config writes JSON only".into()));
        }
        let mut text = serde_json::to_vec_pretty(&config).expect("config serializes");
        text.push(b'\n');
        output::emit(&text, out.as_deref())?;
        return Ok(0);
    }

    let Some(command) = &cli.command else {
        return Err(CliError::Usage("a subcommand is required (see --help)".into()));
    };
    let outcome = command.run(&config)?;
    output::emit(&outcome.report.render(format), out.as_deref())?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(0),
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    configure_threads();
    let result = match parse_args(argv) {
        Ok(cli) => execute(cli),
        Err(done) => done,
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {}", e.tag(), e.message());
            e.exit_code()
        }
    }
}
