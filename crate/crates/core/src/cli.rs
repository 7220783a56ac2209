//! Command-line driver.
//!
//! Exit codes: `0` success, `1` usage or input error, `2` verification failure.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::engine::DeConfig;
use crate::expression::ExpressionProfile;
use crate::fitness::{CandidateId, SyntheticOracle};
use crate::genome::{MelodyConfig, SearchBounds};
use crate::midi::render_phrase;
use crate::session::Session;
use crate::synthetic::{self, SyntheticRun};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VERIFY: u8 = 2;

/// Sampling interval for sphere runs.
const SPHERE_BOUND: f64 = 5.12;

#[derive(Debug, Parser)]
#[command(name = "evomelody", version, about = "Interactive differential-evolution melody composer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Sphere,
    HiddenTarget,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run DE against a synthetic objective and print a convergence report.
    EvolveSynthetic {
        #[arg(long, value_enum, default_value = "sphere")]
        oracle: OracleKind,
        #[arg(long, default_value_t = 12)]
        dims: usize,
        #[arg(long, default_value_t = 30)]
        pop: usize,
        #[arg(long, default_value_t = 300)]
        gens: u64,
        #[arg(long = "F", default_value_t = 0.5)]
        f: f64,
        #[arg(long = "Cr", default_value_t = 0.9)]
        cr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the best genome as a melody (needs dims divisible by 3).
        #[arg(long)]
        midi: Option<PathBuf>,
    },
    /// Write one candidate of a saved session as a Standard MIDI File.
    ExportMidi {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        candidate: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild a saved session from its score log and compare with the stored state.
    Replay {
        #[arg(long)]
        session: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "EVOMELODY_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, env = "EVOMELODY_DATA_DIR")]
        data_dir: Option<PathBuf>,
    },
}

struct Failure(u8, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::EvolveSynthetic { oracle, dims, pop, gens, f, cr, seed, out, midi } => {
            evolve_synthetic(oracle, dims, pop, gens, f, cr, seed, out, midi)
        }
        Command::ExportMidi { session, candidate, out } => {
            let s = Session::load_from_path(&session).map_err(|e| usage(format!("{}: {e}", session.display())))?;
            let bytes = s.midi(&CandidateId(candidate)).map_err(|e| usage(e.to_string()))?;
            fs::write(&out, bytes).map_err(|e| usage(format!("{}: {e}", out.display())))
        }
        Command::Replay { session } => {
            let s = Session::load_from_path(&session).map_err(|e| usage(format!("{}: {e}", session.display())))?;
            let diff = s.replay_diff();
            if diff.is_empty() {
                println!("replay ok: {} round(s), population generation {}", s.history.len(), s.population.generation);
                Ok(())
            } else {
                for line in &diff {
                    println!("mismatch: {line}");
                }
                Err(Failure(EXIT_VERIFY, format!("replay diverged in {} place(s)", diff.len())))
            }
        }
        Command::Serve { addr, data_dir } => {
            let _ =
                tracing_subscriber::fmt().with_env_filter(tracing_subscriber::EnvFilter::from_default_env()).try_init();
            let rt = tokio::runtime::Runtime::new().map_err(|e| usage(e.to_string()))?;
            rt.block_on(crate::service::serve(addr, data_dir)).map_err(|e| usage(e.to_string()))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn evolve_synthetic(
    oracle: OracleKind,
    dims: usize,
    pop: usize,
    gens: u64,
    f: f64,
    cr: f64,
    seed: u64,
    out: Option<PathBuf>,
    midi: Option<PathBuf>,
) -> Result<(), Failure> {
    let de = DeConfig { population_size: pop, scale_factor: f, crossover_rate: cr, dimensions: dims, seed };
    de.validate().map_err(|e| usage(e.to_string()))?;
    let melody = MelodyConfig { notes: (dims / 3).max(1), ..MelodyConfig::default() };
    let (oracle, bounds) = match oracle {
        OracleKind::Sphere => (
            SyntheticOracle::Sphere,
            SearchBounds::uniform(dims, -SPHERE_BOUND, SPHERE_BOUND).map_err(|e| usage(e.to_string()))?,
        ),
        OracleKind::HiddenTarget => {
            if !dims.is_multiple_of(3) {
                return Err(usage("hidden-target runs need dims divisible by 3"));
            }
            let bounds = melody.sampling_bounds();
            (SyntheticOracle::hidden_target(seed, &bounds), bounds)
        }
    };
    let run = SyntheticRun { oracle, de, bounds, generations: gens };
    let report = synthetic::run(&run).map_err(|e| usage(e.to_string()))?;
    let text = report.to_text(&run);
    match out {
        Some(path) => fs::write(&path, &text).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
    }
    if let Some(path) = midi {
        let phrase = melody.decode(&report.best).map_err(|e| usage(e.to_string()))?;
        let bytes = render_phrase(&phrase, &ExpressionProfile::default(), 480, 0).map_err(|e| usage(e.to_string()))?;
        fs::write(&path, bytes).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
