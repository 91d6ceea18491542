//! `vecbal` command line: seeded experiments that write CSV.
//!
//! Every command writes a `#`-comment metadata header and then CSV. Output
//! depends only on the arguments (never on `--threads`), so repeated runs
//! are byte-identical. Exit codes: 0 success, 1 invalid input, 2 I/O.

mod args;
mod balance;
mod compare;
mod geometry;
mod komlos;
mod output;
mod source;

use std::fs::File;
use std::io::{self, BufReader};
use std::path::Path;

pub use args::{Cli, Command, GlobalArgs};

use vecbal::harness::with_threads;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(vecbal::Error),
    #[error("{path}: {source}")]
    File { path: String, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Core(vecbal::Error::Io(_)) => 2,
            CliError::Core(_) => 1,
            CliError::File { .. } | CliError::Io(_) => 2,
        }
    }
}

impl From<vecbal::Error> for CliError {
    fn from(e: vecbal::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(e) => CliError::Io(e),
            other => CliError::Invalid(format!("csv: {other:?}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| CliError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    if g.trials == 0 {
        return Err(invalid("--trials must be at least 1"));
    }
    if let Some(d) = g.delta {
        if !(d > 0.0 && d < 1.0) {
            return Err(invalid(format!("--delta must lie in (0, 1), got {d}")));
        }
    }
    let body = with_threads(g.threads, || match &cli.command {
        Command::Balance(a) => balance::run(g, a),
        Command::Komlos(a) => komlos::run(g, a),
        Command::Interval(a) => geometry::cmd_interval(g, a),
        Command::Tusnady(a) => geometry::cmd_tusnady(g, a),
        Command::Compare(a) => compare::run(g, a),
    })??;
    output::emit(g.output.as_deref(), &body)
}
