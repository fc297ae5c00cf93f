use std::fmt::Write as _;
use std::io::{self, Write};

use teamcorr::TeamError;
use thiserror::Error;

pub const CSV_HEADER: &str = "# teamcorr-v1";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Team(#[from] TeamError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
    #[error("check failed: {0}")]
    Assertion(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Team(e) if e.is_input_error() => 2,
            CliError::Team(_) => 3,
            CliError::Usage(_) | CliError::Write { .. } => 2,
            CliError::Assertion(_) => 4,
        }
    }
}

/// Text report and CSV table of one command.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    csv: String,
    /// Set when an embedded check failed; the report is still emitted.
    pub failure: Option<String>,
}

impl Outcome {
    pub fn new(columns: &[&str]) -> Self {
        Outcome {
            text: String::new(),
            csv: format!("{CSV_HEADER}\n{}\n", columns.join(",")),
            failure: None,
        }
    }

    /// Takes a complete CSV table, header comment included.
    pub fn from_csv(csv: String) -> Self {
        Outcome {
            text: String::new(),
            csv,
            failure: None,
        }
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.csv, "{}", fields.join(","));
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.failure.get_or_insert(msg.into());
    }

    /// The report goes to stdout, or to stderr when stdout carries the CSV.
    pub fn emit(&self, out: Option<&str>, quiet: bool) -> Result<(), CliError> {
        let csv_on_stdout = out == Some("-");
        if !quiet {
            if csv_on_stdout {
                eprint!("{}", self.text);
            } else {
                print!("{}", self.text);
            }
        }
        match out {
            None => Ok(()),
            Some("-") => io::stdout()
                .write_all(self.csv.as_bytes())
                .map_err(|source| CliError::Write {
                    path: "stdout".into(),
                    source,
                }),
            Some(path) => std::fs::write(path, &self.csv).map_err(|source| CliError::Write {
                path: path.into(),
                source,
            }),
        }
    }
}
