use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SEMILOCAL_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    #[value(name = "json-lines")]
    JsonLines,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "jsonl",
        }
    }
}

/// Where a table goes. `None` means stdout.
pub struct Sink {
    path: Option<PathBuf>,
    format: Format,
}

impl Sink {
    /// `--out` wins; a relative `--out` is placed under the output directory
    /// from the environment when that is set. Without `--out` the table goes
    /// to `<dir>/<command>.<ext>` if the directory is set, else to stdout.
    pub fn resolve(out: Option<&Path>, out_dir: Option<&Path>, command: &str, format: Format) -> Self {
        let path = match (out, out_dir) {
            (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
            (Some(p), _) => Some(p.to_path_buf()),
            (None, Some(dir)) => Some(dir.join(format!("{command}.{}", format.extension()))),
            (None, None) => None,
        };
        Sink { path, format }
    }

    pub fn write_rows<T: Serialize>(&self, rows: &[T]) -> Result<(), CliError> {
        let mut buf = Vec::new();
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut buf);
                for row in rows {
                    w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
                }
                w.flush().map_err(|e| CliError::Io(e.to_string()))?;
            }
            Format::JsonLines => {
                for row in rows {
                    serde_json::to_writer(&mut buf, row).map_err(|e| CliError::Io(e.to_string()))?;
                    buf.push(b'\n');
                }
            }
        }
        match &self.path {
            Some(p) => {
                if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
                }
                fs::write(p, &buf).map_err(|e| io_error(p, e))
            }
            None => io::stdout()
                .write_all(&buf)
                .map_err(|e| CliError::Io(e.to_string())),
        }
    }

    /// Prints the report to stderr and, for file output, next to the table
    /// as `<stem>.report.toml`.
    pub fn write_report<T: Serialize>(&self, report: &T) -> Result<(), CliError> {
        let text = toml::to_string(report).map_err(|e| CliError::Io(e.to_string()))?;
        eprint!("{text}");
        if let Some(p) = &self.path {
            let report_path = p.with_extension("report.toml");
            fs::write(&report_path, &text).map_err(|e| io_error(&report_path, e))?;
        }
        Ok(())
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
