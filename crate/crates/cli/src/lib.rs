//! Command-line harness for `ruinlab`: experiment configs, result files and
//! the comparison suites.

// `!(x > 0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod record;
pub mod spec;
pub mod suites;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

pub use error::{CliError, CliResult};
pub use record::ResultRecord;
pub use spec::{ExperimentSpec, Format, Kind, SpecFile};

/// Writes the rows to `spec.output_path` (or stdout). An existing file is
/// an error unless `force` is set.
pub fn persist(spec: &ExperimentSpec, rows: &[ResultRecord]) -> CliResult<()> {
    let Some(path) = &spec.output_path else {
        let stdout = std::io::stdout();
        return write_rows(stdout.lock(), spec.format, rows);
    };
    let mut options = OpenOptions::new();
    options.write(true);
    if spec.force {
        options.create(true).truncate(true);
    } else {
        options.create_new(true);
    }
    let file = options.open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            CliError::io(path, "file exists; pass --force to overwrite")
        } else {
            CliError::io(path, e)
        }
    })?;
    let mut buf = std::io::BufWriter::new(file);
    write_rows(&mut buf, spec.format, rows)?;
    buf.flush().map_err(|e| CliError::io(path, e))
}

fn write_rows<W: Write>(out: W, format: Format, rows: &[ResultRecord]) -> CliResult<()> {
    match format {
        Format::Csv => record::write_csv(out, rows),
        Format::Json => record::write_json(out, rows),
    }
}

/// Validates, runs and persists a merged spec.
pub fn execute(file: SpecFile) -> CliResult<Vec<ResultRecord>> {
    let spec = file.validate()?;
    if let Some(path) = &spec.output_path {
        if path.exists() && !spec.force {
            return Err(CliError::io(path, "file exists; pass --force to overwrite"));
        }
    }
    let rows = suites::run_spec(&spec)?;
    persist(&spec, &rows)?;
    Ok(rows)
}

/// Exit code for a finished run; failures are reported as one JSON line on stderr.
pub fn report(result: CliResult<Vec<ResultRecord>>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

/// Parses the config file at `path`, runs it and persists the results.
pub fn run_config(path: &Path) -> i32 {
    report(SpecFile::load(path).and_then(execute))
}
