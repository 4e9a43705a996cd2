//! CSV files with a single `#` provenance line ahead of the column header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::CliError;

/// Run facts written at the top of every file.
#[derive(Debug, Clone)]
pub struct Header {
    pub config_sha256: String,
    pub grid_m: usize,
    pub scheme: String,
    pub coupling_scale: f64,
    pub recurrence_time: f64,
    /// Samples with `t < recurrence_time / 2`, out of the total.
    pub within_window: (usize, usize),
}

impl Header {
    fn line(&self) -> String {
        format!(
            "# config_sha256={} grid_m={} scheme={} coupling_scale={} recurrence_time={} within_window={}/{}",
            self.config_sha256,
            self.grid_m,
            self.scheme,
            self.coupling_scale,
            self.recurrence_time,
            self.within_window.0,
            self.within_window.1
        )
    }
}

pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    io_error(path, e.into())
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &Header, columns: &[String]) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut buf = BufWriter::new(file);
        writeln!(buf, "{}", header.line()).map_err(|e| io_error(&path, e))?;
        let mut writer = csv::Writer::from_writer(buf);
        writer.write_record(columns).map_err(|e| csv_error(&path, e))?;
        Ok(Table { path, writer })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.writer.write_record(fields).map_err(|e| csv_error(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush().map_err(|e| io_error(&self.path, e))?;
        Ok(self.path)
    }
}
