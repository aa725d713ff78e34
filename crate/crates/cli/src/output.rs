//! Output directory handling: atomic writes, CSV tables and number formatting.

use std::io::Write;
use std::path::{Path, PathBuf};

use lz_setkit::sets::{fmt_f64, Interval};
use tempfile::NamedTempFile;

use crate::error::CliError;

/// Numbers in every output file: `.` decimal, 17 significant digits, `inf`/`-inf` for
/// unbounded values.
pub fn num(v: f64) -> String {
    fmt_f64(v)
}

/// JSON has no infinity, so unbounded values become `null`.
pub fn json_num(v: f64) -> String {
    if v.is_finite() {
        fmt_f64(v)
    } else {
        "null".into()
    }
}

pub fn json_array(xs: impl IntoIterator<Item = f64>) -> String {
    let items: Vec<String> = xs.into_iter().map(json_num).collect();
    format!("[{}]", items.join(", "))
}

pub fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::Input(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes to a temporary file in the same directory, then renames it into place.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.path(name);
        let mut tmp = NamedTempFile::new_in(&self.root)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| CliError::Input(format!("cannot write {}: {}", target.display(), e.error)))?;
        log::info!("wrote {}", target.display());
        Ok(())
    }

    pub fn write_csv(&self, name: &str, table: Table) -> Result<(), CliError> {
        self.write(name, &table.into_bytes()?)
    }
}

/// A headered CSV table built in memory.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self, CliError> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).map_err(csv_err)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(csv_err)
    }

    fn into_bytes(self) -> Result<Vec<u8>, CliError> {
        self.writer.into_inner().map_err(|e| CliError::Input(format!("csv error: {}", e.error())))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Input(format!("csv error: {e}"))
}

/// Rows `prefix…, coord, lower, upper, bounded` of an interval hull, coordinates from 1.
pub fn hull_rows(table: &mut Table, prefix: &[String], hull: &Interval) -> Result<(), CliError> {
    for i in 0..hull.dim() {
        let bounded = hull.lower[i].is_finite() && hull.upper[i].is_finite();
        let mut fields = prefix.to_vec();
        fields.extend([(i + 1).to_string(), num(hull.lower[i]), num(hull.upper[i]), bounded.to_string()]);
        table.row(&fields)?;
    }
    Ok(())
}
