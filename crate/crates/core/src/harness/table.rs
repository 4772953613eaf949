//! CSV output. Every file has a header row, `.` decimals and a trailing
//! newline; floats are written in shortest round-trip form.

use std::fs::File;
use std::path::Path;

use crate::error::Result;

pub struct CsvOut {
    w: csv::Writer<File>,
    width: usize,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
        w.write_record(header)?;
        Ok(CsvOut { w, width: header.len() })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        debug_assert_eq!(fields.len(), self.width);
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Writes a whole table at once.
pub fn emit_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = CsvOut::create(path, header)?;
    for r in rows {
        out.row(r)?;
    }
    out.finish()
}

pub fn num(v: f64) -> String {
    v.to_string()
}
