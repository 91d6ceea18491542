use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::args::GlobalArgs;
use crate::{CliError, Result};

/// Buffered command output: `#` metadata lines, then CSV tables separated
/// by blank lines.
pub struct Report {
    buf: Vec<u8>,
    tables: usize,
}

impl Report {
    pub fn new(command: &str, g: &GlobalArgs) -> Self {
        let mut r = Report {
            buf: Vec::new(),
            tables: 0,
        };
        r.meta("vecbal", format!("{} {command}", env!("CARGO_PKG_VERSION")));
        r.meta("seed", g.seed);
        r.meta("trials", g.trials);
        r
    }

    pub fn meta(&mut self, key: &str, value: impl Display) {
        let _ = writeln!(self.buf, "# {key}: {value}");
    }

    /// A CSV table with a header row; nothing is written for no rows.
    pub fn table<T: Serialize>(&mut self, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut rows = rows.into_iter().peekable();
        if rows.peek().is_none() {
            return Ok(());
        }
        if self.tables > 0 {
            self.buf.push(b'\n');
        }
        self.tables += 1;
        let mut w = csv::Writer::from_writer(&mut self.buf);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub fn emit(path: Option<&Path>, body: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_file(p, |w| w.write_all(body).map_err(CliError::from)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body)?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let file_err = |source| CliError::File {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(file_err)?);
    f(&mut w)?;
    w.flush().map_err(file_err)
}
