//! CSV assembly and atomic file output.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

/// A CSV document: one comment line with the run parameters, optional extra
/// comment lines, then a header row and data rows.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(command: &str, params: &[(&str, String)]) -> Self {
        let mut text = format!("# gapjunc {} {command}", env!("CARGO_PKG_VERSION"));
        for (k, v) in params {
            text.push_str(&format!(" {k}={v}"));
        }
        text.push('\n');
        Csv { text }
    }

    pub fn comment(&mut self, line: impl Display) {
        self.text.push_str(&format!("# {line}\n"));
    }

    pub fn header(&mut self, cols: &str) {
        self.text.push_str(cols);
        self.text.push('\n');
    }

    pub fn row(&mut self, fields: &[&dyn Display]) {
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            first = false;
            self.text.push_str(&f.to_string());
        }
        self.text.push('\n');
    }

    /// Appends pre-rendered CSV (header and rows).
    pub fn raw(&mut self, bytes: &[u8]) {
        self.text.push_str(&String::from_utf8_lossy(bytes));
    }

    pub fn emit(&self, output: Option<&Path>) -> std::io::Result<()> {
        match output {
            Some(path) => write_atomic(path, self.text.as_bytes()),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(self.text.as_bytes())?;
                out.flush()
            }
        }
    }
}

/// Writes to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Renders a missing value as `NaN`.
pub fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "NaN".into())
}
