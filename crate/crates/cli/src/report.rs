//! CSV reports with a `#`-prefixed metadata block.
//!
//! Floats in data rows are printed as scientific decimals with 15
//! significant digits, so a rerun with the same config produces
//! byte-identical files. Nothing derived from the clock or the host is
//! written.

use std::path::Path;

use crate::CliError;

/// `{:.14e}`: the fixed width keeps diffs clean and the precision is enough
/// to round-trip any f64 that test tolerances can distinguish.
pub fn sci(x: f64) -> String {
    format!("{x:.14e}")
}

pub fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

#[derive(Debug, Default)]
pub struct Report {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Self::default();
        r.meta("tool", concat!("wassdiff ", env!("CARGO_PKG_VERSION")));
        r.meta("command", command);
        r
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) {
        self.meta.push((key.to_string(), value.into()));
    }

    pub fn meta_f64(&mut self, key: &str, value: f64) {
        self.meta(key, sci(value));
    }

    /// Echoes the resolved config assignments under `cfg.<key>` names.
    pub fn meta_config(&mut self, cfg: &crate::config::Config) {
        for (k, v) in cfg.echo() {
            self.meta(&format!("cfg.{k}"), v);
        }
    }

    pub fn header(&mut self, columns: &[&str]) {
        self.header = columns.iter().map(|c| c.to_string()).collect();
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        if !self.header.is_empty() {
            out.push_str(&self.header.join(","));
            out.push('\n');
        }
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| {
                CliError::Numerical(format!("cannot create {}: {e}", dir.display()))
            })?;
        }
        std::fs::write(path, self.render())
            .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_float_format() {
        assert_eq!(sci(0.0220141234567890123), "2.20141234567890e-2");
        assert_eq!(sci(-1.0), "-1.00000000000000e0");
        assert_eq!(sci(6.02e23), "6.02000000000000e23");
    }

    #[test]
    fn renders_meta_then_header_then_rows() {
        let mut r = Report::new("demo");
        r.meta("alpha", "1");
        r.header(&["t", "w2"]);
        r.row(vec![sci(0.0), sci(0.5)]);
        let text = r.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], concat!("# tool = wassdiff ", env!("CARGO_PKG_VERSION")));
        assert_eq!(lines[1], "# command = demo");
        assert_eq!(lines[2], "# alpha = 1");
        assert_eq!(lines[3], "t,w2");
        assert_eq!(lines[4], "0.00000000000000e0,5.00000000000000e-1");
    }
}
