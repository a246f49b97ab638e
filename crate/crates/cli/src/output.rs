// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic file output.
//!
//! Every float is quantized to 12 significant digits before serialization,
//! so reruns (and runs with different thread counts) produce byte-identical
//! files and diffs stay stable across platforms. Payloads carry no
//! timestamps.

use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific f64 round-trip")
}

/// Shortest decimal form of the 12-significant-digit value.
pub fn fmt_num(x: f64) -> String {
    let q = sig12(x);
    if q == q.trunc() && q.abs() < 1e15 {
        format!("{q:.1}") // keep a decimal point so integers read as floats
    } else {
        format!("{q}")
    }
}

pub fn write_file(path: &Path, content: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, content)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("cannot encode {}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, &text)
}

/// Simple CSV assembly; fields are written verbatim except names containing
/// commas or quotes, which are quoted.
pub struct CsvBuilder {
    text: String,
}

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        let mut builder = Self {
            text: String::new(),
        };
        builder.push_row(header.iter().map(|s| s.to_string()));
        builder
    }

    pub fn push_row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        let mut first = true;
        for field in fields {
            if !first {
                self.text.push(',');
            }
            first = false;
            if field.contains(',') || field.contains('"') || field.contains('\n') {
                self.text.push('"');
                self.text.push_str(&field.replace('"', "\"\""));
                self.text.push('"');
            } else {
                self.text.push_str(&field);
            }
        }
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Output file path helper rooted at the configured directory.
pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_quantizes() {
        assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(sig12(3900.0), 3900.0);
        assert_eq!(fmt_num(2.5), "2.5");
        assert_eq!(fmt_num(200.0), "200.0");
    }

    #[test]
    fn csv_quotes_commas() {
        let mut b = CsvBuilder::new(&["name", "value"]);
        b.push_row(["Grays Harbor".to_string(), "1.0".to_string()]);
        b.push_row(["a,b".to_string(), "2.0".to_string()]);
        let text = b.finish();
        assert!(text.contains("Grays Harbor,1.0"));
        assert!(text.contains("\"a,b\",2.0"));
    }
}
