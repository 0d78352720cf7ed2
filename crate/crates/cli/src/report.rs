use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Shortest decimal string that parses back to the same double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// A comma-separated table with a header row, written in one piece.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        self.row_text(values.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn row_text(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns, "row width does not match header");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        fs::write(path, &self.text)?;
        Ok(path.to_path_buf())
    }
}
