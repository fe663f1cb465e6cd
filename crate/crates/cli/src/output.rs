use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::args::Format;

/// A command's result in every output format.
pub struct Report {
    pub json: Value,
    pub csv: String,
    pub human: String,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("json value serializes");
                s.push('\n');
                s
            }
            Format::Csv => self.csv.clone(),
            Format::Human => self.human.clone(),
        }
    }
}

pub fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
