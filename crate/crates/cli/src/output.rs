//! Deterministic file emitters. Every writer produces byte-identical output
//! for identical inputs: maps are ordered, floats use the shortest
//! round-trip representation, and nothing timestamps itself.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| file_error(path, e))?;
    Ok(())
}

/// CSV with a header derived from the row struct's field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(CliError::Csv)?;
    for row in rows {
        writer.serialize(row).map_err(CliError::Csv)?;
    }
    writer.flush().map_err(|e| file_error(path, e))?;
    Ok(())
}

/// `name.csv` or `name.json` under `dir`, per the configured format.
pub fn formatted_path(dir: &Path, name: &str, ext: &str) -> PathBuf {
    dir.join(format!("{name}.{ext}"))
}

/// Replace path-hostile characters so category/population tags can name files.
pub fn safe_component(tag: &str) -> String {
    tag.chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

pub fn file_error(path: &Path, err: std::io::Error) -> CliError {
    CliError::Invalid(format!("cannot write {}: {err}", path.display()))
}
