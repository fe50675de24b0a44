//! Canonical JSON: keys sorted (serde_json's default map is ordered), two-space
//! indent, trailing newline. Identical values give identical bytes.

use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub fn canonical<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Usage(format!("serialize: {e}")))?;
    let mut s = serde_json::to_string_pretty(&v).expect("values always serialize");
    s.push('\n');
    Ok(s)
}

/// To `path` if given, else stdout.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(CliError::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
