//! Regression store: `{dir}/{check}-seed{seed}.json` holding the generating
//! config and the oracle values. Files change only on explicit regeneration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;
use crate::output::canonical;

pub const ENV_DIR: &str = "KISIN_GOLDEN_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenFile {
    pub config: Value,
    pub values: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GoldenStatus {
    Match,
    Mismatch,
    Missing,
    Written,
}

impl GoldenStatus {
    pub fn label(&self) -> &'static str {
        match self {
            GoldenStatus::Match => "match",
            GoldenStatus::Mismatch => "MISMATCH",
            GoldenStatus::Missing => "none",
            GoldenStatus::Written => "written",
        }
    }
}

pub struct Store {
    dir: PathBuf,
}

impl Store {
    /// `KISIN_GOLDEN_DIR`, else `golden/` under the working directory.
    pub fn from_env() -> Self {
        let dir = std::env::var_os(ENV_DIR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("golden"));
        Store { dir }
    }

    pub fn path(&self, check: &str, seed: u64) -> PathBuf {
        self.dir.join(format!("{check}-seed{seed}.json"))
    }

    pub fn compare_or_write(
        &self,
        check: &str,
        seed: u64,
        file: &GoldenFile,
        regenerate: bool,
    ) -> Result<GoldenStatus, CliError> {
        let path = self.path(check, seed);
        if regenerate {
            std::fs::create_dir_all(&self.dir)?;
            std::fs::write(&path, canonical(file)?)?;
            return Ok(GoldenStatus::Written);
        }
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(GoldenStatus::Missing),
            Err(e) => return Err(e.into()),
        };
        let stored: GoldenFile =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("golden file {}: {e}", path.display())))?;
        // Round-trip through canonical text so both sides compare as parsed JSON.
        let fresh: GoldenFile = serde_json::from_str(&canonical(file)?).expect("canonical output parses");
        Ok(if stored == fresh { GoldenStatus::Match } else { GoldenStatus::Mismatch })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn write_then_match() {
        let dir = std::env::temp_dir().join(format!("kisin-golden-{}", std::process::id()));
        let store = Store { dir: dir.clone() };
        let file = GoldenFile { config: json!({"seed": 3}), values: json!([1, "1/3"]) };
        assert_eq!(store.compare_or_write("t", 3, &file, false).unwrap(), GoldenStatus::Missing);
        assert_eq!(store.compare_or_write("t", 3, &file, true).unwrap(), GoldenStatus::Written);
        assert_eq!(store.compare_or_write("t", 3, &file, false).unwrap(), GoldenStatus::Match);
        let other = GoldenFile { values: json!([2]), ..file };
        assert_eq!(store.compare_or_write("t", 3, &other, false).unwrap(), GoldenStatus::Mismatch);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
