//! Run configuration: a JSON file merged with command-line flags, validated
//! before dispatch.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use kisin_core::connect::Rule;
use kisin_core::kisin::{base_change, Cochar, KisinPoint, KisinPointJson};
use kisin_core::phimod::{standard_module, PhiModule, PhiModuleJson};
use kisin_core::{Field, FieldSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub p: u32,
    pub m: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardConfig {
    pub p: u32,
    pub n: usize,
    pub s: i64,
    #[serde(default = "one")]
    pub alpha: u32,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub field: Option<FieldConfig>,
    pub module: Option<PhiModuleJson>,
    pub standard: Option<StandardConfig>,
    pub nu: Option<Vec<(i64, i64)>>,
    pub point: Option<KisinPointJson>,
    pub prec: Option<usize>,
    pub slack: Option<i64>,
    pub rules: Option<String>,
    pub out: Option<PathBuf>,
    pub dot: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

const DEFAULT_PREC: usize = 64;
const DEFAULT_SEED: u64 = 0;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Flags win over the file.
    pub fn merge(mut self, flags: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $(if flags.$f.is_some() { self.$f = flags.$f; })* };
        }
        take!(field, module, standard, nu, point, prec, slack, rules, out, dot, seed, jobs);
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.module.is_some() && self.standard.is_some() {
            return Err(CliError::Usage("`module` and `standard` are mutually exclusive".into()));
        }
        if let Some(f) = &self.field {
            FieldSpec::standard(f.p, f.m).map_err(|e| CliError::Usage(format!("`field`: {e}")))?;
        }
        if let Some(nu) = &self.nu {
            Cochar::new(nu.clone()).map_err(|e| CliError::Usage(format!("`nu`: {e}")))?;
        }
        if let Some(r) = &self.rules {
            Rule::parse_list(r).map_err(|e| CliError::Usage(format!("`rules`: {e}")))?;
        }
        if self.prec == Some(0) {
            return Err(CliError::Usage("`prec` must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Usage("`jobs` must be positive".into()));
        }
        Ok(())
    }

    pub fn module(&self) -> Result<PhiModule, CliError> {
        let module = match (&self.module, &self.standard) {
            (Some(json), _) => PhiModule::from_json(json).map_err(|e| CliError::Usage(format!("`module`: {e}")))?,
            (None, Some(st)) => {
                let m = self.field.as_ref().map_or(1, |f| f.m);
                let field = Field::standard(st.p, m).map_err(|e| CliError::Usage(format!("`field`: {e}")))?;
                let alpha =
                    field.from_code(st.alpha).map_err(|e| CliError::Usage(format!("`standard` key `alpha`: {e}")))?;
                standard_module(st.p, m, st.n, st.s, alpha).map_err(|e| CliError::Usage(format!("`standard`: {e}")))?
            }
            (None, None) => return Err(CliError::Usage("no module: give `standard` or `module`".into())),
        };
        match &self.field {
            Some(f) => {
                if f.p != module.p() {
                    return Err(CliError::Usage(format!("`field`: characteristic {} differs from the module's", f.p)));
                }
                let spec = FieldSpec::standard(f.p, f.m).map_err(|e| CliError::Usage(format!("`field`: {e}")))?;
                base_change(&module, &spec).map_err(|e| CliError::Usage(format!("`field`: {e}")))
            }
            None => Ok(module),
        }
    }

    pub fn nu(&self) -> Result<Cochar, CliError> {
        let pairs = self.nu.clone().ok_or_else(|| CliError::Usage("missing `nu`".into()))?;
        Cochar::new(pairs).map_err(|e| CliError::Usage(format!("`nu`: {e}")))
    }

    pub fn point(&self, module: &PhiModule) -> Result<KisinPoint, CliError> {
        let json = self.point.as_ref().ok_or_else(|| CliError::Usage("missing `point`".into()))?;
        KisinPoint::from_json(json, &module.field).map_err(|e| CliError::Usage(format!("`point`: {e}")))
    }

    pub fn rules(&self) -> BTreeSet<Rule> {
        Rule::parse_list(self.rules.as_deref().unwrap_or("single,chi,mq")).expect("validated")
    }

    pub fn prec(&self) -> usize {
        self.prec.unwrap_or(DEFAULT_PREC)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

/// `p=2,n=1,s=1,alpha=1`; unknown keys are rejected by name.
pub fn parse_standard(text: &str) -> Result<StandardConfig, CliError> {
    let (mut p, mut n, mut s, mut alpha) = (None, None, None, 1u32);
    for item in text.split(',').filter(|x| !x.trim().is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--standard: expected key=value, got {item:?}")))?;
        let bad = |e: std::num::ParseIntError| CliError::Usage(format!("--standard: key `{}`: {e}", key.trim()));
        match key.trim() {
            "p" => p = Some(value.trim().parse().map_err(bad)?),
            "n" => n = Some(value.trim().parse().map_err(bad)?),
            "s" => s = Some(value.trim().parse().map_err(bad)?),
            "alpha" => alpha = value.trim().parse().map_err(bad)?,
            other => return Err(CliError::Usage(format!("--standard: unknown key `{other}`"))),
        }
    }
    let need = |k: &str| CliError::Usage(format!("--standard: missing key `{k}`"));
    Ok(StandardConfig {
        p: p.ok_or_else(|| need("p"))?,
        n: n.ok_or_else(|| need("n"))?,
        s: s.ok_or_else(|| need("s"))?,
        alpha,
    })
}

/// `p,m`.
pub fn parse_field(text: &str) -> Result<FieldConfig, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || CliError::Usage(format!("--field: expected `p,m`, got {text:?}"));
    match parts.as_slice() {
        [p, m] => Ok(FieldConfig { p: p.parse().map_err(|_| bad())?, m: m.parse().map_err(|_| bad())? }),
        _ => Err(bad()),
    }
}

pub fn parse_nu(text: &str) -> Result<Vec<(i64, i64)>, CliError> {
    Cochar::parse(text).map(|c| c.pairs().to_vec()).map_err(|e| CliError::Usage(format!("--nu: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_flags() {
        let st = parse_standard("p=2,n=1,s=1").unwrap();
        assert_eq!(st, StandardConfig { p: 2, n: 1, s: 1, alpha: 1 });
        let err = parse_standard("p=2,n=1,s=1,beta=3").unwrap_err();
        assert!(err.to_string().contains("beta"));
        assert!(parse_standard("p=2,n=1").unwrap_err().to_string().contains("`s`"));
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"nu": [[1, 0]], "colour": 3}"#).unwrap_err();
        assert!(err.to_string().contains("colour"));
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig { seed: Some(1), prec: Some(8), ..Default::default() };
        let merged = file.merge(RunConfig { seed: Some(7), ..Default::default() });
        assert_eq!((merged.seed(), merged.prec()), (7, 8));
    }
}
