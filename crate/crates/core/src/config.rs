//! Experiment files.
//!
//! A config is a TOML document with a `schema_version` key, any number of
//! `[[experiment]]` tail experiments and any number of `[[study]]` entries.
//! See `docs/config.md` for the schema.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigErrors, Error, Result, SchemaError};
use crate::harness::{ExperimentConfig, StudyConfig, StudyKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default, rename = "experiment", skip_serializing_if = "Vec::is_empty")]
    pub experiments: Vec<ExperimentConfig>,
    #[serde(default, rename = "study", skip_serializing_if = "Vec::is_empty")]
    pub studies: Vec<StudyConfig>,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self { schema_version: SCHEMA_VERSION, experiments: vec![], studies: vec![] }
    }
}

impl ConfigFile {
    pub fn is_empty(&self) -> bool {
        self.experiments.is_empty() && self.studies.is_empty()
    }

    /// Serializes back to TOML; [`parse_config_str`] inverts this.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidInput(format!("cannot serialize config: {e}")))
    }

    pub fn merge(&mut self, other: ConfigFile) {
        self.experiments.extend(other.experiments);
        self.studies.extend(other.studies);
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// 1-based lines where each `[[header]]` array entry starts.
fn entry_lines(text: &str, header: &str) -> Vec<usize> {
    let tag = format!("[[{header}]]");
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim_start().starts_with(&tag))
        .map(|(i, _)| i + 1)
        .collect()
}

fn err(line: Option<usize>, message: impl Into<String>) -> SchemaError {
    SchemaError { line, message: message.into() }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) && !name.starts_with('.')
}

/// Parses and validates a config document. An empty document yields an
/// empty config.
pub fn parse_config_str(text: &str) -> Result<ConfigFile> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(ConfigErrors(vec![err(e.span().map(|s| line_of(text, s.start)), e.message())])))?;
    if table.is_empty() {
        return Ok(ConfigFile::default());
    }
    let cfg: ConfigFile = toml::from_str(text).map_err(|e: toml::de::Error| {
        Error::Config(ConfigErrors(vec![err(e.span().map(|s| line_of(text, s.start)), e.message())]))
    })?;
    let errors = validate(&cfg, &entry_lines(text, "experiment"), &entry_lines(text, "study"));
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(ConfigErrors(errors)))
    }
}

pub fn parse_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(ConfigErrors(list)) => Error::Config(ConfigErrors(
            list.into_iter()
                .map(|s| SchemaError { line: s.line, message: format!("{}: {}", path.display(), s.message) })
                .collect(),
        )),
        e => e,
    })
}

/// Semantic checks done before any sampling: names, trial counts, grids
/// and envelope compatibility.
pub fn validate(cfg: &ConfigFile, exp_lines: &[usize], study_lines: &[usize]) -> Vec<SchemaError> {
    let mut errors = Vec::new();
    if cfg.schema_version != SCHEMA_VERSION {
        errors.push(err(Some(1), format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", cfg.schema_version)));
    }
    let mut names = HashSet::new();
    let mut check_name = |name: &str, line: Option<usize>, errors: &mut Vec<SchemaError>| {
        if !valid_name(name) {
            errors.push(err(line, format!("name {name:?} must be nonempty and use only letters, digits, '-', '_' or '.'")));
        }
        if !names.insert(name.to_string()) {
            errors.push(err(line, format!("duplicate name {name:?}")));
        }
    };
    for (i, e) in cfg.experiments.iter().enumerate() {
        let line = exp_lines.get(i).copied();
        check_name(&e.name, line, &mut errors);
        let at = |m: String| err(line, format!("experiment {:?}: {m}", e.name));
        if let Err(x) = crate::harness::prepare(e) {
            errors.push(at(x.to_string()));
        }
    }
    for (i, s) in cfg.studies.iter().enumerate() {
        let line = study_lines.get(i).copied();
        check_name(&s.name, line, &mut errors);
        let at = |m: String| err(line, format!("study {:?}: {m}", s.name));
        match &s.kind {
            StudyKind::InteriorCenter(p) => {
                if let Err(x) = p.ensemble.validate() {
                    errors.push(at(x.to_string()));
                } else if !p.ensemble.is_selfadjoint() {
                    errors.push(at("interior centers need a self-adjoint ensemble".into()));
                }
            }
            StudyKind::Clt(p) if p.p.0 >= 2.0 => errors.push(at(format!("root exponent must be below 2, got {}", p.p.0))),
            StudyKind::MedianGrowth(p) => {
                if let Err(x) = p.law.validate() {
                    errors.push(at(x.to_string()));
                }
            }
            _ => {}
        }
    }
    errors
}

/// Configs shipped with the binary, one per acceptance criterion.
pub const PRESETS: &[(&str, &str)] = &[
    ("thm11-rademacher", include_str!("../presets/thm11-rademacher.cfg")),
    ("thm11-euclidean-fallback", include_str!("../presets/thm11-euclidean-fallback.cfg")),
    ("thm12-extreme", include_str!("../presets/thm12-extreme.cfg")),
    ("thm12-interior", include_str!("../presets/thm12-interior.cfg")),
    ("thm33-singular", include_str!("../presets/thm33-singular.cfg")),
    ("talagrand-exact", include_str!("../presets/talagrand-exact.cfg")),
    ("ke-lemma", include_str!("../presets/ke-lemma.cfg")),
    ("hoelder-oracle", include_str!("../presets/hoelder-oracle.cfg")),
    ("clt-counterexample", include_str!("../presets/clt-counterexample.cfg")),
    ("mean-median", include_str!("../presets/mean-median.cfg")),
    ("sharpness", include_str!("../presets/sharpness.cfg")),
    ("determinism", include_str!("../presets/determinism.cfg")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
