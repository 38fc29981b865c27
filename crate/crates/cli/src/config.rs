//! `cxnforge.toml`: defaults for flags. Every key is optional and any flag
//! given on the command line wins.
//!
//! ```toml
//! format = "json"          # or "text"
//!
//! [match]
//! jobs = 4
//!
//! [annotate]
//! policy = "merge"         # skip-existing | merge | replace
//!
//! [split]
//! ratios = [0.8, 0.1, 0.1]
//! seed = 7
//! key = "source"
//!
//! [review]
//! reviewer = "ann"
//! bind = "127.0.0.1:8080"
//! ui = "review-ui/dist"
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

use crate::output::Format;

pub const DEFAULT_FILE: &str = "cxnforge.toml";

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub format: Option<Format>,
    #[serde(rename = "match")]
    pub matching: MatchConfig,
    pub annotate: AnnotateConfig,
    pub split: SplitConfig,
    pub review: ReviewConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    pub jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateConfig {
    pub policy: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratios: Option<[f64; 3]>,
    pub seed: Option<u64>,
    pub key: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReviewConfig {
    pub reviewer: Option<String>,
    pub bind: Option<String>,
    pub ui: Option<PathBuf>,
}

impl Config {
    /// Reads `explicit` if given (it must exist), else `cxnforge.toml` in
    /// the working directory if present.
    pub fn load(explicit: Option<&Path>) -> anyhow::Result<Config> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None if Path::new(DEFAULT_FILE).is_file() => PathBuf::from(DEFAULT_FILE),
            None => return Ok(Config::default()),
        };
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
