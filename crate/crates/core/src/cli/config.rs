use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Function;
use crate::sampler::HierarchyPrior;

use super::spec::parse_function;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Resolved settings for one invocation: defaults, then the config file, then
/// `-p key=value` flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn split_pair(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| config_err(format!("expected key=value, got `{s}`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let pair = split_pair(line).map_err(|_| Error::Parse {
            line: i as u64 + 1,
            message: format!("{}: expected `key = value`", path.display()),
        })?;
        pairs.push(pair);
    }
    Ok(pairs)
}

impl RunConfig {
    pub fn resolve(
        subcommand: &str,
        defaults: &[(&str, &str)],
        file: Vec<(String, String)>,
        flags: &[String],
        seed: Option<u64>,
        out: Option<PathBuf>,
    ) -> Result<Self> {
        let mut params: BTreeMap<String, String> =
            defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let mut file_seed = None;
        let mut file_out = None;
        let flag_pairs = flags.iter().map(|s| split_pair(s)).collect::<Result<Vec<_>>>()?;
        for (k, v) in file.into_iter().chain(flag_pairs) {
            match k.as_str() {
                "seed" => {
                    file_seed = Some(v.parse::<u64>().map_err(|_| config_err(format!("seed `{v}` is not a u64")))?)
                }
                "out" => file_out = Some(PathBuf::from(v)),
                _ if params.contains_key(&k) => {
                    params.insert(k, v);
                }
                _ => {
                    let known: Vec<&str> = defaults.iter().map(|d| d.0).collect();
                    return Err(config_err(format!(
                        "unknown key `{k}` for {subcommand} (known: {})",
                        known.join(", ")
                    )));
                }
            }
        }
        Ok(RunConfig {
            subcommand: subcommand.to_string(),
            params,
            seed: seed.or(file_seed).unwrap_or(0),
            out: out.or(file_out),
        })
    }

    /// Comment lines echoing the version, seed and every resolved key.
    pub fn header(&self) -> Vec<String> {
        let mut lines = vec![format!("stepbayes {VERSION} {}", self.subcommand), format!("seed = {}", self.seed)];
        lines.extend(self.params.iter().map(|(k, v)| format!("{k} = {v}")));
        lines
    }

    pub fn echo_json(&self) -> serde_json::Value {
        serde_json::json!({
            "stepbayes": VERSION,
            "subcommand": self.subcommand,
            "seed": self.seed,
            "config": self.params,
        })
    }

    pub fn str(&self, key: &str) -> &str {
        self.params.get(key).map(String::as_str).unwrap_or("")
    }

    fn parsed<T: FromStr>(&self, key: &str, what: &str) -> Result<T> {
        let v = self.str(key);
        v.parse().map_err(|_| config_err(format!("{key} = `{v}` is not {what}")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parsed(key, "a nonnegative integer")
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.parsed(key, "a number")
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        self.parsed(key, "true or false")
    }

    fn list<T: FromStr>(&self, key: &str, what: &str) -> Result<Vec<T>> {
        let v = self.str(key);
        v.split(',')
            .map(|s| s.trim().parse().map_err(|_| config_err(format!("{key} = `{v}` is not a list of {what}"))))
            .collect()
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.list(key, "numbers")
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        self.list(key, "nonnegative integers")
    }

    pub fn function(&self, key: &str) -> Result<Function> {
        parse_function(self.str(key))
    }

    pub fn optional_function(&self, key: &str) -> Result<Option<Function>> {
        match self.str(key) {
            "" => Ok(None),
            s => parse_function(s).map(Some),
        }
    }

    pub fn prior(&self, key: &str) -> Result<HierarchyPrior> {
        self.str(key).parse()
    }

    pub fn required_path(&self, key: &str) -> Result<PathBuf> {
        match self.str(key) {
            "" => Err(config_err(format!("{} needs {key} = <path>", self.subcommand))),
            s => Ok(PathBuf::from(s)),
        }
    }
}
