//! Flat key-value experiment configs.
//!
//! One experiment per file. Lines are `key = value`; `#` starts a comment;
//! keys are dotted paths (`dist.F.kind = atomic`). Keys under `meta.` are
//! ignored so an emitted manifest is itself a valid config for exact reruns.

use std::collections::BTreeMap;

use rwpot_core::dist::DistributionSpec;

/// A parse or validation failure with its source line when known.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// Parsed config: keys in file order with line numbers for diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                err(
                    Some(line_no),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(err(Some(line_no), "empty key"));
            }
            if key.starts_with("meta.") {
                continue;
            }
            entries.insert(key, (line_no, value));
        }
        Ok(Config { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries
            .iter()
            .map(|(k, (_, v))| (k.as_str(), v.as_str()))
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(n, v)| (*n, v.as_str()))
    }

    pub fn str_opt(&self, key: &str) -> Option<&str> {
        self.raw(key).map(|(_, v)| v)
    }

    pub fn str_req(&self, key: &str) -> Result<&str, ConfigError> {
        self.str_opt(key)
            .ok_or_else(|| err(None, format!("missing required key `{key}`")))
    }

    pub fn u64_opt(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((n, v)) => v.parse().map_err(|_| {
                err(
                    Some(n),
                    format!("`{key}` must be an unsigned integer, got `{v}`"),
                )
            }),
        }
    }

    pub fn i64_opt(&self, key: &str, default: i64) -> Result<i64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((n, v)) => v
                .parse()
                .map_err(|_| err(Some(n), format!("`{key}` must be an integer, got `{v}`"))),
        }
    }

    pub fn f64_opt(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((n, v)) => v
                .parse()
                .map_err(|_| err(Some(n), format!("`{key}` must be a number, got `{v}`"))),
        }
    }

    pub fn f64_req(&self, key: &str) -> Result<f64, ConfigError> {
        let (n, v) = self
            .raw(key)
            .ok_or_else(|| err(None, format!("missing required key `{key}`")))?;
        v.parse()
            .map_err(|_| err(Some(n), format!("`{key}` must be a number, got `{v}`")))
    }

    pub fn i64_list(&self, key: &str, default: &[i64]) -> Result<Vec<i64>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some((n, v)) => v
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse()
                        .map_err(|_| err(Some(n), format!("`{key}` entries must be integers")))
                })
                .collect(),
        }
    }

    pub fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some((n, v)) => v
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse()
                        .map_err(|_| err(Some(n), format!("`{key}` entries must be numbers")))
                })
                .collect(),
        }
    }

    /// Direction vectors like `1` or `1,0`.
    pub fn direction(&self, key: &str, default: &[i64]) -> Result<Vec<i64>, ConfigError> {
        let v = self.i64_list(key, default)?;
        if v.is_empty() || v.iter().all(|&c| c == 0) {
            return Err(err(
                None,
                format!("`{key}` must be a nonzero lattice vector"),
            ));
        }
        Ok(v)
    }

    /// A distribution block under `dist.<name>.*`.
    ///
    /// Kinds: `point` (value), `atomic` (atoms = v:p, v:p, ...),
    /// `exponential` (rate), `uniform` (lo, hi), `shifted` (base = <name>,
    /// shift).
    pub fn distribution(&self, name: &str) -> Result<DistributionSpec, ConfigError> {
        self.distribution_inner(name, 0)
    }

    fn distribution_inner(
        &self,
        name: &str,
        depth: usize,
    ) -> Result<DistributionSpec, ConfigError> {
        if depth > 4 {
            return Err(err(
                None,
                format!("distribution `{name}`: bases nested too deep"),
            ));
        }
        let prefix = format!("dist.{name}.");
        let kind_key = format!("{prefix}kind");
        let (kind_line, kind) = self
            .raw(&kind_key)
            .ok_or_else(|| err(None, format!("missing distribution block `dist.{name}.*`")))?;
        let spec = match kind {
            "point" => {
                let v = self.f64_req(&format!("{prefix}value"))?;
                DistributionSpec::point(v)
            }
            "atomic" => {
                let (n, atoms_raw) = self
                    .raw(&format!("{prefix}atoms"))
                    .ok_or_else(|| err(None, format!("`{prefix}atoms` required for atomic")))?;
                let mut atoms = Vec::new();
                for tok in atoms_raw.split(',') {
                    let (v, p) = tok
                        .trim()
                        .split_once(':')
                        .ok_or_else(|| err(Some(n), "atoms must be `value:prob` pairs"))?;
                    let v: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| err(Some(n), "bad atom value"))?;
                    let p: f64 = p
                        .trim()
                        .parse()
                        .map_err(|_| err(Some(n), "bad atom probability"))?;
                    atoms.push((v, p));
                }
                DistributionSpec::atomic(atoms)
            }
            "exponential" => {
                let r = self.f64_req(&format!("{prefix}rate"))?;
                DistributionSpec::exponential(r)
            }
            "uniform" => {
                let lo = self.f64_req(&format!("{prefix}lo"))?;
                let hi = self.f64_req(&format!("{prefix}hi"))?;
                DistributionSpec::uniform(lo, hi)
            }
            "shifted" => {
                let base_name = self.str_req(&format!("{prefix}base"))?;
                let base = self.distribution_inner(base_name, depth + 1)?;
                let shift = self.f64_req(&format!("{prefix}shift"))?;
                base.shift_by(shift)
            }
            other => {
                return Err(err(
                    Some(kind_line),
                    format!("unknown distribution kind `{other}`"),
                ))
            }
        };
        spec.map_err(|e| err(Some(kind_line), format!("distribution `{name}`: {e}")))
    }
}
