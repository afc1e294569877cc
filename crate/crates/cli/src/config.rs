//! Flat `key = value` run configuration with recorded lookups.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;
use std::sync::Mutex;

use fqdyn::Field;

use crate::error::CliError;

/// Keys accepted in config files, `--set` and flags. `out` and `workers`
/// are handled by the argument parser and never echoed.
pub const KNOWN_KEYS: &[&str] = &[
    "q",
    "modulus",
    "m",
    "n",
    "t",
    "t_max",
    "i",
    "d_max",
    "ell_max",
    "steps",
    "big_m",
    "m_div",
    "delta",
    "deltas",
    "eps_exp",
    "precision",
    "seed",
    "trials",
    "jacobi_trials",
    "cap",
    "s",
    "lattice",
    "target",
    "profile_max",
    "tail_depth",
    "beta",
    "kappa_max",
    "expect",
    "v",
    "cusp",
    "slack",
    "max_k",
];

/// Resolved configuration. Every lookup records the effective value so the
/// summary can echo exactly what a run used.
#[derive(Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    echo: Mutex<BTreeMap<String, String>>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_assignment(line).ok_or_else(|| CliError::Usage(format!("line {}: expected key = value", no + 1)))?;
        out.insert(k, v);
    }
    Ok(out)
}

pub fn split_assignment(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return None;
    }
    Some((k.to_string(), v.to_string()))
}

impl RunConfig {
    pub fn from_map(values: BTreeMap<String, String>) -> Result<RunConfig, CliError> {
        if let Some(k) = values.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown config key `{k}`")));
        }
        Ok(RunConfig { values, echo: Mutex::new(BTreeMap::new()) })
    }

    pub fn echo(&self) -> BTreeMap<String, String> {
        self.echo.lock().expect("echo lock").clone()
    }

    fn record(&self, key: &str, value: String) {
        self.echo.lock().expect("echo lock").insert(key.to_string(), value);
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr + Display>(&self, key: &str, default: T) -> Result<T, CliError> {
        let v = match self.raw(key) {
            Some(s) => s.parse().map_err(|_| CliError::Usage(format!("bad value for `{key}`: {s}")))?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64, CliError> {
        self.parsed(key, default)
    }

    pub fn u32(&self, key: &str, default: u32) -> Result<u32, CliError> {
        self.parsed(key, default)
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        self.parsed(key, default)
    }

    pub fn i64(&self, key: &str, default: i64) -> Result<i64, CliError> {
        self.parsed(key, default)
    }

    /// Real number; also accepts `a^b` and `a/b`.
    pub fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = match self.raw(key) {
            Some(s) => parse_real(s).ok_or_else(|| CliError::Usage(format!("bad number for `{key}`: {s}")))?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    /// Positive enumeration cap; accepts `2^k`.
    pub fn cap(&self, default: u128) -> Result<u128, CliError> {
        let v = match self.raw("cap") {
            Some(s) => parse_real(s)
                .filter(|x| *x >= 1.0 && x.is_finite())
                .map(|x| x as u128)
                .ok_or_else(|| CliError::Usage(format!("bad value for `cap`: {s}")))?,
            None => default,
        };
        self.record("cap", v.to_string());
        Ok(v)
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        let v = self.raw(key).unwrap_or(default).to_string();
        self.record(key, v.clone());
        v
    }

    pub fn opt_string(&self, key: &str) -> Option<String> {
        let v = self.raw(key).map(str::to_string);
        if let Some(s) = &v {
            self.record(key, s.clone());
        }
        v
    }

    /// Comma-separated reals.
    pub fn f64_list(&self, key: &str, default: &str) -> Result<Vec<f64>, CliError> {
        let s = self.string(key, default);
        s.split(',')
            .map(|x| parse_real(x.trim()).ok_or_else(|| CliError::Usage(format!("bad list for `{key}`: {s}"))))
            .collect()
    }

    /// Field from `q` and optional `modulus` (coefficients low to high).
    /// Prime powers up to 16 get a built-in modulus when none is given.
    pub fn field(&self) -> Result<Field, CliError> {
        let q = self.u64("q", 2)?;
        if !(2..=16).contains(&q) {
            return Err(CliError::Usage(format!("q must lie in 2..=16, got {q}")));
        }
        let modulus = match self.opt_string("modulus") {
            Some(s) => Some(
                s.split(',')
                    .map(|c| c.trim().parse::<u32>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Usage(format!("bad modulus: {s}")))?,
            ),
            None => default_modulus(q),
        };
        Field::from_q(q, modulus).map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn default_modulus(q: u64) -> Option<Vec<u32>> {
    match q {
        4 => Some(vec![1, 1, 1]),
        8 => Some(vec![1, 1, 0, 1]),
        9 => Some(vec![1, 0, 1]),
        16 => Some(vec![1, 1, 0, 0, 1]),
        _ => None,
    }
}

/// `x`, `a^b` or `a/b`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('^') {
        return Some(parse_real(a)?.powf(parse_real(b)?));
    }
    if let Some((a, b)) = s.split_once('/') {
        let d = parse_real(b)?;
        return (d != 0.0).then(|| parse_real(a).map(|n| n / d)).flatten();
    }
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}
