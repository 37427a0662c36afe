//! Run configuration: a flat `key = value` file, overridden by command-line flags.
//!
//! Lines are `key = value`; `#` starts a comment; lists are comma separated.
//! Keys may use `-` or `_` interchangeably.

use std::collections::BTreeMap;
use std::path::PathBuf;

use dampwave::OperatorParams;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("sigma excluded: `sigma` = 1 is not part of the mixed operator family")]
    SigmaExcluded,
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Kernels,
    LinearDecay,
    Profile,
    Solve,
    LifespanSweep,
    BlowupFunctional,
    FraclapCheck,
    Exponents,
}

impl Command {
    pub const ALL: [(&'static str, Command); 8] = [
        ("kernels", Command::Kernels),
        ("linear-decay", Command::LinearDecay),
        ("profile", Command::Profile),
        ("solve", Command::Solve),
        ("lifespan-sweep", Command::LifespanSweep),
        ("blowup-functional", Command::BlowupFunctional),
        ("fraclap-check", Command::FraclapCheck),
        ("exponents", Command::Exponents),
    ];

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .iter()
            .find(|(name, _)| *name == text)
            .map(|(_, c)| *c)
            .ok_or_else(|| ConfigError::Invalid {
                key: "command".into(),
                reason: format!(
                    "`{text}` is not one of {}",
                    Self::ALL.map(|(n, _)| n).join(", ")
                ),
            })
    }

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, c)| *c == self).unwrap().0
    }
}

/// Every accepted key. Anything else is rejected.
pub const KEYS: [&str; 22] = [
    "command",
    "a",
    "b",
    "sigma",
    "n",
    "p",
    "eps",
    "eps_list",
    "s_list",
    "grid_n",
    "box_l",
    "t_end",
    "t_start",
    "dt_max",
    "blowup_threshold",
    "width",
    "samples",
    "r_list",
    "stretch",
    "record_step",
    "seed",
    "out",
];

/// Fully resolved and validated configuration; serialized into every summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub n: usize,
    pub p: Option<f64>,
    pub eps: f64,
    pub eps_list: Vec<f64>,
    pub s_list: Vec<f64>,
    pub grid_n: usize,
    pub box_l: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub dt_max: f64,
    pub blowup_threshold: f64,
    pub width: f64,
    pub samples: usize,
    pub r_list: Vec<f64>,
    pub stretch: f64,
    pub record_step: f64,
    pub seed: u64,
    pub out: PathBuf,
    /// Hypotheses of the existence and blow-up results that this run violates.
    pub outside_hypotheses: Vec<String>,
}

impl RunConfig {
    pub fn params(&self) -> OperatorParams {
        OperatorParams::new(self.a, self.b, self.sigma, self.n).expect("validated during parsing")
    }

    pub fn require_p(&self) -> Result<f64, ConfigError> {
        self.p.ok_or(ConfigError::Missing("p"))
    }
}

pub fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses the text of a config file into raw key-value pairs.
pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: line.to_string(),
        })?;
        let key = normalize_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

struct Raw<'a>(&'a BTreeMap<String, String>);

impl Raw<'_> {
    fn number(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.0
            .get(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| invalid(key, format!("`{v}` is not a finite number")))
            })
            .transpose()
    }

    fn required(&self, key: &'static str) -> Result<f64, ConfigError> {
        self.number(key)?.ok_or(ConfigError::Missing(key))
    }

    fn positive(&self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        let v = self.number(key)?.unwrap_or(default);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(invalid(key, format!("must be positive, got {v}")))
        }
    }

    fn integer(&self, key: &'static str, default: u64) -> Result<u64, ConfigError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| invalid(key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn list(&self, key: &'static str) -> Result<Vec<f64>, ConfigError> {
        match self.0.get(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| invalid(key, format!("`{s}` is not a finite number")))
                })
                .collect(),
        }
    }
}

/// Validates raw pairs into a [`RunConfig`], filling documented defaults.
pub fn resolve(map: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    if let Some(key) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    let raw = Raw(map);
    let command = Command::parse(map.get("command").ok_or(ConfigError::Missing("command"))?)?;
    let a = raw.required("a")?;
    let b = raw.required("b")?;
    let sigma = raw.required("sigma")?;
    let n = raw.integer("n", 0)?;
    if !map.contains_key("n") {
        return Err(ConfigError::Missing("n"));
    }
    if !(a > 0.0) {
        return Err(invalid("a", format!("must be positive, got {a}")));
    }
    if !(b > 0.0) {
        return Err(invalid("b", format!("must be positive, got {b}")));
    }
    if sigma == 1.0 {
        return Err(ConfigError::SigmaExcluded);
    }
    if !(sigma > 0.0) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if !(1..=3).contains(&n) {
        return Err(invalid("n", format!("dimension must be 1, 2 or 3, got {n}")));
    }
    let p = raw.number("p")?;
    if let Some(p) = p {
        if !(p > 1.0) {
            return Err(invalid("p", format!("must exceed 1, got {p}")));
        }
    }
    let grid_n = raw.integer("grid_n", 1024)? as usize;
    if grid_n < 64 || !grid_n.is_power_of_two() {
        return Err(invalid("grid_n", format!("must be a power of two >= 64, got {grid_n}")));
    }
    let eps_list = raw.list("eps_list")?;
    if eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(invalid("eps_list", "all entries must be positive"));
    }
    let s_list = raw.list("s_list")?;
    if s_list.iter().any(|&s| !(s >= 0.0)) {
        return Err(invalid("s_list", "all entries must be non-negative"));
    }
    let r_list = raw.list("r_list")?;
    if r_list.iter().any(|&r| !(r > 0.0)) {
        return Err(invalid("r_list", "all entries must be positive"));
    }
    let t_start = raw.positive("t_start", 100.0)?;
    let t_end = raw.positive("t_end", if command == Command::LinearDecay { 1e4 } else { 100.0 })?;
    if command == Command::LinearDecay && t_end <= t_start {
        return Err(invalid("t_end", format!("must exceed t_start = {t_start}")));
    }
    let samples = raw.integer("samples", 1000)? as usize;
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    let mut cfg = RunConfig {
        command,
        a,
        b,
        sigma,
        n: n as usize,
        p,
        eps: raw.positive("eps", 0.01)?,
        eps_list,
        s_list,
        grid_n,
        box_l: raw.positive("box_l", 100.0)?,
        t_start,
        t_end,
        dt_max: raw.positive("dt_max", 0.05)?,
        blowup_threshold: raw.positive("blowup_threshold", 1e6)?,
        width: raw.positive("width", 1.0)?,
        samples,
        r_list,
        stretch: raw.positive("stretch", 1.0)?,
        record_step: raw.positive("record_step", 0.5)?,
        seed: raw.integer("seed", 0)?,
        out: PathBuf::from(map.get("out").map_or("out", String::as_str)),
        outside_hypotheses: Vec::new(),
    };
    cfg.outside_hypotheses = hypothesis_notes(&cfg);
    Ok(cfg)
}

/// Existence scenarios with `p` outside the admissible range still run,
/// but are flagged.
fn hypothesis_notes(cfg: &RunConfig) -> Vec<String> {
    let Some(p) = cfg.p else { return Vec::new() };
    let params = cfg.params();
    let hyp = params.hypotheses(p);
    let mut notes = Vec::new();
    let existence = matches!(cfg.command, Command::Profile | Command::Solve);
    if existence {
        if p < 2.0 {
            notes.push(format!("p = {p} < 2"));
        }
        if let Some(upper) = hyp.gn_upper {
            if p > upper {
                notes.push(format!("p = {p} exceeds the Gagliardo-Nirenberg bound {upper}"));
            }
        }
    }
    if cfg.n > 2 {
        notes.push(format!("n = {} is beyond the simulated dimensions", cfg.n));
    }
    notes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_text(text: &str) -> Result<RunConfig, ConfigError> {
        resolve(&parse_text(text)?)
    }

    #[test]
    fn minimal_exponents_config() {
        let cfg = resolve_text("command = exponents\na=1\nb = 1 # unit\nsigma=0.5\nn=1\np=1.5\n").unwrap();
        assert_eq!(cfg.command, Command::Exponents);
        assert_eq!(cfg.p, Some(1.5));
        assert_eq!(cfg.grid_n, 1024);
        assert!(cfg.outside_hypotheses.is_empty());
    }

    #[test]
    fn distinct_errors_name_the_key() {
        let base = "command=exponents\na=1\nb=1\nsigma=0.5\nn=1\n";
        assert_eq!(
            resolve_text(&base.replace("sigma=0.5", "sigma=1")),
            Err(ConfigError::SigmaExcluded)
        );
        assert_eq!(resolve_text(&base.replace("b=1\n", "")), Err(ConfigError::Missing("b")));
        assert_eq!(
            resolve_text(&format!("{base}colour=blue\n")),
            Err(ConfigError::UnknownKey("colour".into()))
        );
        let err = resolve_text(&format!("{base}grid_n=100\n")).unwrap_err();
        assert!(err.to_string().contains("`grid_n`"), "{err}");
        let err = resolve_text(&base.replace("a=1", "a=-2")).unwrap_err();
        assert!(err.to_string().contains("`a`"), "{err}");
        assert!(matches!(resolve_text("nonsense"), Err(ConfigError::Syntax { line: 1, .. })));
    }

    #[test]
    fn lists_and_dashed_keys() {
        let cfg = resolve_text("command=lifespan-sweep\na=1\nb=1\nsigma=0.5\nn=1\np=1.5\neps-list = 0.01, 0.03,0.1\n").unwrap();
        assert_eq!(cfg.eps_list, vec![0.01, 0.03, 0.1]);
        assert_eq!(cfg.command.name(), "lifespan-sweep");
    }

    #[test]
    fn small_powers_are_flagged_not_refused() {
        let cfg = resolve_text("command=solve\na=1\nb=1\nsigma=0.5\nn=1\np=1.5\n").unwrap();
        assert_eq!(cfg.outside_hypotheses.len(), 1);
    }
}
