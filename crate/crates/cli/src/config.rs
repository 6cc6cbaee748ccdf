//! `key=value` settings with precedence flags > file > defaults.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use noisy_interp::Error;

/// Keys accepted in config files and as `--key` flags.
pub const KEYS: &[&str] = &[
    "n",
    "k",
    "h",
    "delta",
    "delta-exp",
    "prime-bits",
    "prime",
    "d",
    "d-min",
    "d-max",
    "seed",
    "trials",
    "grid",
    "out",
    "instance",
    "noise",
    "extent",
    "d0",
    "poly",
    "interval-start",
    "target-start",
    "target-len",
];

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io { path: PathBuf, source: std::io::Error },
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Core(Error::Io(_)) => 3,
            CliError::Core(_) => 2,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str, origin: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(config(format!("{origin}:{}: expected key=value", i + 1)));
        };
        let k = k.trim().replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            return Err(config(format!("{origin}:{}: unknown key {k:?}", i + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeMap<String, String>>,
}

impl Settings {
    pub fn load(file: Option<&Path>, flags: BTreeMap<String, String>) -> CliResult<Self> {
        let mut values = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                parse_kv(&text, &path.display().to_string())?
            }
            None => BTreeMap::new(),
        };
        values.extend(flags);
        Ok(Self { values, used: RefCell::default() })
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        let Some(raw) = self.values.get(key) else {
            return Ok(None);
        };
        let v = raw.parse().map_err(|e| config(format!("{key} = {raw:?}: {e}")))?;
        self.used.borrow_mut().insert(key.to_string(), raw.clone());
        Ok(Some(v))
    }

    pub fn get<T: FromStr + fmt::Display>(&self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: fmt::Display,
    {
        match self.opt(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, &default);
                Ok(default)
            }
        }
    }

    /// Records a derived value (for example a generated prime) in the config line.
    pub fn record(&self, key: &str, value: &dyn fmt::Display) {
        self.used.borrow_mut().insert(key.to_string(), value.to_string());
    }

    /// `# config: key=value ...` over every setting the command consumed.
    pub fn config_line(&self) -> String {
        let body: Vec<String> = self.used.borrow().iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# config: {}", body.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\nn = 4\nseed=9\n").unwrap();
        let flags = BTreeMap::from([("seed".to_string(), "3".to_string())]);
        let s = Settings::load(Some(&path), flags).unwrap();
        assert_eq!(s.get::<u32>("n", 1).unwrap(), 4);
        assert_eq!(s.get::<u64>("seed", 0).unwrap(), 3);
        assert_eq!(s.get::<u64>("trials", 7).unwrap(), 7);
        assert_eq!(s.config_line(), "# config: n=4 seed=3 trials=7");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_kv("colour = red", "x").is_err());
        assert!(parse_kv("n 4", "x").is_err());
        assert_eq!(parse_kv("delta_exp = 17", "x").unwrap()["delta-exp"], "17");
    }

    #[test]
    fn bad_values_are_config_errors() {
        let s = Settings::load(None, BTreeMap::from([("n".to_string(), "five".to_string())])).unwrap();
        let err = s.get::<u32>("n", 1).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
