//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use chessboard_core::LatticeSpec;

use crate::error::{CliError, CliResult};

/// Every key a config file or flag may set.
pub const KEYS: &[&str] = &[
    "dz",
    "dt",
    "c",
    "a",
    "steps",
    "extent",
    "seed",
    "pairs",
    "t-reversal",
    "stutter-phase",
    "mode",
    "workers",
    "out",
    "layout",
    "channel-map",
    "source-state",
    "direction",
    "n-max",
    "t",
    "combo",
    "grid",
    "reference",
    "region",
    "normalize",
    "init",
    "width",
    "crop",
];

/// Keys left out of the metadata echo: they do not change any output value.
const NOT_ECHOED: &[&str] = &["workers", "out"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Reads `path` (if any), then applies `overrides` on top.
    pub fn load<'a>(
        path: Option<&Path>,
        overrides: impl IntoIterator<Item = (&'a str, Option<String>)>,
    ) -> CliResult<Self> {
        let mut settings = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                Self::parse(&text)?
            }
            None => Self::default(),
        };
        for (key, value) in overrides {
            if let Some(value) = value {
                settings.set(key, value)?;
            }
        }
        Ok(settings)
    }

    /// Parses a config file: one `key = value` per line, `#` starts a comment.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut settings = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            settings.set(&key.trim().replace('_', "-"), value.trim().to_string())?;
        }
        Ok(settings)
    }

    pub fn from_echo(echo: &BTreeMap<String, String>) -> CliResult<Self> {
        let mut settings = Self::default();
        for (key, value) in echo {
            settings.set(key, value.clone())?;
        }
        Ok(settings)
    }

    pub fn set(&mut self, key: &str, value: String) -> CliResult<()> {
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key '{key}'")));
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| CliError::Config(format!("{key} = '{v}': {e}")))
            })
            .transpose()
    }

    pub fn get_or<T>(&self, key: &str, default: T) -> CliResult<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T>(&self, key: &str) -> CliResult<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    /// Settings that determine the outputs, for the metadata sidecar.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.values
            .iter()
            .filter(|(k, _)| !NOT_ECHOED.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    /// Lattice from `dz`/`dt` (either one, the other follows from `c dt = dz`),
    /// `c` (default 1), `a` (default 1), `steps`, and `extent` (half-width of
    /// the z range, default `steps * dz`).
    pub fn lattice(&self) -> CliResult<LatticeSpec> {
        let c: f64 = self.get_or("c", 1.0)?;
        let a: f64 = self.get_or("a", 1.0)?;
        let steps: usize = self.require("steps")?;
        let (dz, dt) = match (self.get::<f64>("dz")?, self.get::<f64>("dt")?) {
            (Some(dz), Some(dt)) => (dz, dt),
            (Some(dz), None) => (dz, dz / c),
            (None, Some(dt)) => (c * dt, dt),
            (None, None) => return Err(CliError::Config("one of dz, dt is required".into())),
        };
        let extent = self.get_or("extent", steps as f64 * dz)?;
        Ok(LatticeSpec::new(dz, dt, c, a, extent, steps)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_are_overridden_by_flags() {
        let mut s = Settings::parse("dz = 0.1\n# comment\nsteps=20  # trailing\nt_reversal = 1.5\n").unwrap();
        assert_eq!(s.raw("t-reversal"), Some("1.5"));
        s.set("steps", "10".into()).unwrap();
        let spec = s.lattice().unwrap();
        assert_eq!(spec.n_steps, 10);
        assert_eq!(spec.dt, 0.1);
        assert_eq!(spec.half_width(), 10);
    }

    #[test]
    fn bad_input_is_a_config_error() {
        assert!(matches!(Settings::parse("nonsense"), Err(CliError::Config(_))));
        assert!(matches!(Settings::parse("colour = red"), Err(CliError::Config(_))));
        let s = Settings::parse("steps = ten").unwrap();
        assert!(matches!(s.require::<usize>("steps"), Err(CliError::Config(_))));
        assert!(matches!(Settings::default().lattice(), Err(CliError::Config(_))));
    }

    #[test]
    fn echo_drops_workers_and_out() {
        let s = Settings::parse("workers = 8\nout = x.csv\nseed = 3").unwrap();
        let echo = s.echo();
        assert_eq!(echo.len(), 1);
        assert_eq!(Settings::from_echo(&echo).unwrap().raw("seed"), Some("3"));
    }
}
