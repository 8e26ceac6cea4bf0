//! Run configuration: defaults, then a `key = value` file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use padic_height::arithfn::DEFAULT_SIEVE_CAP;
use padic_height::estimator::{DEFAULT_ERROR_CONSTANT, DEFAULT_T_MAX};

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliConfig {
    pub sieve_cap: u64,
    pub t_max: u64,
    pub error_constant: u64,
    /// 0 means every available core.
    pub workers: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            sieve_cap: DEFAULT_SIEVE_CAP,
            t_max: DEFAULT_T_MAX,
            error_constant: DEFAULT_ERROR_CONSTANT,
            workers: 0,
            format: Format::Json,
            output: None,
            seed: 1,
        }
    }
}

/// Values given on the command line.
#[derive(Debug, Default)]
pub struct Overrides {
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

fn positive(key: &str, value: &str) -> Result<u64, String> {
    match value.parse::<u64>() {
        Ok(0) => Err(format!("config {key} must be positive")),
        Ok(n) => Ok(n),
        Err(_) => Err(format!(
            "config {key} = {value:?} is not a nonnegative integer"
        )),
    }
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = CliConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", n + 1))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "sieve_cap" => cfg.sieve_cap = positive(key, value)?,
                "t_max" => cfg.t_max = positive(key, value)?,
                "error_constant" => cfg.error_constant = positive(key, value)?,
                "workers" => {
                    cfg.workers = value
                        .parse()
                        .map_err(|_| format!("config workers = {value:?} is not an integer"))?
                }
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| format!("config seed = {value:?} is not an integer"))?
                }
                "format" => {
                    cfg.format = match value {
                        "json" => Format::Json,
                        "csv" => Format::Csv,
                        _ => {
                            return Err(format!("config format = {value:?}: expected json or csv"))
                        }
                    }
                }
                "output" => cfg.output = Some(PathBuf::from(value)),
                _ => return Err(format!("config line {}: unknown key {key:?}", n + 1)),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, flags: Overrides) -> Result<Self, String> {
        let mut cfg = match path {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                CliConfig::parse(&text)?
            }
            None => CliConfig::default(),
        };
        if let Some(f) = flags.format {
            cfg.format = f;
        }
        if let Some(o) = flags.output {
            cfg.output = Some(o);
        }
        if let Some(w) = flags.workers {
            cfg.workers = w;
        }
        if let Some(s) = flags.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_key() {
        let cfg = CliConfig::parse(
            "# run settings\nsieve_cap = 500\nt_max=2000\nerror_constant = 10\nworkers = 3\nformat = csv\noutput = out.csv\nseed = 9 # trailing\n",
        )
        .unwrap();
        assert_eq!(
            cfg,
            CliConfig {
                sieve_cap: 500,
                t_max: 2000,
                error_constant: 10,
                workers: 3,
                format: Format::Csv,
                output: Some(PathBuf::from("out.csv")),
                seed: 9,
            }
        );
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(CliConfig::parse("t_max = 0").is_err());
        assert!(CliConfig::parse("t_max").is_err());
        assert!(CliConfig::parse("colour = red").is_err());
        assert!(CliConfig::parse("format = xml").is_err());
    }

    #[test]
    fn flags_win() {
        let flags = Overrides {
            format: Some(Format::Json),
            seed: Some(4),
            ..Overrides::default()
        };
        let cfg = CliConfig::load(None, flags).unwrap();
        assert_eq!(
            (cfg.format, cfg.seed, cfg.t_max),
            (Format::Json, 4, DEFAULT_T_MAX)
        );
    }
}
