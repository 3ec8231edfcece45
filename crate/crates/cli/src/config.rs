use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

/// Default cache location when neither `--cache` nor the environment names one.
pub const DEFAULT_CACHE: &str = "xi_gamma_table.csv";
pub const CACHE_ENV: &str = "XI_JENSEN_CACHE";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// Coefficient cache file (default: $XI_JENSEN_CACHE or ./xi_gamma_table.csv)
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Starting working precision in bits
    #[arg(long, global = true)]
    pub bits: Option<u32>,
    /// Precision ceiling in bits
    #[arg(long, global = true)]
    pub max_bits: Option<u32>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Report file (default: stdout)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel scans
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// TOML file with defaults for any of the flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Contents of a `--config` file; keys mirror the long flag names with `_`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub cache: Option<PathBuf>,
    pub bits: Option<u32>,
    pub max_bits: Option<u32>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub m_max: Option<u64>,
    pub d_range: Option<String>,
    pub n_range: Option<String>,
    pub n_max: Option<u64>,
    pub m_values: Option<String>,
    pub fit_order: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Fully resolved settings for one run.
#[derive(Debug)]
pub struct RunConfig {
    pub cache: PathBuf,
    pub bits: u32,
    pub max_bits: u32,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs, file: &FileConfig) -> Result<Self, String> {
        let cache = args
            .cache
            .clone()
            .or_else(|| file.cache.clone())
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE));
        let bits = args.bits.or(file.bits).unwrap_or(192);
        let max_bits = args.max_bits.or(file.max_bits).unwrap_or(1024.max(bits));
        if bits < 64 {
            return Err(format!("--bits must be at least 64, got {bits}"));
        }
        if max_bits < bits {
            return Err(format!("--max-bits ({max_bits}) is below --bits ({bits})"));
        }
        let workers = args.workers.or(file.workers);
        if workers == Some(0) {
            return Err("--workers must be positive".into());
        }
        Ok(RunConfig {
            cache,
            bits,
            max_bits,
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            out: args.out.clone().or_else(|| file.out.clone()),
            workers,
        })
    }
}

/// Parses `"5"`, `"3:10"` (inclusive) or `"100,400,1600"` into a nonempty list.
pub fn parse_list(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("bad number '{t}' in '{s}'"));
    let out: Vec<u64> = if let Some((a, b)) = s.split_once(':') {
        let (a, b) = (num(a)?, num(b)?);
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err(format!("empty range '{s}'"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list("3:5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_list("100, 400").unwrap(), vec![100, 400]);
        assert_eq!(parse_list("7").unwrap(), vec![7]);
        assert!(parse_list("5:3").is_err());
        assert!(parse_list("x").is_err());
    }

    #[test]
    fn flags_beat_file() {
        let args = CommonArgs {
            bits: Some(256),
            ..Default::default()
        };
        let file = FileConfig {
            bits: Some(128),
            max_bits: Some(2048),
            ..Default::default()
        };
        let c = RunConfig::resolve(&args, &file).unwrap();
        assert_eq!((c.bits, c.max_bits), (256, 2048));
        assert!(RunConfig::resolve(&CommonArgs { bits: Some(32), ..Default::default() }, &file).is_err());
    }
}
