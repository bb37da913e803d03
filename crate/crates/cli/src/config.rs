//! Flat `key = value` configuration for `simulate`.
//!
//! ```text
//! # comment
//! m_values = 1..10
//! trials_per_m = 100000
//! seed = 7
//! ```

use std::path::PathBuf;

use rfi_mvue_core::{CountsMode, SweepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(format!(
                "unknown format {other:?} (expected csv, json or both)"
            )),
        }
    }
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

/// Values read from a config file. `None` means "not set in the file".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub m_values: Option<Vec<u32>>,
    pub trials_per_m: Option<usize>,
    pub footprint_size: Option<usize>,
    pub soil_power: Option<f64>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub counts_mode: Option<CountsMode>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub sweep: SweepConfig,
    pub workers: usize,
    pub out: PathBuf,
    pub format: OutputFormat,
}

/// Accepts `a..b` (inclusive) or a comma/space separated list.
pub fn parse_m_values(s: &str) -> Result<Vec<u32>, String> {
    let s = s.trim();
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo
            .trim()
            .parse()
            .map_err(|_| format!("bad range start {lo:?}"))?;
        let hi: u32 = hi
            .trim()
            .parse()
            .map_err(|_| format!("bad range end {hi:?}"))?;
        if lo > hi {
            return Err(format!("empty range {lo}..{hi}"));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("bad M value {t:?}")))
        .collect()
}

fn value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, String> {
    raw.parse()
        .map_err(|_| format!("invalid value {raw:?} for {key}"))
}

pub fn parse_config(text: &str) -> Result<FileConfig, String> {
    let mut cfg = FileConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| format!("line {line_no}: expected `key = value`"))?;
        let key = key.trim();
        let raw = raw.trim();
        if !seen.insert(key.to_string()) {
            return Err(format!("line {line_no}: duplicate key {key:?}"));
        }
        let at = |e: String| format!("line {line_no}: {e}");
        match key {
            "m_values" => cfg.m_values = Some(parse_m_values(raw).map_err(at)?),
            "trials_per_m" => cfg.trials_per_m = Some(value(key, raw).map_err(at)?),
            "footprint_size" => cfg.footprint_size = Some(value(key, raw).map_err(at)?),
            "soil_power" => cfg.soil_power = Some(value(key, raw).map_err(at)?),
            "beta" => cfg.beta = Some(value(key, raw).map_err(at)?),
            "seed" => cfg.seed = Some(value(key, raw).map_err(at)?),
            "counts_mode" => {
                cfg.counts_mode = Some(
                    raw.parse()
                        .map_err(|e: rfi_mvue_core::Error| at(e.to_string()))?,
                )
            }
            "workers" => cfg.workers = Some(value(key, raw).map_err(at)?),
            "out" => cfg.out = Some(PathBuf::from(raw)),
            "format" => cfg.format = Some(raw.parse().map_err(at)?),
            other => return Err(format!("line {line_no}: unknown key {other:?}")),
        }
    }
    Ok(cfg)
}

/// Command-line values; these override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

/// Precedence: flag, then file, then `RFI_MVUE_SEED` (seed only), then
/// built-in defaults.
pub fn resolve(
    file: FileConfig,
    flags: Overrides,
    env_seed: Option<&str>,
) -> Result<CliConfig, String> {
    let defaults = SweepConfig::default();
    let env_seed = env_seed
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| format!("RFI_MVUE_SEED is not an unsigned integer: {s:?}"))
        })
        .transpose()?;
    let sweep = SweepConfig {
        m_values: file.m_values.unwrap_or(defaults.m_values),
        trials_per_m: file.trials_per_m.unwrap_or(defaults.trials_per_m),
        footprint_size: file.footprint_size.unwrap_or(defaults.footprint_size),
        soil_power: file.soil_power.unwrap_or(defaults.soil_power),
        beta: file.beta.unwrap_or(defaults.beta),
        master_seed: flags
            .seed
            .or(file.seed)
            .or(env_seed)
            .unwrap_or(defaults.master_seed),
        counts_mode: file.counts_mode.unwrap_or(defaults.counts_mode),
    };
    sweep.validate().map_err(|e| e.to_string())?;
    let workers = flags
        .workers
        .or(file.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err("workers must be at least 1".into());
    }
    Ok(CliConfig {
        sweep,
        workers,
        out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        format: flags.format.or(file.format).unwrap_or_default(),
    })
}
