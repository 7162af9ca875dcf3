//! Run configuration: a TOML file, the `LOGLIMIT_SEED` environment
//! variable and command-line flags, in increasing precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use loglimit::amoeba::{SamplerConfig, TSchedule};
use serde::Deserialize;

pub const SEED_VAR: &str = "LOGLIMIT_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Svg,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub params: BTreeMap<String, f64>,
    pub sampler: SamplerConfig,
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub t_schedule: Option<TSchedule>,
    pub samples: Option<usize>,
    pub log_box: Option<(f64, f64)>,
    pub params: Vec<(String, f64)>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config: {e}"))
    }

    /// Applies the environment seed, then the flags.
    pub fn resolve(mut self, env_seed: Option<&str>, o: &Overrides) -> Result<Self, String> {
        if let Some(s) = env_seed {
            self.seed = Some(s.trim().parse().map_err(|_| format!("{SEED_VAR}: not an integer: {s:?}"))?);
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.format.is_some() {
            self.format = o.format;
        }
        if o.out.is_some() {
            self.out.clone_from(&o.out);
        }
        if let Some(ts) = o.t_schedule {
            self.sampler.t_schedule = ts;
        }
        if let Some(n) = o.samples {
            self.sampler.samples_per_t = n;
        }
        if let Some(b) = o.log_box {
            self.sampler.log_box = b;
        }
        for (k, v) in &o.params {
            self.params.insert(k.clone(), *v);
        }
        self.sampler.rng_seed = self.seed();
        self.sampler.validate().map_err(|e| e.to_string())?;
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

fn numbers(text: &str, n: usize, what: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("{what}: not a number: {s:?}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("{what}: expected {n} comma-separated values"));
    }
    Ok(v)
}

/// `t0,ratio,count`.
pub fn parse_t_schedule(text: &str) -> Result<TSchedule, String> {
    let v = numbers(text, 3, "t schedule")?;
    if v[2] < 1.0 || v[2].fract() != 0.0 {
        return Err("t schedule: count must be a positive integer".into());
    }
    Ok(TSchedule { t0: v[0], ratio: v[1], count: v[2] as usize })
}

/// `lo,hi`.
pub fn parse_box(text: &str) -> Result<(f64, f64), String> {
    let v = numbers(text, 2, "box")?;
    Ok((v[0], v[1]))
}

/// `name=value`.
pub fn parse_param(text: &str) -> Result<(String, f64), String> {
    let (k, v) = text.split_once('=').ok_or_else(|| format!("expected name=value, got {text:?}"))?;
    let v = v.trim().parse::<f64>().map_err(|_| format!("{k}: not a number: {v:?}"))?;
    Ok((k.trim().to_string(), v))
}
