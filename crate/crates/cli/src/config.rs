//! Run configuration: a JSON config file merged with command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pentabend::fd::FdOptions;
use pentabend::singularities::Thresholds;
use serde::Deserialize;

use crate::CliError;

pub const REFERENCE_LENGTHS: [f64; 5] = [3.0, 1.0, 4.0, 2.0, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TSpec {
    Single(f64),
    Range { start: f64, stop: f64, count: usize },
}

impl TSpec {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            TSpec::Single(t) => vec![t],
            TSpec::Range { start, stop, count } => pentabend::transition::linspace(start, stop, count),
        }
    }
}

/// Parses `start:stop:count`.
pub fn parse_range(s: &str) -> Result<TSpec, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Usage(format!("invalid t range '{s}', expected start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    let spec = TSpec::Range { start, stop, count };
    check_t(&spec)?;
    Ok(spec)
}

fn check_t(spec: &TSpec) -> Result<(), CliError> {
    match *spec {
        TSpec::Single(t) if !t.is_finite() => Err(CliError::Usage(format!("t = {t} is not finite"))),
        TSpec::Range { start, stop, count } if !(start.is_finite() && stop.is_finite() && start <= stop && count >= 1) => {
            Err(CliError::Usage(format!(
                "t range {start}:{stop}:{count} must satisfy start <= stop and count >= 1"
            )))
        }
        _ => Ok(()),
    }
}

/// Parses `a,b,c,...`.
pub fn parse_lengths(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("invalid side length '{x}'")))
        })
        .collect()
}

/// Parses `NAME=VAL`.
pub fn parse_tolerance(s: &str) -> Result<(String, f64), CliError> {
    let (name, val) = s
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("invalid tolerance '{s}', expected NAME=VAL")))?;
    let v: f64 = val
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid tolerance value '{val}'")))?;
    Ok((name.trim().to_string(), v))
}

/// Tolerance names and defaults. Classification thresholds come first,
/// then the limits of the verification suites.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("rank", 1e-8),
    ("degenerate", 1e-7),
    ("fixed_surface", 1e-9),
    ("witness", 1e-9),
    ("local_model", 1e-12),
    ("fd_step", 0.03),
    ("closed_form", 1e-12),
    ("matrices", 1e-5),
    ("chi", 1e-7),
    ("factorization", 1e-9),
    ("sweep_window", 1e-3),
    ("commutation", 1e-9),
    ("field", 1e-7),
    ("bending", 1e-10),
    ("two_sphere", 1e-10),
    ("rank1", 1e-4),
    ("moment_slack", 1e-9),
    ("moment_vertex", 0.02),
    ("local_times", 1e-12),
];

/// Suites whose limits sit near the finite-difference error floor.
pub const FD_TOLERANCES: &[&str] = &["matrices", "chi", "field", "rank1"];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    r: Option<Vec<f64>>,
    t: Option<f64>,
    t_range: Option<String>,
    seed: Option<u64>,
    samples: Option<usize>,
    tolerances: Option<BTreeMap<String, f64>>,
    format: Option<Format>,
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub r: Vec<f64>,
    pub t: Option<TSpec>,
    pub seed: u64,
    pub samples: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            r: REFERENCE_LENGTHS.to_vec(),
            t: None,
            seed: 0,
            samples: None,
            tolerances: BTreeMap::new(),
            out: None,
            format: None,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Side lengths, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<String>,
    /// Family parameter.
    #[arg(long)]
    pub t: Option<f64>,
    /// Family parameter range start:stop:count.
    #[arg(long = "t-range")]
    pub t_range: Option<String>,
    /// Number of samples.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Tolerance override NAME=VAL, repeatable.
    #[arg(long = "tol")]
    pub tol: Vec<String>,
}

impl RunConfig {
    pub fn from_args(args: &CommonArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        if let Some(r) = &args.r {
            cfg.r = parse_lengths(r)?;
        }
        if let Some(t) = args.t {
            cfg.t = Some(TSpec::Single(t));
        }
        if let Some(s) = &args.t_range {
            cfg.t = Some(parse_range(s)?);
        }
        if let Some(n) = args.samples {
            cfg.samples = Some(n);
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(o) = &args.out {
            cfg.out = Some(o.clone());
        }
        if let Some(f) = args.format {
            cfg.format = Some(f);
        }
        for s in &args.tol {
            let (k, v) = parse_tolerance(s)?;
            cfg.tolerances.insert(k, v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let f: ConfigFile = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        let mut cfg = Self::default();
        if let Some(r) = f.r {
            cfg.r = r;
        }
        cfg.t = f.t.map(TSpec::Single);
        if let Some(s) = f.t_range {
            cfg.t = Some(parse_range(&s)?);
        }
        cfg.seed = f.seed.unwrap_or(0);
        cfg.samples = f.samples;
        cfg.tolerances = f.tolerances.unwrap_or_default();
        cfg.format = f.format;
        cfg.out = f.out;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(t) = &self.t {
            check_t(t)?;
        }
        for (k, v) in &self.tolerances {
            if !TOLERANCES.iter().any(|(n, _)| n == k) {
                return Err(CliError::Usage(format!("unknown tolerance '{k}'")));
            }
            if !(v.is_finite() && *v > 0.0) {
                return Err(CliError::Usage(format!("tolerance {k} = {v} must be positive")));
            }
        }
        Ok(())
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances.get(name).copied().unwrap_or_else(|| {
            TOLERANCES
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| *v)
                .expect("known tolerance name")
        })
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            rank: self.tol("rank"),
            degenerate: self.tol("degenerate"),
            fixed_surface: self.tol("fixed_surface"),
            witness: self.tol("witness"),
            local_model: self.tol("local_model"),
            fd: FdOptions {
                rel_step: self.tol("fd_step"),
                ..FdOptions::default()
            },
        }
    }

    pub fn is_reference(&self) -> bool {
        self.r == REFERENCE_LENGTHS
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(
            parse_range("0:1:11").unwrap(),
            TSpec::Range { start: 0.0, stop: 1.0, count: 11 }
        );
        assert!(parse_range("1:0:5").is_err());
        assert!(parse_range("0:1").is_err());
        assert_eq!(parse_range("0:1:3").unwrap().values(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn lengths_and_tolerances() {
        assert_eq!(parse_lengths("3,1,4,2,3").unwrap(), REFERENCE_LENGTHS.to_vec());
        assert!(parse_lengths("3,x").is_err());
        assert_eq!(parse_tolerance("chi=1e-15").unwrap(), ("chi".to_string(), 1e-15));
        assert!(parse_tolerance("chi").is_err());
    }

    #[test]
    fn config_file_and_validation() {
        let c = RunConfig::from_json(r#"{"r": [3, 1, 4, 2, 3], "seed": 4, "tolerances": {"chi": 1e-6}}"#).unwrap();
        assert!(c.is_reference());
        assert_eq!(c.seed, 4);
        assert_eq!(c.tol("chi"), 1e-6);
        assert_eq!(c.tol("matrices"), 1e-5);
        assert!(RunConfig::from_json(r#"{"tolerances": {"nope": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"tolerances": {"chi": -1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"colour": 1}"#).is_err());
    }
}
