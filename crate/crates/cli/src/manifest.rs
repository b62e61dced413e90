use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Baseline,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    NumSlots,
    PMax,
    VMax,
}

impl SweepVar {
    /// Config key the sweep value is written to.
    pub fn config_key(self) -> &'static str {
        match self {
            SweepVar::NumSlots => "num_slots",
            SweepVar::PMax => "p_max_w",
            SweepVar::VMax => "v_max_mps",
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVar::NumSlots => "num_slots",
            SweepVar::PMax => "p_max",
            SweepVar::VMax => "v_max",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestError(pub String);

impl fmt::Display for ManifestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ManifestError {}

impl FromStr for SweepVar {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "num_slots" => Ok(SweepVar::NumSlots),
            "p_max" | "p_max_w" => Ok(SweepVar::PMax),
            "v_max" | "v_max_mps" => Ok(SweepVar::VMax),
            other => Err(ManifestError(format!(
                "unknown sweep variable `{other}` (expected num_slots, p_max or v_max)"
            ))),
        }
    }
}

/// Parsed `VAR=v1,v2,...` sweep specification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub var: SweepVar,
    /// Values as written, so integers stay integers in the config.
    pub values: Vec<String>,
}

impl FromStr for Sweep {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (var, list) = s
            .split_once('=')
            .ok_or_else(|| ManifestError(format!("sweep `{s}` must have the form VAR=v1,v2,...")))?;
        let var: SweepVar = var.trim().parse()?;
        let values: Vec<String> = list
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        let sweep = Sweep { var, values };
        sweep.validate()?;
        Ok(sweep)
    }
}

impl Sweep {
    pub fn numeric_values(&self) -> Result<Vec<f64>, ManifestError> {
        self.values
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| ManifestError(format!("sweep value `{v}` is not a number")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        let xs = self.numeric_values()?;
        if xs.is_empty() {
            return Err(ManifestError("sweep needs at least one value".into()));
        }
        if self.var == SweepVar::NumSlots && self.values.iter().any(|v| v.parse::<usize>().is_err()) {
            return Err(ManifestError("num_slots sweep values must be integers".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ManifestError("sweep values must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub command: Command,
    pub sweep: Option<Sweep>,
    /// `KEY=VALUE` config overrides, applied in order.
    pub overrides: Vec<String>,
    pub quiet: bool,
}

impl RunManifest {
    pub fn new(config: impl Into<PathBuf>, out_dir: impl Into<PathBuf>, command: Command) -> Self {
        Self {
            config: config.into(),
            out_dir: out_dir.into(),
            command,
            sweep: None,
            overrides: Vec::new(),
            quiet: true,
        }
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        match (&self.command, &self.sweep) {
            (Command::Sweep, None) => {
                return Err(ManifestError("sweep command needs --sweep VAR=v1,v2,...".into()))
            }
            (Command::Sweep, Some(s)) => s.validate()?,
            (_, Some(_)) => {
                return Err(ManifestError("--sweep is only valid with the sweep command".into()))
            }
            _ => {}
        }
        ensure_writable(&self.out_dir)
    }
}

fn ensure_writable(dir: &Path) -> Result<(), ManifestError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| ManifestError(format!("cannot create output directory {}: {e}", dir.display())))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"")
        .and_then(|_| std::fs::remove_file(&probe))
        .map_err(|e| ManifestError(format!("output directory {} is not writable: {e}", dir.display())))
}
