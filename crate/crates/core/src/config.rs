//! Scenario and solver configuration files.
//!
//! Configs are TOML documents with a flat set of keys:
//!
//! | key | unit | default |
//! |---|---|---|
//! | `users` | list of `[x, y]` in m | required |
//! | `num_slots` | count | required |
//! | `altitude_m` | m | 100 |
//! | `bandwidth_hz` | Hz | 1e7 |
//! | `slot_s` | s | 1 |
//! | `v_max_mps` | m/s | 50 |
//! | `p_max_w` | W | 0.5 |
//! | `noise_psd_dbm_hz` / `noise_psd_w_hz` | dBm/Hz or W/Hz (at most one) | -170 dBm/Hz |
//! | `gamma0` | linear | 1e-5 |
//! | `rho1`, `rho2` | ADMM penalties | 0.01, 1.25 |
//! | `epsilon` | sets both thresholds below | 1e-5 |
//! | `eps_power`, `eps_outer` | relative | `epsilon` |
//! | `max_outer_iters` | count | 100 |
//! | `max_admm_iters` | count | 2000 |
//! | `tol_admm` | m | 1e-4 |
//! | `tol_feas` | relative | 1e-6 |
//! | `admm_z_uses_stale_q` | bool | false |
//! | `parallel` | bool | true |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::Point;
use crate::scenario::{dbm_per_hz_to_watts, Scenario, ScenarioParams};

/// Numerical settings of the alternating solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rho1: f64,
    pub rho2: f64,
    /// Power-gap threshold of the rescaling loop, relative to `p_max`.
    pub eps_power: f64,
    /// Fractional τ increase below which the outer loop stops.
    pub eps_outer: f64,
    pub max_outer_iters: usize,
    pub max_admm_iters: usize,
    /// ADMM residual threshold in meters, scaled by `sqrt(2N)`.
    pub tol_admm: f64,
    pub tol_feas: f64,
    /// Project `D q^j` (previous iterate) instead of `D q^{j+1}` in the z-update.
    pub admm_z_uses_stale_q: bool,
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho1: 0.01,
            rho2: 1.25,
            eps_power: 1e-5,
            eps_outer: 1e-5,
            max_outer_iters: 100,
            max_admm_iters: 2000,
            tol_admm: 1e-4,
            tol_feas: 1e-6,
            admm_z_uses_stale_q: false,
            exec: Exec::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&str, f64); 6] = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("eps_power", self.eps_power),
            ("eps_outer", self.eps_outer),
            ("tol_admm", self.tol_admm),
            ("tol_feas", self.tol_feas),
        ];
        for (field, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation {
                    field: field.into(),
                    value: v.to_string(),
                    reason: "must be finite and strictly positive".into(),
                });
            }
        }
        for (field, v) in [
            ("max_outer_iters", self.max_outer_iters),
            ("max_admm_iters", self.max_admm_iters),
        ] {
            if v == 0 {
                return Err(Error::Validation {
                    field: field.into(),
                    value: "0".into(),
                    reason: "must be at least 1".into(),
                });
            }
        }
        Ok(())
    }
}

/// A validated scenario together with its solver settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub scenario: Scenario,
    pub solver: SolverConfig,
}

/// Every key is optional at parse time so that overrides can be layered on
/// top of a file before defaults are applied.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub users: Option<Vec<Point>>,
    pub num_slots: Option<usize>,
    pub altitude_m: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub slot_s: Option<f64>,
    pub v_max_mps: Option<f64>,
    pub p_max_w: Option<f64>,
    pub noise_psd_dbm_hz: Option<f64>,
    pub noise_psd_w_hz: Option<f64>,
    pub gamma0: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub epsilon: Option<f64>,
    pub eps_power: Option<f64>,
    pub eps_outer: Option<f64>,
    pub max_outer_iters: Option<usize>,
    pub max_admm_iters: Option<usize>,
    pub tol_admm: Option<f64>,
    pub tol_feas: Option<f64>,
    pub admm_z_uses_stale_q: Option<bool>,
    pub parallel: Option<bool>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident, $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RawConfig {
    /// Parses a TOML document; errors name the offending key and line.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| schema_error(text, &e))
    }

    /// Overlays every key set in `other` on `self`.
    pub fn merge(&mut self, other: RawConfig) {
        merge_fields!(
            self, other, users, num_slots, altitude_m, bandwidth_hz, slot_s, v_max_mps, p_max_w,
            gamma0, rho1, rho2, epsilon, eps_power, eps_outer, max_outer_iters, max_admm_iters,
            tol_admm, tol_feas, admm_z_uses_stale_q, parallel,
        );
        // The two noise keys are alternatives; an override of one replaces both.
        if other.noise_psd_dbm_hz.is_some() || other.noise_psd_w_hz.is_some() {
            self.noise_psd_dbm_hz = other.noise_psd_dbm_hz;
            self.noise_psd_w_hz = other.noise_psd_w_hz;
        }
    }

    /// Applies defaults and validates.
    pub fn build(self) -> Result<Config> {
        let users = self.users.ok_or_else(|| missing("users"))?;
        let num_slots = self.num_slots.ok_or_else(|| missing("num_slots"))?;
        let mut params = ScenarioParams::with_defaults(users, num_slots);
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { params.$f = v; } )* };
        }
        set!(altitude_m, bandwidth_hz, slot_s, v_max_mps, p_max_w, gamma0);
        params.noise_psd_w_hz = match (self.noise_psd_dbm_hz, self.noise_psd_w_hz) {
            (Some(d), None) => dbm_per_hz_to_watts(d),
            (None, Some(w)) => w,
            (None, None) => params.noise_psd_w_hz,
            (Some(d), Some(w)) => {
                return Err(Error::Validation {
                    field: "noise_psd_dbm_hz / noise_psd_w_hz".into(),
                    value: format!("{d} / {w}"),
                    reason: "give the noise density in one unit only".into(),
                })
            }
        };
        let scenario = Scenario::new(params)?;

        let d = SolverConfig::default();
        let eps = self.epsilon;
        let solver = SolverConfig {
            rho1: self.rho1.unwrap_or(d.rho1),
            rho2: self.rho2.unwrap_or(d.rho2),
            eps_power: self.eps_power.or(eps).unwrap_or(d.eps_power),
            eps_outer: self.eps_outer.or(eps).unwrap_or(d.eps_outer),
            max_outer_iters: self.max_outer_iters.unwrap_or(d.max_outer_iters),
            max_admm_iters: self.max_admm_iters.unwrap_or(d.max_admm_iters),
            tol_admm: self.tol_admm.unwrap_or(d.tol_admm),
            tol_feas: self.tol_feas.unwrap_or(d.tol_feas),
            admm_z_uses_stale_q: self.admm_z_uses_stale_q.unwrap_or(d.admm_z_uses_stale_q),
            exec: self.parallel.map(Exec::from_flag).unwrap_or(d.exec),
        };
        solver.validate()?;
        Ok(Config { scenario, solver })
    }
}

fn missing(field: &str) -> Error {
    Error::Schema {
        field: field.into(),
        line: 0,
        message: "required key is missing".into(),
    }
}

fn schema_error(text: &str, e: &toml::de::Error) -> Error {
    let offset = e.span().map_or(0, |s| s.start);
    let line_idx = text[..offset.min(text.len())].matches('\n').count();
    let line_text = text.lines().nth(line_idx).unwrap_or("");
    let message = e.message().trim().to_string();
    let field = backticked(&message)
        .or_else(|| line_text.split_once('=').map(|(k, _)| k.trim().to_string()))
        .filter(|k| !k.is_empty())
        .unwrap_or_else(|| "<document>".into());
    Error::Schema {
        field,
        line: line_idx + 1,
        message,
    }
}

fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

/// Parses `KEY=VALUE` override strings into a partial config. Values use TOML
/// syntax; bare words that are not valid TOML are treated as strings.
pub fn parse_overrides<S: AsRef<str>>(overrides: &[S]) -> Result<RawConfig> {
    let mut doc = String::new();
    for o in overrides {
        let o = o.as_ref();
        let (k, v) = o.split_once('=').ok_or_else(|| Error::Schema {
            field: o.to_string(),
            line: 0,
            message: "override must have the form KEY=VALUE".into(),
        })?;
        doc.push_str(&format!("{} = {}\n", k.trim(), v.trim()));
    }
    RawConfig::parse(&doc).map_err(|e| match e {
        Error::Schema { field, message, .. } => Error::Schema {
            field,
            line: 0,
            message: format!("in --override: {message}"),
        },
        other => other,
    })
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    load_config_with_overrides::<&str>(path, &[])
}

pub fn load_config_with_overrides<S: AsRef<str>>(
    path: impl AsRef<Path>,
    overrides: &[S],
) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut raw = RawConfig::parse(&text)?;
    raw.merge(parse_overrides(overrides)?);
    raw.build()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    load_config(path).map(|c| c.scenario)
}
