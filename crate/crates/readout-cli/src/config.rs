//! Setup configuration files: a `[setup]` TOML table whose keys mirror
//! the physical-setup fields one to one.

use std::path::Path;

use readout_core::PhysicalSetup;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub setup: SetupSection,
}

/// Frequencies and rates are angular (rad/s) unless the CLI is invoked
/// with `--units cyclic`, in which case they are read as Hz and scaled
/// by 2π on load. Times are seconds either way.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupSection {
    pub g: f64,
    pub omega_q: f64,
    pub omega_r: f64,
    pub omega_d: f64,
    pub kappa_1: f64,
    pub kappa_2: f64,
    pub eta: f64,
    pub alpha_res_sq: f64,
    /// Optional: `estimate` computes it and ignores any value given.
    #[serde(default)]
    pub t_m: Option<f64>,
    pub t_0: f64,
    pub t1: f64,
    #[serde(default = "default_bins")]
    pub n_bins: u32,
}

fn default_bins() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Units {
    /// Frequencies and rates are angular (rad/s).
    Angular,
    /// Frequencies and rates are cyclic (Hz); scaled by 2π on load.
    Cyclic,
}

pub fn load_setup(path: &Path, units: Units, require_tm: bool) -> Result<PhysicalSetup, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let parsed: ConfigFile = toml::from_str(&text)
        .map_err(|e| CliError::usage(format!("cannot parse {}: {e}", path.display())))?;
    let s = parsed.setup;
    let t_m = match (s.t_m, require_tm) {
        (Some(t), _) => t,
        (None, false) => 0.0,
        (None, true) => {
            return Err(CliError::usage(format!(
                "{} must set t_m for this command",
                path.display()
            )))
        }
    };
    let scale = match units {
        Units::Angular => 1.0,
        Units::Cyclic => std::f64::consts::TAU,
    };
    Ok(PhysicalSetup {
        g: s.g * scale,
        omega_q: s.omega_q * scale,
        omega_r: s.omega_r * scale,
        omega_d: s.omega_d * scale,
        kappa_1: s.kappa_1 * scale,
        kappa_2: s.kappa_2 * scale,
        eta: s.eta,
        alpha_res_sq: s.alpha_res_sq,
        t_m,
        t_0: s.t_0,
        t1: s.t1,
        n_bins: s.n_bins,
    })
}
