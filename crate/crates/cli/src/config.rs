//! Flat JSON run configurations. Unknown keys are rejected and every error
//! names the offending key.

use std::f64::consts::PI;
use std::path::Path;

use jmgt_core::sim::{dt_max, InitialFamily, InitialSpec, SimConfig};
use jmgt_core::{Grid, ModelParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Parse `text` as `T`, reporting the JSON path of the first bad value.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Config(inner.to_string())
        } else {
            CliError::Config(format!("key `{path}`: {inner}"))
        }
    })
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn d_xi_min() -> f64 {
    jmgt_core::modal::DEFAULT_XI_MIN
}
fn d_xi_max() -> f64 {
    jmgt_core::modal::DEFAULT_XI_MAX
}
fn d_grid_count() -> usize {
    100
}
fn d_param_max() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalConfig {
    pub tau: f64,
    pub beta: f64,
    #[serde(default = "d_xi_min")]
    pub xi_min: f64,
    #[serde(default = "d_xi_max")]
    pub xi_max: f64,
    /// Defaults to 400 for a profile and 50 per cell for a sweep.
    #[serde(default)]
    pub xi_count: Option<usize>,
    #[serde(default)]
    pub sweep: bool,
    /// Cells per axis of the `(τ, β)` sweep over `(0, param_max]`.
    #[serde(default = "d_grid_count")]
    pub grid_count: usize,
    #[serde(default = "d_param_max")]
    pub param_max: f64,
}

impl ModalConfig {
    pub fn xi_count(&self) -> usize {
        self.xi_count.unwrap_or(if self.sweep { 50 } else { jmgt_core::modal::DEFAULT_XI_COUNT })
    }

    pub fn validate(&self) -> CliResult<()> {
        ModelParams::new(self.tau, self.beta)?;
        if !(self.xi_min > 0.0 && self.xi_max > self.xi_min && self.xi_max.is_finite()) {
            return Err(CliError::Config(format!(
                "need 0 < xi_min < xi_max, got [{}, {}]",
                self.xi_min, self.xi_max
            )));
        }
        if self.xi_count() < 2 {
            return Err(CliError::Config("xi_count must be at least 2".into()));
        }
        if self.sweep && (self.grid_count < 2 || !(self.param_max > 0.0 && self.param_max.is_finite())) {
            return Err(CliError::Config("sweep needs grid_count >= 2 and param_max > 0".into()));
        }
        Ok(())
    }
}

fn d_tau() -> f64 {
    0.5
}
fn d_beta() -> f64 {
    1.0
}
fn d_nl_ratio() -> f64 {
    5.0
}
fn d_true() -> bool {
    true
}
fn d_dim() -> usize {
    3
}
fn d_n() -> usize {
    32
}
fn d_box() -> f64 {
    2.0 * PI
}
fn d_t_end() -> f64 {
    1.0
}
fn d_family() -> String {
    "gaussian-bump".into()
}
fn d_amplitude() -> f64 {
    1e-3
}
fn d_report_stride() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "d_tau")]
    pub tau: f64,
    #[serde(default = "d_beta")]
    pub beta: f64,
    /// `B/A`.
    #[serde(default = "d_nl_ratio")]
    pub nl_ratio: f64,
    #[serde(default = "d_true")]
    pub nonlinear: bool,
    #[serde(default = "d_dim")]
    pub dim: usize,
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default = "d_box")]
    pub box_len: f64,
    /// Defaults to the largest admissible step.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "d_t_end")]
    pub t_end: f64,
    #[serde(default = "d_family")]
    pub family: String,
    #[serde(default = "d_amplitude")]
    pub amplitude: f64,
    /// Gaussian width; defaults to `box_len/16`.
    #[serde(default)]
    pub width: Option<f64>,
    /// Lattice vector of a single mode.
    #[serde(default)]
    pub mode: Option<[i64; 3]>,
    /// Shell range `[m_lo, m_hi]` of random-band data.
    #[serde(default)]
    pub band: Option<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_report_stride")]
    pub report_stride: usize,
    /// Write field snapshots every this many reports; 0 keeps only the
    /// initial and final states.
    #[serde(default)]
    pub snapshot_stride: usize,
    #[serde(default = "d_true")]
    pub track_besov: bool,
}

impl SimulateConfig {
    pub fn to_sim_config(&self) -> CliResult<SimConfig> {
        let grid = Grid::new(self.dim, self.n, self.box_len)?;
        let mut params = ModelParams::new(self.tau, self.beta)?.with_nonlinearity(self.nl_ratio)?;
        if !self.nonlinear {
            params = params.linear();
        }
        let mut family = InitialFamily::parse(&self.family, &grid)?;
        match (&mut family, self.width, self.mode, self.band) {
            (InitialFamily::GaussianBump { width }, Some(w), None, None) => *width = w,
            (InitialFamily::SingleMode { mode }, None, Some(m), None) => *mode = m,
            (InitialFamily::RandomBand { m_lo, m_hi }, None, None, Some([lo, hi])) => {
                *m_lo = lo;
                *m_hi = hi;
            }
            (_, None, None, None) => {}
            _ => {
                return Err(CliError::Config(format!(
                    "`width`, `mode` and `band` apply to gaussian-bump, single-mode and random-band \
                     respectively; family is {}",
                    self.family
                )))
            }
        }
        let cfg = SimConfig {
            grid,
            params,
            dt: self.dt.unwrap_or_else(|| dt_max(&grid, &params)),
            t_end: self.t_end,
            initial: InitialSpec {
                family,
                amplitude: self.amplitude,
                seed: self.seed,
            },
            report_stride: self.report_stride,
            track_besov: self.track_besov,
            keep_snapshots: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
