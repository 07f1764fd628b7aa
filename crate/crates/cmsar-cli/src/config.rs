//! Run configuration: a JSON file with every pipeline parameter, plus
//! dotted-path `--set key=value` overrides.

use anyhow::{bail, Context, Result};
use cmsar::forward::Pulse;
use cmsar::scene::{AcquisitionConfig, GridGeometry, SinogramGeometry};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PeakConfig {
    pub radius_cells: usize,
    pub threshold: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            radius_cells: 3,
            threshold: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnoseConfig {
    /// Points sampled on each branch of the critical set.
    pub sigma_samples: usize,
    /// Points sampled away from the critical set.
    pub off_sigma_samples: usize,
    pub s_range: (f64, f64),
    pub omega_range: (f64, f64),
    /// |x| sampling ceiling.
    pub x_max: f64,
    /// Off-critical floor on both |x1| and |x2|.
    pub x_floor: f64,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            sigma_samples: 5000,
            off_sigma_samples: 5000,
            s_range: (0.5, 2.5),
            omega_range: (0.5, 3.0),
            x_max: 2.0,
            x_floor: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub identity_samples: usize,
    pub identity_threshold: f64,
    pub generator_samples: usize,
    pub generator_threshold: f64,
    pub oracle_instances: usize,
    /// Grid edge of the brute-force composition search.
    pub oracle_grid: usize,
    /// Half-extent of the search square.
    pub oracle_extent: f64,
    pub cutoff_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            identity_samples: 1000,
            identity_threshold: 1e-8,
            generator_samples: 1000,
            generator_threshold: 1e-12,
            oracle_instances: 10,
            oracle_grid: 2001,
            oracle_extent: 5.0,
            cutoff_samples: 1000,
        }
    }
}

/// Everything a run needs. All fields have defaults, so a config file may
/// specify only what it changes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub h: f64,
    pub epsilon: f64,
    pub pulse: Pulse,
    pub scene_grid: GridGeometry,
    pub sinogram_grid: SinogramGeometry,
    pub f_taper_fraction: f64,
    pub g_taper_width: Option<f64>,
    pub scene_path: Option<String>,
    pub out_dir: String,
    pub seed: u64,
    pub peaks: PeakConfig,
    pub diagnose: DiagnoseConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        // desk-scale defaults: the full pipeline stays interactive
        Self {
            h: 1.0,
            epsilon: 0.05,
            pulse: Pulse::ricker(10.0),
            scene_grid: GridGeometry {
                x1_min: -1.0,
                x1_max: 1.0,
                x2_min: -1.0,
                x2_max: 1.0,
                n1: 128,
                n2: 128,
            },
            sinogram_grid: SinogramGeometry {
                s_min: 0.5,
                s_max: 2.0,
                t_min: 2.2,
                t_max: 5.5,
                ns: 192,
                nt: 512,
            },
            f_taper_fraction: 0.05,
            g_taper_width: None,
            scene_path: None,
            out_dir: "out".into(),
            seed: 0,
            peaks: PeakConfig::default(),
            diagnose: DiagnoseConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn acquisition(&self) -> AcquisitionConfig {
        AcquisitionConfig {
            h: self.h,
            epsilon: self.epsilon,
            pulse: self.pulse,
            scene: self.scene_grid,
            sinogram: self.sinogram_grid,
            f_taper_fraction: self.f_taper_fraction,
            g_taper_width: self.g_taper_width,
        }
    }
}

/// Loads the config (or defaults), applies `--set key=value` overrides by
/// dotted path, and deserializes.
pub fn load_config(path: Option<&Path>, sets: &[String]) -> Result<RunConfig> {
    let mut value: serde_json::Value = match path {
        Some(p) => serde_json::from_str(
            &std::fs::read_to_string(p).with_context(|| format!("reading config {p:?}"))?,
        )
        .with_context(|| format!("parsing config {p:?}"))?,
        None => serde_json::json!({}),
    };
    for set in sets {
        let (key, raw) = set
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got {set:?}"))?;
        let parsed: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        let parts: Vec<&str> = key.split('.').collect();
        set_path(&mut value, key, &parts, parsed)?;
    }
    let cfg: RunConfig = serde_json::from_value(value).context("config does not match schema")?;
    if cfg.epsilon <= 0.0 || cfg.h <= 0.0 {
        bail!("h and epsilon must be positive");
    }
    Ok(cfg)
}

fn set_path(
    value: &mut serde_json::Value,
    key: &str,
    parts: &[&str],
    leaf: serde_json::Value,
) -> Result<()> {
    let obj = value
        .as_object_mut()
        .with_context(|| format!("--set path {key:?} descends into a non-object"))?;
    match parts {
        [last] => {
            obj.insert(last.to_string(), leaf);
            Ok(())
        }
        [head, rest @ ..] => {
            let child = obj
                .entry(head.to_string())
                .or_insert_with(|| serde_json::json!({}));
            set_path(child, key, rest, leaf)
        }
        [] => unreachable!("split always yields at least one part"),
    }
}
