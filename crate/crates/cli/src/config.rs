//! Experiment configuration read from a TOML file.

use horolab::group::{build_schottky, GroupSpec, SchottkyGroup};
use horolab::means::{TestDictionary, TestFunctionSpec};
use horolab::potential::{make_potential, Potential, PotentialSpec};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Largest word length accepted by the driver.
pub const MAX_LEN_CAP: usize = 16;

/// Rough resident size per enumerated word: matrix, orbit data, tree links and atoms.
const BYTES_PER_WORD: f64 = 160.0;

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Parse(m) => write!(f, "cannot parse config: {m}"),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Tolerances of every check the driver runs. All have defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rho_tol: f64,
    pub geometry: f64,
    pub oracle: f64,
    pub pressure_sigmas: f64,
    pub weak: f64,
    pub flow_scaling: f64,
    pub holonomy: f64,
    pub mean_identity: f64,
    pub equidist_final: f64,
    pub sets_final: f64,
    pub growth_slack: f64,
    pub vitali_spread: usize,
    pub autoadjoint: f64,
    pub cell_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rho_tol: 1e-4,
            geometry: 1e-9,
            oracle: 1e-5,
            pressure_sigmas: 2.0,
            weak: 0.10,
            flow_scaling: 0.02,
            holonomy: 1e-12,
            mean_identity: 0.01,
            equidist_final: 0.10,
            sets_final: 0.15,
            growth_slack: 0.1,
            vitali_spread: 3,
            autoadjoint: 0.05,
            cell_floor: 1e-3,
        }
    }
}

fn e_powers(k: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    k.map(|j| (j as f64).exp()).collect()
}

/// Experiment selector and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// The invariant suite: geometry, cocycles, pressure, boundary measures, measure table.
    Checks {
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Pressure {
        #[serde(default = "default_shift")]
        shift: f64,
    },
    Patterson {
        #[serde(default = "default_bump_width")]
        bump_width: f64,
    },
    Equidistribution {
        #[serde(default = "default_three")]
        u_count: usize,
        #[serde(default = "default_r_grid")]
        r_grid: Vec<f64>,
        #[serde(default = "default_t_grid")]
        t_grid: Vec<f64>,
        #[serde(default)]
        dictionary: Option<Vec<TestFunctionSpec>>,
        #[serde(default = "default_target_samples")]
        target_samples: usize,
    },
    Growth {
        #[serde(default = "default_three")]
        u_count: usize,
        #[serde(default = "default_growth_grid")]
        r_grid: Vec<f64>,
    },
    Star {
        #[serde(default = "default_five")]
        u_count: usize,
        #[serde(default = "default_star_radii")]
        radii: Vec<f64>,
        #[serde(default = "default_depths")]
        depths: Vec<usize>,
        #[serde(default)]
        dictionary: Option<Vec<TestFunctionSpec>>,
        #[serde(default = "default_target_samples")]
        target_samples: usize,
        #[serde(default = "default_l_cut")]
        l_cut: usize,
    },
    Autoadjoint {
        #[serde(default = "default_autoadjoint_radii")]
        radii: Vec<f64>,
        #[serde(default = "default_autoadjoint_samples")]
        samples: usize,
        #[serde(default)]
        dictionary: Option<Vec<TestFunctionSpec>>,
    },
    Cells {
        #[serde(default = "default_one")]
        u_count: usize,
        #[serde(default = "default_eps")]
        eps: f64,
    },
    Render {
        #[serde(default = "default_orbit_len")]
        orbit_len: usize,
        #[serde(default = "default_disk_depth")]
        disk_depth: usize,
    },
}

fn default_samples() -> usize {
    1000
}
fn default_shift() -> f64 {
    0.25
}
fn default_bump_width() -> f64 {
    0.3
}
fn default_one() -> usize {
    1
}
fn default_three() -> usize {
    3
}
fn default_five() -> usize {
    5
}
fn default_r_grid() -> Vec<f64> {
    e_powers(1..=4)
}
fn default_t_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_target_samples() -> usize {
    20_000
}
fn default_growth_grid() -> Vec<f64> {
    vec![0.5, 2.0, 8.0, 32.0, 128.0]
}
fn default_star_radii() -> Vec<f64> {
    vec![2.0, 4.0, 8.0, 16.0]
}
fn default_depths() -> Vec<usize> {
    (1..=6).collect()
}
fn default_l_cut() -> usize {
    60
}
fn default_autoadjoint_radii() -> Vec<f64> {
    e_powers(2..=2)
}
fn default_autoadjoint_samples() -> usize {
    100
}
fn default_eps() -> f64 {
    0.1
}
fn default_orbit_len() -> usize {
    6
}
fn default_disk_depth() -> usize {
    4
}

impl Experiment {
    /// Default parameters for the experiment named `kind`.
    pub fn default_for(kind: &str) -> Option<Self> {
        let toml = format!("kind = \"{kind}\"");
        toml::from_str(&toml).ok()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Checks { .. } => "checks",
            Experiment::Pressure { .. } => "pressure",
            Experiment::Patterson { .. } => "patterson",
            Experiment::Equidistribution { .. } => "equidistribution",
            Experiment::Growth { .. } => "growth",
            Experiment::Star { .. } => "star",
            Experiment::Autoadjoint { .. } => "autoadjoint",
            Experiment::Cells { .. } => "cells",
            Experiment::Render { .. } => "render",
        }
    }
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Mandatory: every random draw of a run derives from it.
    pub seed: u64,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "GroupSpec::standard")]
    pub group: GroupSpec,
    #[serde(default = "default_potential")]
    pub potential: PotentialSpec,
    /// Level step of the autoadjunction quadrature.
    #[serde(default = "default_quad_step")]
    pub quad_step: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub experiment: Experiment,
    /// Artifact directory below the output root; defaults to `name`.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_max_len() -> usize {
    12
}
fn default_potential() -> PotentialSpec {
    PotentialSpec::Zero
}
fn default_quad_step() -> f64 {
    horolab::means::AUTOADJOINT_S_STEP
}

/// Objects built from a validated configuration.
pub struct Resolved {
    pub group: SchottkyGroup,
    pub potential: Potential,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Estimated peak memory of the word enumeration at `max_len`, in bytes.
    pub fn estimated_memory(&self) -> f64 {
        horolab::group::word_count(self.group.rank, self.max_len) as f64 * BYTES_PER_WORD
    }

    /// Checks every parameter and builds the group, the potential and the dictionary.
    pub fn validate(&self) -> Result<Resolved, ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return bad(format!("name {:?} is not a plain directory name", self.name));
        }
        if let Some(out) = &self.output {
            if out.is_empty() || Path::new(out).is_absolute() || out.split(['/', '\\']).any(|c| c == "..") {
                return bad(format!("output {out:?} must be a relative path without '..'"));
            }
        }
        if self.max_len < 6 || self.max_len > MAX_LEN_CAP {
            return bad(format!("max_len {} outside [6, {MAX_LEN_CAP}]", self.max_len));
        }
        if !(self.quad_step > 0.0 && self.quad_step <= 1.0) {
            return bad(format!("quad_step {} outside (0, 1]", self.quad_step));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("rho_tol", t.rho_tol),
            ("geometry", t.geometry),
            ("oracle", t.oracle),
            ("pressure_sigmas", t.pressure_sigmas),
            ("weak", t.weak),
            ("flow_scaling", t.flow_scaling),
            ("holonomy", t.holonomy),
            ("mean_identity", t.mean_identity),
            ("equidist_final", t.equidist_final),
            ("sets_final", t.sets_final),
            ("growth_slack", t.growth_slack),
            ("autoadjoint", t.autoadjoint),
            ("cell_floor", t.cell_floor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("tolerance {name} = {v} must be positive"));
            }
        }
        let positive = |what: &str, xs: &[f64]| -> Result<(), ConfigError> {
            if xs.is_empty() {
                return Err(ConfigError::Invalid(format!("{what} is empty")));
            }
            match xs.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                Some(x) => Err(ConfigError::Invalid(format!("{what} contains non-positive radius {x}"))),
                None => Ok(()),
            }
        };
        let increasing = |what: &str, xs: &[f64]| -> Result<(), ConfigError> {
            if xs.windows(2).all(|w| w[0] < w[1]) {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{what} must be strictly increasing")))
            }
        };
        let count = |what: &str, n: usize| -> Result<(), ConfigError> {
            if n == 0 {
                Err(ConfigError::Invalid(format!("{what} must be at least 1")))
            } else {
                Ok(())
            }
        };
        match &self.experiment {
            Experiment::Checks { samples } => count("samples", *samples)?,
            Experiment::Pressure { shift } => {
                if !shift.is_finite() {
                    return bad(format!("shift {shift}"));
                }
            }
            Experiment::Patterson { bump_width } => positive("bump_width", &[*bump_width])?,
            Experiment::Equidistribution {
                u_count,
                r_grid,
                t_grid,
                target_samples,
                ..
            } => {
                count("u_count", *u_count)?;
                count("target_samples", *target_samples)?;
                positive("r_grid", r_grid)?;
                increasing("r_grid", r_grid)?;
                if t_grid.iter().any(|t| !t.is_finite()) {
                    return bad("t_grid has a non-finite entry".into());
                }
            }
            Experiment::Growth { u_count, r_grid } => {
                count("u_count", *u_count)?;
                positive("r_grid", r_grid)?;
                increasing("r_grid", r_grid)?;
            }
            Experiment::Star {
                u_count,
                radii,
                depths,
                target_samples,
                l_cut,
                ..
            } => {
                count("u_count", *u_count)?;
                count("target_samples", *target_samples)?;
                count("l_cut", *l_cut)?;
                positive("radii", radii)?;
                increasing("radii", radii)?;
                if depths.is_empty() || depths.contains(&0) || !depths.windows(2).all(|w| w[0] < w[1]) {
                    return bad("depths must be positive and strictly increasing".into());
                }
            }
            Experiment::Autoadjoint { radii, samples, .. } => {
                count("samples", *samples)?;
                positive("radii", radii)?;
            }
            Experiment::Cells { u_count, eps } => {
                count("u_count", *u_count)?;
                positive("eps", &[*eps])?;
            }
            Experiment::Render { orbit_len, disk_depth } => {
                if *orbit_len > 8 || *disk_depth == 0 || *disk_depth > 6 {
                    return bad("render needs orbit_len <= 8 and disk_depth in [1, 6]".into());
                }
            }
        }
        let group = build_schottky(&self.group).map_err(|e| ConfigError::Invalid(format!("group: {e}")))?;
        let potential =
            make_potential(&group, &self.potential).map_err(|e| ConfigError::Invalid(format!("potential: {e}")))?;
        if let Some(specs) = self.dictionary() {
            TestDictionary::new(&group, specs.to_vec()).map_err(|e| ConfigError::Invalid(format!("dictionary: {e}")))?;
        }
        Ok(Resolved { group, potential })
    }

    pub fn dictionary(&self) -> Option<&[TestFunctionSpec]> {
        match &self.experiment {
            Experiment::Equidistribution { dictionary, .. }
            | Experiment::Star { dictionary, .. }
            | Experiment::Autoadjoint { dictionary, .. } => dictionary.as_deref(),
            _ => None,
        }
    }

    /// Artifact directory below `root`.
    pub fn output_dir(&self, root: &Path) -> PathBuf {
        root.join(self.output.as_deref().unwrap_or(&self.name))
    }
}

/// Output root: the explicit flag, then `HOROLAB_OUT`, then `horolab-out` in the working directory.
pub fn output_root(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("horolab-out"),
    }
}

/// Environment variable naming the artifact root.
pub const OUTPUT_ENV: &str = "HOROLAB_OUT";
