//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use pprobe_core::sim::SimConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; census items derive theirs via [`crate::seeds::item_seed`].
    pub seed: u64,
    pub field: FieldSpec,
    pub grid: GridSpec,
    pub region: RegionSpec,
    pub quadrature: QuadratureSpec,
    pub census: CensusSpec,
    pub tolerances: Tolerances,
    pub heat: HeatSpec,
    pub pressure: PressureSpec,
    pub sim: SimConfig,
    pub output: OutputSpec,
}

/// `name = "random"` selects band-limited random fields, `"step"` the
/// smoothed step profile (heat checks only); anything else is a closed-form
/// field name with `params`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    pub params: Vec<f64>,
    pub k_max: usize,
    pub amplitude: f64,
    /// Leray-project sampled closed-form fields.
    pub project: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub box_l: f64,
    /// Map grid coordinates into `[−L/2, L/2)` when sampling.
    pub centered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionSpec {
    pub n_min: i32,
    pub n_max: i32,
    /// Surface sampler lattice is `surface_samples²`.
    pub surface_samples: usize,
    pub block_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub order: usize,
    pub volume_order: usize,
    pub volume_panels: usize,
    pub dyadic_n_min: i32,
    pub dyadic_n_max: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensusSpec {
    /// Number of random fields; `None` uses the per-lemma default.
    pub count: Option<usize>,
    /// Period of the analytic random fields used by the flux censuses.
    pub period: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative divergence accepted for generated grids.
    pub divergence: f64,
    /// Relative divergence accepted after every simulation step.
    pub sim_divergence: f64,
    /// Relative drift of an empirical constant when the census doubles.
    pub census_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatSpec {
    /// Evaluation times; `None` uses fractions of the aliasing horizon.
    pub times: Option<Vec<f64>>,
    pub duhamel_steps: usize,
    pub step_n: usize,
    pub step_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PressureSpec {
    /// Any of `spectral`, `coulomb`, `blocks`.
    pub methods: Vec<String>,
    pub points: Vec<[f64; 3]>,
    pub r_excl: f64,
    pub r_outer: Option<f64>,
    /// Permit the Coulomb route on fields without compact support.
    pub acknowledge_truncation: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub out: PathBuf,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            field: FieldSpec::default(),
            grid: GridSpec::default(),
            region: RegionSpec::default(),
            quadrature: QuadratureSpec::default(),
            census: CensusSpec::default(),
            tolerances: Tolerances::default(),
            heat: HeatSpec::default(),
            pressure: PressureSpec::default(),
            sim: SimConfig::default(),
            output: OutputSpec::default(),
        }
    }
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            name: "random".into(),
            params: Vec::new(),
            k_max: 2,
            amplitude: 1.0,
            project: true,
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: 32,
            box_l: std::f64::consts::TAU,
            centered: false,
        }
    }
}

impl Default for RegionSpec {
    fn default() -> Self {
        Self {
            n_min: -2,
            n_max: 2,
            surface_samples: 12,
            block_samples: 256,
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            order: 8,
            volume_order: 6,
            volume_panels: 2,
            dyadic_n_min: -8,
            dyadic_n_max: 8,
        }
    }
}

impl Default for CensusSpec {
    fn default() -> Self {
        Self {
            count: None,
            period: 16.0,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            divergence: 1e-10,
            sim_divergence: 1e-9,
            census_drift: 0.10,
        }
    }
}

impl Default for HeatSpec {
    fn default() -> Self {
        Self {
            times: None,
            duhamel_steps: 64,
            step_n: 4096,
            step_eps: 1e-4,
        }
    }
}

impl Default for PressureSpec {
    fn default() -> Self {
        Self {
            methods: vec!["spectral".into()],
            points: vec![[0.0; 3]],
            r_excl: 1e-6,
            r_outer: None,
            acknowledge_truncation: false,
        }
    }
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_n: Option<usize>,
    pub box_l: Option<f64>,
    pub order: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)
            }
            None => Ok(Self::default()),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.grid_n {
            self.grid.n = v;
        }
        if let Some(v) = o.box_l {
            self.grid.box_l = v;
        }
        if let Some(v) = o.order {
            self.quadrature.order = v;
        }
        if let Some(v) = &o.out {
            self.output.out = v.clone();
        }
        if let Some(v) = o.format {
            self.output.format = v;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        let positive = [
            ("tolerances.divergence", t.divergence),
            ("tolerances.sim_divergence", t.sim_divergence),
            ("tolerances.census_drift", t.census_drift),
            ("grid.box_l", self.grid.box_l),
            ("census.period", self.census.period),
            ("pressure.r_excl", self.pressure.r_excl),
            ("heat.step_eps", self.heat.step_eps),
        ];
        for (name, v) in positive {
            if v.is_nan() || v <= 0.0 || v.is_infinite() {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.grid.n < 2 || !self.grid.n.is_power_of_two() {
            return Err(CliError::Config(format!(
                "grid.n must be a power of two ≥ 2, got {}",
                self.grid.n
            )));
        }
        if self.region.n_min > self.region.n_max || self.quadrature.dyadic_n_min > self.quadrature.dyadic_n_max {
            return Err(CliError::Config("empty dyadic index range".into()));
        }
        if self.quadrature.order < 2 || self.quadrature.volume_order < 2 {
            return Err(CliError::Config("quadrature orders must be at least 2".into()));
        }
        if self.census.count == Some(0) {
            return Err(CliError::Config("census.count must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring where output goes.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSpec::default();
        let json = serde_json::to_vec(&c).expect("config serialises");
        format!("{:x}", Sha256::digest(json))
    }
}
