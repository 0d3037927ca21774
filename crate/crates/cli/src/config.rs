//! Experiment configuration (TOML). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use partial_trace::ptrace::ProbeDistribution;
use partial_trace::spinsys::{chain_xx, kagome_strip, long_range_xx};
use partial_trace::{CouplingSpec, DepthPolicy};
use serde::Deserialize;

use crate::error::{config_err, CliError, CliResult};

/// A number, or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(try_from = "NumOrInf")]
pub struct Extended(pub f64);

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrInf {
    Int(i64),
    Num(f64),
    Word(String),
}

impl TryFrom<NumOrInf> for Extended {
    type Error = String;

    fn try_from(v: NumOrInf) -> Result<Self, String> {
        match v {
            NumOrInf::Int(i) => Ok(Extended(i as f64)),
            NumOrInf::Num(x) => Ok(Extended(x)),
            NumOrInf::Word(w) if matches!(w.as_str(), "inf" | "infinity" | "Inf") => Ok(Extended(f64::INFINITY)),
            NumOrInf::Word(w) => Err(format!("expected a number or \"inf\", got {w:?}")),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub variance_study: Option<StudyConfig>,
    pub bisect: Option<BisectConfig>,
    pub profile: Option<ProfileConfig>,
    pub validate: Option<ValidateConfig>,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    ChainXx {
        n: usize,
        #[serde(default = "one")]
        j: f64,
        #[serde(default)]
        periodic: bool,
    },
    LongRangeXx {
        n: usize,
        alpha: Extended,
    },
    KagomeStrip {
        cells: usize,
        j0: f64,
        j1: f64,
        j2: f64,
        #[serde(default)]
        periodic: bool,
    },
    /// Couplings from a separate TOML file.
    Custom { file: PathBuf },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub n_sys: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { n_sys: 2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DepthSetting {
    Fixed(usize),
    Auto(AutoWord),
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoWord {
    Auto,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    pub k: usize,
    pub m: usize,
    pub distribution: ProbeDistribution,
    pub eig_tol: f64,
    pub depth: DepthSetting,
    pub depth_tol: f64,
    pub t_max: usize,
    pub reorthogonalize: bool,
    /// Relative gap below which eigenvalues count as one ground multiplet.
    pub ground_tol: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            k: 8,
            m: 10,
            distribution: ProbeDistribution::Gaussian,
            eig_tol: 1e-13,
            depth: DepthSetting::Auto(AutoWord::Auto),
            depth_tol: 1e-10,
            t_max: 512,
            reorthogonalize: false,
            ground_tol: 1e-9,
        }
    }
}

impl EstimatorConfig {
    pub fn depth_policy(&self) -> DepthPolicy {
        match self.depth {
            DepthSetting::Fixed(t) => DepthPolicy::Fixed(t),
            DepthSetting::Auto(_) => DepthPolicy::Auto {
                rel_tol: self.depth_tol,
                t_max: self.t_max,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    /// Geometric instead of linear spacing.
    #[serde(default)]
    pub log: bool,
}

impl Range {
    fn values(&self, field: &str) -> CliResult<Vec<f64>> {
        if self.count == 0 {
            return Err(config_err(field, "count must be positive"));
        }
        if self.log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(config_err(field, "log spacing needs positive endpoints"));
        }
        let n = self.count;
        Ok((0..n)
            .map(|i| {
                let s = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                if self.log {
                    (self.start.ln() + s * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + s * (self.stop - self.start)
                }
            })
            .collect())
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub betas: Option<Vec<Extended>>,
    pub beta_range: Option<Range>,
    pub h: Option<Vec<f64>>,
    pub h_range: Option<Range>,
}

fn merge(list: Option<Vec<f64>>, range: Option<Range>, field: &str) -> CliResult<Vec<f64>> {
    let mut out = list.unwrap_or_default();
    if let Some(r) = range {
        out.extend(r.values(&format!("{field}_range"))?);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    Ok(out)
}

impl GridConfig {
    /// Sorted inverse temperatures; `inf` last.
    pub fn betas(&self) -> CliResult<Vec<f64>> {
        let list = self.betas.as_ref().map(|v| v.iter().map(|e| e.0).collect());
        let out = merge(list, self.beta_range, "grid.beta")?;
        if let Some(b) = out.iter().find(|b| b.is_nan() || **b < 0.0) {
            return Err(config_err("grid.betas", format!("inverse temperature {b} must be >= 0")));
        }
        Ok(out)
    }

    pub fn fields(&self) -> CliResult<Vec<f64>> {
        let out = merge(self.h.clone(), self.h_range, "grid.h")?;
        if out.iter().any(|h| !h.is_finite()) {
            return Err(config_err("grid.h", "field values must be finite"));
        }
        Ok(if out.is_empty() { vec![0.0] } else { out })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "ten")]
    pub runs: usize,
    pub ks: Vec<usize>,
    pub ms: Vec<usize>,
    /// Field value; defaults to the first grid value.
    pub h: Option<f64>,
}

fn ten() -> usize {
    10
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BisectConfig {
    pub h_min: f64,
    pub h_max: f64,
    #[serde(default = "bisect_tol")]
    pub tol: f64,
    #[serde(default = "bisect_depth")]
    pub max_depth: usize,
    /// Coarse samples taken before bisecting.
    #[serde(default = "bisect_initial")]
    pub initial_points: usize,
    #[serde(default = "bisect_nodes")]
    pub nodes_per_interval: usize,
    /// Entropies closer than this count as equal.
    #[serde(default = "bisect_entropy_tol")]
    pub entropy_tol: f64,
}

fn bisect_tol() -> f64 {
    1e-6
}
fn bisect_depth() -> usize {
    60
}
fn bisect_initial() -> usize {
    9
}
fn bisect_nodes() -> usize {
    5
}
fn bisect_entropy_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default = "profile_ks")]
    pub ks: Vec<usize>,
}

fn profile_ks() -> Vec<usize> {
    vec![0, 1, 4, 16]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    /// Entrywise tolerance in jackknife standard errors.
    pub sigmas: f64,
    /// Frobenius tolerance applied at `β ≥ frobenius_min_beta`.
    pub frobenius_tol: f64,
    pub frobenius_min_beta: f64,
    /// Tolerance for the exact paths (full deflation, `β = ∞`, `β = 0`).
    pub exact_tol: f64,
    pub full_deflation: bool,
    /// Break the orthonormality of `Q` on purpose (negative test).
    pub corrupt_basis: bool,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            sigmas: 4.0,
            frobenius_tol: 1e-8,
            frobenius_min_beta: 100.0,
            exact_tol: 1e-10,
            full_deflation: true,
            corrupt_basis: false,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn check(&self) -> CliResult<()> {
        let e = &self.estimator;
        if e.m == 0 {
            return Err(config_err("estimator.m", "must be at least 1"));
        }
        if !(e.eig_tol > 0.0) {
            return Err(config_err("estimator.eig_tol", "must be positive"));
        }
        if !(e.depth_tol > 0.0) || e.t_max == 0 {
            return Err(config_err("estimator.depth_tol", "depth tolerance and t_max must be positive"));
        }
        if e.depth == DepthSetting::Fixed(0) {
            return Err(config_err("estimator.depth", "must be \"auto\" or at least 1"));
        }
        let betas = self.grid.betas()?;
        if e.k == 0 && betas.iter().any(|b| b.is_infinite()) {
            return Err(config_err("grid.betas", "beta = inf needs estimator.k >= 1"));
        }
        self.grid.fields()?;
        match &self.system {
            SystemConfig::ChainXx { n, .. } | SystemConfig::LongRangeXx { n, .. } if *n < 2 => {
                return Err(config_err("system.n", "needs at least 2 sites"));
            }
            SystemConfig::LongRangeXx { alpha, .. } if !(alpha.0 > 0.0) => {
                return Err(config_err("system.alpha", "must be positive or \"inf\""));
            }
            SystemConfig::KagomeStrip { cells: 0, .. } => {
                return Err(config_err("system.cells", "needs at least one cell"));
            }
            _ => {}
        }
        if let Some(s) = &self.variance_study {
            if s.runs < 2 || s.ks.is_empty() || s.ms.is_empty() || s.ms.contains(&0) {
                return Err(config_err(
                    "variance_study",
                    "needs runs >= 2 and nonempty ks, ms with every m >= 1",
                ));
            }
        }
        if let Some(b) = &self.bisect {
            if !(b.h_min < b.h_max) || !(b.tol > 0.0) || b.initial_points < 2 || b.nodes_per_interval == 0 {
                return Err(config_err(
                    "bisect",
                    "needs h_min < h_max, tol > 0, initial_points >= 2, nodes_per_interval >= 1",
                ));
            }
        }
        Ok(())
    }

    /// Coupling specification at field `h`, without building anything.
    pub fn system_spec(&self, h: f64) -> CliResult<CouplingSpec> {
        let spec = match &self.system {
            SystemConfig::ChainXx { n, j, periodic } => chain_xx(*n, *j, *periodic),
            SystemConfig::LongRangeXx { n, alpha } => long_range_xx(*n, alpha.0),
            SystemConfig::KagomeStrip {
                cells,
                j0,
                j1,
                j2,
                periodic,
            } => kagome_strip(*cells, *j0, *j1, *j2, *periodic),
            SystemConfig::Custom { file } => {
                let path = self.base_dir.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| config_err("system.file", format!("cannot read {}: {e}", path.display())))?;
                CouplingSpec::from_toml_str(&text).map_err(|e| config_err("system.file", e))?
            }
        };
        Ok(spec.with_field(h))
    }

    pub fn system_label(&self) -> String {
        match &self.system {
            SystemConfig::ChainXx { periodic, .. } => format!("chain_xx{}", if *periodic { "_pbc" } else { "" }),
            SystemConfig::LongRangeXx { alpha, .. } => format!("long_range_xx_a{}", alpha.0),
            SystemConfig::KagomeStrip { periodic, .. } => {
                format!("kagome_strip{}", if *periodic { "_pbc" } else { "" })
            }
            SystemConfig::Custom { file } => format!("custom:{}", file.display()),
        }
    }
}
