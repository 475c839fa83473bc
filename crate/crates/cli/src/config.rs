use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use intdim::cloud::PointCloud;
use intdim::estimate::{dyadic_grid, geometric_grid, EstimatorOptions, Mode};
use intdim::kernels::{AdmissibleFn, GaugeSpec};
use intdim::scenarios::{project_selfaffine, unit_interval_grid};
use intdim::symbolic::{AffineIfs, IfsFile, StopRule, SymbolicSet, Translation, Word, DEFAULT_LEAF_CAP};

/// Problems with the configuration itself, reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn cfg_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// One experiment. Fields not used by the chosen scenario are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ifs: Option<IfsSource>,
    /// Words generating the symbolic set; the full shift when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<Vec<Word>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud: Option<CloudSource>,
    /// Smaller cloud used for dense profile capacities, if `cloud` is too big.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_cloud: Option<CloudSource>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<GaugeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover_grid: Option<GridSpec>,
    #[serde(default)]
    pub estimator: EstimatorSection,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default = "yes")]
    pub include_zero: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,

    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_genericity")]
    pub genericity: f64,
    /// Fail the run when the genericity fraction falls below threshold.
    #[serde(default)]
    pub require_genericity: bool,
    /// Optional bound on the median absolute gap of a comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_median_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transversality: Option<TransversalitySection>,
}

fn yes() -> bool {
    true
}

fn default_slack() -> f64 {
    0.1
}

fn default_genericity() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IfsSource {
    File { file: PathBuf },
    Inline(IfsFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CloudSource {
    /// Headerless CSV of coordinates.
    File { file: PathBuf },
    /// `n` equispaced points on `[0, 1]`.
    Interval { interval: usize },
    /// Coding points of the attractor of `ifs` with translations
    /// `translations`, one per word of length `depth`.
    Attractor {
        attractor: IfsSource,
        translations: Vec<Vec<f64>>,
        depth: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    /// `2^{-k}` for `k = lo..=hi`.
    Dyadic { dyadic: (i32, i32) },
    Geometric { geometric: GeometricGrid },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricGrid {
    pub max: f64,
    pub min: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Dyadic { dyadic: (lo, hi) } => dyadic_grid(*lo, *hi),
            GridSpec::Geometric { geometric: g } => geometric_grid(g.max, g.min, g.n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_tol_s")]
    pub tol_s: f64,
    /// Upper end of the `s` bracket; the scenario's natural bound otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
}

fn default_mode() -> String {
    "lower".into()
}

fn default_window() -> usize {
    4
}

fn default_tol_s() -> f64 {
    1e-3
}

impl Default for EstimatorSection {
    fn default() -> Self {
        EstimatorSection {
            mode: default_mode(),
            window: default_window(),
            tol_s: default_tol_s(),
            s_max: None,
        }
    }
}

impl EstimatorSection {
    pub fn mode(&self) -> Result<Mode, ConfigError> {
        match self.mode.as_str() {
            "lower" => Ok(Mode::Lower),
            "upper" => Ok(Mode::Upper),
            other => Err(cfg_err(format!("estimator.mode must be `lower` or `upper`, got `{other}`"))),
        }
    }

    pub fn options(&self, natural_hi: f64) -> Result<EstimatorOptions, ConfigError> {
        Ok(EstimatorOptions::new(self.s_max.unwrap_or(natural_hi))
            .with_mode(self.mode()?)
            .with_window(self.window)
            .with_tol(self.tol_s))
    }
}

/// Expected estimate with an absolute tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransversalitySection {
    pub setting: String,
    #[serde(default)]
    pub params: Value,
    /// Fail when some ratio exceeds this bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ratio: Option<f64>,
}

impl ExperimentConfig {
    /// Parse TOML or JSON by extension. A manifest written by an earlier run
    /// is accepted too: its `config` entry is used.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        let value: Value = if is_json {
            serde_json::from_str(&text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?
        };
        let value = match value.get("config") {
            Some(inner) if value.get("config_sha256").is_some() => inner.clone(),
            _ => value,
        };
        let mut cfg: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let fix_ifs = |s: &mut IfsSource| {
            if let IfsSource::File { file } = s {
                fix(file)
            }
        };
        if let Some(s) = &mut self.ifs {
            fix_ifs(s);
        }
        for c in [&mut self.cloud, &mut self.profile_cloud].into_iter().flatten() {
            match c {
                CloudSource::File { file } => fix(file),
                CloudSource::Attractor { attractor, .. } => fix_ifs(attractor),
                CloudSource::Interval { .. } => {}
            }
        }
    }

    pub fn require<T: Clone>(&self, field: &str, v: &Option<T>) -> Result<T, ConfigError> {
        v.clone()
            .ok_or_else(|| cfg_err(format!("scenario `{}` needs `{field}`", self.scenario)))
    }

    /// `phi` if given, else `r^{1/θ}` from `theta` (default 1).
    pub fn gauge(&self) -> Result<AdmissibleFn, ConfigError> {
        match (&self.phi, self.theta) {
            (Some(_), Some(_)) => Err(cfg_err("give either `phi` or `theta`, not both")),
            (Some(spec), None) => AdmissibleFn::from_spec(spec).map_err(|e| cfg_err(format!("phi: {e}"))),
            (None, t) => AdmissibleFn::theta(t.unwrap_or(1.0)).map_err(|e| cfg_err(format!("theta: {e}"))),
        }
    }

    pub fn grid(&self, field: &str, spec: &Option<GridSpec>) -> Result<Vec<f64>, ConfigError> {
        let g = self.require(field, spec)?.values();
        if g.len() < 6 || g.iter().any(|r| !(*r > 0.0)) || g.windows(2).any(|w| w[1] >= w[0]) {
            return Err(cfg_err(format!(
                "`{field}` must hold at least 6 strictly decreasing positive scales"
            )));
        }
        Ok(g)
    }

    pub fn load_ifs(&self) -> Result<AffineIfs, ConfigError> {
        load_ifs(&self.require("ifs", &self.ifs)?)
    }

    pub fn symbolic_set(&self) -> Result<SymbolicSet, ConfigError> {
        match &self.set {
            None => Ok(SymbolicSet::full_shift()),
            Some(words) => SymbolicSet::new(words.clone()).map_err(|e| cfg_err(format!("set: {e}"))),
        }
    }

    pub fn load_cloud(&self, field: &str, src: &Option<CloudSource>) -> Result<PointCloud, ConfigError> {
        load_cloud(&self.require(field, src)?).map_err(|e| cfg_err(format!("{field}: {}", e.0)))
    }

    /// The config as hashed and recorded: output location stripped.
    pub fn canonical(&self) -> Value {
        let mut c = self.clone();
        c.out = None;
        serde_json::to_value(c).expect("config serializes")
    }
}

fn load_ifs(src: &IfsSource) -> Result<AffineIfs, ConfigError> {
    let file = match src {
        IfsSource::Inline(f) => f.clone(),
        IfsSource::File { file } => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| cfg_err(format!("cannot read {}: {e}", file.display())))?;
            serde_json::from_str(&text).map_err(|e| cfg_err(format!("{}: {e}", file.display())))?
        }
    };
    file.into_ifs().map_err(|e| cfg_err(format!("ifs: {e}")))
}

fn load_cloud(src: &CloudSource) -> Result<PointCloud, ConfigError> {
    match src {
        CloudSource::File { file } => {
            PointCloud::load(file).map_err(|e| cfg_err(format!("{}: {e}", file.display())))
        }
        CloudSource::Interval { interval } => unit_interval_grid(*interval).map_err(|e| cfg_err(e.to_string())),
        CloudSource::Attractor {
            attractor,
            translations,
            depth,
        } => {
            let ifs = load_ifs(attractor)?;
            let a = Translation::from_vectors(translations).map_err(|e| cfg_err(format!("translations: {e}")))?;
            project_selfaffine(&SymbolicSet::full_shift(), &ifs, &a, StopRule::Depth(*depth), DEFAULT_LEAF_CAP)
                .map(|p| p.cloud)
                .map_err(|e| cfg_err(e.to_string()))
        }
    }
}
