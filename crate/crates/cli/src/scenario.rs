use std::sync::Arc;

use serde_json::{json, Value};

use intdim::capacity::{
    profile_capacity_curve, profile_dimension, symbolic_capacity_curve, symbolic_capacity_dimension,
    write_capacity_csv, CapacityConfig,
};
use intdim::compare::{
    compare_fbm, compare_projection, compare_selfaffine, ComparisonReport, CompareOptions, FbmInputs,
    ProjectionInputs, SelfAffineInputs,
};
use intdim::covering::{cover_table, phi_dimension, validity_warnings, write_cover_csv, CoverConfig};
use intdim::estimate::DimensionEstimate;
use intdim::registry::Registry;
use intdim::scenarios::{build_model, max_ratio, transversality_check, write_transversality_csv};

use crate::config::{ConfigError, ExperimentConfig};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(intdim::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<intdim::Error> for RunError {
    fn from(e: intdim::Error) -> Self {
        RunError::Core(e)
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// What a scenario hands back for writing.
#[derive(Debug, Default)]
pub struct Outcome {
    pub csv: Vec<u8>,
    pub summary: Vec<String>,
    pub checks: Vec<Check>,
    pub result: Value,
}

pub trait Scenario: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, cfg: &ExperimentConfig) -> Result<Outcome, RunError>;
}

pub fn scenario_registry() -> Registry<dyn Scenario> {
    let mut reg: Registry<dyn Scenario> = Registry::new("scenario");
    let all: [Arc<dyn Scenario>; 6] = [
        Arc::new(CapDim),
        Arc::new(InterDim),
        Arc::new(CompareSelfAffine),
        Arc::new(CompareProjection),
        Arc::new(CompareFbm),
        Arc::new(Transversality),
    ];
    for s in all {
        reg.register(s.name(), s);
    }
    reg
}

fn estimate_summary(label: &str, e: &DimensionEstimate) -> Vec<String> {
    let mut out = vec![format!(
        "{label} = {:.6} (mode {}, bracket width {:.1e}, {} probes)",
        e.s_star,
        e.mode,
        e.bracket_width,
        e.probes.len()
    )];
    out.extend(e.warnings.iter().map(|w| format!("warning: {w}")));
    out
}

fn estimate_json(e: &DimensionEstimate) -> Value {
    json!({
        "s_star": e.s_star,
        "mode": e.mode.to_string(),
        "bracket": [e.bracket.0, e.bracket.1],
        "no_sign_change": e.no_sign_change,
        "slopes": e.slopes,
        "warnings": e.warnings,
    })
}

fn expect_check(cfg: &ExperimentConfig, value: f64) -> Vec<Check> {
    cfg.expect
        .iter()
        .map(|x| {
            Check::new(
                "expected value",
                (value - x.value).abs() <= x.tol,
                format!("{value:.6} vs {} ± {}", x.value, x.tol),
            )
        })
        .collect()
}

/// Capacity dimension: symbolic when `ifs` is given, otherwise the profile
/// dimension of `cloud` at `tau`.
struct CapDim;

impl Scenario for CapDim {
    fn name(&self) -> &'static str {
        "capdim"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
        let phi = cfg.gauge()?;
        let grid = cfg.grid("r_grid", &cfg.r_grid)?;
        let cap = CapacityConfig::default();
        let (est, curve) = if cfg.ifs.is_some() {
            let ifs = cfg.load_ifs()?;
            let set = cfg.symbolic_set()?;
            let opts = cfg.estimator.options(ifs.dim() as f64)?;
            let est = symbolic_capacity_dimension(&set, &ifs, &phi, &grid, &opts, &cap)?;
            let curve = symbolic_capacity_curve(&set, &ifs, &phi, &grid, est.s_star, &cap)?;
            (est, curve)
        } else {
            let cloud = cfg.load_cloud("cloud", &cfg.cloud)?;
            let tau = cfg.tau.unwrap_or(cloud.dim() as f64);
            let opts = cfg.estimator.options(tau)?;
            let est = profile_dimension(&cloud, tau, &phi, &grid, &opts, &cap)?;
            let curve = profile_capacity_curve(&cloud, tau, &phi, &grid, est.s_star, &cap)?;
            (est, curve)
        };
        let mut csv = Vec::new();
        write_capacity_csv(&mut csv, &curve)?;
        let checks = expect_check(cfg, est.s_star);
        Ok(Outcome {
            csv,
            summary: estimate_summary("capacity dimension", &est),
            checks,
            result: estimate_json(&est),
        })
    }
}

/// Cover-route Φ-intermediate dimension of a point cloud.
struct InterDim;

impl Scenario for InterDim {
    fn name(&self) -> &'static str {
        "interdim"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
        let phi = cfg.gauge()?;
        let grid = cfg.grid("r_grid", &cfg.r_grid)?;
        let cloud = cfg.load_cloud("cloud", &cfg.cloud)?;
        let opts = cfg.estimator.options(cloud.dim() as f64)?;
        let cover = CoverConfig::default();
        let est = phi_dimension(&cloud, &phi, &grid, &opts, &cover)?;
        let rows = cover_table(&cloud, &phi, &grid, &[est.s_star], &cover)?;
        let mut csv = Vec::new();
        write_cover_csv(&mut csv, &rows)?;
        let mut summary = estimate_summary("cover dimension", &est);
        summary.extend(validity_warnings(&phi, &grid).into_iter().map(|w| format!("warning: {w}")));
        Ok(Outcome {
            csv,
            summary,
            checks: expect_check(cfg, est.s_star),
            result: estimate_json(&est),
        })
    }
}

fn compare_options(cfg: &ExperimentConfig) -> Result<CompareOptions, ConfigError> {
    Ok(CompareOptions {
        slack: cfg.slack,
        genericity: cfg.genericity,
        mode: cfg.estimator.mode()?,
        window: cfg.estimator.window,
        tol_s: cfg.estimator.tol_s,
        ..CompareOptions::default()
    })
}

fn report_outcome(cfg: &ExperimentConfig, report: &ComparisonReport) -> Result<Outcome, RunError> {
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    let mut checks = vec![Check::new(
        "universal inequality",
        report.universal_pass,
        format!(
            "max(cover - potential) = {:.4} against slack {}",
            report.max_gap(),
            report.slack
        ),
    )];
    let generic = Check::new(
        "genericity",
        report.genericity_pass,
        format!(
            "{:.1}% of random samples within slack (threshold {:.0}%)",
            100.0 * report.generic_fraction,
            100.0 * report.genericity_threshold
        ),
    );
    let mut summary = vec![
        format!("potential estimate = {:.6}", report.potential_estimate),
        format!("median |gap| = {:.4}", report.median_abs_gap),
    ];
    if report.potential_flagged {
        summary.push("warning: potential estimate hit the bracket edge".into());
    }
    if cfg.require_genericity {
        checks.push(generic);
    } else {
        summary.push(format!(
            "genericity (reported): {} {}",
            if generic.passed { "ok" } else { "below threshold" },
            generic.detail
        ));
    }
    if let Some(bound) = cfg.max_median_gap {
        checks.push(Check::new(
            "median gap",
            report.median_abs_gap <= bound,
            format!("{:.4} against {bound}", report.median_abs_gap),
        ));
    }
    Ok(Outcome {
        csv,
        summary,
        checks,
        result: json!({
            "potential_estimate": report.potential_estimate,
            "universal_pass": report.universal_pass,
            "generic_fraction": report.generic_fraction,
            "median_abs_gap": report.median_abs_gap,
        }),
    })
}

struct CompareSelfAffine;

impl Scenario for CompareSelfAffine {
    fn name(&self) -> &'static str {
        "compare_selfaffine"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
        let ifs = cfg.load_ifs()?;
        let set = cfg.symbolic_set()?;
        let phi = cfg.gauge()?;
        let inputs = SelfAffineInputs {
            rho: cfg.rho.unwrap_or(1.0),
            samples: cfg.require("samples", &cfg.samples)?,
            include_zero: cfg.include_zero,
            seed: cfg.seed,
            depth: cfg.depth.unwrap_or(12),
            capacity_grid: cfg.grid("r_grid", &cfg.r_grid)?,
            cover_grid: cfg.grid("cover_grid", &cfg.cover_grid)?,
        };
        let report = compare_selfaffine(&set, &ifs, &phi, &inputs, &compare_options(cfg)?)?;
        report_outcome(cfg, &report)
    }
}

struct CompareProjection;

impl Scenario for CompareProjection {
    fn name(&self) -> &'static str {
        "compare_projection"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
        let phi = cfg.gauge()?;
        let cover_cloud = cfg.load_cloud("cloud", &cfg.cloud)?;
        let profile_cloud = match &cfg.profile_cloud {
            Some(_) => cfg.load_cloud("profile_cloud", &cfg.profile_cloud)?,
            None => cover_cloud.clone(),
        };
        let inputs = ProjectionInputs {
            profile_cloud: &profile_cloud,
            cover_cloud: &cover_cloud,
            m: cfg.m.unwrap_or(1),
            samples: cfg.require("samples", &cfg.samples)?,
            seed: cfg.seed,
            profile_grid: cfg.grid("r_grid", &cfg.r_grid)?,
            cover_grid: cfg.grid("cover_grid", &cfg.cover_grid)?,
        };
        let report = compare_projection(&phi, &inputs, &compare_options(cfg)?)?;
        report_outcome(cfg, &report)
    }
}

struct CompareFbm;

impl Scenario for CompareFbm {
    fn name(&self) -> &'static str {
        "compare_fbm"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
        let phi = cfg.gauge()?;
        let cover_cloud = cfg.load_cloud("cloud", &cfg.cloud)?;
        let profile_cloud = match &cfg.profile_cloud {
            Some(_) => cfg.load_cloud("profile_cloud", &cfg.profile_cloud)?,
            None => cover_cloud.clone(),
        };
        let inputs = FbmInputs {
            profile_cloud: &profile_cloud,
            cover_cloud: &cover_cloud,
            alpha: cfg.require("alpha", &cfg.alpha)?,
            m: cfg.m.unwrap_or(1),
            samples: cfg.require("samples", &cfg.samples)?,
            seed: cfg.seed,
            profile_grid: cfg.grid("r_grid", &cfg.r_grid)?,
            cover_grid: cfg.grid("cover_grid", &cfg.cover_grid)?,
        };
        let report = compare_fbm(&phi, &inputs, &compare_options(cfg)?)?;
        report_outcome(cfg, &report)
    }
}

struct Transversality;

impl Scenario for Transversality {
    fn name(&self) -> &'static str {
        "transversality"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
        let section = cfg.require("transversality", &cfg.transversality)?;
        let model = build_model(&section.setting, &section.params)
            .map_err(|e| ConfigError(format!("transversality: {e}")))?;
        let grid = cfg.require("r_grid", &cfg.r_grid)?.values();
        let n = cfg.samples.unwrap_or(10_000);
        let rows = transversality_check(model.as_ref(), &grid, n, cfg.seed)?;
        let mut csv = Vec::new();
        write_transversality_csv(&rows, &mut csv)?;
        let worst = max_ratio(&rows);
        let checks = section
            .max_ratio
            .iter()
            .map(|b| Check::new("ratio bound", worst <= *b, format!("max ratio {worst:.4} against {b}")))
            .collect();
        Ok(Outcome {
            csv,
            summary: vec![format!("{} samples, max ratio = {worst:.6}", n)],
            checks,
            result: json!({ "max_ratio": worst }),
        })
    }
}
