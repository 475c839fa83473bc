use std::fmt::Debug;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;

use super::grassmann::sample_grassmannian;
use super::translation::sample_translation;
use crate::cloud::euclidean;
use crate::error::{invalid, Result};
use crate::io::fmt_f64;
use crate::kernels::ker_z_pair;
use crate::registry::Registry;
use crate::rng::RngStream;
use crate::symbolic::{coding_point, common_prefix, AffineIfs, IfsFile, Word};

/// A random parameter family together with the kernel bounding the chance
/// that it brings two fixed points within distance `r`.
pub trait TransversalityModel: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    /// Image distance of the two points under one random parameter.
    fn distance(&self, rng: &mut RngStream) -> Result<f64>;
    fn kernel(&self, r: f64) -> f64;
}

/// Uniform translations in `B_ρ`, two finite words standing in for their
/// infinite extensions.
#[derive(Debug, Clone)]
pub struct SelfAffineModel {
    ifs: AffineIfs,
    rho: f64,
    x: Word,
    y: Word,
}

impl SelfAffineModel {
    pub fn new(ifs: AffineIfs, rho: f64, x: Word, y: Word) -> Result<Self> {
        if !ifs.strict_half() {
            return Err(invalid("self-affine transversality needs every ‖T_j‖ < 1/2"));
        }
        if !(rho > 0.0) {
            return Err(invalid("rho must be positive"));
        }
        ifs.check_word(&x)?;
        ifs.check_word(&y)?;
        if common_prefix(&x, &y).diagonal {
            return Err(invalid("x and y must differ"));
        }
        Ok(SelfAffineModel { ifs, rho, x, y })
    }
}

impl TransversalityModel for SelfAffineModel {
    fn name(&self) -> &'static str {
        "selfaffine"
    }

    fn distance(&self, rng: &mut RngStream) -> Result<f64> {
        let a = sample_translation(self.rho, self.ifs.dim(), self.ifs.maps(), rng)?;
        let px = coding_point(&self.ifs, &a, &self.x)?;
        let py = coding_point(&self.ifs, &a, &self.y)?;
        Ok(euclidean(&px.point, &py.point))
    }

    fn kernel(&self, r: f64) -> f64 {
        ker_z_pair(&self.ifs, &common_prefix(&self.x, &self.y), r)
    }
}

/// Random `m`-planes in `R^d` acting on two fixed points.
#[derive(Debug, Clone)]
pub struct GrassmannModel {
    m: usize,
    diff: Vec<f64>,
    delta: f64,
}

impl GrassmannModel {
    pub fn new(m: usize, x: &[f64], y: &[f64]) -> Result<Self> {
        let d = x.len();
        if y.len() != d || m == 0 || m >= d {
            return Err(invalid(format!("need points of equal dimension d > m, got d = {d}, m = {m}")));
        }
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let delta = euclidean(x, y);
        if delta == 0.0 {
            return Err(invalid("x and y must differ"));
        }
        Ok(GrassmannModel { m, diff, delta })
    }
}

impl TransversalityModel for GrassmannModel {
    fn name(&self) -> &'static str {
        "grassmann"
    }

    fn distance(&self, rng: &mut RngStream) -> Result<f64> {
        let frame = sample_grassmannian(self.diff.len(), self.m, rng)?;
        Ok(frame.coordinates(&self.diff).iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    fn kernel(&self, r: f64) -> f64 {
        (r / self.delta).powi(self.m as i32).min(1.0)
    }
}

/// `m` independent index-α fields at two points. The increment law alone
/// fixes the distance: each coordinate of `B(x) − B(y)` is `N(0, Δ^{2α})`.
#[derive(Debug, Clone)]
pub struct FbmModel {
    alpha: f64,
    m: usize,
    delta: f64,
}

impl FbmModel {
    pub fn new(alpha: f64, m: usize, x: &[f64], y: &[f64]) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) || m == 0 {
            return Err(invalid("fBm transversality needs 0 < alpha < 1 and m >= 1"));
        }
        if x.len() != y.len() {
            return Err(invalid("points must share a dimension"));
        }
        let delta = euclidean(x, y);
        if delta == 0.0 {
            return Err(invalid("x and y must differ"));
        }
        Ok(FbmModel { alpha, m, delta })
    }
}

impl TransversalityModel for FbmModel {
    fn name(&self) -> &'static str {
        "fbm"
    }

    fn distance(&self, rng: &mut RngStream) -> Result<f64> {
        let sd = self.delta.powf(self.alpha);
        Ok(rng.normals(self.m).iter().map(|z| (sd * z).powi(2)).sum::<f64>().sqrt())
    }

    fn kernel(&self, r: f64) -> f64 {
        (r.powf(1.0 / self.alpha) / self.delta)
            .powf(self.alpha * self.m as f64)
            .min(1.0)
    }
}

type ModelFactory = dyn Fn(&Value) -> Result<Box<dyn TransversalityModel>> + Send + Sync;

#[derive(Deserialize)]
struct SelfAffineParams {
    ifs: IfsFile,
    #[serde(default = "one")]
    rho: f64,
    x: Word,
    y: Word,
}

#[derive(Deserialize)]
struct PointParams {
    m: usize,
    #[serde(default)]
    alpha: Option<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn params<T: for<'de> Deserialize<'de>>(setting: &str, p: &Value) -> Result<T> {
    serde_json::from_value(p.clone()).map_err(|e| invalid(format!("{setting} params: {e}")))
}

/// Model builders keyed by setting name, taking JSON parameters.
pub fn transversality_registry() -> &'static Registry<ModelFactory> {
    static REG: OnceLock<Registry<ModelFactory>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<ModelFactory> = Registry::new("transversality setting");
        reg.register(
            "selfaffine",
            Arc::new(|p: &Value| {
                let p: SelfAffineParams = params("selfaffine", p)?;
                Ok(Box::new(SelfAffineModel::new(p.ifs.into_ifs()?, p.rho, p.x, p.y)?) as Box<dyn TransversalityModel>)
            }),
        );
        reg.register(
            "grassmann",
            Arc::new(|p: &Value| {
                let p: PointParams = params("grassmann", p)?;
                Ok(Box::new(GrassmannModel::new(p.m, &p.x, &p.y)?) as Box<dyn TransversalityModel>)
            }),
        );
        reg.register(
            "fbm",
            Arc::new(|p: &Value| {
                let p: PointParams = params("fbm", p)?;
                let alpha = p.alpha.ok_or_else(|| invalid("fbm params need alpha"))?;
                Ok(Box::new(FbmModel::new(alpha, p.m, &p.x, &p.y)?) as Box<dyn TransversalityModel>)
            }),
        );
        reg
    })
}

pub fn build_model(setting: &str, params: &Value) -> Result<Box<dyn TransversalityModel>> {
    (transversality_registry().get(setting)?)(params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransversalityRow {
    pub setting: String,
    pub r: f64,
    pub p_hat: f64,
    pub kernel: f64,
    pub ratio: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Empirical `P(|image(x) − image(y)| ≤ r)` against the kernel bound, on the
/// same `n_samples` draws for every `r`. Sample `i` uses stream `i` of `seed`.
pub fn transversality_check(
    model: &dyn TransversalityModel,
    r_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<TransversalityRow>> {
    if n_samples == 0 {
        return Err(invalid("n_samples must be positive"));
    }
    if r_grid.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid("r grid must be positive"));
    }
    let mut dist = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| model.distance(&mut RngStream::new(seed, i)))
        .collect::<Result<Vec<f64>>>()?;
    dist.sort_by(f64::total_cmp);
    Ok(r_grid
        .iter()
        .map(|&r| {
            let hits = dist.partition_point(|&d| d <= r);
            let p_hat = hits as f64 / n_samples as f64;
            let kernel = model.kernel(r);
            TransversalityRow {
                setting: model.name().to_string(),
                r,
                p_hat,
                kernel,
                ratio: p_hat / kernel,
                n_samples,
                seed,
            }
        })
        .collect())
}

/// Largest ratio in a table.
pub fn max_ratio(rows: &[TransversalityRow]) -> f64 {
    rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
}

pub fn write_transversality_csv<W: Write>(rows: &[TransversalityRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["setting", "r", "p_hat", "kernel", "ratio", "n_samples", "seed"])?;
    for row in rows {
        out.write_record([
            row.setting.clone(),
            fmt_f64(row.r),
            fmt_f64(row.p_hat),
            fmt_f64(row.kernel),
            fmt_f64(row.ratio),
            row.n_samples.to_string(),
            row.seed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
