use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{invalid, Result};
use crate::rng::RngStream;
use crate::symbolic::{
    check_translation, coding_point, refine_to_depth, AffineIfs, StopRule, SymbolicSet, Translation, Word,
};

/// Uniform draw from the closed ball of radius `ρ` in `R^{dm}`.
pub fn sample_translation(rho: f64, d: usize, m: usize, rng: &mut RngStream) -> Result<Translation> {
    if !(rho > 0.0) || d == 0 || m == 0 {
        return Err(invalid("translation sampling needs rho > 0, d >= 1, m >= 1"));
    }
    let n = d * m;
    let dir = loop {
        let g = rng.normals(n);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            break g.into_iter().map(|v| v / norm).collect::<Vec<_>>();
        }
    };
    let radius = rho * rng.uniform().powf(1.0 / n as f64);
    Translation::new(d, dir.into_iter().map(|v| v * radius).collect())
}

/// Coding points of the refined leaves of a symbolic set.
#[derive(Debug, Clone)]
pub struct ProjectedCloud {
    pub cloud: PointCloud,
    pub leaves: Vec<Word>,
    /// Largest truncation bound over the leaves.
    pub error_bound: f64,
}

/// One point `π^a` of each leaf of `set` refined by `stop`.
pub fn project_selfaffine(
    set: &SymbolicSet,
    ifs: &AffineIfs,
    a: &Translation,
    stop: StopRule,
    leaf_cap: usize,
) -> Result<ProjectedCloud> {
    check_translation(ifs, a)?;
    let leaves = refine_to_depth(set, ifs, stop, leaf_cap)?.words().to_vec();
    let points = leaves
        .par_iter()
        .map(|w| coding_point(ifs, a, w))
        .collect::<Result<Vec<_>>>()?;
    let error_bound = points.iter().map(|p| p.error_bound).fold(0.0, f64::max);
    let coords: Vec<f64> = points.into_iter().flat_map(|p| p.point).collect();
    Ok(ProjectedCloud {
        cloud: PointCloud::new(ifs.dim(), coords)?,
        leaves,
        error_bound,
    })
}
