//! Random parameter families: translations of self-affine maps, orthogonal
//! projections and fractional Brownian fields, with Monte Carlo checks of
//! their transversality bounds.

mod fbm;
mod grassmann;
mod translation;
mod transversality;

pub use fbm::{sample_fbm, unit_interval_grid, FbmField, FbmSample, DEFAULT_FBM_CAP};
pub use grassmann::{sample_grassmannian, ProjectionFrame};
pub use translation::{project_selfaffine, sample_translation, ProjectedCloud};
pub use transversality::{
    build_model, max_ratio, transversality_check, transversality_registry, write_transversality_csv,
    FbmModel, GrassmannModel, SelfAffineModel, TransversalityModel, TransversalityRow,
};
