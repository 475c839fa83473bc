//! Constrained-diameter cover sums on point clouds and the cover-route
//! dimension estimator.

mod hierarchy;
mod sum;

pub use crate::cloud::PointCloud;
pub use hierarchy::{
    box_count, cover_registry, scale_ladder, CellHierarchy, Cover, CoverStrategy, Greedy,
    NestedOptimal, DEFAULT_COVER_STRATEGY,
};
pub use sum::{
    cover_sum, cover_sum_lower_certificate, cover_table, phi_dimension, validity_warnings,
    write_cover_csv, CoverConfig, CoverCurve, CoverRow, CoverSumResult,
};
