//! Symbolic space, words, cylinder sets and affine IFS machinery.

mod coding;
mod ifs;
mod set;
mod word;

pub use coding::{
    coding_point, default_truncation_depth, truncation_depth, CodingPoint, Translation,
};
pub(crate) use coding::check_translation;
pub use ifs::{homogeneous_ifs, singular_values, singular_values_of, validate_ifs, AffineIfs, IfsFile};
pub use set::{refine_to_depth, StopRule, SymbolicSet, DEFAULT_LEAF_CAP};
pub use word::{common_prefix, common_prefix_len, CommonPrefix, Word};
