//! Intermediate and Φ-intermediate dimensions of fractal sets, estimated
//! along two independent routes: constrained-diameter cover sums and
//! potential-theoretic capacities.

pub mod capacity;
pub mod cloud;
pub mod compare;
pub mod covering;
pub mod error;
pub mod estimate;
pub mod io;
pub mod kernels;
pub mod registry;
pub mod rng;
pub mod scenarios;
pub mod symbolic;

pub use error::{Error, Result};
