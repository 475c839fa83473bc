//! Equilibrium measures, capacities and capacity-dimension estimators.

mod assemble;
mod curve;
mod matrix;
mod solver;
mod tree;

pub use assemble::{
    backend_registry, capacity_profile, capacity_symbolic, profile_kernel_matrix,
    symbolic_kernel_matrix, CapacityConfig, CapacityResult, DenseBackend, SymbolicBackend,
    UltrametricBackend, DEFAULT_CLOUD_CAP,
};
pub use curve::{
    capacity_dimension, profile_capacity_curve, profile_dimension, symbolic_capacity_curve,
    symbolic_capacity_dimension, write_capacity_csv,
};
pub use matrix::{KernelMatrix, ProbabilityVector};
pub use solver::{
    equilibrium_measure, solver_registry, Certificate, EquilibriumResult, EquilibriumSolver,
    PairwiseFrankWolfe, SolverConfig, VanillaFrankWolfe, DEFAULT_SOLVER,
};
pub use tree::{solve_ultrametric, TreeMeasure, TreeSolution, DEFAULT_NODE_CAP};
