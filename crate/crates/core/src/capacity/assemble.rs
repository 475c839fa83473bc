use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::Serialize;

use super::matrix::KernelMatrix;
use super::solver::{solver_registry, EquilibriumResult, SolverConfig, DEFAULT_SOLVER};
use super::tree::{solve_ultrametric, DEFAULT_NODE_CAP};
use crate::cloud::PointCloud;
use crate::error::{invalid, Error, Result};
use crate::kernels::{ln_profile, ln_symbolic_phi_sv, AdmissibleFn, KernelFamily, KernelSpec, Scale};
use crate::registry::Registry;
use crate::symbolic::{
    common_prefix_len, refine_to_depth, singular_values_of, AffineIfs, StopRule, SymbolicSet, Word,
    DEFAULT_LEAF_CAP,
};

pub const DEFAULT_CLOUD_CAP: usize = 4096;

/// Solver selection and resource limits for capacity computations.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityConfig {
    /// Symbolic backend: `ultrametric` (exact) or `dense`.
    pub backend: String,
    /// Equilibrium solver for dense matrices.
    pub solver: String,
    pub solver_cfg: SolverConfig,
    pub leaf_cap: usize,
    pub node_cap: usize,
    pub cloud_cap: usize,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        CapacityConfig {
            backend: "ultrametric".into(),
            solver: DEFAULT_SOLVER.into(),
            solver_cfg: SolverConfig::default(),
            leaf_cap: DEFAULT_LEAF_CAP,
            node_cap: DEFAULT_NODE_CAP,
            cloud_cap: DEFAULT_CLOUD_CAP,
        }
    }
}

impl CapacityConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.solver_cfg.tol = tol;
        self
    }

    pub fn with_backend(mut self, backend: &str) -> Self {
        self.backend = backend.into();
        self
    }
}

/// A capacity value with whatever solver detail the backend provides.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    pub family: KernelFamily,
    pub r: f64,
    pub s: f64,
    pub ln_capacity: f64,
    pub capacity: f64,
    pub ln_energy: f64,
    pub energy: f64,
    /// Relative spread of the potential (0 for exact backends).
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub support_size: f64,
    #[serde(skip)]
    pub equilibrium: Option<EquilibriumResult>,
    #[serde(skip)]
    pub support: Option<Vec<Word>>,
}

impl CapacityResult {
    fn from_equilibrium(family: KernelFamily, r: f64, s: f64, eq: EquilibriumResult, support: Option<Vec<Word>>) -> Self {
        CapacityResult {
            family,
            r,
            s,
            ln_capacity: eq.ln_capacity,
            capacity: eq.capacity,
            ln_energy: eq.ln_energy,
            energy: eq.energy,
            gap: eq.certificate.gap,
            iterations: eq.certificate.iterations,
            converged: eq.certificate.converged,
            support_size: eq.measure.len() as f64,
            equilibrium: Some(eq),
            support,
        }
    }
}

/// One way of computing the capacity of a symbolic set.
pub trait SymbolicBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn capacity(
        &self,
        set: &SymbolicSet,
        ifs: &AffineIfs,
        scale: &Scale,
        s: f64,
        cfg: &CapacityConfig,
    ) -> Result<CapacityResult>;
}

/// Exact recursion over the prefix tree.
#[derive(Debug, Default, Clone, Copy)]
pub struct UltrametricBackend;

impl SymbolicBackend for UltrametricBackend {
    fn name(&self) -> &'static str {
        "ultrametric"
    }

    fn capacity(
        &self,
        set: &SymbolicSet,
        ifs: &AffineIfs,
        scale: &Scale,
        s: f64,
        cfg: &CapacityConfig,
    ) -> Result<CapacityResult> {
        let sol = solve_ultrametric(set, ifs, scale, s, cfg.node_cap, cfg.leaf_cap)?;
        let (equilibrium, support) = match sol.measure {
            Some(m) => {
                let n = m.weights.len();
                let min = m.potentials.iter().copied().fold(f64::INFINITY, f64::min);
                let max = m
                    .potentials
                    .iter()
                    .zip(&m.weights)
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(u, _)| *u)
                    .fold(f64::NEG_INFINITY, f64::max);
                let e = sol.scaled_energy;
                let unscale = |v: f64| (v.ln() + sol.ln_diagonal).exp();
                let eq = EquilibriumResult {
                    measure: crate::capacity::ProbabilityVector::normalized(m.weights)?,
                    energy: sol.ln_energy.exp(),
                    ln_energy: sol.ln_energy,
                    capacity: (-sol.ln_energy).exp(),
                    ln_capacity: -sol.ln_energy,
                    certificate: super::solver::Certificate {
                        min_potential: unscale(min),
                        max_support_potential: unscale(max),
                        gap: (e - min) / e,
                        iterations: n,
                        converged: true,
                    },
                };
                (Some(eq), Some(m.leaves))
            }
            None => (None, None),
        };
        Ok(CapacityResult {
            family: KernelFamily::SymbolicPhi,
            r: scale.r,
            s,
            ln_capacity: -sol.ln_energy,
            capacity: (-sol.ln_energy).exp(),
            ln_energy: sol.ln_energy,
            energy: sol.ln_energy.exp(),
            gap: equilibrium.as_ref().map_or(0.0, |e| e.certificate.gap.max(0.0)),
            iterations: sol.distinct_nodes,
            converged: true,
            support_size: sol.leaves,
            equilibrium,
            support,
        })
    }
}

/// Refines to atoms, assembles the dense kernel and runs an iterative solver.
#[derive(Debug, Default, Clone, Copy)]
pub struct DenseBackend;

impl SymbolicBackend for DenseBackend {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn capacity(
        &self,
        set: &SymbolicSet,
        ifs: &AffineIfs,
        scale: &Scale,
        s: f64,
        cfg: &CapacityConfig,
    ) -> Result<CapacityResult> {
        let (k, leaves) = symbolic_kernel_matrix(set, ifs, scale, s, cfg.leaf_cap)?;
        let solver = solver_registry().get(&cfg.solver)?;
        let eq = solver.solve(&k, &cfg.solver_cfg)?;
        Ok(CapacityResult::from_equilibrium(
            KernelFamily::SymbolicPhi,
            scale.r,
            s,
            eq,
            Some(leaves),
        ))
    }
}

/// Symbolic capacity backends keyed by name.
pub fn backend_registry() -> &'static Registry<dyn SymbolicBackend> {
    static REG: OnceLock<Registry<dyn SymbolicBackend>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<dyn SymbolicBackend> = Registry::new("capacity backend");
        reg.register("ultrametric", Arc::new(UltrametricBackend));
        reg.register("dense", Arc::new(DenseBackend));
        reg
    })
}

/// The symbolic Φ-kernel on the atoms of `set`, stored relative to its
/// diagonal `Φ(r)^{-s}`. Returns the matrix and the atom words.
pub fn symbolic_kernel_matrix(
    set: &SymbolicSet,
    ifs: &AffineIfs,
    scale: &Scale,
    s: f64,
    leaf_cap: usize,
) -> Result<(KernelMatrix, Vec<Word>)> {
    let leaves = refine_to_depth(set, ifs, StopRule::Threshold(scale.phi_r), leaf_cap)?;
    let words = leaves.words().to_vec();
    let ln_diag = scale.ln_diagonal(s);
    let mut by_prefix: HashMap<&[u8], f64> = HashMap::new();
    for w in &words {
        let sym = w.symbols();
        let mut t = DMatrix::identity(ifs.dim(), ifs.dim());
        for len in 0..sym.len() {
            if len > 0 {
                t *= ifs.matrix(sym[len - 1]);
            }
            by_prefix.entry(&sym[..len]).or_insert_with(|| {
                let ln_sv: Vec<f64> = singular_values_of(&t).iter().map(|a| a.ln()).collect();
                (ln_symbolic_phi_sv(&ln_sv, scale, s).0 - ln_diag).exp().min(1.0)
            });
        }
    }
    let k = KernelMatrix::from_fn(words.len(), |i, j| {
        if i == j {
            return 1.0;
        }
        let a = words[i].symbols();
        let l = common_prefix_len(a, words[j].symbols());
        by_prefix[&a[..l]]
    })?
    .with_ln_scale(ln_diag)
    .with_labels(words.iter().map(ToString::to_string).collect())?
    .with_spec(KernelSpec {
        family: KernelFamily::SymbolicPhi,
        r: scale.r,
        s,
        tau: None,
        phi: None,
    });
    Ok((k, words))
}

/// Capacity of `set` for the symbolic Φ-kernel at scale `r`.
pub fn capacity_symbolic(
    set: &SymbolicSet,
    ifs: &AffineIfs,
    r: f64,
    s: f64,
    phi: &AdmissibleFn,
    cfg: &CapacityConfig,
) -> Result<CapacityResult> {
    if !(s >= 0.0 && s <= ifs.dim() as f64) {
        return Err(invalid(format!("s = {s} outside [0, {}]", ifs.dim())));
    }
    let scale = Scale::new(r, phi)?;
    backend_registry().get(&cfg.backend)?.capacity(set, ifs, &scale, s, cfg)
}

/// The profile kernel on a point cloud, stored relative to `Φ(r)^{-s}`.
pub fn profile_kernel_matrix(
    cloud: &PointCloud,
    scale: &Scale,
    s: f64,
    tau: f64,
    cloud_cap: usize,
) -> Result<KernelMatrix> {
    if cloud.len() > cloud_cap {
        return Err(Error::ResourceCap {
            what: "profile capacity cloud size",
            count: cloud.len(),
            limit: cloud_cap,
        });
    }
    let ln_diag = scale.ln_diagonal(s);
    Ok(KernelMatrix::from_fn(cloud.len(), |i, j| {
        if i == j {
            1.0
        } else {
            (ln_profile(cloud.distance(i, j), scale, s, tau) - ln_diag).exp()
        }
    })?
    .with_ln_scale(ln_diag)
    .with_spec(KernelSpec {
        family: KernelFamily::Profile,
        r: scale.r,
        s,
        tau: Some(tau),
        phi: None,
    }))
}

/// Capacity of a point cloud for the profile kernel.
pub fn capacity_profile(
    cloud: &PointCloud,
    r: f64,
    s: f64,
    tau: f64,
    phi: &AdmissibleFn,
    cfg: &CapacityConfig,
) -> Result<CapacityResult> {
    if !(tau > 0.0) || !(s >= 0.0 && s <= tau) {
        return Err(invalid(format!("profile needs tau > 0 and 0 <= s <= tau, got s = {s}, tau = {tau}")));
    }
    let scale = Scale::new(r, phi)?;
    let k = profile_kernel_matrix(cloud, &scale, s, tau, cfg.cloud_cap)?;
    let eq = solver_registry().get(&cfg.solver)?.solve(&k, &cfg.solver_cfg)?;
    Ok(CapacityResult::from_equilibrium(KernelFamily::Profile, r, s, eq, None))
}
