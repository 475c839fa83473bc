use std::sync::{Arc, OnceLock};

use serde::Serialize;

use super::matrix::{KernelMatrix, ProbabilityVector};
use crate::error::{invalid, Result};
use crate::registry::Registry;

/// Stopping rule shared by the iterative solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative tolerance on the potential spread over the support.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-7,
            max_iter: 200_000,
        }
    }
}

/// Optimality data of an equilibrium computation, in true kernel units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// `min_i (Kw)_i` over all support points.
    pub min_potential: f64,
    /// `max (Kw)_i` over points carrying mass.
    pub max_support_potential: f64,
    /// `wᵀKw − min_i (Kw)_i`, relative to the energy.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub measure: ProbabilityVector,
    pub energy: f64,
    pub ln_energy: f64,
    pub capacity: f64,
    pub ln_capacity: f64,
    pub certificate: Certificate,
}

impl EquilibriumResult {
    /// Recomputes energy and potentials of `w` exactly.
    pub fn evaluate(k: &KernelMatrix, w: Vec<f64>, iterations: usize, converged: bool) -> Result<Self> {
        let g = k.apply(&w);
        let e: f64 = g.iter().zip(&w).map(|(a, b)| a * b).sum();
        let min = g.iter().copied().fold(f64::INFINITY, f64::min);
        let max = g
            .iter()
            .zip(&w)
            .filter(|(_, x)| **x > 0.0)
            .map(|(a, _)| *a)
            .fold(f64::NEG_INFINITY, f64::max);
        let scale = k.ln_scale();
        let ln_energy = e.ln() + scale;
        let unscale = |v: f64| v * scale.exp();
        Ok(EquilibriumResult {
            measure: ProbabilityVector::new(w)?,
            energy: unscale(e),
            ln_energy,
            capacity: (-ln_energy).exp(),
            ln_capacity: -ln_energy,
            certificate: Certificate {
                min_potential: unscale(min),
                max_support_potential: unscale(max),
                gap: (e - min) / e,
                iterations,
                converged,
            },
        })
    }
}

/// Minimizes `wᵀKw` over the probability simplex.
pub trait EquilibriumSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, k: &KernelMatrix, cfg: &SolverConfig) -> Result<EquilibriumResult>;
}

fn check_cfg(cfg: &SolverConfig) -> Result<()> {
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(invalid("solver needs tol > 0 and max_iter > 0"));
    }
    Ok(())
}

fn argmin(g: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in g.iter().enumerate() {
        if *v < g[best] {
            best = i;
        }
    }
    best
}

fn argmax_support(g: &[f64], w: &[f64]) -> usize {
    let mut best = usize::MAX;
    for (i, (v, x)) in g.iter().zip(w).enumerate() {
        if *x > 0.0 && (best == usize::MAX || *v > g[best]) {
            best = i;
        }
    }
    best
}

/// Uniform start, replaced by the best vertex if that is already lower.
fn initial_point(k: &KernelMatrix) -> Vec<f64> {
    let n = k.n();
    let w = vec![1.0 / n as f64; n];
    let e = k.quadratic(&w);
    let best = (0..n)
        .min_by(|&a, &b| k.get(a, a).total_cmp(&k.get(b, b)))
        .unwrap();
    if k.get(best, best) < e {
        let mut v = vec![0.0; n];
        v[best] = 1.0;
        v
    } else {
        w
    }
}

fn converged(g: &[f64], w: &[f64], tol: f64) -> bool {
    let e: f64 = g.iter().zip(w).map(|(a, b)| a * b).sum();
    let s = argmin(g);
    let a = argmax_support(g, w);
    g[a] - g[s] <= tol * e
}

/// Pairwise Frank-Wolfe: each step moves mass from the support point of
/// highest potential to the global potential minimizer, with the exact
/// quadratic line search clipped to the donor's weight.
#[derive(Debug, Default, Clone, Copy)]
pub struct PairwiseFrankWolfe;

impl EquilibriumSolver for PairwiseFrankWolfe {
    fn name(&self) -> &'static str {
        "pairwise_fw"
    }

    fn solve(&self, k: &KernelMatrix, cfg: &SolverConfig) -> Result<EquilibriumResult> {
        check_cfg(cfg)?;
        let n = k.n();
        let mut w = initial_point(k);
        let mut g = k.apply(&w);
        let mut iter = 0;
        let mut done = false;
        while iter < cfg.max_iter {
            if iter % 2048 == 0 {
                g = k.apply(&w);
            }
            let s = argmin(&g);
            let a = argmax_support(&g, &w);
            let e: f64 = g.iter().zip(&w).map(|(x, y)| x * y).sum();
            if g[a] - g[s] <= cfg.tol * e {
                g = k.apply(&w);
                if converged(&g, &w, cfg.tol) {
                    done = true;
                    break;
                }
                continue;
            }
            iter += 1;
            let curv = k.get(s, s) + k.get(a, a) - 2.0 * k.get(s, a);
            let cap = w[a];
            let step = if curv > 0.0 {
                ((g[a] - g[s]) / curv).min(cap)
            } else {
                cap
            };
            if step >= cap {
                w[s] += cap;
                w[a] = 0.0;
            } else {
                w[s] += step;
                w[a] -= step;
            }
            let (rs, ra) = (k.row(s), k.row(a));
            for i in 0..n {
                g[i] += step * (rs[i] - ra[i]);
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        EquilibriumResult::evaluate(k, w, iter, done)
    }
}

/// Classical Frank-Wolfe towards the minimizing vertex with exact line search.
#[derive(Debug, Default, Clone, Copy)]
pub struct VanillaFrankWolfe;

impl EquilibriumSolver for VanillaFrankWolfe {
    fn name(&self) -> &'static str {
        "frank_wolfe"
    }

    fn solve(&self, k: &KernelMatrix, cfg: &SolverConfig) -> Result<EquilibriumResult> {
        check_cfg(cfg)?;
        let n = k.n();
        let mut w = initial_point(k);
        let mut g = k.apply(&w);
        let mut iter = 0;
        let mut done = false;
        while iter < cfg.max_iter {
            let s = argmin(&g);
            let e: f64 = g.iter().zip(&w).map(|(x, y)| x * y).sum();
            if e - g[s] <= cfg.tol * e {
                done = true;
                break;
            }
            iter += 1;
            // Direction e_s − w: slope 2(g_s − e), curvature K_ss − 2 g_s + e.
            let curv = k.get(s, s) - 2.0 * g[s] + e;
            let step = if curv > 0.0 {
                ((e - g[s]) / curv).min(1.0)
            } else {
                1.0
            };
            let rs = k.row(s);
            for i in 0..n {
                w[i] *= 1.0 - step;
                g[i] = (1.0 - step) * g[i] + step * rs[i];
            }
            w[s] += step;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        EquilibriumResult::evaluate(k, w, iter, done)
    }
}

/// Solvers keyed by name; `pairwise_fw` is the default.
pub fn solver_registry() -> &'static Registry<dyn EquilibriumSolver> {
    static REG: OnceLock<Registry<dyn EquilibriumSolver>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<dyn EquilibriumSolver> = Registry::new("equilibrium solver");
        reg.register("pairwise_fw", Arc::new(PairwiseFrankWolfe));
        reg.register("frank_wolfe", Arc::new(VanillaFrankWolfe));
        reg
    })
}

pub const DEFAULT_SOLVER: &str = "pairwise_fw";

/// Equilibrium measure of `k` with the default solver.
pub fn equilibrium_measure(k: &KernelMatrix, cfg: &SolverConfig) -> Result<EquilibriumResult> {
    PairwiseFrankWolfe.solve(k, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn both() -> Vec<Arc<dyn EquilibriumSolver>> {
        let reg = solver_registry();
        reg.names().iter().map(|n| reg.get(n).unwrap()).collect()
    }

    #[test]
    fn two_by_two() {
        let k = KernelMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        for solver in both() {
            let res = solver.solve(&k, &SolverConfig::default()).unwrap();
            assert!((res.energy - 0.75).abs() < 1e-7, "{}", solver.name());
            assert!((res.capacity - 4.0 / 3.0).abs() < 1e-6);
            assert!((res.measure.weights()[0] - 0.5).abs() < 1e-4);
            assert!(res.certificate.converged);
        }
    }

    #[test]
    fn trivial_cases() {
        let k = KernelMatrix::from_rows(&[vec![2.5]]).unwrap();
        let res = equilibrium_measure(&k, &SolverConfig::default()).unwrap();
        assert_eq!(res.measure.weights(), &[1.0]);
        assert!((res.capacity - 0.4).abs() < 1e-15);

        let k = KernelMatrix::new(3, vec![0.7; 9]).unwrap();
        let res = equilibrium_measure(&k, &SolverConfig::default()).unwrap();
        assert!((res.energy - 0.7).abs() < 1e-15);
        assert!(res.certificate.converged);
    }

    #[test]
    fn scaled_matrix_reports_true_units() {
        let k = KernelMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]])
            .unwrap()
            .with_ln_scale(3.0);
        let res = equilibrium_measure(&k, &SolverConfig { tol: 1e-12, max_iter: 1000 }).unwrap();
        assert!((res.ln_energy - (0.75f64.ln() + 3.0)).abs() < 1e-12);
        assert!((res.capacity * res.energy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certificate_brackets_energy() {
        let n = 30;
        let k = KernelMatrix::from_fn(n, |i, j| {
            let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
            (-(x - y).abs() * 4.0).exp()
        })
        .unwrap();
        let tol = 1e-9;
        for solver in both() {
            let cfg = SolverConfig { tol, max_iter: 1_000_000 };
            let res = solver.solve(&k, &cfg).unwrap();
            if !res.certificate.converged {
                assert_eq!(solver.name(), "frank_wolfe");
                continue;
            }
            let c = &res.certificate;
            assert!(c.min_potential >= (1.0 - 10.0 * tol) * res.energy);
            assert!(c.max_support_potential <= (1.0 + 10.0 * tol) * res.energy);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let k = KernelMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(equilibrium_measure(&k, &SolverConfig { tol: 0.0, max_iter: 10 }).is_err());
    }
}
