//! Exact equilibrium measures for kernels that depend only on the common
//! prefix `x ∧ y`.
//!
//! Below a node `I` the kernel between different child branches is the
//! constant `k(I)`, so with child masses `p_j` the energy is
//! `k(I) + Σ p_j² (E_j − k(I))`, minimized by `p_j ∝ 1/(E_j − k(I))`.
//! Full cylinders below a set word are keyed by the bit pattern of `T_I`,
//! which collapses the exponential tree to a handful of distinct nodes for
//! homogeneous systems.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{ln_symbolic_phi_sv, Scale};
use crate::symbolic::{singular_values_of, AffineIfs, SymbolicSet, Word};

pub const DEFAULT_NODE_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy)]
struct Node {
    /// Minimal energy of the subtree, divided by `Φ(r)^{-s}`.
    energy: f64,
    leaves: f64,
}

/// Leaf words with equilibrium weights and their (scaled) potentials.
#[derive(Debug, Clone)]
pub struct TreeMeasure {
    pub leaves: Vec<Word>,
    pub weights: Vec<f64>,
    pub potentials: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TreeSolution {
    /// Minimal energy in true units, as a logarithm.
    pub ln_energy: f64,
    /// Minimal energy divided by the diagonal value `Φ(r)^{-s}`.
    pub scaled_energy: f64,
    pub ln_diagonal: f64,
    /// Number of atoms (leaves at the threshold depth), possibly huge.
    pub leaves: f64,
    pub distinct_nodes: usize,
    pub measure: Option<TreeMeasure>,
}

struct Solver<'a> {
    ifs: &'a AffineIfs,
    scale: Scale,
    s: f64,
    ln_diag: f64,
    memo: HashMap<Vec<u64>, Node>,
    node_cap: usize,
}

fn key(t: &DMatrix<f64>) -> Vec<u64> {
    t.iter().map(|v| v.to_bits()).collect()
}

impl<'a> Solver<'a> {
    fn kernel_at(&self, sv: &[f64]) -> f64 {
        let ln_sv: Vec<f64> = sv.iter().map(|a| a.ln()).collect();
        (ln_symbolic_phi_sv(&ln_sv, &self.scale, self.s).0 - self.ln_diag)
            .exp()
            .min(1.0)
    }

    fn is_atom(&self, sv: &[f64]) -> bool {
        sv[0] <= self.scale.phi_r
    }

    fn full(&mut self, t: &DMatrix<f64>) -> Result<Node> {
        let sv = singular_values_of(t);
        if self.is_atom(&sv) {
            return Ok(Node {
                energy: 1.0,
                leaves: 1.0,
            });
        }
        let k = key(t);
        if let Some(node) = self.memo.get(&k) {
            return Ok(*node);
        }
        if self.memo.len() >= self.node_cap {
            return Err(Error::ResourceCap {
                what: "ultrametric tree nodes",
                count: self.memo.len() + 1,
                limit: self.node_cap,
            });
        }
        let kernel = self.kernel_at(&sv);
        let mut children = Vec::with_capacity(self.ifs.maps());
        for m in self.ifs.matrices() {
            children.push(self.full(&(t * m))?);
        }
        let node = combine(kernel, &children);
        self.memo.insert(k, node);
        Ok(node)
    }

    fn partial(&mut self, words: &[Word], depth: usize, t: &DMatrix<f64>) -> Result<Node> {
        if words.len() == 1 && words[0].len() == depth {
            return self.full(t);
        }
        let sv = singular_values_of(t);
        let kernel = self.kernel_at(&sv);
        let mut children = Vec::new();
        for (symbol, group) in split(words, depth) {
            children.push(self.partial(group, depth + 1, &(t * self.ifs.matrix(symbol)))?);
        }
        Ok(combine(kernel, &children))
    }

    fn child_nodes_full(&mut self, t: &DMatrix<f64>) -> Result<Vec<(u8, DMatrix<f64>, Node)>> {
        let mut out = Vec::new();
        for (i, m) in self.ifs.matrices().iter().enumerate() {
            let c = t * m;
            let node = self.full(&c)?;
            out.push((i as u8 + 1, c, node));
        }
        Ok(out)
    }

    /// Walks the tree distributing `mass`, pushing leaves in lex order.
    #[allow(clippy::too_many_arguments)]
    fn materialize(
        &mut self,
        words: Option<&[Word]>,
        path: &mut Vec<u8>,
        t: &DMatrix<f64>,
        mass: f64,
        ancestor_potential: f64,
        out: &mut TreeMeasure,
    ) -> Result<()> {
        let is_set_word = match words {
            Some(ws) => ws.len() == 1 && ws[0].len() == path.len(),
            None => true,
        };
        let sv = singular_values_of(t);
        if is_set_word && self.is_atom(&sv) {
            out.leaves.push(Word::new(path.clone())?);
            out.weights.push(mass);
            out.potentials.push(ancestor_potential + mass);
            return Ok(());
        }
        let kernel = self.kernel_at(&sv);
        let children: Vec<(u8, DMatrix<f64>, Node, Option<&[Word]>)> = if is_set_word {
            self.child_nodes_full(t)?
                .into_iter()
                .map(|(s, c, n)| (s, c, n, None))
                .collect()
        } else {
            let ws = words.unwrap();
            let mut v = Vec::new();
            for (symbol, group) in split(ws, path.len()) {
                let c = t * self.ifs.matrix(symbol);
                let node = self.partial(group, path.len() + 1, &c)?;
                v.push((symbol, c, node, Some(group)));
            }
            v
        };
        let nodes: Vec<Node> = children.iter().map(|c| c.2).collect();
        let probs = child_probabilities(kernel, &nodes);
        for ((symbol, c, _, group), p) in children.into_iter().zip(probs) {
            let child_mass = mass * p;
            path.push(symbol);
            let pot = ancestor_potential + kernel * (mass - child_mass);
            self.materialize(group, path, &c, child_mass, pot, out)?;
            path.pop();
        }
        Ok(())
    }
}

fn split(words: &[Word], depth: usize) -> Vec<(u8, &[Word])> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < words.len() {
        let symbol = words[start].symbols()[depth];
        let mut end = start + 1;
        while end < words.len() && words[end].symbols()[depth] == symbol {
            end += 1;
        }
        out.push((symbol, &words[start..end]));
        start = end;
    }
    out
}

fn child_probabilities(kernel: f64, children: &[Node]) -> Vec<f64> {
    let gaps: Vec<f64> = children.iter().map(|c| (c.energy - kernel).max(0.0)).collect();
    let zeros = gaps.iter().filter(|g| **g == 0.0).count();
    if zeros > 0 {
        gaps.iter()
            .map(|g| if *g == 0.0 { 1.0 / zeros as f64 } else { 0.0 })
            .collect()
    } else {
        let total: f64 = gaps.iter().map(|g| 1.0 / g).sum();
        gaps.iter().map(|g| 1.0 / g / total).collect()
    }
}

fn combine(kernel: f64, children: &[Node]) -> Node {
    let leaves = children.iter().map(|c| c.leaves).sum();
    let gaps: Vec<f64> = children.iter().map(|c| (c.energy - kernel).max(0.0)).collect();
    let energy = if gaps.iter().any(|g| *g == 0.0) {
        kernel
    } else {
        kernel + 1.0 / gaps.iter().map(|g| 1.0 / g).sum::<f64>()
    };
    Node { energy, leaves }
}

/// Minimal energy of the symbolic Φ-kernel on `set`, refined to atoms with
/// `α_1(T_I) ≤ Φ(r)`. The measure is materialized when the atom count is at
/// most `materialize_cap`.
pub fn solve_ultrametric(
    set: &SymbolicSet,
    ifs: &AffineIfs,
    scale: &Scale,
    s: f64,
    node_cap: usize,
    materialize_cap: usize,
) -> Result<TreeSolution> {
    set.check_alphabet(ifs)?;
    let ln_diag = scale.ln_diagonal(s);
    let mut solver = Solver {
        ifs,
        scale: *scale,
        s,
        ln_diag,
        memo: HashMap::new(),
        node_cap,
    };
    let id = DMatrix::identity(ifs.dim(), ifs.dim());
    let root = solver.partial(set.words(), 0, &id)?;
    let measure = if root.leaves <= materialize_cap as f64 {
        let mut out = TreeMeasure {
            leaves: Vec::new(),
            weights: Vec::new(),
            potentials: Vec::new(),
        };
        let mut path = Vec::new();
        solver.materialize(Some(set.words()), &mut path, &id, 1.0, 0.0, &mut out)?;
        Some(out)
    } else {
        None
    };
    Ok(TreeSolution {
        ln_energy: root.energy.ln() + ln_diag,
        scaled_energy: root.energy,
        ln_diagonal: ln_diag,
        leaves: root.leaves,
        distinct_nodes: solver.memo.len(),
        measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::AdmissibleFn;
    use crate::symbolic::homogeneous_ifs;

    #[test]
    fn singleton_is_one_atom() {
        let ifs = homogeneous_ifs(1, 2, 1.0 / 3.0).unwrap();
        let phi = AdmissibleFn::theta(0.5).unwrap();
        let scale = Scale::new(0.1, &phi).unwrap();
        let set = SymbolicSet::singleton("1111111".parse().unwrap());
        let sol = solve_ultrametric(&set, &ifs, &scale, 0.7, 1000, 1000).unwrap();
        assert_eq!(sol.leaves, 1.0);
        assert!((sol.ln_energy - 0.7 * -scale.ln_phi).abs() < 1e-12);
    }

    #[test]
    fn deep_homogeneous_tree_stays_small() {
        let ifs = homogeneous_ifs(1, 2, 1.0 / 3.0).unwrap();
        let phi = AdmissibleFn::theta(0.25).unwrap();
        let scale = Scale::new(2f64.powi(-14), &phi).unwrap();
        let sol = solve_ultrametric(&SymbolicSet::full_shift(), &ifs, &scale, 0.6, 1000, 10).unwrap();
        assert!(sol.leaves > 1e10);
        assert!(sol.distinct_nodes < 100);
        assert!(sol.measure.is_none());
    }

    #[test]
    fn potentials_are_constant_on_support() {
        let ifs = homogeneous_ifs(1, 3, 0.3).unwrap();
        let phi = AdmissibleFn::theta(0.5).unwrap();
        let scale = Scale::new(0.2, &phi).unwrap();
        let set = SymbolicSet::new(vec!["1".parse().unwrap(), "21".parse().unwrap(), "3".parse().unwrap()]).unwrap();
        let sol = solve_ultrametric(&set, &ifs, &scale, 0.5, 1000, 10_000).unwrap();
        let m = sol.measure.unwrap();
        let total: f64 = m.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (w, u) in m.weights.iter().zip(&m.potentials) {
            if *w > 0.0 {
                assert!((u - sol.scaled_energy).abs() < 1e-12, "{u} vs {}", sol.scaled_energy);
            }
        }
    }

    #[test]
    fn node_cap_is_enforced() {
        let ifs = crate::symbolic::validate_ifs(vec![
            nalgebra::dmatrix![0.4, 0.1; 0.0, 0.3],
            nalgebra::dmatrix![0.3, 0.0; 0.2, 0.4],
        ])
        .unwrap();
        let phi = AdmissibleFn::theta(0.5).unwrap();
        let scale = Scale::new(2f64.powi(-8), &phi).unwrap();
        let err = solve_ultrametric(&SymbolicSet::full_shift(), &ifs, &scale, 1.0, 50, 10).unwrap_err();
        assert!(matches!(err, Error::ResourceCap { .. }));
    }
}
