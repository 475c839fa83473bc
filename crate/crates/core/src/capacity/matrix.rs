use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernels::KernelSpec;

/// Dense symmetric kernel with strictly positive entries.
///
/// Entries are stored divided by `exp(ln_scale)`, so very large kernel values
/// (such as `Φ(r)^{-s}` at tiny `r`) stay representable. Energies reported by
/// the solvers are in true units unless a method says otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
    ln_scale: f64,
    labels: Vec<String>,
    spec: Option<KernelSpec>,
}

impl KernelMatrix {
    /// Row-major `n × n` data; symmetry must be exact.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("kernel matrix must be non-empty"));
        }
        if data.len() != n * n {
            return Err(invalid(format!(
                "kernel matrix data has {} entries, expected {}",
                data.len(),
                n * n
            )));
        }
        for i in 0..n {
            for j in i..n {
                let v = data[i * n + j];
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(format!("kernel entry ({i}, {j}) = {v} is not positive and finite")));
                }
                if data[j * n + i] != v {
                    return Err(invalid(format!("kernel matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(KernelMatrix {
            n,
            data,
            ln_scale: 0.0,
            labels: Vec::new(),
            spec: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("kernel matrix rows must form a square"));
        }
        Self::new(n, rows.concat())
    }

    /// Builds the matrix from `f(i, j)` evaluated on the upper triangle
    /// (in parallel) and mirrored.
    pub fn from_fn<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate().skip(i) {
                *slot = f(i, j);
            }
        });
        for i in 0..n {
            for j in 0..i {
                data[i * n + j] = data[j * n + i];
            }
        }
        Self::new(n, data)
    }

    /// Declares that true entries equal the stored ones times `exp(ln_scale)`.
    pub fn with_ln_scale(mut self, ln_scale: f64) -> Self {
        self.ln_scale = ln_scale;
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(invalid("one label per support point is required"));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_spec(mut self, spec: KernelSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ln_scale(&self) -> f64 {
        self.ln_scale
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn spec(&self) -> Option<&KernelSpec> {
        self.spec.as_ref()
    }

    /// Stored (scaled) entry.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Stored (scaled) potential `K w`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(w).map(|(k, x)| k * x).sum())
            .collect()
    }

    /// Stored (scaled) energy `wᵀ K w`.
    pub fn quadratic(&self, w: &[f64]) -> f64 {
        self.apply(w).iter().zip(w).map(|(g, x)| g * x).sum()
    }
}

/// Weights on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector {
    weights: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("probability vector must be non-empty"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("probability weights must be non-negative and finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("probability weights sum to {total}, not 1")));
        }
        Ok(ProbabilityVector { weights })
    }

    /// Normalizes non-negative weights with positive total.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("weights must have positive total"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(weights)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::normalized(vec![1.0; n])
    }

    pub fn point_mass(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(invalid("point mass index out of range"));
        }
        let mut w = vec![0.0; n];
        w[index] = 1.0;
        Self::new(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = crate::error::Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(KernelMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).is_ok());
        assert!(KernelMatrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(KernelMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(KernelMatrix::from_rows(&[vec![1.0, f64::NAN], vec![f64::NAN, 1.0]]).is_err());
        assert!(KernelMatrix::new(0, vec![]).is_err());
    }

    #[test]
    fn from_fn_mirrors() {
        let k = KernelMatrix::from_fn(5, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs())).unwrap();
        assert_eq!(k.get(1, 3), k.get(3, 1));
        let w = ProbabilityVector::uniform(5).unwrap();
        let e = k.quadratic(w.weights());
        assert!(e > 0.0 && e <= 1.0);
    }

    #[test]
    fn probability_vectors() {
        assert!(ProbabilityVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.5, -0.5]).is_err());
        let p = ProbabilityVector::point_mass(3, 1).unwrap();
        assert_eq!(p.support().collect::<Vec<_>>(), vec![1]);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "[0.0,1.0,0.0]");
    }
}
