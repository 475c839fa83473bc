use serde::{Deserialize, Serialize};

use super::ifs::AffineIfs;
use super::word::Word;
use crate::error::{invalid, Result};

/// Translation parameter `a = (a_1, ..., a_m) ∈ R^{dm}`, stored flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Translation {
    dim: usize,
    values: Vec<f64>,
}

impl Translation {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(invalid(format!(
                "translation of length {} is not a multiple of d = {dim}",
                values.len()
            )));
        }
        Ok(Translation { dim, values })
    }

    pub fn zeros(dim: usize, maps: usize) -> Self {
        Translation {
            dim,
            values: vec![0.0; dim * maps],
        }
    }

    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).unwrap_or(0);
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(invalid("translation vectors differ in length"));
        }
        Translation::new(dim, vectors.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn maps(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn component(&self, symbol: u8) -> &[f64] {
        let j = symbol as usize - 1;
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// `max_j |a_j|`.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks(self.dim)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// A truncated coding point with its distance bound to every `π^a(x)` with
/// `x` in the cylinder of the word.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingPoint {
    pub point: Vec<f64>,
    pub error_bound: f64,
}

/// Smallest `n` with `α_+^n < tol`.
pub fn truncation_depth(ifs: &AffineIfs, tol: f64) -> usize {
    let a = ifs.alpha_plus();
    if a <= 0.0 {
        return 1;
    }
    ((tol.ln() / a.ln()).floor() as usize + 1).max(1)
}

/// Depth used when no explicit truncation is requested: `α_+^n < 1e-12`.
pub fn default_truncation_depth(ifs: &AffineIfs) -> usize {
    truncation_depth(ifs, 1e-12)
}

/// `f^a_{i1} ∘ ··· ∘ f^a_{in}(0)`.
pub fn coding_point(ifs: &AffineIfs, a: &Translation, word: &Word) -> Result<CodingPoint> {
    check_translation(ifs, a)?;
    ifs.check_word(word)?;
    let d = ifs.dim();
    let mut x = nalgebra::DVector::<f64>::zeros(d);
    for &s in word.symbols().iter().rev() {
        x = ifs.matrix(s) * x + nalgebra::DVector::from_row_slice(a.component(s));
    }
    let alpha = ifs.alpha_plus();
    let error_bound = alpha.powi(word.len() as i32) * a.sup_norm() / (1.0 - alpha);
    Ok(CodingPoint {
        point: x.iter().copied().collect(),
        error_bound,
    })
}

pub(crate) fn check_translation(ifs: &AffineIfs, a: &Translation) -> Result<()> {
    if a.dim() != ifs.dim() || a.maps() != ifs.maps() {
        return Err(invalid(format!(
            "translation has shape {}x{}, IFS needs {}x{}",
            a.maps(),
            a.dim(),
            ifs.maps(),
            ifs.dim()
        )));
    }
    Ok(())
}
