use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::word::Word;
use crate::error::{invalid, Error, Result};

/// Determinants below this magnitude count as singular.
const SINGULAR_DET: f64 = 1e-300;

/// The linear parts `T_1..T_m` of an affine IFS, with cached operator norms.
///
/// Translations are not stored here; they are the random parameter of the
/// self-affine setting and are passed separately.
#[derive(Debug, Clone)]
pub struct AffineIfs {
    dim: usize,
    matrices: Vec<DMatrix<f64>>,
    norms: Vec<f64>,
    strict_half: bool,
}

impl AffineIfs {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn maps(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, symbol: u8) -> &DMatrix<f64> {
        &self.matrices[symbol as usize - 1]
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `α_+ = max_j ‖T_j‖`.
    pub fn alpha_plus(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }

    /// True iff every `‖T_j‖ < 1/2`.
    pub fn strict_half(&self) -> bool {
        self.strict_half
    }

    /// True iff `max_{i≠j} (‖T_i‖ + ‖T_j‖) < 1`. Reported only; the
    /// transversality checks require [`strict_half`](Self::strict_half).
    pub fn pairwise_norm_condition(&self) -> bool {
        let mut sorted = self.norms.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted.len() < 2 || sorted[0] + sorted[1] < 1.0
    }

    /// `T_I = T_{i1} ··· T_{in}`; the identity for the empty word.
    pub fn product(&self, word: &Word) -> DMatrix<f64> {
        let mut acc = DMatrix::identity(self.dim, self.dim);
        for &s in word.symbols() {
            acc = acc * self.matrix(s);
        }
        acc
    }

    pub fn check_word(&self, word: &Word) -> Result<()> {
        if word.max_symbol() as usize > self.maps() {
            return Err(invalid(format!(
                "word {word} uses a symbol above m = {}",
                self.maps()
            )));
        }
        Ok(())
    }

    pub fn to_file(&self) -> IfsFile {
        IfsFile {
            d: self.dim,
            matrices: self
                .matrices
                .iter()
                .map(|m| {
                    (0..self.dim)
                        .flat_map(|i| (0..self.dim).map(move |j| (i, j)))
                        .map(|(i, j)| m[(i, j)])
                        .collect()
                })
                .collect(),
        }
    }
}

/// Validate `T_1..T_m` and cache their norms.
pub fn validate_ifs(matrices: Vec<DMatrix<f64>>) -> Result<AffineIfs> {
    let dim = matrices
        .first()
        .map(|m| m.nrows())
        .ok_or_else(|| invalid("an IFS needs at least one matrix"))?;
    if dim == 0 {
        return Err(invalid("dimension d must be at least 1"));
    }
    let mut norms = Vec::with_capacity(matrices.len());
    for (index, m) in matrices.iter().enumerate() {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(invalid(format!(
                "matrix {index} is {}x{}, expected {dim}x{dim}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("matrix {index} has non-finite entries")));
        }
        let det = m.determinant();
        if det.abs() <= SINGULAR_DET {
            return Err(Error::NonInvertible { index, det });
        }
        let norm = singular_values_of(m)[0];
        if norm >= 1.0 {
            return Err(Error::NotContracting { index, norm });
        }
        norms.push(norm);
    }
    let strict_half = norms.iter().all(|&n| n < 0.5);
    Ok(AffineIfs {
        dim,
        matrices,
        norms,
        strict_half,
    })
}

/// Singular values of a square matrix, non-increasing.
pub fn singular_values_of(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)].abs()];
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Singular values `α_1 ≥ … ≥ α_d` of `T_word`.
pub fn singular_values(ifs: &AffineIfs, word: &Word) -> Vec<f64> {
    singular_values_of(&ifs.product(word))
}

/// On-disk form: `{d, matrices: [[row-major entries], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsFile {
    pub d: usize,
    pub matrices: Vec<Vec<f64>>,
}

impl IfsFile {
    pub fn into_ifs(self) -> Result<AffineIfs> {
        let d = self.d;
        let mats = self
            .matrices
            .into_iter()
            .enumerate()
            .map(|(i, flat)| {
                if flat.len() != d * d {
                    return Err(invalid(format!(
                        "matrix {i} has {} entries, expected {}",
                        flat.len(),
                        d * d
                    )));
                }
                Ok(DMatrix::from_row_slice(d, d, &flat))
            })
            .collect::<Result<Vec<_>>>()?;
        if d == 0 {
            return Err(invalid("dimension d must be at least 1"));
        }
        validate_ifs(mats)
    }
}

/// `m` copies of the scalar map `x ↦ ratio·x` in dimension `d`.
pub fn homogeneous_ifs(d: usize, m: usize, ratio: f64) -> Result<AffineIfs> {
    validate_ifs(vec![DMatrix::identity(d, d) * ratio; m])
}
