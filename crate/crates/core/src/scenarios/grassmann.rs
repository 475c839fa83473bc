use nalgebra::DMatrix;

use crate::cloud::PointCloud;
use crate::error::{invalid, Result};
use crate::rng::RngStream;

/// An `m`-dimensional subspace `V ⊂ R^d` given by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionFrame {
    basis: DMatrix<f64>,
}

impl ProjectionFrame {
    /// Accepts a `d × m` matrix whose columns are orthonormal within 1e-12.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let gram = basis.transpose() * &basis;
        let m = basis.ncols();
        if m == 0 || (gram - DMatrix::identity(m, m)).amax() > 1e-12 {
            return Err(invalid("projection basis columns must be orthonormal"));
        }
        Ok(ProjectionFrame { basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `P = V Vᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Coordinates `Vᵀ x` of the projection, isometric to `P x`.
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|j| self.basis.column(j).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// The projected cloud in `V`-coordinates.
    pub fn project_cloud(&self, cloud: &PointCloud) -> Result<PointCloud> {
        if cloud.dim() != self.ambient_dim() {
            return Err(invalid("cloud and frame dimensions differ"));
        }
        let rows: Vec<f64> = (0..self.dim())
            .flat_map(|j| self.basis.column(j).iter().copied().collect::<Vec<_>>())
            .collect();
        cloud.map_linear(&rows, self.dim())
    }
}

/// Orthonormalized standard Gaussian `d × m` matrix; its column span is
/// distributed by the rotation-invariant measure on the Grassmannian.
pub fn sample_grassmannian(d: usize, m: usize, rng: &mut RngStream) -> Result<ProjectionFrame> {
    if !(m >= 1 && m < d) {
        return Err(invalid(format!("need 1 <= m < d, got m = {m}, d = {d}")));
    }
    loop {
        let g = DMatrix::from_column_slice(d, m, &rng.normals(d * m));
        let qr = g.qr();
        let r = qr.r();
        if (0..m).all(|i| r[(i, i)].abs() > 1e-10) {
            return ProjectionFrame::new(qr.q());
        }
    }
}
