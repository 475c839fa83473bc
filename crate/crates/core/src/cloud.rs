//! Finite point clouds in `R^d`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{invalid, Result};
use crate::io::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl PointCloud {
    /// Flat row-major coordinates, `dim` per point.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("point cloud dimension must be positive"));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(invalid(format!(
                "point cloud needs a positive multiple of {dim} coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        Ok(PointCloud {
            dim,
            coords,
            weights: None,
        })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(invalid("all points must share one dimension"));
        }
        Self::new(dim, points.concat())
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("one non-negative weight per point is required"));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    /// Componentwise minimum and maximum.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.point(0).to_vec();
        let mut hi = lo.clone();
        for p in self.points() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Applies a linear map given as a row-major `out_dim × dim` matrix.
    pub fn map_linear(&self, matrix: &[f64], out_dim: usize) -> Result<PointCloud> {
        if matrix.len() != out_dim * self.dim {
            return Err(invalid("linear map has the wrong shape"));
        }
        let mut coords = Vec::with_capacity(self.len() * out_dim);
        for p in self.points() {
            for row in matrix.chunks(self.dim) {
                coords.push(row.iter().zip(p).map(|(a, b)| a * b).sum());
            }
        }
        PointCloud::new(out_dim, coords)
    }

    /// Headerless CSV, one point per row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for p in self.points() {
            out.write_record(p.iter().map(|v| fmt_f64(*v)))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(r);
        let mut points = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let row: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse).collect();
            points.push(row.map_err(|e| invalid(format!("bad coordinate: {e}")))?);
        }
        Self::from_points(&points)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
