use std::io::{BufRead, Write};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::cloud::PointCloud;
use crate::error::{invalid, Error, Result};
use crate::io::fmt_f64;
use crate::rng::RngStream;

pub const DEFAULT_FBM_CAP: usize = 4000;

const JITTERS: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// Covariance factor of index-α fractional Brownian motion on a point set,
/// reusable across draws. Points at the origin are pinned to `B(0) = 0`.
#[derive(Debug, Clone)]
pub struct FbmField {
    points: PointCloud,
    alpha: f64,
    /// Indices of the points away from the origin, in factor order.
    free: Vec<usize>,
    factor: Option<Cholesky<f64, Dyn>>,
    jitter: f64,
}

impl FbmField {
    pub fn new(points: &PointCloud, alpha: f64, cap: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if points.len() > cap {
            return Err(Error::ResourceCap {
                what: "fBm covariance size",
                count: points.len(),
                limit: cap,
            });
        }
        let free: Vec<usize> = (0..points.len())
            .filter(|&i| points.point(i).iter().any(|v| *v != 0.0))
            .collect();
        let n = free.len();
        let norm2a: Vec<f64> = free
            .iter()
            .map(|&i| points.point(i).iter().map(|v| v * v).sum::<f64>().powf(alpha))
            .collect();
        let cov = DMatrix::from_fn(n, n, |a, b| {
            let dist = points.distance(free[a], free[b]);
            0.5 * (norm2a[a] + norm2a[b] - dist.powf(2.0 * alpha))
        });
        let mean_diag = if n > 0 { cov.trace() / n as f64 } else { 0.0 };
        let mut chosen = None;
        if n > 0 {
            for &j in &JITTERS {
                let mut c = cov.clone();
                for i in 0..n {
                    c[(i, i)] += j * mean_diag;
                }
                if let Some(ch) = Cholesky::new(c) {
                    chosen = Some((ch, j));
                    break;
                }
            }
            if chosen.is_none() {
                return Err(Error::Factorization {
                    jitter: *JITTERS.last().unwrap(),
                });
            }
        }
        let (factor, jitter) = match chosen {
            Some((f, j)) => (Some(f), j),
            None => (None, 0.0),
        };
        Ok(FbmField {
            points: points.clone(),
            alpha,
            free,
            factor,
            jitter,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Relative diagonal jitter the factorization needed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    /// `m` independent coordinates of the field at every point.
    pub fn sample(&self, m: usize, rng: &mut RngStream) -> Result<FbmSample> {
        if m == 0 {
            return Err(invalid("fBm target dimension must be positive"));
        }
        let n = self.points.len();
        let mut images = vec![0.0; n * m];
        if let Some(f) = &self.factor {
            let l = f.l_dirty();
            for k in 0..m {
                let z = DVector::from_vec(rng.normals(self.free.len()));
                let b = l.lower_triangle() * z;
                for (a, &i) in self.free.iter().enumerate() {
                    images[i * m + k] = b[a];
                }
            }
        }
        Ok(FbmSample {
            points: self.points.clone(),
            images: PointCloud::new(m, images)?,
            alpha: self.alpha,
            seed: rng.seed(),
        })
    }
}

/// Base points with their images under one draw of the field.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmSample {
    pub points: PointCloud,
    pub images: PointCloud,
    pub alpha: f64,
    pub seed: u64,
}

impl FbmSample {
    /// CSV with a `# alpha=…, seed=…` comment line, a header and one row
    /// `x…, b…` per point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# alpha={}, seed={}", fmt_f64(self.alpha), self.seed)?;
        let mut out = csv::Writer::from_writer(w);
        let header: Vec<String> = (1..=self.points.dim())
            .map(|k| format!("x{k}"))
            .chain((1..=self.images.dim()).map(|k| format!("b{k}")))
            .collect();
        out.write_record(&header)?;
        for (x, b) in self.points.points().zip(self.images.points()) {
            out.write_record(x.iter().chain(b).map(|v| fmt_f64(*v)))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut r: R) -> Result<Self> {
        let mut first = String::new();
        r.read_line(&mut first)?;
        let meta = first
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| invalid("fBm CSV must start with a `# alpha=…, seed=…` line"))?;
        let mut alpha = None;
        let mut seed = None;
        for part in meta.split(',') {
            match part.trim().split_once('=') {
                Some(("alpha", v)) => alpha = v.trim().parse::<f64>().ok(),
                Some(("seed", v)) => seed = v.trim().parse::<u64>().ok(),
                _ => {}
            }
        }
        let (alpha, seed) = alpha.zip(seed).ok_or_else(|| invalid("fBm CSV metadata incomplete"))?;
        let mut reader = csv::Reader::from_reader(r);
        let header = reader.headers()?.clone();
        let d = header.iter().filter(|h| h.starts_with('x')).count();
        let m = header.len() - d;
        let (mut xs, mut bs) = (Vec::new(), Vec::new());
        for rec in reader.records() {
            let rec = rec?;
            for (k, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|e| invalid(format!("bad value {field}: {e}")))?;
                if k < d {
                    xs.push(v)
                } else {
                    bs.push(v)
                }
            }
        }
        Ok(FbmSample {
            points: PointCloud::new(d, xs)?,
            images: PointCloud::new(m, bs)?,
            alpha,
            seed,
        })
    }
}

/// One draw of `m` independent index-α fields on `points`.
pub fn sample_fbm(points: &PointCloud, alpha: f64, m: usize, rng: &mut RngStream) -> Result<FbmSample> {
    FbmField::new(points, alpha, DEFAULT_FBM_CAP)?.sample(m, rng)
}

/// `n` equispaced points `0, 1/(n-1), …, 1` on the unit interval.
pub fn unit_interval_grid(n: usize) -> Result<PointCloud> {
    if n < 2 {
        return Err(invalid("grid needs at least two points"));
    }
    PointCloud::new(1, (0..n).map(|i| i as f64 / (n - 1) as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_pinned() {
        let grid = unit_interval_grid(50).unwrap();
        let mut rng = RngStream::new(1, 0);
        let s = sample_fbm(&grid, 0.5, 2, &mut rng).unwrap();
        assert_eq!(s.images.point(0), &[0.0, 0.0]);
        assert!(s.images.point(10)[0] != 0.0);
    }

    #[test]
    fn increment_variance() {
        let pts = PointCloud::new(1, vec![0.2, 0.7, 0.45]).unwrap();
        let alpha = 0.3;
        let field = FbmField::new(&pts, alpha, 10).unwrap();
        let n = 10_000;
        let (mut v01, mut v02) = (0.0, 0.0);
        let (mut c, mut s0, mut s1) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let s = field.sample(2, &mut RngStream::new(3, i)).unwrap();
            let b = |p: usize, k: usize| s.images.point(p)[k];
            v01 += (b(0, 0) - b(1, 0)).powi(2) / n as f64;
            v02 += (b(0, 1) - b(2, 1)).powi(2) / n as f64;
            c += b(1, 0) * b(1, 1) / n as f64;
            s0 += b(1, 0).powi(2) / n as f64;
            s1 += b(1, 1).powi(2) / n as f64;
        }
        let e01 = 0.5f64.powf(2.0 * alpha);
        let e02 = 0.25f64.powf(2.0 * alpha);
        assert!((v01 / e01 - 1.0).abs() < 0.05, "{v01} vs {e01}");
        assert!((v02 / e02 - 1.0).abs() < 0.05, "{v02} vs {e02}");
        // Coordinates independent: correlation within 3σ of 0.
        let corr = c / (s0 * s1).sqrt();
        assert!(corr.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn csv_round_trip() {
        let pts = PointCloud::new(2, vec![0.0, 0.0, 0.5, 0.1, 0.3, 0.9]).unwrap();
        let s = sample_fbm(&pts, 0.7, 2, &mut RngStream::new(8, 0)).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = FbmSample::read_csv(buf.as_slice()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn levy_modulus_is_bounded() {
        let grid = unit_interval_grid(1000).unwrap();
        let alpha = 0.5;
        let field = FbmField::new(&grid, alpha, 2000).unwrap();
        for seed in 0..20 {
            let s = field.sample(1, &mut RngStream::new(seed, 0)).unwrap();
            let b = s.images.coords();
            let mut worst: f64 = 0.0;
            for i in 0..1000 {
                for j in i + 1..1000 {
                    let h = (j - i) as f64 / 999.0;
                    if h > 0.01 {
                        break;
                    }
                    let ratio = (b[i] - b[j]).abs() / (h.powf(alpha) * (1.0 / h).ln().sqrt());
                    worst = worst.max(ratio);
                }
            }
            assert!(worst < 3.0, "seed {seed}: {worst}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let grid = unit_interval_grid(10).unwrap();
        assert!(FbmField::new(&grid, 1.0, 100).is_err());
        assert!(matches!(FbmField::new(&grid, 0.5, 5), Err(Error::ResourceCap { .. })));
    }
}
