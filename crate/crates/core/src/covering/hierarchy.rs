//! Nested grid cells over a scale ladder `δ_j = Φ(r)·f^j ≤ r`.
//!
//! Cells at level `j` are axis-aligned cubes of side `δ_j/√d` (diameter
//! exactly `δ_j`), anchored at the bounding-box minimum. With an integer
//! ladder factor `f` every level-`j` cell is a union of level-`(j-1)` cells,
//! which is what the optimal cover recursion needs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::{Arc, OnceLock};

use crate::cloud::PointCloud;
use crate::error::{invalid, Result};
use crate::kernels::Scale;
use crate::registry::Registry;

#[derive(Debug, Clone)]
struct Level {
    delta: f64,
    /// Integer cell coordinates, one tuple per occupied cell.
    keys: Vec<Vec<u128>>,
    /// Range of this cell's children in the previous level (empty at level 0).
    children: Vec<(usize, usize)>,
    /// Number of points in each cell.
    mass: Vec<usize>,
}

/// Occupied cells of a point cloud on every rung of the ladder.
#[derive(Debug, Clone)]
pub struct CellHierarchy {
    dim: usize,
    factor: u32,
    levels: Vec<Level>,
    points: usize,
    /// Plain box count at the finest rung (level 0 may use intersected cells).
    finest_box_count: usize,
}

/// A cover described by how many sets it uses at each ladder rung.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub ladder: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Cover {
    /// `Σ_j N_j δ_j^s`.
    pub fn price(&self, s: f64) -> f64 {
        self.ladder
            .iter()
            .zip(&self.counts)
            .map(|(d, n)| *n as f64 * d.powf(s))
            .sum()
    }

    pub fn size(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Ascending scales: `r f^{-j}` down to `Φ(r)`, with `Φ(r)` itself appended
/// as the finest rung when the geometric ladder does not land on it.
pub fn scale_ladder(scale: &Scale, factor: u32) -> Result<Vec<f64>> {
    if factor < 2 {
        return Err(invalid("ladder factor must be an integer >= 2"));
    }
    if scale.phi_r > scale.r {
        return Err(invalid("empty scale ladder: Phi(r) > r"));
    }
    let floor = scale.phi_r * (1.0 + 1e-12);
    let mut ladder = vec![scale.r];
    loop {
        let next = ladder.last().unwrap() / factor as f64;
        if next < floor {
            break;
        }
        ladder.push(next);
    }
    if *ladder.last().unwrap() > floor {
        ladder.push(scale.phi_r);
    }
    ladder.reverse();
    Ok(ladder)
}

fn grid_key(p: &[f64], lo: &[f64], side: f64) -> Vec<u128> {
    p.iter()
        .zip(lo)
        .map(|(x, m)| ((x - m) / side).floor().max(0.0) as u128)
        .collect()
}

fn group_sorted(keys: &[Vec<u128>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        let mut j = i + 1;
        while j < keys.len() && keys[j] == keys[i] {
            j += 1;
        }
        out.push((i, j));
        i = j;
    }
    out
}

impl CellHierarchy {
    pub fn build(cloud: &PointCloud, scale: &Scale, factor: u32) -> Result<Self> {
        let ladder = scale_ladder(scale, factor)?;
        let dim = cloud.dim();
        let (lo, _) = cloud.bounding_box();
        let side = |delta: f64| delta / (dim as f64).sqrt();
        let nested = |a: f64, b: f64| (b / a - factor as f64).abs() <= 1e-9 * factor as f64;
        // The finest rung is intersected with the next rung's cells when it
        // does not nest geometrically.
        let loose = ladder.len() > 1 && !nested(ladder[0], ladder[1]);
        let mut finest: Vec<Vec<u128>> = cloud
            .points()
            .map(|p| {
                let mut k = Vec::with_capacity(2 * dim);
                if loose {
                    k.extend(grid_key(p, &lo, side(ladder[1])));
                }
                k.extend(grid_key(p, &lo, side(ladder[0])));
                k
            })
            .collect();
        finest.sort_unstable();
        let mut level0 = Level {
            delta: ladder[0],
            keys: Vec::new(),
            children: Vec::new(),
            mass: Vec::new(),
        };
        for (i, j) in group_sorted(&finest) {
            level0.keys.push(finest[i].clone());
            level0.mass.push(j - i);
        }
        let finest_box_count = if loose {
            let mut plain: Vec<&[u128]> = level0.keys.iter().map(|k| &k[dim..]).collect();
            plain.sort_unstable();
            plain.dedup();
            plain.len()
        } else {
            level0.keys.len()
        };
        let mut levels = vec![level0];
        for (idx, &delta) in ladder.iter().enumerate().skip(1) {
            let prev = levels.last_mut().unwrap();
            let parents: Vec<Vec<u128>> = prev
                .keys
                .iter()
                .map(|k| {
                    if idx == 1 && loose {
                        k[..dim].to_vec()
                    } else {
                        k.iter().map(|c| c / factor as u128).collect()
                    }
                })
                .collect();
            let mut order: Vec<usize> = (0..parents.len()).collect();
            order.sort_by(|&a, &b| parents[a].cmp(&parents[b]));
            prev.keys = order.iter().map(|&c| prev.keys[c].clone()).collect();
            prev.mass = order.iter().map(|&c| prev.mass[c]).collect();
            if !prev.children.is_empty() {
                prev.children = order.iter().map(|&c| prev.children[c]).collect();
            }
            let sorted_parents: Vec<Vec<u128>> = order.iter().map(|&c| parents[c].clone()).collect();
            let mut next = Level {
                delta,
                keys: Vec::new(),
                children: Vec::new(),
                mass: Vec::new(),
            };
            for (i, j) in group_sorted(&sorted_parents) {
                next.keys.push(sorted_parents[i].clone());
                next.children.push((i, j));
                next.mass.push(prev.mass[i..j].iter().sum());
            }
            levels.push(next);
        }
        Ok(CellHierarchy {
            dim,
            factor,
            levels,
            points: cloud.len(),
            finest_box_count,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factor(&self) -> u32 {
        self.factor
    }

    pub fn ladder(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.delta).collect()
    }

    /// Occupied cell count `N_{δ_j}` per rung.
    pub fn box_counts(&self) -> Vec<usize> {
        let mut counts: Vec<usize> = self.levels.iter().map(|l| l.mass.len()).collect();
        counts[0] = self.finest_box_count;
        counts
    }

    pub fn points(&self) -> usize {
        self.points
    }

    fn children(&self, level: usize, cell: usize) -> std::ops::Range<usize> {
        let (start, end) = self.levels[level].children[cell];
        start..end
    }

    /// Renumbers finest cells depth-first so every cell's finest cells form
    /// a contiguous range; returns the ranges per level and the finest masses
    /// in the new order.
    fn leaf_spans(&self) -> (Vec<Vec<(usize, usize)>>, Vec<usize>) {
        let levels = self.levels.len();
        let mut spans: Vec<Vec<(usize, usize)>> =
            self.levels.iter().map(|l| vec![(0, 0); l.mass.len()]).collect();
        let mut mass = Vec::with_capacity(self.levels[0].mass.len());
        fn walk(
            h: &CellHierarchy,
            j: usize,
            cell: usize,
            spans: &mut [Vec<(usize, usize)>],
            mass: &mut Vec<usize>,
        ) -> (usize, usize) {
            let span = if j == 0 {
                mass.push(h.levels[0].mass[cell]);
                (mass.len() - 1, mass.len())
            } else {
                let start = mass.len();
                for k in h.children(j, cell) {
                    walk(h, j - 1, k, spans, mass);
                }
                (start, mass.len())
            };
            spans[j][cell] = span;
            span
        }
        for cell in 0..self.levels[levels - 1].mass.len() {
            walk(self, levels - 1, cell, &mut spans, &mut mass);
        }
        (spans, mass)
    }

    /// `min_j N_{δ_j} δ_j^s`.
    pub fn single_scale_floor(&self, s: f64) -> f64 {
        self.box_counts()
            .iter()
            .zip(&self.levels)
            .map(|(n, l)| *n as f64 * l.delta.powf(s))
            .fold(f64::INFINITY, f64::min)
    }

    /// Cheapest cover using whole cells of the hierarchy.
    pub fn optimal_cover(&self, s: f64) -> Cover {
        let price: Vec<f64> = self.levels.iter().map(|l| l.delta.powf(s)).collect();
        let mut cost: Vec<Vec<f64>> = Vec::with_capacity(self.levels.len());
        let mut own: Vec<Vec<bool>> = Vec::with_capacity(self.levels.len());
        cost.push(vec![price[0]; self.levels[0].mass.len()]);
        own.push(vec![true; self.levels[0].mass.len()]);
        for j in 1..self.levels.len() {
            let n = self.levels[j].mass.len();
            let mut c = Vec::with_capacity(n);
            let mut o = Vec::with_capacity(n);
            for cell in 0..n {
                let split: f64 = self.children(j, cell).map(|k| cost[j - 1][k]).sum();
                // Ties go to the single coarser set.
                if price[j] <= split {
                    c.push(price[j]);
                    o.push(true);
                } else {
                    c.push(split);
                    o.push(false);
                }
            }
            cost.push(c);
            own.push(o);
        }
        let mut counts = vec![0; self.levels.len()];
        let top = self.levels.len() - 1;
        let mut stack: Vec<(usize, usize)> = (0..self.levels[top].mass.len()).map(|c| (top, c)).collect();
        while let Some((j, cell)) = stack.pop() {
            if own[j][cell] {
                counts[j] += 1;
            } else {
                stack.extend(self.children(j, cell).map(|k| (j - 1, k)));
            }
        }
        Cover {
            ladder: self.ladder(),
            counts,
        }
    }

    /// Weighted greedy set cover over all cells: repeatedly take the cell with
    /// the lowest price per newly covered point, coarser cells first on ties.
    pub fn greedy_cover(&self, s: f64) -> Cover {
        let levels = self.levels.len();
        let (ranges, leaf_mass) = self.leaf_spans();
        let leaf_mass = &leaf_mass;
        let mut covered = vec![false; leaf_mass.len()];
        let uncovered_in = |range: (usize, usize), covered: &[bool]| -> usize {
            (range.0..range.1).filter(|&i| !covered[i]).map(|i| leaf_mass[i]).sum()
        };
        #[derive(PartialEq, PartialOrd)]
        struct Key(f64);
        impl Eq for Key {}
        impl Ord for Key {
            fn cmp(&self, o: &Self) -> std::cmp::Ordering {
                self.0.total_cmp(&o.0)
            }
        }
        let mut heap = BinaryHeap::new();
        for j in 0..levels {
            let price = self.levels[j].delta.powf(s);
            for (cell, m) in self.levels[j].mass.iter().enumerate() {
                heap.push(Reverse((Key(price / *m as f64), Reverse(j), cell, *m)));
            }
        }
        let mut counts = vec![0; levels];
        let mut remaining = self.points;
        while remaining > 0 {
            let Reverse((_, Reverse(j), cell, stale)) = heap.pop().expect("cells cover every point");
            let fresh = uncovered_in(ranges[j][cell], &covered);
            if fresh == 0 {
                continue;
            }
            if fresh != stale {
                let price = self.levels[j].delta.powf(s);
                heap.push(Reverse((Key(price / fresh as f64), Reverse(j), cell, fresh)));
                continue;
            }
            counts[j] += 1;
            remaining -= fresh;
            for flag in &mut covered[ranges[j][cell].0..ranges[j][cell].1] {
                *flag = true;
            }
        }
        Cover {
            ladder: self.ladder(),
            counts,
        }
    }
}

/// Builds a cover of the hierarchy for exponent `s`.
pub trait CoverStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn cover(&self, cells: &CellHierarchy, s: f64) -> Cover;
}

/// Exact optimum over covers by hierarchy cells.
#[derive(Debug, Default, Clone, Copy)]
pub struct NestedOptimal;

impl CoverStrategy for NestedOptimal {
    fn name(&self) -> &'static str {
        "nested_optimal"
    }
    fn cover(&self, cells: &CellHierarchy, s: f64) -> Cover {
        cells.optimal_cover(s)
    }
}

/// Price-per-new-point greedy.
#[derive(Debug, Default, Clone, Copy)]
pub struct Greedy;

impl CoverStrategy for Greedy {
    fn name(&self) -> &'static str {
        "greedy"
    }
    fn cover(&self, cells: &CellHierarchy, s: f64) -> Cover {
        cells.greedy_cover(s)
    }
}

pub const DEFAULT_COVER_STRATEGY: &str = "nested_optimal";

pub fn cover_registry() -> &'static Registry<dyn CoverStrategy> {
    static REG: OnceLock<Registry<dyn CoverStrategy>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<dyn CoverStrategy> = Registry::new("cover strategy");
        reg.register("nested_optimal", Arc::new(NestedOptimal));
        reg.register("greedy", Arc::new(Greedy));
        reg
    })
}

/// Occupied cells of side `δ/√d` anchored at the bounding-box minimum.
pub fn box_count(cloud: &PointCloud, delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(invalid(format!("box size must be positive, got {delta}")));
    }
    let (lo, _) = cloud.bounding_box();
    let side = delta / (cloud.dim() as f64).sqrt();
    let mut keys: Vec<Vec<u128>> = cloud
        .points()
        .map(|p| {
            p.iter()
                .zip(&lo)
                .map(|(x, m)| ((x - m) / side).floor().max(0.0) as u128)
                .collect()
        })
        .collect();
    keys.sort_unstable();
    keys.dedup();
    Ok(keys.len())
}
