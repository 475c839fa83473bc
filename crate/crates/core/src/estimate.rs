//! Root-finding in `s` for the exponent where a log-quantity stops growing
//! in `log(1/r)`, shared by the capacity and cover-sum routes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Minimum windowed slope, the finite-grid stand-in for a liminf.
    Lower,
    /// Maximum windowed slope, the stand-in for a limsup.
    Upper,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Lower => "lower",
            Mode::Upper => "upper",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOptions {
    pub mode: Mode,
    pub bracket: (f64, f64),
    pub tol_s: f64,
    /// Points per regression window inside the finest half of the grid.
    pub window: usize,
}

impl EstimatorOptions {
    pub fn new(bracket_hi: f64) -> Self {
        EstimatorOptions {
            mode: Mode::Lower,
            bracket: (0.0, bracket_hi),
            tol_s: 1e-3,
            window: 4,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_tol(mut self, tol_s: f64) -> Self {
        self.tol_s = tol_s;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub s_star: f64,
    pub mode: Mode,
    pub r_grid: Vec<f64>,
    /// Log-values of the curve at `s_star`, one per scale.
    pub ln_values: Vec<f64>,
    /// Windowed slopes at `s_star` over the finest half of the grid.
    pub slopes: Vec<f64>,
    pub bracket: (f64, f64),
    pub bracket_width: f64,
    /// Set when the slope statistic did not change sign on the bracket.
    pub no_sign_change: bool,
    /// Every `(s, statistic)` pair evaluated during the search.
    pub probes: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// `r_k = 2^{-k}` for `k` in `lo..=hi`.
pub fn dyadic_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}

/// The default grid `2^{-4} … 2^{-14}`.
pub fn default_r_grid() -> Vec<f64> {
    dyadic_grid(4, 14)
}

/// `n` geometric scales from `r_max` down to `r_min`.
pub fn geometric_grid(r_max: f64, r_min: f64, n: usize) -> Vec<f64> {
    let ratio = (r_min / r_max).ln() / (n.max(2) - 1) as f64;
    (0..n).map(|k| r_max * (ratio * k as f64).exp()).collect()
}

fn check_grid(r_grid: &[f64]) -> Result<()> {
    if r_grid.len() < 6 {
        return Err(invalid(format!("r grid needs at least 6 scales, got {}", r_grid.len())));
    }
    if r_grid.iter().any(|r| !(*r > 0.0)) || r_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("r grid must be positive and strictly decreasing"));
    }
    Ok(())
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Slopes of `ln X` against `-ln r` over sliding windows of the finest half.
pub fn windowed_slopes(r_grid: &[f64], ln_values: &[f64], window: usize) -> Vec<f64> {
    let start = r_grid.len() / 2;
    let x: Vec<f64> = r_grid[start..].iter().map(|r| -r.ln()).collect();
    let y = &ln_values[start..];
    let w = window.clamp(2, x.len());
    (0..=x.len() - w)
        .map(|i| slope(&x[i..i + w], &y[i..i + w]))
        .collect()
}

fn statistic(slopes: &[f64], mode: Mode) -> f64 {
    match mode {
        Mode::Lower => slopes.iter().copied().fold(f64::INFINITY, f64::min),
        Mode::Upper => slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Bisects for the zero of the windowed-slope statistic of `curve(s)`,
/// which must return `ln X_r^s` for every `r` in `r_grid`.
pub fn estimate_dimension<F>(r_grid: &[f64], opts: &EstimatorOptions, curve: F) -> Result<DimensionEstimate>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    check_grid(r_grid)?;
    let (mut lo, mut hi) = opts.bracket;
    if !(lo <= hi) || !(opts.tol_s > 0.0) {
        return Err(invalid("estimator needs lo <= hi and tol_s > 0"));
    }
    let mut probes = Vec::new();
    let mut eval = |s: f64| -> Result<(f64, Vec<f64>)> {
        let values = curve(s)?;
        if values.len() != r_grid.len() {
            return Err(invalid("curve returned the wrong number of values"));
        }
        let g = statistic(&windowed_slopes(r_grid, &values, opts.window), opts.mode);
        probes.push((s, g));
        Ok((g, values))
    };
    let (g_lo, v_lo) = eval(lo)?;
    let mut flagged = None;
    if g_lo <= 0.0 {
        flagged = Some((lo, v_lo));
    } else {
        let (g_hi, v_hi) = eval(hi)?;
        if g_hi >= 0.0 {
            flagged = Some((hi, v_hi));
        }
    }
    let (s_star, ln_values, no_sign_change) = match flagged {
        Some((s, v)) => (s, v, true),
        None => {
            while hi - lo > opts.tol_s {
                let mid = 0.5 * (lo + hi);
                if eval(mid)?.0 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = 0.5 * (lo + hi);
            (s, eval(s)?.1, false)
        }
    };
    let slopes = windowed_slopes(r_grid, &ln_values, opts.window);
    Ok(DimensionEstimate {
        s_star,
        mode: opts.mode,
        r_grid: r_grid.to_vec(),
        ln_values,
        slopes,
        bracket: (lo, hi),
        bracket_width: hi - lo,
        no_sign_change,
        probes,
        warnings: if no_sign_change {
            vec![format!("slope statistic has no sign change on [{}, {}]", opts.bracket.0, opts.bracket.1)]
        } else {
            Vec::new()
        },
    })
}
