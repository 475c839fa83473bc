use serde::{Deserialize, Serialize};

use super::gauge::{AdmissibleFn, GaugeSpec};
use crate::error::{invalid, Error, Result};
use crate::symbolic::{singular_values, AffineIfs, CommonPrefix, Word};

/// A scale `r` together with `Φ(r)`, both also held in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub r: f64,
    pub phi_r: f64,
    pub ln_r: f64,
    pub ln_phi: f64,
}

impl Scale {
    /// Evaluates `Φ(r)`; values above `r` by more than rounding are rejected,
    /// rounding excess is clamped.
    pub fn new(r: f64, phi: &AdmissibleFn) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid(format!("scale r must be positive and finite, got {r}")));
        }
        let bound = phi.domain_bound().min(1.0);
        if r > bound * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "scale r = {r} lies outside the gauge domain (0, {bound}]"
            )));
        }
        let ln_r = r.ln();
        let raw = phi.ln_phi(ln_r);
        if raw.is_nan() || raw > ln_r + 1e-12 {
            return Err(Error::ScaleOrder { phi: raw.exp(), r });
        }
        let ln_phi = raw.min(ln_r);
        let phi_r = if ln_phi == ln_r { r } else { phi.phi(r).min(r) };
        Ok(Scale {
            r,
            phi_r,
            ln_r,
            ln_phi,
        })
    }

    /// `ln Φ(r)^{-s}`, the logarithm of the diagonal kernel value.
    pub fn ln_diagonal(&self, s: f64) -> f64 {
        -s * self.ln_phi
    }
}

/// Which kernel family a matrix was assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    SymbolicZ,
    SymbolicPhi,
    TruncatedPsi,
    Profile,
}

impl KernelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelFamily::SymbolicZ => "symbolic_z",
            KernelFamily::SymbolicPhi => "symbolic_phi",
            KernelFamily::TruncatedPsi => "truncated_psi",
            KernelFamily::Profile => "profile",
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Kernel family plus the parameters it was evaluated at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub r: f64,
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<GaugeSpec>,
}

impl KernelSpec {
    /// Checks `0 ≤ s ≤ s_max` (`s_max` is `d`, or `τ` for profiles) and `0 < r ≤ 1`.
    pub fn validate(&self, s_max: f64) -> Result<()> {
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(invalid(format!("kernel scale r = {} outside (0, 1]", self.r)));
        }
        let cap = match (self.family, self.tau) {
            (KernelFamily::Profile, Some(tau)) if tau > 0.0 => tau,
            (KernelFamily::Profile, _) => return Err(invalid("profile kernel needs tau > 0")),
            _ => s_max,
        };
        if !(self.s >= 0.0 && self.s <= cap) {
            return Err(invalid(format!("kernel exponent s = {} outside [0, {cap}]", self.s)));
        }
        Ok(())
    }
}

/// `Z_u` from singular values: `∏ min{1, u/α_k}`.
pub fn ker_z_sv(sv: &[f64], u: f64) -> f64 {
    sv.iter().map(|&a| (u / a).min(1.0)).product()
}

/// `Z_r(I)` for the common prefix `I` of two sequences.
pub fn ker_z(ifs: &AffineIfs, prefix: &Word, r: f64) -> f64 {
    ker_z_sv(&singular_values(ifs, prefix), r)
}

/// `Z_r(x ∧ y)`, equal to 1 on the diagonal.
pub fn ker_z_pair(ifs: &AffineIfs, pair: &CommonPrefix, r: f64) -> f64 {
    if pair.diagonal {
        1.0
    } else {
        ker_z(ifs, &pair.prefix, r)
    }
}

fn symbolic_objective(ln_sv: &[f64], ln_u: f64, s: f64) -> f64 {
    -s * ln_u + ln_sv.iter().map(|&a| (ln_u - a).min(0.0)).sum::<f64>()
}

/// Log of the symbolic Φ-kernel `max_{u ∈ [Φ(r), r]} u^{-s} Z_u` given the
/// logs of the singular values, with the log of the maximizing `u`.
pub fn ln_symbolic_phi_sv(ln_sv: &[f64], scale: &Scale, s: f64) -> (f64, f64) {
    let mut best = (symbolic_objective(ln_sv, scale.ln_phi, s), scale.ln_phi);
    let inner = ln_sv
        .iter()
        .copied()
        .filter(|&a| a > scale.ln_phi && a < scale.ln_r);
    for ln_u in inner.chain(std::iter::once(scale.ln_r)) {
        let v = symbolic_objective(ln_sv, ln_u, s);
        if v > best.0 {
            best = (v, ln_u);
        }
    }
    best
}

/// The symbolic Φ-kernel at the common prefix `prefix`.
pub fn ker_symbolic_phi(
    ifs: &AffineIfs,
    prefix: &Word,
    r: f64,
    s: f64,
    phi: &AdmissibleFn,
) -> Result<f64> {
    let scale = Scale::new(r, phi)?;
    let ln_sv: Vec<f64> = singular_values(ifs, prefix).iter().map(|a| a.ln()).collect();
    Ok(ln_symbolic_phi_sv(&ln_sv, &scale, s).0.exp())
}

/// Log of the truncated kernel ψ; `-∞` when `Δ > r`.
pub fn ln_psi(delta: f64, scale: &Scale, s: f64) -> f64 {
    if delta <= scale.phi_r {
        scale.ln_diagonal(s)
    } else if delta <= scale.r {
        -s * delta.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// The truncated kernel `ψ(Δ)`.
pub fn ker_psi(delta: f64, r: f64, s: f64, phi: &AdmissibleFn) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(invalid(format!("distance must be non-negative, got {delta}")));
    }
    Ok(ln_psi(delta, &Scale::new(r, phi)?, s).exp())
}

/// Log of the profile kernel `max_{u ∈ [Φ(r), r]} u^{-s} min{1, (u/Δ)^τ}`.
pub fn ln_profile(delta: f64, scale: &Scale, s: f64, tau: f64) -> f64 {
    let ln_delta = delta.ln();
    let f = |ln_u: f64| -s * ln_u + tau * (ln_u - ln_delta).min(0.0);
    let mid = ln_delta.clamp(scale.ln_phi, scale.ln_r);
    f(scale.ln_phi).max(f(scale.ln_r)).max(f(mid))
}

/// The profile kernel at distance `Δ`.
pub fn ker_profile(delta: f64, r: f64, s: f64, tau: f64, phi: &AdmissibleFn) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    if !(delta >= 0.0) {
        return Err(invalid(format!("distance must be non-negative, got {delta}")));
    }
    Ok(ln_profile(delta, &Scale::new(r, phi)?, s, tau).exp())
}
