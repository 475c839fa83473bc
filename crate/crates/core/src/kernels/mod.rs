//! Gauge functions and kernel families.

mod checks;
mod gauge;
mod kernel;

pub use checks::{
    check_admissible, check_admissible_on, check_growth_condition, check_growth_default,
    default_growth_ln_r, AdmissibilityReport, GrowthReport, GrowthTrace, DEFAULT_GROWTH_EPS,
};
pub use gauge::{
    AdmissibleFn, BoxLike, Gauge, GaugeRegistry, GaugeSpec, LogLike, PhiAlpha, Power, Tabulated,
};
pub use kernel::{
    ker_profile, ker_psi, ker_symbolic_phi, ker_z, ker_z_pair, ker_z_sv, ln_profile, ln_psi,
    ln_symbolic_phi_sv, KernelFamily, KernelSpec, Scale,
};

use std::sync::Arc;

use crate::error::{invalid, Result};

/// `Φ_α(r) = Φ(r^α)^{1/α}`; `α = 1` returns `Φ` itself.
pub fn phi_alpha(phi: &AdmissibleFn, alpha: f64) -> Result<AdmissibleFn> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(phi.clone());
    }
    let out = AdmissibleFn::from_gauge(Arc::new(PhiAlpha {
        inner: phi.clone(),
        alpha,
    }));
    let report = check_admissible(&out);
    if !(report.bounded && report.monotone) {
        return Err(invalid(format!(
            "Phi_alpha of {} with alpha = {alpha} failed the admissibility check",
            phi.variant()
        )));
    }
    Ok(out)
}

/// Log-space evaluation pays off once `s·ln(1/Φ(r))` would overflow `f64`.
pub fn needs_log_space(scale: &Scale, s: f64) -> bool {
    -s * scale.ln_phi > 500.0
}
