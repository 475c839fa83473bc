//! Admissible gauge functions `Φ: (0, Y) → (0, ∞)`.
//!
//! Each family implements [`Gauge`] and is registered by variant name in a
//! [`GaugeRegistry`], which turns the serialized `{variant, params, Y}` form
//! back into a live function. [`AdmissibleFn`] is the shared handle the rest
//! of the crate passes around.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{invalid, Result};
use crate::registry::Registry;

/// One family of gauge functions.
pub trait Gauge: Send + Sync + fmt::Debug {
    fn variant(&self) -> &'static str;

    /// `ln Φ(r)` as a function of `ln r`; must stay finite far below the
    /// floating-point range of `r` itself.
    fn ln_phi(&self, ln_r: f64) -> f64;

    fn phi(&self, r: f64) -> f64 {
        self.ln_phi(r.ln()).exp()
    }

    /// Upper end `Y` of the domain.
    fn domain_bound(&self) -> f64;

    fn params(&self) -> Value;
}

/// `Φ(r) = r^{1/θ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power {
    pub theta: f64,
}

impl Gauge for Power {
    fn variant(&self) -> &'static str {
        "power"
    }
    fn ln_phi(&self, ln_r: f64) -> f64 {
        ln_r / self.theta
    }
    fn phi(&self, r: f64) -> f64 {
        if self.theta == 1.0 {
            r
        } else {
            r.powf(1.0 / self.theta)
        }
    }
    fn domain_bound(&self) -> f64 {
        1.0
    }
    fn params(&self) -> Value {
        json!({ "theta": self.theta })
    }
}

/// `Φ(r) = -r / ln r`, the gauge that recovers box-counting dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxLike;

impl Gauge for BoxLike {
    fn variant(&self) -> &'static str {
        "boxlike"
    }
    fn ln_phi(&self, ln_r: f64) -> f64 {
        ln_r - (-ln_r).ln()
    }
    fn phi(&self, r: f64) -> f64 {
        -r / r.ln()
    }
    fn domain_bound(&self) -> f64 {
        (-1.0f64).exp()
    }
    fn params(&self) -> Value {
        json!({})
    }
}

/// `Φ(r) = r^{-ln r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLike;

impl Gauge for LogLike {
    fn variant(&self) -> &'static str {
        "loglike"
    }
    fn ln_phi(&self, ln_r: f64) -> f64 {
        -ln_r * ln_r
    }
    fn domain_bound(&self) -> f64 {
        (-1.0f64).exp()
    }
    fn params(&self) -> Value {
        json!({})
    }
}

/// A tabulated monotone gauge, interpolated linearly in log-log coordinates
/// and extrapolated along the end segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    ln_r: Vec<f64>,
    ln_phi: Vec<f64>,
    r: Vec<f64>,
    phi: Vec<f64>,
}

impl Tabulated {
    pub fn new(r: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if r.len() != phi.len() || r.len() < 2 {
            return Err(invalid("tabulated gauge needs two equal-length columns of at least 2 rows"));
        }
        if r.iter().chain(&phi).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid("tabulated gauge values must be positive and finite"));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("tabulated gauge abscissae must be strictly increasing"));
        }
        Ok(Tabulated {
            ln_r: r.iter().map(|v| v.ln()).collect(),
            ln_phi: phi.iter().map(|v| v.ln()).collect(),
            r,
            phi,
        })
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.r
    }
}

impl Gauge for Tabulated {
    fn variant(&self) -> &'static str {
        "custom"
    }
    fn ln_phi(&self, ln_r: f64) -> f64 {
        let n = self.ln_r.len();
        let k = self.ln_r.partition_point(|&x| x <= ln_r).clamp(1, n - 1);
        let (x0, x1) = (self.ln_r[k - 1], self.ln_r[k]);
        let (y0, y1) = (self.ln_phi[k - 1], self.ln_phi[k]);
        y0 + (y1 - y0) * (ln_r - x0) / (x1 - x0)
    }
    fn domain_bound(&self) -> f64 {
        *self.r.last().unwrap()
    }
    fn params(&self) -> Value {
        json!({ "r": self.r, "phi": self.phi })
    }
}

/// `Φ_α(r) = Φ(r^α)^{1/α}` on `(0, Y^{1/α})`.
#[derive(Debug, Clone)]
pub struct PhiAlpha {
    pub inner: AdmissibleFn,
    pub alpha: f64,
}

impl Gauge for PhiAlpha {
    fn variant(&self) -> &'static str {
        "phi_alpha"
    }
    fn ln_phi(&self, ln_r: f64) -> f64 {
        self.inner.ln_phi(self.alpha * ln_r) / self.alpha
    }
    fn phi(&self, r: f64) -> f64 {
        self.inner.phi(r.powf(self.alpha)).powf(1.0 / self.alpha)
    }
    fn domain_bound(&self) -> f64 {
        self.inner.domain_bound().powf(1.0 / self.alpha)
    }
    fn params(&self) -> Value {
        json!({ "alpha": self.alpha, "inner": self.inner.spec() })
    }
}

/// Shared handle to a gauge function.
#[derive(Clone)]
pub struct AdmissibleFn {
    gauge: Arc<dyn Gauge>,
}

impl fmt::Debug for AdmissibleFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AdmissibleFn({:?})", self.gauge)
    }
}

impl AdmissibleFn {
    pub fn from_gauge(gauge: Arc<dyn Gauge>) -> Self {
        AdmissibleFn { gauge }
    }

    /// The θ-intermediate gauge `r^{1/θ}`, accepted for `0 < θ ≤ 1`
    /// (θ = 1 gives the identity, which is not admissible).
    pub fn theta(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(invalid(format!("theta must lie in (0, 1], got {theta}")));
        }
        Ok(Self::from_gauge(Arc::new(Power { theta })))
    }

    /// Alias of [`theta`](Self::theta) under the family name.
    pub fn power(theta: f64) -> Result<Self> {
        Self::theta(theta)
    }

    pub fn boxlike() -> Self {
        Self::from_gauge(Arc::new(BoxLike))
    }

    pub fn loglike() -> Self {
        Self::from_gauge(Arc::new(LogLike))
    }

    pub fn tabulated(r: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        Ok(Self::from_gauge(Arc::new(Tabulated::new(r, phi)?)))
    }

    pub fn variant(&self) -> &'static str {
        self.gauge.variant()
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.gauge.phi(r)
    }

    pub fn ln_phi(&self, ln_r: f64) -> f64 {
        self.gauge.ln_phi(ln_r)
    }

    pub fn domain_bound(&self) -> f64 {
        self.gauge.domain_bound()
    }

    /// The θ of a power gauge, if this is one.
    pub fn power_theta(&self) -> Option<f64> {
        if self.variant() == "power" {
            self.gauge.params()["theta"].as_f64()
        } else {
            None
        }
    }

    pub fn spec(&self) -> GaugeSpec {
        GaugeSpec {
            variant: self.variant().to_string(),
            params: self.gauge.params(),
            domain_bound: Some(self.domain_bound()),
        }
    }

    pub fn from_spec(spec: &GaugeSpec) -> Result<Self> {
        GaugeRegistry::global().build(spec)
    }
}

/// Serialized gauge: `{variant, params, Y}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeSpec {
    pub variant: String,
    #[serde(default)]
    pub params: Value,
    #[serde(rename = "Y", default, skip_serializing_if = "Option::is_none")]
    pub domain_bound: Option<f64>,
}

type GaugeFactory = dyn Fn(&Value) -> Result<AdmissibleFn> + Send + Sync;

/// Gauge families keyed by variant name.
pub struct GaugeRegistry {
    factories: Registry<GaugeFactory>,
}

impl GaugeRegistry {
    pub fn empty() -> Self {
        GaugeRegistry {
            factories: Registry::new("gauge variant"),
        }
    }

    pub fn with_defaults() -> Self {
        let mut reg = Self::empty();
        reg.register("power", |p| {
            let theta = p
                .get("theta")
                .and_then(Value::as_f64)
                .ok_or_else(|| invalid("power gauge needs params.theta"))?;
            AdmissibleFn::theta(theta)
        });
        reg.register("boxlike", |_| Ok(AdmissibleFn::boxlike()));
        reg.register("loglike", |_| Ok(AdmissibleFn::loglike()));
        reg.register("custom", |p| {
            let col = |k: &str| -> Result<Vec<f64>> {
                serde_json::from_value(p.get(k).cloned().unwrap_or(Value::Null))
                    .map_err(|e| invalid(format!("custom gauge params.{k}: {e}")))
            };
            AdmissibleFn::tabulated(col("r")?, col("phi")?)
        });
        reg.register("phi_alpha", |p| {
            let alpha = p
                .get("alpha")
                .and_then(Value::as_f64)
                .ok_or_else(|| invalid("phi_alpha gauge needs params.alpha"))?;
            let inner: GaugeSpec = serde_json::from_value(
                p.get("inner").cloned().ok_or_else(|| invalid("phi_alpha needs params.inner"))?,
            )?;
            super::phi_alpha(&AdmissibleFn::from_spec(&inner)?, alpha)
        });
        reg
    }

    /// The process-wide registry with the built-in families.
    pub fn global() -> &'static GaugeRegistry {
        static GLOBAL: OnceLock<GaugeRegistry> = OnceLock::new();
        GLOBAL.get_or_init(GaugeRegistry::with_defaults)
    }

    pub fn register<F>(&mut self, variant: &str, factory: F)
    where
        F: Fn(&Value) -> Result<AdmissibleFn> + Send + Sync + 'static,
    {
        self.factories.register(variant, Arc::new(factory));
    }

    pub fn variants(&self) -> Vec<&str> {
        self.factories.names()
    }

    pub fn build(&self, spec: &GaugeSpec) -> Result<AdmissibleFn> {
        let f = self.factories.get(&spec.variant)?;
        let phi = f(&spec.params)?;
        if let Some(y) = spec.domain_bound {
            let own = phi.domain_bound();
            if y > own * (1.0 + 1e-12) {
                return Err(invalid(format!(
                    "declared Y = {y} exceeds the {} domain bound {own}",
                    spec.variant
                )));
            }
        }
        Ok(phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_identity_is_exact() {
        let phi = AdmissibleFn::theta(1.0).unwrap();
        for r in [0.5, 0.1, 1.0 / 3.0, 2f64.powi(-14)] {
            assert_eq!(phi.phi(r), r);
        }
        assert!(AdmissibleFn::theta(0.0).is_err());
        assert!(AdmissibleFn::theta(1.5).is_err());
    }

    #[test]
    fn log_forms_agree_with_direct_forms() {
        let gauges = [
            AdmissibleFn::theta(0.4).unwrap(),
            AdmissibleFn::boxlike(),
            AdmissibleFn::loglike(),
        ];
        for g in &gauges {
            for r in [0.3, 0.05, 1e-3, 1e-6] {
                let direct = g.phi(r);
                let via_log = g.ln_phi(r.ln()).exp();
                assert!((direct - via_log).abs() <= 1e-12 * direct, "{g:?} at {r}");
                assert!(direct > 0.0 && direct <= r);
            }
        }
    }

    #[test]
    fn spec_round_trip() {
        let cases = [
            AdmissibleFn::theta(0.25).unwrap(),
            AdmissibleFn::boxlike(),
            AdmissibleFn::loglike(),
            AdmissibleFn::tabulated(vec![1e-4, 1e-2, 0.5], vec![1e-8, 1e-4, 0.25]).unwrap(),
            crate::kernels::phi_alpha(&AdmissibleFn::boxlike(), 0.5).unwrap(),
        ];
        for g in &cases {
            let text = serde_json::to_string(&g.spec()).unwrap();
            let back = AdmissibleFn::from_spec(&serde_json::from_str(&text).unwrap()).unwrap();
            for r in [0.2, 0.01, 1e-3] {
                assert_eq!(g.phi(r).to_bits(), back.phi(r).to_bits(), "{text}");
            }
        }
    }

    #[test]
    fn spec_errors() {
        let bad: GaugeSpec = serde_json::from_str(r#"{"variant":"nope"}"#).unwrap();
        assert!(AdmissibleFn::from_spec(&bad).is_err());
        let bad: GaugeSpec = serde_json::from_str(r#"{"variant":"power","params":{}}"#).unwrap();
        assert!(AdmissibleFn::from_spec(&bad).is_err());
        let bad: GaugeSpec = serde_json::from_str(r#"{"variant":"boxlike","Y":0.9}"#).unwrap();
        assert!(AdmissibleFn::from_spec(&bad).is_err());
    }

    #[test]
    fn tabulated_interpolates_in_log_log() {
        let t = AdmissibleFn::tabulated(vec![1e-4, 1e-2], vec![1e-8, 1e-4]).unwrap();
        assert!((t.phi(1e-3) - 1e-6).abs() < 1e-18);
        // Extrapolated along the end segment.
        assert!((t.phi(1e-5) - 1e-10).abs() < 1e-22);
        assert!(AdmissibleFn::tabulated(vec![0.1, 0.05], vec![0.01, 0.001]).is_err());
    }

    #[test]
    fn power_theta_accessor() {
        assert_eq!(AdmissibleFn::theta(0.5).unwrap().power_theta(), Some(0.5));
        assert_eq!(AdmissibleFn::boxlike().power_theta(), None);
        assert!(GaugeRegistry::global().variants().contains(&"phi_alpha"));
    }
}
