use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Point at which bounded class-K functions are evaluated to approximate
/// their limit at infinity.
pub const LIMIT_PROBE: f64 = 1e6;

const PROBE_POINTS: usize = 64;
const MAX_BISECTIONS: usize = 400;

/// A continuous, strictly increasing map φ: ℝ⁺ → ℝ⁺ with φ(0) = 0.
#[derive(Clone)]
pub struct ClassKFn {
    name: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    domain_hint: f64,
    unbounded: bool,
}

impl fmt::Debug for ClassKFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClassKFn({}{})", self.name, if self.unbounded { "" } else { ", bounded" })
    }
}

/// Geometric probe grid on (0, hint] plus the origin.
fn probe_grid(hint: f64) -> impl Iterator<Item = f64> {
    let lo = hint * 1e-6;
    let ratio = (hint / lo).powf(1.0 / (PROBE_POINTS - 1) as f64);
    std::iter::once(0.0).chain((0..PROBE_POINTS).map(move |k| lo * ratio.powi(k as i32)))
}

impl ClassKFn {
    /// Validated on a probe grid: φ(0) = 0 and strict increase.
    pub fn new<F>(name: impl Into<String>, eval: F, domain_hint: f64, unbounded: bool) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        if !(domain_hint > 0.0 && domain_hint.is_finite()) {
            return Err(Error::NotClassK(format!("{name}: domain hint must be positive")));
        }
        let at_zero = eval(0.0);
        if at_zero != 0.0 {
            return Err(Error::NotClassK(format!("{name}(0) = {at_zero}")));
        }
        let mut prev = (0.0, 0.0);
        for s in probe_grid(domain_hint).skip(1) {
            let v = eval(s);
            if !(v.is_finite() && v > prev.1) {
                return Err(Error::NotClassK(format!(
                    "{name} is not strictly increasing between {} and {s}",
                    prev.0
                )));
            }
            prev = (s, v);
        }
        Ok(ClassKFn {
            name,
            eval: Arc::new(eval),
            domain_hint,
            unbounded,
        })
    }

    /// k·sᵖ.
    pub fn power(k: f64, p: f64) -> Result<Self> {
        ClassKFn::new(format!("{k}*s^{p}"), move |s| k * s.powf(p), 1.0, true)
    }

    pub fn linear(k: f64) -> Result<Self> {
        ClassKFn::new(format!("{k}*s"), move |s| k * s, 1.0, true)
    }

    /// k·s/(1 + s), bounded by k.
    pub fn saturating(k: f64) -> Result<Self> {
        ClassKFn::new(format!("{k}*s/(1+s)"), move |s| k * s / (1.0 + s), 1.0, false)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_unbounded(&self) -> bool {
        self.unbounded
    }

    pub fn domain_hint(&self) -> f64 {
        self.domain_hint
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    /// Numeric limit at infinity: `None` for K∞ functions.
    pub fn limit(&self) -> Option<f64> {
        (!self.unbounded).then(|| self.eval(LIMIT_PROBE))
    }

    /// φ⁻¹(v) by bracketing and bisection.
    pub fn invert(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::OutOfRange { value: v, sup: f64::NAN });
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        let mut hi = self.domain_hint;
        while self.eval(hi) < v {
            hi *= 2.0;
            if !hi.is_finite() || (!self.unbounded && hi > LIMIT_PROBE * 1e3) {
                return Err(Error::OutOfRange {
                    value: v,
                    sup: self.eval(LIMIT_PROBE),
                });
            }
        }
        let mut lo = 0.0;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// self ∘ inner.
    pub fn compose(&self, inner: &ClassKFn) -> ClassKFn {
        let (outer_f, inner_f) = (self.eval.clone(), inner.eval.clone());
        ClassKFn {
            name: format!("{}∘{}", self.name, inner.name),
            eval: Arc::new(move |s| outer_f(inner_f(s))),
            domain_hint: inner.domain_hint,
            unbounded: self.unbounded && inner.unbounded,
        }
    }

    /// φ⁻¹ as a class-K∞ function; only K∞ functions have a global inverse.
    pub fn inverse(&self) -> Result<ClassKFn> {
        if !self.unbounded {
            return Err(Error::NotClassK(format!("{} is bounded and has no global inverse", self.name)));
        }
        let me = self.clone();
        Ok(ClassKFn {
            name: format!("{}⁻¹", self.name),
            eval: Arc::new(move |v| me.invert(v).unwrap_or(f64::INFINITY)),
            domain_hint: self.eval(self.domain_hint),
            unbounded: true,
        })
    }

    /// Pointwise lower + t·(upper − lower), t ∈ (0, 1).
    pub fn convex_between(lower: &ClassKFn, upper: &ClassKFn, t: f64) -> ClassKFn {
        let (lf, uf) = (lower.eval.clone(), upper.eval.clone());
        ClassKFn {
            name: format!("({})+{t:.3}*(({})-({}))", lower.name, upper.name, lower.name),
            eval: Arc::new(move |s| {
                let l = lf(s);
                l + t * (uf(s) - l)
            }),
            domain_hint: lower.domain_hint.min(upper.domain_hint),
            unbounded: lower.unbounded || upper.unbounded,
        }
    }
}
