use std::fmt;

use crate::dynamics::{ScalarField, State};
use crate::error::{Error, Result};

use super::classk::{ClassKFn, LIMIT_PROBE};

/// Relative margin required of the limit inequality for bounded gains.
const LIMIT_MARGIN: f64 = 1e-6;

/// Comparison functions of the two subsystems: the sandwich bounds
/// a₁(|x|) ≤ V(x) ≤ a₂(|x|), b₁(|y|) ≤ W(y) ≤ b₂(|y|), and the gains γ₁, Γ₂.
#[derive(Debug, Clone)]
pub struct Gains {
    pub a1: ClassKFn,
    pub a2: ClassKFn,
    pub b1: ClassKFn,
    pub b2: ClassKFn,
    pub gamma1: ClassKFn,
    pub gamma2: ClassKFn,
}

impl Gains {
    /// b₂∘Γ₂∘a₁⁻¹.
    pub fn lower(&self) -> Result<ClassKFn> {
        Ok(self.b2.compose(&self.gamma2).compose(&self.a1.inverse()?))
    }

    /// b₁∘γ₁∘a₂⁻¹.
    pub fn upper(&self) -> Result<ClassKFn> {
        Ok(self.b1.compose(&self.gamma1).compose(&self.a2.inverse()?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCheck {
    /// lim b₁∘γ₁∘a₂⁻¹.
    pub upper_limit: f64,
    /// r = lim b₂∘Γ₂∘a₁⁻¹.
    pub r: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallGainReport {
    pub checked: usize,
    /// Grid points s where upper(s) − lower(s) ≤ 0, with the difference.
    pub violations: Vec<(f64, f64)>,
    /// Present only when γ₁ is bounded.
    pub limit: Option<LimitCheck>,
}

impl SmallGainReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.limit.as_ref().is_none_or(|l| l.passed)
    }
}

/// Strict inequality b₁∘γ₁∘a₂⁻¹ > b₂∘Γ₂∘a₁⁻¹ on `grid`, plus the limit
/// inequality when γ₁ is bounded.
pub fn check_small_gain(gains: &Gains, grid: &[f64]) -> Result<SmallGainReport> {
    if grid.iter().any(|s| !(*s > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("small-gain grid must be positive and ascending".into()));
    }
    let (lower, upper) = (gains.lower()?, gains.upper()?);
    let violations = grid
        .iter()
        .map(|&s| (s, upper.eval(s) - lower.eval(s)))
        .filter(|(_, d)| !(*d > 0.0))
        .collect();
    let limit = (!gains.gamma1.is_unbounded()).then(|| {
        let probe = grid.last().copied().unwrap_or(LIMIT_PROBE).max(LIMIT_PROBE);
        let (upper_limit, r) = (upper.eval(probe), lower.eval(probe));
        LimitCheck {
            upper_limit,
            r,
            passed: upper_limit > r * (1.0 + LIMIT_MARGIN),
        }
    });
    Ok(SmallGainReport {
        checked: grid.len(),
        violations,
        limit,
    })
}

/// ℓ₁ < ℓ₂ strictly between the composed gains, with their limits when
/// bounded.
#[derive(Debug, Clone)]
pub struct Interpolants {
    pub ell1: ClassKFn,
    pub ell2: ClassKFn,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    /// lim of the lower chain when bounded.
    pub r: Option<f64>,
}

/// ℓ₁ = lower + ⅓(upper − lower), ℓ₂ = lower + ⅔(upper − lower), checked
/// for the strict chain lower < ℓ₁ < ℓ₂ < upper on `grid`.
pub fn build_interpolants(lower: &ClassKFn, upper: &ClassKFn, grid: &[f64]) -> Result<Interpolants> {
    let ell1 = ClassKFn::convex_between(lower, upper, 1.0 / 3.0);
    let ell2 = ClassKFn::convex_between(lower, upper, 2.0 / 3.0);
    for &s in grid.iter().filter(|s| **s > 0.0) {
        let chain = [lower.eval(s), ell1.eval(s), ell2.eval(s), upper.eval(s)];
        if !chain.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::ChainViolation { s });
        }
    }
    Ok(Interpolants {
        r1: ell1.limit(),
        r2: ell2.limit(),
        r: lower.limit(),
        ell1,
        ell2,
    })
}

/// Geometric grid of `n` points on [lo, hi].
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
            (0..n).map(|k| lo * ratio.powi(k as i32)).collect()
        }
    }
}

/// Everything the composite controller needs about V, W and the gains.
#[derive(Debug, Clone)]
pub struct GainSetup {
    pub v: ScalarField,
    pub w: ScalarField,
    pub gains: Gains,
    pub interp: Interpolants,
}

impl GainSetup {
    pub fn new(v: ScalarField, w: ScalarField, gains: Gains, grid: &[f64]) -> Result<Self> {
        let interp = build_interpolants(&gains.lower()?, &gains.upper()?, grid)?;
        Ok(GainSetup { v, w, gains, interp })
    }

    pub fn nx(&self) -> usize {
        self.v.dim()
    }

    pub fn ny(&self) -> usize {
        self.w.dim()
    }

    pub fn ell(&self, i: usize) -> &ClassKFn {
        if i == 2 {
            &self.interp.ell2
        } else {
            &self.interp.ell1
        }
    }

    /// Sandwich bounds on sample points in each factor space; returns the
    /// indices of failing x and y samples.
    pub fn check_sandwich(&self, xs: &[State], ys: &[State]) -> (Vec<usize>, Vec<usize>) {
        let g = &self.gains;
        let bad_x = xs
            .iter()
            .enumerate()
            .filter(|(_, x)| {
                let (n, v) = (x.norm(), self.v.call(x));
                !(g.a1.eval(n) <= v * (1.0 + 1e-12) && v <= g.a2.eval(n) * (1.0 + 1e-12))
            })
            .map(|(i, _)| i)
            .collect();
        let bad_y = ys
            .iter()
            .enumerate()
            .filter(|(_, y)| {
                let (n, w) = (y.norm(), self.w.call(y));
                !(g.b1.eval(n) <= w * (1.0 + 1e-12) && w <= g.b2.eval(n) * (1.0 + 1e-12))
            })
            .map(|(i, _)| i)
            .collect();
        (bad_x, bad_y)
    }

    /// Whether the bounded-gain threshold logic applies: R₁ > r (see the
    /// interpolant limits). `None` when the gains are unbounded.
    pub fn limits_consistent(&self) -> Option<bool> {
        match (self.interp.r1, self.interp.r) {
            (Some(r1), Some(r)) => Some(r1 > r),
            _ => None,
        }
    }

    /// The W threshold above which the strengthened decrease applies.
    pub fn strengthen_threshold(&self) -> f64 {
        self.interp.r.unwrap_or(f64::INFINITY)
    }
}

/// Ψᵢ(x, y) = max{W(y), ℓᵢ(V(x))}.
pub fn psi(setup: &GainSetup, i: usize, x: &State, y: &State) -> f64 {
    setup.w.call(y).max(setup.ell(i).eval(setup.v.call(x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// W < ℓ₁(V): steer x.
    SteerX,
    /// W > ℓ₁(V): steer y.
    SteerY,
    /// |W − ℓ₁(V)| ≤ band.
    Boundary,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::SteerX => "SteerX",
            Regime::SteerY => "SteerY",
            Regime::Boundary => "Boundary",
        })
    }
}

/// Default regime band 1e-3·(1 + W(y)).
pub fn default_band(w_value: f64) -> f64 {
    1e-3 * (1.0 + w_value)
}

pub fn classify_regime(setup: &GainSetup, x: &State, y: &State, band: f64) -> Regime {
    let gap = setup.w.call(y) - setup.interp.ell1.eval(setup.v.call(x));
    if gap.abs() <= band {
        Regime::Boundary
    } else if gap < 0.0 {
        Regime::SteerX
    } else {
        Regime::SteerY
    }
}

/// Decrease margin q(s) = max(1e-6, 1e-3·s) for the strengthened y-decrease.
pub fn q_margin(s: f64) -> f64 {
    (1e-3 * s).max(1e-6)
}
