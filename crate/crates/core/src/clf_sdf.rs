//! Per-state control synthesis for single-input affine systems
//! ẋ = f(x) + u·g(x) with a CLF Φ.
//!
//! At a nonzero state exactly one of three situations holds (up to the
//! numerical tolerance):
//!
//! * `ControlAuthority`: |gΦ| > tol. A constant input pins dΦ/dt = −1.
//! * `DriftDecrease`: gΦ ≈ 0, fΦ < 0. Coasting with zero input decreases Φ.
//! * `BracketManeuver`: gΦ ≈ fΦ ≈ 0 but [f,g]Φ ≠ 0. A two-phase input
//!   (u, then w − u) makes Φ drop by ≈ (c/2)·t² per phase duration t.
//!
//! [`dwell_search`] turns the chosen candidate into an accepted dwell by
//! halving from σ until a strict decrease with bounded overshoot is observed
//! on the simulated trajectory.

use std::fmt;

use nalgebra::dvector;

use crate::dynamics::{bracket, lie_derivative, product_derivative, ControlSystem, ScalarField, State, VectorField};
use crate::error::{Error, Result, Witnesses};
use crate::integrate::{integrate, peak_of, ControlSchedule, Segment, Trajectory};

pub use crate::dynamics::ClfClause;

/// Tuning of the synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfConfig {
    /// Numerical zero for gΦ, fΦ and [f,g]Φ is `tol_rel·(1 + |x|)`.
    pub tol_rel: f64,
    /// Acceptance requires Φ_end < Φ_start − mu·Φ_start·τ².
    pub mu: f64,
    /// Peak bound β(s) = (1 + slack)·s.
    pub slack: f64,
    /// Free constant of the bracket maneuver.
    pub w: f64,
    /// Maneuver margin is `c0·Φ(x)`.
    pub c0: f64,
    pub max_halvings: usize,
    /// Also try the bracket maneuver when a `ControlAuthority` input fails
    /// at a given dwell (states close to the gΦ = 0 locus).
    pub singular_fallback: bool,
}

impl Default for SdfConfig {
    fn default() -> Self {
        SdfConfig {
            tol_rel: 1e-7,
            mu: 1e-4,
            slack: 0.5,
            w: 0.0,
            c0: 1.0,
            max_halvings: 40,
            singular_fallback: true,
        }
    }
}

impl SdfConfig {
    pub fn tol(&self, x: &State) -> f64 {
        self.tol_rel * (1.0 + x.norm())
    }

    pub fn beta(&self, s: f64) -> f64 {
        (1.0 + self.slack) * s
    }
}

/// What kind of control an accepted interval used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    ControlAuthority,
    DriftDecrease,
    BracketManeuver,
    SteerX,
    SteerY,
    Boundary,
    /// Zero input held for the full dwell.
    Hold,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::ControlAuthority => "ControlAuthority",
            EventKind::DriftDecrease => "DriftDecrease",
            EventKind::BracketManeuver => "BracketManeuver",
            EventKind::SteerX => "SteerX",
            EventKind::SteerY => "SteerY",
            EventKind::Boundary => "Boundary",
            EventKind::Hold => "Hold",
        }
    }

    pub fn parse(s: &str) -> Option<EventKind> {
        [
            EventKind::ControlAuthority,
            EventKind::DriftDecrease,
            EventKind::BracketManeuver,
            EventKind::SteerX,
            EventKind::SteerY,
            EventKind::Boundary,
            EventKind::Hold,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseTag {
    pub kind: EventKind,
    pub witnesses: Witnesses,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManeuverParams {
    pub w: f64,
    pub c: f64,
    /// Phase-one input; phase two uses w − u.
    pub u: f64,
    /// Every second-order term of the expansion except 2u·[g,f]Φ.
    pub a: f64,
    /// ([g,f]Φ)(x).
    pub bracket_gf: f64,
}

impl ManeuverParams {
    /// The two-phase schedule with per-phase duration `t`.
    pub fn schedule(&self, t: f64) -> Result<ControlSchedule> {
        ControlSchedule::new(vec![
            Segment {
                duration: t,
                control: dvector![self.u],
            },
            Segment {
                duration: t,
                control: dvector![self.w - self.u],
            },
        ])
    }
}

/// An accepted sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DwellResult {
    pub tau: f64,
    pub schedule: ControlSchedule,
    pub phi_start: f64,
    pub phi_end: f64,
    pub phi_peak: f64,
    pub kind: EventKind,
    /// The simulated interval in local time, starting at 0.
    pub trajectory: Trajectory,
}

pub(crate) fn witnesses(sys: &ControlSystem, phi: &ScalarField, x: &State) -> Result<Witnesses> {
    crate::dynamics::lie::affine_witnesses(sys, phi, x)
}

/// Decide which case applies at `x`.
pub fn classify(sys: &ControlSystem, phi: &ScalarField, x: &State, tol: f64) -> Result<CaseTag> {
    let w = witnesses(sys, phi, x)?;
    let kind = if w.g_phi.abs() > tol {
        EventKind::ControlAuthority
    } else if w.f_phi < -tol {
        EventKind::DriftDecrease
    } else if w.f_phi.abs() <= tol && w.bracket_phi.abs() > tol {
        EventKind::BracketManeuver
    } else {
        return Err(Error::ClfConditionViolated(w));
    };
    Ok(CaseTag { kind, witnesses: w })
}

/// u = (−1 − fΦ)/gΦ, so that DΦ·(f + u·g) = −1.
pub fn case1_input(f_phi: f64, g_phi: f64) -> f64 {
    (-1.0 - f_phi) / g_phi
}

pub fn case1_control(sys: &ControlSystem, phi: &ScalarField, x: &State, tol: f64) -> Result<f64> {
    let w = witnesses(sys, phi, x)?;
    if w.g_phi.abs() <= tol {
        return Err(Error::AuthorityTooSmall { g_phi: w.g_phi, tol });
    }
    Ok(case1_input(w.f_phi, w.g_phi))
}

/// The input-independent part of the second-order coefficient of
/// t ↦ Φ(R(t)) at a point where gΦ = fΦ = 0:
///
/// (2f+wg)ᵀD²Φ(2f+wg) + 4(ff)Φ + w(gf)Φ + 3w(fg)Φ + w²(gg)Φ,
///
/// where (PQ)Φ := DΦ·DQ·P.
pub fn maneuver_terms(sys: &ControlSystem, phi: &ScalarField, x: &State, w: f64) -> Result<f64> {
    let (f, g) = sys.affine_parts()?;
    let hess = phi.hessian(x)?;
    let dir = f.eval(x)? * 2.0 + g.eval(x)? * w;
    let curvature = dir.dot(&(&hess * &dir));
    let ff = product_derivative(f, f, phi, x)?;
    let gf = product_derivative(g, f, phi, x)?;
    let fg = product_derivative(f, g, phi, x)?;
    let gg = product_derivative(g, g, phi, x)?;
    Ok(curvature + 4.0 * ff + w * gf + 3.0 * w * fg + w * w * gg)
}

/// Solve A + 2u·[g,f]Φ = −c for u.
pub fn solve_maneuver_input(a: f64, c: f64, bracket_gf: f64) -> f64 {
    (-c - a) / (2.0 * bracket_gf)
}

pub fn maneuver_solve(sys: &ControlSystem, phi: &ScalarField, x: &State, w: f64, c: f64, tol: f64) -> Result<ManeuverParams> {
    if !(c > 0.0) {
        return Err(Error::Validation(format!("maneuver margin c = {c} must be positive")));
    }
    let (f, g) = sys.affine_parts()?;
    let bracket_gf = lie_derivative(&bracket(g, f)?, phi, x)?;
    if bracket_gf.abs() <= tol {
        return Err(Error::BracketTooSmall { bracket_phi: bracket_gf, tol });
    }
    let a = maneuver_terms(sys, phi, x, w)?;
    Ok(ManeuverParams {
        w,
        c,
        u: solve_maneuver_input(a, c, bracket_gf),
        a,
        bracket_gf,
    })
}

/// R(t): flow f + u·g for `t`, then f + (w − u)·g for `t`.
pub fn maneuver_rollout(sys: &ControlSystem, x0: &State, params: &ManeuverParams, t: f64, step: f64) -> Result<State> {
    if t == 0.0 {
        return Ok(x0.clone());
    }
    crate::integrate::endpoint(sys, x0, &params.schedule(t)?, step)
}

/// d²/dt² Φ(R(t)) at t = 0 for R(t) = (X_t ∘ Y_t)(x), X = f + u₂g,
/// Y = f + u₁g, assembled directly from the two closed-loop fields:
/// (X+Y)ᵀD²Φ(X+Y) + DΦ·(X² + Y² + 2YX).
pub fn second_order_coefficient(sys: &ControlSystem, phi: &ScalarField, x: &State, u1: f64, u2: f64) -> Result<f64> {
    let big_x = sys.affine_with_input(u2)?;
    let big_y = sys.affine_with_input(u1)?;
    let sum = VectorField::lin_comb(1.0, &big_x, 1.0, &big_y)?.eval(x)?;
    let hess = phi.hessian(x)?;
    let xx = product_derivative(&big_x, &big_x, phi, x)?;
    let yy = product_derivative(&big_y, &big_y, phi, x)?;
    let yx = product_derivative(&big_y, &big_x, phi, x)?;
    Ok(sum.dot(&(&hess * &sum)) + xx + yy + 2.0 * yx)
}

fn accepts(cfg: &SdfConfig, traj: &Trajectory, phi: &ScalarField, phi_start: f64, tau: f64) -> Option<(f64, f64)> {
    let phi_end = phi.call(traj.last_state());
    let peak = peak_of(traj, phi);
    let decreased = phi_end < phi_start - cfg.mu * phi_start * tau * tau;
    let bounded = peak <= cfg.beta(phi_start);
    (decreased && bounded).then_some((phi_end, peak))
}

type Candidate<'a> = (EventKind, Box<dyn Fn(f64) -> Result<ControlSchedule> + 'a>);

fn candidates<'a>(sys: &'a ControlSystem, phi: &'a ScalarField, x: &'a State, tag: &CaseTag, cfg: &'a SdfConfig) -> Result<Vec<Candidate<'a>>> {
    let tol = cfg.tol(x);
    let maneuver = |x: &State| -> Result<ManeuverParams> { maneuver_solve(sys, phi, x, cfg.w, cfg.c0 * phi.call(x), tol) };
    let mut out: Vec<Candidate<'a>> = Vec::new();
    match tag.kind {
        EventKind::ControlAuthority => {
            let u = case1_input(tag.witnesses.f_phi, tag.witnesses.g_phi);
            out.push((EventKind::ControlAuthority, Box::new(move |tau| ControlSchedule::constant(tau, dvector![u]))));
            if cfg.singular_fallback && tag.witnesses.bracket_phi.abs() > tol {
                if let Ok(p) = maneuver(x) {
                    out.push((EventKind::BracketManeuver, Box::new(move |tau| p.schedule(tau / 2.0))));
                }
            }
        }
        EventKind::DriftDecrease => {
            out.push((EventKind::DriftDecrease, Box::new(|tau| ControlSchedule::constant(tau, dvector![0.0]))));
        }
        EventKind::BracketManeuver => {
            let p = maneuver(x)?;
            out.push((EventKind::BracketManeuver, Box::new(move |tau| p.schedule(tau / 2.0))));
        }
        other => return Err(Error::Validation(format!("{other} is not an affine-system case"))),
    }
    Ok(out)
}

/// Halve τ from σ until the tag's candidate schedule strictly decreases Φ
/// with margin and keeps the peak below (1 + slack)·Φ(x).
pub fn dwell_search(
    sys: &ControlSystem,
    phi: &ScalarField,
    x: &State,
    sigma: f64,
    tag: &CaseTag,
    step: f64,
    cfg: &SdfConfig,
) -> Result<DwellResult> {
    if !(sigma > 0.0) {
        return Err(Error::Validation(format!("sigma = {sigma} must be positive")));
    }
    let phi_start = phi.value(x)?;
    let cands = candidates(sys, phi, x, tag, cfg)?;
    let mut tau = sigma;
    for _ in 0..=cfg.max_halvings {
        for (kind, build) in &cands {
            let schedule = build(tau)?;
            let traj = match integrate(sys, x, &schedule, step) {
                Ok(t) => t,
                Err(Error::Blowup { .. }) => continue,
                Err(e) => return Err(e),
            };
            if let Some((phi_end, phi_peak)) = accepts(cfg, &traj, phi, phi_start, tau) {
                return Ok(DwellResult {
                    tau,
                    schedule,
                    phi_start,
                    phi_end,
                    phi_peak,
                    kind: *kind,
                    trajectory: traj,
                });
            }
        }
        tau *= 0.5;
    }
    Err(Error::NoDecreaseFound {
        halvings: cfg.max_halvings,
    })
}
