//! The sampled-data closed loop: at each sampling instant tᵢ the controller
//! is queried at x(tᵢ) for a dwell Tᵢ ≤ σ and a schedule, the plant is
//! integrated over [tᵢ, tᵢ + Tᵢ], and the interval is recorded in a ledger.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clf_sdf::{classify, dwell_search, DwellResult, EventKind, SdfConfig};
use crate::dynamics::{ControlSystem, ScalarField, State};
use crate::error::{Error, Result};
use crate::integrate::{integrate, ControlSchedule, Trajectory, DEFAULT_STEP};
use crate::par::{self, Exec};
use crate::smallgain::ClassKFn;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    /// Upper bound on every dwell.
    pub sigma: f64,
    /// Stop once the certified function drops to this level.
    pub stop_phi: f64,
    pub max_events: usize,
    pub step: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            sigma: 0.5,
            stop_phi: 1e-6,
            max_events: 10_000,
            step: DEFAULT_STEP,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Validation("sigma".into()));
        }
        if !(self.stop_phi > 0.0) {
            return Err(Error::Validation("stop_phi".into()));
        }
        if !(self.step > 0.0) {
            return Err(Error::Validation("step".into()));
        }
        if self.max_events == 0 {
            return Err(Error::Validation("max_events".into()));
        }
        Ok(())
    }
}

/// A per-state synthesizer: given the sampled state, choose the dwell and the
/// control schedule for the next interval.
pub trait Controller: Sync {
    fn system(&self) -> &ControlSystem;
    /// The function whose decrease the ledger certifies.
    fn value(&self, x: &State) -> f64;
    /// The returned trajectory is the simulated interval in local time and
    /// becomes part of the closed-loop record.
    fn decide(&self, x: &State, sigma: f64, step: f64) -> Result<DwellResult>;
}

/// CLF-based controller for affine single-input systems.
#[derive(Debug, Clone)]
pub struct ClfController {
    pub sys: ControlSystem,
    pub phi: ScalarField,
    pub cfg: SdfConfig,
}

impl Controller for ClfController {
    fn system(&self) -> &ControlSystem {
        &self.sys
    }

    fn value(&self, x: &State) -> f64 {
        self.phi.call(x)
    }

    fn decide(&self, x: &State, sigma: f64, step: f64) -> Result<DwellResult> {
        let tag = classify(&self.sys, &self.phi, x, self.cfg.tol(x))?;
        dwell_search(&self.sys, &self.phi, x, sigma, &tag, step, &self.cfg)
    }
}

/// Zero input held for the full σ, whatever happens.
#[derive(Debug, Clone)]
pub struct HoldController {
    pub sys: ControlSystem,
    pub phi: ScalarField,
}

impl Controller for HoldController {
    fn system(&self) -> &ControlSystem {
        &self.sys
    }

    fn value(&self, x: &State) -> f64 {
        self.phi.call(x)
    }

    fn decide(&self, x: &State, sigma: f64, step: f64) -> Result<DwellResult> {
        let schedule = ControlSchedule::constant(sigma, State::zeros(self.sys.input_dim()))?;
        let traj = integrate(&self.sys, x, &schedule, step)?;
        Ok(DwellResult {
            tau: sigma,
            phi_start: self.phi.call(x),
            phi_end: self.phi.call(traj.last_state()),
            phi_peak: crate::integrate::peak_of(&traj, &self.phi),
            schedule,
            kind: EventKind::Hold,
            trajectory: traj,
        })
    }
}

/// One sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub t: f64,
    pub x: State,
    pub dwell: f64,
    pub schedule: ControlSchedule,
    pub phi_before: f64,
    pub phi_after: f64,
    pub phi_peak: f64,
    /// Largest |x| over the recorded samples of the interval.
    pub peak_norm: f64,
    pub kind: EventKind,
}

/// The flat, file-level view of a ledger record.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub event: usize,
    pub t: f64,
    pub dwell: f64,
    pub kind: EventKind,
    pub phi_before: f64,
    pub phi_after: f64,
    pub phi_peak: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleLedger {
    pub events: Vec<SampleRecord>,
}

impl SampleLedger {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn rows(&self) -> Vec<LedgerRow> {
        self.events
            .iter()
            .enumerate()
            .map(|(i, e)| LedgerRow {
                event: i,
                t: e.t,
                dwell: e.dwell,
                kind: e.kind,
                phi_before: e.phi_before,
                phi_after: e.phi_after,
                phi_peak: e.phi_peak,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Converged,
    Budget,
    Failed(String),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Converged => "Converged",
            Verdict::Budget => "Budget",
            Verdict::Failed(_) => "Failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub ledger: SampleLedger,
    pub verdict: Verdict,
}

impl RunOutput {
    pub fn final_value(&self, controller: &dyn Controller) -> f64 {
        controller.value(self.trajectory.last_state())
    }
}

/// Run the closed loop from `x0`. Failures are reported as verdicts.
pub fn run(controller: &dyn Controller, x0: &State, cfg: &LoopConfig) -> RunOutput {
    let sys = controller.system();
    let mut trajectory = Trajectory {
        times: vec![0.0],
        states: vec![x0.clone()],
        controls: vec![State::zeros(sys.input_dim())],
    };
    let mut ledger = SampleLedger::default();
    let fail = |trajectory, ledger, msg: String| RunOutput {
        trajectory,
        ledger,
        verdict: Verdict::Failed(msg),
    };
    if let Err(e) = cfg.validate() {
        return fail(trajectory, ledger, e.to_string());
    }
    if x0.len() != sys.state_dim() || x0.iter().any(|c| !c.is_finite()) {
        return fail(trajectory, ledger, "initial state has wrong dimension or is not finite".into());
    }

    let mut t = 0.0;
    let mut x = x0.clone();
    let mut phi = controller.value(&x);
    if phi <= cfg.stop_phi {
        return RunOutput {
            trajectory,
            ledger,
            verdict: Verdict::Converged,
        };
    }
    while ledger.len() < cfg.max_events {
        let decision = match controller.decide(&x, cfg.sigma, cfg.step) {
            Ok(d) => d,
            Err(e) => {
                let msg = format!("event {}: {e}", ledger.len());
                return fail(trajectory, ledger, msg);
            }
        };
        let mut piece = decision.trajectory;
        if piece.states.first() != Some(&x) || piece.times.first() != Some(&0.0) {
            let msg = format!("event {}: decision trajectory does not start at the sampled state", ledger.len());
            return fail(trajectory, ledger, msg);
        }
        for s in piece.times.iter_mut() {
            *s += t;
        }
        let phi_after = controller.value(piece.last_state());
        let phi_peak = piece.states.iter().map(|s| controller.value(s)).fold(f64::NEG_INFINITY, f64::max);
        let next = piece.last_state().clone();
        ledger.events.push(SampleRecord {
            t,
            x: x.clone(),
            dwell: decision.tau,
            schedule: decision.schedule,
            phi_before: phi,
            phi_after,
            phi_peak,
            peak_norm: piece.max_norm(),
            kind: decision.kind,
        });
        trajectory.extend_continuing(piece);
        t += decision.tau;
        x = next;
        phi = phi_after;
        if phi <= cfg.stop_phi {
            return RunOutput {
                trajectory,
                ledger,
                verdict: Verdict::Converged,
            };
        }
    }
    RunOutput {
        trajectory,
        ledger,
        verdict: Verdict::Budget,
    }
}

/// Independent runs from several initial states.
pub fn run_batch(exec: Exec, controller: &dyn Controller, x0s: &[State], cfg: &LoopConfig) -> Vec<RunOutput> {
    par::map(exec, x0s, |x0| run(controller, x0, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOutcome {
    pub passed: bool,
    pub first_violation: Option<usize>,
}

impl CheckOutcome {
    fn from_first(first: Option<usize>) -> Self {
        CheckOutcome {
            passed: first.is_none(),
            first_violation: first,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerReport {
    /// phi_after < phi_before per event and phi_before strictly decreasing.
    pub monotone: CheckOutcome,
    /// phi_peak ≤ (1 + slack)·phi_before per event.
    pub peak: CheckOutcome,
    /// |x(t)| ≤ a1⁻¹((1 + slack)·Φ(x0)); `None` when no a1 was given.
    pub bound: Option<CheckOutcome>,
}

impl LedgerReport {
    pub fn passed(&self) -> bool {
        self.monotone.passed && self.peak.passed && self.bound.is_none_or(|b| b.passed)
    }
}

pub fn check_monotone(rows: &[LedgerRow]) -> CheckOutcome {
    let first = rows.iter().enumerate().position(|(i, r)| {
        !(r.phi_after < r.phi_before) || (i > 0 && !(r.phi_before < rows[i - 1].phi_before))
    });
    CheckOutcome::from_first(first)
}

pub fn check_peaks(rows: &[LedgerRow], slack: f64) -> CheckOutcome {
    CheckOutcome::from_first(rows.iter().position(|r| !(r.phi_peak <= (1.0 + slack) * r.phi_before)))
}

/// Decrease and peak checks on flat rows, e.g. a ledger read back from disk.
pub fn verify_rows(rows: &[LedgerRow], slack: f64) -> LedgerReport {
    LedgerReport {
        monotone: check_monotone(rows),
        peak: check_peaks(rows, slack),
        bound: None,
    }
}

/// Check the decrease ledger and, given a lower envelope a1 with
/// a1(|x|) ≤ Φ(x), the uniform excursion bound.
pub fn verify_ledger(ledger: &SampleLedger, a1: Option<&ClassKFn>, slack: f64) -> Result<LedgerReport> {
    let rows = ledger.rows();
    let bound = match (a1, ledger.events.first()) {
        (Some(a1), Some(first)) => {
            let limit = a1.invert((1.0 + slack) * first.phi_before)?;
            Some(CheckOutcome::from_first(
                ledger.events.iter().position(|e| !(e.peak_norm <= limit)),
            ))
        }
        _ => None,
    };
    Ok(LedgerReport {
        bound,
        ..verify_rows(&rows, slack)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsDelta {
    pub eps: f64,
    pub delta: f64,
}

const PROBE_BISECTIONS: usize = 20;

fn unit_ball_samples(dim: usize, trials: usize, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    while out.len() < trials {
        let p = State::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
        if p.norm() <= 1.0 {
            out.push(p);
        }
    }
    out
}

/// For each ε, the largest δ ∈ [0, ε] (bisection) such that every sampled
/// start with |x0| ≤ δ keeps |x(t)| ≤ ε along its run. The table is made
/// nondecreasing in ε afterwards.
pub fn epsilon_delta_probe(
    exec: Exec,
    controller: &dyn Controller,
    cfg: &LoopConfig,
    eps_list: &[f64],
    trials: usize,
    seed: u64,
) -> Vec<EpsDelta> {
    if trials == 0 {
        return Vec::new();
    }
    let dim = controller.system().state_dim();
    let samples = unit_ball_samples(dim, trials, seed);
    let stays_within = |delta: f64, eps: f64| {
        let starts: Vec<State> = samples.iter().map(|p| p * delta).collect();
        par::map(exec, &starts, |x0| {
            let out = run(controller, x0, cfg);
            !matches!(out.verdict, Verdict::Failed(_)) && out.trajectory.max_norm() <= eps
        })
        .into_iter()
        .all(|ok| ok)
    };
    let mut eps_sorted: Vec<f64> = eps_list.iter().copied().filter(|e| *e > 0.0).collect();
    eps_sorted.sort_by(f64::total_cmp);
    let mut table: Vec<EpsDelta> = Vec::with_capacity(eps_sorted.len());
    for eps in eps_sorted {
        let delta = if stays_within(eps, eps) {
            eps
        } else {
            let (mut lo, mut hi) = (0.0, eps);
            for _ in 0..PROBE_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if stays_within(mid, eps) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let floor = table.last().map_or(0.0, |e| e.delta);
        table.push(EpsDelta {
            eps,
            delta: delta.max(floor),
        });
    }
    table
}
