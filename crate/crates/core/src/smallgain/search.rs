use crate::clf_sdf::{DwellResult, EventKind};
use crate::dynamics::{ControlSystem, State};
use crate::error::{Error, Result};
use crate::integrate::{integrate, ControlSchedule, Segment, Trajectory};
use crate::par::{self, Exec};
use crate::sampled_loop::Controller;

use super::composite::CompositeSystem;
use super::gains::{classify_regime, psi, q_margin, GainSetup, Regime};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Amplitude ladder, tried in order.
    pub amplitudes: Vec<f64>,
    pub max_halvings: usize,
    /// Decrease margin mu·v0·τ², as for the affine synthesis.
    pub mu: f64,
    pub slack: f64,
    /// Regime band is `band_rel·(1 + W(y))`.
    pub band_rel: f64,
    /// Order candidates by their predicted decrease on the frozen
    /// auxiliary subsystem before simulating the true system.
    pub prerank: bool,
    pub exec: Exec,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            amplitudes: vec![4.0, 2.0, 1.0, 0.5, 0.25],
            max_halvings: 16,
            mu: 1e-4,
            slack: 0.5,
            band_rel: 1e-3,
            prerank: false,
            exec: Exec::available(),
        }
    }
}

/// The Lyapunov value whose decrease is required.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Active {
    V,
    W,
    /// Both V and W decrease; Ψ₁ is reported.
    Joint,
}

/// Regime inequality maintained at every recorded sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    None,
    /// W(y) < ℓ₁(V(x)).
    WBelowEll1,
    /// ℓ₁(V(x)) < W(y).
    WAboveEll1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub active: Active,
    pub constraint: Constraint,
    /// Additional absolute decrease required of the active value.
    pub extra_margin: f64,
    pub kind: EventKind,
}

/// A motion primitive: pieces of (duration fraction, input index, sign) at
/// a common amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub pieces: Vec<(f64, usize, f64)>,
    pub amplitude: f64,
}

impl Primitive {
    pub fn schedule(&self, tau: f64, inputs: usize) -> Result<ControlSchedule> {
        let segments = self
            .pieces
            .iter()
            .map(|&(frac, i, sign)| {
                let mut u = State::zeros(inputs);
                u[i] = sign * self.amplitude;
                Segment {
                    duration: frac * tau,
                    control: u,
                }
            })
            .collect();
        ControlSchedule::new(segments)
    }
}

/// Constant pushes ±α·eᵢ, then two-segment concatenations, then four-segment
/// bracket motions (α·eᵢ, α·eⱼ, −α·eᵢ, −α·eⱼ), each over the amplitude ladder.
pub fn enumerate_primitives(inputs: usize, amplitudes: &[f64]) -> Vec<Primitive> {
    let signed: Vec<(usize, f64)> = (0..inputs).flat_map(|i| [(i, 1.0), (i, -1.0)]).collect();
    let mut out = Vec::new();
    for &amplitude in amplitudes {
        for &(i, s) in &signed {
            out.push(Primitive {
                pieces: vec![(1.0, i, s)],
                amplitude,
            });
        }
    }
    for &amplitude in amplitudes {
        for &(i, si) in &signed {
            for &(j, sj) in &signed {
                if i != j {
                    out.push(Primitive {
                        pieces: vec![(0.5, i, si), (0.5, j, sj)],
                        amplitude,
                    });
                }
            }
        }
    }
    for &amplitude in amplitudes {
        for i in 0..inputs {
            for j in 0..inputs {
                if i == j {
                    continue;
                }
                for si in [1.0, -1.0] {
                    for sj in [1.0, -1.0] {
                        out.push(Primitive {
                            pieces: vec![(0.25, i, si), (0.25, j, sj), (0.25, i, -si), (0.25, j, -sj)],
                            amplitude,
                        });
                    }
                }
            }
        }
    }
    out
}

struct Evaluation {
    phi_start: f64,
    phi_end: f64,
    phi_peak: f64,
}

fn value_pairs(comp: &CompositeSystem, setup: &GainSetup, traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.states
        .iter()
        .map(|s| {
            let (x, y) = comp.split(s);
            (setup.v.call(&x), setup.w.call(&y))
        })
        .collect()
}

fn evaluate(comp: &CompositeSystem, setup: &GainSetup, obj: &Objective, cfg: &SearchConfig, traj: &Trajectory, tau: f64) -> Option<Evaluation> {
    let vals = value_pairs(comp, setup, traj);
    let ell1 = &setup.interp.ell1;
    let maintained = vals.iter().all(|&(v, w)| match obj.constraint {
        Constraint::None => true,
        Constraint::WBelowEll1 => w < ell1.eval(v),
        Constraint::WAboveEll1 => ell1.eval(v) < w,
    });
    if !maintained {
        return None;
    }
    let decreases = |series: &dyn Fn(&(f64, f64)) -> f64, extra: f64| -> Option<(f64, f64, f64)> {
        let start = series(&vals[0]);
        let end = series(vals.last()?);
        let peak = vals.iter().map(series).fold(f64::NEG_INFINITY, f64::max);
        let bounded = peak <= (1.0 + cfg.slack) * start;
        let dropped = if start == 0.0 {
            end == 0.0
        } else {
            end < start - cfg.mu * start * tau * tau - extra
        };
        (bounded && dropped).then_some((start, end, peak))
    };
    let (phi_start, phi_end, phi_peak) = match obj.active {
        Active::V => decreases(&|p| p.0, obj.extra_margin)?,
        Active::W => decreases(&|p| p.1, obj.extra_margin)?,
        Active::Joint => {
            decreases(&|p| p.0, 0.0)?;
            decreases(&|p| p.1, obj.extra_margin)?;
            let psi1 = |p: &(f64, f64)| p.1.max(ell1.eval(p.0));
            let peak = vals.iter().map(psi1).fold(f64::NEG_INFINITY, f64::max);
            (psi1(&vals[0]), psi1(vals.last()?), peak)
        }
    };
    Some(Evaluation {
        phi_start,
        phi_end,
        phi_peak,
    })
}

/// Predicted active value at the end of `schedule` on the frozen auxiliary
/// subsystem; 0 when there is no auxiliary subsystem.
fn frozen_prediction(setup: &GainSetup, obj: &Objective, aux: Option<&ControlSystem>, x: &State, y: &State, schedule: &ControlSchedule, step: f64) -> f64 {
    let Some(aux) = aux else { return 0.0 };
    let start = match obj.active {
        Active::V => x,
        Active::W => y,
        Active::Joint => return 0.0,
    };
    match crate::integrate::endpoint(aux, start, schedule, step) {
        Ok(end) if obj.active == Active::V => setup.v.call(&end),
        Ok(end) => setup.w.call(&end),
        Err(_) => f64::INFINITY,
    }
}

/// Search the primitive catalogue for a dwell τ ∈ {σ, σ/2, …} and a schedule
/// meeting `obj` on the true composite dynamics.
pub fn primitive_search(
    comp: &CompositeSystem,
    setup: &GainSetup,
    obj: &Objective,
    xi0: &State,
    sigma: f64,
    step: f64,
    cfg: &SearchConfig,
) -> Result<DwellResult> {
    let sys = comp.system();
    let primitives = enumerate_primitives(sys.input_dim(), &cfg.amplitudes);
    let (x0, y0) = comp.split(xi0);
    let aux = if cfg.prerank {
        match obj.active {
            Active::V => Some(comp.frozen_x_system(&y0)?),
            Active::W => Some(comp.frozen_y_system(&x0)?),
            Active::Joint => None,
        }
    } else {
        None
    };
    let mut tau = sigma;
    for _ in 0..=cfg.max_halvings {
        let mut scheduled: Vec<(usize, ControlSchedule)> = primitives
            .iter()
            .enumerate()
            .map(|(i, p)| p.schedule(tau, sys.input_dim()).map(|s| (i, s)))
            .collect::<Result<_>>()?;
        if aux.is_some() {
            let scores = par::map(cfg.exec, &scheduled, |(_, s)| frozen_prediction(setup, obj, aux.as_ref(), &x0, &y0, s, step));
            let mut order: Vec<usize> = (0..scheduled.len()).collect();
            order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
            scheduled = order.into_iter().map(|k| scheduled[k].clone()).collect();
        }
        let hit = par::find_first(cfg.exec, &scheduled, |(_, schedule)| {
            let traj = integrate(sys, xi0, schedule, step).ok()?;
            evaluate(comp, setup, obj, cfg, &traj, tau).map(|e| (schedule.clone(), e, traj))
        });
        if let Some((_, (schedule, e, trajectory))) = hit {
            return Ok(DwellResult {
                tau,
                schedule,
                phi_start: e.phi_start,
                phi_end: e.phi_end,
                phi_peak: e.phi_peak,
                kind: obj.kind,
                trajectory,
            });
        }
        tau *= 0.5;
    }
    Err(Error::NoPrimitiveFound)
}

/// The objective the regime at (x, y) calls for.
pub fn objective_for(setup: &GainSetup, regime: Regime, y: &State) -> Objective {
    match regime {
        Regime::SteerX => Objective {
            active: Active::V,
            constraint: Constraint::WBelowEll1,
            extra_margin: 0.0,
            kind: EventKind::SteerX,
        },
        Regime::SteerY => {
            let w0 = setup.w.call(y);
            let extra = if w0 >= setup.strengthen_threshold() { q_margin(w0) } else { 0.0 };
            Objective {
                active: Active::W,
                constraint: Constraint::WAboveEll1,
                extra_margin: extra,
                kind: EventKind::SteerY,
            }
        }
        Regime::Boundary => Objective {
            active: Active::Joint,
            constraint: Constraint::None,
            extra_margin: 0.0,
            kind: EventKind::Boundary,
        },
    }
}

/// Regime dispatch followed by primitive search.
pub fn composite_controller(setup: &GainSetup, comp: &CompositeSystem, xi: &State, sigma: f64, step: f64, cfg: &SearchConfig) -> Result<DwellResult> {
    let (x, y) = comp.split(xi);
    if x.norm() == 0.0 && y.norm() == 0.0 {
        return Err(Error::Validation("composite controller called at the origin".into()));
    }
    let band = cfg.band_rel * (1.0 + setup.w.call(&y));
    let regime = classify_regime(setup, &x, &y, band);
    primitive_search(comp, setup, &objective_for(setup, regime, &y), xi, sigma, step, cfg)
}

/// Closed-loop adapter certifying Ψ₁.
#[derive(Debug, Clone)]
pub struct CompositeController {
    pub comp: CompositeSystem,
    pub setup: GainSetup,
    pub cfg: SearchConfig,
}

impl Controller for CompositeController {
    fn system(&self) -> &ControlSystem {
        self.comp.system()
    }

    fn value(&self, xi: &State) -> f64 {
        let (x, y) = self.comp.split(xi);
        psi(&self.setup, 1, &x, &y)
    }

    fn decide(&self, xi: &State, sigma: f64, step: f64) -> Result<DwellResult> {
        composite_controller(&self.setup, &self.comp, xi, sigma, step, &self.cfg)
    }
}
