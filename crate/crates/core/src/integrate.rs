//! Fixed-step RK4 integration of controlled trajectories under
//! piecewise-constant control schedules.

use crate::dynamics::{check_dim, ControlSystem, ScalarField, State};
use crate::error::{Error, Result};

/// Default integrator step (seconds).
pub const DEFAULT_STEP: f64 = 1e-3;
/// States with norm above this are treated as a blowup.
pub const BLOWUP_NORM: f64 = 1e12;

/// One constant-control piece of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub control: State,
}

/// An ordered list of (duration, constant control) segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlSchedule {
    segments: Vec<Segment>,
}

impl ControlSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let mut s = ControlSchedule::default();
        for seg in segments {
            s.push(seg.duration, seg.control)?;
        }
        Ok(s)
    }

    pub fn empty() -> Self {
        ControlSchedule::default()
    }

    pub fn constant(duration: f64, control: State) -> Result<Self> {
        let mut s = ControlSchedule::default();
        s.push(duration, control)?;
        Ok(s)
    }

    pub fn push(&mut self, duration: f64, control: State) -> Result<()> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidSegment(format!("duration {duration} is not a positive finite number")));
        }
        if control.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSegment("control is not finite".into()));
        }
        if let Some(first) = self.segments.first() {
            check_dim(first.control.len(), control.len())?;
        }
        self.segments.push(Segment { duration, control });
        Ok(())
    }

    pub fn concat(&self, other: &ControlSchedule) -> Result<ControlSchedule> {
        let mut out = self.clone();
        for seg in &other.segments {
            out.push(seg.duration, seg.control.clone())?;
        }
        Ok(out)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// The same schedule played backwards with every control negated.
    pub fn reversed_negated(&self) -> ControlSchedule {
        ControlSchedule {
            segments: self
                .segments
                .iter()
                .rev()
                .map(|s| Segment {
                    duration: s.duration,
                    control: -&s.control,
                })
                .collect(),
        }
    }
}

/// Recorded samples of a controlled run. `controls[k]` is the control applied
/// on `[times[k], times[k+1])`; the last entry repeats the final control.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub controls: Vec<State>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &State {
        self.states.last().expect("trajectory has at least the initial sample")
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial sample")
    }

    pub fn max_norm(&self) -> f64 {
        self.states.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// Append `other`, dropping its first sample (which duplicates our last).
    pub fn extend_continuing(&mut self, other: Trajectory) {
        let skip = usize::from(!self.is_empty());
        if let Some(c) = other.controls.first() {
            if let Some(last) = self.controls.last_mut() {
                *last = c.clone();
            }
        }
        self.times.extend(other.times.into_iter().skip(skip));
        self.states.extend(other.states.into_iter().skip(skip));
        self.controls.extend(other.controls.into_iter().skip(skip));
    }
}

fn rk4_step(sys: &ControlSystem, x: &State, u: &State, h: f64) -> State {
    let k1 = sys.rhs(x, u);
    let k2 = sys.rhs(&(x + &k1 * (0.5 * h)), u);
    let k3 = sys.rhs(&(x + &k2 * (0.5 * h)), u);
    let k4 = sys.rhs(&(x + &k3 * h), u);
    x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

fn validate(sys: &ControlSystem, x0: &State, schedule: &ControlSchedule, step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Validation(format!("integrator step {step} must be positive")));
    }
    check_dim(sys.state_dim(), x0.len())?;
    if x0.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerics("initial state"));
    }
    if schedule.is_empty() || schedule.total_duration() <= 0.0 {
        return Err(Error::EmptySchedule);
    }
    check_dim(sys.input_dim(), schedule.segments()[0].control.len())
}

/// Integrate from local time 0.
pub fn integrate(sys: &ControlSystem, x0: &State, schedule: &ControlSchedule, step: f64) -> Result<Trajectory> {
    integrate_from(sys, 0.0, x0, schedule, step)
}

/// Integrate with samples stamped starting at `t0`.
///
/// Each segment is stepped with `h = min(step, duration/10)`; the final step
/// of a segment is shortened to land on the boundary. Every step and every
/// boundary is recorded.
pub fn integrate_from(sys: &ControlSystem, t0: f64, x0: &State, schedule: &ControlSchedule, step: f64) -> Result<Trajectory> {
    validate(sys, x0, schedule, step)?;
    let estimate: usize = schedule
        .segments()
        .iter()
        .map(|s| (s.duration / step.min(s.duration / 10.0)).ceil() as usize)
        .sum();
    let mut traj = Trajectory {
        times: Vec::with_capacity(estimate + 1),
        states: Vec::with_capacity(estimate + 1),
        controls: Vec::with_capacity(estimate + 1),
    };
    traj.times.push(t0);
    traj.states.push(x0.clone());
    traj.controls.push(schedule.segments()[0].control.clone());

    let mut x = x0.clone();
    let mut seg_start = 0.0;
    for seg in schedule.segments() {
        let h = step.min(seg.duration / 10.0);
        let n = ((seg.duration / h) - 1e-9).ceil().max(1.0) as usize;
        if let Some(c) = traj.controls.last_mut() {
            *c = seg.control.clone();
        }
        for k in 0..n {
            let hh = if k + 1 == n { seg.duration - (n - 1) as f64 * h } else { h };
            let next = rk4_step(sys, &x, &seg.control, hh);
            let t_prev = *traj.times.last().unwrap_or(&t0);
            if next.iter().any(|c| !c.is_finite()) || next.norm() > BLOWUP_NORM {
                return Err(Error::Blowup { last_finite_t: t_prev });
            }
            x = next;
            let t = if k + 1 == n {
                t0 + seg_start + seg.duration
            } else {
                t0 + seg_start + (k + 1) as f64 * h
            };
            traj.times.push(t);
            traj.states.push(x.clone());
            traj.controls.push(seg.control.clone());
        }
        seg_start += seg.duration;
    }
    Ok(traj)
}

pub fn endpoint(sys: &ControlSystem, x0: &State, schedule: &ControlSchedule, step: f64) -> Result<State> {
    validate(sys, x0, schedule, step)?;
    let mut x = x0.clone();
    for seg in schedule.segments() {
        let h = step.min(seg.duration / 10.0);
        let n = ((seg.duration / h) - 1e-9).ceil().max(1.0) as usize;
        let mut t = 0.0;
        for k in 0..n {
            let hh = if k + 1 == n { seg.duration - (n - 1) as f64 * h } else { h };
            let next = rk4_step(sys, &x, &seg.control, hh);
            if next.iter().any(|c| !c.is_finite()) || next.norm() > BLOWUP_NORM {
                return Err(Error::Blowup { last_finite_t: t });
            }
            x = next;
            t += hh;
        }
    }
    Ok(x)
}

/// Max of Φ over the recorded samples: the numerical surrogate for the
/// supremum over the whole interval.
pub fn peak_along(sys: &ControlSystem, x0: &State, schedule: &ControlSchedule, step: f64, phi: &ScalarField) -> Result<f64> {
    let traj = integrate(sys, x0, schedule, step)?;
    Ok(peak_of(&traj, phi))
}

pub fn peak_of(traj: &Trajectory, phi: &ScalarField) -> f64 {
    traj.states.iter().map(|s| phi.call(s)).fold(f64::NEG_INFINITY, f64::max)
}
