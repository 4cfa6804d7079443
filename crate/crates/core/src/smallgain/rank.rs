use crate::dynamics::State;
use crate::error::Result;
use crate::par::{self, Exec};

use super::composite::{lie_rank, CompositeSystem};
use super::gains::Gains;

/// Which accessibility requirement was checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankCondition {
    /// dim Lie{Aᵢ(·, y)} = n where x ≠ 0, |y| < γ₁(|x|).
    XSubsystem,
    /// dim Lie{Bᵢ(x, ·)} = m where y ≠ 0, |y| > Γ₂(|x|).
    YSubsystem,
    /// dim Lie{Fᵢ} = n + m where Γ₂(|x|) < |y| < γ₁(|x|).
    Joint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankFailure {
    pub point: State,
    pub condition: RankCondition,
    pub rank: usize,
    pub required: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankReport {
    pub points: usize,
    pub skipped: usize,
    pub checks: usize,
    pub failures: Vec<RankFailure>,
}

impl RankReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn check_rank_conditions(comp: &CompositeSystem, gains: &Gains, grid: &[State]) -> Result<RankReport> {
    check_rank_conditions_with(Exec::available(), comp, gains, grid)
}

pub fn check_rank_conditions_with(exec: Exec, comp: &CompositeSystem, gains: &Gains, grid: &[State]) -> Result<RankReport> {
    let per_point = par::map(exec, grid, |xi| -> Result<Option<(usize, Vec<RankFailure>)>> {
        let (x, y) = comp.split(xi);
        let (nx, ny) = (x.norm(), y.norm());
        if nx == 0.0 && ny == 0.0 {
            return Ok(None);
        }
        let below_gamma1 = ny < gains.gamma1.eval(nx);
        let above_gamma2 = ny > gains.gamma2.eval(nx);
        let mut checks = 0;
        let mut failures = Vec::new();
        let mut require = |condition, rank: usize, required: usize| {
            checks += 1;
            if rank < required {
                failures.push(RankFailure {
                    point: xi.clone(),
                    condition,
                    rank,
                    required,
                });
            }
        };
        if nx > 0.0 && below_gamma1 {
            let r = lie_rank(&comp.frozen_x_fields(&y), &x, comp.nx())?;
            require(RankCondition::XSubsystem, r, comp.nx());
        }
        if ny > 0.0 && above_gamma2 {
            let r = lie_rank(&comp.frozen_y_fields(&x), &y, comp.ny())?;
            require(RankCondition::YSubsystem, r, comp.ny());
        }
        if below_gamma1 && above_gamma2 {
            let n = comp.nx() + comp.ny();
            let r = lie_rank(comp.fields(), xi, n)?;
            require(RankCondition::Joint, r, n);
        }
        Ok(Some((checks, failures)))
    });
    let mut report = RankReport {
        points: grid.len(),
        ..RankReport::default()
    };
    for outcome in per_point {
        match outcome? {
            None => report.skipped += 1,
            Some((checks, failures)) => {
                report.checks += checks;
                report.failures.extend(failures);
            }
        }
    }
    Ok(report)
}
