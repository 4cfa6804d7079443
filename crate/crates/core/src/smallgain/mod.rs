//! Composite systems ẋ = f(x, y, u), ẏ = g(x, y, u) stabilized by switching
//! between x-steering and y-steering under a small-gain condition.
//!
//! Class-K algebra lives in [`classk`]; the gain conditions, the interpolants
//! ℓ₁ < ℓ₂ and the merged candidate Ψᵢ = max{W, ℓᵢ∘V} in [`gains`]; Lie-rank
//! checks in [`rank`]; and the motion-primitive controller for driftless
//! composites in [`search`].

pub mod classk;
pub mod composite;
pub mod gains;
pub mod rank;
pub mod search;

pub use classk::{ClassKFn, LIMIT_PROBE};
pub use composite::{lie_rank, CompositeSystem};
pub use gains::{
    build_interpolants, check_small_gain, classify_regime, default_band, geometric_grid, psi, q_margin, GainSetup, Gains,
    Interpolants, LimitCheck, Regime, SmallGainReport,
};
pub use rank::{check_rank_conditions, check_rank_conditions_with, RankCondition, RankFailure, RankReport};
pub use search::{
    composite_controller, enumerate_primitives, objective_for, primitive_search, Active, CompositeController, Constraint,
    Objective, Primitive, SearchConfig,
};
