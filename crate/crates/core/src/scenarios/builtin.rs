use nalgebra::SymmetricEigen;

use crate::dynamics::poly::{poly_field, Polynomial};
use crate::dynamics::{ControlSystem, Matrix, ScalarField, State, VectorField};
use crate::error::{Error, Result};
use crate::sampled_loop::{ClfController, Controller};
use crate::smallgain::{
    check_rank_conditions, geometric_grid, ClassKFn, CompositeController, CompositeSystem, GainSetup, Gains, RankReport,
};

use super::config::{CustomParams, PolyRows, ScenarioConfig};
use super::grid::random_annulus_points;

/// Default a(x₁, x₂) = −(x₁ + x₂) − x₁³ as `[coefficient, e₁, e₂]` rows.
pub fn example1_default_a() -> PolyRows {
    vec![vec![-1.0, 1.0, 0.0], vec![-1.0, 0.0, 1.0], vec![-1.0, 3.0, 0.0]]
}

/// Sample sizes used by the load-time checks.
const A_CHECK_POINTS: usize = 25;
const RANK_CHECK_POINTS: usize = 100;
/// Grid on which the gain interpolants are certified.
pub const GAIN_GRID: (f64, f64, usize) = (1e-3, 1e3, 50);

#[derive(Debug, Clone)]
pub enum Plant {
    Affine(ClfController),
    Composite(CompositeController),
}

/// A scenario ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub plant: Plant,
    /// Lower envelope a₁(|x|) ≤ Φ(x) of the certified value, when known.
    pub a1: Option<ClassKFn>,
    pub default_x0: State,
    /// Load-time rank report for composite scenarios.
    pub rank: Option<RankReport>,
}

impl Scenario {
    pub fn controller(&self) -> &dyn Controller {
        match &self.plant {
            Plant::Affine(c) => c,
            Plant::Composite(c) => c,
        }
    }

    pub fn system(&self) -> &ControlSystem {
        self.controller().system()
    }

    /// Name of the certified value in reports: Φ or Ψ₁.
    pub fn value_name(&self) -> &'static str {
        match self.plant {
            Plant::Affine(_) => "phi",
            Plant::Composite(_) => "psi1",
        }
    }
}

fn check_example1_a(a: &Polynomial) -> Result<()> {
    let at = |x1: f64, x2: f64| a.eval(&State::from_vec(vec![x1, x2]));
    let fail = |what: String| Err(Error::Validation(format!("example1.a: {what}")));
    if at(0.0, 0.0).abs() > 1e-12 {
        return fail(format!("a(0,0) = {} must vanish", at(0.0, 0.0)));
    }
    let mags = geometric_grid(1e-2, 10.0, A_CHECK_POINTS);
    for x1 in mags.iter().flat_map(|m| [*m, -*m]) {
        if !(x1 * at(x1, x1) < 0.0) {
            return fail(format!("x1·a(x1,x1) must be negative, fails at x1 = {x1}"));
        }
        if at(x1, -x1) == 0.0 || !at(x1, -x1).is_finite() {
            return fail(format!("a(x1,-x1) must not vanish, fails at x1 = {x1}"));
        }
    }
    Ok(())
}

/// Hand-coded (a, a) for the default a, the hot path of most runs.
fn default_example1_drift() -> VectorField {
    let a = |x: &State| -(x[0] + x[1]) - x[0].powi(3);
    VectorField::new(2, move |x| {
        let v = a(x);
        State::from_vec(vec![v, v])
    })
    .with_jacobian(|x| {
        let d1 = -1.0 - 3.0 * x[0] * x[0];
        Matrix::from_row_slice(2, 2, &[d1, -1.0, d1, -1.0])
    })
}

/// ẋ = (a, a) + u·(x₁, −x₂) with V = ½|x|².
pub fn example1(a_rows: Option<&PolyRows>, cfg: &ScenarioConfig) -> Result<Scenario> {
    let default_rows = example1_default_a();
    let a = Polynomial::from_rows(2, a_rows.unwrap_or(&default_rows))?;
    check_example1_a(&a)?;
    let f = match a_rows {
        Some(_) => poly_field(vec![a.clone(), a]),
        None => default_example1_drift(),
    };
    let g = VectorField::linear(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
    let sys = ControlSystem::affine(f, g)?;
    Ok(Scenario {
        name: "example1".into(),
        plant: Plant::Affine(ClfController {
            sys,
            phi: ScalarField::half_norm_sq(2),
            cfg: cfg.sdf_config(),
        }),
        a1: Some(ClassKFn::power(0.5, 2.0)?),
        default_x0: State::from_vec(vec![1.0, -1.0]),
        rank: None,
    })
}

/// The gain data of the composite example: a = b = s², γ₁ = 2s, Γ₂ = s.
pub fn example2_gains() -> Result<Gains> {
    let sq = ClassKFn::power(1.0, 2.0)?;
    Ok(Gains {
        a1: sq.clone(),
        a2: sq.clone(),
        b1: sq.clone(),
        b2: sq,
        gamma1: ClassKFn::linear(2.0)?,
        gamma2: ClassKFn::linear(1.0)?,
    })
}

/// ξ̇ = u₁(x, y) + u₂(x³, −y³) on ℝ × ℝ with V = x², W = y².
pub fn example2_system() -> Result<CompositeSystem> {
    let x = |e: [f64; 2], c: f64| vec![c, e[0], e[1]];
    let f1 = poly_field(vec![
        Polynomial::from_rows(2, &[x([1.0, 0.0], 1.0)])?,
        Polynomial::from_rows(2, &[x([0.0, 1.0], 1.0)])?,
    ]);
    let f2 = poly_field(vec![
        Polynomial::from_rows(2, &[x([3.0, 0.0], 1.0)])?,
        Polynomial::from_rows(2, &[x([0.0, 3.0], -1.0)])?,
    ]);
    CompositeSystem::new(ControlSystem::driftless(vec![f1, f2])?, 1)
}

pub fn example2(cfg: &ScenarioConfig) -> Result<Scenario> {
    let comp = example2_system()?;
    let gains = example2_gains()?;
    let points = random_annulus_points(2, 0.1, 3.0, RANK_CHECK_POINTS, cfg.seed, true);
    let rank = check_rank_conditions(&comp, &gains, &points)?;
    if !rank.passed() {
        let f = &rank.failures[0];
        return Err(Error::Validation(format!(
            "example2: rank {} < {} ({:?}) at {:?}",
            f.rank,
            f.required,
            f.condition,
            f.point.as_slice()
        )));
    }
    let (lo, hi, n) = GAIN_GRID;
    let setup = GainSetup::new(
        ScalarField::scaled_norm_sq(1, 1.0),
        ScalarField::scaled_norm_sq(1, 1.0),
        gains,
        &geometric_grid(lo, hi, n),
    )?;
    Ok(Scenario {
        name: "example2".into(),
        plant: Plant::Composite(CompositeController {
            comp,
            setup,
            cfg: cfg.search_config(),
        }),
        a1: None,
        default_x0: State::from_vec(vec![1.0, 1.0]),
        rank: Some(rank),
    })
}

fn poly_components(name: &str, dim: usize, rows: &[PolyRows]) -> Result<VectorField> {
    if rows.len() != dim {
        return Err(Error::Validation(format!("custom.{name}: expected {dim} components, got {}", rows.len())));
    }
    let comps = rows
        .iter()
        .map(|r| Polynomial::from_rows(dim, r))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Validation(format!("custom.{name}: {e}")))?;
    Ok(poly_field(comps))
}

pub fn custom(params: &CustomParams, cfg: &ScenarioConfig) -> Result<Scenario> {
    let n = params.f.len();
    if n == 0 {
        return Err(Error::Validation("custom.f: needs at least one component".into()));
    }
    let f = poly_components("f", n, &params.f)?;
    let g = poly_components("g", n, &params.g)?;
    if params.clf.len() != n || params.clf.iter().any(|r| r.len() != n) {
        return Err(Error::Validation(format!("custom.clf: expected a {n}×{n} matrix")));
    }
    let p = Matrix::from_fn(n, n, |i, j| params.clf[i][j]);
    let sym = (&p + p.transpose()) * 0.5;
    let lambda_min = SymmetricEigen::new(sym.clone()).eigenvalues.min();
    if !(lambda_min > 0.0) {
        return Err(Error::Validation("custom.clf: matrix must be positive definite".into()));
    }
    let sys = ControlSystem::affine(f, g).map_err(|e| Error::Validation(format!("custom: {e}")))?;
    Ok(Scenario {
        name: "custom".into(),
        plant: Plant::Affine(ClfController {
            sys,
            phi: ScalarField::quadratic(sym),
            cfg: cfg.sdf_config(),
        }),
        a1: Some(ClassKFn::power(0.5 * lambda_min, 2.0)?),
        default_x0: State::from_element(n, 1.0),
        rank: None,
    })
}

/// Build the scenario a validated config names.
pub fn build(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    match cfg.scenario.as_str() {
        "example1" => example1(cfg.example1.as_ref().map(|p| &p.a), cfg),
        "example2" => example2(cfg),
        "custom" => custom(cfg.custom.as_ref().expect("validated"), cfg),
        other => Err(Error::Validation(format!("scenario: unknown scenario {other:?}"))),
    }
}
