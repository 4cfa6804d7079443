use super::{check_dim, ControlSystem, ScalarField, State, VectorField, FD_STEP_NESTED};
use crate::error::{Error, Result, Witnesses};
use crate::par::{self, Exec};

fn finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerics(what))
    }
}

/// (XΦ)(x) = DΦ(x)·X(x).
pub fn lie_derivative(field: &VectorField, phi: &ScalarField, x: &State) -> Result<f64> {
    check_dim(phi.dim(), field.dim())?;
    let grad = phi.gradient(x)?;
    let v = field.eval(x)?;
    finite(grad.dot(&v), "lie derivative")
}

/// X(YΦ)(x): the derivative along X of y ↦ DΦ(y)·Y(y), equal to
/// X·D²Φ·Y + DΦ·DY·X.
pub fn second_lie(x_field: &VectorField, y_field: &VectorField, phi: &ScalarField, x: &State) -> Result<f64> {
    check_dim(phi.dim(), x_field.dim())?;
    check_dim(phi.dim(), y_field.dim())?;
    let hess = phi.hessian(x)?;
    let (xv, yv) = (x_field.eval(x)?, y_field.eval(x)?);
    let curvature = xv.dot(&(&hess * &yv));
    finite(curvature + product_derivative(x_field, y_field, phi, x)?, "second lie derivative")
}

/// DΦ(x)·(DY(x)·X(x)): the first-order pairing of Φ with the product field
/// XY := DY·X, without the Hessian term.
pub fn product_derivative(x_field: &VectorField, y_field: &VectorField, phi: &ScalarField, x: &State) -> Result<f64> {
    check_dim(phi.dim(), x_field.dim())?;
    check_dim(phi.dim(), y_field.dim())?;
    let grad = phi.gradient(x)?;
    let dy = y_field.jacobian(x)?;
    let xv = x_field.eval(x)?;
    finite(grad.dot(&(dy * xv)), "product derivative")
}

/// [X,Y](x) = DY(x)·X(x) − DX(x)·Y(x). The result's Jacobian is numeric.
pub fn bracket(x_field: &VectorField, y_field: &VectorField) -> Result<VectorField> {
    check_dim(x_field.dim(), y_field.dim())?;
    let (xf, yf) = (x_field.clone(), y_field.clone());
    let dim = xf.dim();
    Ok(VectorField::new(dim, move |s| {
        let (xv, yv) = (xf.call(s), yf.call(s));
        let dy = yf.jacobian(s).unwrap_or_else(|_| super::Matrix::from_element(dim, dim, f64::NAN));
        let dx = xf.jacobian(s).unwrap_or_else(|_| super::Matrix::from_element(dim, dim, f64::NAN));
        dy * xv - dx * yv
    })
    .with_fd_step(FD_STEP_NESTED))
}

/// Which branch of the CLF implication failed at a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClfClause {
    /// gΦ ≈ 0 and fΦ > tol.
    DriftIncreasing,
    /// gΦ ≈ 0, fΦ ≈ 0 and [f,g]Φ ≈ 0.
    BracketVanishes,
    /// Some derivative could not be evaluated.
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct ClfViolation {
    pub point: State,
    pub clause: ClfClause,
    pub witnesses: Option<Witnesses>,
}

#[derive(Debug, Clone)]
pub struct ClfReport {
    pub checked: usize,
    /// Points where gΦ ≈ 0, i.e. where the implication is not vacuous.
    pub singular: usize,
    pub violations: Vec<ClfViolation>,
}

impl ClfReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub(crate) fn affine_witnesses(sys: &ControlSystem, phi: &ScalarField, x: &State) -> Result<Witnesses> {
    let (f, g) = sys.affine_parts()?;
    Ok(Witnesses {
        f_phi: lie_derivative(f, phi, x)?,
        g_phi: lie_derivative(g, phi, x)?,
        bracket_phi: lie_derivative(&bracket(f, g)?, phi, x)?,
    })
}

/// Check the implication
/// gΦ = 0 ⇒ fΦ < 0, or fΦ = 0 and [f,g]Φ ≠ 0
/// at every grid point, with `tol` as the numerical zero.
pub fn check_clf_implication(sys: &ControlSystem, phi: &ScalarField, grid: &[State], tol: f64) -> Result<ClfReport> {
    check_clf_implication_with(Exec::available(), sys, phi, grid, tol)
}

pub fn check_clf_implication_with(
    exec: Exec,
    sys: &ControlSystem,
    phi: &ScalarField,
    grid: &[State],
    tol: f64,
) -> Result<ClfReport> {
    sys.affine_parts()?;
    check_dim(sys.state_dim(), phi.dim())?;
    let outcomes = par::map(exec, grid, |x| match affine_witnesses(sys, phi, x) {
        Err(_) => (false, Some((ClfClause::NonFinite, None))),
        Ok(w) if w.g_phi.abs() > tol => (false, None),
        Ok(w) if w.f_phi < -tol => (true, None),
        Ok(w) if w.f_phi.abs() <= tol && w.bracket_phi.abs() > tol => (true, None),
        Ok(w) if w.f_phi.abs() <= tol => (true, Some((ClfClause::BracketVanishes, Some(w)))),
        Ok(w) => (true, Some((ClfClause::DriftIncreasing, Some(w)))),
    });
    let singular = outcomes.iter().filter(|(s, _)| *s).count();
    let violations = grid
        .iter()
        .zip(outcomes)
        .filter_map(|(p, (_, v))| {
            v.map(|(clause, witnesses)| ClfViolation {
                point: p.clone(),
                clause,
                witnesses,
            })
        })
        .collect();
    Ok(ClfReport {
        checked: grid.len(),
        singular,
        violations,
    })
}
