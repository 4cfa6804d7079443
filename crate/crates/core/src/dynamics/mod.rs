//! Vector-field and scalar-field algebra.
//!
//! Fields are immutable, cheaply clonable handles around `Send + Sync`
//! closures. Derivatives come from an analytic form when one is attached and
//! from central finite differences otherwise.

mod fd;
pub(crate) mod lie;
pub mod poly;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use lie::{
    bracket, check_clf_implication, check_clf_implication_with, lie_derivative,
    product_derivative, second_lie, ClfClause, ClfReport, ClfViolation,
};

pub type State = DVector<f64>;
pub type Matrix = DMatrix<f64>;

type VecFn = Arc<dyn Fn(&State) -> State + Send + Sync>;
type MatFn = Arc<dyn Fn(&State) -> Matrix + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&State) -> f64 + Send + Sync>;
type GeneralFn = Arc<dyn Fn(&State, &State) -> State + Send + Sync>;

/// Relative finite-difference step for gradients and Jacobians.
pub const FD_STEP: f64 = 1e-6;
/// Relative finite-difference step for nested second-order terms.
pub const FD_STEP_NESTED: f64 = 1e-4;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

pub(crate) fn finite_vec(v: State, what: &'static str) -> Result<State> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Numerics(what))
    }
}

/// A map ℝⁿ → ℝⁿ with an optional analytic Jacobian.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    eval: VecFn,
    jacobian: Option<MatFn>,
    fd_step: f64,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&State) -> State + Send + Sync + 'static,
    {
        assert!(dim > 0, "vector field dimension must be positive");
        VectorField {
            dim,
            eval: Arc::new(eval),
            jacobian: None,
            fd_step: FD_STEP,
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&State) -> Matrix + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// Override the relative step used when the Jacobian is differenced.
    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    pub fn zero(dim: usize) -> Self {
        VectorField::new(dim, move |_| State::zeros(dim)).with_jacobian(move |_| Matrix::zeros(dim, dim))
    }

    pub fn constant(v: State) -> Self {
        let dim = v.len();
        VectorField::new(dim, move |_| v.clone()).with_jacobian(move |_| Matrix::zeros(dim, dim))
    }

    /// x ↦ A·x.
    pub fn linear(a: Matrix) -> Self {
        assert!(a.is_square(), "linear field needs a square matrix");
        let dim = a.nrows();
        let j = a.clone();
        VectorField::new(dim, move |x| &a * x).with_jacobian(move |_| j.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// Raw evaluation without dimension or finiteness checks.
    #[inline]
    pub fn call(&self, x: &State) -> State {
        (self.eval)(x)
    }

    pub fn eval(&self, x: &State) -> Result<State> {
        check_dim(self.dim, x.len())?;
        let v = (self.eval)(x);
        check_dim(self.dim, v.len())?;
        finite_vec(v, "vector field")
    }

    pub fn jacobian(&self, x: &State) -> Result<Matrix> {
        check_dim(self.dim, x.len())?;
        let j = match &self.jacobian {
            Some(j) => j(x),
            None => self.numeric_jacobian(x),
        };
        if j.iter().all(|c| c.is_finite()) {
            Ok(j)
        } else {
            Err(Error::Numerics("jacobian"))
        }
    }

    /// Central-difference Jacobian regardless of any analytic form.
    pub fn numeric_jacobian(&self, x: &State) -> Matrix {
        fd::jacobian(&*self.eval, x, self.dim, self.fd_step)
    }

    /// a·X + b·Y.
    pub fn lin_comb(a: f64, x: &VectorField, b: f64, y: &VectorField) -> Result<VectorField> {
        check_dim(x.dim, y.dim)?;
        let (fx, fy) = (x.eval.clone(), y.eval.clone());
        let mut out = VectorField::new(x.dim, move |s| fx(s) * a + fy(s) * b);
        if let (Some(jx), Some(jy)) = (x.jacobian.clone(), y.jacobian.clone()) {
            out = out.with_jacobian(move |s| jx(s) * a + jy(s) * b);
        }
        Ok(out)
    }
}

/// A scalar map ℝⁿ → ℝ with optional analytic gradient and Hessian.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    value: ScalarFn,
    gradient: Option<VecFn>,
    hessian: Option<MatFn>,
    positive_definite: bool,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("analytic_gradient", &self.gradient.is_some())
            .field("analytic_hessian", &self.hessian.is_some())
            .field("positive_definite", &self.positive_definite)
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(dim: usize, value: F) -> Self
    where
        F: Fn(&State) -> f64 + Send + Sync + 'static,
    {
        assert!(dim > 0, "scalar field dimension must be positive");
        ScalarField {
            dim,
            value: Arc::new(value),
            gradient: None,
            hessian: None,
            positive_definite: false,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&State) -> State + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_hessian<H>(mut self, hessian: H) -> Self
    where
        H: Fn(&State) -> Matrix + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn positive_definite(mut self, flag: bool) -> Self {
        self.positive_definite = flag;
        self
    }

    /// Φ(x) = ½ xᵀ P x with analytic derivatives. `p` is symmetrized.
    pub fn quadratic(p: Matrix) -> Self {
        assert!(p.is_square(), "quadratic form needs a square matrix");
        let p = (&p + p.transpose()) * 0.5;
        let dim = p.nrows();
        let (pv, pg, ph) = (p.clone(), p.clone(), p);
        ScalarField::new(dim, move |x| 0.5 * x.dot(&(&pv * x)))
            .with_gradient(move |x| &pg * x)
            .with_hessian(move |_| ph.clone())
            .positive_definite(true)
    }

    /// Φ(x) = ½|x|².
    pub fn half_norm_sq(dim: usize) -> Self {
        ScalarField::quadratic(Matrix::identity(dim, dim))
    }

    /// Φ(x) = k·|x|².
    pub fn scaled_norm_sq(dim: usize, k: f64) -> Self {
        ScalarField::quadratic(Matrix::identity(dim, dim) * (2.0 * k))
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        ScalarField::new(dim, move |_| c)
            .with_gradient(move |_| State::zeros(dim))
            .with_hessian(move |_| Matrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_positive_definite(&self) -> bool {
        self.positive_definite
    }

    #[inline]
    pub fn call(&self, x: &State) -> f64 {
        (self.value)(x)
    }

    pub fn value(&self, x: &State) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let v = (self.value)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerics("scalar field"))
        }
    }

    pub fn gradient(&self, x: &State) -> Result<State> {
        check_dim(self.dim, x.len())?;
        let g = match &self.gradient {
            Some(g) => g(x),
            None => self.numeric_gradient(x),
        };
        finite_vec(g, "gradient")
    }

    pub fn hessian(&self, x: &State) -> Result<Matrix> {
        check_dim(self.dim, x.len())?;
        let h = match (&self.hessian, &self.gradient) {
            (Some(h), _) => h(x),
            (None, Some(g)) => fd::hessian_from_gradient(&**g, x, FD_STEP_NESTED),
            (None, None) => self.numeric_hessian(x),
        };
        if h.iter().all(|c| c.is_finite()) {
            Ok(h)
        } else {
            Err(Error::Numerics("hessian"))
        }
    }

    pub fn numeric_gradient(&self, x: &State) -> State {
        fd::gradient(&*self.value, x, FD_STEP)
    }

    /// Second differences of the value alone.
    pub fn numeric_hessian(&self, x: &State) -> Matrix {
        fd::hessian(&*self.value, x, FD_STEP_NESTED)
    }
}

/// Dynamics in one of the three supported shapes.
#[derive(Clone)]
pub enum Shape {
    /// ẋ = F(x, u).
    General(GeneralFn),
    /// ẋ = f(x) + u·g(x), single input.
    Affine { drift: VectorField, input: VectorField },
    /// ẋ = Σ uᵢ Fᵢ(x).
    Driftless(Vec<VectorField>),
}

#[derive(Clone)]
pub struct ControlSystem {
    shape: Shape,
    state_dim: usize,
    input_dim: usize,
}

impl fmt::Debug for ControlSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.shape {
            Shape::General(_) => "general",
            Shape::Affine { .. } => "affine",
            Shape::Driftless(_) => "driftless",
        };
        f.debug_struct("ControlSystem")
            .field("shape", &kind)
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .finish()
    }
}

const EQUILIBRIUM_TOL: f64 = 1e-12;

fn require_equilibrium(v: &State, what: &str) -> Result<()> {
    if v.iter().all(|c| c.abs() <= EQUILIBRIUM_TOL) {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} does not vanish at the origin")))
    }
}

impl ControlSystem {
    pub fn general<F>(state_dim: usize, input_dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&State, &State) -> State + Send + Sync + 'static,
    {
        let at_origin = f(&State::zeros(state_dim), &State::zeros(input_dim));
        check_dim(state_dim, at_origin.len())?;
        require_equilibrium(&at_origin, "F(0,0)")?;
        Ok(ControlSystem {
            shape: Shape::General(Arc::new(f)),
            state_dim,
            input_dim,
        })
    }

    pub fn affine(drift: VectorField, input: VectorField) -> Result<Self> {
        check_dim(drift.dim(), input.dim())?;
        let n = drift.dim();
        require_equilibrium(&drift.eval(&State::zeros(n))?, "f(0)")?;
        Ok(ControlSystem {
            shape: Shape::Affine { drift, input },
            state_dim: n,
            input_dim: 1,
        })
    }

    pub fn driftless(fields: Vec<VectorField>) -> Result<Self> {
        let first = fields.first().ok_or(Error::Shape("driftless system needs at least one field"))?;
        let n = first.dim();
        for (i, fi) in fields.iter().enumerate() {
            check_dim(n, fi.dim())?;
            require_equilibrium(&fi.eval(&State::zeros(n))?, &format!("F{}(0)", i + 1))?;
        }
        Ok(ControlSystem {
            input_dim: fields.len(),
            shape: Shape::Driftless(fields),
            state_dim: n,
        })
    }

    /// Driftless system without the equilibrium check.
    pub(crate) fn driftless_unchecked(fields: Vec<VectorField>) -> Result<Self> {
        let first = fields.first().ok_or(Error::Shape("driftless system needs at least one field"))?;
        let n = first.dim();
        for fi in &fields {
            check_dim(n, fi.dim())?;
        }
        Ok(ControlSystem {
            input_dim: fields.len(),
            shape: Shape::Driftless(fields),
            state_dim: n,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// (f, g) of an affine system.
    pub fn affine_parts(&self) -> Result<(&VectorField, &VectorField)> {
        match &self.shape {
            Shape::Affine { drift, input } => Ok((drift, input)),
            _ => Err(Error::Shape("expected an affine system")),
        }
    }

    pub fn driftless_fields(&self) -> Result<&[VectorField]> {
        match &self.shape {
            Shape::Driftless(fields) => Ok(fields),
            _ => Err(Error::Shape("expected a driftless system")),
        }
    }

    /// Right-hand side F(x, u) without checks; the integrator's hot path.
    #[inline]
    pub fn rhs(&self, x: &State, u: &State) -> State {
        match &self.shape {
            Shape::General(f) => f(x, u),
            Shape::Affine { drift, input } => drift.call(x) + input.call(x) * u[0],
            Shape::Driftless(fields) => {
                let mut v = State::zeros(self.state_dim);
                for (fi, ui) in fields.iter().zip(u.iter()) {
                    if *ui != 0.0 {
                        v.axpy(*ui, &fi.call(x), 1.0);
                    }
                }
                v
            }
        }
    }

    /// For an affine system, the closed vector field f + u·g.
    pub fn affine_with_input(&self, u: f64) -> Result<VectorField> {
        let (f, g) = self.affine_parts()?;
        VectorField::lin_comb(1.0, f, u, g)
    }
}
