use crate::dynamics::{bracket, check_dim, ControlSystem, Matrix, State, VectorField};
use crate::error::{Error, Result};

/// A driftless system on ℝⁿ × ℝᵐ, ξ̇ = Σ uᵢ Fᵢ(ξ) with Fᵢ = (Aᵢ, Bᵢ).
#[derive(Debug, Clone)]
pub struct CompositeSystem {
    sys: ControlSystem,
    nx: usize,
    ny: usize,
}

impl CompositeSystem {
    pub fn new(sys: ControlSystem, nx: usize) -> Result<Self> {
        sys.driftless_fields()?;
        if nx == 0 || nx >= sys.state_dim() {
            return Err(Error::Validation(format!(
                "x-dimension {nx} must split a state of dimension {}",
                sys.state_dim()
            )));
        }
        let ny = sys.state_dim() - nx;
        Ok(CompositeSystem { sys, nx, ny })
    }

    pub fn system(&self) -> &ControlSystem {
        &self.sys
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn fields(&self) -> &[VectorField] {
        self.sys.driftless_fields().expect("checked at construction")
    }

    pub fn split(&self, xi: &State) -> (State, State) {
        (xi.rows(0, self.nx).into_owned(), xi.rows(self.nx, self.ny).into_owned())
    }

    pub fn join(&self, x: &State, y: &State) -> State {
        State::from_iterator(self.nx + self.ny, x.iter().chain(y.iter()).copied())
    }

    /// Fields x ↦ Aᵢ(x, y0).
    pub fn frozen_x_fields(&self, y0: &State) -> Vec<VectorField> {
        let (nx, ny) = (self.nx, self.ny);
        self.fields()
            .iter()
            .map(|f| {
                let (f, y0) = (f.clone(), y0.clone());
                VectorField::new(nx, move |x| {
                    let xi = State::from_iterator(nx + ny, x.iter().chain(y0.iter()).copied());
                    f.call(&xi).rows(0, nx).into_owned()
                })
            })
            .collect()
    }

    /// Fields y ↦ Bᵢ(x0, y).
    pub fn frozen_y_fields(&self, x0: &State) -> Vec<VectorField> {
        let (nx, ny) = (self.nx, self.ny);
        self.fields()
            .iter()
            .map(|f| {
                let (f, x0) = (f.clone(), x0.clone());
                VectorField::new(ny, move |y| {
                    let xi = State::from_iterator(nx + ny, x0.iter().chain(y.iter()).copied());
                    f.call(&xi).rows(nx, ny).into_owned()
                })
            })
            .collect()
    }

    /// Ẋ = Σ uᵢ Aᵢ(X, y0): the x-part of the system with y frozen. A frozen
    /// field need not vanish at the origin of its factor.
    pub fn frozen_x_system(&self, y0: &State) -> Result<ControlSystem> {
        ControlSystem::driftless_unchecked(self.frozen_x_fields(y0))
    }

    /// Ẏ = Σ uᵢ Bᵢ(x0, Y): the y-part of the system with x frozen.
    pub fn frozen_y_system(&self, x0: &State) -> Result<ControlSystem> {
        ControlSystem::driftless_unchecked(self.frozen_y_fields(x0))
    }
}

/// Span dimension of the Lie algebra generated by `fields` at `p`, using
/// the generators, their pairwise brackets, and brackets of those with the
/// generators, stopping early once `required` is reached.
pub fn lie_rank(fields: &[VectorField], p: &State, required: usize) -> Result<usize> {
    let n = p.len();
    for f in fields {
        check_dim(n, f.dim())?;
    }
    let mut columns: Vec<State> = fields.iter().map(|f| f.call(p)).collect();
    let mut r = rank(&columns, n);
    if r >= required {
        return Ok(r);
    }
    let mut depth1 = Vec::new();
    for i in 0..fields.len() {
        for j in (i + 1)..fields.len() {
            depth1.push(bracket(&fields[i], &fields[j])?);
        }
    }
    columns.extend(depth1.iter().map(|b| b.call(p)));
    r = rank(&columns, n);
    if r >= required {
        return Ok(r);
    }
    for b in &depth1 {
        for g in fields {
            columns.push(bracket(b, g)?.call(p));
        }
    }
    Ok(rank(&columns, n))
}

fn rank(columns: &[State], n: usize) -> usize {
    if columns.is_empty() || columns.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return 0;
    }
    let m = Matrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let sv = m.svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > 1e-8 * top).count()
}
