//! Multivariate polynomials and polynomial vector fields with exact
//! derivatives. Used by user-defined scenarios.

use serde::{Deserialize, Serialize};

use super::{Matrix, ScalarField, State, VectorField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    /// Build from `[coef, e1, e2, …]` rows, the config-file representation.
    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut terms = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != dim + 1 {
                return Err(Error::Validation(format!(
                    "polynomial term needs 1 coefficient and {dim} exponents, got {} entries",
                    row.len()
                )));
            }
            let mut exponents = Vec::with_capacity(dim);
            for &e in &row[1..] {
                if e < 0.0 || e.fract() != 0.0 || e > 64.0 {
                    return Err(Error::Validation(format!("exponent {e} is not a small non-negative integer")));
                }
                exponents.push(e as u32);
            }
            terms.push(Monomial { coef: row[0], exponents });
        }
        Ok(Polynomial { terms })
    }

    pub fn eval(&self, x: &State) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * t.exponents.iter().zip(x.iter()).map(|(e, xi)| xi.powi(*e as i32)).product::<f64>())
            .sum()
    }

    /// ∂/∂xᵢ as a new polynomial.
    pub fn derivative(&self, i: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exponents[i] > 0)
            .map(|t| {
                let mut exponents = t.exponents.clone();
                let e = exponents[i];
                exponents[i] -= 1;
                Monomial {
                    coef: t.coef * e as f64,
                    exponents,
                }
            })
            .collect();
        Polynomial { terms }
    }

    pub fn gradient(&self, dim: usize) -> Vec<Polynomial> {
        (0..dim).map(|i| self.derivative(i)).collect()
    }
}

/// Vector field whose components are polynomials; the Jacobian is exact.
pub fn poly_field(components: Vec<Polynomial>) -> VectorField {
    let dim = components.len();
    let jac: Vec<Vec<Polynomial>> = components.iter().map(|p| p.gradient(dim)).collect();
    VectorField::new(dim, move |x| State::from_iterator(dim, components.iter().map(|p| p.eval(x))))
        .with_jacobian(move |x| Matrix::from_fn(dim, dim, |i, j| jac[i][j].eval(x)))
}

/// Scalar polynomial with exact gradient and Hessian.
pub fn poly_scalar(dim: usize, p: Polynomial) -> ScalarField {
    let grad = p.gradient(dim);
    let hess: Vec<Vec<Polynomial>> = grad.iter().map(|g| g.gradient(dim)).collect();
    ScalarField::new(dim, move |x| p.eval(x))
        .with_gradient(move |x| State::from_iterator(dim, grad.iter().map(|g| g.eval(x))))
        .with_hessian(move |x| Matrix::from_fn(dim, dim, |i, j| hess[i][j].eval(x)))
}
