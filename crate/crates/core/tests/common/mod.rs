//! Closed-form oracles shared by the integration tests. Nothing here calls
//! into the library's differentiation code.
#![allow(dead_code)]

use rand::Rng;

/// Sparse polynomial: (coefficient, exponents).
#[derive(Debug, Clone)]
pub struct OraclePoly(pub Vec<(f64, Vec<u32>)>);

impl OraclePoly {
    pub fn random<R: Rng>(rng: &mut R, dim: usize, terms: usize, max_deg: u32) -> Self {
        OraclePoly(
            (0..terms)
                .map(|_| {
                    let e = (0..dim).map(|_| rng.random_range(0..=max_deg)).collect();
                    (rng.random_range(-1.0..1.0), e)
                })
                .collect(),
        )
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(k, v)| v.powi(*k as i32)).product::<f64>())
            .sum()
    }

    /// ∂/∂xᵢ evaluated at x.
    pub fn partial(&self, i: usize, x: &[f64]) -> f64 {
        self.0
            .iter()
            .filter(|(_, e)| e[i] > 0)
            .map(|(c, e)| {
                let mut p = c * e[i] as f64;
                for (j, (k, v)) in e.iter().zip(x).enumerate() {
                    let k = if j == i { k - 1 } else { *k };
                    p *= v.powi(k as i32);
                }
                p
            })
            .sum()
    }

    /// Rows `[coefficient, e₁, …, eₙ]` as accepted by the library.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0
            .iter()
            .map(|(c, e)| std::iter::once(*c).chain(e.iter().map(|k| *k as f64)).collect())
            .collect()
    }
}

/// A polynomial vector field, one polynomial per component.
pub struct OracleField(pub Vec<OraclePoly>);

impl OracleField {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.0.iter().map(|p| p.eval(x)).collect()
    }

    /// (DF·v)ᵢ = Σⱼ ∂Fᵢ/∂xⱼ vⱼ.
    pub fn jac_times(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.0
            .iter()
            .map(|p| (0..x.len()).map(|j| p.partial(j, x) * v[j]).sum())
            .collect()
    }
}

/// [X,Y]Φ = ∇Φ·(DY·X − DX·Y), entirely from the oracle polynomials.
pub fn bracket_phi(xf: &OracleField, yf: &OracleField, phi: &OraclePoly, x: &[f64]) -> f64 {
    let (xv, yv) = (xf.eval(x), yf.eval(x));
    let dyx = yf.jac_times(x, &xv);
    let dxy = xf.jac_times(x, &yv);
    (0..x.len()).map(|i| phi.partial(i, x) * (dyx[i] - dxy[i])).sum()
}

/// Example 1: a(x₁,x₂) = −(x₁+x₂) − x₁³, f = (a, a), g = (x₁, −x₂), V = ½|x|².
pub mod ex1 {
    pub fn a(x: &[f64]) -> f64 {
        -(x[0] + x[1]) - x[0].powi(3)
    }
    pub fn v(x: &[f64]) -> f64 {
        0.5 * (x[0] * x[0] + x[1] * x[1])
    }
    pub fn f_v(x: &[f64]) -> f64 {
        a(x) * (x[0] + x[1])
    }
    pub fn g_v(x: &[f64]) -> f64 {
        x[0] * x[0] - x[1] * x[1]
    }
    /// [f,g]V = a·(x₁ − x₂) − (x₁ + x₂)·(∇a·g), ∇a = (−1 − 3x₁², −1).
    pub fn bracket_v(x: &[f64]) -> f64 {
        let grad_a_g = (-1.0 - 3.0 * x[0] * x[0]) * x[0] + x[1];
        a(x) * (x[0] - x[1]) - (x[0] + x[1]) * grad_a_g
    }
    /// d/dt V along f + u·g.
    pub fn v_dot(x: &[f64], u: f64) -> f64 {
        f_v(x) + u * g_v(x)
    }
    /// |x(t)| ≤ a₁⁻¹(1.5·V(x₀)) with a₁(s) = s²/2.
    pub fn excursion_bound(v0: f64) -> f64 {
        (2.0 * 1.5 * v0).sqrt()
    }
}

/// Example 2: F₁ = (x, y), F₂ = (x³, −y³), V = x², W = y², ℓ₁(s) = 2s.
pub mod ex2 {
    pub fn lower(s: f64) -> f64 {
        s
    }
    pub fn upper(s: f64) -> f64 {
        4.0 * s
    }
    pub fn ell1(s: f64) -> f64 {
        lower(s) + (upper(s) - lower(s)) / 3.0
    }
    /// (A₁)ₓA₂ − (A₂)ₓA₁, (B₁)ᵧB₂ − (B₂)ᵧB₁ and A₁B₂ − A₂B₁.
    pub fn rank_witnesses(x: f64, y: f64) -> (f64, f64, f64) {
        (-2.0 * x.powi(3), 2.0 * y.powi(3), -x * y * (x * x + y * y))
    }
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-12
}
