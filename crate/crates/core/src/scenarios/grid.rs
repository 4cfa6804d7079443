use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::State;
use crate::error::{Error, Result};

/// Parse `rmin:rmax:n`.
pub fn parse_annulus(spec: &str) -> Result<(f64, f64, usize)> {
    let bad = || Error::Validation(format!("grid-annulus: expected rmin:rmax:n, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
    let (lo, hi): (f64, f64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite() && n > 0) {
        return Err(bad());
    }
    Ok((lo, hi, n))
}

/// Exactly `n` points on concentric circles between `rmin` and `rmax`.
///
/// The angle count is a multiple of eight so that both diagonals are
/// sampled; rings are filled in order of increasing radius.
pub fn annulus_grid(rmin: f64, rmax: f64, n: usize) -> Vec<State> {
    if n == 0 {
        return Vec::new();
    }
    let angles = (((2.0 * (n as f64).sqrt()) as usize) / 8 * 8).max(8);
    let rings = n.div_ceil(angles);
    let radius = |k: usize| {
        if rings == 1 {
            rmin
        } else {
            rmin + (rmax - rmin) * k as f64 / (rings - 1) as f64
        }
    };
    (0..rings)
        .flat_map(|k| {
            (0..angles).map(move |j| {
                let th = TAU * j as f64 / angles as f64;
                State::from_vec(vec![radius(k) * th.cos(), radius(k) * th.sin()])
            })
        })
        .take(n)
        .collect()
}

/// `n` seeded random points with rmin ≤ |p| ≤ rmax, isotropic in direction
/// and uniform in radius; with `nonzero_coords`, every coordinate is
/// bounded away from zero.
pub fn random_annulus_points(dim: usize, rmin: f64, rmax: f64, n: usize, seed: u64, nonzero_coords: bool) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let d = State::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
        let norm = d.norm();
        if !(norm > 1e-3 && norm <= 1.0) {
            continue;
        }
        let p = d * (rng.random_range(rmin..=rmax) / norm);
        if nonzero_coords && p.iter().any(|c| c.abs() < 1e-6) {
            continue;
        }
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_has_exact_count_and_diagonals() {
        let g = annulus_grid(0.2, 3.0, 100);
        assert_eq!(g.len(), 100);
        assert!(g.iter().all(|p| p.norm() >= 0.2 - 1e-12 && p.norm() <= 3.0 + 1e-12));
        assert!(g.iter().any(|p| (p[0] + p[1]).abs() < 1e-12 && p[0] > 0.0));
        assert_eq!(annulus_grid(1.0, 1.0, 3).len(), 3);
    }

    #[test]
    fn parse_annulus_spec() {
        assert_eq!(parse_annulus("0.2:3:100").unwrap(), (0.2, 3.0, 100));
        assert!(parse_annulus("3:0.2:100").is_err());
        assert!(parse_annulus("0.2:3").is_err());
        assert!(parse_annulus("0:3:10").is_err());
    }

    #[test]
    fn random_points_are_seeded_and_in_range() {
        let a = random_annulus_points(3, 0.1, 3.0, 50, 9, true);
        assert_eq!(a, random_annulus_points(3, 0.1, 3.0, 50, 9, true));
        assert!(a.iter().all(|p| p.norm() >= 0.1 - 1e-12 && p.norm() <= 3.0 + 1e-12));
        assert!(a.iter().all(|p| p.iter().all(|c| c.abs() >= 1e-6)));
    }
}
