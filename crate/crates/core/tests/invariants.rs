//! Property-based invariants checked against closed-form oracles.

mod common;

use common::{bracket_phi, ex1, rel_close, OracleField, OraclePoly};
use nalgebra::dvector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdstab::dynamics::poly::{poly_field, poly_scalar, Polynomial};
use sdstab::dynamics::{bracket, lie_derivative, ControlSystem, ScalarField, State, VectorField};
use sdstab::integrate::{endpoint, ControlSchedule, Segment};
use sdstab::par::Exec;
use sdstab::sampled_loop::{run_batch, LoopConfig};
use sdstab::scenarios::{builtin_scenario, fmt_float, Plant};
use sdstab::smallgain::ClassKFn;

fn example1() -> (ControlSystem, ScalarField) {
    match builtin_scenario("example1").unwrap().plant {
        Plant::Affine(c) => (c.sys, c.phi),
        Plant::Composite(_) => unreachable!(),
    }
}

fn to_field(o: &OracleField, dim: usize) -> VectorField {
    poly_field(o.0.iter().map(|p| Polynomial::from_rows(dim, &p.rows()).unwrap()).collect())
}

fn coord() -> impl Strategy<Value = f64> {
    -3.0..3.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The product x₁x₂ obeys d/dt(x₁x₂) = a(x)(x₁ + x₂) whatever the input:
    /// the input field is tangent to its level sets.
    #[test]
    fn example1_product_ignores_the_input(x1 in coord(), x2 in coord(), u in -50.0..50.0f64) {
        let (sys, _) = example1();
        let x = dvector![x1, x2];
        let rhs = sys.rhs(&x, &dvector![u]);
        let q_dot = rhs[0] * x2 + rhs[1] * x1;
        let expected = ex1::a(&[x1, x2]) * (x1 + x2);
        prop_assert!((q_dot - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
    }

    /// [f,g]Φ from the library matches the closed form on random polynomials.
    #[test]
    fn bracket_derivative_matches_the_oracle(seed in any::<u64>(), x1 in -1.5..1.5f64, x2 in -1.5..1.5f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xf = OracleField(vec![OraclePoly::random(&mut rng, 2, 3, 3), OraclePoly::random(&mut rng, 2, 3, 3)]);
        let yf = OracleField(vec![OraclePoly::random(&mut rng, 2, 3, 3), OraclePoly::random(&mut rng, 2, 3, 3)]);
        let phi = OraclePoly::random(&mut rng, 2, 3, 3);
        let lib_phi = poly_scalar(2, Polynomial::from_rows(2, &phi.rows()).unwrap());
        let br = bracket(&to_field(&xf, 2), &to_field(&yf, 2)).unwrap();
        let got = lie_derivative(&br, &lib_phi, &dvector![x1, x2]).unwrap();
        let want = bracket_phi(&xf, &yf, &phi, &[x1, x2]);
        prop_assert!(rel_close(got, want, 1e-8), "{got} vs {want}");
    }

    /// [X,Y] = −[Y,X].
    #[test]
    fn bracket_is_antisymmetric(seed in any::<u64>(), x1 in coord(), x2 in coord()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xf = OracleField(vec![OraclePoly::random(&mut rng, 2, 3, 2), OraclePoly::random(&mut rng, 2, 3, 2)]);
        let yf = OracleField(vec![OraclePoly::random(&mut rng, 2, 3, 2), OraclePoly::random(&mut rng, 2, 3, 2)]);
        let (x, y) = (to_field(&xf, 2), to_field(&yf, 2));
        let p = dvector![x1, x2];
        let xy = bracket(&x, &y).unwrap().eval(&p).unwrap();
        let yx = bracket(&y, &x).unwrap().eval(&p).unwrap();
        prop_assert!((&xy + &yx).norm() <= 1e-9 * (1.0 + xy.norm()));
    }

    /// Where gΦ ≠ 0 the Case-1 input makes Φ̇ = −1 exactly.
    #[test]
    fn case1_input_gives_unit_decrease(x1 in coord(), x2 in coord()) {
        let x = [x1, x2];
        prop_assume!(ex1::g_v(&x).abs() > 1e-3);
        let u = sdstab::clf_sdf::case1_input(ex1::f_v(&x), ex1::g_v(&x));
        prop_assert!((ex1::v_dot(&x, u) + 1.0).abs() < 1e-9 * (1.0 + u.abs()));
    }

    /// A driftless motion followed by its reversed, negated schedule
    /// returns to the start.
    #[test]
    fn reversed_schedule_undoes_a_driftless_motion(
        x1 in coord(), x2 in coord(),
        u in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, 0.05..0.3f64), 1..4),
    ) {
        let Plant::Composite(c) = builtin_scenario("example2").unwrap().plant else { unreachable!() };
        let sys = c.comp.system().clone();
        let x0 = dvector![x1 * 0.3, x2 * 0.3];
        let sched = ControlSchedule::new(
            u.iter().map(|(a, b, d)| Segment { duration: *d, control: dvector![*a, *b] }).collect(),
        ).unwrap();
        let there = endpoint(&sys, &x0, &sched, 1e-3).unwrap();
        let back = endpoint(&sys, &there, &sched.reversed_negated(), 1e-3).unwrap();
        prop_assert!((&back - &x0).norm() < 1e-8 * (1.0 + x0.norm()), "{back} vs {x0}");
    }

    /// Class-K inverses undo evaluation.
    #[test]
    fn class_k_inverse_round_trips(k in 0.1..5.0f64, p in 0.5..3.0f64, s in 1e-3..10.0f64) {
        let f = ClassKFn::power(k, p).unwrap();
        let back = f.invert(f.eval(s)).unwrap();
        prop_assert!(rel_close(back, s, 1e-8));
    }

    /// Output floats round trip bit for bit.
    #[test]
    fn float_format_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
    }
}

#[test]
fn sequential_and_parallel_batches_agree() {
    let scenario = builtin_scenario("example2").unwrap();
    let x0s: Vec<State> = [[1.0, 1.0], [0.5, -1.2], [-2.0, 0.3], [0.1, 2.5]]
        .iter()
        .map(|p| State::from_vec(p.to_vec()))
        .collect();
    let cfg = LoopConfig {
        stop_phi: 1e-4,
        max_events: 200,
        ..LoopConfig::default()
    };
    let seq = run_batch(Exec::Sequential, scenario.controller(), &x0s, &cfg);
    let par = run_batch(Exec::Parallel, scenario.controller(), &x0s, &cfg);
    for (a, b) in seq.iter().zip(&par) {
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.ledger.rows(), b.ledger.rows());
        assert_eq!(a.verdict, b.verdict);
    }
}
