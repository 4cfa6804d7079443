//! Acceptance criteria 1–9, one pass/fail line each. Runs without the
//! libtest harness so every line is printed; exits non-zero if any
//! criterion fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{bracket_phi, ex1, ex2, rel_close, OracleField, OraclePoly};
use sdstab::clf_sdf::{classify, maneuver_rollout, maneuver_solve, second_order_coefficient, EventKind, SdfConfig};
use sdstab::dynamics::poly::{poly_field, poly_scalar, Polynomial};
use sdstab::dynamics::{bracket, lie_derivative, second_lie, State};
use sdstab::integrate::{integrate, ControlSchedule};
use sdstab::par::Exec;
use sdstab::sampled_loop::{check_monotone, check_peaks, run_batch, Controller, LoopConfig};
use sdstab::scenarios::{
    builtin_scenario, clf_check, gains_check, random_annulus_points, run_scenario, Plant, ScenarioConfig,
    DEFAULT_CLF_ANNULUS,
};

type Outcome = (bool, String);

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sdstab")
}

/// 1. Bracket oracle on random polynomial pairs.
fn criterion1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst, mut worst_oracle, mut probes) = (0.0f64, 0.0f64, 0);
    let mut ok = true;
    for pair in 0..50 {
        let dim = 2 + pair % 3;
        let rand_field = |rng: &mut ChaCha8Rng| OracleField((0..dim).map(|_| OraclePoly::random(rng, dim, 4, 3)).collect());
        let (xo, yo) = (rand_field(&mut rng), rand_field(&mut rng));
        let phio = OraclePoly::random(&mut rng, dim, 5, 3);
        let lib_field = |f: &OracleField| {
            poly_field(f.0.iter().map(|p| Polynomial::from_rows(dim, &p.rows()).unwrap()).collect())
        };
        let (xf, yf) = (lib_field(&xo), lib_field(&yo));
        let phi = poly_scalar(dim, Polynomial::from_rows(dim, &phio.rows()).unwrap());
        let br = bracket(&xf, &yf).unwrap();
        for _ in 0..10 {
            let p = State::from_fn(dim, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let lhs = lie_derivative(&br, &phi, &p).unwrap();
            let rhs = second_lie(&xf, &yf, &phi, &p).unwrap() - second_lie(&yf, &xf, &phi, &p).unwrap();
            let oracle = bracket_phi(&xo, &yo, &phio, p.as_slice());
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
            worst = worst.max(if ((lhs - rhs).abs()) < 1e-12 { 0.0 } else { rel(lhs, rhs) });
            worst_oracle = worst_oracle.max(if (lhs - oracle).abs() < 1e-12 { 0.0 } else { rel(lhs, oracle) });
            ok &= rel_close(lhs, rhs, 1e-5) && rel_close(lhs, oracle, 1e-5);
            probes += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    (
        ok,
        format!("{probes} probes, max rel diff {worst:.1e} (vs symbolic oracle {worst_oracle:.1e}), {secs:.2}s < 10s"),
    )
}

fn example1_controller() -> sdstab::sampled_loop::ClfController {
    match builtin_scenario("example1").unwrap().plant {
        Plant::Affine(c) => c,
        Plant::Composite(_) => unreachable!(),
    }
}

/// 2 and 8. Example 1 convergence and the excursion bound on the same runs.
fn criteria2and8() -> (Outcome, Outcome) {
    let ctl = example1_controller();
    let x0s = random_annulus_points(2, 0.1, 5.0, 20, 202, false);
    let cfg = LoopConfig {
        sigma: 0.5,
        stop_phi: 1e-4,
        max_events: 2000,
        ..LoopConfig::default()
    };
    let start = Instant::now();
    let runs = run_batch(Exec::available(), &ctl, &x0s, &cfg);
    let secs = start.elapsed().as_secs_f64();
    let (mut reached, mut invariants, mut bounded) = (0, 0, 0);
    let mut failures = Vec::new();
    let mut worst_ratio = 0.0f64;
    for (x0, out) in x0s.iter().zip(&runs) {
        let final_v = ex1::v(out.trajectory.last_state().as_slice());
        let rows = out.ledger.rows();
        if final_v <= 1e-4 && out.ledger.len() <= 2000 {
            reached += 1;
        } else {
            failures.push(format!("x0={:?} Q0={:+.3} final V={final_v:.2e}", round2(x0), x0[0] * x0[1]));
        }
        if check_monotone(&rows).passed && check_peaks(&rows, 0.5).passed {
            invariants += 1;
        }
        let limit = ex1::excursion_bound(ex1::v(x0.as_slice()));
        let peak = out.trajectory.states.iter().map(|s| s.norm()).fold(0.0, f64::max);
        worst_ratio = worst_ratio.max(peak / limit);
        if peak <= limit {
            bounded += 1;
        }
    }
    let ok2 = reached == 20 && invariants == 20 && secs < 60.0;
    let mut detail = format!(
        "{reached}/20 reached V <= 1e-4 within 2000 events; ledger invariants held on {invariants}/20; {secs:.1}s < 60s"
    );
    if !ok2 {
        detail.push_str(&format!(
            ". Not reached: {}. x1*x2 obeys d/dt(x1 x2) = a(x)(x1+x2) for every input and can rise by at most \
             |x1 x2|^3/4 per unit time, so from x1*x2 < 0 no controller reaches V <= 1e-4 within 2000 * 0.5 time units",
            failures.join("; ")
        ));
    }
    (
        (ok2, detail),
        (
            bounded == 20,
            format!("{bounded}/20 runs within sqrt(3 V(x0)), max |x|/bound = {worst_ratio:.3}"),
        ),
    )
}

fn round2(x: &State) -> Vec<f64> {
    x.iter().map(|c| (c * 100.0).round() / 100.0).collect()
}

/// 3. dΦ/dt = −1 at the start of ControlAuthority intervals.
fn criterion3() -> Outcome {
    let ctl = example1_controller();
    let cfg = SdfConfig::default();
    let states: Vec<State> = random_annulus_points(2, 0.1, 5.0, 200, 303, false)
        .into_iter()
        .filter(|x| {
            classify(&ctl.sys, &ctl.phi, x, cfg.tol(x)).is_ok_and(|t| t.kind == EventKind::ControlAuthority)
        })
        .take(20)
        .collect();
    let mut worst = 0.0f64;
    let mut ok = states.len() == 20;
    for x in &states {
        let u = sdstab::clf_sdf::case1_control(&ctl.sys, &ctl.phi, x, cfg.tol(x)).unwrap();
        let speed = 1.0 + u.abs() * x.norm() + x.norm().powi(3);
        let h = 1e-6 / (speed * speed);
        let sched = ControlSchedule::constant(h, DVector::from_element(1, u)).unwrap();
        let end = integrate(&ctl.sys, x, &sched, h).unwrap();
        let rate = (ex1::v(end.last_state().as_slice()) - ex1::v(x.as_slice())) / h;
        worst = worst.max((rate + 1.0).abs());
        ok &= (rate + 1.0).abs() <= 0.05 && (ex1::v_dot(x.as_slice(), u) + 1.0).abs() < 1e-9;
    }
    (ok, format!("{} states, max |dV/dt + 1| = {worst:.2e} (tolerance 5e-2)", states.len()))
}

/// 4. Quadratic decrease of the bracket maneuver at (1, −1).
fn criterion4() -> Outcome {
    let ctl = example1_controller();
    let x0 = State::from_vec(vec![1.0, -1.0]);
    let c = 1.0;
    let params = maneuver_solve(&ctl.sys, &ctl.phi, &x0, 0.0, c, 1e-9).unwrap();
    let ts: Vec<f64> = (7..=10).map(|k| 2f64.powi(-k)).collect();
    let drops: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let end = maneuver_rollout(&ctl.sys, &x0, &params, t, t / 64.0).unwrap();
            ex1::v(x0.as_slice()) - ex1::v(end.as_slice())
        })
        .collect();
    let fit = ts.iter().zip(&drops).map(|(t, d)| d * t * t).sum::<f64>() / ts.iter().map(|t| t.powi(4)).sum::<f64>();
    // Φ(R(t)) = Φ(x0) + ½·m̈(0)·t² + O(t³) with m̈(0) = A + 2u·[g,f]Φ.
    let predicted = -(params.a + 2.0 * params.u * params.bracket_gf) / 2.0;
    let direct = -second_order_coefficient(&ctl.sys, &ctl.phi, &x0, params.u, -params.u).unwrap() / 2.0;
    // Informational only: a t² + t³ least-squares fit isolates the leading
    // coefficient from the cubic remainder that dominates the pure fit.
    let (s44, s45, s55, s2d, s3d) = ts.iter().zip(&drops).fold((0.0, 0.0, 0.0, 0.0, 0.0), |acc, (t, d)| {
        (acc.0 + t.powi(4), acc.1 + t.powi(5), acc.2 + t.powi(6), acc.3 + d * t * t, acc.4 + d * t.powi(3))
    });
    let det = s44 * s55 - s45 * s45;
    let lead = (s2d * s55 - s3d * s45) / det;
    let cubic = (s44 * s3d - s45 * s2d) / det;
    let in_band = fit >= c / 8.0 && fit <= 2.0 * c;
    let matches = (fit - predicted).abs() <= 0.25 * predicted.abs();
    (
        in_band && matches && rel_close(predicted, direct, 1e-4),
        format!(
            "u = {:.6}, fitted {fit:.5} in [{:.3}, {:.1}], predicted {predicted:.5} (direct {direct:.5}), rel gap {:.2e} (tolerance 0.25); \
             two-term fit {lead:.5}·t² + {cubic:.2}·t³ (informational: the O(t³) remainder is large at these t)",
            params.u,
            c / 8.0,
            2.0 * c,
            (fit - predicted).abs() / predicted.abs()
        ),
    )
}

/// 5. `check-clf example1` on the default 100-point annulus.
fn criterion5() -> Outcome {
    let out = Command::new(bin())
        .args(["check-clf", "example1", "--grid-annulus", "0.2:3:100"])
        .output()
        .expect("run sdstab");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let cli_ok = out.status.code() == Some(0) && stdout.contains("points checked: 100") && stdout.contains("\n0 violations");
    let scenario = builtin_scenario("example1").unwrap();
    let report = clf_check(&scenario, DEFAULT_CLF_ANNULUS, 1e-7).unwrap();
    // Oracle: the closed-form implication at every grid point.
    let grid = sdstab::scenarios::annulus_grid(0.2, 3.0, 100);
    let tol = 1e-7 * 4.0;
    let oracle_violations = grid
        .iter()
        .filter(|x| {
            let x = x.as_slice();
            ex1::g_v(x).abs() <= tol && !(ex1::f_v(x) < -tol || (ex1::f_v(x).abs() <= tol && ex1::bracket_v(x).abs() > tol))
        })
        .count();
    let oracle_singular = grid.iter().filter(|x| ex1::g_v(x.as_slice()).abs() <= tol).count();
    (
        cli_ok && report.passed() && oracle_violations == 0 && report.singular == oracle_singular,
        format!(
            "CLI exit {:?}, {} violations over {} points ({} with gV = 0; oracle: {oracle_singular} and {oracle_violations})",
            out.status.code(),
            report.violations.len(),
            report.checked,
            report.singular
        ),
    )
}

/// 6. `check-gains example2`: small-gain on 50 points, rank at 100 points.
fn criterion6() -> Outcome {
    let out = Command::new(bin()).args(["check-gains", "example2"]).output().expect("run sdstab");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let cli_ok = out.status.code() == Some(0)
        && stdout.contains("small-gain: pass (50 grid points, 0 violations)")
        && stdout.contains("rank: pass (100 points");
    let scenario = builtin_scenario("example2").unwrap();
    let g = gains_check(&scenario, 100, 0).unwrap();
    let Plant::Composite(c) = &scenario.plant else { unreachable!() };
    let (lower, upper) = (c.setup.gains.lower().unwrap(), c.setup.gains.upper().unwrap());
    let grid = sdstab::smallgain::geometric_grid(1e-3, 1e3, 50);
    let chains_ok = grid
        .iter()
        .all(|&s| rel_close(lower.eval(s), ex2::lower(s), 1e-9) && rel_close(upper.eval(s), ex2::upper(s), 1e-9));
    let pts = random_annulus_points(2, 0.1, 3.0, 100, 0, true);
    let witnesses_ok = pts.iter().all(|p| {
        let (a, b, j) = ex2::rank_witnesses(p[0], p[1]);
        a != 0.0 && b != 0.0 && j != 0.0
    });
    (
        cli_ok && g.passed() && g.small_gain.checked == 50 && g.rank.points == 100 && chains_ok && witnesses_ok,
        format!(
            "CLI exit {:?}; small-gain {} violations on {} points (oracle lower = s, upper = 4s: {}); rank {} failures on {} points, {} checks",
            out.status.code(),
            g.small_gain.violations.len(),
            g.small_gain.checked,
            if chains_ok { "match" } else { "MISMATCH" },
            g.rank.failures.len(),
            g.rank.points,
            g.rank.checks
        ),
    )
}

/// 7. Example 2 composite convergence with per-interval invariants.
fn criterion7() -> Outcome {
    let scenario = builtin_scenario("example2").unwrap();
    let Plant::Composite(ctl) = &scenario.plant else { unreachable!() };
    let x0s = random_annulus_points(2, 0.1, 3.0, 10, 707, false);
    let cfg = LoopConfig {
        sigma: 0.5,
        stop_phi: 1e-4,
        max_events: 2000,
        ..LoopConfig::default()
    };
    let start = Instant::now();
    let runs = run_batch(Exec::available(), ctl, &x0s, &cfg);
    let secs = start.elapsed().as_secs_f64();
    let (mut reached, mut intervals, mut bad) = (0, 0, Vec::new());
    for (k, out) in runs.iter().enumerate() {
        let last = out.trajectory.last_state();
        let psi1 = |p: &State| (p[1] * p[1]).max(ex2::ell1(p[0] * p[0]));
        if psi1(last) <= 1e-4 && out.ledger.len() <= 2000 && rel_close(psi1(last), ctl.value(last), 1e-9) {
            reached += 1;
        }
        for (i, e) in out.ledger.events.iter().enumerate() {
            intervals += 1;
            let traj = integrate(ctl.system(), &e.x, &e.schedule, cfg.step).unwrap();
            let vw: Vec<(f64, f64)> = traj.states.iter().map(|s| (s[0] * s[0], s[1] * s[1])).collect();
            let (first, end) = (vw[0], *vw.last().unwrap());
            let held = match e.kind {
                EventKind::SteerX => end.0 < first.0 && vw.iter().all(|&(v, w)| w < ex2::ell1(v)),
                EventKind::SteerY => end.1 < first.1 && vw.iter().all(|&(v, w)| ex2::ell1(v) < w),
                EventKind::Boundary => end.0 < first.0 && end.1 < first.1,
                _ => false,
            };
            if !held {
                bad.push(format!("run {k} event {i} ({})", e.kind));
            }
        }
        if !check_monotone(&out.ledger.rows()).passed {
            bad.push(format!("run {k}: psi1 not strictly decreasing"));
        }
    }
    (
        reached == 10 && bad.is_empty() && secs < 120.0,
        format!(
            "{reached}/10 reached psi1 <= 1e-4 within 2000 events; {} of {intervals} intervals violated the active decrease or regime; {secs:.2}s < 120s{}",
            bad.len(),
            if bad.is_empty() { String::new() } else { format!(": {}", bad.join(", ")) }
        ),
    )
}

/// 9. Byte-identical ledgers for identical configs.
fn criterion9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut e1 = ScenarioConfig::builtin("example1").unwrap();
    e1.max_events = 300;
    let mut e2 = ScenarioConfig::builtin("example2").unwrap();
    e2.x0 = Some(vec![0.7, -1.9]);
    let mut ok = true;
    let mut sizes = Vec::new();
    for (name, cfg) in [("example1", &e1), ("example2", &e2)] {
        let read = |tag: &str| {
            let d = dir.path().join(format!("{name}-{tag}"));
            run_scenario(cfg, &d).unwrap();
            (std::fs::read(d.join("ledger.csv")).unwrap(), std::fs::read(d.join("trajectory.csv")).unwrap())
        };
        let (a, b) = (read("a"), read("b"));
        ok &= a == b && !a.0.is_empty();
        sizes.push(format!("{name}: {} ledger bytes", a.0.len()));
    }
    (ok, format!("repeated runs byte-identical ({})", sizes.join(", ")))
}

fn main() -> ExitCode {
    let c1 = criterion1();
    let (c2, c8) = criteria2and8();
    let results = [
        c1,
        c2,
        criterion3(),
        criterion4(),
        criterion5(),
        criterion6(),
        criterion7(),
        c8,
        criterion9(),
    ];
    let mut all = true;
    for (i, (ok, detail)) in results.iter().enumerate() {
        all &= ok;
        println!("criterion {}: {} - {detail}", i + 1, if *ok { "PASS" } else { "FAIL" });
    }
    let passed = results.iter().filter(|r| r.0).count();
    println!("acceptance: {passed}/9 criteria passed");
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
