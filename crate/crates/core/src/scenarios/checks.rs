use std::fmt::Write as _;
use std::path::PathBuf;

use crate::dynamics::{bracket, check_clf_implication, lie_derivative, ClfReport, State};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::smallgain::{check_rank_conditions, check_small_gain, geometric_grid, RankReport, SmallGainReport};

use super::builtin::{build, Plant, Scenario, GAIN_GRID};
use super::config::ScenarioConfig;
use super::grid::{annulus_grid, random_annulus_points};
use super::output::{fmt_float, run_scenario, RunReport};

/// Default `--grid-annulus` of `check-clf`.
pub const DEFAULT_CLF_ANNULUS: (f64, f64, usize) = (0.2, 3.0, 100);
/// Random points for the rank part of `check-gains`.
pub const DEFAULT_RANK_POINTS: usize = 100;

fn affine<'a>(scenario: &'a Scenario, what: &str) -> Result<&'a crate::sampled_loop::ClfController> {
    match &scenario.plant {
        Plant::Affine(c) => Ok(c),
        Plant::Composite(_) => Err(Error::Validation(format!(
            "scenario: {what} needs a control-affine scenario, {} is composite",
            scenario.name
        ))),
    }
}

/// The CLF implication on an annulus grid in the plane.
pub fn clf_check(scenario: &Scenario, annulus: (f64, f64, usize), tol_rel: f64) -> Result<ClfReport> {
    let c = affine(scenario, "check-clf")?;
    if c.sys.state_dim() != 2 {
        return Err(Error::Validation("scenario: check-clf grids are planar".into()));
    }
    let (lo, hi, n) = annulus;
    check_clf_implication(&c.sys, &c.phi, &annulus_grid(lo, hi, n), tol_rel * (1.0 + hi))
}

pub fn format_clf_report(r: &ClfReport, csv: bool) -> String {
    let mut s = String::new();
    if csv {
        s.push_str("x_1,x_2,clause,f_phi,g_phi,bracket_phi\n");
        for v in &r.violations {
            let (f, g, b) = v.witnesses.map_or((f64::NAN, f64::NAN, f64::NAN), |w| (w.f_phi, w.g_phi, w.bracket_phi));
            let _ = writeln!(
                s,
                "{},{},{:?},{},{},{}",
                fmt_float(v.point[0]),
                fmt_float(v.point[1]),
                v.clause,
                fmt_float(f),
                fmt_float(g),
                fmt_float(b)
            );
        }
        return s;
    }
    let _ = writeln!(s, "points checked: {}", r.checked);
    let _ = writeln!(s, "points with gPhi = 0: {}", r.singular);
    for v in &r.violations {
        let _ = writeln!(s, "  violation at {:?}: {:?}", v.point.as_slice(), v.clause);
    }
    let _ = writeln!(s, "{} violations", r.violations.len());
    s
}

#[derive(Debug, Clone)]
pub struct GainsCheck {
    pub small_gain: SmallGainReport,
    pub rank: RankReport,
}

impl GainsCheck {
    pub fn passed(&self) -> bool {
        self.small_gain.passed() && self.rank.passed()
    }
}

/// The small-gain inequality on the certification grid plus the rank
/// conditions at seeded random points with nonzero coordinates.
pub fn gains_check(scenario: &Scenario, rank_points: usize, seed: u64) -> Result<GainsCheck> {
    let Plant::Composite(c) = &scenario.plant else {
        return Err(Error::Validation(format!(
            "scenario: check-gains needs a composite scenario, {} is affine",
            scenario.name
        )));
    };
    let (lo, hi, n) = GAIN_GRID;
    let gains = &c.setup.gains;
    let small_gain = check_small_gain(gains, &geometric_grid(lo, hi, n))?;
    let dim = c.comp.system().state_dim();
    let points = random_annulus_points(dim, 0.1, 3.0, rank_points, seed, true);
    let rank = check_rank_conditions(&c.comp, gains, &points)?;
    Ok(GainsCheck { small_gain, rank })
}

pub fn format_gains_check(g: &GainsCheck, csv: bool) -> String {
    let mut s = String::new();
    if csv {
        s.push_str("check,points,violations,passed\n");
        let _ = writeln!(
            s,
            "small_gain,{},{},{}",
            g.small_gain.checked,
            g.small_gain.violations.len(),
            g.small_gain.passed()
        );
        let _ = writeln!(s, "rank,{},{},{}", g.rank.points, g.rank.failures.len(), g.rank.passed());
        return s;
    }
    let verdict = |b: bool| if b { "pass" } else { "FAIL" };
    let _ = writeln!(
        s,
        "small-gain: {} ({} grid points, {} violations)",
        verdict(g.small_gain.passed()),
        g.small_gain.checked,
        g.small_gain.violations.len()
    );
    for (p, d) in &g.small_gain.violations {
        let _ = writeln!(s, "  s = {p:e}: upper - lower = {d:e}");
    }
    if let Some(l) = &g.small_gain.limit {
        let _ = writeln!(s, "  limits: upper {:e}, r {:e}: {}", l.upper_limit, l.r, verdict(l.passed));
    }
    let _ = writeln!(
        s,
        "rank: {} ({} points, {} checks, {} failures)",
        verdict(g.rank.passed()),
        g.rank.points,
        g.rank.checks,
        g.rank.failures.len()
    );
    for f in &g.rank.failures {
        let _ = writeln!(s, "  {:?} at {:?}: rank {} < {}", f.condition, f.point.as_slice(), f.rank, f.required);
    }
    s
}

/// f, g, [f,g] and their derivatives of Φ at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketInfo {
    pub point: State,
    pub f: State,
    pub g: State,
    pub bracket: State,
    pub f_phi: f64,
    pub g_phi: f64,
    pub bracket_phi: f64,
}

pub fn bracket_info(scenario: &Scenario, point: &State) -> Result<BracketInfo> {
    let c = affine(scenario, "bracket")?;
    let (f, g) = c.sys.affine_parts()?;
    let fg = bracket(f, g)?;
    Ok(BracketInfo {
        point: point.clone(),
        f: f.eval(point)?,
        g: g.eval(point)?,
        bracket: fg.eval(point)?,
        f_phi: lie_derivative(f, &c.phi, point)?,
        g_phi: lie_derivative(g, &c.phi, point)?,
        bracket_phi: lie_derivative(&fg, &c.phi, point)?,
    })
}

pub fn format_bracket_info(b: &BracketInfo, csv: bool) -> String {
    let vec = |v: &State| v.iter().map(|c| fmt_float(*c)).collect::<Vec<_>>().join(" ");
    if csv {
        return format!(
            "quantity,value\nf,{}\ng,{}\n[f,g],{}\nfPhi,{}\ngPhi,{}\n[f,g]Phi,{}\n",
            vec(&b.f),
            vec(&b.g),
            vec(&b.bracket),
            fmt_float(b.f_phi),
            fmt_float(b.g_phi),
            fmt_float(b.bracket_phi)
        );
    }
    let short = |v: &State| format!("{:?}", v.as_slice());
    format!(
        "point     {}\nf         {}\ng         {}\n[f,g]     {}\nfPhi      {:.9}\ngPhi      {:.9}\n[f,g]Phi  {:.9}\n",
        short(&b.point),
        short(&b.f),
        short(&b.g),
        short(&b.bracket),
        b.f_phi,
        b.g_phi,
        b.bracket_phi
    )
}

/// Parse a comma-separated point.
pub fn parse_point(text: &str) -> Result<State> {
    let vals = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Validation(format!("point: cannot parse {text:?}")))?;
    if vals.is_empty() || vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("point: cannot parse {text:?}")));
    }
    Ok(State::from_vec(vals))
}

/// Run several configured scenarios concurrently, one output directory each.
pub fn run_many(exec: Exec, jobs: &[(ScenarioConfig, PathBuf)]) -> Vec<Result<RunReport>> {
    par::map(exec, jobs, |(cfg, dir)| run_scenario(cfg, dir))
}

/// Convenience: build a builtin by name with defaults.
pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    build(&ScenarioConfig::builtin(name)?)
}
