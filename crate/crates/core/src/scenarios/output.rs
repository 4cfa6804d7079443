use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::clf_sdf::EventKind;
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::sampled_loop::{run, verify_ledger, LedgerReport, LedgerRow, RunOutput, SampleLedger, Verdict};

use super::builtin::{build, Scenario};
use super::config::ScenarioConfig;

/// 17 significant digits, stable across platforms.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory, values: &[f64]) -> Result<()> {
    let n = traj.states.first().map_or(0, |s| s.len());
    let l = traj.controls.first().map_or(0, |u| u.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=l).map(|i| format!("u_{i}")));
    header.push("phi".into());
    w.write_record(&header)?;
    for (k, t) in traj.times.iter().enumerate() {
        let mut rec = vec![fmt_float(*t)];
        rec.extend(traj.states[k].iter().map(|v| fmt_float(*v)));
        rec.extend(traj.controls[k].iter().map(|v| fmt_float(*v)));
        rec.push(fmt_float(values[k]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub const LEDGER_HEADER: [&str; 7] = ["event", "t_i", "T_i", "case", "phi_before", "phi_after", "phi_peak"];

pub fn write_ledger_csv<W: Write>(out: W, rows: &[LedgerRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LEDGER_HEADER)?;
    for r in rows {
        w.write_record([
            r.event.to_string(),
            fmt_float(r.t),
            fmt_float(r.dwell),
            r.kind.as_str().to_string(),
            fmt_float(r.phi_before),
            fmt_float(r.phi_after),
            fmt_float(r.phi_peak),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a ledger written by [`write_ledger_csv`].
pub fn read_ledger_csv<R: Read>(input: R) -> Result<Vec<LedgerRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != LEDGER_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected ledger header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("bad {what}"),
        };
        let num = |k: usize| -> Result<f64> { rec[k].parse().map_err(|_| bad(LEDGER_HEADER[k])) };
        rows.push(LedgerRow {
            event: rec[0].parse().map_err(|_| bad("event"))?,
            t: num(1)?,
            dwell: num(2)?,
            kind: EventKind::parse(&rec[3]).ok_or_else(|| bad("case"))?,
            phi_before: num(4)?,
            phi_after: num(5)?,
            phi_peak: num(6)?,
        });
    }
    Ok(rows)
}

/// Minimal static phase portrait: the state-plane polyline with sampling
/// instants marked.
pub fn phase_svg(traj: &Trajectory, ledger: &SampleLedger) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 24.0;
    let pts: Vec<(f64, f64)> = traj.states.iter().map(|s| (s[0], s[1])).collect();
    let span = pts
        .iter()
        .fold(1e-12f64, |m, (x, y)| m.max(x.abs()).max(y.abs()));
    let map = |(x, y): (f64, f64)| {
        let s = (SIZE - 2.0 * PAD) / (2.0 * span);
        (SIZE / 2.0 + x * s, SIZE / 2.0 - y * s)
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let (c, lo, hi) = (SIZE / 2.0, PAD, SIZE - PAD);
    let _ = writeln!(
        svg,
        r##"<path d="M{lo} {c}H{hi}M{c} {lo}V{hi}" stroke="#bbbbbb" stroke-width="1"/>"##
    );
    let mut d = String::new();
    for (i, p) in pts.iter().enumerate() {
        let (x, y) = map(*p);
        let _ = write!(d, "{}{x:.2} {y:.2}", if i == 0 { "M" } else { " L" });
    }
    let _ = writeln!(svg, r##"<path d="{d}" fill="none" stroke="#1f5fa8" stroke-width="1.2"/>"##);
    for e in &ledger.events {
        let (x, y) = map((e.x[0], e.x[1]));
        let _ = writeln!(svg, r##"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="#c0392b"/>"##);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Outcome of one configured run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub verdict: Verdict,
    pub events: usize,
    pub initial_value: f64,
    pub final_value: f64,
    pub ledger_check: LedgerReport,
    pub output_dir: PathBuf,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Converged => 0,
            Verdict::Budget => 2,
            Verdict::Failed(_) => 3,
        }
    }

    pub fn summary_text(&self, value_name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "verdict: {}", self.verdict.name());
        if let Verdict::Failed(msg) = &self.verdict {
            let _ = writeln!(s, "failure: {msg}");
        }
        let _ = writeln!(s, "events: {}", self.events);
        let _ = writeln!(s, "initial {value_name}: {}", fmt_float(self.initial_value));
        let _ = writeln!(s, "final {value_name}: {}", fmt_float(self.final_value));
        let ok = |b: bool| if b { "pass" } else { "FAIL" };
        let _ = writeln!(s, "ledger decrease: {}", ok(self.ledger_check.monotone.passed));
        let _ = writeln!(s, "ledger peak bound: {}", ok(self.ledger_check.peak.passed));
        if let Some(b) = self.ledger_check.bound {
            let _ = writeln!(s, "excursion bound: {}", ok(b.passed));
        }
        s
    }
}

/// Initial state of a run: the config's `x0`, else the scenario default.
pub fn initial_state(cfg: &ScenarioConfig, scenario: &Scenario) -> State {
    cfg.x0.as_ref().map_or_else(|| scenario.default_x0.clone(), |v| State::from_vec(v.clone()))
}

/// Simulate the configured scenario in memory.
pub fn simulate(cfg: &ScenarioConfig, scenario: &Scenario) -> Result<(RunOutput, LedgerReport)> {
    let x0 = initial_state(cfg, scenario);
    if x0.len() != scenario.system().state_dim() {
        return Err(Error::Validation(format!(
            "x0: expected {} entries, got {}",
            scenario.system().state_dim(),
            x0.len()
        )));
    }
    let out = run(scenario.controller(), &x0, &cfg.loop_config());
    let check = verify_ledger(&out.ledger, scenario.a1.as_ref(), cfg.tolerances.slack)?;
    Ok((out, check))
}

/// Run and write `trajectory.csv`, `ledger.csv`, `summary.txt` and, for
/// planar scenarios, `phase.svg` into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunReport> {
    let scenario = build(cfg)?;
    fs::create_dir_all(out_dir)?;
    let (out, check) = simulate(cfg, &scenario)?;
    let ctl = scenario.controller();
    let values: Vec<f64> = out.trajectory.states.iter().map(|s| ctl.value(s)).collect();
    let report = RunReport {
        scenario: scenario.name.clone(),
        verdict: out.verdict.clone(),
        events: out.ledger.len(),
        initial_value: values[0],
        final_value: *values.last().expect("trajectory has its initial sample"),
        ledger_check: check,
        output_dir: out_dir.to_path_buf(),
    };
    write_trajectory_csv(fs::File::create(out_dir.join("trajectory.csv"))?, &out.trajectory, &values)?;
    write_ledger_csv(fs::File::create(out_dir.join("ledger.csv"))?, &out.ledger.rows())?;
    fs::write(out_dir.join("summary.txt"), report.summary_text(scenario.value_name()))?;
    if scenario.system().state_dim() == 2 {
        fs::write(out_dir.join("phase.svg"), phase_svg(&out.trajectory, &out.ledger))?;
    }
    Ok(report)
}
