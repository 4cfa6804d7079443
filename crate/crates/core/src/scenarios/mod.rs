//! Built-in and configured scenarios, the checks behind the command-line
//! subcommands, and CSV/SVG artifacts.
//!
//! Configs are TOML documents:
//!
//! ```toml
//! scenario = "example1"      # example1 | example2 | custom
//! x0 = [1.0, -1.0]
//! sigma = 0.5
//! stop_phi = 1e-6
//!
//! [tolerances]
//! slack = 0.5
//! ```

mod builtin;
mod checks;
mod config;
mod grid;
mod output;

pub use builtin::{
    build, custom, example1, example1_default_a, example2, example2_gains, example2_system, Plant, Scenario, GAIN_GRID,
};
pub use checks::{
    bracket_info, builtin_scenario, clf_check, format_bracket_info, format_clf_report, format_gains_check, gains_check,
    parse_point, run_many, BracketInfo, GainsCheck, DEFAULT_CLF_ANNULUS, DEFAULT_RANK_POINTS,
};
pub use config::{load_config, CustomParams, Example1Params, PolyRows, ScenarioConfig, Tolerances, BUILTINS};
pub use grid::{annulus_grid, parse_annulus, random_annulus_points};
pub use output::{
    fmt_float, initial_state, phase_svg, read_ledger_csv, run_scenario, simulate, write_ledger_csv, write_trajectory_csv,
    RunReport, LEDGER_HEADER,
};
