//! Descent-trajectory optimizer CLI.
//!
//! Exit codes: 0 success, 2 validation error, 3 synthesis failure,
//! 4 optimality-check failure.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cdaopt_core::environment::WindProfile;
use cdaopt_core::error::Error;
use cdaopt_core::optimal::check_optimality;
use cdaopt_core::scenario::{Scenario, WindRecordFile};
use cdaopt_core::units;
use cdaopt_core::verify::{compare, dp_solve, GridSpec};

#[derive(Parser)]
#[command(
    name = "cdaopt",
    about = "Idle-descent trajectory optimization in wind"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Override the aircraft model referenced by the scenario.
    #[arg(long)]
    aircraft: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the optimal trajectory for one scenario.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Trajectory file format: csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Solve a family of scenarios over a wind sweep.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Sweep kind: winds (m/s along track), dirs (degrees at fixed
        /// magnitude), or shear (wind-profile JSON files).
        #[arg(long, default_value = "winds")]
        kind: String,
        /// Comma-separated sweep values (wind speeds or angles).
        #[arg(long, default_value = "-30,-10,0,10,30", allow_hyphen_values = true)]
        values: String,
        /// Wind magnitude for the dirs sweep, m/s.
        #[arg(long, default_value_t = 30.0)]
        magnitude: f64,
        /// Comma-separated wind-profile JSON paths for the shear sweep.
        #[arg(long)]
        profiles: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Verify the optimality conditions of a stored trajectory.
    Check {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Trajectory CSV produced by solve.
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Compare the generator against the dynamic-programming bound.
    Oracle {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Grid as NHxNVxNG.
        #[arg(long, default_value = "400x200x21")]
        grid: String,
        /// Along-track step, m.
        #[arg(long, default_value_t = 200.0)]
        ds: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::ModelValidation(_) | Error::Io(_) | Error::Json(_) => 2,
        Error::InfeasibleCrab { .. }
        | Error::InfeasibleControl(_)
        | Error::Numeric(_)
        | Error::Synthesis(_)
        | Error::NoJunction(_) => 3,
    }
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario, Error> {
    Scenario::load(&args.scenario, args.aircraft.as_deref())
}

fn parse_values(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::ModelValidation(format!("bad sweep value {v:?}: {e}")))
        })
        .collect()
}

fn run_solve(args: &ScenarioArgs, out: &Path, format: &str) -> Result<(), Error> {
    let scenario = load_scenario(args)?;
    let (sum, report) = output::solve_and_write(&scenario, out, format)?;
    println!(
        "{}: TOD {:.3} NM, TA {:.3} s, fuel {:.3} kg{}, arcs [{}], check {}",
        sum.scenario,
        sum.tod_nm,
        sum.ta_s,
        sum.fuel_kg,
        sum.emissions_g
            .map(|g| format!(", {} {:.3} g", sum.cost_kind, g))
            .unwrap_or_default(),
        sum.arc_sequence.join(" → "),
        if sum.check_passed { "pass" } else { "FAIL" }
    );
    for c in report.failures() {
        eprintln!(
            "  condition {} failed (worst {:.3e}): {}",
            c.name, c.worst, c.detail
        );
    }
    Ok(())
}

fn run_sweep(
    args: &ScenarioArgs,
    kind: &str,
    values: &str,
    magnitude: f64,
    profiles: Option<&str>,
    out: &Path,
    format: &str,
) -> Result<(), Error> {
    let base = load_scenario(args)?;
    let points: Vec<(String, WindProfile)> = match kind {
        "winds" => parse_values(values)?
            .into_iter()
            .map(|w| (format!("w{w:+.0}"), WindProfile::constant(w, 0.0)))
            .collect(),
        "dirs" => parse_values(values)?
            .into_iter()
            .map(|deg| {
                let rad = deg.to_radians();
                (
                    format!("dir{deg:+.0}"),
                    WindProfile::constant(magnitude * rad.cos(), magnitude * rad.sin()),
                )
            })
            .collect(),
        "shear" => {
            let list = profiles
                .ok_or_else(|| Error::ModelValidation("shear sweep needs --profiles".into()))?;
            let mut pts = Vec::new();
            for (i, path) in list.split(',').enumerate() {
                let text = std::fs::read_to_string(path.trim())?;
                let records: Vec<WindRecordFile> = serde_json::from_str(&text)?;
                let profile = WindProfile::new(
                    records
                        .iter()
                        .map(|w| (units::ft(w.h_ft), units::kt(w.wh_kt), units::kt(w.wc_kt)))
                        .collect(),
                )?;
                pts.push((format!("shear{i}"), profile));
            }
            pts
        }
        other => {
            return Err(Error::ModelValidation(format!(
                "unknown sweep kind {other:?} (winds, dirs, shear)"
            )))
        }
    };

    // solve the points concurrently; collect in input order for determinism
    let results: Vec<Result<output::Summary, Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = points
            .iter()
            .map(|(label, profile)| {
                let mut sc = base.clone();
                sc.name = format!("{}_{}", base.name, label);
                sc.wind = profile.clone();
                let out = out.to_path_buf();
                let format = format.to_string();
                scope.spawn(move || {
                    let (sum, _) = output::solve_and_write(&sc, &out, &format)?;
                    Ok(sum)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut rows = Vec::new();
    for r in results {
        rows.push(r?);
    }
    for s in &rows {
        println!(
            "{}: TOD {:.3} NM, TA {:.3} s, cost {:.3}",
            s.scenario, s.tod_nm, s.ta_s, s.cost
        );
    }
    let tod_monotone = rows.windows(2).all(|p| p[1].tod_nm < p[0].tod_nm);
    let ta_monotone = rows.windows(2).all(|p| p[1].ta_s < p[0].ta_s);
    if kind == "winds" {
        println!(
            "diagnostics: |TOD| increasing with tailwind: {tod_monotone}; \
             arrival time decreasing: {ta_monotone}"
        );
    }
    let table = serde_json::json!({
        "base_scenario": base.name,
        "kind": kind,
        "rows": rows.iter().map(|s| serde_json::to_value(s).unwrap()).collect::<Vec<_>>(),
        "diagnostics": { "tod_monotone": tod_monotone, "ta_monotone": ta_monotone },
    });
    output::write_atomic(
        &out.join(format!("{}_sweep.json", base.name)),
        serde_json::to_string_pretty(&table)?.as_bytes(),
    )?;
    Ok(())
}

fn run_check(args: &ScenarioArgs, trajectory: &Path) -> Result<bool, Error> {
    let scenario = load_scenario(args)?;
    let text = std::fs::read_to_string(trajectory)?;
    let traj = output::read_trajectory_csv(&text, &scenario)?;
    let report = check_optimality(&scenario, &traj)?;
    for c in &report.conditions {
        println!(
            "{}: {} (worst {:.3e}; {})",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.worst,
            c.detail
        );
    }
    Ok(report.passed())
}

fn run_oracle(args: &ScenarioArgs, grid_text: &str, ds: f64, out: &Path) -> Result<(), Error> {
    let scenario = load_scenario(args)?;
    let dims: Vec<usize> = grid_text
        .split('x')
        .map(|d| {
            d.parse::<usize>()
                .map_err(|e| Error::ModelValidation(format!("bad grid {grid_text:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if dims.len() != 3 {
        return Err(Error::ModelValidation(format!(
            "grid must be NHxNVxNG, got {grid_text:?}"
        )));
    }
    let grid = GridSpec::new(dims[0], dims[1], dims[2], ds)?;
    let traj = cdaopt_core::optimal::generate_trajectory(&scenario)?;
    let dp = dp_solve(&scenario, &grid)?;
    let rep = compare(&traj, &dp)?;
    println!(
        "{}: generator {:.4} vs DP {:.4} ({}), gap {:.4}%, TOD gap {:.3} NM, \
         max CAS deviation {:.2} kt",
        scenario.name,
        traj.totals.cost,
        dp.cost,
        grid_text,
        rep.cost_gap_rel * 100.0,
        rep.tod_gap_nm,
        rep.max_cas_dev_kt
    );
    let doc = serde_json::json!({
        "scenario": scenario.name,
        "grid": grid_text,
        "ds_m": ds,
        "generator_cost": traj.totals.cost,
        "dp_cost": dp.cost,
        "cost_gap_rel": rep.cost_gap_rel,
        "cost_gap_signed": rep.cost_gap_signed,
        "tod_gap_nm": rep.tod_gap_nm,
        "max_cas_dev_kt": rep.max_cas_dev_kt,
        "generator_tod_nm": units::to_nm(traj.tod_x),
        "dp_tod_nm": units::to_nm(dp.tod_x),
    });
    output::write_atomic(
        &out.join(format!("{}_oracle.json", scenario.name)),
        serde_json::to_string_pretty(&doc)?.as_bytes(),
    )?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Result<bool, Error> = match &cli.command {
        Command::Solve {
            scenario,
            out,
            format,
        } => run_solve(scenario, out, format).map(|_| true),
        Command::Sweep {
            scenario,
            kind,
            values,
            magnitude,
            profiles,
            out,
            format,
        } => run_sweep(
            scenario,
            kind,
            values,
            *magnitude,
            profiles.as_deref(),
            out,
            format,
        )
        .map(|_| true),
        Command::Check {
            scenario,
            trajectory,
        } => run_check(scenario, trajectory),
        Command::Oracle {
            scenario,
            grid,
            ds,
            out,
        } => run_oracle(scenario, grid, *ds, out).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
