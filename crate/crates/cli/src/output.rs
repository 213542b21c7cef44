//! Bit-stable serialization of trajectories, summaries, and reports.
//!
//! Files are written atomically (temp file + rename) and all floating-point
//! fields use fixed scientific formatting, so identical inputs produce
//! byte-identical outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cdaopt_core::airmodel;
use cdaopt_core::dynamics::{pure_state_constraints, State};
use cdaopt_core::error::{Error, Result};
use cdaopt_core::optimal::{
    check_optimality, Arc, ArcKind, ArcSample, OptimalityReport, Trajectory,
};
use cdaopt_core::scenario::Scenario;
use cdaopt_core::units;

pub const TRAJECTORY_HEADER: &str = "# cdaopt trajectory v1";
const UNITS_LINE: &str = "# units SI; 1 NM = 1852 m; 1 kt = 1852/3600 m/s; 1 ft = 0.3048 m";
const COLUMNS: &str =
    "t,v_tas,v_cas,mach,h,x_s,gamma,arc,h_norm,hgamma_norm,gamma_s_norm,s_cas_max,s_cas_min,s_mach_max,s_mach_min";

fn fmt(x: f64) -> String {
    format!("{x:.9e}")
}

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Trajectory CSV with per-sample adjoint diagnostics.
pub fn trajectory_csv(
    scenario: &Scenario,
    traj: &Trajectory,
    report: &OptimalityReport,
) -> Result<String> {
    let mut out = String::new();
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    out.push_str(UNITS_LINE);
    out.push('\n');
    out.push_str(COLUMNS);
    out.push('\n');
    let mut diag = report.diagnostics.iter();
    for (arc, s) in traj.samples() {
        let d = diag
            .next()
            .ok_or_else(|| Error::Numeric("diagnostics shorter than trajectory".into()))?;
        let cas = airmodel::cas_from_tas(s.state.v, s.state.h)?;
        let mach = airmodel::mach(s.state.v, s.state.h)?;
        let sv = pure_state_constraints(s.state.v, s.state.h, &scenario.aircraft.envelope)?;
        let row = [
            fmt(s.state.t),
            fmt(s.state.v),
            fmt(cas),
            fmt(mach),
            fmt(s.state.h),
            fmt(s.state.x),
            fmt(s.gamma),
            arc.kind.label(),
            fmt(d.hamiltonian),
            fmt(d.switching),
            fmt(d.gamma_s),
            fmt(sv[0]),
            fmt(sv[1]),
            fmt(sv[2]),
            fmt(sv[3]),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Parse a trajectory CSV back into arcs (states and controls only; the
/// derived columns are recomputed by consumers).
pub fn read_trajectory_csv(text: &str, scenario: &Scenario) -> Result<Trajectory> {
    let mut arcs: Vec<Arc> = Vec::new();
    let mut current: Option<Arc> = None;
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("t,") || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 8 {
            return Err(Error::ModelValidation(format!(
                "trajectory row has {} columns, expected at least 8",
                cols.len()
            )));
        }
        let parse = |i: usize| -> Result<f64> {
            cols[i]
                .parse::<f64>()
                .map_err(|e| Error::ModelValidation(format!("bad float in column {i}: {e}")))
        };
        let kind = ArcKind::parse(cols[7])
            .ok_or_else(|| Error::ModelValidation(format!("unknown arc kind {:?}", cols[7])))?;
        let sample = ArcSample {
            state: State {
                t: parse(0)?,
                v: parse(1)?,
                h: parse(4)?,
                x: parse(5)?,
            },
            gamma: parse(6)?,
        };
        match current.as_mut() {
            Some(arc) if arc.kind == kind => arc.samples.push(sample),
            _ => {
                if let Some(done) = current.take() {
                    arcs.push(done);
                }
                current = Some(Arc {
                    kind,
                    samples: vec![sample],
                });
            }
        }
    }
    if let Some(done) = current.take() {
        arcs.push(done);
    }
    if arcs.is_empty() {
        return Err(Error::ModelValidation("empty trajectory file".into()));
    }
    let junctions = arcs
        .windows(2)
        .map(|p| cdaopt_core::optimal::Junction {
            time: p[1].first().state.t,
            from: p[0].kind,
            to: p[1].kind,
            state: p[1].first().state,
        })
        .collect();
    let tod_x = arcs[0].first().state.x;
    let duration = arcs.last().unwrap().last().state.t - arcs[0].first().state.t;
    let cost = scenario.cost_spec()?;
    Ok(Trajectory {
        arcs,
        junctions,
        tod_x,
        arrival_time: (tod_x - cost.d_max) / cost.cruise_ground_speed + duration,
        totals: cdaopt_core::optimal::Totals {
            cost: 0.0,
            fuel_kg: 0.0,
            emissions_g: None,
        },
    })
}

/// Summary row mirroring the performance-table shape.
#[derive(serde::Serialize)]
pub struct Summary {
    pub scenario: String,
    pub aircraft: String,
    pub cost_kind: String,
    pub tod_nm: f64,
    pub ta_s: f64,
    pub fuel_kg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emissions_g: Option<f64>,
    pub cost: f64,
    pub arc_sequence: Vec<String>,
    pub check_passed: bool,
}

pub fn summary(scenario: &Scenario, traj: &Trajectory, check_passed: bool) -> Summary {
    Summary {
        scenario: scenario.name.clone(),
        aircraft: scenario.aircraft.name.clone(),
        cost_kind: scenario.cost_kind.to_string(),
        tod_nm: units::to_nm(traj.tod_x),
        ta_s: traj.arrival_time,
        fuel_kg: traj.totals.fuel_kg,
        emissions_g: traj.totals.emissions_g,
        cost: traj.totals.cost,
        arc_sequence: traj.arcs.iter().map(|a| a.kind.label()).collect(),
        check_passed,
    }
}

/// Solve a scenario, verify it, and write the output files. Returns the
/// summary and the verification outcome.
pub fn solve_and_write(
    scenario: &Scenario,
    out_dir: &Path,
    format: &str,
) -> Result<(Summary, OptimalityReport)> {
    let traj = cdaopt_core::optimal::generate_trajectory(scenario)?;
    let report = check_optimality(scenario, &traj)?;
    let stem: PathBuf = out_dir.join(&scenario.name);
    match format {
        "csv" => {
            let csv = trajectory_csv(scenario, &traj, &report)?;
            write_atomic(&stem.with_extension("csv"), csv.as_bytes())?;
        }
        "json" => {
            let json = serde_json::to_string_pretty(&traj)?;
            write_atomic(&stem.with_extension("trajectory.json"), json.as_bytes())?;
        }
        other => {
            return Err(Error::ModelValidation(format!(
                "unknown output format {other:?} (expected csv or json)"
            )))
        }
    }
    let sum = summary(scenario, &traj, report.passed());
    let json = serde_json::to_string_pretty(&sum)?;
    write_atomic(&stem.with_extension("summary.json"), json.as_bytes())?;
    Ok((sum, report))
}
