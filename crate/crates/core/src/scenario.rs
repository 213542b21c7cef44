//! Scenario definition: boundary conditions, wind, cost, and limits.
//!
//! Scenario files use aviation units (knots, feet, nautical miles) and are
//! converted to SI on load. The aircraft model is referenced by path relative
//! to the scenario file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::airmodel;
use crate::dynamics::{pure_state_constraints, PathLimits};
use crate::environment::WindProfile;
use crate::error::{Error, Result};
use crate::performance::{AircraftModel, CostKind, CostSpec, Species};
use crate::units;

/// A fully loaded descent scenario in SI units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub aircraft: AircraftModel,
    pub wind: WindProfile,
    pub cost_kind: CostKind,
    /// Initial (cruise) calibrated airspeed, m/s.
    pub initial_cas: f64,
    /// Initial (cruise) altitude, m.
    pub initial_h: f64,
    /// Meter-fix calibrated airspeed, m/s.
    pub final_cas: f64,
    /// Meter-fix altitude, m.
    pub final_h: f64,
    /// Meter-fix along-track position, m (negative).
    pub final_x: f64,
    /// Along-track datum the cruise cost is measured from, m (negative).
    pub d_max: f64,
    pub limits: PathLimits,
}

impl Scenario {
    pub fn initial_tas(&self) -> Result<f64> {
        airmodel::tas_from_cas(self.initial_cas, self.initial_h)
    }

    pub fn final_tas(&self) -> Result<f64> {
        airmodel::tas_from_cas(self.final_cas, self.final_h)
    }

    /// Cost coefficients for this scenario's cruise condition.
    pub fn cost_spec(&self) -> Result<CostSpec> {
        CostSpec::for_scenario(
            self.cost_kind,
            &self.aircraft,
            &self.wind,
            self.initial_tas()?,
            self.initial_h,
            self.d_max,
        )
    }

    /// Load-time consistency checks.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ModelValidation(msg));
        self.limits.validate()?;
        if self.initial_h <= self.final_h {
            return fail(format!(
                "initial altitude {:.0} m must exceed final altitude {:.0} m",
                self.initial_h, self.final_h
            ));
        }
        if self.final_x <= self.d_max {
            return fail(format!(
                "meter fix x={:.0} m must lie inside the d_max datum {:.0} m",
                self.final_x, self.d_max
            ));
        }
        // crab feasibility margin over the altitude band
        let (v_lo_top, _) = self.aircraft.envelope.tas_bounds(self.initial_h)?;
        let (v_lo_bot, _) = self.aircraft.envelope.tas_bounds(self.final_h)?;
        let v_min = v_lo_top.min(v_lo_bot);
        for i in 0..=40 {
            let h = self.final_h + (self.initial_h - self.final_h) * i as f64 / 40.0;
            let w = self.wind.wind_at(h);
            if w.wc.abs() >= 0.9 * v_min {
                return fail(format!(
                    "cross wind {:.1} m/s at h={:.0} m leaves no crab margin (V_min,TAS = {:.1})",
                    w.wc, h, v_min
                ));
            }
        }
        // boundary states must satisfy the envelope
        for (cas, h, what) in [
            (self.initial_cas, self.initial_h, "initial"),
            (self.final_cas, self.final_h, "final"),
        ] {
            let v = airmodel::tas_from_cas(cas, h)?;
            let s = pure_state_constraints(v, h, &self.aircraft.envelope)?;
            if s.iter().any(|&x| x > 0.0) {
                return fail(format!("{what} state violates the flight envelope: {s:?}"));
            }
        }
        Ok(())
    }

    /// Load a scenario file, resolving the aircraft reference relative to the
    /// scenario's directory unless an override model is supplied.
    pub fn load(path: &Path, aircraft_override: Option<&Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ScenarioFile = serde_json::from_str(&text)?;
        let aircraft_path = match aircraft_override {
            Some(p) => p.to_path_buf(),
            None => {
                let base = path.parent().unwrap_or_else(|| Path::new("."));
                base.join(&file.aircraft)
            }
        };
        let aircraft = AircraftModel::load(&aircraft_path)?;
        let scenario = file.into_scenario(aircraft)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_file(file: ScenarioFile, aircraft: AircraftModel) -> Result<Self> {
        let scenario = file.into_scenario(aircraft)?;
        scenario.validate()?;
        Ok(scenario)
    }
}

/// One wind record of the scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindRecordFile {
    pub h_ft: f64,
    pub wh_kt: f64,
    pub wc_kt: f64,
}

/// On-disk scenario with explicit aviation units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    /// Aircraft model path, relative to this file.
    pub aircraft: String,
    pub cost: CostFile,
    pub wind: Vec<WindRecordFile>,
    pub initial: EndpointFile,
    pub r#final: FixFile,
    pub d_max_nm: f64,
    pub limits: LimitsFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointFile {
    pub cas_kt: f64,
    pub h_ft: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixFile {
    pub cas_kt: f64,
    pub h_ft: f64,
    pub x_nm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitsFile {
    pub gamma_min_deg: f64,
    pub gamma_max_deg: f64,
    pub rod_min_mps: f64,
    pub rod_max_mps: f64,
}

impl ScenarioFile {
    fn into_scenario(self, aircraft: AircraftModel) -> Result<Scenario> {
        let cost_kind = match (self.cost.kind.as_str(), self.cost.species.as_deref()) {
            ("fuel", _) => CostKind::Fuel,
            ("emission", Some("nox")) => CostKind::Emission(Species::Nox),
            ("emission", Some("co")) => CostKind::Emission(Species::Co),
            ("emission", Some("hc")) => CostKind::Emission(Species::Hc),
            (kind, species) => {
                return Err(Error::ModelValidation(format!(
                    "unknown cost kind {kind:?} / species {species:?}"
                )))
            }
        };
        if self.wind.is_empty() {
            return Err(Error::ModelValidation(
                "scenario has no wind records".into(),
            ));
        }
        let wind = WindProfile::new(
            self.wind
                .iter()
                .map(|w| (units::ft(w.h_ft), units::kt(w.wh_kt), units::kt(w.wc_kt)))
                .collect(),
        )?;
        Ok(Scenario {
            name: self.name,
            aircraft,
            wind,
            cost_kind,
            initial_cas: units::kt(self.initial.cas_kt),
            initial_h: units::ft(self.initial.h_ft),
            final_cas: units::kt(self.r#final.cas_kt),
            final_h: units::ft(self.r#final.h_ft),
            final_x: units::nm(self.r#final.x_nm),
            d_max: units::nm(self.d_max_nm),
            limits: PathLimits {
                gamma_min: self.limits.gamma_min_deg.to_radians(),
                gamma_max: self.limits.gamma_max_deg.to_radians(),
                rod_min: self.limits.rod_min_mps,
                rod_max: self.limits.rod_max_mps,
            },
        })
    }
}
