//! Shipped synthetic aircraft and scenario builders.
//!
//! The aircraft JSON files under `data/aircraft/` are compiled in so library
//! users and tests share one source of truth with the CLI data directory.

use crate::dynamics::PathLimits;
use crate::environment::WindProfile;
use crate::performance::{AircraftModel, CostKind, CostSpec};
use crate::scenario::Scenario;
use crate::units;

const NARROWBODY_JSON: &str = include_str!("../../../data/aircraft/narrowbody.json");
const WIDEBODY_JSON: &str = include_str!("../../../data/aircraft/widebody.json");

/// The SN-120 synthetic narrowbody.
pub fn narrowbody() -> AircraftModel {
    AircraftModel::from_json(NARROWBODY_JSON).expect("embedded narrowbody model is valid")
}

/// The SW-260 synthetic widebody.
pub fn widebody() -> AircraftModel {
    AircraftModel::from_json(WIDEBODY_JSON).expect("embedded widebody model is valid")
}

/// Flight-path-angle and descent-rate limits used by all shipped scenarios.
pub fn table_limits() -> PathLimits {
    PathLimits {
        gamma_min: -6.0_f64.to_radians(),
        gamma_max: 0.0,
        rod_min: 2.54,
        rod_max: 25.0,
    }
}

/// Cost coefficients for the standard cruise condition (265 kt CAS at
/// 35,000 ft) with the d_max datum at -200 NM.
pub fn cost_spec(kind: CostKind, model: &AircraftModel, wind: &WindProfile) -> CostSpec {
    let h0 = units::ft(35_000.0);
    let v_t0 = crate::airmodel::tas_from_cas(units::kt(265.0), h0).expect("cruise TAS");
    CostSpec::for_scenario(kind, model, wind, v_t0, h0, units::nm(-200.0))
        .expect("cost spec for standard cruise")
}

/// A scenario with the standard metering conditions (265 kt/35,000 ft down to
/// 250 kt/13,000 ft at -40 NM) and the given cost and wind.
pub fn scenario(name: &str, model: AircraftModel, kind: CostKind, wind: WindProfile) -> Scenario {
    Scenario {
        name: name.to_string(),
        aircraft: model,
        wind,
        cost_kind: kind,
        initial_cas: units::kt(265.0),
        initial_h: units::ft(35_000.0),
        final_cas: units::kt(250.0),
        final_h: units::ft(13_000.0),
        final_x: units::nm(-40.0),
        d_max: units::nm(-200.0),
        limits: table_limits(),
    }
}

/// The shipped scenario set: fuel and NOx across calm, tailwind, headwind,
/// and cross-wind conditions. The cross-wind NOx pair flies the widebody,
/// whose speed placard turns the cross-wind case into a constrained arc
/// while its matched no-cross baseline stays interior.
pub fn shipped_scenarios() -> Vec<Scenario> {
    use crate::performance::Species::Nox;
    let nb = narrowbody;
    let wb = widebody;
    vec![
        scenario(
            "fuel_calm",
            nb(),
            CostKind::Fuel,
            WindProfile::constant(0.0, 0.0),
        ),
        scenario(
            "fuel_tail30",
            nb(),
            CostKind::Fuel,
            WindProfile::constant(30.0, 0.0),
        ),
        scenario(
            "fuel_head30",
            nb(),
            CostKind::Fuel,
            WindProfile::constant(-30.0, 0.0),
        ),
        scenario(
            "fuel_cross",
            nb(),
            CostKind::Fuel,
            WindProfile::constant(30.0, 51.961_524),
        ),
        scenario(
            "nox_calm",
            nb(),
            CostKind::Emission(Nox),
            WindProfile::constant(0.0, 0.0),
        ),
        scenario(
            "nox_tail30",
            nb(),
            CostKind::Emission(Nox),
            WindProfile::constant(30.0, 0.0),
        ),
        scenario(
            "nox_head30",
            nb(),
            CostKind::Emission(Nox),
            WindProfile::constant(-30.0, 0.0),
        ),
        scenario(
            "nox_cross",
            wb(),
            CostKind::Emission(Nox),
            WindProfile::constant(-30.0, 51.961_524),
        ),
        scenario(
            "nox_cross_baseline",
            wb(),
            CostKind::Emission(Nox),
            WindProfile::constant(-30.0, 0.0),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_models_pass_validation() {
        narrowbody().validate().unwrap();
        widebody().validate().unwrap();
    }

    #[test]
    fn shipped_scenarios_are_consistent() {
        for sc in shipped_scenarios() {
            sc.validate().unwrap();
        }
    }
}
