//! Aircraft performance: lift, drag, idle thrust, idle fuel flow, emission
//! indices, and the cruise/descent cost coefficients with their partials.
//!
//! The drag polar is the parabolic clean form C_D = cd0 + cd2·C_L²; idle
//! thrust is quadratic in altitude and idle fuel flow linear in altitude
//! (classic descent-performance forms). Both are independent of airspeed,
//! which the cost formulation permits since it only requires functions of
//! (V_T, h). Emission indices come from a reference table over corrected
//! fuel flow, interpolated log-log and corrected to flight conditions.

use serde::{Deserialize, Serialize};

use crate::airmodel::{self, G0};
use crate::environment::WindProfile;
use crate::error::{Error, Result};
use crate::optimal::Trajectory;
use crate::units;

/// Gaseous emission species with ICAO databank indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Nox,
    Co,
    Hc,
}

impl std::fmt::Display for Species {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Species::Nox => write!(f, "nox"),
            Species::Co => write!(f, "co"),
            Species::Hc => write!(f, "hc"),
        }
    }
}

/// What the optimizer minimizes: fuel mass or one emission species mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostKind {
    Fuel,
    Emission(Species),
}

impl std::fmt::Display for CostKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CostKind::Fuel => write!(f, "fuel"),
            CostKind::Emission(sp) => write!(f, "{sp}"),
        }
    }
}

/// CAS/Mach flight-envelope limits (SI internally).
#[derive(Debug, Clone, Copy)]
pub struct Envelope {
    pub cas_min: f64,
    pub cas_max: f64,
    pub mach_min: f64,
    pub mach_max: f64,
}

impl Envelope {
    /// TAS interval admissible at altitude `h`: the intersection of the CAS
    /// band and the Mach band.
    pub fn tas_bounds(&self, h: f64) -> Result<(f64, f64)> {
        let lo = airmodel::tas_from_cas(self.cas_min, h)?
            .max(airmodel::tas_from_mach(self.mach_min, h)?);
        let hi = airmodel::tas_from_cas(self.cas_max, h)?
            .min(airmodel::tas_from_mach(self.mach_max, h)?);
        Ok((lo, hi))
    }
}

/// Point-mass aircraft model with idle-descent performance data.
#[derive(Debug, Clone)]
pub struct AircraftModel {
    pub name: String,
    /// Constant mass during the en route descent, kg.
    pub mass: f64,
    /// Reference wing area, m².
    pub wing_area: f64,
    pub cd0: f64,
    pub cd2: f64,
    /// Idle thrust T = ct1·(1 - h/ct2 + ct3·h²): (N, m, 1/m²).
    pub ct1: f64,
    pub ct2: f64,
    pub ct3: f64,
    /// Idle fuel flow cf3·(1 - h/cf4) kg/min, floored at zero: (kg/min, m).
    pub cf3: f64,
    pub cf4: f64,
    /// Fuel flow at the cruise condition, kg/s.
    pub cruise_fuel_flow: f64,
    /// Nominal zero-wind cruise ground speed, m/s (documentation/default;
    /// scenario loading recomputes the actual cruise ground speed).
    pub cruise_speed: f64,
    /// Per-species (corrected fuel flow kg/s, EI g/kg), flow strictly increasing.
    pub ei_nox: Vec<(f64, f64)>,
    pub ei_co: Vec<(f64, f64)>,
    pub ei_hc: Vec<(f64, f64)>,
    pub envelope: Envelope,
}

/// On-disk aircraft model with explicit units.
#[derive(Debug, Serialize, Deserialize)]
pub struct AircraftModelFile {
    pub name: String,
    pub mass_kg: f64,
    pub wing_area_m2: f64,
    pub drag_polar: DragPolarFile,
    pub idle_thrust: IdleThrustFile,
    pub idle_fuel: IdleFuelFile,
    pub cruise: CruiseFile,
    /// Emission-index tables: corrected fuel flow in kg/s, EI in g/kg.
    pub emission_indices: EmissionTablesFile,
    pub envelope: EnvelopeFile,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DragPolarFile {
    pub cd0: f64,
    pub cd2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IdleThrustFile {
    pub ct1_n: f64,
    pub ct2_m: f64,
    pub ct3_per_m2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IdleFuelFile {
    pub cf3_kg_per_min: f64,
    pub cf4_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CruiseFile {
    pub fuel_flow_kg_per_s: f64,
    pub ground_speed_mps: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmissionTablesFile {
    pub nox: Vec<(f64, f64)>,
    pub co: Vec<(f64, f64)>,
    pub hc: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EnvelopeFile {
    pub cas_min_kt: f64,
    pub cas_max_kt: f64,
    pub mach_min: f64,
    pub mach_max: f64,
}

impl TryFrom<AircraftModelFile> for AircraftModel {
    type Error = Error;

    fn try_from(f: AircraftModelFile) -> Result<Self> {
        let model = AircraftModel {
            name: f.name,
            mass: f.mass_kg,
            wing_area: f.wing_area_m2,
            cd0: f.drag_polar.cd0,
            cd2: f.drag_polar.cd2,
            ct1: f.idle_thrust.ct1_n,
            ct2: f.idle_thrust.ct2_m,
            ct3: f.idle_thrust.ct3_per_m2,
            cf3: f.idle_fuel.cf3_kg_per_min,
            cf4: f.idle_fuel.cf4_m,
            cruise_fuel_flow: f.cruise.fuel_flow_kg_per_s,
            cruise_speed: f.cruise.ground_speed_mps,
            ei_nox: f.emission_indices.nox,
            ei_co: f.emission_indices.co,
            ei_hc: f.emission_indices.hc,
            envelope: Envelope {
                cas_min: units::kt(f.envelope.cas_min_kt),
                cas_max: units::kt(f.envelope.cas_max_kt),
                mach_min: f.envelope.mach_min,
                mach_max: f.envelope.mach_max,
            },
        };
        model.validate()?;
        Ok(model)
    }
}

impl AircraftModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: AircraftModelFile = serde_json::from_str(text)?;
        Self::try_from(file)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Load-time invariants plus a net-drag scan over the flight envelope
    /// (idle descent capability requires D - T > 0 everywhere we may fly).
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ModelValidation(msg));
        if self.mass <= 0.0 || self.wing_area <= 0.0 {
            return fail("mass and wing area must be positive".into());
        }
        if self.cd2 < 0.0 {
            return fail("cd2 must be non-negative".into());
        }
        if self.envelope.cas_min >= self.envelope.cas_max
            || self.envelope.mach_min >= self.envelope.mach_max
        {
            return fail("envelope min must be below max".into());
        }
        for (name, table) in [
            ("nox", &self.ei_nox),
            ("co", &self.ei_co),
            ("hc", &self.ei_hc),
        ] {
            if table.is_empty() {
                return fail(format!("emission table {name} is empty"));
            }
            for pair in table.windows(2) {
                if pair[1].0 <= pair[0].0 {
                    return fail(format!(
                        "emission table {name} fuel flows must be strictly increasing"
                    ));
                }
            }
        }
        // envelope scan: net drag positive from sea level to 45,000 ft
        let h_max = units::ft(45_000.0).min(airmodel::H_CEILING);
        for i in 0..=60 {
            let h = h_max * i as f64 / 60.0;
            let (lo, hi) = self.envelope.tas_bounds(h)?;
            if lo >= hi {
                continue; // envelope empty at this altitude
            }
            if self.fuel_flow_idle(h) <= 0.0 {
                return fail(format!(
                    "idle fuel flow vanishes at h={h:.0} m; descent cost must stay positive"
                ));
            }
            for j in 0..=24 {
                let v = lo + (hi - lo) * j as f64 / 24.0;
                let dn = self.net_drag(v, h)?;
                if dn <= 0.0 {
                    return fail(format!(
                        "net drag {dn:.1} N <= 0 at V_T={v:.1} m/s, h={h:.0} m; \
                         idle descent not possible there"
                    ));
                }
            }
        }
        Ok(())
    }

    /// C_L from the lift-equals-weight assumption: 2mg / (ρ V_T² S).
    pub fn lift_coefficient(&self, v_tas: f64, h: f64) -> Result<f64> {
        let rho = airmodel::atmos_at(h)?.density;
        Ok(2.0 * self.mass * G0 / (rho * v_tas * v_tas * self.wing_area))
    }

    /// Drag ½ρV²S·(cd0 + cd2·C_L²), N.
    pub fn drag(&self, v_tas: f64, h: f64) -> Result<f64> {
        let rho = airmodel::atmos_at(h)?.density;
        let cl = self.lift_coefficient(v_tas, h)?;
        let cd = self.cd0 + self.cd2 * cl * cl;
        Ok(0.5 * rho * v_tas * v_tas * self.wing_area * cd)
    }

    /// Idle thrust ct1·(1 - h/ct2 + ct3·h²), N. Altitude-only model.
    pub fn idle_thrust(&self, h: f64) -> f64 {
        self.ct1 * (1.0 - h / self.ct2 + self.ct3 * h * h)
    }

    /// Net drag D̃ = D - T_idle, N.
    pub fn net_drag(&self, v_tas: f64, h: f64) -> Result<f64> {
        Ok(self.drag(v_tas, h)? - self.idle_thrust(h))
    }

    /// Central finite differences of D̃ (relative step 1e-6).
    pub fn net_drag_partials(&self, v_tas: f64, h: f64) -> Result<(f64, f64)> {
        let dv = v_tas.abs() * 1e-6;
        let ddv = (self.net_drag(v_tas + dv, h)? - self.net_drag(v_tas - dv, h)?) / (2.0 * dv);
        let dh = (h.abs() * 1e-6).max(1e-3);
        let ddh = (self.net_drag(v_tas, h + dh)? - self.net_drag(v_tas, h - dh)?) / (2.0 * dh);
        Ok((ddv, ddh))
    }

    /// Idle fuel flow, kg/s: cf3·(1 - h/cf4)/60 floored at zero.
    pub fn fuel_flow_idle(&self, h: f64) -> f64 {
        (self.cf3 * (1.0 - h / self.cf4) / 60.0).max(0.0)
    }

    fn ei_table(&self, species: Species) -> &[(f64, f64)] {
        match species {
            Species::Nox => &self.ei_nox,
            Species::Co => &self.ei_co,
            Species::Hc => &self.ei_hc,
        }
    }

    /// Reference-condition corrected fuel flow: w = ḟ/δ · θ^3.8 · exp(0.2 M²).
    pub fn corrected_fuel_flow(&self, fuel_flow: f64, v_tas: f64, h: f64) -> Result<f64> {
        let atm = airmodel::atmos_at(h)?;
        let m = v_tas / atm.sound_speed;
        Ok(fuel_flow / atm.pressure_ratio * atm.temperature_ratio.powf(3.8) * (0.2 * m * m).exp())
    }

    /// Emission index at flight conditions for an arbitrary engine fuel flow,
    /// g/kg. Log-log table interpolation on corrected fuel flow (clamped to
    /// the table ends), then the ambient correction: √(δ^1.02/θ^3.3) for NOx
    /// and its inverse for CO/HC. Humidity correction is not modeled.
    pub fn emission_index_at_flow(
        &self,
        species: Species,
        fuel_flow: f64,
        v_tas: f64,
        h: f64,
    ) -> Result<f64> {
        let atm = airmodel::atmos_at(h)?;
        let w = self.corrected_fuel_flow(fuel_flow, v_tas, h)?;
        let table = self.ei_table(species);
        let ei_ref = interp_loglog(table, w);
        let ratio = atm.pressure_ratio.powf(1.02) / atm.temperature_ratio.powf(3.3);
        let factor = match species {
            Species::Nox => ratio.sqrt(),
            Species::Co | Species::Hc => 1.0 / ratio,
        };
        Ok(ei_ref * factor)
    }

    /// Emission index of the idle engine at (V_T, h), g/kg.
    pub fn emission_index(&self, species: Species, v_tas: f64, h: f64) -> Result<f64> {
        self.emission_index_at_flow(species, self.fuel_flow_idle(h), v_tas, h)
    }
}

/// Log-log interpolation with clamping to the end EI values.
fn interp_loglog(table: &[(f64, f64)], w: f64) -> f64 {
    if table.len() == 1 || w <= table[0].0 {
        return table[0].1;
    }
    let last = table[table.len() - 1];
    if w >= last.0 {
        return last.1;
    }
    let idx = table.partition_point(|p| p.0 <= w) - 1;
    let (w0, e0) = table[idx];
    let (w1, e1) = table[idx + 1];
    let t = (w.ln() - w0.ln()) / (w1.ln() - w0.ln());
    (e0.ln() + t * (e1.ln() - e0.ln())).exp()
}

/// Cost coefficients for one scenario: K_cr (cost per meter of cruise) and
/// the d_max datum the Mayer term is measured from.
#[derive(Debug, Clone, Copy)]
pub struct CostSpec {
    pub kind: CostKind,
    /// Cruise cost per distance: kg/m for fuel, g/m for emissions.
    pub k_cr: f64,
    /// Along-track datum (negative, farther out than any feasible TOD), m.
    pub d_max: f64,
    /// Cruise ground speed used to build K_cr, m/s. K_cr·V_G,cr is the
    /// normalization scale for every "≈ 0" tolerance in the checker.
    pub cruise_ground_speed: f64,
}

impl CostSpec {
    /// Build the cost coefficients for a scenario cruising at (V_T0, h0).
    ///
    /// The cruise ground speed is c·V_T0 + W_h(h0); constant-with-altitude
    /// wind makes it constant over the whole cruise segment.
    pub fn for_scenario(
        kind: CostKind,
        model: &AircraftModel,
        wind: &WindProfile,
        v_t0: f64,
        h0: f64,
        d_max: f64,
    ) -> Result<Self> {
        let eff = wind.wind_effect(v_t0, h0)?;
        let v_g = eff.ground_speed(v_t0);
        if v_g <= 0.0 {
            return Err(Error::ModelValidation(format!(
                "cruise ground speed {v_g:.2} m/s must be positive"
            )));
        }
        let k_cr = match kind {
            CostKind::Fuel => model.cruise_fuel_flow / v_g,
            CostKind::Emission(sp) => {
                let ei_cr = model.emission_index_at_flow(sp, model.cruise_fuel_flow, v_t0, h0)?;
                ei_cr * model.cruise_fuel_flow / v_g
            }
        };
        Ok(CostSpec {
            kind,
            k_cr,
            d_max,
            cruise_ground_speed: v_g,
        })
    }

    /// K_cr·V_G,cr — the cost-rate scale all normalized tolerances refer to.
    pub fn scale(&self) -> f64 {
        self.k_cr * self.cruise_ground_speed
    }

    /// Descent cost rate K_des(V_T, h): ḟ_idle for fuel (kg/s),
    /// EI·ḟ_idle for emissions (g/s).
    pub fn k_des(&self, model: &AircraftModel, v_tas: f64, h: f64) -> Result<f64> {
        match self.kind {
            CostKind::Fuel => Ok(model.fuel_flow_idle(h)),
            CostKind::Emission(sp) => {
                Ok(model.emission_index(sp, v_tas, h)? * model.fuel_flow_idle(h))
            }
        }
    }

    /// Central finite differences of K_des (relative step 1e-6).
    pub fn k_des_partials(&self, model: &AircraftModel, v_tas: f64, h: f64) -> Result<(f64, f64)> {
        let dv = v_tas.abs() * 1e-6;
        let ddv =
            (self.k_des(model, v_tas + dv, h)? - self.k_des(model, v_tas - dv, h)?) / (2.0 * dv);
        let dh = (h.abs() * 1e-6).max(1e-3);
        let ddh =
            (self.k_des(model, v_tas, h + dh)? - self.k_des(model, v_tas, h - dh)?) / (2.0 * dh);
        Ok((ddv, ddh))
    }
}

/// Total cost of a generated trajectory: the Mayer form
/// J = K_cr·(x_s(t0) - d_max) + ∫K_des dt, evaluated by per-arc quadrature.
///
/// Also evaluates the equivalent Lagrange form
/// J = K_cr·(x_s(t_f) - d_max) + ∫(-K_cr·(cV_T + W_h) + K_des) dt and
/// requires the two to agree to 1e-8 relative; disagreement means the sample
/// bookkeeping is inconsistent with the integrated x_s.
pub fn total_cost(
    traj: &Trajectory,
    cost: &CostSpec,
    model: &AircraftModel,
    wind: &WindProfile,
) -> Result<f64> {
    let x0 = traj.initial_state().x;
    let xf = traj.terminal_state().x;
    if x0 < cost.d_max {
        return Err(Error::ModelValidation(format!(
            "TOD {:.1} m lies beyond the d_max datum {:.1} m; no cruise segment exists",
            x0, cost.d_max
        )));
    }
    let mut kdes_int = 0.0;
    let mut lagrange_int = 0.0;
    for arc in &traj.arcs {
        let ts: Vec<f64> = arc.samples.iter().map(|s| s.state.t).collect();
        let mut kdes = Vec::with_capacity(ts.len());
        let mut lagr = Vec::with_capacity(ts.len());
        for s in &arc.samples {
            let kd = cost.k_des(model, s.state.v, s.state.h)?;
            let eff = wind.wind_effect(s.state.v, s.state.h)?;
            kdes.push(kd);
            lagr.push(-cost.k_cr * eff.ground_speed(s.state.v) + kd);
        }
        kdes_int += crate::numerics::integrate_samples(&ts, &kdes);
        lagrange_int += crate::numerics::integrate_samples(&ts, &lagr);
    }
    let mayer = cost.k_cr * (x0 - cost.d_max) + kdes_int;
    let lagrange = cost.k_cr * (xf - cost.d_max) + lagrange_int;
    let denom = mayer.abs().max(lagrange.abs()).max(1e-30);
    if (mayer - lagrange).abs() / denom > 1e-8 {
        return Err(Error::Numeric(format!(
            "cost-form identity violated: Mayer {mayer:.9} vs Lagrange {lagrange:.9}"
        )));
    }
    Ok(mayer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::narrowbody as synthetic_narrowbody;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-30)
    }

    #[test]
    fn lift_coefficient_example() {
        let mut model = synthetic_narrowbody();
        model.mass = 60_000.0;
        model.wing_area = 105.0;
        let cl = model.lift_coefficient(200.0, 0.0).unwrap();
        // 2·60000·9.80665 / (ρ0·200²·105) with exact ISA sea-level density
        let rho0 = airmodel::atmos_at(0.0).unwrap().density;
        assert!(rel(cl, 2.0 * 60_000.0 * G0 / (rho0 * 200.0 * 200.0 * 105.0)) < 1e-14);
        assert!((cl - 0.2287).abs() < 1e-3);
        // ∝ 1/V²
        let cl2 = model.lift_coefficient(400.0, 0.0).unwrap();
        assert!(rel(cl2, cl / 4.0) < 1e-12);
    }

    #[test]
    fn drag_reduces_to_parasite_when_cd2_zero() {
        let mut model = synthetic_narrowbody();
        model.cd2 = 0.0;
        let rho = airmodel::atmos_at(5_000.0).unwrap().density;
        let d = model.drag(220.0, 5_000.0).unwrap();
        assert!(rel(d, 0.5 * rho * 220.0 * 220.0 * model.wing_area * model.cd0) < 1e-12);
    }

    #[test]
    fn drag_has_unique_interior_minimum_over_speed() {
        let model = synthetic_narrowbody();
        let h = 6_000.0;
        let vs: Vec<f64> = (0..400).map(|i| 90.0 + 0.5 * i as f64).collect();
        let ds: Vec<f64> = vs.iter().map(|&v| model.drag(v, h).unwrap()).collect();
        let mut sign_changes = 0;
        for i in 1..ds.len() - 1 {
            if ds[i] < ds[i - 1] && ds[i] <= ds[i + 1] {
                sign_changes += 1;
            }
        }
        assert_eq!(sign_changes, 1, "expected a single drag minimum");
    }

    #[test]
    fn idle_thrust_examples() {
        let mut model = synthetic_narrowbody();
        assert!(rel(model.idle_thrust(0.0), model.ct1) < 1e-14);
        model.ct1 = 0.0;
        assert_eq!(model.idle_thrust(8_000.0), 0.0);
        assert!(
            rel(
                model.net_drag(230.0, 8_000.0).unwrap(),
                model.drag(230.0, 8_000.0).unwrap()
            ) < 1e-14
        );
    }

    #[test]
    fn net_drag_positive_over_envelope() {
        // the shipped synthetic model must pass its own load-time scan
        synthetic_narrowbody().validate().unwrap();
    }

    #[test]
    fn idle_fuel_flow_examples() {
        let model = synthetic_narrowbody();
        assert!(rel(model.fuel_flow_idle(0.0), model.cf3 / 60.0) < 1e-14);
        assert_eq!(model.fuel_flow_idle(model.cf4), 0.0);
        let mid = model.fuel_flow_idle(model.cf4 / 2.0);
        assert!(rel(mid, model.cf3 / 120.0) < 1e-12);
    }

    #[test]
    fn emission_index_single_point_table() {
        let mut model = synthetic_narrowbody();
        model.ei_nox = vec![(0.5, 7.0)];
        // reference EI constant; only the ambient correction is left.
        // at sea level static the correction is exactly 1.
        let ei = model
            .emission_index_at_flow(Species::Nox, 0.02, 1e-9, 0.0)
            .unwrap();
        assert!(rel(ei, 7.0) < 1e-9);
        let ei_high = model
            .emission_index_at_flow(Species::Nox, 3.0, 1e-9, 0.0)
            .unwrap();
        assert!(rel(ei_high, 7.0) < 1e-9);
    }

    #[test]
    fn corrected_fuel_flow_sea_level_static() {
        let model = synthetic_narrowbody();
        let w = model.corrected_fuel_flow(0.31, 1e-12, 0.0).unwrap();
        assert!(rel(w, 0.31) < 1e-12);
    }

    #[test]
    fn loglog_interpolation_midpoint() {
        // hand computation: geometric midpoint of (0.2, 4) and (0.8, 16) is 8
        let table = [(0.2, 4.0), (0.8, 16.0)];
        let w = (0.2f64 * 0.8).sqrt();
        assert!(rel(interp_loglog(&table, w), 8.0) < 1e-12);
        // clamped ends
        assert_eq!(interp_loglog(&table, 0.1), 4.0);
        assert_eq!(interp_loglog(&table, 1.5), 16.0);
    }

    #[test]
    fn emission_index_continuous_near_table_knots() {
        let model = synthetic_narrowbody();
        // scan EI over altitude at fixed V: adjacent samples must not jump
        // more than the largest table gap
        let max_gap = model
            .ei_nox
            .windows(2)
            .map(|p| (p[1].1 - p[0].1).abs())
            .fold(0.0, f64::max);
        let mut prev: Option<f64> = None;
        for i in 0..=200 {
            let h = 12_000.0 * i as f64 / 200.0;
            let ei = model.emission_index(Species::Nox, 200.0, h).unwrap();
            if let Some(p) = prev {
                assert!((ei - p).abs() < max_gap);
            }
            prev = Some(ei);
        }
    }

    #[test]
    fn k_des_fuel_kind_is_idle_fuel_flow() {
        let model = synthetic_narrowbody();
        let wind = WindProfile::constant(0.0, 0.0);
        let cost =
            CostSpec::for_scenario(CostKind::Fuel, &model, &wind, 230.0, 10_668.0, -1e6).unwrap();
        for h in [3_000.0, 7_000.0, 10_000.0] {
            assert!(
                rel(
                    cost.k_des(&model, 210.0, h).unwrap(),
                    model.fuel_flow_idle(h)
                ) < 1e-14
            );
        }
        assert!(rel(cost.k_cr, model.cruise_fuel_flow / 230.0) < 1e-12);
    }

    #[test]
    fn k_des_constant_ei_reduces_to_scaled_fuel() {
        let mut model = synthetic_narrowbody();
        model.ei_nox = vec![(0.5, 6.0)];
        let wind = WindProfile::constant(0.0, 0.0);
        let cost = CostSpec::for_scenario(
            CostKind::Emission(Species::Nox),
            &model,
            &wind,
            230.0,
            10_668.0,
            -1e6,
        )
        .unwrap();
        // ambient NOx correction at (V, h) applies to the constant table value
        let v = 215.0;
        let h = 6_500.0;
        let atm = airmodel::atmos_at(h).unwrap();
        let corr = (atm.pressure_ratio.powf(1.02) / atm.temperature_ratio.powf(3.3)).sqrt();
        assert!(
            rel(
                cost.k_des(&model, v, h).unwrap(),
                6.0 * corr * model.fuel_flow_idle(h)
            ) < 1e-12
        );
    }

    #[test]
    fn k_des_partials_richardson_consistency() {
        let model = synthetic_narrowbody();
        let wind = WindProfile::constant(10.0, 0.0);
        let cost = CostSpec::for_scenario(
            CostKind::Emission(Species::Nox),
            &model,
            &wind,
            230.0,
            10_668.0,
            -1e6,
        )
        .unwrap();
        let (v, h) = (225.0, 8_200.0);
        let (dv, dh) = cost.k_des_partials(&model, v, h).unwrap();
        // independent half-step central differences
        let step_v = v * 5e-7;
        let fd_v = (cost.k_des(&model, v + step_v, h).unwrap()
            - cost.k_des(&model, v - step_v, h).unwrap())
            / (2.0 * step_v);
        let step_h = h * 5e-7;
        let fd_h = (cost.k_des(&model, v, h + step_h).unwrap()
            - cost.k_des(&model, v, h - step_h).unwrap())
            / (2.0 * step_h);
        assert!(rel(dv, fd_v) < 1e-5);
        assert!(rel(dh, fd_h) < 1e-5);
    }

    #[test]
    fn zero_length_descent_costs_only_the_cruise_term() {
        use crate::dynamics::State;
        use crate::optimal::{Arc, ArcKind, ArcSample, Totals, Trajectory};
        let model = synthetic_narrowbody();
        let wind = WindProfile::constant(0.0, 0.0);
        let cost =
            CostSpec::for_scenario(CostKind::Fuel, &model, &wind, 230.0, 10_668.0, -3e5).unwrap();
        let state = State {
            v: 230.0,
            h: 10_668.0,
            x: -7.4e4,
            t: 0.0,
        };
        let traj = Trajectory {
            arcs: vec![Arc {
                kind: ArcKind::BangHigh,
                samples: vec![ArcSample { state, gamma: 0.0 }],
            }],
            junctions: vec![],
            tod_x: state.x,
            arrival_time: 0.0,
            totals: Totals {
                cost: 0.0,
                fuel_kg: 0.0,
                emissions_g: None,
            },
        };
        let j = total_cost(&traj, &cost, &model, &wind).unwrap();
        assert!(rel(j, cost.k_cr * (state.x - cost.d_max)) < 1e-12);
    }

    #[test]
    fn cruise_ground_speed_includes_crab_loss() {
        let model = synthetic_narrowbody();
        let calm = WindProfile::constant(0.0, 0.0);
        let crosswind = WindProfile::constant(0.0, 60.0);
        let k0 =
            CostSpec::for_scenario(CostKind::Fuel, &model, &calm, 230.0, 10_668.0, -1e6).unwrap();
        let kc = CostSpec::for_scenario(CostKind::Fuel, &model, &crosswind, 230.0, 10_668.0, -1e6)
            .unwrap();
        assert!(kc.cruise_ground_speed < k0.cruise_ground_speed);
        assert!(kc.k_cr > k0.k_cr);
    }
}
