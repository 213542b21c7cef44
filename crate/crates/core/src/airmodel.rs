//! International Standard Atmosphere and airspeed conversions.
//!
//! Provides the atmosphere state (temperature, pressure, density, pressure
//! and temperature ratios, speed of sound) plus calibrated-airspeed and Mach
//! conversions with their analytic partial derivatives. The partials feed the
//! boundary-arc control law and the state-constraint gradients, so they are
//! exact rather than finite-differenced.

use crate::error::{Error, Result};

/// Standard gravitational acceleration, m/s².
pub const G0: f64 = 9.80665;
/// Specific gas constant for dry air, J/(kg·K).
pub const R_AIR: f64 = 287.05287;
/// Ratio of specific heats for air.
pub const GAMMA_AIR: f64 = 1.4;
/// Sea-level standard temperature, K.
pub const T0_ISA: f64 = 288.15;
/// Sea-level standard pressure, Pa.
pub const P0_ISA: f64 = 101_325.0;
/// Tropospheric lapse rate, K/m.
pub const LAPSE: f64 = -0.0065;
/// Tropopause altitude, m.
pub const H_TROPOPAUSE: f64 = 11_000.0;
/// Model ceiling, m. All scenarios stay well below.
pub const H_CEILING: f64 = 20_000.0;

/// Atmosphere state at a given geometric altitude.
#[derive(Debug, Clone, Copy)]
pub struct AtmosState {
    /// Temperature, K.
    pub temperature: f64,
    /// Static pressure, Pa.
    pub pressure: f64,
    /// Density, kg/m³ (exact ideal gas: p / (R·T)).
    pub density: f64,
    /// Pressure ratio δ = p / p₀.
    pub pressure_ratio: f64,
    /// Temperature ratio θ = T / T₀.
    pub temperature_ratio: f64,
    /// Speed of sound √(γRT), m/s.
    pub sound_speed: f64,
    /// dT/dh at this altitude, K/m (lapse below the tropopause, 0 above).
    pub dtemperature_dh: f64,
}

impl AtmosState {
    /// dδ/dh from hydrostatics: δ' = -g·δ / (R·T).
    pub fn dpressure_ratio_dh(&self) -> f64 {
        -G0 * self.pressure_ratio / (R_AIR * self.temperature)
    }
}

/// ISA state at altitude `h` (m). Troposphere lapse below 11 km, isothermal
/// layer above, hydrostatic pressure, ideal-gas density.
pub fn atmos_at(h: f64) -> Result<AtmosState> {
    if !(0.0..=H_CEILING).contains(&h) {
        return Err(Error::Domain(format!(
            "altitude {h} m outside [0, {H_CEILING}] m"
        )));
    }
    let (temperature, pressure, dtemperature_dh) = if h <= H_TROPOPAUSE {
        let t = T0_ISA + LAPSE * h;
        let p = P0_ISA * (t / T0_ISA).powf(-G0 / (LAPSE * R_AIR));
        (t, p, LAPSE)
    } else {
        let t_trop = T0_ISA + LAPSE * H_TROPOPAUSE;
        let p_trop = P0_ISA * (t_trop / T0_ISA).powf(-G0 / (LAPSE * R_AIR));
        let p = p_trop * (-G0 * (h - H_TROPOPAUSE) / (R_AIR * t_trop)).exp();
        (t_trop, p, 0.0)
    };
    Ok(AtmosState {
        temperature,
        pressure,
        density: pressure / (R_AIR * temperature),
        pressure_ratio: pressure / P0_ISA,
        temperature_ratio: temperature / T0_ISA,
        sound_speed: (GAMMA_AIR * R_AIR * temperature).sqrt(),
        dtemperature_dh,
    })
}

/// Calibrated airspeed from true airspeed at altitude.
///
/// Compressible pitot formula with the 7RT form (γ = 1.4 gives
/// γ/(γ-1) = 3.5 and 2γR/(γ-1) = 7R).
pub fn cas_from_tas(v_tas: f64, h: f64) -> Result<f64> {
    let atm = atmos_at(h)?;
    if v_tas <= 0.0 {
        return Err(Error::Domain(format!("non-positive TAS {v_tas}")));
    }
    let a = 1.0 + v_tas * v_tas / (7.0 * R_AIR * atm.temperature);
    let b = 1.0 + atm.pressure_ratio * (a.powf(3.5) - 1.0);
    Ok((7.0 * R_AIR * T0_ISA * (b.powf(2.0 / 7.0) - 1.0)).sqrt())
}

/// Analytic partials (∂V_CAS/∂V_T, ∂V_CAS/∂h).
pub fn cas_partials(v_tas: f64, h: f64) -> Result<(f64, f64)> {
    let atm = atmos_at(h)?;
    let t = atm.temperature;
    let delta = atm.pressure_ratio;
    let a = 1.0 + v_tas * v_tas / (7.0 * R_AIR * t);
    let b = 1.0 + delta * (a.powf(3.5) - 1.0);
    let v_cas = (7.0 * R_AIR * T0_ISA * (b.powf(2.0 / 7.0) - 1.0)).sqrt();

    // dV_CAS/dB = R·T0 · B^(-5/7) / V_CAS
    let dvcas_db = R_AIR * T0_ISA * b.powf(-5.0 / 7.0) / v_cas;
    // dB/dV_T = δ · 3.5 A^2.5 · 2 V_T / (7 R T)
    let db_dvt = delta * 3.5 * a.powf(2.5) * 2.0 * v_tas / (7.0 * R_AIR * t);
    // dB/dh = δ'·(A^3.5 - 1) + δ·3.5 A^2.5 · dA/dh,  dA/dh = -V_T²·T'/(7RT²)
    let ddelta_dh = atm.dpressure_ratio_dh();
    let da_dh = -v_tas * v_tas * atm.dtemperature_dh / (7.0 * R_AIR * t * t);
    let db_dh = ddelta_dh * (a.powf(3.5) - 1.0) + delta * 3.5 * a.powf(2.5) * da_dh;

    Ok((dvcas_db * db_dvt, dvcas_db * db_dh))
}

/// True airspeed from calibrated airspeed: unique positive root of the pitot
/// formula. Closed-form inversion seeds a Newton polish to 1e-10 relative.
pub fn tas_from_cas(v_cas: f64, h: f64) -> Result<f64> {
    if v_cas <= 0.0 {
        return Err(Error::Domain(format!("non-positive CAS {v_cas}")));
    }
    let atm = atmos_at(h)?;
    let q = (v_cas * v_cas / (7.0 * R_AIR * T0_ISA) + 1.0).powf(3.5) - 1.0;
    let a = (1.0 + q / atm.pressure_ratio).powf(2.0 / 7.0);
    let mut v = (7.0 * R_AIR * atm.temperature * (a - 1.0)).sqrt();
    for _ in 0..20 {
        let f = cas_from_tas(v, h)? - v_cas;
        let (df, _) = cas_partials(v, h)?;
        let step = f / df;
        v -= step;
        if step.abs() <= 1e-10 * v.abs() {
            return Ok(v);
        }
    }
    Err(Error::Numeric(format!(
        "TAS-from-CAS Newton did not converge for V_CAS={v_cas}, h={h}"
    )))
}

/// Mach number V_T / √(1.4·R·T(h)).
pub fn mach(v_tas: f64, h: f64) -> Result<f64> {
    Ok(v_tas / atmos_at(h)?.sound_speed)
}

/// Analytic partials (∂M/∂V_T, ∂M/∂h).
pub fn mach_partials(v_tas: f64, h: f64) -> Result<(f64, f64)> {
    let atm = atmos_at(h)?;
    let dm_dv = 1.0 / atm.sound_speed;
    // a = √(γRT): da/dh = a·T'/(2T); dM/dh = -V·T'/(2T·a)
    let dm_dh = -v_tas * atm.dtemperature_dh / (2.0 * atm.temperature * atm.sound_speed);
    Ok((dm_dv, dm_dh))
}

/// True airspeed corresponding to a Mach number at altitude.
pub fn tas_from_mach(m: f64, h: f64) -> Result<f64> {
    Ok(m * atmos_at(h)?.sound_speed)
}
