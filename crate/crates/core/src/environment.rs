//! Altitude-dependent wind fields and crab-angle geometry.
//!
//! The wind is a piecewise-linear function of altitude with along-track and
//! cross-track components. The crab angle cancels the cross wind so the
//! ground track is held; the resulting cosine couples into the along-track
//! ground speed and the shear term couples into the airspeed dynamics. All
//! partial derivatives used by the optimality conditions are analytic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear wind profile over altitude.
///
/// A single breakpoint means constant wind. Queries outside the breakpoint
/// span clamp to the end values with zero shear.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindProfile {
    /// (altitude m, along-track wind m/s, cross wind m/s), altitudes strictly increasing.
    breakpoints: Vec<(f64, f64, f64)>,
}

/// Wind values and shear at one altitude.
#[derive(Debug, Clone, Copy)]
pub struct WindSample {
    pub wh: f64,
    pub wc: f64,
    pub dwh_dh: f64,
    pub dwc_dh: f64,
}

/// Crab geometry and the shear coupling term at one (V_T, h).
///
/// `s = -W_c/V_T` (airspeed cross-component cancels the cross wind),
/// `c = √(1-s²)`, and `whchi = c·dW_h/dh + s·dW_c/dh`.
#[derive(Debug, Clone, Copy)]
pub struct WindEffect {
    pub c: f64,
    pub s: f64,
    pub whchi: f64,
    pub dc_dv: f64,
    pub dc_dh: f64,
    pub dwhchi_dv: f64,
    pub dwhchi_dh: f64,
    /// Along-track wind value at this altitude (m/s).
    pub wh: f64,
    /// Along-track shear dW_h/dh (1/s).
    pub dwh_dh: f64,
}

impl WindEffect {
    /// Along-track ground speed c·V_T + W_h.
    pub fn ground_speed(&self, v_tas: f64) -> f64 {
        self.c * v_tas + self.wh
    }
}

impl WindProfile {
    pub fn new(breakpoints: Vec<(f64, f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::ModelValidation(
                "wind profile needs at least one breakpoint".into(),
            ));
        }
        for pair in breakpoints.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::ModelValidation(format!(
                    "wind breakpoint altitudes must be strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        Ok(Self { breakpoints })
    }

    /// Constant wind at all altitudes.
    pub fn constant(wh: f64, wc: f64) -> Self {
        Self {
            breakpoints: vec![(0.0, wh, wc)],
        }
    }

    pub fn breakpoints(&self) -> &[(f64, f64, f64)] {
        &self.breakpoints
    }

    /// Wind components and shear at altitude. Linear interpolation between
    /// breakpoints; clamped value and zero shear outside the span.
    pub fn wind_at(&self, h: f64) -> WindSample {
        let bps = &self.breakpoints;
        let first = bps[0];
        let last = bps[bps.len() - 1];
        if bps.len() == 1 || h <= first.0 {
            return WindSample {
                wh: first.1,
                wc: first.2,
                dwh_dh: 0.0,
                dwc_dh: 0.0,
            };
        }
        if h >= last.0 {
            return WindSample {
                wh: last.1,
                wc: last.2,
                dwh_dh: 0.0,
                dwc_dh: 0.0,
            };
        }
        let idx = bps.partition_point(|bp| bp.0 <= h) - 1;
        let (h0, wh0, wc0) = bps[idx];
        let (h1, wh1, wc1) = bps[idx + 1];
        let dwh = (wh1 - wh0) / (h1 - h0);
        let dwc = (wc1 - wc0) / (h1 - h0);
        WindSample {
            wh: wh0 + dwh * (h - h0),
            wc: wc0 + dwc * (h - h0),
            dwh_dh: dwh,
            dwc_dh: dwc,
        }
    }

    /// Crab geometry, shear coupling term, and their partials at (V_T, h).
    pub fn wind_effect(&self, v_tas: f64, h: f64) -> Result<WindEffect> {
        let w = self.wind_at(h);
        if w.wc.abs() >= v_tas {
            return Err(Error::InfeasibleCrab {
                wc: w.wc,
                vt: v_tas,
            });
        }
        let s = -w.wc / v_tas;
        let c = (1.0 - s * s).sqrt();
        let whchi = c * w.dwh_dh + s * w.dwc_dh;

        // s partials: ∂s/∂V = W_c/V² = -s/V, ∂s/∂h = -(dW_c/dh)/V
        let ds_dv = w.wc / (v_tas * v_tas);
        let ds_dh = -w.dwc_dh / v_tas;
        // c = √(1-s²): ∂c/∂x = -s·∂s/∂x / c
        let dc_dv = -s * ds_dv / c;
        let dc_dh = -s * ds_dh / c;
        // piecewise-linear wind: d²W/dh² = 0 inside segments
        let dwhchi_dv = dc_dv * w.dwh_dh + ds_dv * w.dwc_dh;
        let dwhchi_dh = dc_dh * w.dwh_dh + ds_dh * w.dwc_dh;

        Ok(WindEffect {
            c,
            s,
            whchi,
            dc_dv,
            dc_dh,
            dwhchi_dv,
            dwhchi_dh,
            wh: w.wh,
            dwh_dh: w.dwh_dh,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-30)
    }

    #[test]
    fn constant_profile() {
        let p = WindProfile::constant(10.0, 0.0);
        let w = p.wind_at(5_000.0);
        assert_eq!((w.wh, w.wc, w.dwh_dh, w.dwc_dh), (10.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn linear_midpoint_and_slope() {
        let p = WindProfile::new(vec![(0.0, 0.0, 0.0), (10_000.0, 20.0, 0.0)]).unwrap();
        let w = p.wind_at(5_000.0);
        assert_eq!(w.wh, 10.0);
        assert_eq!(w.dwh_dh, 0.002);
    }

    #[test]
    fn clamps_with_zero_shear() {
        let p = WindProfile::new(vec![(2_000.0, 5.0, 1.0), (8_000.0, 15.0, 3.0)]).unwrap();
        let below = p.wind_at(500.0);
        assert_eq!((below.wh, below.wc, below.dwh_dh), (5.0, 1.0, 0.0));
        let above = p.wind_at(12_000.0);
        assert_eq!((above.wh, above.wc, above.dwc_dh), (15.0, 3.0, 0.0));
    }

    #[test]
    fn rejects_unsorted_breakpoints() {
        assert!(WindProfile::new(vec![(100.0, 0.0, 0.0), (100.0, 1.0, 0.0)]).is_err());
        assert!(WindProfile::new(vec![]).is_err());
    }

    #[test]
    fn no_cross_wind_geometry() {
        let p = WindProfile::new(vec![(0.0, 0.0, 0.0), (10_000.0, 20.0, 0.0)]).unwrap();
        let e = p.wind_effect(200.0, 5_000.0).unwrap();
        assert_eq!(e.c, 1.0);
        assert_eq!(e.s, 0.0);
        assert_eq!(e.whchi, e.dwh_dh);
    }

    #[test]
    fn thirty_degree_crab() {
        let v = 220.0;
        let p = WindProfile::constant(0.0, v / 2.0);
        let e = p.wind_effect(v, 3_000.0).unwrap();
        assert!(rel(e.s.abs(), 0.5) < 1e-12);
        assert!(rel(e.c, 3f64.sqrt() / 2.0) < 1e-12);
    }

    #[test]
    fn crab_infeasible_when_cross_wind_too_large() {
        let p = WindProfile::constant(0.0, 150.0);
        assert!(matches!(
            p.wind_effect(140.0, 1_000.0),
            Err(Error::InfeasibleCrab { .. })
        ));
    }

    #[test]
    fn unit_circle_invariant() {
        let p = WindProfile::new(vec![(0.0, 10.0, -25.0), (11_000.0, 35.0, 20.0)]).unwrap();
        for (v, h) in [(140.0, 500.0), (200.0, 6_000.0), (260.0, 10_500.0)] {
            let e = p.wind_effect(v, h).unwrap();
            assert!(rel(e.c * e.c + e.s * e.s, 1.0) < 1e-12);
            assert!(e.c > 0.0);
        }
    }

    #[test]
    fn ground_speed_even_in_cross_wind_sign() {
        let plus = WindProfile::new(vec![(0.0, 8.0, 30.0), (10_000.0, 22.0, 40.0)]).unwrap();
        let minus = WindProfile::new(vec![(0.0, 8.0, -30.0), (10_000.0, 22.0, -40.0)]).unwrap();
        for (v, h) in [(160.0, 2_000.0), (230.0, 9_000.0)] {
            let gp = plus.wind_effect(v, h).unwrap().ground_speed(v);
            let gm = minus.wind_effect(v, h).unwrap().ground_speed(v);
            assert!(rel(gp, gm) < 1e-12);
        }
    }

    #[test]
    fn whchi_zero_for_constant_wind() {
        let p = WindProfile::constant(25.0, 40.0);
        for (v, h) in [(150.0, 1_000.0), (240.0, 10_000.0)] {
            let e = p.wind_effect(v, h).unwrap();
            assert_eq!(e.whchi, 0.0);
            assert_eq!(e.dwhchi_dv, 0.0);
            assert_eq!(e.dwhchi_dh, 0.0);
        }
    }

    #[test]
    fn partials_match_central_differences() {
        let p = WindProfile::new(vec![
            (0.0, 5.0, -12.0),
            (4_000.0, 14.0, 6.0),
            (11_000.0, 30.0, 24.0),
        ])
        .unwrap();
        // stay inside one segment so the analytic slope is the segment slope
        for (v, h) in [(150.0, 1_500.0), (205.0, 2_900.0), (250.0, 7_500.0)] {
            let e = p.wind_effect(v, h).unwrap();
            let eps_v = v * 1e-6;
            let ev_p = p.wind_effect(v + eps_v, h).unwrap();
            let ev_m = p.wind_effect(v - eps_v, h).unwrap();
            assert!(rel(e.dc_dv, (ev_p.c - ev_m.c) / (2.0 * eps_v)) < 1e-6);
            assert!(rel(e.dwhchi_dv, (ev_p.whchi - ev_m.whchi) / (2.0 * eps_v)) < 1e-6);
            let eps_h = 0.05;
            let eh_p = p.wind_effect(v, h + eps_h).unwrap();
            let eh_m = p.wind_effect(v, h - eps_h).unwrap();
            assert!(rel(e.dc_dh, (eh_p.c - eh_m.c) / (2.0 * eps_h)) < 1e-6);
            assert!(rel(e.dwhchi_dh, (eh_p.whchi - eh_m.whchi) / (2.0 * eps_h)) < 1e-6);
        }
    }
}
