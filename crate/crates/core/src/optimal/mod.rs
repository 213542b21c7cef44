//! Necessary-condition machinery and trajectory synthesis.
//!
//! The optimizer never solves a two-point boundary value problem. The control
//! structure is bang / singular / boundary: interior singular arcs live on the
//! locus Γ_s(V_T, h) = 0, constrained arcs ride an active CAS/Mach bound, and
//! the connecting segments are extremal (level or steepest-admissible) flight.
//! Forward/backward integration joins them, and an independent checker
//! verifies the multiplier conditions afterwards.

mod boundary;
mod check;
mod generate;
mod singular;

pub use boundary::{boundary_gamma, eta_a};
pub use check::{
    check_optimality, handmade_constant_cas_descent, ConditionReport, OptimalityReport,
    SampleDiagnostics,
};
pub use generate::generate_trajectory;
pub use singular::{
    gamma_s_normalized, gamma_s_residual, glc_check, singular_arc_curve, singular_control,
    SingularArcCurve, SingularSample,
};

use serde::{Deserialize, Serialize};

use crate::airmodel::G0;
use crate::dynamics::{ConstraintId, PathLimits, State};
use crate::environment::WindProfile;
use crate::error::Result;
use crate::performance::{AircraftModel, CostSpec};

/// Everything a necessary-condition evaluation needs.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub model: &'a AircraftModel,
    pub wind: &'a WindProfile,
    pub cost: &'a CostSpec,
    pub limits: &'a PathLimits,
}

/// Adjoint variables. λ_x is identically zero on optimal trajectories (free
/// initial range plus jump-condition continuity), so it is not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Costate {
    pub lambda_v: f64,
    pub lambda_h: f64,
}

/// Arc classification. Bang-high is the level point of the admissible set,
/// bang-low its steepest-descent end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    BangHigh,
    BangLow,
    Singular,
    Boundary(ConstraintId),
}

impl ArcKind {
    pub fn label(&self) -> String {
        match self {
            ArcKind::BangHigh => "bang_high".into(),
            ArcKind::BangLow => "bang_low".into(),
            ArcKind::Singular => "singular".into(),
            ArcKind::Boundary(id) => format!("boundary_{}", id.label()),
        }
    }

    pub fn parse(text: &str) -> Option<ArcKind> {
        Some(match text {
            "bang_high" => ArcKind::BangHigh,
            "bang_low" => ArcKind::BangLow,
            "singular" => ArcKind::Singular,
            "boundary_cas_max" => ArcKind::Boundary(ConstraintId::CasMax),
            "boundary_cas_min" => ArcKind::Boundary(ConstraintId::CasMin),
            "boundary_mach_max" => ArcKind::Boundary(ConstraintId::MachMax),
            "boundary_mach_min" => ArcKind::Boundary(ConstraintId::MachMin),
            _ => return None,
        })
    }
}

/// One stored trajectory sample: state plus the control that was flown.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ArcSample {
    pub state: State,
    pub gamma: f64,
}

/// A maximal segment with one control law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Arc {
    pub kind: ArcKind,
    pub samples: Vec<ArcSample>,
}

impl Arc {
    pub fn first(&self) -> &ArcSample {
        self.samples.first().expect("arc has samples")
    }

    pub fn last(&self) -> &ArcSample {
        self.samples.last().expect("arc has samples")
    }

    pub fn duration(&self) -> f64 {
        self.last().state.t - self.first().state.t
    }
}

/// Junction between consecutive arcs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Junction {
    pub time: f64,
    pub from: ArcKind,
    pub to: ArcKind,
    pub state: State,
}

/// Cost totals over the whole problem (cruise segment from the d_max datum
/// plus the descent).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Totals {
    /// Objective value in the scenario's cost unit (kg or g).
    pub cost: f64,
    /// Fuel mass from d_max to the fix, kg, whatever the objective.
    pub fuel_kg: f64,
    /// Emission mass from d_max to the fix, g (the scenario's species when
    /// an emission objective is active).
    pub emissions_g: Option<f64>,
}

/// A synthesized descent trajectory: ordered arcs from the top of descent to
/// the meter fix, with junction records and performance totals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub arcs: Vec<Arc>,
    pub junctions: Vec<Junction>,
    /// Top of descent x_s(t₀), m (negative).
    pub tod_x: f64,
    /// Time from the d_max datum to the meter fix, s (cruise leg at constant
    /// ground speed plus the descent duration).
    pub arrival_time: f64,
    pub totals: Totals,
}

impl Trajectory {
    pub fn initial_state(&self) -> State {
        self.arcs
            .first()
            .expect("trajectory has arcs")
            .first()
            .state
    }

    pub fn terminal_state(&self) -> State {
        self.arcs.last().expect("trajectory has arcs").last().state
    }

    /// Descent duration t_f - t₀, s.
    pub fn descent_duration(&self) -> f64 {
        self.terminal_state().t - self.initial_state().t
    }

    pub fn samples(&self) -> impl Iterator<Item = (&Arc, &ArcSample)> {
        self.arcs
            .iter()
            .flat_map(|arc| arc.samples.iter().map(move |s| (arc, s)))
    }

    /// CAS interpolated at an altitude on the descending portion, if the
    /// trajectory passes through it.
    pub fn cas_at_altitude(&self, h: f64) -> Result<Option<f64>> {
        for arc in &self.arcs {
            for pair in arc.samples.windows(2) {
                let (a, b) = (pair[0].state, pair[1].state);
                if (a.h - h) * (b.h - h) <= 0.0 && a.h != b.h {
                    let w = (h - a.h) / (b.h - a.h);
                    let v = a.v + w * (b.v - a.v);
                    return Ok(Some(crate::airmodel::cas_from_tas(v, h)?));
                }
            }
        }
        Ok(None)
    }
}

/// Hamiltonian of the range-free descent problem:
/// H = -K_cr(cV_T + W_h) + K_des + λ_V·V̇_T + λ_x·ẋ_s + λ_h·ḣ with λ_x = 0.
pub fn hamiltonian(
    problem: &Problem<'_>,
    state: &State,
    costate: &Costate,
    gamma: f64,
) -> Result<f64> {
    let eff = problem.wind.wind_effect(state.v, state.h)?;
    let k_des = problem.cost.k_des(problem.model, state.v, state.h)?;
    let dn = problem.model.net_drag(state.v, state.h)?;
    let vdot = -dn / problem.model.mass - gamma * (G0 + state.v * eff.whchi);
    Ok(-problem.cost.k_cr * eff.ground_speed(state.v)
        + k_des
        + costate.lambda_v * vdot
        + costate.lambda_h * state.v * gamma)
}

/// Switching function H_γ = -λ_V(g + V_T·W_hχ) + λ_h·V_T.
pub fn switching(problem: &Problem<'_>, state: &State, costate: &Costate) -> Result<f64> {
    let eff = problem.wind.wind_effect(state.v, state.h)?;
    Ok(-costate.lambda_v * (G0 + state.v * eff.whchi) + costate.lambda_h * state.v)
}

/// Costates on singular and boundary arcs, where H_γ = 0 and H = 0 pin them
/// as functions of the state:
/// λ_V/m = (K_des - K_cr(cV_T + W_h)) / D̃ and
/// λ_h = λ_V (g + V_T·W_hχ) / V_T.
pub fn costates_on_arc(problem: &Problem<'_>, state: &State) -> Result<Costate> {
    let eff = problem.wind.wind_effect(state.v, state.h)?;
    let k_des = problem.cost.k_des(problem.model, state.v, state.h)?;
    let dn = problem.model.net_drag(state.v, state.h)?;
    let lambda_v =
        problem.model.mass * (-problem.cost.k_cr * eff.ground_speed(state.v) + k_des) / dn;
    let lambda_h = lambda_v * (G0 + state.v * eff.whchi) / state.v;
    Ok(Costate { lambda_v, lambda_h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::performance::CostKind;
    use crate::samples;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-30)
    }

    #[test]
    fn hamiltonian_reduces_to_k_des_with_zero_costates_and_free_cruise() {
        let model = samples::narrowbody();
        let wind = WindProfile::constant(0.0, 0.0);
        let mut cost = samples::cost_spec(CostKind::Fuel, &model, &wind);
        cost.k_cr = 0.0;
        let limits = samples::table_limits();
        let problem = Problem {
            model: &model,
            wind: &wind,
            cost: &cost,
            limits: &limits,
        };
        let state = State {
            v: 220.0,
            h: 8_000.0,
            x: -1e5,
            t: 0.0,
        };
        let zero = Costate {
            lambda_v: 0.0,
            lambda_h: 0.0,
        };
        let h = hamiltonian(&problem, &state, &zero, -0.04).unwrap();
        assert!(rel(h, cost.k_des(&model, state.v, state.h).unwrap()) < 1e-12);
    }

    #[test]
    fn switching_without_wind_is_affine_in_costates() {
        let model = samples::narrowbody();
        let wind = WindProfile::constant(0.0, 0.0);
        let cost = samples::cost_spec(CostKind::Fuel, &model, &wind);
        let limits = samples::table_limits();
        let problem = Problem {
            model: &model,
            wind: &wind,
            cost: &cost,
            limits: &limits,
        };
        let state = State {
            v: 210.0,
            h: 6_000.0,
            x: -1e5,
            t: 0.0,
        };
        let cs = Costate {
            lambda_v: 3.0,
            lambda_h: 0.5,
        };
        let hg = switching(&problem, &state, &cs).unwrap();
        assert!(rel(hg, -3.0 * G0 + 0.5 * 210.0) < 1e-12);
        let zero = Costate {
            lambda_v: 0.0,
            lambda_h: 0.0,
        };
        assert_eq!(switching(&problem, &state, &zero).unwrap(), 0.0);
    }

    #[test]
    fn arc_costates_zero_h_and_switching_by_construction() {
        let model = samples::narrowbody();
        let wind = WindProfile::new(vec![(0.0, 5.0, -20.0), (11_000.0, 28.0, 15.0)]).unwrap();
        let cost = samples::cost_spec(CostKind::Fuel, &model, &wind);
        let limits = samples::table_limits();
        let problem = Problem {
            model: &model,
            wind: &wind,
            cost: &cost,
            limits: &limits,
        };
        for (v, h) in [(180.0, 5_000.0), (225.0, 9_500.0)] {
            let state = State {
                v,
                h,
                x: -1e5,
                t: 0.0,
            };
            let cs = costates_on_arc(&problem, &state).unwrap();
            let hg = switching(&problem, &state, &cs).unwrap();
            assert!(hg.abs() / cost.scale() < 1e-10);
            for gamma in [-0.05, 0.0] {
                let ham = hamiltonian(&problem, &state, &cs, gamma).unwrap();
                assert!(ham.abs() / cost.scale() < 1e-10);
            }
        }
    }

    #[test]
    fn lambda_v_positive_when_descent_cost_dominates_cruise_credit() {
        // K_des > K_cr·(cV+W_h) makes the numerator positive
        let model = samples::narrowbody();
        let wind = WindProfile::constant(0.0, 0.0);
        let mut cost = samples::cost_spec(CostKind::Fuel, &model, &wind);
        cost.k_cr = 1e-9;
        let limits = samples::table_limits();
        let problem = Problem {
            model: &model,
            wind: &wind,
            cost: &cost,
            limits: &limits,
        };
        let state = State {
            v: 200.0,
            h: 7_000.0,
            x: -1e5,
            t: 0.0,
        };
        let cs = costates_on_arc(&problem, &state).unwrap();
        assert!(cs.lambda_v > 0.0);
    }
}
