//! Point-mass equations of motion, admissible control set, path constraints,
//! and fixed-step RK4 integration with event localization.
//!
//! The flight path angle is the only control. Small-angle dynamics:
//!
//! ```text
//! V̇_T = (T - D)/m - g·γ - V_T·γ·W_hχ
//! ẋ_s = c·V_T + W_h
//! ḣ   = V_T·γ
//! ```

use serde::{Deserialize, Serialize};

use crate::airmodel::{self, G0};
use crate::environment::WindProfile;
use crate::error::{Error, Result};
use crate::performance::{AircraftModel, Envelope};

/// Dynamic state: true airspeed, altitude, along-track position (negative,
/// increasing toward the meter fix), and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub v: f64,
    pub h: f64,
    pub x: f64,
    pub t: f64,
}

/// Time derivative of the dynamic state.
#[derive(Debug, Clone, Copy)]
pub struct StateDot {
    pub dv: f64,
    pub dh: f64,
    pub dx: f64,
}

impl State {
    fn advanced(&self, k: &StateDot, dt: f64) -> State {
        State {
            v: self.v + dt * k.dv,
            h: self.h + dt * k.dh,
            x: self.x + dt * k.dx,
            t: self.t + dt,
        }
    }
}

/// Flight-path-angle and rate-of-descent comfort limits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathLimits {
    /// rad, < 0.
    pub gamma_min: f64,
    /// rad, ≤ 0.
    pub gamma_max: f64,
    /// Minimum rate of descent while descending, m/s (> 0).
    pub rod_min: f64,
    /// Maximum rate of descent, m/s.
    pub rod_max: f64,
}

impl PathLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_min < self.gamma_max && self.gamma_max <= 0.0) {
            return Err(Error::ModelValidation(format!(
                "need gamma_min < gamma_max <= 0 (got {} and {})",
                self.gamma_min, self.gamma_max
            )));
        }
        if !(0.0 < self.rod_min && self.rod_min < self.rod_max) {
            return Err(Error::ModelValidation(format!(
                "need 0 < rod_min < rod_max (got {} and {})",
                self.rod_min, self.rod_max
            )));
        }
        Ok(())
    }
}

/// The admissible control set at one state: a descending interval
/// [lo, hi] ∪ optionally the isolated level point γ = 0.
///
/// The descent-rate band forbids shallow descent, so exact level flight is a
/// discrete member of the set whenever the flight-path-angle bound admits it.
#[derive(Debug, Clone, Copy)]
pub struct AdmissibleGammas {
    pub lo: f64,
    pub hi: f64,
    pub level_allowed: bool,
}

impl AdmissibleGammas {
    pub fn interval_nonempty(&self) -> bool {
        self.lo <= self.hi
    }

    /// True when γ lies in the descending interval or is the allowed level point.
    pub fn contains(&self, gamma: f64, tol: f64) -> bool {
        (self.level_allowed && gamma.abs() <= tol)
            || (self.interval_nonempty() && gamma >= self.lo - tol && gamma <= self.hi + tol)
    }
}

/// Admissible flight-path angles at airspeed `v`.
pub fn admissible_gammas(v: f64, limits: &PathLimits) -> Result<AdmissibleGammas> {
    let set = AdmissibleGammas {
        lo: limits.gamma_min.max(-limits.rod_max / v),
        hi: limits.gamma_max.min(-limits.rod_min / v),
        level_allowed: limits.gamma_max >= 0.0,
    };
    if !set.interval_nonempty() && !set.level_allowed {
        return Err(Error::InfeasibleControl(format!(
            "empty admissible set at V_T = {v:.2} m/s"
        )));
    }
    Ok(set)
}

/// One pure state constraint S_a(V_T, h) ≤ 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintId {
    CasMax,
    CasMin,
    MachMax,
    MachMin,
}

impl ConstraintId {
    pub const ALL: [ConstraintId; 4] = [
        ConstraintId::CasMax,
        ConstraintId::CasMin,
        ConstraintId::MachMax,
        ConstraintId::MachMin,
    ];

    /// Signed constraint value; ≤ 0 means satisfied.
    pub fn value(&self, v: f64, h: f64, env: &Envelope) -> Result<f64> {
        Ok(match self {
            ConstraintId::CasMax => airmodel::cas_from_tas(v, h)? - env.cas_max,
            ConstraintId::CasMin => env.cas_min - airmodel::cas_from_tas(v, h)?,
            ConstraintId::MachMax => airmodel::mach(v, h)? - env.mach_max,
            ConstraintId::MachMin => env.mach_min - airmodel::mach(v, h)?,
        })
    }

    /// Analytic gradient (∂S_a/∂V_T, ∂S_a/∂h).
    pub fn gradient(&self, v: f64, h: f64) -> Result<(f64, f64)> {
        let (cas_v, cas_h) = airmodel::cas_partials(v, h)?;
        let (m_v, m_h) = airmodel::mach_partials(v, h)?;
        Ok(match self {
            ConstraintId::CasMax => (cas_v, cas_h),
            ConstraintId::CasMin => (-cas_v, -cas_h),
            ConstraintId::MachMax => (m_v, m_h),
            ConstraintId::MachMin => (-m_v, -m_h),
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            ConstraintId::CasMax => "cas_max",
            ConstraintId::CasMin => "cas_min",
            ConstraintId::MachMax => "mach_max",
            ConstraintId::MachMin => "mach_min",
        }
    }
}

/// The four pure state constraints as a signed vector; all ≤ 0 when satisfied.
pub fn pure_state_constraints(v: f64, h: f64, env: &Envelope) -> Result<[f64; 4]> {
    let mut s = [0.0; 4];
    for (i, id) in ConstraintId::ALL.iter().enumerate() {
        s[i] = id.value(v, h, env)?;
    }
    Ok(s)
}

/// State derivative under control γ.
pub fn eom(
    state: &State,
    gamma: f64,
    wind: &WindProfile,
    model: &AircraftModel,
) -> Result<StateDot> {
    let eff = wind.wind_effect(state.v, state.h)?;
    let dn = model.net_drag(state.v, state.h)?;
    Ok(StateDot {
        dv: -dn / model.mass - gamma * (G0 + state.v * eff.whchi),
        dh: state.v * gamma,
        dx: eff.ground_speed(state.v),
    })
}

/// Integration direction. Backward integration runs RK4 with a negated time
/// step, which is forward integration of the negated field with the time
/// bookkeeping folded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Event test: signed value whose zero crossing stops the integration.
pub type EventFn<'a> = Box<dyn Fn(&State) -> Result<f64> + 'a>;

/// An event function crossing zero stops the integration.
pub struct Event<'a> {
    pub name: &'a str,
    pub f: EventFn<'a>,
}

impl<'a> Event<'a> {
    pub fn new(name: &'a str, f: impl Fn(&State) -> Result<f64> + 'a) -> Self {
        Event {
            name,
            f: Box::new(f),
        }
    }
}

/// Which event fired, where, and when.
#[derive(Debug, Clone)]
pub struct EventHit {
    pub event_index: usize,
    pub state: State,
}

/// Integration output: states at every accepted step (the last one localized
/// on the event), plus the hit description if an event fired.
#[derive(Debug)]
pub struct IntegrationResult {
    pub states: Vec<State>,
    pub hit: Option<EventHit>,
}

fn rk4_step<F>(state: &State, dt: f64, field: &F) -> Result<State>
where
    F: Fn(&State) -> Result<StateDot>,
{
    let k1 = field(state)?;
    let k2 = field(&state.advanced(&k1, 0.5 * dt))?;
    let k3 = field(&state.advanced(&k2, 0.5 * dt))?;
    let k4 = field(&state.advanced(&k3, dt))?;
    Ok(State {
        v: state.v + dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv),
        h: state.h + dt / 6.0 * (k1.dh + 2.0 * k2.dh + 2.0 * k3.dh + k4.dh),
        x: state.x + dt / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
        t: state.t + dt,
    })
}

/// Time tolerance for event localization, s.
pub const EVENT_TIME_TOL: f64 = 1e-6;

/// Fixed-step RK4 over an arbitrary vector field with bisection event
/// localization. Stops exactly on the first event crossing, or at the
/// horizon with `hit: None` if nothing fired.
pub fn integrate_field<F>(
    start: State,
    field: F,
    events: &[Event<'_>],
    direction: Direction,
    step: f64,
    t_horizon: f64,
) -> Result<IntegrationResult>
where
    F: Fn(&State) -> Result<StateDot>,
{
    let dt_full = match direction {
        Direction::Forward => step,
        Direction::Backward => -step,
    };
    let mut states = vec![start];
    let mut g_prev: Vec<f64> = events
        .iter()
        .map(|e| (e.f)(&start))
        .collect::<Result<_>>()?;
    let mut elapsed = 0.0;
    while elapsed < t_horizon {
        let s0 = *states.last().unwrap();
        let s1 = rk4_step(&s0, dt_full, &field)?;
        let g_now: Vec<f64> = events.iter().map(|e| (e.f)(&s1)).collect::<Result<_>>()?;

        // earliest crossing within this step, localized by bisection on dt.
        // an exact zero at the step start does not fire: arc switches hand
        // over states sitting exactly on a locus, and those must not retrigger.
        let mut best: Option<(usize, f64)> = None;
        for (i, (&g0, &g1)) in g_prev.iter().zip(&g_now).enumerate() {
            if g0 * g1 < 0.0 || (g1 == 0.0 && g0 != 0.0) {
                let mut lo = 0.0;
                let mut hi = step;
                let mut sign0 = g0;
                while hi - lo > EVENT_TIME_TOL {
                    let mid = 0.5 * (lo + hi);
                    let sm = rk4_step(&s0, dt_full.signum() * mid, &field)?;
                    let gm = (events[i].f)(&sm)?;
                    if sign0 == 0.0 || sign0 * gm < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        sign0 = gm;
                    }
                }
                let t_hit = 0.5 * (lo + hi);
                if best.is_none_or(|(_, t)| t_hit < t) {
                    best = Some((i, t_hit));
                }
            }
        }
        if let Some((idx, t_hit)) = best {
            let s_hit = rk4_step(&s0, dt_full.signum() * t_hit, &field)?;
            states.push(s_hit);
            return Ok(IntegrationResult {
                states,
                hit: Some(EventHit {
                    event_index: idx,
                    state: s_hit,
                }),
            });
        }

        states.push(s1);
        g_prev = g_now;
        elapsed += step;
    }
    Ok(IntegrationResult { states, hit: None })
}

/// Integrate the aircraft dynamics under a feedback control law until one of
/// the events fires; the control is re-evaluated at the stored samples so
/// each sample carries its γ. Errors with `NoJunction` when events were
/// requested but none fired within the horizon.
#[allow(clippy::too_many_arguments)]
pub fn integrate<C>(
    start: State,
    model: &AircraftModel,
    wind: &WindProfile,
    control: C,
    events: &[Event<'_>],
    direction: Direction,
    step: f64,
    t_horizon: f64,
) -> Result<(IntegrationResult, Vec<f64>)>
where
    C: Fn(&State) -> Result<f64>,
{
    let field = |s: &State| -> Result<StateDot> { eom(s, control(s)?, wind, model) };
    let result = integrate_field(start, field, events, direction, step, t_horizon)?;
    if !events.is_empty() && result.hit.is_none() {
        return Err(Error::NoJunction(format!(
            "no event ({}) within {t_horizon} s",
            events.iter().map(|e| e.name).collect::<Vec<_>>().join(", ")
        )));
    }
    let gammas = result
        .states
        .iter()
        .map(&control)
        .collect::<Result<Vec<f64>>>()?;
    Ok((result, gammas))
}
