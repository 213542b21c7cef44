//! Four-step trajectory synthesis.
//!
//! 1. the singular arc is the locus Γ_s = 0 (located implicitly through the
//!    residual, which is positive below the arc speed and negative above it);
//! 2. a forward extremal leg from the initial state runs until it crosses the
//!    locus or a valid constraint bound;
//! 3. a backward extremal leg from the terminal state does the same;
//! 4. backward integration from the step-3 junction follows singular and
//!    boundary arcs, switching at constraint crossings, until it reaches the
//!    step-2 junction altitude. Shifting the forward leg's free along-track
//!    origin onto the backward chain closes the trajectory and yields the
//!    top of descent.

use crate::dynamics::{self, admissible_gammas, ConstraintId, Direction, Event, State};
use crate::error::{Error, Result};
use crate::performance::{self, CostKind, CostSpec};
use crate::scenario::Scenario;

use super::boundary::{boundary_gamma, eta_a};
use super::singular::{gamma_s_normalized, gamma_s_partials, singular_control};
use super::{Arc, ArcKind, ArcSample, Junction, Problem, Totals, Trajectory};

/// Integration step, s.
const STEP: f64 = 0.5;
/// Re-projection interval on singular arcs, s.
const PROJECT_EVERY: f64 = 10.0;
/// Per-leg integration budget, s.
const LEG_HORIZON: f64 = 3600.0;
/// |Γ_s| (normalized) below which a state counts as already on the arc.
/// Roomy enough to absorb the CAS round-trip of boundary conditions.
const ON_ARC_TOL: f64 = 1e-7;
/// Multiplier sign tolerance when validating boundary junctions.
const ETA_TOL: f64 = 1e-9;

/// What a bang leg ran into.
#[derive(Debug, Clone, Copy, PartialEq)]
enum JunctionKind {
    OnArc,
    OnBound(ConstraintId),
}

struct BangLeg {
    arc: Arc,
    junction: JunctionKind,
    end: State,
}

fn bang_gamma(problem: &Problem<'_>, kind: ArcKind, state: &State) -> Result<f64> {
    let set = admissible_gammas(state.v, problem.limits)?;
    match kind {
        ArcKind::BangHigh => {
            if !set.level_allowed {
                return Err(Error::InfeasibleControl(
                    "level flight not admissible".into(),
                ));
            }
            Ok(0.0)
        }
        ArcKind::BangLow => {
            if !set.interval_nonempty() {
                return Err(Error::InfeasibleControl(format!(
                    "empty descent interval at V_T={:.2}",
                    state.v
                )));
            }
            Ok(set.lo)
        }
        _ => unreachable!("bang_gamma called with a non-bang kind"),
    }
}

/// Time derivative of Γ_s along the flow under a candidate bang, in the
/// direction of integration.
fn residual_drift(
    problem: &Problem<'_>,
    state: &State,
    kind: ArcKind,
    direction: Direction,
) -> Result<f64> {
    let gamma = bang_gamma(problem, kind, state)?;
    let dot = dynamics::eom(state, gamma, problem.wind, problem.model)?;
    let (gv, gh) = gamma_s_partials(problem, state.v, state.h)?;
    let drift = gv * dot.dv + gh * dot.dh;
    Ok(match direction {
        Direction::Forward => drift,
        Direction::Backward => -drift,
    })
}

/// Extremal leg from a fixed boundary state to the first junction.
///
/// The bang is chosen so the flow moves the residual toward zero: level
/// deceleration when the state sits on the fast (Γ_s < 0) side of the arc in
/// forward time, steepest admissible descent otherwise, with the roles
/// swapped for backward integration. The choice is verified against the
/// actual drift and flipped if the geometry says otherwise.
fn bang_leg(problem: &Problem<'_>, start: State, direction: Direction) -> Result<BangLeg> {
    let gs0 = gamma_s_normalized(problem, start.v, start.h)?;
    if gs0.abs() <= ON_ARC_TOL {
        return Ok(BangLeg {
            arc: Arc {
                kind: ArcKind::BangHigh,
                samples: vec![ArcSample {
                    state: start,
                    gamma: 0.0,
                }],
            },
            junction: JunctionKind::OnArc,
            end: start,
        });
    }
    let preferred = match (gs0 < 0.0, direction) {
        (true, Direction::Forward) => ArcKind::BangHigh,
        (false, Direction::Forward) => ArcKind::BangLow,
        (true, Direction::Backward) => ArcKind::BangLow,
        (false, Direction::Backward) => ArcKind::BangHigh,
    };
    let other = if preferred == ArcKind::BangHigh {
        ArcKind::BangLow
    } else {
        ArcKind::BangHigh
    };
    let mut kind = preferred;
    if residual_drift(problem, &start, kind, direction)? * gs0 >= 0.0 {
        kind = other;
        if residual_drift(problem, &start, kind, direction)? * gs0 >= 0.0 {
            return Err(Error::Synthesis(format!(
                "neither bang moves the state toward the singular arc from \
                 V_T={:.2} m/s, h={:.0} m (Γ_s norm {gs0:.3e})",
                start.v, start.h
            )));
        }
    }

    let control = move |s: &State| bang_gamma(problem, kind, s);
    let mut events = vec![Event::new("gamma_s", move |s: &State| {
        gamma_s_normalized(problem, s.v, s.h)
    })];
    for id in ConstraintId::ALL {
        events.push(Event::new(id.label(), move |s: &State| {
            id.value(s.v, s.h, &problem.model.envelope)
        }));
    }
    let (res, gammas) = dynamics::integrate(
        start,
        problem.model,
        problem.wind,
        control,
        &events,
        direction,
        STEP,
        LEG_HORIZON,
    )
    .map_err(|e| match e {
        Error::NoJunction(msg) => Error::Synthesis(format!(
            "extremal leg from V_T={:.2}, h={:.0} found no junction: {msg}",
            start.v, start.h
        )),
        other_err => other_err,
    })?;
    let hit = res.hit.expect("integrate returned without a hit");
    let junction = if hit.event_index == 0 {
        JunctionKind::OnArc
    } else {
        let id = ConstraintId::ALL[hit.event_index - 1];
        let eta = eta_a(problem, id, hit.state.v, hit.state.h)?;
        if eta < -ETA_TOL {
            return Err(Error::Synthesis(format!(
                "extremal leg reached the {} bound at V_T={:.2}, h={:.0} where the \
                 boundary arc is not admissible (η_a = {eta:.3e} < 0)",
                id.label(),
                hit.state.v,
                hit.state.h
            )));
        }
        JunctionKind::OnBound(id)
    };
    let samples = res
        .states
        .iter()
        .zip(&gammas)
        .map(|(s, &g)| ArcSample {
            state: *s,
            gamma: g,
        })
        .collect();
    Ok(BangLeg {
        arc: Arc { kind, samples },
        junction,
        end: hit.state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Singular,
    Boundary(ConstraintId),
}

impl Mode {
    fn arc_kind(&self) -> ArcKind {
        match self {
            Mode::Singular => ArcKind::Singular,
            Mode::Boundary(id) => ArcKind::Boundary(*id),
        }
    }
}

/// Newton-project the speed back onto Γ_s = 0 at fixed altitude.
fn project_onto_arc(problem: &Problem<'_>, state: &mut State) -> Result<()> {
    for _ in 0..5 {
        let g = gamma_s_normalized(problem, state.v, state.h)?;
        if g.abs() <= 1e-12 {
            return Ok(());
        }
        let dv = state.v * 1e-6;
        let slope = (gamma_s_normalized(problem, state.v + dv, state.h)?
            - gamma_s_normalized(problem, state.v - dv, state.h)?)
            / (2.0 * dv);
        if slope == 0.0 {
            break;
        }
        state.v -= g / slope;
    }
    Ok(())
}

/// Outcome of one backward chunk along a singular or boundary arc.
enum RideOutcome {
    HitTarget,
    Switched(Mode),
    Continuing,
}

/// Backward STEP-4 integration from the step-3 junction to the step-2
/// junction altitude, switching between singular and boundary arcs at
/// constraint crossings.
fn ride_backward(
    problem: &Problem<'_>,
    start: State,
    start_mode: Mode,
    h_target: f64,
) -> Result<(Vec<Arc>, State)> {
    let mut arcs: Vec<Arc> = Vec::new();
    let mut mode = start_mode;
    let mut state = start;
    let mut samples = vec![ArcSample {
        state,
        gamma: mode_gamma(problem, mode, &state)?,
    }];
    let mut elapsed = 0.0;
    let mut fresh_switch = true;
    let mut since_projection = 0.0;

    if (start.h - h_target).abs() < 1e-9 {
        return Ok((
            vec![Arc {
                kind: mode.arc_kind(),
                samples,
            }],
            state,
        ));
    }

    loop {
        if elapsed > LEG_HORIZON {
            return Err(Error::Synthesis(format!(
                "constrained/singular chain exhausted {LEG_HORIZON} s before reaching \
                 h = {h_target:.0} m (currently at V_T={:.2}, h={:.0}, mode {:?})",
                state.v, state.h, mode
            )));
        }
        let chunk = if fresh_switch { STEP } else { PROJECT_EVERY };
        let outcome = ride_chunk(
            problem,
            &mut state,
            mode,
            h_target,
            chunk,
            fresh_switch,
            &mut samples,
        )?;
        elapsed += chunk;
        since_projection += chunk;
        fresh_switch = false;
        match outcome {
            RideOutcome::HitTarget => {
                arcs.push(Arc {
                    kind: mode.arc_kind(),
                    samples,
                });
                return Ok((arcs, state));
            }
            RideOutcome::Switched(next) => {
                samples.push(ArcSample {
                    state,
                    gamma: mode_gamma(problem, mode, &state)?,
                });
                arcs.push(Arc {
                    kind: mode.arc_kind(),
                    samples: std::mem::take(&mut samples),
                });
                mode = next;
                samples = vec![ArcSample {
                    state,
                    gamma: mode_gamma(problem, mode, &state)?,
                }];
                fresh_switch = true;
                since_projection = 0.0;
            }
            RideOutcome::Continuing => {
                if mode == Mode::Singular && since_projection >= PROJECT_EVERY {
                    project_onto_arc(problem, &mut state)?;
                    since_projection = 0.0;
                    if let Some(last) = samples.last_mut() {
                        last.state = state;
                        last.gamma = mode_gamma(problem, mode, &state)?;
                    }
                }
            }
        }
    }
}

fn mode_gamma(problem: &Problem<'_>, mode: Mode, state: &State) -> Result<f64> {
    let gamma = match mode {
        Mode::Singular => singular_control(problem, state.v, state.h)?,
        Mode::Boundary(id) => boundary_gamma(problem, id, state.v, state.h)?,
    };
    let set = admissible_gammas(state.v, problem.limits)?;
    if !set.contains(gamma, 1e-9) {
        return Err(Error::Synthesis(format!(
            "{:?} control γ = {gamma:.5} rad left the admissible set \
             [{:.5}, {:.5}] at V_T={:.2}, h={:.0}",
            mode, set.lo, set.hi, state.v, state.h
        )));
    }
    Ok(gamma)
}

/// One backward chunk. Fresh switches run a single un-armed step so the
/// constraint or residual that defined the previous arc (still sitting at
/// zero, up to noise) cannot immediately retrigger; the altitude target stays
/// armed throughout.
fn ride_chunk(
    problem: &Problem<'_>,
    state: &mut State,
    mode: Mode,
    h_target: f64,
    horizon: f64,
    target_only: bool,
    samples: &mut Vec<ArcSample>,
) -> Result<RideOutcome> {
    let control = |s: &State| mode_gamma(problem, mode, s);
    let field = |s: &State| dynamics::eom(s, control(s)?, problem.wind, problem.model);

    let mut events = vec![Event::new("h_target", move |s: &State| Ok(s.h - h_target))];
    if !target_only {
        match mode {
            Mode::Singular => {
                for id in ConstraintId::ALL {
                    events.push(Event::new(id.label(), move |s: &State| {
                        id.value(s.v, s.h, &problem.model.envelope)
                    }));
                }
            }
            Mode::Boundary(active) => {
                events.push(Event::new("gamma_s", move |s: &State| {
                    gamma_s_normalized(problem, s.v, s.h)
                }));
                for id in ConstraintId::ALL.into_iter().filter(|id| *id != active) {
                    events.push(Event::new(id.label(), move |s: &State| {
                        id.value(s.v, s.h, &problem.model.envelope)
                    }));
                }
                events.push(Event::new("eta_a", move |s: &State| {
                    eta_a(problem, active, s.v, s.h)
                }));
            }
        }
    }

    let res =
        dynamics::integrate_field(*state, field, &events, Direction::Backward, STEP, horizon)?;
    for s in &res.states[1..] {
        samples.push(ArcSample {
            state: *s,
            gamma: control(s)?,
        });
    }
    let hit = match res.hit {
        None => {
            *state = *res.states.last().unwrap();
            return Ok(RideOutcome::Continuing);
        }
        Some(hit) => hit,
    };
    *state = hit.state;
    if hit.event_index == 0 {
        return Ok(RideOutcome::HitTarget);
    }
    match mode {
        Mode::Singular => {
            let id = ConstraintId::ALL[hit.event_index - 1];
            let eta = eta_a(problem, id, state.v, state.h)?;
            if eta < -ETA_TOL {
                return Err(Error::Synthesis(format!(
                    "singular arc crossed the {} bound at V_T={:.2}, h={:.0} but the \
                     boundary arc has η_a = {eta:.3e} < 0",
                    id.label(),
                    state.v,
                    state.h
                )));
            }
            Ok(RideOutcome::Switched(Mode::Boundary(id)))
        }
        Mode::Boundary(active) => {
            // event 1 is the Γ_s crossing, the tail events are other bounds
            // and the multiplier sign
            if hit.event_index == 1 {
                Ok(RideOutcome::Switched(Mode::Singular))
            } else if hit.event_index == events.len() - 1 {
                Err(Error::Synthesis(format!(
                    "multiplier of the {} bound turned negative at V_T={:.2}, h={:.0}",
                    active.label(),
                    state.v,
                    state.h
                )))
            } else {
                let others: Vec<ConstraintId> = ConstraintId::ALL
                    .into_iter()
                    .filter(|id| *id != active)
                    .collect();
                Err(Error::Synthesis(format!(
                    "boundary arc on {} ran into the {} bound at V_T={:.2}, h={:.0}",
                    active.label(),
                    others[hit.event_index - 2].label(),
                    state.v,
                    state.h
                )))
            }
        }
    }
}

/// Normalized state mismatch between the two sides of a junction.
fn junction_gap(a: &State, b: &State) -> f64 {
    let dv = (a.v - b.v).abs() / a.v.abs().max(1.0);
    let dh = (a.h - b.h).abs() / a.h.abs().max(1.0);
    dv.max(dh)
}

/// Synthesize the cost-minimizing idle-descent trajectory for a scenario.
pub fn generate_trajectory(scenario: &Scenario) -> Result<Trajectory> {
    scenario.validate()?;
    let cost = scenario.cost_spec()?;
    let problem = Problem {
        model: &scenario.aircraft,
        wind: &scenario.wind,
        cost: &cost,
        limits: &scenario.limits,
    };

    let start = State {
        v: scenario.initial_tas()?,
        h: scenario.initial_h,
        x: 0.0, // free origin, shifted onto the backward chain later
        t: 0.0,
    };
    let terminal = State {
        v: scenario.final_tas()?,
        h: scenario.final_h,
        x: scenario.final_x,
        t: 0.0,
    };

    let step2 = bang_leg(&problem, start, Direction::Forward)?;
    let step3 = bang_leg(&problem, terminal, Direction::Backward)?;
    if step3.end.h >= step2.end.h + 1e-6 {
        return Err(Error::Synthesis(format!(
            "junction altitudes out of order: terminal leg joined at {:.0} m above \
             the initial leg's {:.0} m; the metering conditions leave no interior arc",
            step3.end.h, step2.end.h
        )));
    }

    let start_mode = match step3.junction {
        JunctionKind::OnArc => Mode::Singular,
        JunctionKind::OnBound(id) => Mode::Boundary(id),
    };
    let (back_arcs, chain_end) = ride_backward(&problem, step3.end, start_mode, step2.end.h)?;

    // the backward chain must land on the same branch the forward leg joined
    let end_kind = back_arcs.last().expect("chain has arcs").kind;
    let expected = match step2.junction {
        JunctionKind::OnArc => ArcKind::Singular,
        JunctionKind::OnBound(id) => ArcKind::Boundary(id),
    };
    if end_kind != expected {
        return Err(Error::Synthesis(format!(
            "backward chain reached the initial junction altitude on {} but the \
             forward leg joined {}",
            end_kind.label(),
            expected.label()
        )));
    }
    let gap = junction_gap(&chain_end, &step2.end);
    if gap > 1e-6 {
        return Err(Error::Synthesis(format!(
            "junction mismatch at h = {:.0} m: forward leg ends at V_T = {:.4} m/s, \
             backward chain arrives at {:.4} m/s (normalized gap {gap:.2e})",
            step2.end.h, step2.end.v, chain_end.v
        )));
    }

    // assemble forward-ordered arcs; the backward chain carries the absolute
    // (x, t) frame anchored at the meter fix
    let mut arcs: Vec<Arc> = Vec::new();
    let dt_shift = chain_end.t - step2.end.t;
    let dx_shift = chain_end.x - step2.end.x;
    let mut first = step2.arc;
    for s in &mut first.samples {
        s.state.t += dt_shift;
        s.state.x += dx_shift;
    }
    arcs.push(first);
    for mut arc in back_arcs.into_iter().rev() {
        arc.samples.reverse();
        arcs.push(arc);
    }
    let mut last = step3.arc;
    last.samples.reverse();
    arcs.push(last);

    // zero time at the top of descent
    let t0 = arcs[0].first().state.t;
    for arc in &mut arcs {
        for s in &mut arc.samples {
            s.state.t -= t0;
        }
    }

    let junctions = arcs
        .windows(2)
        .map(|pair| Junction {
            time: pair[1].first().state.t,
            from: pair[0].kind,
            to: pair[1].kind,
            state: pair[1].first().state,
        })
        .collect();

    let tod_x = arcs[0].first().state.x;
    if tod_x < cost.d_max {
        return Err(Error::Synthesis(format!(
            "top of descent {:.1} NM lies beyond the d_max datum {:.1} NM; \
             the free-range equivalence does not hold for this scenario",
            crate::units::to_nm(tod_x),
            crate::units::to_nm(cost.d_max)
        )));
    }
    let descent_duration = arcs.last().unwrap().last().state.t;
    let arrival_time = (tod_x - cost.d_max) / cost.cruise_ground_speed + descent_duration;

    let mut trajectory = Trajectory {
        arcs,
        junctions,
        tod_x,
        arrival_time,
        totals: Totals {
            cost: 0.0,
            fuel_kg: 0.0,
            emissions_g: None,
        },
    };

    let objective =
        performance::total_cost(&trajectory, &cost, &scenario.aircraft, &scenario.wind)?;
    let fuel = match scenario.cost_kind {
        CostKind::Fuel => objective,
        CostKind::Emission(_) => {
            let fuel_spec = CostSpec::for_scenario(
                CostKind::Fuel,
                &scenario.aircraft,
                &scenario.wind,
                scenario.initial_tas()?,
                scenario.initial_h,
                scenario.d_max,
            )?;
            performance::total_cost(&trajectory, &fuel_spec, &scenario.aircraft, &scenario.wind)?
        }
    };
    trajectory.totals = Totals {
        cost: objective,
        fuel_kg: fuel,
        emissions_g: match scenario.cost_kind {
            CostKind::Fuel => None,
            CostKind::Emission(_) => Some(objective),
        },
    };
    Ok(trajectory)
}
