//! Post-synthesis verification of the first-order necessary conditions.
//!
//! Costates on singular and boundary arcs are pinned by the vanishing
//! Hamiltonian and switching function. Along the extremal end legs only the
//! junction values are known; the altitude adjoint is integrated along the
//! stored leg (backward on the initial leg, forward on the final one), the
//! speed adjoint is recovered from H = 0, and the switching function's sign
//! is then compared against the bang that was actually flown.

use crate::airmodel::G0;
use crate::dynamics::{self, State};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

use super::boundary::eta_a;
use super::singular::{gamma_s_normalized, glc_check};
use super::{
    costates_on_arc, hamiltonian, switching, Arc, ArcKind, ArcSample, Costate, Problem, Trajectory,
};

/// Normalized tolerance for |H| ≈ 0.
const H_TOL: f64 = 1e-4;
/// Normalized tolerance for on-arc residuals and switching values.
const SING_TOL: f64 = 1e-6;
/// Normalized tolerance for adjoint continuity at junctions.
const CONT_TOL: f64 = 1e-6;
/// Multiplier sign slack.
const ETA_TOL: f64 = 1e-9;
/// Normalized slack for the bang-sign test away from junctions.
const SIGN_TOL: f64 = 1e-9;
/// Minimum control jump, rad, for the junction parity test.
const JUMP_TOL: f64 = 1e-4;

/// One verified condition.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub name: &'static str,
    pub passed: bool,
    /// Worst offending value, in the units named by `detail`.
    pub worst: f64,
    pub detail: String,
}

/// Per-sample adjoint diagnostics aligned with `Trajectory::samples()`.
#[derive(Debug, Clone, Copy)]
pub struct SampleDiagnostics {
    pub t: f64,
    pub costate: Costate,
    /// Hamiltonian normalized by K_cr·V_cr.
    pub hamiltonian: f64,
    /// Switching function normalized by K_cr·V_cr.
    pub switching: f64,
    /// Normalized singular-arc residual.
    pub gamma_s: f64,
}

/// Full necessary-condition report.
#[derive(Debug, Clone)]
pub struct OptimalityReport {
    pub conditions: Vec<ConditionReport>,
    pub diagnostics: Vec<SampleDiagnostics>,
}

impl OptimalityReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&ConditionReport> {
        self.conditions.iter().filter(|c| !c.passed).collect()
    }
}

/// Interpolated state (V, h) plus γ inside one arc at time `t`, cubic Hermite
/// in the stored samples with end-point derivatives from the dynamics.
fn state_at(problem: &Problem<'_>, arc: &Arc, t: f64) -> Result<(f64, f64, f64)> {
    let samples = &arc.samples;
    if samples.len() == 1 || t <= samples[0].state.t {
        let s = samples[0];
        return Ok((s.state.v, s.state.h, s.gamma));
    }
    if t >= samples[samples.len() - 1].state.t {
        let s = samples[samples.len() - 1];
        return Ok((s.state.v, s.state.h, s.gamma));
    }
    let idx = samples.partition_point(|s| s.state.t <= t) - 1;
    let a = &samples[idx];
    let b = &samples[idx + 1];
    let dt = b.state.t - a.state.t;
    let u = (t - a.state.t) / dt;
    let da = dynamics::eom(&a.state, a.gamma, problem.wind, problem.model)?;
    let db = dynamics::eom(&b.state, b.gamma, problem.wind, problem.model)?;
    let hermite = |p0: f64, m0: f64, p1: f64, m1: f64| {
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * p0
            + (u3 - 2.0 * u2 + u) * dt * m0
            + (-2.0 * u3 + 3.0 * u2) * p1
            + (u3 - u2) * dt * m1
    };
    let v = hermite(a.state.v, da.dv, b.state.v, db.dv);
    let h = hermite(a.state.h, da.dh, b.state.h, db.dh);
    let gamma = a.gamma + u * (b.gamma - a.gamma);
    Ok((v, h, gamma))
}

/// Right side of the altitude-adjoint equation along a known leg, with the
/// speed adjoint eliminated through H = 0:
///
/// ```text
/// λ̇_h = K_cr(∂c/∂h·V_T + dW_h/dh) - ∂K_des/∂h
///        + [λ_h V_T γ + (K_des - K_cr(cV_T + W_h))] / [D̃ + m(g + V_T W_hχ)γ]
///          · (∂D̃/∂h + m γ V_T ∂W_hχ/∂h)
/// ```
fn lambda_h_rhs(problem: &Problem<'_>, v: f64, h: f64, gamma: f64, lambda_h: f64) -> Result<f64> {
    let eff = problem.wind.wind_effect(v, h)?;
    let m = problem.model.mass;
    let k_cr = problem.cost.k_cr;
    let k_des = problem.cost.k_des(problem.model, v, h)?;
    let (_, kdes_h) = problem.cost.k_des_partials(problem.model, v, h)?;
    let dn = problem.model.net_drag(v, h)?;
    let (_, dn_h) = problem.model.net_drag_partials(v, h)?;
    let a = G0 + v * eff.whchi;
    let denom = dn + m * a * gamma;
    if denom.abs() < 1e-9 * dn.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "adjoint recovery degenerate at V_T={v:.2}, h={h:.0}: D̃ + m·a·γ ≈ 0"
        )));
    }
    let lambda_v_over_m = (lambda_h * v * gamma + (k_des - k_cr * eff.ground_speed(v))) / denom;
    Ok(k_cr * (eff.dc_dh * v + eff.dwh_dh) - kdes_h
        + lambda_v_over_m * (dn_h + m * gamma * v * eff.dwhchi_dh))
}

/// Speed adjoint from H = 0 given λ_h.
fn lambda_v_from_h(
    problem: &Problem<'_>,
    v: f64,
    h: f64,
    gamma: f64,
    lambda_h: f64,
) -> Result<f64> {
    let eff = problem.wind.wind_effect(v, h)?;
    let m = problem.model.mass;
    let k_des = problem.cost.k_des(problem.model, v, h)?;
    let p = problem.cost.k_cr * eff.ground_speed(v) - k_des;
    let dn = problem.model.net_drag(v, h)?;
    let a = G0 + v * eff.whchi;
    Ok(m * (lambda_h * v * gamma - p) / (dn + m * a * gamma))
}

/// Integrate λ_h over a stored extremal leg with RK4 on the sample grid.
/// `anchor_at_end` selects backward integration from the leg's last sample.
fn costates_on_bang(
    problem: &Problem<'_>,
    arc: &Arc,
    anchor: Costate,
    anchor_at_end: bool,
) -> Result<Vec<Costate>> {
    let n = arc.samples.len();
    let mut lambdas = vec![
        Costate {
            lambda_v: 0.0,
            lambda_h: 0.0
        };
        n
    ];
    let rhs = |t: f64, lh: f64| -> Result<f64> {
        let (v, h, gamma) = state_at(problem, arc, t)?;
        lambda_h_rhs(problem, v, h, gamma, lh)
    };
    let order: Vec<usize> = if anchor_at_end {
        (0..n).rev().collect()
    } else {
        (0..n).collect()
    };
    let mut lh = anchor.lambda_h;
    for (k, &i) in order.iter().enumerate() {
        let s = &arc.samples[i];
        if k > 0 {
            let prev = &arc.samples[order[k - 1]];
            let t0 = prev.state.t;
            let t1 = s.state.t;
            let dt = t1 - t0;
            let k1 = rhs(t0, lh)?;
            let k2 = rhs(t0 + 0.5 * dt, lh + 0.5 * dt * k1)?;
            let k3 = rhs(t0 + 0.5 * dt, lh + 0.5 * dt * k2)?;
            let k4 = rhs(t1, lh + dt * k3)?;
            lh += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let lv = lambda_v_from_h(problem, s.state.v, s.state.h, s.gamma, lh)?;
        lambdas[i] = Costate {
            lambda_v: lv,
            lambda_h: lh,
        };
    }
    Ok(lambdas)
}

struct Check {
    name: &'static str,
    worst: f64,
    passed: bool,
    detail: String,
}

impl Check {
    fn new(name: &'static str, detail: &str) -> Self {
        Check {
            name,
            worst: 0.0,
            passed: true,
            detail: detail.to_string(),
        }
    }

    /// Track the maximum of `value` and fail once it exceeds `limit`.
    fn max_bound(&mut self, value: f64, limit: f64) {
        if value > self.worst {
            self.worst = value;
        }
        if value > limit {
            self.passed = false;
        }
    }

    fn into_report(self) -> ConditionReport {
        ConditionReport {
            name: self.name,
            passed: self.passed,
            worst: self.worst,
            detail: self.detail,
        }
    }
}

/// Verify every first-order condition on a generated trajectory. The report
/// lists each condition with its worst margin; nothing short-circuits.
pub fn check_optimality(scenario: &Scenario, traj: &Trajectory) -> Result<OptimalityReport> {
    let cost = scenario.cost_spec()?;
    let problem = Problem {
        model: &scenario.aircraft,
        wind: &scenario.wind,
        cost: &cost,
        limits: &scenario.limits,
    };
    let scale = cost.scale();
    if traj.arcs.is_empty() || traj.arcs.iter().any(|a| a.samples.is_empty()) {
        return Err(Error::ModelValidation("empty trajectory".into()));
    }

    // per-arc costate tracks
    let n_arcs = traj.arcs.len();
    let mut tracks: Vec<Vec<Costate>> = Vec::with_capacity(n_arcs);
    for (i, arc) in traj.arcs.iter().enumerate() {
        let track = match arc.kind {
            ArcKind::Singular | ArcKind::Boundary(_) => arc
                .samples
                .iter()
                .map(|s| costates_on_arc(&problem, &s.state))
                .collect::<Result<Vec<_>>>()?,
            ArcKind::BangHigh | ArcKind::BangLow => {
                let anchor_at_end = i == 0;
                let anchor_state = if anchor_at_end {
                    arc.last().state
                } else {
                    arc.first().state
                };
                let anchor = costates_on_arc(&problem, &anchor_state)?;
                costates_on_bang(&problem, arc, anchor, anchor_at_end)?
            }
        };
        tracks.push(track);
    }

    let mut c_h = Check::new("hamiltonian_zero", "max |H| / (K_cr·V_cr)");
    let mut c_lx = Check::new("lambda_x_zero", "λ_x carried identically zero");
    let mut c_sign = Check::new(
        "bang_switching_sign",
        "worst wrong-signed |H_γ| / (K_cr·V_cr) on extremal legs",
    );
    let mut c_res = Check::new("singular_residual", "max |Γ_s| normalized on singular arcs");
    let mut c_hg = Check::new(
        "singular_switching",
        "max |H_γ| / (K_cr·V_cr) on singular arcs",
    );
    let mut c_glc = Check::new("glc_nonpositive", "max GLC value on singular arcs");
    let mut c_sa = Check::new(
        "boundary_activity",
        "max |S_a| (normalized) on boundary arcs",
    );
    let mut c_eta = Check::new("eta_nonnegative", "worst -η_a on boundary arcs");
    let mut c_mixed = Check::new(
        "mixed_constraints_inactive",
        "worst control-interval margin violation on interior arcs, rad",
    );
    let mut c_cont = Check::new(
        "adjoint_continuity",
        "max normalized adjoint jump at junctions",
    );
    let mut c_par = Check::new(
        "junction_parity",
        "worst missing control jump at junctions, rad",
    );

    let lambda_scale = tracks
        .iter()
        .flatten()
        .map(|c| c.lambda_v.abs().max(c.lambda_h.abs() * 100.0))
        .fold(1e-30, f64::max);

    let mut diagnostics = Vec::new();
    for (arc, track) in traj.arcs.iter().zip(&tracks) {
        let n = arc.samples.len();
        for (j, (s, cs)) in arc.samples.iter().zip(track).enumerate() {
            let ham = hamiltonian(&problem, &s.state, cs, s.gamma)? / scale;
            let hg = switching(&problem, &s.state, cs)? / scale;
            let gs = gamma_s_normalized(&problem, s.state.v, s.state.h)?;
            c_h.max_bound(ham.abs(), H_TOL);
            match arc.kind {
                ArcKind::BangHigh | ArcKind::BangLow => {
                    // junction endpoints sit where H_γ crosses zero
                    let interior = j != 0 && j != n - 1;
                    if interior {
                        let violation = match arc.kind {
                            ArcKind::BangHigh => hg.max(0.0),
                            _ => (-hg).max(0.0),
                        };
                        c_sign.max_bound(violation, SIGN_TOL);
                    }
                }
                ArcKind::Singular => {
                    c_res.max_bound(gs.abs(), SING_TOL);
                    c_hg.max_bound(hg.abs(), SING_TOL);
                    let glc = glc_check(&problem, s.state.v, s.state.h)?;
                    c_glc.max_bound(glc, 0.0);
                    let set = dynamics::admissible_gammas(s.state.v, problem.limits)?;
                    let margin = (set.lo - s.gamma).max(s.gamma - set.hi);
                    c_mixed.max_bound(margin, -1e-12);
                }
                ArcKind::Boundary(id) => {
                    let sa = id.value(s.state.v, s.state.h, &problem.model.envelope)?;
                    let bound_scale = match id {
                        dynamics::ConstraintId::CasMax => problem.model.envelope.cas_max,
                        dynamics::ConstraintId::CasMin => problem.model.envelope.cas_min,
                        dynamics::ConstraintId::MachMax => problem.model.envelope.mach_max,
                        dynamics::ConstraintId::MachMin => problem.model.envelope.mach_min,
                    };
                    c_sa.max_bound((sa / bound_scale).abs(), SING_TOL);
                    let eta = eta_a(&problem, id, s.state.v, s.state.h)?;
                    c_eta.max_bound(-eta, ETA_TOL);
                    let set = dynamics::admissible_gammas(s.state.v, problem.limits)?;
                    let margin = (set.lo - s.gamma).max(s.gamma - set.hi);
                    c_mixed.max_bound(margin, -1e-12);
                }
            }
            diagnostics.push(SampleDiagnostics {
                t: s.state.t,
                costate: *cs,
                hamiltonian: ham,
                switching: hg,
                gamma_s: gs,
            });
        }
    }
    c_lx.max_bound(0.0, 1.0);

    // junction continuity and control-jump parity
    for i in 0..n_arcs - 1 {
        let left = tracks[i].last().unwrap();
        let right = tracks[i + 1].first().unwrap();
        let jump = ((left.lambda_v - right.lambda_v).abs())
            .max((left.lambda_h - right.lambda_h).abs() * 100.0)
            / lambda_scale;
        c_cont.max_bound(jump, CONT_TOL);

        let g_left = traj.arcs[i].last().gamma;
        let g_right = traj.arcs[i + 1].first().gamma;
        let kinds = (traj.arcs[i].kind, traj.arcs[i + 1].kind);
        let needs_jump = matches!(
            kinds,
            (
                ArcKind::BangHigh | ArcKind::BangLow,
                ArcKind::Singular | ArcKind::Boundary(_)
            ) | (
                ArcKind::Singular | ArcKind::Boundary(_),
                ArcKind::BangHigh | ArcKind::BangLow
            )
        );
        // zero-length end legs carry no flown control of their own
        let degenerate = traj.arcs[i].samples.len() == 1 || traj.arcs[i + 1].samples.len() == 1;
        if needs_jump && !degenerate {
            c_par.max_bound(JUMP_TOL - (g_left - g_right).abs(), 0.0);
        }
    }

    Ok(OptimalityReport {
        conditions: vec![
            c_h.into_report(),
            c_lx.into_report(),
            c_sign.into_report(),
            c_res.into_report(),
            c_hg.into_report(),
            c_glc.into_report(),
            c_sa.into_report(),
            c_eta.into_report(),
            c_mixed.into_report(),
            c_cont.into_report(),
            c_par.into_report(),
        ],
        diagnostics,
    })
}

/// Helper for tests and harnesses: a deliberately suboptimal trajectory with
/// the extremal-leg structure but a constant-CAS middle leg, joined at states
/// off the singular locus.
pub fn handmade_constant_cas_descent(scenario: &Scenario, overshoot_m: f64) -> Result<Trajectory> {
    use crate::dynamics::{Direction, Event};
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
        x: 0.0,
        t: 0.0,
    };
    // level leg: run to the singular locus, then overshoot a fixed distance
    let events = [Event::new("gamma_s", |s: &State| {
        gamma_s_normalized(&problem, s.v, s.h)
    })];
    let (res, _) = dynamics::integrate(
        start,
        problem.model,
        problem.wind,
        |_| Ok(0.0),
        &events,
        Direction::Forward,
        0.5,
        3600.0,
    )?;
    let reached = res.hit.unwrap().state;
    let x_stop = reached.x + overshoot_m;
    let stop = [Event::new("x_stop", move |s: &State| Ok(s.x - x_stop))];
    let (res2, _) = dynamics::integrate(
        reached,
        problem.model,
        problem.wind,
        |_| Ok(0.0),
        &stop,
        Direction::Forward,
        0.5,
        3600.0,
    )?;
    let mut level: Vec<ArcSample> = res
        .states
        .iter()
        .chain(res2.states.iter().skip(1))
        .map(|s| ArcSample {
            state: *s,
            gamma: 0.0,
        })
        .collect();
    let tod = level.first().unwrap().state;
    let top = level.last().unwrap().state;

    // constant-CAS descent to the final altitude
    let cas_hold = crate::airmodel::cas_from_tas(top.v, top.h)?;
    let cas_gamma = move |s: &State| -> Result<f64> {
        let eff = problem.wind.wind_effect(s.v, s.h)?;
        let (sv, sh) = crate::airmodel::cas_partials(s.v, s.h)?;
        let dn = problem.model.net_drag(s.v, s.h)?;
        let a = G0 + s.v * eff.whchi;
        Ok(-sv * (dn / problem.model.mass) / (sv * a - sh * s.v))
    };
    let h_f = scenario.final_h;
    let h_stop = [Event::new("h_final", move |s: &State| Ok(s.h - h_f))];
    let (res3, g3) = dynamics::integrate(
        top,
        problem.model,
        problem.wind,
        cas_gamma,
        &h_stop,
        Direction::Forward,
        0.5,
        3600.0,
    )?;
    let mut descent: Vec<ArcSample> = res3
        .states
        .iter()
        .zip(&g3)
        .map(|(s, &g)| ArcSample {
            state: *s,
            gamma: g,
        })
        .collect();
    let _ = cas_hold;

    // shift x so the endpoint lands on the fix
    let dx = scenario.final_x - descent.last().unwrap().state.x;
    for s in level.iter_mut().chain(&mut descent) {
        s.state.x += dx;
    }

    let arcs = vec![
        Arc {
            kind: ArcKind::BangHigh,
            samples: level,
        },
        Arc {
            kind: ArcKind::Singular,
            samples: descent,
        },
    ];
    let junctions = arcs
        .windows(2)
        .map(|p| super::Junction {
            time: p[1].first().state.t,
            from: p[0].kind,
            to: p[1].kind,
            state: p[1].first().state,
        })
        .collect();
    let tod_x = tod.x + dx;
    let duration = arcs.last().unwrap().last().state.t;
    Ok(Trajectory {
        arcs,
        junctions,
        tod_x,
        arrival_time: (tod_x - cost.d_max) / cost.cruise_ground_speed + duration,
        totals: super::Totals {
            cost: 0.0,
            fuel_kg: 0.0,
            emissions_g: None,
        },
    })
}
