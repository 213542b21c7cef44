//! Constrained arcs riding an active CAS or Mach bound.
//!
//! The pure state bounds are first order in the control: one time derivative
//! of S_a exposes γ, so holding S_a = 0 fixes the control in closed form. The
//! bound's multiplier η_a follows from the adjoint equation on the arc and
//! must stay non-negative for the arc to be part of an optimal trajectory.

use crate::airmodel::G0;
use crate::dynamics::ConstraintId;
use crate::error::{Error, Result};

use super::singular::gamma_s_residual;
use super::Problem;

/// Flight path angle that keeps the active constraint at zero:
/// γ = -[∂S_a/∂V_T·(g + V_T·W_hχ) - ∂S_a/∂h·V_T]⁻¹ · ∂S_a/∂V_T · D̃/m.
pub fn boundary_gamma(
    problem: &Problem<'_>,
    constraint: ConstraintId,
    v: f64,
    h: f64,
) -> Result<f64> {
    let eff = problem.wind.wind_effect(v, h)?;
    let (sv, sh) = constraint.gradient(v, h)?;
    let a = G0 + v * eff.whchi;
    let denom = sv * a - sh * v;
    if denom.abs() <= 1e-12 * (sv.abs() * a.abs() + sh.abs() * v).max(1e-300) {
        return Err(Error::Numeric(format!(
            "degenerate boundary arc for {} at V_T={v:.2}, h={h:.0}",
            constraint.label()
        )));
    }
    let dn = problem.model.net_drag(v, h)?;
    Ok(-sv * (dn / problem.model.mass) / denom)
}

/// Multiplier of the active state bound:
/// η_a = -(m·γ / D̃²)·Γ_s(V_T, h) / (∂S_a/∂V_T), evaluated with the
/// boundary-arc control. Non-negative on admissible boundary arcs.
pub fn eta_a(problem: &Problem<'_>, constraint: ConstraintId, v: f64, h: f64) -> Result<f64> {
    let gamma = boundary_gamma(problem, constraint, v, h)?;
    let dn = problem.model.net_drag(v, h)?;
    let (sv, _) = constraint.gradient(v, h)?;
    let gs = gamma_s_residual(problem, v, h)?;
    Ok(-(problem.model.mass * gamma / (dn * dn)) * gs / sv)
}
