//! Discrete potential-vorticity consistency of a computed trajectory.

use super::{Integrator, ShallowWater, Stabilization, SweState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PvReport {
    /// Per step, the max-norm of `⟨γ, q₁D₁ - q₀D₀⟩ - Δt⟨∇γ, q̄* m̄⟩`, the weak
    /// PV conservation law of the implicit integrators. `None` for the
    /// semi-implicit scheme, which does not satisfy it in this form.
    pub weak_residuals: Option<Vec<f64>>,
    /// Max over the trajectory of `|q - c|` when the initial `q` is the
    /// constant `c`.
    pub constant_deviation: Option<f64>,
}

impl PvReport {
    pub fn max_weak_residual(&self) -> Option<f64> {
        self.weak_residuals.as_ref().map(|r| r.iter().copied().fold(0.0, f64::max))
    }
}

/// Checks a trajectory of consecutive states produced with `model`'s
/// integrator and time step.
pub fn pv_consistency_check(model: &ShallowWater, trajectory: &[SweState]) -> Result<PvReport> {
    let first = trajectory
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    let params = model.params();
    let weak_residuals = match params.integrator {
        Integrator::SemiImplicit => None,
        _ if params.stabilization == Stabilization::SupgQ => None,
        kind => Some(
            trajectory
                .windows(2)
                .map(|w| {
                    let r = model.implicit_pv_residual(kind, &w[0], &w[1], None)?;
                    Ok(r.iter().fold(0.0f64, |a, v| a.max(v.abs())))
                })
                .collect::<Result<Vec<f64>>>()?,
        ),
    };

    let q0 = model.diagnose_q(&first.u, &first.d)?;
    let c = q0.coeffs()[0];
    let scale = c.abs().max(1.0);
    let constant = q0.coeffs().iter().all(|q| (q - c).abs() <= 1e-12 * scale);
    let constant_deviation = if constant {
        let mut dev = 0.0f64;
        for s in trajectory {
            let q = model.diagnose_q(&s.u, &s.d)?;
            dev = q.coeffs().iter().fold(dev, |a, v| a.max((v - c).abs()));
        }
        Some(dev)
    } else {
        None
    };
    Ok(PvReport {
        weak_residuals,
        constant_deviation,
    })
}
