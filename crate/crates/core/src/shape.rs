//! Energy, analytic and finite-difference shape derivatives, volume derivative.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::{QuadratureConfig, Source};
use crate::geometry::{BoundaryCurve, FlowField};
use crate::kernel::constant_c0;
use crate::solver::{solve_dirichlet, SolutionField};
use crate::trace::{extract_psi0, TraceConfig, TraceProfile};
use crate::{Error, Result};

/// Everything needed to go from a curve to `J` and `ψ0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeParams {
    pub k_rad: usize,
    pub k_ang: usize,
    pub quad: QuadratureConfig,
    pub source: Source,
    pub trace: TraceConfig,
    pub flow_steps: usize,
}

impl Default for ShapeParams {
    fn default() -> Self {
        Self {
            k_rad: 6,
            k_ang: 4,
            quad: QuadratureConfig::default(),
            source: Source::default(),
            trace: TraceConfig::default(),
            flow_steps: 32,
        }
    }
}

impl ShapeParams {
    pub fn solve(&self, curve: &BoundaryCurve) -> Result<SolutionField> {
        solve_dirichlet(curve, &self.source, self.k_rad, self.k_ang, &self.quad)
    }
}

/// `J = −½ ∫ f u`, evaluated as `−½ bᵀc` on the outer grid.
pub fn energy(sol: &SolutionField) -> f64 {
    sol.energy()
}

/// `C0 ∫ ψ0² ζ·n ds` on the profile's arc-length nodes.
pub fn shape_derivative_analytic(profile: &TraceProfile, field: &FlowField) -> Result<f64> {
    Ok(constant_c0()? * boundary_moment(profile, field))
}

/// `∫ ψ0² ζ·n ds`, the field-dependent factor of the analytic derivative.
pub fn boundary_moment(profile: &TraceProfile, field: &FlowField) -> f64 {
    profile.integrate(|k| {
        let z = field.value(profile.points[k]);
        let n = profile.normals[k];
        profile.psi0[k].powi(2) * (z[0] * n[0] + z[1] * n[1])
    })
}

/// `∫ ζ·n ds` by the trapezoid rule in the curve's angle parameter.
pub fn volume_derivative(curve: &BoundaryCurve, field: &FlowField) -> f64 {
    let m = 1024;
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|i| {
            let theta = i as f64 * h;
            let (d1, _) = curve.derivatives(theta);
            let z = field.value(curve.curve_point(theta));
            // outward normal times speed is (x₂', −x₁') on a counterclockwise curve
            z[0] * d1[1] - z[1] * d1[0]
        })
        .sum::<f64>()
        * h
}

/// Largest `|ζ·n|` on the boundary samples.
pub fn max_normal_speed(curve: &BoundaryCurve, field: &FlowField) -> f64 {
    let m = 512;
    (0..m)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / m as f64;
            let n = curve.normal_at_theta(theta);
            let z = field.value(curve.curve_point(theta));
            (z[0] * n[0] + z[1] * n[1]).abs()
        })
        .fold(0.0, f64::max)
}

/// `0.02 · diam / max|ζ·n|`.
pub fn default_fd_step(curve: &BoundaryCurve, field: &FlowField) -> Result<f64> {
    let v = max_normal_speed(curve, field);
    if !(v > 0.0) {
        return Err(Error::InvalidConfig("field has no normal component on the boundary".into()));
    }
    Ok(0.02 * curve.diameter() / v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteDifference {
    pub value: f64,
    pub h: f64,
    pub richardson: bool,
    /// Largest re-fit residual among the transported curves.
    pub fit_residual: f64,
}

fn central_difference(curve: &BoundaryCurve, field: &FlowField, h: f64, params: &ShapeParams) -> Result<(f64, f64)> {
    let plus = curve.flow_transport(field, h, params.flow_steps)?;
    let minus = curve.flow_transport(field, -h, params.flow_steps)?;
    let (jp, jm) = rayon::join(|| params.solve(&plus.curve), || params.solve(&minus.curve));
    let value = (energy(&jp?) - energy(&jm?)) / (2.0 * h);
    Ok((value, plus.fit_residual.max(minus.fit_residual)))
}

/// `(J(φ_h Ω) − J(φ_{−h} Ω)) / 2h`, optionally extrapolated from `h` and `h/2`.
pub fn shape_derivative_fd(
    curve: &BoundaryCurve,
    field: &FlowField,
    h: f64,
    params: &ShapeParams,
    richardson: bool,
) -> Result<FiniteDifference> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("finite-difference step {h} must be positive")));
    }
    let (d1, r1) = central_difference(curve, field, h, params)?;
    if !richardson {
        return Ok(FiniteDifference { value: d1, h, richardson, fit_residual: r1 });
    }
    let (d2, r2) = central_difference(curve, field, 0.5 * h, params)?;
    Ok(FiniteDifference { value: (4.0 * d2 - d1) / 3.0, h, richardson, fit_residual: r1.max(r2) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeDerivativeReport {
    pub energy: f64,
    pub analytic: f64,
    pub fd: f64,
    pub h: f64,
    pub richardson: bool,
    pub fit_residual: f64,
    /// `|analytic − fd| / |fd|`.
    pub discrepancy: f64,
}

pub fn shape_derivative_report(
    curve: &BoundaryCurve,
    field: &FlowField,
    params: &ShapeParams,
    h: Option<f64>,
    richardson: bool,
) -> Result<ShapeDerivativeReport> {
    let sol = params.solve(curve)?;
    let profile = extract_psi0(&sol, &params.trace)?;
    let analytic = shape_derivative_analytic(&profile, field)?;
    let h = match h {
        Some(h) => h,
        None => default_fd_step(curve, field)?,
    };
    let fd = shape_derivative_fd(curve, field, h, params, richardson)?;
    Ok(ShapeDerivativeReport {
        energy: energy(&sol),
        analytic,
        fd: fd.value,
        h,
        richardson,
        fit_residual: fd.fit_residual,
        discrepancy: (analytic - fd.value).abs() / fd.value.abs(),
    })
}
