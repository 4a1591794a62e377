//! Area-constrained shape gradient descent on `J`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{fit_fourier, BoundaryCurve};
use crate::kernel::constant_c0;
use crate::shape::{energy, ShapeParams};
use crate::trace::{extract_psi0, serrin_residual, TraceProfile};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerParams {
    pub max_iters: usize,
    /// Largest trial radius change per step, relative to the mean radius.
    pub step0: f64,
    /// Stop when one accepted step lowers `J` by less than `tol_j·|J|`.
    pub tol_j: f64,
    pub tol_serrin: f64,
    /// Stop when `max|V| / λ` falls below this.
    pub tol_velocity: f64,
    /// Fourier order kept after every step.
    pub order: usize,
    pub armijo: f64,
    pub max_halvings: usize,
    /// Smallest admissible `ê_r·n` for the normal-to-radial conversion.
    pub min_radial_cos: f64,
    pub shape: ShapeParams,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            max_iters: 40,
            step0: 0.1,
            tol_j: 1e-7,
            tol_serrin: 2e-3,
            tol_velocity: 5e-3,
            order: 8,
            armijo: 0.1,
            max_halvings: 20,
            min_radial_cos: 0.2,
            shape: ShapeParams::default(),
        }
    }
}

/// Normal velocity `V = ψ0² − λ` with `λ` the boundary mean of `ψ0²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentDirection {
    pub velocity: Vec<f64>,
    pub lambda: f64,
    /// `C0 ∫ ψ0² V ds`, never positive.
    pub predicted_dj: f64,
}

pub fn descent_direction(profile: &TraceProfile) -> Result<DescentDirection> {
    if profile.is_empty() || !(profile.mean() > 0.0) {
        return Err(Error::DegenerateProfile("trace mean is not positive".into()));
    }
    let sq: Vec<f64> = profile.psi0.iter().map(|p| p * p).collect();
    let lambda = profile.integrate(|k| sq[k]) / profile.length;
    let velocity: Vec<f64> = sq.iter().map(|q| q - lambda).collect();
    let predicted_dj = constant_c0()? * profile.integrate(|k| sq[k] * velocity[k]);
    Ok(DescentDirection { velocity, lambda, predicted_dj: predicted_dj.min(0.0) })
}

/// Fourier coefficients `[a0, a1, b1, ...]` of `δρ = V / (ê_r·n)`.
pub fn radius_perturbation(
    curve: &BoundaryCurve,
    profile: &TraceProfile,
    velocity: &[f64],
    order: usize,
    min_radial_cos: f64,
) -> Result<Vec<f64>> {
    let c = curve.center();
    let mut angles = Vec::with_capacity(profile.len());
    let mut values = Vec::with_capacity(profile.len());
    for (k, v) in velocity.iter().enumerate() {
        let p = profile.points[k];
        let n = profile.normals[k];
        let theta = (p[1] - c[1]).atan2(p[0] - c[0]);
        let radial = theta.cos() * n[0] + theta.sin() * n[1];
        if radial < min_radial_cos {
            return Err(Error::StarShapeLost(format!("ê_r·n = {radial:.3} at θ = {theta:.4}")));
        }
        angles.push(theta);
        values.push(v / radial);
    }
    Ok(fit_fourier(&angles, &values, order)?.0)
}

/// `ρ + t δρ` truncated to `order`, then rescaled about the center to unit area.
pub fn perturbed_curve(curve: &BoundaryCurve, delta: &[f64], t: f64, order: usize) -> Result<BoundaryCurve> {
    let mut coeffs = curve.coefficient_vector();
    coeffs.resize(2 * order + 1, 0.0);
    for (c, d) in coeffs.iter_mut().zip(delta) {
        *c += t * d;
    }
    let split = |v: &[f64], s: f64| -> (f64, Vec<f64>, Vec<f64>) {
        (
            s * v[0],
            (0..order).map(|k| s * v[1 + 2 * k]).collect(),
            (0..order).map(|k| s * v[2 + 2 * k]).collect(),
        )
    };
    let (a0, cos, sin) = split(&coeffs, 1.0);
    let raw = BoundaryCurve::new(curve.center(), a0, cos, sin).map_err(|e| Error::StarShapeLost(e.to_string()))?;
    let (a0, cos, sin) = split(&coeffs, 1.0 / raw.area().sqrt());
    BoundaryCurve::new(curve.center(), a0, cos, sin)
}

/// Same shape, scaled about its center to unit area.
pub fn unit_area(curve: &BoundaryCurve) -> Result<BoundaryCurve> {
    curve.scaled(1.0 / curve.area().sqrt())
}

/// `std(ρ)/mean(ρ)` of boundary distances to the area centroid.
pub fn roundness(curve: &BoundaryCurve) -> f64 {
    let g = curve.centroid();
    let d: Vec<f64> = curve.samples().iter().map(|p| (p[0] - g[0]).hypot(p[1] - g[1])).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let var = d.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / d.len() as f64;
    var.sqrt() / mean
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationState {
    pub iteration: usize,
    #[serde(skip)]
    pub curve: BoundaryCurve,
    pub energy: f64,
    pub serrin: f64,
    pub roundness: f64,
    pub area: f64,
    /// Accepted step `t` that produced this state (0 for the start).
    pub step: f64,
    /// `t · predicted_dj` of the step that produced this state.
    pub predicted_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SerrinTolerance,
    VelocityTolerance,
    EnergyStalled,
    MaxIterations,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationHistory {
    pub states: Vec<OptimizationState>,
    pub stop: StopReason,
}

impl OptimizationHistory {
    pub fn last(&self) -> &OptimizationState {
        self.states.last().expect("history starts with the initial state")
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,J,serrin,roundness,step")?;
        for s in &self.states {
            writeln!(w, "{},{},{},{},{}", s.iteration, s.energy, s.serrin, s.roundness, s.step)?;
        }
        Ok(())
    }
}

struct Evaluated {
    profile: TraceProfile,
    energy: f64,
    serrin: f64,
}

fn evaluate(curve: &BoundaryCurve, params: &ShapeParams) -> Result<Evaluated> {
    let sol = params.solve(curve)?;
    let profile = extract_psi0(&sol, &params.trace)?;
    let serrin = serrin_residual(&profile)?;
    Ok(Evaluated { energy: energy(&sol), profile, serrin })
}

/// Result of one line search.
#[derive(Debug, Clone)]
pub struct Step {
    pub curve: BoundaryCurve,
    pub t: f64,
    pub energy: f64,
    pub predicted_change: f64,
}

/// One Armijo backtracking step from `curve`, whose solve and trace are given.
pub fn descent_step(
    curve: &BoundaryCurve,
    profile: &TraceProfile,
    j0: f64,
    t0: Option<f64>,
    params: &OptimizerParams,
) -> Result<Step> {
    let dir = descent_direction(profile)?;
    let delta = radius_perturbation(curve, profile, &dir.velocity, params.order, params.min_radial_cos)?;
    // predicted slope of the truncated perturbation, whose normal speed is δρ (ê_r·n)
    let c = curve.center();
    let c0 = constant_c0()?;
    let slope = c0
        * profile.integrate(|k| {
            let p = profile.points[k];
            let n = profile.normals[k];
            let theta = (p[1] - c[1]).atan2(p[0] - c[0]);
            let mut d = delta[0];
            for m in 1..=params.order {
                let (s, co) = (m as f64 * theta).sin_cos();
                d += delta[2 * m - 1] * co + delta[2 * m] * s;
            }
            profile.psi0[k].powi(2) * d * (theta.cos() * n[0] + theta.sin() * n[1])
        });
    if !(slope < 0.0) {
        return Err(Error::LineSearchFailed(0));
    }
    let size = (0..720)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / 720.0;
            let mut d = delta[0];
            for m in 1..=params.order {
                let (s, co) = (m as f64 * theta).sin_cos();
                d += delta[2 * m - 1] * co + delta[2 * m] * s;
            }
            d.abs()
        })
        .fold(0.0, f64::max);
    let t_max = params.step0 * curve.a0() / size;
    let mut t = t0.map_or(t_max, |t| t.min(t_max));
    for _ in 0..=params.max_halvings {
        if let Ok(trial) = perturbed_curve(curve, &delta, t, params.order) {
            if let Ok(sol) = params.shape.solve(&trial) {
                let j = energy(&sol);
                if j <= j0 + params.armijo * t * slope {
                    return Ok(Step { curve: trial, t, energy: j, predicted_change: t * slope });
                }
            }
        }
        t *= 0.5;
    }
    Err(Error::LineSearchFailed(params.max_halvings))
}

/// Gradient descent from `curve0` (rescaled to unit area) until a tolerance or `max_iters`.
pub fn optimize(curve0: &BoundaryCurve, params: &OptimizerParams) -> Result<OptimizationHistory> {
    let mut curve = unit_area(curve0)?;
    let mut eval = evaluate(&curve, &params.shape)?;
    let mut states = vec![OptimizationState {
        iteration: 0,
        curve: curve.clone(),
        energy: eval.energy,
        serrin: eval.serrin,
        roundness: roundness(&curve),
        area: curve.area(),
        step: 0.0,
        predicted_change: 0.0,
    }];
    let mut t_prev: Option<f64> = None;
    let stop = loop {
        if eval.serrin <= params.tol_serrin {
            break StopReason::SerrinTolerance;
        }
        let dir = descent_direction(&eval.profile)?;
        let vmax = dir.velocity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if vmax <= params.tol_velocity * dir.lambda {
            break StopReason::VelocityTolerance;
        }
        if states.len() > params.max_iters {
            break StopReason::MaxIterations;
        }
        let step = descent_step(&curve, &eval.profile, eval.energy, t_prev, params)?;
        let decrease = eval.energy - step.energy;
        curve = step.curve;
        eval = evaluate(&curve, &params.shape)?;
        t_prev = Some(step.t);
        states.push(OptimizationState {
            iteration: states.len(),
            curve: curve.clone(),
            energy: eval.energy,
            serrin: eval.serrin,
            roundness: roundness(&curve),
            area: curve.area(),
            step: step.t,
            predicted_change: step.predicted_change,
        });
        if decrease < params.tol_j * eval.energy.abs() {
            break StopReason::EnergyStalled;
        }
    };
    Ok(OptimizationHistory { states, stop })
}
