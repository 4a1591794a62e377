//! Moving-plane diagnostics: critical plane position, reflection difference
//! `w = u − u∘R_Λ` on the reflected cap, and growth of `w` along rays.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{BoundaryCurve, Point};
use crate::solver::SolutionField;
use crate::{Error, Result};

const ARC_SAMPLES: usize = 512;
const SCAN_SAMPLES: usize = 2048;

/// How the sweep of `H_λ = {x·e = λ}` terminates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Configuration {
    /// The reflected cap touches `∂Ω` at `point`, away from the plane.
    InternalTangency { point: Point },
    /// The plane meets `∂Ω` orthogonally at `point`.
    Orthogonal { point: Point },
    Simultaneous { tangency: Point, orthogonal: Point },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPosition {
    pub lambda0: f64,
    pub lambda: f64,
    pub config: Configuration,
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn reflect(x: Point, lambda: f64, e: Point) -> Point {
    let d = 2.0 * (lambda - dot(x, e));
    [x[0] + d * e[0], x[1] + d * e[1]]
}

fn unit(e: Point) -> Result<Point> {
    let n = e[0].hypot(e[1]);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidConfig("direction must be a nonzero vector".into()));
    }
    Ok([e[0] / n, e[1] / n])
}

/// Radial margin `ρ(θ) − |y − c|`; positive inside.
fn margin(curve: &BoundaryCurve, y: Point) -> f64 {
    let c = curve.center();
    let v = [y[0] - c[0], y[1] - c[1]];
    let r = v[0].hypot(v[1]);
    if r == 0.0 {
        return curve.a0();
    }
    curve.radius_from_unit(v[0] / r, v[1] / r) - r
}

/// Angles where `x(θ)·e = λ`, ascending in `[0, 2π)`.
fn plane_crossings(curve: &BoundaryCurve, lambda: f64, e: Point) -> Vec<f64> {
    let g = |t: f64| dot(curve.curve_point(t), e) - lambda;
    let h = 2.0 * PI / SCAN_SAMPLES as f64;
    let vals: Vec<f64> = (0..SCAN_SAMPLES).map(|i| g(i as f64 * h)).collect();
    let mut out = Vec::new();
    for i in 0..SCAN_SAMPLES {
        let (g0, g1) = (vals[i], vals[(i + 1) % SCAN_SAMPLES]);
        // zero counts as positive so every crossing is bracketed exactly once
        if (g0 >= 0.0) == (g1 >= 0.0) {
            continue;
        }
        let (mut lo, mut hi) = (i as f64 * h, (i + 1) as f64 * h);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if (g(mid) >= 0.0) == (g0 >= 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push((0.5 * (lo + hi)) % (2.0 * PI));
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Angle samples spread over the boundary arcs with `x·e < λ`.
fn cap_arc(curve: &BoundaryCurve, lambda: f64, e: Point) -> Vec<f64> {
    let cross = plane_crossings(curve, lambda, e);
    if cross.len() < 2 {
        return Vec::new();
    }
    let mut arcs = Vec::new();
    for k in 0..cross.len() {
        let a = cross[k];
        let b = if k + 1 < cross.len() { cross[k + 1] } else { cross[0] + 2.0 * PI };
        if dot(curve.curve_point(0.5 * (a + b)), e) < lambda {
            arcs.push((a, b));
        }
    }
    let total: f64 = arcs.iter().map(|(a, b)| b - a).sum();
    let mut out = Vec::with_capacity(ARC_SAMPLES);
    for (a, b) in arcs {
        let n = ((ARC_SAMPLES as f64 * (b - a) / total).round() as usize).max(1);
        out.extend((0..n).map(|i| a + (b - a) * (i as f64 + 0.5) / n as f64));
    }
    out
}

/// Smallest margin of the reflected cap boundary, scaled by the diameter.
fn reflected_margin(curve: &BoundaryCurve, lambda: f64, e: Point) -> f64 {
    cap_arc(curve, lambda, e)
        .into_iter()
        .map(|t| margin(curve, reflect(curve.curve_point(t), lambda, e)))
        .fold(f64::INFINITY, f64::min)
}

/// `λ0 = min x·e` on the boundary and the first `Λ` where the reflected cap
/// stops fitting inside `Ω`.
pub fn critical_position(curve: &BoundaryCurve, e: Point, n_scan: usize) -> Result<CriticalPosition> {
    let e = unit(e)?;
    let diam = curve.diameter();
    let m = SCAN_SAMPLES * 4;
    let proj: Vec<f64> = (0..m).map(|i| dot(curve.curve_point(2.0 * PI * i as f64 / m as f64), e)).collect();
    let coarse_min = proj.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    // refine the extreme point by golden-section search around the best sample
    let lambda0 = {
        let h = 2.0 * PI / m as f64;
        let f = |t: f64| dot(curve.curve_point(t), e);
        let (mut a, mut b) = (coarse_min.0 as f64 * h - h, coarse_min.0 as f64 * h + h);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        f(0.5 * (a + b)).min(coarse_min.1)
    };
    let lambda_max = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-10 * diam;
    let fits = |lambda: f64| reflected_margin(curve, lambda, e) >= -tol;

    let n_scan = n_scan.max(2);
    let step = (lambda_max - lambda0) / n_scan as f64;
    let mut lo = lambda0;
    let mut hi = lambda_max;
    for k in 1..=n_scan {
        let l = lambda0 + k as f64 * step;
        if !fits(l) {
            hi = l;
            break;
        }
        lo = l;
    }
    while hi - lo > 1e-9 * diam {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = lo;
    Ok(CriticalPosition { lambda0, lambda, config: classify(curve, lambda, e) })
}

fn classify(curve: &BoundaryCurve, lambda: f64, e: Point) -> Configuration {
    let diam = curve.diameter();
    let mut orth = (f64::INFINITY, [f64::NAN; 2]);
    for t in plane_crossings(curve, lambda, e) {
        let v = dot(curve.normal_at_theta(t), e).abs();
        if v < orth.0 {
            orth = (v, curve.curve_point(t));
        }
    }
    let mut tang = (f64::INFINITY, [f64::NAN; 2]);
    for t in cap_arc(curve, lambda, e) {
        let x = curve.curve_point(t);
        if lambda - dot(x, e) > 1e-2 * diam {
            let y = reflect(x, lambda, e);
            let m = margin(curve, y).abs();
            if m < tang.0 {
                tang = (m, y);
            }
        }
    }
    // scores below 1 meet the thresholds |n·e| < 1e-3 and contact < 1e-6·diam
    let s_orth = orth.0 / 1e-3;
    let s_tang = tang.0 / (1e-6 * diam);
    match (s_orth <= 1.0, s_tang <= 1.0) {
        (true, true) => Configuration::Simultaneous { tangency: tang.1, orthogonal: orth.1 },
        (true, false) => Configuration::Orthogonal { point: orth.1 },
        (false, true) => Configuration::InternalTangency { point: tang.1 },
        (false, false) if s_orth <= s_tang => Configuration::Orthogonal { point: orth.1 },
        (false, false) => Configuration::InternalTangency { point: tang.1 },
    }
}

/// Moving-plane summary for one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub direction: Point,
    pub lambda0: f64,
    pub lambda: f64,
    pub config: Option<Configuration>,
    pub w_min: f64,
    pub w_min_location: Point,
    pub w_mean: f64,
    pub max_u: f64,
    pub tolerance: f64,
    pub negative_fraction: f64,
    pub grid: usize,
    pub points: usize,
}

/// Samples of `w` on the reflected cap, row-major over the grid with `NaN` off the cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapGrid {
    /// Corner of the grid in the `(e, e⊥)` frame.
    pub origin: Point,
    pub spacing: Point,
    pub n: usize,
    pub values: Vec<f64>,
}

/// `w(y) = u(y) − u(R_λ y)` on a grid over `Σ'_λ`, the reflection of the cap
/// `Ω ∩ {x·e < λ}`; the tolerance is `tol_rel · max u` over the cap.
pub fn reflection_difference_with<F: Fn(Point) -> f64 + Sync>(
    u: F,
    curve: &BoundaryCurve,
    lambda0: f64,
    lambda: f64,
    e: Point,
    grid: usize,
    tol_rel: f64,
) -> Result<(SymmetryReport, CapGrid)> {
    let e = unit(e)?;
    if lambda <= lambda0 {
        return Err(Error::EmptyCap { lambda, lambda0 });
    }
    let perp = [-e[1], e[0]];
    // extent of the cap across the plane normal
    let arc = cap_arc(curve, lambda, e);
    let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in &arc {
        let b = dot(curve.curve_point(*t), perp);
        bmin = bmin.min(b);
        bmax = bmax.max(b);
    }
    if arc.is_empty() {
        return Err(Error::EmptyCap { lambda, lambda0 });
    }
    let n = grid.max(2);
    let (amin, amax) = (lambda, 2.0 * lambda - lambda0);
    let ha = (amax - amin) / n as f64;
    let hb = (bmax - bmin) / n as f64;
    let rows: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let b = bmin + (j as f64 + 0.5) * hb;
            (0..n)
                .map(|i| {
                    let a = amin + (i as f64 + 0.5) * ha;
                    let y = [a * e[0] + b * perp[0], a * e[1] + b * perp[1]];
                    let x = reflect(y, lambda, e);
                    if !curve.contains(x) {
                        return (f64::NAN, f64::NAN);
                    }
                    let ux = u(x);
                    (u(y) - ux, ux)
                })
                .collect()
        })
        .collect();

    let mut values = Vec::with_capacity(n * n);
    let mut max_u: f64 = 0.0;
    let (mut w_min, mut w_loc) = (f64::INFINITY, [f64::NAN; 2]);
    let (mut sum, mut count) = (0.0, 0usize);
    for (j, row) in rows.iter().enumerate() {
        for (i, &(w, ux)) in row.iter().enumerate() {
            values.push(w);
            if w.is_nan() {
                continue;
            }
            max_u = max_u.max(ux);
            sum += w;
            count += 1;
            if w < w_min {
                w_min = w;
                let (a, b) = (amin + (i as f64 + 0.5) * ha, bmin + (j as f64 + 0.5) * hb);
                w_loc = [a * e[0] + b * perp[0], a * e[1] + b * perp[1]];
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyCap { lambda, lambda0 });
    }
    let tolerance = tol_rel * max_u;
    let negatives = values.iter().filter(|w| **w < -tolerance).count();
    let report = SymmetryReport {
        direction: e,
        lambda0,
        lambda,
        config: None,
        w_min,
        w_min_location: w_loc,
        w_mean: sum / count as f64,
        max_u,
        tolerance,
        negative_fraction: negatives as f64 / count as f64,
        grid: n,
        points: count,
    };
    Ok((report, CapGrid { origin: [amin, bmin], spacing: [ha, hb], n, values }))
}

pub fn reflection_difference(
    sol: &SolutionField,
    lambda0: f64,
    lambda: f64,
    e: Point,
    grid: usize,
    tol_rel: f64,
) -> Result<(SymmetryReport, CapGrid)> {
    reflection_difference_with(|x| sol.evaluate(x), sol.curve(), lambda0, lambda, e, grid, tol_rel)
}

/// Critical position and reflection report together.
pub fn symmetry_report(sol: &SolutionField, e: Point, n_scan: usize, grid: usize, tol_rel: f64) -> Result<(SymmetryReport, CapGrid)> {
    let cp = critical_position(sol.curve(), e, n_scan)?;
    let (mut report, cap) = reflection_difference(sol, cp.lambda0, cp.lambda, e, grid, tol_rel)?;
    report.config = Some(cp.config);
    Ok((report, cap))
}

/// Log-log fit of `|w(P + t ν)|` against `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// Two-sided 95% band for the slope.
    pub band: (f64, f64),
    pub t: Vec<f64>,
    pub w: Vec<f64>,
}

/// Growth of `w = u − u∘R_λ` along the ray `P + tν`, `t` geometric in `[t_min, t_max]`.
#[allow(clippy::too_many_arguments)]
pub fn growth_probe_with<F: Fn(Point) -> f64>(
    u: F,
    lambda: f64,
    e: Point,
    point: Point,
    direction: Point,
    t_min: f64,
    t_max: f64,
    n: usize,
) -> Result<GrowthFit> {
    let e = unit(e)?;
    let nu = unit(direction)?;
    if !(t_min > 0.0 && t_min < t_max) || n < 3 {
        return Err(Error::InvalidConfig("growth probe needs 0 < t_min < t_max and at least 3 samples".into()));
    }
    let ratio = (t_max / t_min).powf(1.0 / (n - 1) as f64);
    let t: Vec<f64> = (0..n).map(|k| t_min * ratio.powi(k as i32)).collect();
    let w: Vec<f64> = t
        .iter()
        .map(|s| {
            let y = [point[0] + s * nu[0], point[1] + s * nu[1]];
            u(y) - u(reflect(y, lambda, e))
        })
        .collect();
    let scale = t.iter().map(|s| u([point[0] + s * nu[0], point[1] + s * nu[1]]).abs()).fold(0.0, f64::max);
    if w.iter().all(|v| v.abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::SymmetricConfiguration);
    }
    if w.iter().any(|v| v.signum() != w[0].signum() || *v == 0.0) {
        return Err(Error::SignChange);
    }
    let xs: Vec<f64> = t.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = w.iter().map(|v| v.abs().ln()).collect();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let half = 1.96 * slope_stderr;
    Ok(GrowthFit { slope, intercept, slope_stderr, band: (slope - half, slope + half), t, w })
}

#[allow(clippy::too_many_arguments)]
pub fn growth_probe(
    sol: &SolutionField,
    lambda: f64,
    e: Point,
    point: Point,
    direction: Point,
    t_min: f64,
    t_max: f64,
    n: usize,
) -> Result<GrowthFit> {
    growth_probe_with(|x| sol.evaluate(x), lambda, e, point, direction, t_min, t_max, n)
}
