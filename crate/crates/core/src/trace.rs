//! Fractional normal derivative `ψ0 = lim u / √r` by fitting the boundary
//! expansion along inward normals.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::solver::SolutionField;
use crate::{Error, Result};

/// Sampling window and fit model for [`extract_psi0`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub n_nodes: usize,
    /// Window bounds as fractions of the domain diameter.
    pub r_min: f64,
    pub r_max: f64,
    pub n_samples: usize,
    /// Number of correction terms after `√r`, taken from `r, r^{3/2}, r²`.
    pub model_order: usize,
    /// Relative RMS fit residual above which a node is flagged.
    pub residual_threshold: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { n_nodes: 128, r_min: 1e-3, r_max: 0.08, n_samples: 12, model_order: 2, residual_threshold: 1e-3 }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 3 || self.n_samples < self.model_order + 2 {
            return Err(Error::InvalidConfig("trace needs at least 3 nodes and more samples than model terms".into()));
        }
        if self.model_order > 3 {
            return Err(Error::InvalidConfig(format!("model order {} exceeds 3", self.model_order)));
        }
        if !(self.r_min > 0.0 && self.r_min < self.r_max) {
            return Err(Error::InvalidConfig(format!("bad trace window [{}, {}]", self.r_min, self.r_max)));
        }
        Ok(())
    }
}

/// `ψ0` at equally spaced arc-length nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceProfile {
    pub length: f64,
    pub s_nodes: Vec<f64>,
    pub points: Vec<Point>,
    pub normals: Vec<Point>,
    pub psi0: Vec<f64>,
    pub fit_residuals: Vec<f64>,
    pub flagged: Vec<bool>,
    /// Absolute window `(r_min, r_max)`.
    pub window: (f64, f64),
}

/// Fit `u(p(s) − r n(s)) ≈ a√r + b r + c r^{3/2} + d r²` at each node; `ψ0 = a`.
pub fn extract_psi0(sol: &SolutionField, cfg: &TraceConfig) -> Result<TraceProfile> {
    cfg.validate()?;
    let curve = sol.curve();
    let diam = curve.diameter();
    let (r_min, r_max) = (cfg.r_min * diam, cfg.r_max * diam);
    let kmax = curve.max_abs_curvature();
    if r_max * kmax >= 1.0 {
        return Err(Error::OutOfBand { r: r_max, limit: 1.0 / kmax });
    }
    let ratio = (r_max / r_min).powf(1.0 / (cfg.n_samples - 1) as f64);
    let radii: Vec<f64> = (0..cfg.n_samples).map(|j| r_min * ratio.powi(j as i32)).collect();
    let n_terms = 1 + cfg.model_order;
    // columns in the scaled variable r / r_max keep the design well conditioned
    let design = DMatrix::from_fn(radii.len(), n_terms, |i, k| (radii[i] / r_max).powf(0.5 * (k + 1) as f64));
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let cond = sv.max() / sv.min();
    if !(cond < 1e12) {
        return Err(Error::IllConditionedFit(cond));
    }

    let length = curve.length();
    let nodes: Vec<(f64, Point, Point, f64, f64)> = (0..cfg.n_nodes)
        .into_par_iter()
        .map(|k| {
            let s = length * k as f64 / cfg.n_nodes as f64;
            let p = curve.point_at(s);
            let n = curve.normal_at(s);
            let samples = DVector::from_iterator(
                radii.len(),
                radii.iter().map(|r| sol.evaluate([p[0] - r * n[0], p[1] - r * n[1]])),
            );
            let coef = svd.solve(&samples, 1e-14).expect("svd carries both factors");
            let resid = (&design * &coef - &samples).norm();
            let scale = samples.norm();
            let rel = if scale > 0.0 { resid / scale } else { 0.0 };
            (s, p, n, coef[0] / r_max.sqrt(), rel)
        })
        .collect();

    let mut profile = TraceProfile {
        length,
        s_nodes: Vec::with_capacity(nodes.len()),
        points: Vec::with_capacity(nodes.len()),
        normals: Vec::with_capacity(nodes.len()),
        psi0: Vec::with_capacity(nodes.len()),
        fit_residuals: Vec::with_capacity(nodes.len()),
        flagged: Vec::with_capacity(nodes.len()),
        window: (r_min, r_max),
    };
    for (s, p, n, a, rel) in nodes {
        if !a.is_finite() {
            return Err(Error::DegenerateProfile(format!("non-finite fit at s = {s}")));
        }
        profile.s_nodes.push(s);
        profile.points.push(p);
        profile.normals.push(n);
        profile.psi0.push(a);
        profile.fit_residuals.push(rel);
        profile.flagged.push(rel > cfg.residual_threshold);
    }
    Ok(profile)
}

impl TraceProfile {
    pub fn len(&self) -> usize {
        self.psi0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi0.is_empty()
    }

    /// Node spacing in arc length.
    pub fn ds(&self) -> f64 {
        self.length / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.psi0.iter().sum::<f64>() / self.len() as f64
    }

    /// Periodic-linear interpolation in arc length.
    pub fn interpolate(&self, s: f64) -> f64 {
        let h = self.ds();
        let u = (s.rem_euclid(self.length)) / h;
        let k = (u.floor() as usize).min(self.len() - 1);
        let frac = u - k as f64;
        let next = self.psi0[(k + 1) % self.len()];
        (1.0 - frac) * self.psi0[k] + frac * next
    }

    /// Trapezoid rule for `∫ g(node) ds` on the periodic node set.
    pub fn integrate(&self, g: impl Fn(usize) -> f64) -> f64 {
        self.ds() * (0..self.len()).map(g).sum::<f64>()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "s,psi0,residual")?;
        for k in 0..self.len() {
            writeln!(w, "{},{},{}", self.s_nodes[k], self.psi0[k], self.fit_residuals[k])?;
        }
        Ok(())
    }
}

/// `std(ψ0) / mean(ψ0)`: zero exactly when the profile is constant.
pub fn serrin_residual(profile: &TraceProfile) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::DegenerateProfile("empty profile".into()));
    }
    let mean = profile.mean();
    if !(mean > 0.0) {
        return Err(Error::DegenerateProfile(format!("mean trace {mean} is not positive")));
    }
    let var = profile.psi0.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / profile.len() as f64;
    Ok(var.sqrt() / mean)
}
