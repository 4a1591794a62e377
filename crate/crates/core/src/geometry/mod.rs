//! Star-shaped planar domains bounded by a truncated Fourier radius function.
//!
//! The boundary is `x(θ) = c + ρ(θ)(cos θ, sin θ)` with
//! `ρ(θ) = a0 + Σ a_k cos kθ + b_k sin kθ`. It is traversed counterclockwise,
//! `n` is the outward normal and tubular coordinates `(s, r)` use the
//! convention `x = p(s) - r n(s)` with `r > 0` inside.

mod flow;

pub use flow::{FlowField, FlowTransport, NormalMode, SampledField};
pub(crate) use flow::fit_fourier;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point = [f64; 2];

const TWO_PI: f64 = 2.0 * PI;
const PROJECTION_MAX_ITERS: usize = 50;
const PROJECTION_STEP_TOL: f64 = 1e-12;

/// On-disk form of a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveJson {
    pub center: [f64; 2],
    pub a0: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

/// Point in tubular coordinates: arc-length `s` and signed distance `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubularPoint {
    pub s: f64,
    pub r: f64,
}

/// Polar data of one boundary parameter value.
#[derive(Debug, Clone, Copy)]
pub struct RadiusJet {
    pub rho: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    center: Point,
    a0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    sample_count: usize,
    points: Vec<Point>,
    arc: Vec<f64>,
    length: f64,
    max_abs_curvature: f64,
    diameter: f64,
}

impl Serialize for BoundaryCurve {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundaryCurve {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = CurveJson::deserialize(d)?;
        BoundaryCurve::from_json(&doc).map_err(serde::de::Error::custom)
    }
}

impl BoundaryCurve {
    /// Builds a curve; `cos` and `sin` are padded to a common order.
    pub fn new(center: Point, a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        let order = cos.len().max(sin.len());
        let samples = (64 * (order + 1)).max(512);
        Self::with_samples(center, a0, cos, sin, samples)
    }

    pub fn with_samples(
        center: Point,
        a0: f64,
        mut cos: Vec<f64>,
        mut sin: Vec<f64>,
        sample_count: usize,
    ) -> Result<Self> {
        let order = cos.len().max(sin.len());
        cos.resize(order, 0.0);
        sin.resize(order, 0.0);
        if !center.iter().chain([a0].iter()).chain(&cos).chain(&sin).all(|v| v.is_finite()) {
            return Err(Error::InvalidCurve("non-finite coefficient".into()));
        }
        if sample_count < 16 {
            return Err(Error::InvalidCurve("sample_count must be at least 16".into()));
        }
        let mut curve = Self {
            center,
            a0,
            cos,
            sin,
            sample_count,
            points: Vec::new(),
            arc: Vec::new(),
            length: 0.0,
            max_abs_curvature: 0.0,
            diameter: 0.0,
        };
        curve.build_tables()?;
        Ok(curve)
    }

    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        Self::new(center, radius, Vec::new(), Vec::new())
    }

    /// Ellipse with semi-axis `a` along x and `b` along y, as a Fourier curve of the given order.
    pub fn ellipse(center: Point, a: f64, b: f64, order: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidCurve("ellipse semi-axes must be positive".into()));
        }
        Self::from_radius_fn(center, order, |t| {
            a * b / ((b * t.cos()).powi(2) + (a * t.sin()).powi(2)).sqrt()
        })
    }

    /// Unit-area ellipse with the given aspect ratio (major axis along x).
    pub fn unit_area_ellipse(aspect: f64, order: usize) -> Result<Self> {
        let a = (aspect / PI).sqrt();
        let b = 1.0 / (aspect * PI).sqrt();
        Self::ellipse([0.0, 0.0], a, b, order)
    }

    /// Projects a radius function onto Fourier modes `0..=order` (trapezoid DFT).
    pub fn from_radius_fn(center: Point, order: usize, rho: impl Fn(f64) -> f64) -> Result<Self> {
        let m = (16 * (order + 1)).max(4096);
        let values: Vec<f64> = (0..m).map(|i| rho(TWO_PI * i as f64 / m as f64)).collect();
        let (a0, cos, sin) = dft_coefficients(&values, order);
        Self::new(center, a0, cos, sin)
    }

    pub fn from_json(doc: &CurveJson) -> Result<Self> {
        Self::new(doc.center, doc.a0, doc.cos.clone(), doc.sin.clone())
    }

    pub fn to_json(&self) -> CurveJson {
        CurveJson {
            center: self.center,
            a0: self.a0,
            cos: self.cos.clone(),
            sin: self.sin.clone(),
        }
    }

    fn build_tables(&mut self) -> Result<()> {
        let m = self.sample_count;
        let h = TWO_PI / m as f64;
        // dense positivity check
        let dense = 8 * m;
        for i in 0..dense {
            let rho = self.radius(TWO_PI * i as f64 / dense as f64);
            if !(rho > 0.0) {
                return Err(Error::InvalidCurve(format!(
                    "radius function is not positive (rho = {rho:.3e})"
                )));
            }
        }
        self.points = (0..m).map(|i| self.curve_point(i as f64 * h)).collect();
        self.arc = Vec::with_capacity(m + 1);
        self.arc.push(0.0);
        let mut acc = 0.0;
        for i in 0..m {
            acc += self.speed_integral(i as f64 * h, (i + 1) as f64 * h);
            self.arc.push(acc);
        }
        self.length = acc;
        self.max_abs_curvature = (0..m)
            .map(|i| self.curvature_at_theta(i as f64 * h).abs())
            .fold(0.0, f64::max);
        let mut diam: f64 = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                diam = diam.max(dist(*p, *q));
            }
        }
        self.diameter = diam;
        Ok(())
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    /// Fourier order `K`.
    pub fn order(&self) -> usize {
        self.cos.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Total length `L`.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.max_abs_curvature
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Axis-aligned box of the cached samples.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Cached boundary samples at `θ_i = 2πi/M`.
    pub fn samples(&self) -> &[Point] {
        &self.points
    }

    /// Coefficients as one vector `[a0, a1, b1, a2, b2, ...]`.
    pub fn coefficient_vector(&self) -> Vec<f64> {
        let mut v = vec![self.a0];
        for (a, b) in self.cos.iter().zip(&self.sin) {
            v.push(*a);
            v.push(*b);
        }
        v
    }

    /// Same shape with a new center.
    pub fn translated(&self, shift: Point) -> Result<Self> {
        Self::with_samples(
            [self.center[0] + shift[0], self.center[1] + shift[1]],
            self.a0,
            self.cos.clone(),
            self.sin.clone(),
            self.sample_count,
        )
    }

    /// Scales the radius function by `factor` about the center.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::with_samples(
            self.center,
            self.a0 * factor,
            self.cos.iter().map(|c| c * factor).collect(),
            self.sin.iter().map(|c| c * factor).collect(),
            self.sample_count,
        )
    }

    /// Dilation `x ↦ factor·x` about the origin (moves the center as well).
    pub fn dilated(&self, factor: f64) -> Result<Self> {
        Self::with_samples(
            [self.center[0] * factor, self.center[1] * factor],
            self.a0 * factor,
            self.cos.iter().map(|c| c * factor).collect(),
            self.sin.iter().map(|c| c * factor).collect(),
            self.sample_count,
        )
    }

    /// Rotates the shape by `angle` about its center.
    pub fn rotated(&self, angle: f64) -> Result<Self> {
        let mut cos = Vec::with_capacity(self.order());
        let mut sin = Vec::with_capacity(self.order());
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            // ρ_new(θ) = ρ(θ - angle)
            let (s, c) = ((k + 1) as f64 * angle).sin_cos();
            cos.push(a * c - b * s);
            sin.push(a * s + b * c);
        }
        Self::with_samples(self.center, self.a0, cos, sin, self.sample_count)
    }

    pub fn radius(&self, theta: f64) -> f64 {
        let (c1, s1) = (theta.cos(), theta.sin());
        self.radius_from_unit(c1, s1)
    }

    /// `ρ` at the direction `(cos θ, sin θ)` without trigonometric calls.
    #[inline]
    pub fn radius_from_unit(&self, c1: f64, s1: f64) -> f64 {
        let mut rho = self.a0;
        let (mut ck, mut sk) = (1.0, 0.0);
        for (a, b) in self.cos.iter().zip(&self.sin) {
            let cn = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = cn;
            rho += a * ck + b * sk;
        }
        rho
    }

    pub fn radius_jet(&self, theta: f64) -> RadiusJet {
        let (c1, s1) = (theta.cos(), theta.sin());
        let mut jet = RadiusJet { rho: self.a0, d1: 0.0, d2: 0.0 };
        let (mut ck, mut sk) = (1.0, 0.0);
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kf = (k + 1) as f64;
            let cn = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = cn;
            jet.rho += a * ck + b * sk;
            jet.d1 += kf * (b * ck - a * sk);
            jet.d2 -= kf * kf * (a * ck + b * sk);
        }
        jet
    }

    /// `c + ρ(θ)(cos θ, sin θ)`.
    pub fn curve_point(&self, theta: f64) -> Point {
        let rho = self.radius(theta);
        [self.center[0] + rho * theta.cos(), self.center[1] + rho * theta.sin()]
    }

    /// First and second θ-derivatives of the boundary point.
    pub fn derivatives(&self, theta: f64) -> (Point, Point) {
        let j = self.radius_jet(theta);
        let (s, c) = theta.sin_cos();
        let d1 = [j.d1 * c - j.rho * s, j.d1 * s + j.rho * c];
        let d2 = [
            (j.d2 - j.rho) * c - 2.0 * j.d1 * s,
            (j.d2 - j.rho) * s + 2.0 * j.d1 * c,
        ];
        (d1, d2)
    }

    pub fn speed(&self, theta: f64) -> f64 {
        let j = self.radius_jet(theta);
        j.rho.hypot(j.d1)
    }

    pub fn tangent_at_theta(&self, theta: f64) -> Point {
        let (d1, _) = self.derivatives(theta);
        let n = d1[0].hypot(d1[1]);
        [d1[0] / n, d1[1] / n]
    }

    /// Outward unit normal.
    pub fn normal_at_theta(&self, theta: f64) -> Point {
        let t = self.tangent_at_theta(theta);
        [t[1], -t[0]]
    }

    /// Signed curvature, `1/R` on a counterclockwise circle.
    pub fn curvature_at_theta(&self, theta: f64) -> f64 {
        let j = self.radius_jet(theta);
        let q = j.rho * j.rho + j.d1 * j.d1;
        (j.rho * j.rho + 2.0 * j.d1 * j.d1 - j.rho * j.d2) / (q * q.sqrt())
    }

    fn speed_integral(&self, t0: f64, t1: f64) -> f64 {
        // 5-point Gauss–Legendre
        const X: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.236_926_885_056_189_1,
            0.478_628_670_499_366_5,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
        ];
        let half = 0.5 * (t1 - t0);
        let mid = 0.5 * (t1 + t0);
        X.iter().zip(W).map(|(x, w)| w * self.speed(mid + half * x)).sum::<f64>() * half
    }

    /// Arc-length of the boundary point with parameter `θ` (origin at `θ = 0`).
    pub fn arclength_at_theta(&self, theta: f64) -> f64 {
        let h = TWO_PI / self.sample_count as f64;
        let t = theta.rem_euclid(TWO_PI);
        let i = ((t / h) as usize).min(self.sample_count - 1);
        self.arc[i] + self.speed_integral(i as f64 * h, t)
    }

    /// Inverse of [`Self::arclength_at_theta`]; `s` is taken modulo `L`.
    pub fn theta_at_arclength(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.length);
        let h = TWO_PI / self.sample_count as f64;
        let i = match self.arc.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => i.min(self.sample_count - 1),
            Err(i) => i.saturating_sub(1).min(self.sample_count - 1),
        };
        let frac = (s - self.arc[i]) / (self.arc[i + 1] - self.arc[i]);
        let mut theta = (i as f64 + frac) * h;
        for _ in 0..8 {
            let f = self.arclength_at_theta(theta) - s;
            let step = f / self.speed(theta);
            theta -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        theta.clamp(0.0, TWO_PI)
    }

    /// `p(s)`.
    pub fn point_at(&self, s: f64) -> Point {
        self.curve_point(self.theta_at_arclength(s))
    }

    pub fn normal_at(&self, s: f64) -> Point {
        self.normal_at_theta(self.theta_at_arclength(s))
    }

    pub fn tangent_at(&self, s: f64) -> Point {
        self.tangent_at_theta(self.theta_at_arclength(s))
    }

    /// Signed curvature at arc-length `s`.
    pub fn curvature(&self, s: f64) -> f64 {
        self.curvature_at_theta(self.theta_at_arclength(s))
    }

    /// `p(s) - r n(s)`.
    pub fn tubular_to_point(&self, tp: TubularPoint) -> Point {
        let theta = self.theta_at_arclength(tp.s);
        let p = self.curve_point(theta);
        let n = self.normal_at_theta(theta);
        [p[0] - tp.r * n[0], p[1] - tp.r * n[1]]
    }

    /// Area element of `(s, r) ↦ p(s) − r n(s)`.
    ///
    /// With `r > 0` inside and `κ > 0` on convex arcs this is `1 − κ(s) r`.
    pub fn tubular_jacobian(&self, s: f64, r: f64) -> Result<f64> {
        let kappa = self.curvature(s);
        if (kappa * r).abs() >= 1.0 {
            return Err(Error::OutOfBand { r, limit: 1.0 / kappa.abs() });
        }
        Ok(1.0 - kappa * r)
    }

    /// Normal projection onto the boundary.
    pub fn signed_distance(&self, x: Point) -> Result<TubularPoint> {
        let ambiguous = |reason: String| Error::AmbiguousProjection { x: x[0], y: x[1], reason };
        let m = self.sample_count;
        let d2: Vec<f64> = self
            .points
            .iter()
            .map(|p| (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2))
            .collect();
        let best = (0..m).min_by(|&a, &b| d2[a].total_cmp(&d2[b])).unwrap();
        let h = TWO_PI / m as f64;
        let mut theta = best as f64 * h;
        let mut converged = false;
        for _ in 0..PROJECTION_MAX_ITERS {
            let p = self.curve_point(theta);
            let (d1, dd) = self.derivatives(theta);
            let diff = [p[0] - x[0], p[1] - x[1]];
            let g = diff[0] * d1[0] + diff[1] * d1[1];
            let gp = d1[0] * d1[0] + d1[1] * d1[1] + diff[0] * dd[0] + diff[1] * dd[1];
            if !(gp > 0.0) {
                break;
            }
            let step = (g / gp).clamp(-4.0 * h, 4.0 * h);
            theta -= step;
            if step.abs() < PROJECTION_STEP_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(ambiguous("Newton projection did not converge".into()));
        }
        let theta = theta.rem_euclid(TWO_PI);
        let p = self.curve_point(theta);
        let n = self.normal_at_theta(theta);
        let r = (p[0] - x[0]) * n[0] + (p[1] - x[1]) * n[1];
        if r.abs() * self.max_abs_curvature >= 1.0 - 1e-12 {
            return Err(ambiguous(format!(
                "|r| = {:.6} exceeds the tubular band 1/max|κ| = {:.6}",
                r.abs(),
                1.0 / self.max_abs_curvature
            )));
        }
        // a second, well separated local minimum at the same distance
        let dmin = d2[best].sqrt();
        let sep = (m / 8).max(2);
        for i in 0..m {
            let gap = (i as isize - best as isize).unsigned_abs();
            let gap = gap.min(m - gap);
            if gap < sep {
                continue;
            }
            let (prev, next) = (d2[(i + m - 1) % m], d2[(i + 1) % m]);
            if d2[i] <= prev && d2[i] <= next && d2[i].sqrt() - dmin < 1e-9 * self.diameter {
                return Err(ambiguous("several boundary points are nearest".into()));
            }
        }
        Ok(TubularPoint { s: self.arclength_at_theta(theta), r })
    }

    /// Whether `x` lies strictly inside the domain.
    pub fn contains(&self, x: Point) -> bool {
        self.pullback(x).0 < 1.0
    }

    /// Radial pullback `ξ = (x - c)/ρ(θ(x))`, returned as `(|ξ|, cos θ, sin θ)`.
    #[inline]
    pub fn pullback(&self, x: Point) -> (f64, f64, f64) {
        let v = [x[0] - self.center[0], x[1] - self.center[1]];
        let r = v[0].hypot(v[1]);
        if r == 0.0 {
            return (0.0, 1.0, 0.0);
        }
        let (c, s) = (v[0] / r, v[1] / r);
        (r / self.radius_from_unit(c, s), c, s)
    }

    /// Signed distances `t` at which the line `x + t e` meets the boundary, ascending.
    pub fn line_crossings(&self, x: Point, e: Point) -> Vec<f64> {
        let m = self.sample_count;
        let g = |p: Point| (p[0] - x[0]) * e[1] - (p[1] - x[1]) * e[0];
        let h = TWO_PI / m as f64;
        let mut out = Vec::new();
        let mut g_prev = g(self.points[0]);
        for i in 0..m {
            let j = (i + 1) % m;
            let g_next = g(self.points[j]);
            if (g_prev < 0.0) != (g_next < 0.0) {
                let phi = self.refine_crossing(x, e, i as f64 * h, (i + 1) as f64 * h, g_prev);
                let p = self.curve_point(phi);
                out.push((p[0] - x[0]) * e[0] + (p[1] - x[1]) * e[1]);
            }
            g_prev = g_next;
        }
        out.sort_by(f64::total_cmp);
        out
    }

    fn refine_crossing(&self, x: Point, e: Point, mut lo: f64, mut hi: f64, g_lo: f64) -> f64 {
        let g = |phi: f64| {
            let p = self.curve_point(phi);
            (p[0] - x[0]) * e[1] - (p[1] - x[1]) * e[0]
        };
        let lo_neg = g_lo < 0.0;
        let mut phi = 0.5 * (lo + hi);
        for _ in 0..60 {
            let val = g(phi);
            if val == 0.0 {
                return phi;
            }
            if (val < 0.0) == lo_neg {
                lo = phi;
            } else {
                hi = phi;
            }
            let (d1, _) = self.derivatives(phi);
            let dg = d1[0] * e[1] - d1[1] * e[0];
            if dg != 0.0 && (val / dg).abs() < 1e-15 {
                return phi;
            }
            let newton = phi - val / dg;
            phi = if dg != 0.0 && newton >= lo && newton <= hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 {
                break;
            }
        }
        phi
    }

    /// Boundary crossings of the ray from `x` in direction `e`, nearest first.
    pub fn ray_crossings(&self, x: Point, e: Point) -> Vec<f64> {
        let mut v = self.line_crossings(x, e);
        v.retain(|&t| t > 0.0);
        v
    }

    /// Distance from an interior point to the first boundary crossing along angle `θ`.
    pub fn ray_distance(&self, x: Point, theta: f64) -> Result<f64> {
        let no_hit = Error::NoIntersection { x: x[0], y: x[1], theta };
        if !self.contains(x) {
            return Err(no_hit);
        }
        self.ray_crossings(x, [theta.cos(), theta.sin()])
            .first()
            .copied()
            .ok_or(no_hit)
    }

    /// Area enclosed by the curve: trapezoid rule of `½∮(x dy − y dx)` on the sample grid.
    pub fn area(&self) -> f64 {
        let m = self.sample_count;
        let h = TWO_PI / m as f64;
        (0..m)
            .map(|i| {
                let t = i as f64 * h;
                let p = self.curve_point(t);
                let (d, _) = self.derivatives(t);
                p[0] * d[1] - p[1] * d[0]
            })
            .sum::<f64>()
            * 0.5
            * h
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point {
        let m = self.sample_count;
        let h = TWO_PI / m as f64;
        let (mut mx, mut my) = (0.0, 0.0);
        for i in 0..m {
            let t = i as f64 * h;
            let r3 = self.radius(t).powi(3) / 3.0;
            mx += r3 * t.cos();
            my += r3 * t.sin();
        }
        let a = self.area();
        [self.center[0] + mx * h / a, self.center[1] + my * h / a]
    }
}

/// Trapezoid DFT of uniformly sampled periodic values to Fourier order `order`.
pub fn dft_coefficients(values: &[f64], order: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let m = values.len();
    let a0 = values.iter().sum::<f64>() / m as f64;
    let mut cos = vec![0.0; order];
    let mut sin = vec![0.0; order];
    for k in 1..=order {
        let (mut sc, mut ss) = (0.0, 0.0);
        for (i, v) in values.iter().enumerate() {
            let t = TWO_PI * ((k * i) % m) as f64 / m as f64;
            sc += v * t.cos();
            ss += v * t.sin();
        }
        cos[k - 1] = 2.0 * sc / m as f64;
        sin[k - 1] = 2.0 * ss / m as f64;
    }
    (a0, cos, sin)
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
