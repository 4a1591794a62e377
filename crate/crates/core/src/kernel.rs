//! Half-Laplacian kernel: normalization, derivative constants, the pointwise
//! singular integral and the half-space Poisson extension.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::quadrature::{self, GradedRule};
use crate::Result;

/// Scalar field on the plane as seen by the integral operators.
pub trait PlaneField: Sync {
    fn value(&self, x: Point) -> f64;

    /// Parameters `t > 0` where `t ↦ f(x + t e)` fails to be smooth.
    fn breakpoints(&self, _x: Point, _e: Point) -> Vec<f64> {
        Vec::new()
    }

    /// Disk `(center, radius)` outside of which the field is constant up to negligible terms.
    fn support(&self) -> (Point, f64);

    /// Value of the field outside its support.
    fn far_value(&self) -> f64 {
        0.0
    }
}

/// Closure-backed [`PlaneField`].
pub struct FnField<F> {
    pub f: F,
    pub support: (Point, f64),
    pub far_value: f64,
}

impl<F: Fn(Point) -> f64 + Sync> FnField<F> {
    pub fn new(f: F, center: Point, radius: f64) -> Self {
        Self { f, support: (center, radius), far_value: 0.0 }
    }
}

impl<F: Fn(Point) -> f64 + Sync> PlaneField for FnField<F> {
    fn value(&self, x: Point) -> f64 {
        (self.f)(x)
    }

    fn support(&self) -> (Point, f64) {
        self.support
    }

    fn far_value(&self) -> f64 {
        self.far_value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct KernelConstants {
    pub C1: f64,
    pub I0: f64,
    pub phi_inf: f64,
    pub C0: f64,
}

impl KernelConstants {
    pub fn compute() -> Result<Self> {
        let c1 = constant_c1();
        let i0 = constant_i0()?;
        let phi_inf = phi(f64::INFINITY);
        Ok(Self { C1: c1, I0: i0, phi_inf, C0: -c1 * i0 * phi_inf / 4.0 })
    }
}

/// Normalization of `(-Δ)^{1/2}` in the plane.
pub fn constant_c1() -> f64 {
    1.0 / (2.0 * PI)
}

/// `ln z / ((z - 1) √z)`, continuous at `z = 1`.
pub fn i0_integrand(z: f64) -> f64 {
    let d = z - 1.0;
    let ratio = if d.abs() < 1e-8 { 1.0 - d / 2.0 + d * d / 3.0 } else { z.ln() / d };
    ratio / z.sqrt()
}

/// `∫_0^∞ ln z / ((z - 1) √z) dz`.
///
/// With `z = t²` and `t ↦ 1/t` on the upper half this is `8 ∫_0^1 ln t / (t² - 1) dt`.
pub fn constant_i0() -> Result<f64> {
    let g = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let d = t - 1.0;
        if d.abs() < 1e-8 {
            0.5 - 0.25 * d
        } else {
            t.ln() / (d * (t + 1.0))
        }
    };
    let (v, _) = quadrature::adaptive(g, 0.0, 1.0, 1e-12)?;
    Ok(8.0 * v)
}

/// `φ(ξ) = ∫_0^ξ (1 + z²)^{-3/2} dz = ξ / √(1 + ξ²)`.
pub fn phi(xi: f64) -> f64 {
    if xi.is_infinite() {
        return xi.signum();
    }
    xi / (1.0 + xi * xi).sqrt()
}

/// Shape-derivative constant `-C1 I0 φ(∞) / 4`.
pub fn constant_c0() -> Result<f64> {
    Ok(KernelConstants::compute()?.C0)
}

/// Quadrature sizes for [`frac_laplacian_pointwise`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointwiseQuadrature {
    pub n_theta: usize,
    pub n_rho: usize,
    pub gamma: f64,
}

impl Default for PointwiseQuadrature {
    fn default() -> Self {
        Self { n_theta: 64, n_rho: 32, gamma: 2.0 }
    }
}

/// `C1 PV ∫ (f(x) - f(y)) / |x - y|³ dy`, in the symmetric form
/// `C1 ∫_0^π ∫_0^∞ (2f(x) - f(x + ρe) - f(x - ρe)) / ρ² dρ dθ`.
pub fn frac_laplacian_pointwise(f: &dyn PlaneField, x: Point, quad: &PointwiseQuadrature) -> Result<f64> {
    let (c, support) = f.support();
    let cutoff = 10.0 * support.max(crate::geometry::dist(x, c));
    let fx = f.value(x);
    let rule = GradedRule::two_sided(quad.n_rho, quad.gamma);
    // the integrand is smooth at ρ = 0, and clustering there only adds cancellation
    let first = GradedRule::toward_one(quad.n_rho, quad.gamma);
    let h = PI / quad.n_theta as f64;
    let mut total = 0.0;
    for k in 0..quad.n_theta {
        let (s, co) = ((k as f64 + 0.5) * h).sin_cos();
        let e = [co, s];
        let back = [-co, -s];
        let mut breaks: Vec<f64> = f.breakpoints(x, e);
        breaks.extend(f.breakpoints(x, back));
        breaks.extend([0.125, 0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|m| m * support));
        breaks.push(0.0);
        breaks.push(cutoff);
        breaks.retain(|t| *t >= 0.0 && *t <= cutoff);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * cutoff);
        let mut line = 0.0;
        for (i, seg) in breaks.windows(2).enumerate() {
            let r = if i == 0 { &first } else { &rule };
            line += r.integrate(seg[0], seg[1], |t| {
                let fp = f.value([x[0] + t * co, x[1] + t * s]);
                let fm = f.value([x[0] - t * co, x[1] - t * s]);
                (2.0 * fx - fp - fm) / (t * t)
            });
        }
        total += h * (line + 2.0 * (fx - f.far_value()) / cutoff);
    }
    if !total.is_finite() {
        return Err(crate::Error::QuadratureNotConverged { estimate: f64::NAN, target: 0.0 });
    }
    Ok(constant_c1() * total)
}

/// Piecewise-constant field on a rectangular window of the boundary plane.
///
/// Cell `(i, j)` covers `origin + [i, i+1]·hx × [j, j+1]·hy`; the field
/// equals `far_value` outside the window.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneGrid {
    pub origin: Point,
    pub spacing: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub far_value: f64,
}

impl PlaneGrid {
    pub fn from_fn(origin: Point, spacing: [f64; 2], nx: usize, ny: usize, f: impl Fn(Point) -> f64) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let c = [origin[0] + (i as f64 + 0.5) * spacing[0], origin[1] + (j as f64 + 0.5) * spacing[1]];
                values.push(f(c));
            }
        }
        Self { origin, spacing, nx, ny, values, far_value: 0.0 }
    }
}

/// Solid angle of `[0, a] × [0, b]` seen from height `z` above the origin corner, signed by `a b`.
fn corner_solid_angle(a: f64, b: f64, z: f64) -> f64 {
    (a * b / (z * (a * a + b * b + z * z).sqrt())).atan()
}

fn rect_solid_angle(x: Point, lo: Point, hi: Point, z: f64) -> f64 {
    let (x1, x2) = (lo[0] - x[0], hi[0] - x[0]);
    let (y1, y2) = (lo[1] - x[1], hi[1] - x[1]);
    corner_solid_angle(x2, y2, z) - corner_solid_angle(x1, y2, z) - corner_solid_angle(x2, y1, z)
        + corner_solid_angle(x1, y1, z)
}

/// Half-space harmonic extension `(z/2π) ∫ w(t) (|x - t|² + z²)^{-3/2} dt`.
///
/// Each cell is integrated exactly through its solid angle, so the result
/// is harmonic in `(x, z)` up to rounding.
pub fn poisson_extension(w: &PlaneGrid, x: Point, z: f64) -> f64 {
    let [hx, hy] = w.spacing;
    let mut total = 0.0;
    for j in 0..w.ny {
        let y0 = w.origin[1] + j as f64 * hy;
        for i in 0..w.nx {
            let v = w.values[j * w.nx + i];
            if v == 0.0 {
                continue;
            }
            let x0 = w.origin[0] + i as f64 * hx;
            total += v * rect_solid_angle(x, [x0, y0], [x0 + hx, y0 + hy], z);
        }
    }
    if w.far_value != 0.0 {
        let hi = [w.origin[0] + w.nx as f64 * hx, w.origin[1] + w.ny as f64 * hy];
        let window = rect_solid_angle(x, w.origin, hi, z);
        total += w.far_value * (2.0 * PI - window);
    }
    total / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constants_have_closed_values() {
        let k = KernelConstants::compute().unwrap();
        assert_abs_diff_eq!(k.C1, 0.159154943, epsilon = 1e-9);
        assert_abs_diff_eq!(k.I0, PI * PI, epsilon = 1e-8);
        assert_eq!(k.phi_inf, 1.0);
        assert_abs_diff_eq!(k.C0, -PI / 8.0, epsilon = 1e-8);
        assert!(k.C0 < 0.0);
        assert_eq!(k.C0, -k.C1 * k.I0 * k.phi_inf / 4.0);
    }

    #[test]
    fn i0_integrand_is_continuous_at_one() {
        assert_abs_diff_eq!(i0_integrand(1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(i0_integrand(1.0 + 1e-7), i0_integrand(1.0), epsilon = 1e-7);
        assert_abs_diff_eq!(i0_integrand(1.0 - 2e-8), 1.0, epsilon = 1e-7);
    }

    #[test]
    fn i0_truncated_range_plus_tails() {
        // z = e^{∓v} on the two halves of [1e-8, 1e8]
        let half = |sign: f64, lo: f64, hi: f64| {
            quadrature::adaptive(|v: f64| {
                let z = (sign * v).exp();
                i0_integrand(z) * z
            }, lo, hi, 1e-12)
            .unwrap()
            .0
        };
        let l = 8.0 * 10f64.ln();
        let window = half(-1.0, 0.0, l) + half(1.0, 0.0, l);
        let tails = half(-1.0, l, 80.0) + half(1.0, l, 80.0);
        let full = constant_i0().unwrap();
        assert_abs_diff_eq!(window + tails, full, epsilon = 1e-8);
        // the upper tail behaves like 2 (ln Z + 2) / √Z
        let bound = 2.0 * (1e8f64.ln() + 2.0) / 1e4;
        assert!(tails > 0.0 && tails < 2.5 * bound, "{tails} vs {bound}");
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0), 0.0);
        assert_eq!(phi(f64::INFINITY), 1.0);
        assert_abs_diff_eq!(phi(1.0), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn constant_field_has_zero_half_laplacian() {
        let f = FnField { f: |_x: Point| 1.0, support: ([0.0, 0.0], 1.0), far_value: 1.0 };
        let v = frac_laplacian_pointwise(&f, [0.2, 0.1], &PointwiseQuadrature::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn poisson_extension_of_one_is_one() {
        let g = PlaneGrid { origin: [-1.0, -1.0], spacing: [0.1, 0.1], nx: 20, ny: 20, values: vec![1.0; 400], far_value: 1.0 };
        for (x, z) in [([0.0, 0.0], 0.3), ([3.0, -2.0], 1.5), ([0.05, 0.5], 0.01)] {
            assert_abs_diff_eq!(poisson_extension(&g, x, z), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn poisson_extension_is_positive_for_nonnegative_data() {
        let mut g = PlaneGrid::from_fn([-1.0, -1.0], [0.1, 0.1], 20, 20, |_| 0.0);
        g.values[17] = 0.5;
        assert!(poisson_extension(&g, [5.0, 5.0], 0.2) > 0.0);
    }
}
