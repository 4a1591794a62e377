use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{BoundaryCurve, Point};
use crate::{Error, Result};

/// One term `cos·Re(w^k) + sin·Im(w^k)` of a normal-mode field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalMode {
    pub k: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Vector field tabulated on a regular grid, bilinear in between and clamped outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledField {
    pub origin: Point,
    pub spacing: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `values[j * nx + i]` at `origin + (i hx, j hy)`.
    pub values: Vec<[f64; 2]>,
}

impl SampledField {
    pub fn from_fn(origin: Point, spacing: [f64; 2], nx: usize, ny: usize, f: impl Fn(Point) -> Point) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f([origin[0] + i as f64 * spacing[0], origin[1] + j as f64 * spacing[1]]));
            }
        }
        Self { origin, spacing, nx, ny, values }
    }

    fn locate(&self, x: Point) -> (usize, usize, f64, f64) {
        let cell = |v: f64, o: f64, h: f64, n: usize| {
            let u = ((v - o) / h).clamp(0.0, (n - 1) as f64);
            let i = (u.floor() as usize).min(n.saturating_sub(2));
            (i, u - i as f64)
        };
        let (i, fx) = cell(x[0], self.origin[0], self.spacing[0], self.nx);
        let (j, fy) = cell(x[1], self.origin[1], self.spacing[1], self.ny);
        (i, j, fx, fy)
    }

    fn corners(&self, i: usize, j: usize) -> [[f64; 2]; 4] {
        let at = |i: usize, j: usize| self.values[j * self.nx + i];
        [at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)]
    }

    pub fn value(&self, x: Point) -> Point {
        let (i, j, fx, fy) = self.locate(x);
        let c = self.corners(i, j);
        let mut out = [0.0; 2];
        for d in 0..2 {
            out[d] = (1.0 - fx) * (1.0 - fy) * c[0][d]
                + fx * (1.0 - fy) * c[1][d]
                + (1.0 - fx) * fy * c[2][d]
                + fx * fy * c[3][d];
        }
        out
    }

    pub fn divergence(&self, x: Point) -> f64 {
        let (i, j, fx, fy) = self.locate(x);
        let c = self.corners(i, j);
        let dux = ((1.0 - fy) * (c[1][0] - c[0][0]) + fy * (c[3][0] - c[2][0])) / self.spacing[0];
        let dvy = ((1.0 - fx) * (c[2][1] - c[0][1]) + fx * (c[3][1] - c[1][1])) / self.spacing[1];
        dux + dvy
    }
}

/// A vector field `ζ` on the plane together with its flow `φ_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowField {
    /// `ζ(x) = c`.
    Translation { c: Point },
    /// `ζ(x) = rate·x`, so `φ_t(x) = e^{rate·t} x`.
    Dilation { rate: f64 },
    /// `ζ(x) = P(w) w` with `w = (x - center)/radius` and `P = Σ cos·Re(w^k) + sin·Im(w^k)`.
    ///
    /// On the circle `|x - center| = radius` this is `P(θ) n`, i.e. a pure
    /// normal perturbation with Fourier profile `P`.
    NormalModes { center: Point, radius: f64, modes: Vec<NormalMode> },
    Sampled(SampledField),
}

impl FlowField {
    /// The field `ζ(x) = x`.
    pub fn dilation() -> Self {
        Self::Dilation { rate: 1.0 }
    }

    pub fn translation(c: Point) -> Self {
        Self::Translation { c }
    }

    /// Single normal mode `amplitude·cos(kθ)` on the circle of `radius` about `center`.
    pub fn normal_mode(center: Point, radius: f64, k: u32, amplitude: f64) -> Self {
        Self::NormalModes { center, radius, modes: vec![NormalMode { k, cos: amplitude, sin: 0.0 }] }
    }

    pub fn value(&self, x: Point) -> Point {
        match self {
            Self::Translation { c } => *c,
            Self::Dilation { rate } => [rate * x[0], rate * x[1]],
            Self::NormalModes { center, radius, modes } => {
                let w = [(x[0] - center[0]) / radius, (x[1] - center[1]) / radius];
                let p = modes_polynomial(modes, w);
                [p * w[0], p * w[1]]
            }
            Self::Sampled(s) => s.value(x),
        }
    }

    pub fn divergence(&self, x: Point) -> f64 {
        match self {
            Self::Translation { .. } => 0.0,
            Self::Dilation { rate } => 2.0 * rate,
            Self::NormalModes { center, radius, modes } => {
                let w = [(x[0] - center[0]) / radius, (x[1] - center[1]) / radius];
                modes
                    .iter()
                    .map(|m| (m.k as f64 + 2.0) * modes_polynomial(std::slice::from_ref(m), w))
                    .sum::<f64>()
                    / radius
            }
            Self::Sampled(s) => s.divergence(x),
        }
    }

    /// Negated field, whose flow is the inverse flow.
    pub fn reversed(&self) -> Self {
        match self {
            Self::Translation { c } => Self::Translation { c: [-c[0], -c[1]] },
            Self::Dilation { rate } => Self::Dilation { rate: -rate },
            Self::NormalModes { center, radius, modes } => Self::NormalModes {
                center: *center,
                radius: *radius,
                modes: modes.iter().map(|m| NormalMode { k: m.k, cos: -m.cos, sin: -m.sin }).collect(),
            },
            Self::Sampled(s) => Self::Sampled(SampledField {
                values: s.values.iter().map(|v| [-v[0], -v[1]]).collect(),
                ..s.clone()
            }),
        }
    }

    /// Largest difference quotient `|ζ(x) - ζ(y)| / |x - y|` between grid neighbours on a box.
    pub fn lipschitz_estimate(&self, lo: Point, hi: Point, n: usize) -> f64 {
        let h = [(hi[0] - lo[0]) / n as f64, (hi[1] - lo[1]) / n as f64];
        let mut best: f64 = 0.0;
        for j in 0..=n {
            for i in 0..=n {
                let x = [lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1]];
                let z = self.value(x);
                for (dx, dy) in [(h[0], 0.0), (0.0, h[1])] {
                    let y = [x[0] + dx, x[1] + dy];
                    let zy = self.value(y);
                    let q = (z[0] - zy[0]).hypot(z[1] - zy[1]) / dx.hypot(dy);
                    best = best.max(q);
                }
            }
        }
        best
    }

    /// `φ_t(x)` by classical RK4 with `steps` steps.
    pub fn flow_point(&self, x: Point, t: f64, steps: usize) -> Point {
        self.flow_with_jacobian(x, t, steps).0
    }

    /// `φ_t(x)` together with `j(t, x) = exp ∫_0^t div ζ(φ_s(x)) ds`.
    pub fn flow_with_jacobian(&self, x: Point, t: f64, steps: usize) -> (Point, f64) {
        let steps = steps.max(1);
        let h = t / steps as f64;
        let rhs = |y: [f64; 3]| {
            let p = [y[0], y[1]];
            let v = self.value(p);
            [v[0], v[1], self.divergence(p)]
        };
        let mut y = [x[0], x[1], 0.0];
        for _ in 0..steps {
            let k1 = rhs(y);
            let k2 = rhs(axpy(y, 0.5 * h, k1));
            let k3 = rhs(axpy(y, 0.5 * h, k2));
            let k4 = rhs(axpy(y, h, k3));
            for d in 0..3 {
                y[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
            }
        }
        ([y[0], y[1]], y[2].exp())
    }
}

fn axpy(y: [f64; 3], a: f64, k: [f64; 3]) -> [f64; 3] {
    [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]]
}

fn modes_polynomial(modes: &[NormalMode], w: Point) -> f64 {
    let mut total = 0.0;
    for m in modes {
        // w^k as a complex power
        let (mut re, mut im) = (1.0, 0.0);
        for _ in 0..m.k {
            let nr = re * w[0] - im * w[1];
            im = re * w[1] + im * w[0];
            re = nr;
        }
        total += m.cos * re + m.sin * im;
    }
    total
}

/// Result of transporting a curve along a flow.
#[derive(Debug, Clone)]
pub struct FlowTransport {
    pub curve: BoundaryCurve,
    /// RMS radius residual of the Fourier re-fit.
    pub fit_residual: f64,
}

impl BoundaryCurve {
    /// Advances the boundary by `φ_t` and re-fits a radius function of the same order.
    ///
    /// The center is transported with the flow, so translations are exact.
    pub fn flow_transport(&self, field: &FlowField, t: f64, steps: usize) -> Result<FlowTransport> {
        let order = self.order();
        let n = (8 * (2 * order + 1)).max(256);
        let center = field.flow_point(self.center(), t, steps);
        let mut angles = Vec::with_capacity(n);
        let mut radii = Vec::with_capacity(n);
        for i in 0..n {
            let theta = 2.0 * PI * i as f64 / n as f64;
            let q = field.flow_point(self.curve_point(theta), t, steps);
            let v = [q[0] - center[0], q[1] - center[1]];
            angles.push(v[1].atan2(v[0]));
            radii.push(v[0].hypot(v[1]));
        }
        let mut turn = 0.0;
        for i in 0..n {
            let mut d = angles[(i + 1) % n] - angles[i];
            d = (d + PI).rem_euclid(2.0 * PI) - PI;
            if d <= 0.0 {
                return Err(Error::StarShapeLost(format!("ray multiplicity near sample {i}")));
            }
            turn += d;
        }
        if (turn - 2.0 * PI).abs() > 1e-6 {
            return Err(Error::StarShapeLost("boundary does not wind once about the center".into()));
        }
        let (coeffs, fit_residual) = fit_fourier(&angles, &radii, order)?;
        let cos = (0..order).map(|k| coeffs[1 + 2 * k]).collect();
        let sin = (0..order).map(|k| coeffs[2 + 2 * k]).collect();
        let curve = BoundaryCurve::with_samples(center, coeffs[0], cos, sin, self.sample_count())
            .map_err(|e| Error::StarShapeLost(e.to_string()))?;
        Ok(FlowTransport { curve, fit_residual })
    }
}

/// Least-squares Fourier fit `[a0, a1, b1, ...]` of samples `(φ_i, r_i)`; returns RMS residual.
pub(crate) fn fit_fourier(angles: &[f64], values: &[f64], order: usize) -> Result<(Vec<f64>, f64)> {
    let n = angles.len();
    let cols = 2 * order + 1;
    let mut a = DMatrix::zeros(n, cols);
    for (i, &phi) in angles.iter().enumerate() {
        a[(i, 0)] = 1.0;
        for k in 1..=order {
            let (s, c) = (k as f64 * phi).sin_cos();
            a[(i, 2 * k - 1)] = c;
            a[(i, 2 * k)] = s;
        }
    }
    let b = DVector::from_column_slice(values);
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-13)
        .map_err(|e| Error::StarShapeLost(format!("Fourier re-fit failed: {e}")))?;
    let res = &a * &x - &b;
    let rms = (res.norm_squared() / n as f64).sqrt();
    Ok((x.iter().copied().collect(), rms))
}
