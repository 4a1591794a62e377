//! Galerkin system for the half-Laplacian energy.
//!
//! The quadratic form is split into an interior double integral over
//! `Ω × Ω` and a killing term `C1 ∫_Ω u² K_ext` carrying the exterior
//! of the domain. Both are written as a sum of squares `‖D c‖²`, so the
//! assembled matrix is `DᵀD`: symmetric and positive semidefinite by
//! construction.

mod basis;

pub use basis::{BasisLabel, WeightedBasis};

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryCurve, Point};
use crate::kernel::constant_c1;
use crate::quadrature::GradedRule;
use crate::{Error, Result};

/// Right-hand side `f` of the Dirichlet problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    Constant { value: f64 },
    /// `Σ c x^i y^j` over `[i, j, c]` triples.
    Polynomial { terms: Vec<(u32, u32, f64)> },
}

impl Default for Source {
    fn default() -> Self {
        Self::Constant { value: 1.0 }
    }
}

impl Source {
    pub fn value(&self, x: Point) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Polynomial { terms } => {
                terms.iter().map(|&(i, j, c)| c * x[0].powi(i as i32) * x[1].powi(j as i32)).sum()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub n_outer_theta: usize,
    pub n_outer_rho: usize,
    pub n_inner_theta: usize,
    pub n_inner_rho: usize,
    pub gamma: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { n_outer_theta: 64, n_outer_rho: 32, n_inner_theta: 32, n_inner_rho: 24, gamma: 2.0 }
    }
}

impl QuadratureConfig {
    /// Named presets: `coarse`, `default`, `fine` (all sizes doubled).
    pub fn preset(name: &str) -> Result<Self> {
        let d = Self::default();
        match name {
            "default" => Ok(d),
            "coarse" => Ok(Self { n_outer_theta: 32, n_outer_rho: 16, n_inner_theta: 16, n_inner_rho: 12, ..d }),
            "fine" => Ok(d.doubled()),
            other => Err(Error::InvalidConfig(format!("unknown quadrature preset '{other}'"))),
        }
    }

    pub fn doubled(&self) -> Self {
        Self {
            n_outer_theta: 2 * self.n_outer_theta,
            n_outer_rho: 2 * self.n_outer_rho,
            n_inner_theta: 2 * self.n_inner_theta,
            n_inner_rho: 2 * self.n_inner_rho,
            gamma: self.gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [self.n_outer_theta, self.n_outer_rho, self.n_inner_theta, self.n_inner_rho];
        if counts.iter().any(|&n| n < 4) {
            return Err(Error::InvalidConfig(format!("quadrature counts must be at least 4: {counts:?}")));
        }
        if self.n_inner_theta % 2 != 0 {
            return Err(Error::InvalidConfig("n_inner_theta must be even".into()));
        }
        if !(1.0..=4.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("grading exponent {} outside [1, 4]", self.gamma)));
        }
        Ok(())
    }
}

/// Outer quadrature node: point, pullback coordinates and area weight.
#[derive(Debug, Clone, Copy)]
pub struct OuterNode {
    pub x: Point,
    pub xi: Point,
    pub weight: f64,
}

/// Outer polar grid over `Ω`, graded toward the boundary. Ring `i` holds
/// `n_outer_rho` nodes on the pullback ray at `θ_i = 2πi/n_outer_theta`.
pub fn outer_nodes(curve: &BoundaryCurve, quad: &QuadratureConfig) -> Vec<OuterNode> {
    let rule = GradedRule::toward_one(quad.n_outer_rho, quad.gamma);
    let c = curve.center();
    let h = 2.0 * PI / quad.n_outer_theta as f64;
    let mut out = Vec::with_capacity(quad.n_outer_theta * quad.n_outer_rho);
    for i in 0..quad.n_outer_theta {
        let (s, co) = (i as f64 * h).sin_cos();
        let rho = curve.radius_from_unit(co, s);
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            out.push(OuterNode {
                x: [c[0] + t * rho * co, c[1] + t * rho * s],
                xi: [t * co, t * s],
                weight: h * w * t * rho * rho,
            });
        }
    }
    out
}

/// Crossings of the full line through `x` along `e`, split into the ray
/// parameters in the `+e` and `-e` directions (both positive, ascending).
fn split_line(curve: &BoundaryCurve, x: Point, e: Point) -> (Vec<f64>, Vec<f64>) {
    let all = curve.line_crossings(x, e);
    let fwd: Vec<f64> = all.iter().copied().filter(|&t| t > 0.0).collect();
    let mut back: Vec<f64> = all.iter().filter(|&&t| t < 0.0).map(|t| -t).collect();
    back.sort_by(f64::total_cmp);
    (fwd, back)
}

/// `∫ ρ^{-2} dρ` over the exterior parts of one ray with crossings `t`.
fn ray_exterior(t: &[f64]) -> f64 {
    let mut total = 0.0;
    for k in (0..t.len()).step_by(2) {
        total += 1.0 / t[k] - t.get(k + 1).map_or(0.0, |b| 1.0 / b);
    }
    total
}

/// `K_ext(x) = ∫_{Ω^c} |x - y|^{-3} dy` by the trapezoid rule over ray directions.
///
/// On a convex domain this is `∫ dθ / R(x, θ)`; rays that leave and re-enter
/// contribute each exterior piece separately.
pub fn exterior_kernel(curve: &BoundaryCurve, x: Point, n_theta: usize) -> Result<f64> {
    if !curve.contains(x) {
        return Err(Error::NoIntersection { x: x[0], y: x[1], theta: f64::NAN });
    }
    let n_lines = n_theta.div_ceil(2).max(1);
    let h = PI / n_lines as f64;
    let mut total = 0.0;
    for k in 0..n_lines {
        let (s, c) = ((k as f64 + 0.5) * h).sin_cos();
        let (fwd, back) = split_line(curve, x, [c, s]);
        if fwd.is_empty() || back.is_empty() {
            return Err(Error::NoIntersection { x: x[0], y: x[1], theta: (k as f64 + 0.5) * h });
        }
        total += h * (ray_exterior(&fwd) + ray_exterior(&back));
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssemblyDiagnostics {
    /// Relative Frobenius norm of `A - Aᵀ` before symmetrization.
    pub symmetry_defect: f64,
    pub outer_nodes: usize,
    pub rows: usize,
    /// Largest outer-node value of `K_ext` times distance-like scale `(1 - |ξ|)ρ`.
    pub max_scaled_exterior: f64,
}

#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub basis: WeightedBasis,
    /// Row-major `N × N`.
    pub stiffness: Vec<f64>,
    pub load: Vec<f64>,
    pub diagnostics: AssemblyDiagnostics,
}

impl GalerkinSystem {
    pub fn dim(&self) -> usize {
        self.load.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.stiffness[i * self.dim() + j]
    }

    /// Writes `"FSHA"`, `u32` dimension, two reserved `u32` zeros, then `A` row-major and `b`, little-endian.
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + 8 * (self.stiffness.len() + self.load.len()));
        buf.extend_from_slice(b"FSHA");
        buf.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        for v in self.stiffness.iter().chain(&self.load) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn read_dump(path: &Path) -> Result<(usize, Vec<f64>, Vec<f64>)> {
        let bytes = std::fs::read(path)?;
        if bytes.len() < 16 || &bytes[..4] != b"FSHA" {
            return Err(Error::InvalidConfig("not an FSHA dump".into()));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let expect = 16 + 8 * (n * n + n);
        if bytes.len() != expect {
            return Err(Error::InvalidConfig(format!("dump size {} != {expect}", bytes.len())));
        }
        let vals: Vec<f64> = bytes[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok((n, vals[..n * n].to_vec(), vals[n * n..].to_vec()))
    }
}

/// Per-ring partial sums.
struct RingSum {
    a: Vec<f64>,
    b: Vec<f64>,
    rows: usize,
    max_scaled_exterior: f64,
}

/// Assembles `A` and `b` for the source `f` on the basis' curve.
///
/// Work is split into one fixed chunk per outer ring; chunks are reduced in
/// ring order, so the result does not depend on the number of threads.
pub fn assemble(basis: &WeightedBasis, f: &Source, quad: &QuadratureConfig) -> Result<GalerkinSystem> {
    quad.validate()?;
    let curve = basis.curve();
    let n = basis.len();
    let nodes = outer_nodes(curve, quad);
    let chord_rule = GradedRule::two_sided(2 * quad.n_inner_rho, quad.gamma);
    let inner_rule = GradedRule::two_sided(quad.n_inner_rho, quad.gamma);
    let c1 = constant_c1();
    let n_lines = quad.n_inner_theta / 2;
    let h_dir = PI / n_lines as f64;

    let rings: Vec<Result<RingSum>> = nodes
        .par_chunks(quad.n_outer_rho)
        .map(|ring| {
            let mut a = vec![0.0; n * n];
            let mut b = vec![0.0; n];
            let mut rows: Vec<f64> = Vec::new();
            let mut phi_x = vec![0.0; n];
            let mut phi_y = vec![0.0; n];
            let mut row_count = 0usize;
            let mut max_scaled = 0.0f64;
            for node in ring {
                basis.eval_pullback(node.xi, &mut phi_x);
                let fx = f.value(node.x);
                for (bi, p) in b.iter_mut().zip(&phi_x) {
                    *bi += node.weight * fx * p;
                }
                rows.clear();
                let polar = node.xi[1].atan2(node.xi[0]);
                let mut k_ext = 0.0;
                for l in 0..n_lines {
                    let (s, co) = ((l as f64 + 0.5) * h_dir).sin_cos();
                    let (fwd, back) = split_line(curve, node.x, [co, s]);
                    if fwd.is_empty() || back.is_empty() {
                        return Err(Error::AssemblyFailed(format!(
                            "ray from ({:.6}, {:.6}) found no boundary crossing",
                            node.x[0], node.x[1]
                        )));
                    }
                    let e = [co, s];
                    let mut push = |lo: f64, hi: f64, rule: &GradedRule, rows: &mut Vec<f64>| {
                        let len = hi - lo;
                        for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
                            let rho = lo + len * u;
                            if rho == 0.0 {
                                continue;
                            }
                            let y = [node.x[0] + rho * e[0], node.x[1] + rho * e[1]];
                            basis.eval(y, &mut phi_y);
                            let scale = (0.5 * c1 * node.weight * h_dir * w * len).sqrt() / rho.abs();
                            rows.extend(phi_x.iter().zip(&phi_y).map(|(p, q)| scale * (p - q)));
                        }
                    };
                    // the chord through x, then the remaining interior pieces on each side
                    push(-back[0], fwd[0], &chord_rule, &mut rows);
                    for (t, sign) in [(&fwd, 1.0), (&back, -1.0)] {
                        k_ext += h_dir * ray_exterior(t);
                        for piece in t[1..].chunks(2) {
                            if let [a, b] = *piece {
                                let (lo, hi) = if sign > 0.0 { (a, b) } else { (-b, -a) };
                                push(lo, hi, &inner_rule, &mut rows);
                            }
                        }
                    }
                }
                let scale = (c1 * node.weight * k_ext).sqrt();
                rows.extend(phi_x.iter().map(|p| scale * p));
                let rho_b = curve.radius_from_unit(polar.cos(), polar.sin());
                let xi_norm = node.xi[0].hypot(node.xi[1]);
                max_scaled = max_scaled.max(k_ext * (1.0 - xi_norm) * rho_b);
                if !rows.iter().all(|v| v.is_finite()) {
                    return Err(Error::AssemblyFailed(format!(
                        "non-finite quadrature value near ({:.6}, {:.6})",
                        node.x[0], node.x[1]
                    )));
                }
                let m = rows.len() / n;
                row_count += m;
                gram_accumulate(&rows, m, n, &mut a);
            }
            Ok(RingSum { a, b, rows: row_count, max_scaled_exterior: max_scaled })
        })
        .collect();

    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    let mut rows = 0;
    let mut max_scaled = 0.0f64;
    for ring in rings {
        let ring = ring?;
        for (x, y) in a.iter_mut().zip(&ring.a) {
            *x += y;
        }
        for (x, y) in b.iter_mut().zip(&ring.b) {
            *x += y;
        }
        rows += ring.rows;
        max_scaled = max_scaled.max(ring.max_scaled_exterior);
    }
    let mut defect = 0.0;
    let mut norm = 0.0;
    for i in 0..n {
        for j in 0..n {
            defect += (a[i * n + j] - a[j * n + i]).powi(2);
            norm += a[i * n + j].powi(2);
        }
    }
    let symmetry_defect = if norm > 0.0 { (defect / norm).sqrt() } else { 0.0 };
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = avg;
            a[j * n + i] = avg;
        }
    }
    Ok(GalerkinSystem {
        basis: basis.clone(),
        stiffness: a,
        load: b,
        diagnostics: AssemblyDiagnostics {
            symmetry_defect,
            outer_nodes: nodes.len(),
            rows,
            max_scaled_exterior: max_scaled,
        },
    })
}

/// `a += dᵀ d` for a row-major `m × n` block `d`.
fn gram_accumulate(d: &[f64], m: usize, n: usize, a: &mut [f64]) {
    // SAFETY: slices are sized `m·n` and `n·n`, strides describe row-major layouts.
    unsafe {
        matrixmultiply::dgemm(
            n, m, n, 1.0,
            d.as_ptr(), 1, n as isize,
            d.as_ptr(), n as isize, 1,
            1.0,
            a.as_mut_ptr(), n as isize, 1,
        );
    }
}
