//! Dense direct solve of the Galerkin system and the resulting solution field.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::assembly::{assemble, BasisLabel, GalerkinSystem, QuadratureConfig, Source, WeightedBasis};
use crate::geometry::{BoundaryCurve, CurveJson, Point};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub dim: usize,
    /// `‖A c − b‖ / ‖b‖` after the solve.
    pub relative_residual: f64,
    pub symmetry_defect: f64,
    pub quadrature_rows: usize,
}

/// Galerkin approximation of the Dirichlet solution on one domain.
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub basis: WeightedBasis,
    pub coeffs: Vec<f64>,
    pub source: Source,
    pub quad: QuadratureConfig,
    pub load: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Serialize)]
struct CoefficientsJson<'a> {
    curve: CurveJson,
    k_rad: usize,
    k_ang: usize,
    source: &'a Source,
    quadrature: &'a QuadratureConfig,
    labels: Vec<BasisLabel>,
    coeffs: &'a [f64],
    diagnostics: &'a SolveDiagnostics,
}

/// Cholesky solve of an assembled system.
pub fn solve_system(system: GalerkinSystem, source: Source, quad: QuadratureConfig) -> Result<SolutionField> {
    let n = system.dim();
    let a = DMatrix::from_row_slice(n, n, &system.stiffness);
    let b = DVector::from_column_slice(&system.load);
    let chol = a.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let c = chol.solve(&b);
    let b_norm = b.norm();
    let relative_residual = if b_norm > 0.0 { (&a * &c - &b).norm() / b_norm } else { (&a * &c).norm() };
    Ok(SolutionField {
        diagnostics: SolveDiagnostics {
            dim: n,
            relative_residual,
            symmetry_defect: system.diagnostics.symmetry_defect,
            quadrature_rows: system.diagnostics.rows,
        },
        basis: system.basis,
        coeffs: c.iter().copied().collect(),
        source,
        quad,
        load: system.load,
    })
}

/// Assemble and solve `(−Δ)^{1/2}u = f` in `Ω`, `u = 0` outside.
pub fn solve_dirichlet(
    curve: &BoundaryCurve,
    source: &Source,
    k_rad: usize,
    k_ang: usize,
    quad: &QuadratureConfig,
) -> Result<SolutionField> {
    let basis = WeightedBasis::new(curve.clone(), k_rad, k_ang)?;
    let system = assemble(&basis, source, quad)?;
    solve_system(system, source.clone(), *quad)
}

impl SolutionField {
    pub fn curve(&self) -> &BoundaryCurve {
        self.basis.curve()
    }

    /// `u(x)`, exactly zero outside the domain.
    pub fn evaluate(&self, x: Point) -> f64 {
        self.basis.evaluate(&self.coeffs, x)
    }

    /// `−½ bᵀc`, which equals `−½ ∫ f u` on the outer grid.
    pub fn energy(&self) -> f64 {
        -0.5 * self.load.iter().zip(&self.coeffs).map(|(b, c)| b * c).sum::<f64>()
    }

    /// Values on an `nx × ny` grid of the box `[lo, hi]`, row by row in `x₂`.
    pub fn sample_grid(&self, lo: Point, hi: Point, nx: usize, ny: usize) -> Vec<(Point, f64)> {
        let step = |a: f64, b: f64, n: usize, i: usize| {
            if n > 1 { a + (b - a) * i as f64 / (n - 1) as f64 } else { 0.5 * (a + b) }
        };
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let x = [step(lo[0], hi[0], nx, i), step(lo[1], hi[1], ny, j)];
                out.push((x, self.evaluate(x)));
            }
        }
        out
    }

    /// CSV `x1,x2,u` on a grid over the curve's bounding box.
    pub fn write_grid_csv<W: Write>(&self, mut w: W, n: usize) -> Result<()> {
        let (lo, hi) = self.curve().bounding_box();
        writeln!(w, "x1,x2,u")?;
        for (x, u) in self.sample_grid(lo, hi, n, n) {
            writeln!(w, "{},{},{}", x[0], x[1], u)?;
        }
        Ok(())
    }

    pub fn write_coefficients_json<W: Write>(&self, w: W) -> Result<()> {
        let doc = CoefficientsJson {
            curve: self.curve().to_json(),
            k_rad: self.basis.k_rad(),
            k_ang: self.basis.k_ang(),
            source: &self.source,
            quadrature: &self.quad,
            labels: self.basis.labels(),
            coeffs: &self.coeffs,
            diagnostics: &self.diagnostics,
        };
        serde_json::to_writer_pretty(w, &doc)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn disk_solution() -> SolutionField {
        let disk = BoundaryCurve::circle([0.0, 0.0], 1.0).unwrap();
        solve_dirichlet(&disk, &Source::default(), 2, 1, &QuadratureConfig::preset("coarse").unwrap()).unwrap()
    }

    #[test]
    fn center_value_and_residual() {
        let sol = disk_solution();
        assert!((sol.evaluate([0.0, 0.0]) - 2.0 / PI).abs() < 1e-3);
        assert!(sol.diagnostics.relative_residual < 1e-10);
    }

    #[test]
    fn vanishes_outside_and_on_boundary() {
        let sol = disk_solution();
        assert_eq!(sol.evaluate([1.5, 0.2]), 0.0);
        assert!(sol.evaluate([0.6, 0.8]).abs() < 1e-12);
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let disk = BoundaryCurve::circle([0.0, 0.0], 1.0).unwrap();
        let sol = solve_dirichlet(&disk, &Source::Constant { value: 0.0 }, 1, 1, &QuadratureConfig::preset("coarse").unwrap()).unwrap();
        assert!(sol.coeffs.iter().all(|c| *c == 0.0));
        assert_eq!(sol.energy(), 0.0);
    }

    #[test]
    fn csv_has_header_and_grid() {
        let sol = disk_solution();
        let mut buf = Vec::new();
        sol.write_grid_csv(&mut buf, 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(text.starts_with("x1,x2,u\n"));
        let center = text.lines().find(|l| l.starts_with("0,0,")).unwrap();
        let u: f64 = center.rsplit(',').next().unwrap().parse().unwrap();
        assert!((u - 2.0 / PI).abs() < 1e-3);
    }

    #[test]
    fn coefficients_json_lists_labels() {
        let sol = disk_solution();
        let mut buf = Vec::new();
        sol.write_coefficients_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["coeffs"].as_array().unwrap().len(), sol.basis.len());
        assert_eq!(v["labels"].as_array().unwrap().len(), sol.basis.len());
    }
}
