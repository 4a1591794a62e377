use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryCurve, Point};
use crate::{Error, Result};

/// Identifies one trial function by angular mode, parity and radial degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisLabel {
    pub m: usize,
    pub sine: bool,
    pub j: usize,
}

/// Trial space `√(1 - |ξ|²) |ξ|^m T_j(2|ξ|² - 1) {cos, sin}(mθ)` on the radial pullback
/// `ξ = (x - c)/ρ(θ(x))` of the domain onto the unit disk.
///
/// The factor `|ξ|^m` makes every function smooth at the center and the spaces
/// nested in both `K_rad` and `K_ang`. Functions are ordered by `m`, cosine
/// block before sine block, then by `j`.
#[derive(Debug, Clone)]
pub struct WeightedBasis {
    curve: BoundaryCurve,
    k_rad: usize,
    k_ang: usize,
}

impl WeightedBasis {
    pub fn new(curve: BoundaryCurve, k_rad: usize, k_ang: usize) -> Result<Self> {
        if k_rad > 64 || k_ang > 64 {
            return Err(Error::InvalidConfig(format!("basis sizes too large: k_rad={k_rad}, k_ang={k_ang}")));
        }
        Ok(Self { curve, k_rad, k_ang })
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    pub fn k_rad(&self) -> usize {
        self.k_rad
    }

    pub fn k_ang(&self) -> usize {
        self.k_ang
    }

    pub fn len(&self) -> usize {
        (self.k_rad + 1) * (2 * self.k_ang + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, label: BasisLabel) -> usize {
        let block = if label.m == 0 { 0 } else { 2 * label.m - 1 + usize::from(label.sine) };
        block * (self.k_rad + 1) + label.j
    }

    pub fn labels(&self) -> Vec<BasisLabel> {
        let mut out = Vec::with_capacity(self.len());
        for m in 0..=self.k_ang {
            for sine in [false, true] {
                if m == 0 && sine {
                    continue;
                }
                for j in 0..=self.k_rad {
                    out.push(BasisLabel { m, sine, j });
                }
            }
        }
        out
    }

    /// Pullback coordinates of `x`.
    #[inline]
    pub fn pullback(&self, x: Point) -> Point {
        let c = self.curve.center();
        let v = [x[0] - c[0], x[1] - c[1]];
        let r = v[0].hypot(v[1]);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let rho = self.curve.radius_from_unit(v[0] / r, v[1] / r);
        [v[0] / rho, v[1] / rho]
    }

    /// All basis values at pullback point `xi`; zero for `|ξ| ≥ 1`.
    pub fn eval_pullback(&self, xi: Point, out: &mut [f64]) {
        let q = xi[0] * xi[0] + xi[1] * xi[1];
        if q >= 1.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let w = (1.0 - q).sqrt();
        let s = 2.0 * q - 1.0;
        let nr = self.k_rad + 1;
        // w·T_j(s), shared by every angular block
        let radial = &mut [0.0f64; 65][..nr];
        let (mut t0, mut t1) = (1.0, s);
        for (j, r) in radial.iter_mut().enumerate() {
            *r = match j {
                0 => w,
                1 => w * s,
                _ => {
                    let t2 = 2.0 * s * t1 - t0;
                    t0 = t1;
                    t1 = t2;
                    w * t2
                }
            };
        }
        out[..nr].copy_from_slice(radial);
        let (mut re, mut im) = (1.0, 0.0);
        for m in 1..=self.k_ang {
            let nre = re * xi[0] - im * xi[1];
            im = re * xi[1] + im * xi[0];
            re = nre;
            let base = (2 * m - 1) * nr;
            for j in 0..nr {
                out[base + j] = re * radial[j];
                out[base + nr + j] = im * radial[j];
            }
        }
    }

    /// All basis values at `x`; zero outside the domain.
    pub fn eval(&self, x: Point, out: &mut [f64]) {
        self.eval_pullback(self.pullback(x), out);
    }

    /// `Σ c_I φ_I(x)`, exactly zero outside the domain.
    pub fn evaluate(&self, coeffs: &[f64], x: Point) -> f64 {
        let mut buf = vec![0.0; self.len()];
        self.eval(x, &mut buf);
        buf.iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}
