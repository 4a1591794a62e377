use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use fracshape::geometry::Point;
use fracshape::kernel::*;
use fracshape::quadrature::gauss_legendre_unit;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(2/π) √(R² - |x - c|²)_+`, the torsion-type solution on a disk.
struct DiskSolution {
    c: Point,
    r: f64,
}

impl PlaneField for DiskSolution {
    fn value(&self, x: Point) -> f64 {
        let d2 = (x[0] - self.c[0]).powi(2) + (x[1] - self.c[1]).powi(2);
        2.0 / PI * (self.r * self.r - d2).max(0.0).sqrt()
    }

    fn breakpoints(&self, x: Point, e: Point) -> Vec<f64> {
        let p = [x[0] - self.c[0], x[1] - self.c[1]];
        let b = p[0] * e[0] + p[1] * e[1];
        let c = p[0] * p[0] + p[1] * p[1] - self.r * self.r;
        let disc = b * b - c;
        if disc < 0.0 {
            return Vec::new();
        }
        [-b - disc.sqrt(), -b + disc.sqrt()].into_iter().filter(|t| *t > 0.0).collect()
    }

    fn support(&self) -> (Point, f64) {
        (self.c, self.r)
    }
}

fn gaussian() -> FnField<impl Fn(Point) -> f64 + Sync> {
    FnField::new(|x: Point| (-(x[0] * x[0] + x[1] * x[1])).exp(), [0.0, 0.0], 6.0)
}

/// `(2π)^{-2} ∫ |ξ| ĝ(ξ) dξ` for `g = e^{-|x|²}`, with `ĝ` itself computed by
/// numerical 1D transforms of `e^{-s²}`.
fn gaussian_symbol_at_origin() -> f64 {
    let (sx, sw) = gauss_legendre_unit(400);
    let one_d = |k: f64| -> f64 {
        // ∫_{-7}^{7} e^{-s²} cos(k s) ds
        sx.iter().zip(&sw).map(|(u, w)| {
            let s = -7.0 + 14.0 * u;
            14.0 * w * (-s * s).exp() * (k * s).cos()
        }).sum()
    };
    let (rx, rw) = gauss_legendre_unit(160);
    let n_angle = 64;
    let mut total = 0.0;
    for (u, w) in rx.iter().zip(&rw) {
        let k = 24.0 * u;
        let mut ring = 0.0;
        for a in 0..n_angle {
            let t = 2.0 * PI * (a as f64 + 0.5) / n_angle as f64;
            ring += one_d(k * t.cos()) * one_d(k * t.sin());
        }
        total += 24.0 * w * k * k * ring * 2.0 * PI / n_angle as f64;
    }
    total / (4.0 * PI * PI)
}

#[test]
fn c1_matches_fourier_symbol_oracle() {
    let symbol = gaussian_symbol_at_origin();
    let quad = PointwiseQuadrature { n_theta: 32, n_rho: 48, gamma: 2.0 };
    let without_c1 = frac_laplacian_pointwise(&gaussian(), [0.0, 0.0], &quad).unwrap() / constant_c1();
    let fitted_c1 = symbol / without_c1;
    assert!((fitted_c1 - constant_c1()).abs() / constant_c1() < 1e-4, "{fitted_c1}");
}

#[test]
fn disk_solution_has_unit_half_laplacian() {
    let u = DiskSolution { c: [0.0, 0.0], r: 1.0 };
    let quad = PointwiseQuadrature::default();
    for x in [[0.3, 0.2], [0.0, 0.0], [-0.5, 0.1], [0.1, -0.7], [0.6, 0.6]] {
        let v = frac_laplacian_pointwise(&u, x, &quad).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-2);
    }
}

#[test]
fn disk_solution_is_accurate_at_default_quadrature() {
    let u = DiskSolution { c: [0.0, 0.0], r: 1.0 };
    let v = frac_laplacian_pointwise(&u, [0.3, 0.2], &PointwiseQuadrature::default()).unwrap();
    assert_abs_diff_eq!(v, 1.0, epsilon = 1e-6);
}

#[test]
fn pointwise_operator_is_linear() {
    let u = DiskSolution { c: [0.1, 0.0], r: 1.0 };
    let g = gaussian();
    let (a, b) = (0.7, -1.3);
    let combo = FnField::new(|x: Point| a * u.value(x) + b * g.value(x), [0.0, 0.0], 6.0);
    // same breakpoint-free rule for all three so the quadrature is identical
    let plain_u = FnField::new(|x: Point| u.value(x), [0.0, 0.0], 6.0);
    let quad = PointwiseQuadrature::default();
    let x = [0.2, 0.3];
    let lhs = frac_laplacian_pointwise(&combo, x, &quad).unwrap();
    let rhs = a * frac_laplacian_pointwise(&plain_u, x, &quad).unwrap()
        + b * frac_laplacian_pointwise(&g, x, &quad).unwrap();
    assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
}

#[test]
fn pointwise_operator_is_translation_equivariant() {
    let c = [0.37, -0.21];
    let u = DiskSolution { c: [0.0, 0.0], r: 1.0 };
    let v = DiskSolution { c, r: 1.0 };
    let quad = PointwiseQuadrature::default();
    let x = [0.25, 0.1];
    let a = frac_laplacian_pointwise(&u, x, &quad).unwrap();
    let b = frac_laplacian_pointwise(&v, [x[0] + c[0], x[1] + c[1]], &quad).unwrap();
    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
}

#[test]
fn pointwise_operator_scales_with_degree_minus_one() {
    let rho = 2.5;
    let g = gaussian();
    let gs = FnField::new(|x: Point| (-(x[0] * x[0] + x[1] * x[1]) / (rho * rho)).exp(), [0.0, 0.0], 6.0 * rho);
    let quad = PointwiseQuadrature::default();
    let x = [0.4, -0.3];
    let a = frac_laplacian_pointwise(&g, x, &quad).unwrap();
    let b = frac_laplacian_pointwise(&gs, [rho * x[0], rho * x[1]], &quad).unwrap();
    assert_abs_diff_eq!(b, a / rho, epsilon = 1e-8);
}

#[test]
fn poisson_extension_of_one_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = PlaneGrid { origin: [-2.0, -2.0], spacing: [0.05, 0.05], nx: 80, ny: 80, values: vec![1.0; 6400], far_value: 1.0 };
    for _ in 0..10 {
        let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let z = rng.gen_range(0.01..2.0);
        assert_abs_diff_eq!(poisson_extension(&g, x, z), 1.0, epsilon = 1e-6);
    }
}

#[test]
fn poisson_extension_is_harmonic() {
    let g = PlaneGrid::from_fn([-1.0, -1.0], [0.02, 0.02], 100, 100, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        (1.0 - r2).max(0.0)
    });
    let h = 1e-2;
    for (x, z) in [([0.1, 0.2], 0.3), ([0.7, -0.4], 0.15), ([1.5, 0.0], 0.5)] {
        let c = poisson_extension(&g, x, z);
        let lap = poisson_extension(&g, [x[0] + h, x[1]], z)
            + poisson_extension(&g, [x[0] - h, x[1]], z)
            + poisson_extension(&g, [x[0], x[1] + h], z)
            + poisson_extension(&g, [x[0], x[1] - h], z)
            + poisson_extension(&g, x, z + h)
            + poisson_extension(&g, x, z - h)
            - 6.0 * c;
        assert!((lap / (h * h)).abs() <= 1e-4 * 100.0 && (lap).abs() <= 1e-4, "{lap}");
    }
}

#[test]
fn poisson_extension_of_odd_field_is_odd() {
    let lambda = 0.25;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // cells symmetric about x1 = λ: origin λ - 1, 40 columns of width 0.05
    let nx = 40;
    let ny = 30;
    let mut values = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx / 2 {
            let v: f64 = rng.gen_range(-1.0..1.0);
            values[j * nx + i] = v;
            values[j * nx + (nx - 1 - i)] = -v;
        }
    }
    let g = PlaneGrid { origin: [lambda - 1.0, -0.75], spacing: [0.05, 0.05], nx, ny, values, far_value: 0.0 };
    for (x, z) in [([0.6, 0.1], 0.2), ([-0.3, -0.5], 0.05), ([1.9, 0.3], 0.7)] {
        let a = poisson_extension(&g, x, z);
        let b = poisson_extension(&g, [2.0 * lambda - x[0], x[1]], z);
        assert_abs_diff_eq!(a, -b, epsilon = 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn poisson_extension_positive_for_nonnegative(seed in 0u64..1000, z in 0.01f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = PlaneGrid::from_fn([-1.0, -1.0], [0.1, 0.1], 20, 20, |_| 0.0);
        for v in g.values.iter_mut() {
            if rng.gen_bool(0.2) {
                *v = rng.gen_range(0.0..1.0);
            }
        }
        g.values[rng.gen_range(0..400)] = 1.0;
        let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        prop_assert!(poisson_extension(&g, x, z) > 0.0);
    }
}
