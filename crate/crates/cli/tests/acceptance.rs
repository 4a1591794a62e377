//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use fracshape::geometry::{BoundaryCurve, FlowField, Point};
use fracshape::kernel::*;
use fracshape::optimizer::{optimize, OptimizationHistory, OptimizerParams};
use fracshape::quadrature::gauss_legendre_unit;
use fracshape::shape::{energy, shape_derivative_analytic, shape_derivative_fd, ShapeParams};
use fracshape::solver::SolutionField;
use fracshape::symmetry::symmetry_report;
use fracshape::trace::{extract_psi0, serrin_residual, TraceConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn solve(curve: &BoundaryCurve) -> SolutionField {
    ShapeParams::default().solve(curve).expect("solve")
}

fn disk() -> BoundaryCurve {
    BoundaryCurve::circle([0.0, 0.0], 1.0).unwrap()
}

fn ellipse(aspect: f64) -> BoundaryCurve {
    BoundaryCurve::unit_area_ellipse(aspect, 8).unwrap()
}

fn disk_u(x: Point) -> f64 {
    2.0 / PI * (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).sqrt()
}

struct ExactDisk;

impl PlaneField for ExactDisk {
    fn value(&self, x: Point) -> f64 {
        disk_u(x)
    }

    fn breakpoints(&self, x: Point, e: Point) -> Vec<f64> {
        let b = x[0] * e[0] + x[1] * e[1];
        let disc = b * b - (x[0] * x[0] + x[1] * x[1] - 1.0);
        if disc < 0.0 {
            return Vec::new();
        }
        [-b - disc.sqrt(), -b + disc.sqrt()].into_iter().filter(|t| *t > 0.0).collect()
    }

    fn support(&self) -> (Point, f64) {
        ([0.0, 0.0], 1.0)
    }
}

fn disk_solution() -> Outcome {
    let quad = PointwiseQuadrature::default();
    let mut op = 0.0f64;
    for x in [[0.2, 0.1], [0.0, 0.0], [-0.4, 0.3], [0.05, -0.6], [0.5, 0.5]] {
        op = op.max((frac_laplacian_pointwise(&ExactDisk, x, &quad).unwrap() - 1.0).abs());
    }
    let sol = solve(&disk());
    // polar Gauss rule for the L² norms
    let (rn, rw) = gauss_legendre_unit(40);
    let n_theta = 64;
    let (mut num, mut den) = (0.0, 0.0);
    for (r, wr) in rn.iter().zip(&rw) {
        for k in 0..n_theta {
            let t = 2.0 * PI * k as f64 / n_theta as f64;
            let x = [r * t.cos(), r * t.sin()];
            let w = wr * r * 2.0 * PI / n_theta as f64;
            num += w * (sol.evaluate(x) - disk_u(x)).powi(2);
            den += w * disk_u(x).powi(2);
        }
    }
    let l2 = (num / den).sqrt();
    let c = (sol.evaluate([0.0, 0.0]) - 2.0 / PI).abs();
    check(l2 <= 1e-3 && c <= 1e-3 && op <= 1e-2, format!("relative L2 {l2:.2e}, |u(0) - 2/pi| {c:.2e}, operator oracle {op:.2e}"))
}

fn constants() -> Outcome {
    let k = KernelConstants::compute().unwrap();
    // (2π)^{-2} ∫ |ξ| π e^{-|ξ|²/4} dξ, the symbol side of (-Δ)^{1/2} e^{-|x|²} at 0
    let symbol = PI.sqrt();
    let g = FnField::new(|x: Point| (-(x[0] * x[0] + x[1] * x[1])).exp(), [0.0, 0.0], 6.0);
    let quad = PointwiseQuadrature { n_theta: 32, n_rho: 48, gamma: 2.0 };
    let c1_fit = symbol / (frac_laplacian_pointwise(&g, [0.0, 0.0], &quad).unwrap() / constant_c1());
    let c1_rel = (c1_fit - k.C1).abs() / k.C1;
    let i0 = (k.I0 - PI * PI).abs();
    let c0 = (k.C0 + PI / 8.0).abs();
    check(
        i0 <= 1e-8 && k.phi_inf == 1.0 && c1_rel <= 1e-4 && c0 <= 1e-8 && k.C0 == -k.C1 * k.I0 / 4.0,
        format!("|I0 - pi^2| {i0:.1e}, phi_inf {}, C1 rel {c1_rel:.1e}, |C0 + pi/8| {c0:.1e}", k.phi_inf),
    )
}

fn trace() -> Outcome {
    let p = extract_psi0(&solve(&disk()), &TraceConfig::default()).unwrap();
    let exact = 2.0 * 2f64.sqrt() / PI;
    let node = p.psi0.iter().map(|v| (v - exact).abs() / exact).fold(0.0, f64::max);
    let serrin = serrin_residual(&p).unwrap();
    let curve = ellipse(1.2);
    let a = extract_psi0(&solve(&curve), &TraceConfig::default()).unwrap();
    let b = extract_psi0(&solve(&curve.scaled(2.0).unwrap()), &TraceConfig::default()).unwrap();
    let scale = a
        .s_nodes
        .iter()
        .zip(&a.psi0)
        .map(|(s, v)| (b.interpolate(2.0 * s) - 2f64.sqrt() * v).abs() / (2f64.sqrt() * v))
        .fold(0.0, f64::max);
    check(node <= 1e-2 && serrin <= 1e-2 && scale <= 2e-2, format!("node error {node:.2e}, std/mean {serrin:.2e}, scaling {scale:.2e}"))
}

fn energies() -> Outcome {
    let j1 = energy(&solve(&disk()));
    let j2 = energy(&solve(&BoundaryCurve::circle([0.3, 0.1], 1.0 / PI.sqrt()).unwrap()));
    let d1 = (j1 + 2.0 / 3.0).abs();
    let d2 = (j2 + 2.0 / (3.0 * PI.powf(1.5))).abs();
    let base = ellipse(1.2);
    let j = energy(&solve(&base));
    let mut hom = 0.0f64;
    for rho in [0.5f64, 2.0] {
        let js = energy(&solve(&base.scaled(rho).unwrap()));
        hom = hom.max((js / (rho.powi(3) * j) - 1.0).abs());
    }
    check(d1 <= 5e-3 && d2 <= 5e-3 && hom <= 1e-2, format!("J(disk) err {d1:.1e}, J(unit area) err {d2:.1e}, homogeneity {hom:.1e}"))
}

fn dilation() -> Outcome {
    let mut worst = 0.0f64;
    for curve in [disk(), ellipse(1.2)] {
        let sol = solve(&curve);
        let p = extract_psi0(&sol, &TraceConfig::default()).unwrap();
        let d = shape_derivative_analytic(&p, &FlowField::dilation()).unwrap();
        worst = worst.max((d / (3.0 * energy(&sol)) - 1.0).abs());
    }
    check(worst <= 2e-2, format!("max |dJ[x] / 3J - 1| {worst:.2e}"))
}

fn translation() -> Outcome {
    let sol = solve(&ellipse(1.2));
    let p = extract_psi0(&sol, &TraceConfig::default()).unwrap();
    let d = shape_derivative_analytic(&p, &FlowField::translation([1.0, 0.0])).unwrap();
    let r = d.abs() / energy(&sol).abs();
    check(r <= 1e-2, format!("|dJ[e1]| / |J| {r:.2e}"))
}

fn poisson() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let ones = PlaneGrid { origin: [-1.0, -1.0], spacing: [0.1, 0.1], nx: 20, ny: 20, values: vec![1.0; 400], far_value: 1.0 };
    let mut err = 0.0f64;
    for _ in 0..10 {
        let x = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
        let z = rng.gen_range(0.005..3.0);
        err = err.max((poisson_extension(&ones, x, z) - 1.0).abs());
    }
    let w = PlaneGrid::from_fn([-1.0, -1.0], [0.025, 0.025], 80, 80, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp());
    let h = 1e-2;
    let mut res = 0.0f64;
    for _ in 0..6 {
        let x = [rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)];
        let z = rng.gen_range(0.1..1.0);
        let s = poisson_extension(&w, [x[0] + h, x[1]], z) + poisson_extension(&w, [x[0] - h, x[1]], z)
            + poisson_extension(&w, [x[0], x[1] + h], z) + poisson_extension(&w, [x[0], x[1] - h], z)
            + poisson_extension(&w, x, z + h) + poisson_extension(&w, x, z - h)
            - 6.0 * poisson_extension(&w, x, z);
        res = res.max(s.abs());
    }
    check(err <= 1e-6 && res <= 1e-4, format!("|P[1] - 1| {err:.1e}, harmonic residual {res:.1e}"))
}

fn fd_crosscheck() -> Outcome {
    let curve = ellipse(1.2);
    let field = FlowField::normal_mode([0.0, 0.0], (1.0 / PI).sqrt(), 2, 1.0);
    let params = ShapeParams::default();
    let p = extract_psi0(&solve(&curve), &TraceConfig::default()).unwrap();
    let analytic = shape_derivative_analytic(&p, &field).unwrap();
    let fd = shape_derivative_fd(&curve, &field, 0.02, &params, true).unwrap();
    let rel = (analytic - fd.value).abs() / fd.value.abs();
    check(rel <= 5e-2, format!("analytic {analytic:.6e}, Richardson fd {:.6e}, relative {rel:.2e}", fd.value))
}

fn optimization() -> (Outcome, Option<OptimizationHistory>) {
    let target = -2.0 / (3.0 * PI.powf(1.5));
    let starts = [ellipse(1.3), BoundaryCurve::new([0.0, 0.0], 1.0, vec![0.0, 0.0, 0.15], vec![]).unwrap()];
    let mut details = Vec::new();
    let mut ok = true;
    let mut first = None;
    for (name, start) in ["ellipse", "mode-3"].iter().zip(starts) {
        let h = match optimize(&start, &OptimizerParams::default()) {
            Ok(h) => h,
            Err(e) => return (Err(format!("{name}: {e}")), None),
        };
        let last = h.last();
        let rho: Vec<f64> = (0..720).map(|i| last.curve.radius(2.0 * PI * i as f64 / 720.0)).collect();
        let mean = rho.iter().sum::<f64>() / rho.len() as f64;
        let round = (rho.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / rho.len() as f64).sqrt() / mean;
        let j_err = (last.energy - target).abs() / target.abs();
        let monotone = h.states.windows(2).all(|w| w[1].energy <= w[0].energy);
        ok &= j_err <= 5e-3 && round <= 2e-2 && last.serrin <= 2e-2 && monotone;
        details.push(format!("{name}: J err {j_err:.1e}, roundness {round:.1e}, serrin {:.1e}, monotone {monotone}", last.serrin));
        first.get_or_insert(h);
    }
    (check(ok, details.join("; ")), first)
}

fn moving_plane(optimized: Option<&BoundaryCurve>) -> Outcome {
    let sol = solve(&disk());
    let mut lam = 0.0f64;
    let mut wmin = f64::INFINITY;
    for k in 0..16 {
        let t = 2.0 * PI * k as f64 / 16.0;
        let (r, _) = symmetry_report(&sol, [t.cos(), t.sin()], 10_000, 48, 1e-3).map_err(|e| e.to_string())?;
        lam = lam.max(r.lambda.abs());
        wmin = wmin.min(r.w_min);
    }
    let Some(curve) = optimized else {
        return Err("no optimizer output".into());
    };
    let sol = solve(curve);
    let mut rel = f64::INFINITY;
    for k in 0..8 {
        let t = 2.0 * PI * k as f64 / 8.0 + 0.1;
        let (r, _) = symmetry_report(&sol, [t.cos(), t.sin()], 10_000, 48, 1e-3).map_err(|e| e.to_string())?;
        rel = rel.min(r.w_min / r.max_u);
    }
    check(
        lam <= 2e-4 && wmin >= -1e-6 && rel >= -1e-3,
        format!("disk |Lambda| {lam:.1e}, disk w_min {wmin:.1e}, optimized w_min/max u {rel:.1e}"),
    )
}

/// Distance from `x` to the ellipse `x₁²/a² + x₂²/b² = 1` by Newton on the foot parameter.
fn ellipse_distance(x: Point, a: f64, b: f64) -> f64 {
    let mut t = (a * x[1]).atan2(b * x[0]);
    for _ in 0..30 {
        let (s, c) = t.sin_cos();
        let g = (a * a - b * b) * s * c - x[0] * a * s + x[1] * b * c;
        let dg = (a * a - b * b) * (c * c - s * s) - x[0] * a * c - x[1] * b * s;
        let step = g / dg;
        t -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    (x[0] - a * t.cos()).hypot(x[1] - b * t.sin())
}

/// `(∫∫ |1 − κ r| dr ds, midpoint-counted area)` of `{0 < r < δ}` inside the ellipse with semi-axes `a, b`.
fn band_area(a: f64, b: f64, delta: f64) -> (f64, f64) {
    let curve = BoundaryCurve::ellipse([0.0, 0.0], a, b, 16).unwrap();
    let (sx, sw) = gauss_legendre_unit(6);
    let ns = 400;
    let ds = curve.length() / ns as f64;
    let mut quad = 0.0;
    for i in 0..ns {
        let s = (i as f64 + 0.5) * ds;
        for (u, w) in sx.iter().zip(&sw) {
            quad += ds * delta * w * curve.tubular_jacobian(s, delta * u).unwrap();
        }
    }
    let n = 2000;
    let (hx, hy) = (2.0 * a / n as f64, 2.0 * b / n as f64);
    let mut count = 0usize;
    for j in 0..n {
        for i in 0..n {
            let x = [-a + (i as f64 + 0.5) * hx, -b + (j as f64 + 0.5) * hy];
            let q = (x[0] / a).powi(2) + (x[1] / b).powi(2);
            if q < 1.0 && ellipse_distance(x, a, b) < delta {
                count += 1;
            }
        }
    }
    (quad, count as f64 * hx * hy)
}

fn jacobian() -> Outcome {
    let (q1, g1) = band_area(1.0, 1.0, 0.1);
    let exact = PI * (1.0 - 0.9f64.powi(2));
    let (a, b) = ((1.2 / PI).sqrt(), 1.0 / (1.2 * PI).sqrt());
    let (q2, g2) = band_area(a, b, 0.1);
    let (r1, r2) = ((q1 - g1).abs() / g1, (q2 - g2).abs() / g2);
    let annulus = (q1 - exact).abs() / exact;
    check(r1 <= 1e-3 && r2 <= 5e-3 && annulus <= 1e-10, format!("disk {r1:.1e} (annulus {annulus:.0e}), ellipse {r2:.1e}"))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for threads in ["1", "4"] {
        let dir = tmp.path().join(format!("threads{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_fracshape"))
            .args(["selftest", "--out"])
            .arg(&dir)
            .env("FRACSHAPE_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("selftest with {threads} threads exited {:?}", status.status.code()));
        }
        trees.push(read_tree(&dir));
    }
    let same = trees[0] == trees[1] && !trees[0].is_empty();
    check(same, format!("{} artifacts compared, identical {same}", trees[0].len()))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "disk solution", disk_solution()));
    results.push((2, "kernel constants", constants()));
    results.push((3, "trace", trace()));
    results.push((4, "energy", energies()));
    results.push((5, "dilation identity", dilation()));
    results.push((6, "translation identity", translation()));
    results.push((7, "poisson kernel", poisson()));
    results.push((8, "shape derivative cross-check", fd_crosscheck()));
    let (opt, history) = optimization();
    results.push((9, "optimization to the disk", opt));
    results.push((10, "moving plane", moving_plane(history.as_ref().map(|h| &h.last().curve))));
    results.push((11, "tubular jacobian", jacobian()));
    results.push((12, "determinism", determinism()));
    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(d) => println!("criterion {id:>2} PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
