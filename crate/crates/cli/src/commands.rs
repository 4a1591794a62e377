//! One function per subcommand; each writes its artifacts and returns a summary line.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use fracshape::geometry::{BoundaryCurve, Point};
use fracshape::kernel::KernelConstants;
use fracshape::optimizer::optimize;
use fracshape::shape::{energy, shape_derivative_report};
use fracshape::symmetry::symmetry_report;
use fracshape::trace::{extract_psi0, serrin_residual};
use serde::Serialize;

use crate::config::{Command, FieldSpec, Settings};
use crate::error::{CliError, CliResult};
use crate::svg;

/// Moving-plane scan resolution and cap grid size for `symmetry`.
pub const SYMMETRY_SCAN: usize = 4000;
pub const SYMMETRY_GRID: usize = 48;
/// An overlay curve is drawn every this many optimizer iterations.
pub const OVERLAY_EVERY: usize = 5;

pub fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_artifact(dir, name, text.as_bytes())
}

fn domain(s: &Settings) -> CliResult<&BoundaryCurve> {
    s.domain.as_ref().ok_or_else(|| CliError::Validation("missing domain".into()))
}

pub fn outline(curve: &BoundaryCurve, n: usize) -> Vec<Point> {
    (0..n).map(|i| curve.curve_point(2.0 * PI * i as f64 / n as f64)).collect()
}

/// Evenly spread unit directions, starting at `e₁`.
pub fn fan(n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            [t.cos(), t.sin()]
        })
        .collect()
}

pub fn run(s: &Settings) -> CliResult<String> {
    match s.command {
        Command::Constants => constants(s),
        Command::Solve => solve(s),
        Command::Trace => trace(s),
        Command::Energy => energy_cmd(s),
        Command::Dshape => dshape(s),
        Command::Optimize => optimize_cmd(s),
        Command::Symmetry => symmetry(s),
        Command::Selftest => crate::selftest::run(s),
    }
}

fn constants(s: &Settings) -> CliResult<String> {
    let k = KernelConstants::compute()?;
    write_json(&s.out, "constants.json", &k)?;
    Ok(serde_json::to_string(&k)?)
}

fn solve(s: &Settings) -> CliResult<String> {
    let curve = domain(s)?;
    let sol = s.shape.solve(curve)?;
    let mut csv = Vec::new();
    sol.write_grid_csv(&mut csv, s.grid)?;
    write_artifact(&s.out, "solution.csv", &csv)?;
    let mut json = Vec::new();
    sol.write_coefficients_json(&mut json)?;
    json.push(b'\n');
    write_artifact(&s.out, "coefficients.json", &json)?;
    let c = curve.center();
    Ok(format!(
        "solve: dim {} u(center) {:.6} residual {:.2e}",
        sol.diagnostics.dim,
        sol.evaluate(c),
        sol.diagnostics.relative_residual
    ))
}

#[derive(Serialize)]
struct TraceSummary {
    length: f64,
    mean: f64,
    serrin: f64,
    flagged: usize,
    window: (f64, f64),
}

fn trace(s: &Settings) -> CliResult<String> {
    let curve = domain(s)?;
    let sol = s.shape.solve(curve)?;
    let profile = extract_psi0(&sol, &s.shape.trace)?;
    let serrin = serrin_residual(&profile)?;
    let mut csv = Vec::new();
    profile.write_csv(&mut csv)?;
    write_artifact(&s.out, "trace.csv", &csv)?;
    let plot = svg::line_plot("fractional normal derivative", "s", "psi0", &[("psi0", &profile.s_nodes, &profile.psi0)]);
    write_artifact(&s.out, "trace.svg", plot.as_bytes())?;
    let summary = TraceSummary {
        length: profile.length,
        mean: profile.mean(),
        serrin,
        flagged: profile.flagged.iter().filter(|f| **f).count(),
        window: profile.window,
    };
    write_json(&s.out, "trace.json", &summary)?;
    Ok(format!("trace: mean psi0 {:.6} serrin {:.3e} flagged {}", summary.mean, serrin, summary.flagged))
}

#[derive(Serialize)]
struct EnergySummary {
    energy: f64,
    area: f64,
    dim: usize,
    relative_residual: f64,
}

fn energy_cmd(s: &Settings) -> CliResult<String> {
    let curve = domain(s)?;
    let sol = s.shape.solve(curve)?;
    let summary = EnergySummary {
        energy: energy(&sol),
        area: curve.area(),
        dim: sol.diagnostics.dim,
        relative_residual: sol.diagnostics.relative_residual,
    };
    write_json(&s.out, "energy.json", &summary)?;
    Ok(format!("energy: J {:.8} area {:.6}", summary.energy, summary.area))
}

#[derive(Serialize)]
struct DshapeOutput {
    field: FieldSpec,
    energy: f64,
    analytic: f64,
    fd: f64,
    h: f64,
    richardson: bool,
    fit_residual: f64,
    discrepancy: f64,
}

fn dshape(s: &Settings) -> CliResult<String> {
    let curve = domain(s)?;
    let field = s.field.build(curve);
    let r = shape_derivative_report(curve, &field, &s.shape, s.fd_step, s.richardson)?;
    let out = DshapeOutput {
        field: s.field,
        energy: r.energy,
        analytic: r.analytic,
        fd: r.fd,
        h: r.h,
        richardson: r.richardson,
        fit_residual: r.fit_residual,
        discrepancy: r.discrepancy,
    };
    write_json(&s.out, "dshape.json", &out)?;
    Ok(format!("dshape: analytic {:.6e} fd {:.6e} discrepancy {:.3e}", r.analytic, r.fd, r.discrepancy))
}

#[derive(Serialize)]
struct OptimizeSummary<'a> {
    stop: fracshape::optimizer::StopReason,
    iterations: usize,
    initial_energy: f64,
    final_state: &'a fracshape::optimizer::OptimizationState,
    final_domain: fracshape::geometry::CurveJson,
}

/// Runs the optimizer and writes history, overlay and final domain under `dir`.
pub fn optimize_into(curve: &BoundaryCurve, s: &Settings, dir: &Path) -> CliResult<fracshape::optimizer::OptimizationHistory> {
    let h = optimize(curve, &s.optimizer)?;
    let mut csv = Vec::new();
    h.write_csv(&mut csv)?;
    write_artifact(dir, "history.csv", &csv)?;
    let last = h.last();
    let mut curves: Vec<(String, Vec<Point>)> = h
        .states
        .iter()
        .filter(|st| st.iteration % OVERLAY_EVERY == 0 && st.iteration != last.iteration)
        .map(|st| (format!("iter {}", st.iteration), outline(&st.curve, 256)))
        .collect();
    curves.push((format!("iter {}", last.iteration), outline(&last.curve, 256)));
    write_artifact(dir, "shapes.svg", svg::shape_overlay("boundary shapes", &curves).as_bytes())?;
    write_json(dir, "final_domain.json", &last.curve.to_json())?;
    let summary = OptimizeSummary {
        stop: h.stop,
        iterations: last.iteration,
        initial_energy: h.states[0].energy,
        final_state: last,
        final_domain: last.curve.to_json(),
    };
    write_json(dir, "optimize.json", &summary)?;
    Ok(h)
}

fn optimize_cmd(s: &Settings) -> CliResult<String> {
    let h = optimize_into(domain(s)?, s, &s.out)?;
    let last = h.last();
    Ok(format!(
        "optimize: {:?} after {} iterations, J {:.8} serrin {:.3e} roundness {:.3e}",
        h.stop, last.iteration, last.energy, last.serrin, last.roundness
    ))
}

/// Reports for `n` directions; a heat map per direction goes to `dir`.
pub fn symmetry_into(curve: &BoundaryCurve, s: &Settings, dir: &Path) -> CliResult<Vec<fracshape::symmetry::SymmetryReport>> {
    let sol = s.shape.solve(curve)?;
    let mut reports = Vec::new();
    for (k, e) in fan(s.directions).into_iter().enumerate() {
        let (r, cap) = symmetry_report(&sol, e, SYMMETRY_SCAN, SYMMETRY_GRID, s.symmetry_tol)?;
        let title = format!("w on the reflected cap, e = ({:.4}, {:.4})", e[0], e[1]);
        write_artifact(dir, &format!("symmetry_{k:02}.svg"), svg::heat_map(&title, &cap).as_bytes())?;
        reports.push(r);
    }
    write_json(dir, "symmetry.json", &reports)?;
    Ok(reports)
}

fn symmetry(s: &Settings) -> CliResult<String> {
    let reports = symmetry_into(domain(s)?, s, &s.out)?;
    let worst = reports.iter().map(|r| r.w_min / r.max_u).fold(f64::INFINITY, f64::min);
    let negative = reports.iter().filter(|r| r.w_min < -r.tolerance).count();
    Ok(format!(
        "symmetry: {} directions, min w/max u {:.3e}, {} below tolerance",
        reports.len(),
        worst,
        negative
    ))
}
