//! Quadrature rules shared by the kernel and assembly modules.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`, nodes ascending.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(n.max(1)).unwrap();
    let rule = GaussLegendre::new(n);
    let mut pairs: Vec<(f64, f64)> = rule
        .iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Rule on `[0, 1]` clustered toward both endpoints.
///
/// Uses the map `g(σ) = σ^γ / (σ^γ + (1-σ)^γ)`; with `γ = 2` a square-root
/// endpoint behaviour becomes smooth in `σ`.
#[derive(Debug, Clone)]
pub struct GradedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GradedRule {
    pub fn two_sided(n: usize, gamma: f64) -> Self {
        let (s, w) = gauss_legendre_unit(n);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (&si, &wi) in s.iter().zip(&w) {
            let a = si.powf(gamma);
            let b = (1.0 - si).powf(gamma);
            let d = a + b;
            nodes.push(a / d);
            let da = gamma * si.powf(gamma - 1.0);
            let db = -gamma * (1.0 - si).powf(gamma - 1.0);
            let deriv = (da * d - a * (da + db)) / (d * d);
            weights.push(wi * deriv);
        }
        Self { nodes, weights }
    }

    /// Clustered toward `1` only: `g(σ) = 1 - (1-σ)^γ`.
    pub fn toward_one(n: usize, gamma: f64) -> Self {
        let (s, w) = gauss_legendre_unit(n);
        let nodes = s.iter().map(|&si| 1.0 - (1.0 - si).powf(gamma)).collect();
        let weights = s
            .iter()
            .zip(&w)
            .map(|(&si, &wi)| wi * gamma * (1.0 - si).powf(gamma - 1.0))
            .collect();
        Self { nodes, weights }
    }

    /// Clustered toward `0` only: `g(σ) = σ^γ`.
    pub fn toward_zero(n: usize, gamma: f64) -> Self {
        let (s, w) = gauss_legendre_unit(n);
        let nodes = s.iter().map(|&si| si.powf(gamma)).collect();
        let weights = s
            .iter()
            .zip(&w)
            .map(|(&si, &wi)| wi * gamma * si.powf(gamma - 1.0))
            .collect();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(a + h * x))
            .sum::<f64>()
            * h
    }
}

/// Adaptive double-exponential quadrature on a finite interval.
pub fn adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    target: f64,
) -> crate::Result<(f64, f64)> {
    let out = quadrature::double_exponential::integrate(f, a, b, target);
    if !(out.error_estimate <= target) || !out.integral.is_finite() {
        return Err(crate::Error::QuadratureNotConverged {
            estimate: out.error_estimate,
            target,
        });
    }
    Ok((out.integral, out.error_estimate))
}
