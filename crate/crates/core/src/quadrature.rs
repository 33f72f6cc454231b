//! Gauss-Legendre quadrature over S(q) after the substitution
//! x = (2/sqrt(1-q)) cos(theta), theta in [0, pi].
//!
//! The Jacobian sin(theta) absorbs the square-root edges of the semicircle
//! type densities and the poles of the arcsine density.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::qcore::check_q_open;

pub const DEFAULT_NODES: usize = 128;
pub const NODE_CAP: usize = 1024;

/// Gauss-Legendre nodes and weights mapped to theta in [0, pi].
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub n: usize,
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    fn build(n: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(n).expect("n > 0"));
        let half = std::f64::consts::FRAC_PI_2;
        let (theta, weights) = gl
            .as_node_weight_pairs()
            .iter()
            .map(|&(t, w)| (half * (t + 1.0), half * w))
            .unzip();
        Self { n, theta, weights }
    }

    /// Shared rule with `n` nodes (built once per size).
    pub fn get(n: usize) -> Arc<QuadratureRule> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(Self::build(n))).clone()
    }

    /// sum_i w_i g(theta_i), approximating the integral of g over [0, pi].
    pub fn integrate_theta(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.theta.iter().zip(&self.weights).map(|(&t, &w)| w * g(t)).sum()
    }

    /// Integral of f over S(q) by the cosine substitution.
    pub fn integrate_support(&self, q: f64, f: impl Fn(f64) -> f64) -> f64 {
        let a = 2.0 / (1.0 - q).sqrt();
        self.integrate_theta(|t| f(a * t.cos()) * a * t.sin())
    }
}

/// Node schedule and tolerance of the adaptive driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadOptions {
    pub n0: usize,
    pub n_cap: usize,
    /// Largest accepted |I_N - I_{2N}|.
    pub tol: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { n0: DEFAULT_NODES, n_cap: NODE_CAP, tol: 1e-11 }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// |I_N - I_{2N}| for the last pair computed.
    pub error: f64,
    /// Node count of the returned value.
    pub nodes: usize,
}

/// Doubles the node count from `n0` until |I_N - I_{2N}| <= tol; the pair
/// (n_cap/2, n_cap) is the last one tried.
pub fn integrate_with(
    opts: QuadOptions,
    rule_integral: impl Fn(&QuadratureRule) -> f64,
) -> Result<QuadResult> {
    if opts.n0 == 0 || opts.n0 * 2 > opts.n_cap {
        return Err(invalid("quadrature schedule needs 0 < 2 n0 <= n_cap"));
    }
    let mut n = opts.n0;
    let mut prev = rule_integral(&QuadratureRule::get(n));
    loop {
        let next = rule_integral(&QuadratureRule::get(2 * n));
        let error = (next - prev).abs();
        if error <= opts.tol {
            return Ok(QuadResult { value: next, error, nodes: 2 * n });
        }
        if 4 * n > opts.n_cap || !next.is_finite() {
            return Err(Error::QuadratureNonconvergence { error, tol: opts.tol });
        }
        prev = next;
        n *= 2;
    }
}

/// Integral of f over S(q).
pub fn integrate(q: f64, opts: QuadOptions, f: impl Fn(f64) -> f64) -> Result<QuadResult> {
    check_q_open(q)?;
    integrate_with(opts, |rule| rule.integrate_support(q, &f))
}

/// Componentwise integrals over S(q) of a vector-valued integrand; `f(x, out)`
/// fills `out` (length `dim`). Doubling stops when every component moves by
/// at most tol * max(1, |value|). Returns the values and the largest scaled
/// change.
pub fn integrate_many(
    q: f64,
    opts: QuadOptions,
    dim: usize,
    f: impl Fn(f64, &mut [f64]),
) -> Result<(Vec<f64>, f64)> {
    check_q_open(q)?;
    if opts.n0 == 0 || opts.n0 * 2 > opts.n_cap {
        return Err(invalid("quadrature schedule needs 0 < 2 n0 <= n_cap"));
    }
    let a = 2.0 / (1.0 - q).sqrt();
    let run = |rule: &QuadratureRule| {
        let mut acc = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for (&t, &w) in rule.theta.iter().zip(&rule.weights) {
            f(a * t.cos(), &mut buf);
            let jw = w * a * t.sin();
            for (s, v) in acc.iter_mut().zip(&buf) {
                *s += jw * v;
            }
        }
        acc
    };
    let mut n = opts.n0;
    let mut prev = run(&QuadratureRule::get(n));
    loop {
        let next = run(&QuadratureRule::get(2 * n));
        let error = prev
            .iter()
            .zip(&next)
            .map(|(p, v)| (v - p).abs() / v.abs().max(1.0))
            .fold(0.0, f64::max);
        if error <= opts.tol {
            return Ok((next, error));
        }
        if 4 * n > opts.n_cap || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::QuadratureNonconvergence { error, tol: opts.tol });
        }
        prev = next;
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn semicircle_second_moment() {
        let r = integrate(0.0, QuadOptions::default(), |x| x * x * (4.0 - x * x).sqrt() / (2.0 * PI)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_powers_converge() {
        let rule = QuadratureRule::get(32);
        // integral of cos^{2m} over [0, pi] = pi (2m-1)!!/(2m)!!
        let v = rule.integrate_theta(|t| t.cos().powi(10));
        let exact = PI * (9.0 * 7.0 * 5.0 * 3.0) / (10.0 * 8.0 * 6.0 * 4.0 * 2.0);
        assert!((v - exact).abs() < 1e-14);
    }

    #[test]
    fn reports_nonconvergence() {
        let opts = QuadOptions { n0: 4, n_cap: 16, tol: 1e-14 };
        let r = integrate(0.0, opts, |x| (40.0 * x).sin().abs());
        assert!(matches!(r, Err(Error::QuadratureNonconvergence { .. })));
    }
}
