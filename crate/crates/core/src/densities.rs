//! The six densities on S(q): q-Normal, conditional q-Normal, Rogers
//! (q-ultraspherical), semicircle, arcsine and Kesten-McKay.
//!
//! Infinite products are accumulated in log space by
//! [`crate::qcore::infinite_product`]; every value carries an error bound.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::qcore::{check_q_closed, check_q_open, infinite_product, ProductValue, DEFAULT_TRUNC_EPS};
use crate::quadrature::{integrate, QuadOptions};

/// Bound on |factor - 1| / |q|^k for every product below (x, y in S(q)).
const FACTOR_AMP: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "density", rename_all = "snake_case")]
pub enum DensityKind {
    /// q-Normal f_N(x|q).
    N { q: f64 },
    /// Conditional q-Normal f_CN(x|y,rho,q).
    CN { y: f64, rho: f64, q: f64 },
    /// Rogers density f_R(x|beta,q).
    R { beta: f64, q: f64 },
    /// Semicircle f_U(x|q).
    U { q: f64 },
    /// Arcsine f_T(x|q).
    T { q: f64 },
    /// Kesten-McKay f_K(x|y,rho,q).
    K { y: f64, rho: f64, q: f64 },
}

/// A density with its truncation policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityId {
    pub kind: DensityKind,
    pub trunc_eps: f64,
}

/// A density value with a bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityValue {
    pub value: f64,
    pub error: f64,
}

impl DensityValue {
    fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

impl DensityId {
    pub fn new(kind: DensityKind) -> Self {
        Self { kind, trunc_eps: DEFAULT_TRUNC_EPS }
    }
    pub fn n(q: f64) -> Self {
        Self::new(DensityKind::N { q })
    }
    pub fn cn(y: f64, rho: f64, q: f64) -> Self {
        Self::new(DensityKind::CN { y, rho, q })
    }
    pub fn r(beta: f64, q: f64) -> Self {
        Self::new(DensityKind::R { beta, q })
    }
    pub fn u(q: f64) -> Self {
        Self::new(DensityKind::U { q })
    }
    pub fn t(q: f64) -> Self {
        Self::new(DensityKind::T { q })
    }
    pub fn k(y: f64, rho: f64, q: f64) -> Self {
        Self::new(DensityKind::K { y, rho, q })
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.trunc_eps = eps;
        self
    }

    pub fn q(&self) -> f64 {
        match self.kind {
            DensityKind::N { q }
            | DensityKind::CN { q, .. }
            | DensityKind::R { q, .. }
            | DensityKind::U { q }
            | DensityKind::T { q }
            | DensityKind::K { q, .. } => q,
        }
    }

    /// Checks parameter ranges. q = 1 is admitted for f_N and f_CN (Gaussian
    /// limits); beta = 1 for f_R (arcsine limit).
    pub fn validate(&self) -> Result<()> {
        if !(self.trunc_eps > 0.0) {
            return Err(invalid("trunc_eps must be positive"));
        }
        let unit = |name: &str, v: f64| {
            if v.is_finite() && v.abs() < 1.0 {
                Ok(())
            } else {
                Err(invalid(format!("|{name}| < 1 required, got {v}")))
            }
        };
        match self.kind {
            DensityKind::N { q } => check_q_closed(q),
            DensityKind::CN { y, rho, q } => {
                check_q_closed(q)?;
                unit("rho", rho)?;
                check_y(y, q)
            }
            DensityKind::R { beta, q } => {
                check_q_open(q)?;
                if beta == 1.0 {
                    Ok(())
                } else {
                    unit("beta", beta)
                }
            }
            DensityKind::U { q } | DensityKind::T { q } => check_q_open(q),
            DensityKind::K { y, rho, q } => {
                check_q_open(q)?;
                unit("rho", rho)?;
                check_y(y, q)
            }
        }
    }

    /// Half-width 2/sqrt(1-q) of the support (infinite at q = 1).
    pub fn support_radius(&self) -> f64 {
        let q = self.q();
        if q == 1.0 {
            f64::INFINITY
        } else {
            2.0 / (1.0 - q).sqrt()
        }
    }

    /// Density value at x; zero outside S(q). f_T returns +inf at the edges.
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.eval_with_error(x)?.value)
    }

    pub fn eval_with_error(&self, x: f64) -> Result<DensityValue> {
        self.validate()?;
        if !x.is_finite() {
            return Err(invalid("x must be finite"));
        }
        let q = self.q();
        if q == 1.0 {
            return Ok(DensityValue::exact(match self.kind {
                DensityKind::N { .. } => gaussian(x, 0.0, 1.0),
                DensityKind::CN { y, rho, .. } => gaussian(x, rho * y, 1.0 - rho * rho),
                _ => unreachable!("validated"),
            }));
        }
        let s = (1.0 - q).sqrt();
        let edge = (2.0 - s * x) * (2.0 + s * x);
        if edge < 0.0 {
            return Ok(DensityValue::exact(0.0));
        }
        if edge == 0.0 {
            let v = if matches!(self.kind, DensityKind::T { .. }) { f64::INFINITY } else { 0.0 };
            return Ok(DensityValue::exact(v));
        }
        let root = edge.sqrt();
        let eps = self.trunc_eps;
        let value = match self.kind {
            DensityKind::U { .. } => DensityValue::exact(s * root / (2.0 * PI)),
            DensityKind::T { .. } => DensityValue::exact(s / (PI * root)),
            DensityKind::K { y, rho, .. } => {
                let r2 = 1.0 - rho * rho;
                let den = r2 * r2 - rho * s * s * (1.0 + rho * rho) * x * y
                    + s * s * rho * rho * (x * x + y * y);
                DensityValue::exact(r2 * s * root / (2.0 * PI * den))
            }
            DensityKind::N { q } => {
                let p = n_product(x, q, eps)?;
                scaled(p, s * root / (2.0 * PI))
            }
            DensityKind::CN { y, rho, q } => {
                let p = n_product(x, q, eps)?.mul(cn_over_n_product(x, y, rho, q, eps)?);
                scaled(p, s * root / (2.0 * PI))
            }
            DensityKind::R { beta, q } => {
                if beta == 1.0 {
                    return DensityId::t(q).eval_with_error(x);
                }
                let p = n_product(x, q, eps)?.mul(r_over_n_product(x, beta, q, eps)?);
                scaled(p, s * root / (2.0 * PI))
            }
        };
        Ok(value)
    }

    /// |integral over S(q) - 1|.
    pub fn normalize_check(&self, opts: QuadOptions) -> Result<f64> {
        self.validate()?;
        let q = self.q();
        if q == 1.0 {
            return Err(invalid("normalization is checked on S(q) with q < 1"));
        }
        let r = integrate(q, opts, |x| self.eval(x).unwrap_or(f64::NAN))?;
        Ok((r.value - 1.0).abs())
    }
}

fn check_y(y: f64, q: f64) -> Result<()> {
    if q < 1.0 && y.abs() > 2.0 / (1.0 - q).sqrt() || !y.is_finite() {
        return Err(Error::SupportViolation(format!("y = {y} outside S({q})")));
    }
    Ok(())
}

fn gaussian(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

fn scaled(p: ProductValue, c: f64) -> DensityValue {
    DensityValue { value: c * p.value, error: c * p.abs_error() }
}

/// (q)_inf prod_{k>=1} ((1+q^k)^2 - (1-q) x^2 q^k).
fn n_product(x: f64, q: f64, eps: f64) -> Result<ProductValue> {
    let s2x2 = (1.0 - q) * x * x;
    infinite_product(1, FACTOR_AMP, q, eps, |k| {
        let qk = q.powi(k as i32);
        (1.0 - qk) * ((1.0 + qk) * (1.0 + qk) - s2x2 * qk)
    })
}

/// The k-th denominator factor of the conditional density.
fn cn_factor(k: usize, x: f64, y: f64, rho: f64, q: f64) -> f64 {
    let s2 = 1.0 - q;
    let qk = q.powi(k as i32);
    let q2k = qk * qk;
    let a = 1.0 - rho * rho * q2k;
    a * a - s2 * rho * qk * (1.0 + rho * rho * q2k) * x * y + s2 * rho * rho * (x * x + y * y) * q2k
}

/// f_CN/f_N = prod_{k>=0} (1 - rho^2 q^k)/D_k, the Poisson-Mehler kernel.
fn cn_over_n_product(x: f64, y: f64, rho: f64, q: f64, eps: f64) -> Result<ProductValue> {
    infinite_product(0, FACTOR_AMP, q, eps, |k| {
        (1.0 - rho * rho * q.powi(k as i32)) / cn_factor(k, x, y, rho, q)
    })
}

/// f_R/f_N = prod_{k>=0} (1 - beta^2 q^k)/((1 - beta q^k)(1 - beta q^{k+1}) M_k).
fn r_over_n_product(x: f64, beta: f64, q: f64, eps: f64) -> Result<ProductValue> {
    let s2x2 = (1.0 - q) * x * x;
    infinite_product(0, FACTOR_AMP, q, eps, |k| {
        let qk = q.powi(k as i32);
        let m = (1.0 + beta * qk) * (1.0 + beta * qk) - s2x2 * beta * qk;
        (1.0 - beta * beta * qk) / ((1.0 - beta * qk) * (1.0 - beta * qk * q) * m)
    })
}

/// num(x)/den(x). Uses one merged product for f_CN/f_N, f_R/f_N, f_CN/f_R
/// and their reciprocals; otherwise divides the two evaluations.
pub fn density_ratio(num: &DensityId, den: &DensityId, x: f64) -> Result<DensityValue> {
    num.validate()?;
    den.validate()?;
    let eps = num.trunc_eps.min(den.trunc_eps);
    let same_q = num.q() == den.q() && num.q() < 1.0;
    let r = (num.support_radius() * den.support_radius()).sqrt();
    let interior = x.abs() < r;
    let merged = |p: ProductValue| DensityValue { value: p.value, error: p.abs_error() };
    use DensityKind::*;
    if same_q && interior {
        let q = num.q();
        match (num.kind, den.kind) {
            (N { .. }, N { .. }) => return Ok(DensityValue::exact(1.0)),
            (CN { y, rho, .. }, N { .. }) => return Ok(merged(cn_over_n_product(x, y, rho, q, eps)?)),
            (N { .. }, CN { y, rho, .. }) => {
                return Ok(merged(cn_over_n_product(x, y, rho, q, eps)?.recip()))
            }
            (R { beta, .. }, N { .. }) if beta < 1.0 => {
                return Ok(merged(r_over_n_product(x, beta, q, eps)?))
            }
            (N { .. }, R { beta, .. }) if beta < 1.0 => {
                return Ok(merged(r_over_n_product(x, beta, q, eps)?.recip()))
            }
            (CN { y, rho, .. }, R { beta, .. }) if beta < 1.0 => {
                let p = cn_over_n_product(x, y, rho, q, eps)?
                    .mul(r_over_n_product(x, beta, q, eps)?.recip());
                return Ok(merged(p));
            }
            _ => {}
        }
    }
    let d = den.eval_with_error(x)?;
    if !(d.value > 0.0) || !d.value.is_finite() {
        return Err(Error::DivisionAtBoundary(x));
    }
    let n = num.eval_with_error(x)?;
    let value = n.value / d.value;
    let error = n.error / d.value + value.abs() * d.error / d.value;
    Ok(DensityValue { value, error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semicircle_at_q_zero() {
        for i in 0..=20 {
            let x = -1.9 + 0.19 * i as f64;
            let v = DensityId::n(0.0).eval(x).unwrap();
            assert!((v - (4.0 - x * x).sqrt() / (2.0 * PI)).abs() < 1e-15);
        }
    }

    #[test]
    fn kesten_at_origin() {
        let rho: f64 = 0.6;
        let v = DensityId::k(0.0, rho, 0.0).eval(0.0).unwrap();
        assert!((v - 1.0 / (PI * (1.0 - rho * rho))).abs() < 1e-15);
    }

    #[test]
    fn zero_correlation_conditional_is_q_normal() {
        for q in [-0.5, 0.3, 0.7] {
            for i in 0..=10 {
                let x = (i as f64 - 5.0) / 3.0;
                let a = DensityId::cn(0.4, 0.0, q).eval(x).unwrap();
                let b = DensityId::n(q).eval(x).unwrap();
                assert!((a - b).abs() <= 1e-14 * b.max(1.0));
            }
        }
    }

    #[test]
    fn outside_support_and_edges() {
        let d = DensityId::n(0.5);
        let edge = d.support_radius();
        assert_eq!(d.eval(edge + 1e-9).unwrap(), 0.0);
        assert_eq!(d.eval(edge).unwrap(), 0.0);
        assert_eq!(DensityId::t(0.5).eval(-edge).unwrap(), f64::INFINITY);
        assert!(matches!(DensityId::cn(5.0, 0.3, 0.5).eval(0.0), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn gaussian_limits() {
        let v = DensityId::n(1.0).eval(0.3).unwrap();
        assert!((v - (-0.045f64).exp() / (2.0 * PI).sqrt()).abs() < 1e-15);
        let v = DensityId::cn(1.0, 0.5, 1.0).eval(0.3).unwrap();
        assert!((v - gaussian(0.3, 0.5, 0.75)).abs() < 1e-15);
    }

    #[test]
    fn conditional_on_diagonal_over_rogers() {
        for q in [-0.5, 0.3, 0.7] {
            for rho in [0.2, -0.6] {
                for i in 1..10 {
                    let x = DensityId::n(q).support_radius() * (i as f64 / 5.0 - 1.0);
                    let r = density_ratio(&DensityId::cn(x, rho, q), &DensityId::r(rho, q), x).unwrap();
                    assert!((r.value - 1.0 / (1.0 - rho)).abs() < 1e-12, "q={q} rho={rho} x={x}");
                }
            }
        }
    }

    #[test]
    fn rogers_at_one_is_arcsine() {
        let d = DensityId::r(1.0, 0.3);
        let near = DensityId::r(1.0 - 1e-9, 0.3);
        for x in [-1.5, 0.0, 0.7, 2.0] {
            let t = DensityId::t(0.3).eval(x).unwrap();
            assert_eq!(d.eval(x).unwrap(), t);
            assert!((near.eval(x).unwrap() - t).abs() < 1e-7 * t);
        }
    }

    #[test]
    fn products_truncate_within_cap_for_q_near_one() {
        let d = DensityId::cn(0.5, 0.8, 0.95);
        let v = d.eval_with_error(0.4).unwrap();
        assert!(v.value > 0.0 && v.error < 1e-12);
    }
}
