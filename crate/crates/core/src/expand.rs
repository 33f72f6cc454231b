//! Density expansions target(x) = base(x) * sum_n c_n a_n(x), where a_n are
//! orthogonal under the base density, and the q-series identities that
//! follow from them.
//!
//! Coefficients are kept on the monic "hat" basis of each expansion (the
//! basis family returned by [`ExpansionId::basis`]). For the expansions
//! written over U_n(x s/2) or k_n(x s|y s, rho), s = sqrt(1-q), the published
//! coefficient is c_n = c-hat_n / s^n; [`ExpansionId::coeff`] returns that form.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::connect::oracle_connection;
use crate::densities::DensityId;
use crate::error::{invalid, Error, Result};
use crate::polyfam::{max_bounds, Family};
use crate::qcore::{
    infinite_product, q_factorial, q_pochhammer, q_pochhammer_inf, ProductValue, QBinomialTable,
};
use crate::scalar::{Rational, Scalar};
use crate::verify::VerificationReport;

/// Largest truncation order tried by the adaptive rule.
pub const K_CAP: usize = 500;
/// Default bound on the neglected part of the series sum.
pub const DEFAULT_SERIES_TOL: f64 = 1e-13;
/// Order cap for the Gaussian (q = 1) expansions, where n! enters in floats.
const CLASSICAL_CAP: usize = 160;

/// The expansions in scope, with their parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "expansion", rename_all = "snake_case")]
pub enum ExpansionId<T> {
    /// f_N over f_U: (-1)^k q^{k(k+1)/2} on U_{2k}(x s/2).
    NOverU { q: T },
    /// f_U over f_N: q^k (1-q)^{k+1}/((q)_k (q)_{k+1}) on H_{2k}.
    UOverN { q: T },
    /// Poisson-Mehler kernel f_CN/f_N: rho^n H_n(y)/[n]! on H_n.
    CnOverN { y: T, rho: T, q: T },
    /// Reciprocal kernel f_N/f_CN: rho^n B_n(y)/((rho^2)_n [n]!) on P_n. At
    /// q = 1 this is the inverted Mehler formula, admitted for rho^2 < 1/2.
    NOverCn { y: T, rho: T, q: T },
    /// f_R over f_N: beta^k/([k]! (beta q)_k) on H_{2k}.
    ROverN { beta: T, q: T },
    /// f_N over f_R(gamma).
    NOverR { gamma: T, q: T },
    /// f_CN over f_K: beta_n on k_n(x s|y s, rho).
    CnOverK { y: T, rho: T, q: T },
    /// f_CN over f_U: gamma_n on U_n(x s/2).
    CnOverU { y: T, rho: T, q: T },
    /// Classical Mehler formula: rho^n He_n(y)/n! on He_n.
    MehlerClassical { y: T, rho: T },
    /// Kesten-McKay over semicircle at q = 0: rho^n U_n(y/2) on U_n(x/2).
    PmQ0 { y: T, rho: T },
}

pub const EXPANSION_NAMES: [&str; 10] = [
    "n-over-u",
    "u-over-n",
    "cn-over-n",
    "n-over-cn",
    "r-over-n",
    "n-over-r",
    "cn-over-k",
    "cn-over-u",
    "mehler",
    "pm-q0",
];

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v.abs() < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("|{name}| < 1 required, got {v}")))
    }
}

fn check_y_in_support(y: f64, q: f64) -> Result<()> {
    if !y.is_finite() || (q < 1.0 && y.abs() > 2.0 / (1.0 - q).sqrt()) {
        return Err(Error::SupportViolation(format!("y = {y} outside S({q})")));
    }
    Ok(())
}

impl<T: Scalar> ExpansionId<T> {
    pub fn name(&self) -> &'static str {
        let i = match self {
            ExpansionId::NOverU { .. } => 0,
            ExpansionId::UOverN { .. } => 1,
            ExpansionId::CnOverN { .. } => 2,
            ExpansionId::NOverCn { .. } => 3,
            ExpansionId::ROverN { .. } => 4,
            ExpansionId::NOverR { .. } => 5,
            ExpansionId::CnOverK { .. } => 6,
            ExpansionId::CnOverU { .. } => 7,
            ExpansionId::MehlerClassical { .. } => 8,
            ExpansionId::PmQ0 { .. } => 9,
        };
        EXPANSION_NAMES[i]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> ExpansionId<U> {
        use ExpansionId::*;
        match self {
            NOverU { q } => NOverU { q: f(q) },
            UOverN { q } => UOverN { q: f(q) },
            CnOverN { y, rho, q } => CnOverN { y: f(y), rho: f(rho), q: f(q) },
            NOverCn { y, rho, q } => NOverCn { y: f(y), rho: f(rho), q: f(q) },
            ROverN { beta, q } => ROverN { beta: f(beta), q: f(q) },
            NOverR { gamma, q } => NOverR { gamma: f(gamma), q: f(q) },
            CnOverK { y, rho, q } => CnOverK { y: f(y), rho: f(rho), q: f(q) },
            CnOverU { y, rho, q } => CnOverU { y: f(y), rho: f(rho), q: f(q) },
            MehlerClassical { y, rho } => MehlerClassical { y: f(y), rho: f(rho) },
            PmQ0 { y, rho } => PmQ0 { y: f(y), rho: f(rho) },
        }
    }

    pub fn to_f64(&self) -> ExpansionId<f64> {
        self.map(|v| v.to_f64())
    }

    /// q of the expansion (0 for the Kesten-McKay kernel, 1 for Mehler).
    pub fn q(&self) -> f64 {
        use ExpansionId::*;
        match self {
            NOverU { q }
            | UOverN { q }
            | CnOverN { q, .. }
            | NOverCn { q, .. }
            | ROverN { q, .. }
            | NOverR { q, .. }
            | CnOverK { q, .. }
            | CnOverU { q, .. } => q.to_f64(),
            MehlerClassical { .. } => 1.0,
            PmQ0 { .. } => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        use ExpansionId::*;
        let f = |v: &T| v.to_f64();
        let q = self.q();
        match self {
            NOverCn { y, rho, .. } => {
                crate::qcore::check_q_closed(q)?;
                check_unit("rho", f(rho))?;
                if q == 1.0 && f(rho) * f(rho) >= 0.5 {
                    return Err(invalid(
                        "the inverted Mehler series converges only for rho^2 < 1/2",
                    ));
                }
                check_y_in_support(f(y), q)
            }
            MehlerClassical { y, rho } => {
                check_unit("rho", f(rho))?;
                check_y_in_support(f(y), 1.0)
            }
            PmQ0 { y, rho } => {
                check_unit("rho", f(rho))?;
                check_y_in_support(f(y), 0.0)
            }
            _ => {
                crate::qcore::check_q_open(q)?;
                match self {
                    ROverN { beta, .. } => check_unit("beta", f(beta)),
                    NOverR { gamma, .. } => check_unit("gamma", f(gamma)),
                    CnOverN { y, rho, .. } | CnOverK { y, rho, .. } | CnOverU { y, rho, .. } => {
                        check_unit("rho", f(rho))?;
                        check_y_in_support(f(y), q)
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    /// Monic family a_n, orthogonal under the base density, that carries the
    /// hat coefficients.
    pub fn basis(&self) -> Family<T> {
        use ExpansionId::*;
        match self.clone() {
            NOverU { q } | CnOverU { q, .. } => Family::ChebUHat { q },
            UOverN { q } | CnOverN { q, .. } | ROverN { q, .. } => Family::QHermite { q },
            NOverCn { y, rho, q } => Family::Asc { y, rho, q },
            NOverR { gamma, q } => Family::Rogers { beta: gamma, q },
            CnOverK { y, rho, q } => Family::KestenHat { y, rho, q },
            MehlerClassical { .. } => Family::ClassicalHermite,
            PmQ0 { .. } => Family::ChebUHat { q: T::zero() },
        }
    }

    /// Family orthogonal under the target density.
    pub fn target_family(&self) -> Family<T> {
        use ExpansionId::*;
        match self.clone() {
            NOverU { q } | NOverCn { q, .. } | NOverR { q, .. } => Family::QHermite { q },
            UOverN { q } => Family::ChebUHat { q },
            CnOverN { y, rho, q } | CnOverK { y, rho, q } | CnOverU { y, rho, q } => {
                Family::Asc { y, rho, q }
            }
            ROverN { beta, q } => Family::Rogers { beta, q },
            MehlerClassical { y, rho } => Family::Asc { y, rho, q: T::one() },
            PmQ0 { y, rho } => Family::Kesten { y, rho },
        }
    }

    /// Coefficients c-hat_0..c-hat_{n_max} on the basis family, from the
    /// closed forms. Exact on rationals.
    pub fn hat_coeffs(&self, n_max: usize) -> Result<Vec<T>> {
        self.validate()?;
        use ExpansionId::*;
        let one = T::one;
        let sign = |k: usize| if k.is_multiple_of(2) { T::one() } else { -T::one() };
        let mut c = vec![T::zero(); n_max + 1];
        match self {
            NOverU { q } => {
                let s2 = one() - q.clone();
                for k in 0..=n_max / 2 {
                    let ki = k as i64;
                    c[2 * k] = sign(k) * q.powi(ki * (ki + 1) / 2) * s2.powi(ki);
                }
            }
            UOverN { q } => {
                let s2 = one() - q.clone();
                for k in 0..=n_max / 2 {
                    let ki = k as i64;
                    c[2 * k] = q.powi(ki) * s2.powi(ki + 1)
                        / (q_pochhammer(q, q, k) * q_pochhammer(q, q, k + 1));
                }
            }
            CnOverN { y, rho, q } => {
                let h = Family::QHermite { q: q.clone() }.recurrence_values(n_max, y);
                let mut fact = one();
                for n in 0..=n_max {
                    if n > 0 {
                        fact = fact * crate::qcore::q_bracket(n, q);
                    }
                    c[n] = rho.powi(n as i64) * h[n].clone() / fact.clone();
                }
            }
            NOverCn { y, rho, q } => {
                let b = Family::BigB { q: q.clone() }.recurrence_values(n_max, y);
                let r2 = rho.clone() * rho.clone();
                let mut den = one();
                for n in 0..=n_max {
                    if n > 0 {
                        let qn = q.powi(n as i64 - 1);
                        den = den * (one() - r2.clone() * qn) * crate::qcore::q_bracket(n, q);
                    }
                    c[n] = rho.powi(n as i64) * b[n].clone() / den.clone();
                }
            }
            ROverN { beta, q } => {
                let bq = beta.clone() * q.clone();
                for k in 0..=n_max / 2 {
                    c[2 * k] = beta.powi(k as i64) / (q_factorial(k, q) * q_pochhammer(&bq, q, k));
                }
            }
            NOverR { gamma, q } => {
                let g2 = gamma.clone() * gamma.clone();
                for k in 0..=n_max / 2 {
                    let ki = k as i64;
                    let num = (-gamma.clone()).powi(ki)
                        * q.powi(ki * (ki - 1) / 2)
                        * q_pochhammer(gamma, q, k)
                        * (one() - gamma.clone() * q.powi(2 * ki));
                    let den = (one() - gamma.clone()) * q_factorial(k, q) * q_pochhammer(&g2, q, 2 * k);
                    c[2 * k] = num / den;
                }
            }
            CnOverK { y, rho, q } => {
                let h = Family::QHermite { q: q.clone() }.recurrence_values(n_max, y);
                let t = QBinomialTable::new(n_max, q);
                let s2 = one() - q.clone();
                c[0] = one();
                for (n, slot) in c.iter_mut().enumerate().skip(1) {
                    let ni = n as i64;
                    *slot = (1..=n / 2).fold(T::zero(), |acc, j| {
                        let ji = j as i64;
                        let v = s2.powi(ni - ji)
                            * q.powi(ni + ji * (ji - 3) / 2)
                            * t.get(ni - 1 - ji, ni - 2 * ji)
                            * rho.powi(ni - 2 * ji)
                            * h[n - 2 * j].clone();
                        acc + sign(j) * v
                    });
                }
            }
            CnOverU { y, rho, q } => {
                let h = Family::QHermite { q: q.clone() }.recurrence_values(n_max, y);
                let t = QBinomialTable::new(n_max, q);
                let s2 = one() - q.clone();
                for (n, slot) in c.iter_mut().enumerate() {
                    let ni = n as i64;
                    *slot = (0..=n / 2).fold(T::zero(), |acc, j| {
                        let ji = j as i64;
                        let v = s2.powi(ni - ji)
                            * q.powi(ji * (ji + 1) / 2)
                            * t.get(ni - ji, ni - 2 * ji)
                            * rho.powi(ni - 2 * ji)
                            * h[n - 2 * j].clone();
                        acc + sign(j) * v
                    });
                }
            }
            MehlerClassical { y, rho } => {
                let he = Family::<T>::ClassicalHermite.recurrence_values(n_max, y);
                let mut fact = one();
                for n in 0..=n_max {
                    if n > 0 {
                        fact = fact * T::from_i64(n as i64);
                    }
                    c[n] = rho.powi(n as i64) * he[n].clone() / fact.clone();
                }
            }
            PmQ0 { y, rho } => {
                let u = Family::<T>::ChebU.recurrence_values(n_max, &(y.clone() / T::from_i64(2)));
                for n in 0..=n_max {
                    c[n] = rho.powi(n as i64) * u[n].clone();
                }
            }
        }
        Ok(c)
    }

    /// Ratio between the published basis and the hat basis at degree n:
    /// s^n for expansions over U_n(x s/2) and k_n(x s|y s, rho), else 1.
    pub fn paper_scale(&self, n: usize) -> f64 {
        match self {
            ExpansionId::NOverU { .. } | ExpansionId::CnOverU { .. } | ExpansionId::CnOverK { .. } => {
                (1.0 - self.q()).sqrt().powi(n as i32)
            }
            _ => 1.0,
        }
    }

    /// Published coefficient c_n.
    pub fn coeff(&self, n: usize) -> Result<f64> {
        let c = self.hat_coeffs(n)?;
        Ok(c[n].to_f64() / self.paper_scale(n))
    }
}

impl ExpansionId<f64> {
    pub fn base(&self) -> DensityId {
        use ExpansionId::*;
        match *self {
            NOverU { q } | CnOverU { q, .. } => DensityId::u(q),
            UOverN { q } | CnOverN { q, .. } | ROverN { q, .. } => DensityId::n(q),
            NOverCn { y, rho, q } => DensityId::cn(y, rho, q),
            NOverR { gamma, q } => DensityId::r(gamma, q),
            CnOverK { y, rho, q } => DensityId::k(y, rho, q),
            MehlerClassical { .. } => DensityId::n(1.0),
            PmQ0 { .. } => DensityId::u(0.0),
        }
    }

    pub fn target(&self) -> DensityId {
        use ExpansionId::*;
        match *self {
            NOverU { q } | NOverCn { q, .. } | NOverR { q, .. } => DensityId::n(q),
            UOverN { q } => DensityId::u(q),
            CnOverN { y, rho, q } | CnOverK { y, rho, q } | CnOverU { y, rho, q } => {
                DensityId::cn(y, rho, q)
            }
            ROverN { beta, q } => DensityId::r(beta, q),
            MehlerClassical { y, rho } => DensityId::cn(y, rho, 1.0),
            PmQ0 { y, rho } => DensityId::k(y, rho, 0.0),
        }
    }
}

/// c-hat_n * a-hat_n against gamma_{0,n} of the exact connection between
/// the basis family and the target family, for n <= n_max. Returns the
/// first degree where they differ.
pub fn coefficient_consistency(id: &ExpansionId<Rational>, n_max: usize) -> Result<Option<usize>> {
    let c = id.hat_coeffs(n_max)?;
    let basis = id.basis();
    let gamma = oracle_connection(&basis, &id.target_family(), n_max)?;
    for (n, cn) in c.iter().enumerate() {
        if cn.clone() * basis.norm(n)? != gamma.get(0, n) {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Truncation policy of an expansion evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionSpec {
    pub id: ExpansionId<f64>,
    /// Bound on the neglected part of sum_n c_n a_n(x).
    pub tol: f64,
    pub k_max: usize,
    /// Fixed truncation order; adaptive when `None`.
    pub fixed_k: Option<usize>,
}

impl ExpansionSpec {
    pub fn new(id: ExpansionId<f64>) -> Self {
        Self { id, tol: DEFAULT_SERIES_TOL, k_max: K_CAP, fixed_k: None }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.fixed_k = Some(k);
        self
    }
}

/// One evaluation of an expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionValue {
    /// base(x) * partial sum.
    pub value: f64,
    pub base: f64,
    pub partial_sum: f64,
    /// Truncation order used.
    pub k: usize,
    /// Estimate of the neglected part of the sum (not multiplied by base).
    pub tail: f64,
}

/// An expansion with its coefficients prepared for repeated evaluation.
///
/// When the basis has a uniform bound on S(q) the order K is chosen once:
/// the smallest K with |c_n| max|a_n| summed over n = K-2..K below `tol`.
/// Otherwise (q = 1 expansions) the same rule runs pointwise on |c_n a_n(x)|.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub spec: ExpansionSpec,
    basis: Family<f64>,
    coeffs: Vec<f64>,
    /// (K, tail) when chosen uniformly.
    uniform: Option<(usize, f64)>,
}

/// Smallest K >= 2 with t_{K-2} + t_{K-1} + t_K <= tol.
fn first_small_window(t: &[f64], tol: f64) -> Option<(usize, f64)> {
    (2..t.len()).find_map(|k| {
        let tail = t[k - 2] + t[k - 1] + t[k];
        (tail <= tol).then_some((k, tail))
    })
}

impl Expansion {
    pub fn new(spec: ExpansionSpec) -> Result<Self> {
        spec.id.validate()?;
        if !(spec.tol > 0.0) {
            return Err(invalid("series tolerance must be positive"));
        }
        let basis = spec.id.basis();
        let cap = if spec.id.q() == 1.0 { spec.k_max.min(CLASSICAL_CAP) } else { spec.k_max };
        let has_bounds = spec.id.q() < 1.0;
        if let Some(k) = spec.fixed_k {
            let coeffs = spec.id.hat_coeffs(k)?;
            let tail = if has_bounds {
                let b = max_bounds(&basis, k)?;
                coeffs.iter().zip(&b).rev().take(3).map(|(c, m)| c.abs() * m).sum()
            } else {
                f64::NAN
            };
            return Ok(Self { spec, basis, coeffs, uniform: Some((k, tail)) });
        }
        if !has_bounds {
            let coeffs = spec.id.hat_coeffs(cap)?;
            return Ok(Self { spec, basis, coeffs, uniform: None });
        }
        let mut n = 32.min(cap);
        loop {
            let coeffs = spec.id.hat_coeffs(n)?;
            let b = max_bounds(&basis, n)?;
            let t: Vec<f64> = coeffs.iter().zip(&b).map(|(c, m)| c.abs() * m).collect();
            if let Some((k, tail)) = first_small_window(&t, spec.tol) {
                let mut coeffs = coeffs;
                coeffs.truncate(k + 1);
                return Ok(Self { spec, basis, coeffs, uniform: Some((k, tail)) });
            }
            if n >= cap {
                let tail = t.iter().rev().take(3).sum::<f64>();
                return Err(Error::TruncationUnreliable { bound: tail, tol: spec.tol, k: n });
            }
            n = (2 * n).min(cap);
        }
    }

    /// Hat coefficients in use.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Partial sum sum_{n<=K} c-hat_n a_n(x), with K and the tail estimate.
    pub fn partial_sum(&self, x: f64) -> Result<(f64, usize, f64)> {
        let q = self.spec.id.q();
        if !x.is_finite() || (q < 1.0 && x.abs() > 2.0 / (1.0 - q).sqrt() * (1.0 + 1e-12)) {
            return Err(Error::SupportViolation(format!("x = {x} outside S({q})")));
        }
        match self.uniform {
            Some((k, tail)) => {
                let a = self.basis.eval_all(k, &x)?;
                let s = self.coeffs.iter().zip(&a).map(|(c, v)| c * v).sum();
                Ok((s, k, tail))
            }
            None => {
                let k_max = self.coeffs.len() - 1;
                let a = self.basis.eval_all(k_max, &x)?;
                let terms: Vec<f64> = self.coeffs.iter().zip(&a).map(|(c, v)| c * v).collect();
                let abs: Vec<f64> = terms.iter().map(|t| t.abs()).collect();
                let (k, tail) = first_small_window(&abs, self.spec.tol).ok_or_else(|| {
                    Error::TruncationUnreliable {
                        bound: abs.iter().rev().take(3).sum(),
                        tol: self.spec.tol,
                        k: k_max,
                    }
                })?;
                Ok((terms[..=k].iter().sum(), k, tail))
            }
        }
    }

    /// base(x) times the partial sum.
    pub fn eval(&self, x: f64) -> Result<ExpansionValue> {
        let (partial_sum, k, tail) = self.partial_sum(x)?;
        let base = self.spec.id.base().eval(x)?;
        Ok(ExpansionValue { value: base * partial_sum, base, partial_sum, k, tail })
    }
}

/// One-shot evaluation of an expansion at x.
pub fn expansion_eval(spec: &ExpansionSpec, x: f64) -> Result<ExpansionValue> {
    Expansion::new(spec.clone())?.eval(x)
}

/// Parameter grid of the identity suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityConfig {
    pub qs: Vec<f64>,
    pub rhos: Vec<f64>,
    /// Relative positions in S(q) at which x-dependent identities are checked.
    pub x_fractions: Vec<f64>,
    pub tol: f64,
    /// Tolerance of the reciprocity check (i8).
    pub reciprocity_tol: f64,
    /// (q, rho) pairs for the reciprocity check.
    pub reciprocity: Vec<(f64, f64)>,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            qs: vec![0.2, 0.5, 0.8],
            rhos: vec![0.3, 0.6],
            x_fractions: vec![-1.0, -0.7, -0.3, 0.0, 0.4, 0.8, 1.0],
            tol: 1e-10,
            reciprocity_tol: 1e-6,
            reciprocity: vec![(0.3, 0.4)],
        }
    }
}

const PRODUCT_EPS: f64 = 1e-16;
const SERIES_CAP: usize = 2000;

/// sum_{n>=0} term(n), stopped once three consecutive terms fall below
/// 1e-17 max(1, |sum|).
fn series(mut term: impl FnMut(usize) -> f64) -> Result<f64> {
    let mut acc = 0.0;
    let mut small = 0;
    for n in 0..SERIES_CAP {
        let t = term(n);
        acc += t;
        if t.abs() <= 1e-17 * acc.abs().max(1.0) {
            small += 1;
            if small >= 3 && n >= 4 {
                return Ok(acc);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::TruncationUnreliable { bound: f64::NAN, tol: 1e-17, k: SERIES_CAP })
}

fn product(start: usize, q: f64, factor: impl Fn(usize) -> f64) -> Result<ProductValue> {
    infinite_product(start, 64.0, q, PRODUCT_EPS, factor)
}

fn poch_inf(a: f64, q: f64) -> Result<f64> {
    Ok(q_pochhammer_inf(a, q, PRODUCT_EPS)?.value)
}

/// H_0(x), ..., H_{n_max}(x) in floats.
fn hermite(n_max: usize, x: f64, q: f64) -> Vec<f64> {
    Family::QHermite { q }.recurrence_values(n_max, &x)
}

/// Terms of a series in H_n(x|q) need the polynomials up to this degree.
const HERMITE_CAP: usize = 1200;

fn i1(q: f64, x: f64) -> Result<(f64, f64)> {
    let s2 = 1.0 - q;
    let lhs = product(1, q, |k| {
        let qk = q.powi(k as i32);
        (1.0 - qk) * ((1.0 + qk) * (1.0 + qk) - s2 * x * x * qk)
    })?
    .value;
    let u = Family::<f64>::ChebU.recurrence_values(2 * HERMITE_CAP, &(x * s2.sqrt() / 2.0));
    let rhs = series(|k| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * q.powf((k * (k + 1)) as f64 / 2.0) * u[2 * k.min(HERMITE_CAP)]
    })?;
    Ok((lhs, rhs))
}

fn i2(q: f64) -> Result<(f64, f64)> {
    let lhs = poch_inf(-q, q)? * poch_inf(q * q, q * q)?;
    let rhs = series(|k| q.powf((k * (k + 1)) as f64 / 2.0))?;
    Ok((lhs, rhs))
}

fn i3(q: f64) -> Result<(f64, f64)> {
    let lhs = poch_inf(q, q)?.powi(3);
    let rhs = series(|k| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * (2 * k + 1) as f64 * q.powf((k * (k + 1)) as f64 / 2.0)
    })?;
    Ok((lhs, rhs))
}

/// 1/prod_{k>=1} ((1+q^k)^2 - (1-q) x^2 q^k) against (q)_inf sum_k c_{2k} H_{2k}(x)
/// with the f_U-over-f_N coefficients.
fn i4(q: f64, x: f64) -> Result<(f64, f64)> {
    let s2 = 1.0 - q;
    let lhs = product(1, q, |k| {
        let qk = q.powi(k as i32);
        1.0 / ((1.0 + qk) * (1.0 + qk) - s2 * x * x * qk)
    })?
    .value;
    let h = hermite(2 * HERMITE_CAP, x, q);
    let mut c = 1.0;
    let series_sum = series(|k| {
        if k > 0 {
            // c_{2k}/c_{2k-2} = q (1-q) / ((1-q^k)(1-q^{k+1}))
            let qk = q.powi(k as i32);
            c *= q * s2 / ((1.0 - qk) * (1.0 - qk * q));
        }
        c * h[2 * k.min(HERMITE_CAP)]
    })?;
    Ok((lhs, poch_inf(q, q)? * series_sum))
}

fn i4_zero(q: f64) -> Result<(f64, f64)> {
    let lhs = 1.0 / (poch_inf(q, q)? * poch_inf(-q, q)?.powi(2));
    let s2 = 1.0 - q;
    // term_k = (-1)^k q^k (1-q)^k [2k-1]!! / ((q)_k (q^2)_k)
    let mut t = 1.0;
    let rhs = series(|k| {
        if k > 0 {
            let qk = q.powi(k as i32);
            let odd = (1.0 - q.powi(2 * k as i32 - 1)) / s2;
            t *= -q * s2 * odd / ((1.0 - qk) * (1.0 - qk * q));
        }
        t
    })?;
    Ok((lhs, rhs))
}

fn i4_boundary(q: f64) -> Result<(f64, f64)> {
    let lhs = poch_inf(q, q)?.powi(-3);
    let n_max = 2 * 400;
    let t = QBinomialTable::new(n_max, &q);
    let mut d = 1.0;
    let rhs = series(|k| {
        if k > 0 {
            let qk = q.powi(k as i32);
            d *= q / ((1.0 - qk) * (1.0 - qk * q));
        }
        d * t.row_sum((2 * k).min(n_max))
    })?;
    Ok((lhs, rhs))
}

/// Poisson-Mehler kernel on the diagonal: product against sum rho^n H_n(x)^2/[n]!.
fn i5(q: f64, rho: f64, x: f64) -> Result<(f64, f64)> {
    let s2 = 1.0 - q;
    let lhs = product(0, q, |k| {
        let rk = rho * q.powi(k as i32);
        (1.0 - rho * rk) / ((1.0 - rk) * (1.0 - rk) * ((1.0 + rk) * (1.0 + rk) - s2 * x * x * rk))
    })?
    .value;
    Ok((lhs, diagonal_kernel(q, rho, x)?))
}

fn diagonal_kernel(q: f64, rho: f64, x: f64) -> Result<f64> {
    let h = hermite(HERMITE_CAP, x, q);
    let mut w = 1.0;
    series(|n| {
        if n > 0 {
            w *= rho / crate::qcore::q_bracket(n, &q);
        }
        w * h[n.min(HERMITE_CAP)] * h[n.min(HERMITE_CAP)]
    })
}

fn i5_boundary(q: f64, rho: f64) -> Result<(f64, f64)> {
    let lhs = poch_inf(rho * rho, q)? / poch_inf(rho, q)?.powi(4);
    let n_max = 600;
    let t = QBinomialTable::new(n_max, &q);
    let mut d = 1.0;
    let rhs = series(|n| {
        if n > 0 {
            d *= rho / (1.0 - q.powi(n as i32));
        }
        let w = t.row_sum(n.min(n_max));
        d * w * w
    })?;
    Ok((lhs, rhs))
}

fn i5_parity(q: f64, rho: f64) -> Result<(f64, f64)> {
    let r2 = rho * rho;
    let lhs = product(0, q * q, |k| {
        let q2k = q.powi(2 * k as i32);
        (1.0 - r2 * q2k * q) / (1.0 - r2 * q2k)
    })?
    .value;
    let mut t = 1.0;
    let rhs = series(|k| {
        if k > 0 {
            t *= r2 * (1.0 - q.powi(2 * k as i32 - 1)) / (1.0 - q.powi(2 * k as i32));
        }
        t
    })?;
    Ok((lhs, rhs))
}

/// (1-rho) sum rho^n H_n(x)^2/[n]! against sum rho^n H_{2n}(x)/([n]! (rho q)_n).
fn i6(q: f64, rho: f64, x: f64) -> Result<(f64, f64)> {
    let lhs = (1.0 - rho) * diagonal_kernel(q, rho, x)?;
    let h = hermite(2 * HERMITE_CAP, x, q);
    let mut w = 1.0;
    let rhs = series(|n| {
        if n > 0 {
            w *= rho / (crate::qcore::q_bracket(n, &q) * (1.0 - rho * q.powi(n as i32)));
        }
        w * h[2 * n.min(HERMITE_CAP)]
    })?;
    Ok((lhs, rhs))
}

/// The three sides of the eta corollary: (eta series, product, gamma series).
fn i7(q: f64, rho: f64, y: f64) -> Result<(f64, f64, f64)> {
    let s2 = 1.0 - q;
    let s = s2.sqrt();
    let q3 = poch_inf(q * q * q, q * q * q)?;
    let h = hermite(HERMITE_CAP, y, q);
    let (mut eta_prev, mut eta) = (0.0, 1.0);
    let mut w = 1.0;
    let eta_series = series(|k| {
        if k > 0 {
            // eta_k = eta_{k-1} - (1 - q^{k-1}) eta_{k-2}
            let next = eta - (1.0 - q.powi(k as i32 - 1)) * eta_prev;
            eta_prev = eta;
            eta = next;
            w *= s * rho / (1.0 - q.powi(k as i32));
        }
        w * h[k.min(HERMITE_CAP)] * eta
    })?;
    let prod = product(0, q, |k| {
        let rk = rho * q.powi(k as i32);
        let r2k = rk * rk;
        (1.0 - rho * rho * q.powi(k as i32))
            / (1.0 - r2k + r2k * r2k - s * rk * y * (1.0 + r2k) + s2 * r2k * y * y)
    })?
    .value;
    let id = ExpansionId::CnOverU { y, rho, q };
    let n_max = 3 * 150 + 1;
    let hat = id.hat_coeffs(n_max)?;
    let gamma = |n: usize| hat[n] / id.paper_scale(n);
    let mut m = 0;
    let gamma_series = series(|_| {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let v = if 3 * m < n_max { sign * (gamma(3 * m) + gamma(3 * m + 1)) } else { 0.0 };
        m += 1;
        v
    })?;
    Ok((q3 * eta_series, q3 * prod, gamma_series))
}

/// Poisson-Mehler partial sum times the reciprocal partial sum.
fn i8(q: f64, rho: f64, x: f64, y: f64) -> Result<f64> {
    let pm = Expansion::new(ExpansionSpec::new(ExpansionId::CnOverN { y, rho, q }))?;
    let inv = Expansion::new(ExpansionSpec::new(ExpansionId::NOverCn { y, rho, q }))?;
    Ok(pm.partial_sum(x)?.0 * inv.partial_sum(x)?.0)
}

type Case = Box<dyn Fn() -> Vec<VerificationReport> + Send + Sync>;

fn report(id: &str, params: serde_json::Value, tol: f64, r: Result<(f64, f64)>) -> VerificationReport {
    match r {
        Ok((lhs, rhs)) => VerificationReport::compare(id, params, lhs, rhs, tol),
        Err(e) => VerificationReport::failed(id, params, &e),
    }
}

/// Residuals of the q-series identities (i1)-(i8) over the configured grid,
/// sorted by check id.
pub fn identity_suite(cfg: &IdentityConfig) -> Vec<VerificationReport> {
    let mut cases: Vec<Case> = Vec::new();
    let tol = cfg.tol;
    for &q in &cfg.qs {
        let a = 2.0 / (1.0 - q).sqrt();
        let xs: Vec<f64> = cfg.x_fractions.iter().map(|f| f * a).collect();
        for &x in &xs {
            cases.push(Box::new(move || {
                let p = json!({"q": q, "x": x});
                vec![
                    report("i1", p.clone(), tol, i1(q, x)),
                    report("i4", p, tol, i4(q, x)),
                ]
            }));
        }
        cases.push(Box::new(move || {
            let p = json!({"q": q});
            vec![
                report("i2", p.clone(), tol, i2(q)),
                report("i3", p.clone(), tol, i3(q)),
                report("i4.x0", p.clone(), tol, i4_zero(q)),
                report("i4.boundary", p, tol, i4_boundary(q)),
            ]
        }));
        for &rho in &cfg.rhos {
            cases.push(Box::new(move || {
                let p = json!({"q": q, "rho": rho});
                vec![
                    report("i5.boundary", p.clone(), tol, i5_boundary(q, rho)),
                    report("i5.parity", p, tol, i5_parity(q, rho)),
                ]
            }));
            for &x in &xs {
                cases.push(Box::new(move || {
                    let p = json!({"q": q, "rho": rho, "x": x});
                    let mut out = vec![
                        report("i5", p.clone(), tol, i5(q, rho, x)),
                        report("i6", p.clone(), tol, i6(q, rho, x)),
                    ];
                    let py = json!({"q": q, "rho": rho, "y": x});
                    match i7(q, rho, x) {
                        Ok((eta, prod, gamma)) => {
                            out.push(VerificationReport::compare("i7.eta", py.clone(), eta, prod, tol));
                            out.push(VerificationReport::compare("i7.gamma", py, gamma, prod, tol));
                        }
                        Err(e) => {
                            out.push(VerificationReport::failed("i7.eta", py.clone(), &e));
                            out.push(VerificationReport::failed("i7.gamma", py, &e));
                        }
                    }
                    out
                }));
            }
        }
    }
    for &(q, rho) in &cfg.reciprocity {
        let a = 2.0 / (1.0 - q).sqrt();
        let grid: Vec<f64> = (0..5).map(|i| a * (i as f64 / 2.0 - 1.0)).collect();
        let rtol = cfg.reciprocity_tol;
        for &x in &grid {
            for &y in &grid {
                cases.push(Box::new(move || {
                    let p = json!({"q": q, "rho": rho, "x": x, "y": y});
                    vec![report("i8", p, rtol, i8(q, rho, x, y).map(|v| (v, 1.0)))]
                }));
            }
        }
    }
    let mut out: Vec<VerificationReport> = cases.par_iter().flat_map(|c| c()).collect();
    out.sort_by(|a, b| {
        a.check_id.cmp(&b.check_id).then_with(|| a.params.to_string().cmp(&b.params.to_string()))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn published_coefficients() {
        let q = 0.3;
        assert!((ExpansionId::NOverU { q }.coeff(2).unwrap() + q).abs() < 1e-15);
        assert_eq!(ExpansionId::NOverU { q }.coeff(3).unwrap(), 0.0);
        let (y, rho) = (0.7, 0.4);
        let c1 = ExpansionId::CnOverU { y, rho, q }.coeff(1).unwrap();
        assert!((c1 - (1.0 - q).sqrt() * rho * y).abs() < 1e-15);
        let c3 = ExpansionId::CnOverN { y, rho, q }.coeff(3).unwrap();
        let h3 = y * y * y - (2.0 + q) * y;
        assert!((c3 - rho.powi(3) * h3 / ((1.0 + q) * (1.0 + q + q * q))).abs() < 1e-15);
        assert_eq!(ExpansionId::CnOverK { y, rho, q }.coeff(1).unwrap(), 0.0);
    }

    #[test]
    fn consistency_with_exact_connections() {
        let (q, y, rho, b) = (rat(2, 5), rat(3, 4), rat(-1, 3), rat(1, 6));
        let ids = vec![
            ExpansionId::NOverU { q: q.clone() },
            ExpansionId::UOverN { q: q.clone() },
            ExpansionId::CnOverN { y: y.clone(), rho: rho.clone(), q: q.clone() },
            ExpansionId::NOverCn { y: y.clone(), rho: rho.clone(), q: q.clone() },
            ExpansionId::ROverN { beta: b.clone(), q: q.clone() },
            ExpansionId::NOverR { gamma: b.clone(), q: q.clone() },
            ExpansionId::CnOverK { y: y.clone(), rho: rho.clone(), q: q.clone() },
            ExpansionId::CnOverU { y: y.clone(), rho: rho.clone(), q: q.clone() },
            ExpansionId::MehlerClassical { y: y.clone(), rho: rho.clone() },
            ExpansionId::PmQ0 { y: y.clone(), rho: rho.clone() },
            ExpansionId::NOverCn { y, rho, q: rat(1, 1) },
        ];
        for id in ids {
            assert_eq!(coefficient_consistency(&id, 10).unwrap(), None, "{}", id.name());
        }
    }

    #[test]
    fn n_over_u_at_q_zero_is_semicircle() {
        let e = Expansion::new(ExpansionSpec::new(ExpansionId::NOverU { q: 0.0 })).unwrap();
        for x in [-1.5, 0.0, 1.2] {
            let v = e.eval(x).unwrap();
            assert!((v.value - DensityId::u(0.0).eval(x).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn inverted_mehler_guard() {
        let id = ExpansionId::NOverCn { y: 0.3, rho: 0.75, q: 1.0 };
        assert!(Expansion::new(ExpansionSpec::new(id)).is_err());
    }

    #[test]
    fn scalar_identities_at_half() {
        let (l, r) = i2(0.5).unwrap();
        assert!((l - 1.6416325606551538).abs() < 1e-14 && (r - l).abs() < 1e-14);
        let (l, r) = i3(0.0).unwrap();
        assert_eq!((l, r), (1.0, 1.0));
    }
}
