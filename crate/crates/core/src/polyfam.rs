//! Polynomial families defined by three-term recurrences.
//!
//! Every family is written as F_{n+1} = (a_n x - b_n) F_n - c_n F_{n-1} with
//! F_{-1} = 0 and F_0 = 1. Evaluation runs the recurrence forward; exact
//! coefficient vectors come from the same recurrence over rationals.

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::qcore::{
    q_bracket, q_double_factorial_odd, q_factorial, q_pochhammer, w_sum, QBinomialTable,
};
use crate::scalar::{Rational, Scalar};

/// A polynomial family together with its parameters.
///
/// The `*Hat` variants are the monic rescalings used by the connection and
/// expansion code (s = sqrt(1-q)):
/// ChebTHat_n(x) = T_n(x s/2)/s^n, ChebUHat_n(x) = U_n(x s/2)/s^n and
/// KestenHat_n(x) = k_n(x s | y s, rho)/s^n.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family<T> {
    QHermite { q: T },
    Rogers { beta: T, q: T },
    Asc { y: T, rho: T, q: T },
    BigB { q: T },
    ChebT,
    ChebU,
    ChebTHat { q: T },
    ChebUHat { q: T },
    ClassicalHermite,
    Kesten { y: T, rho: T },
    KestenHat { y: T, rho: T, q: T },
}

/// Float-parameter family.
pub type FamilyId = Family<f64>;
/// Exact-parameter family.
pub type ExactFamily = Family<Rational>;

impl<T: Scalar> fmt::Display for Family<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |t: &T| t.to_f64();
        match self {
            Family::QHermite { q } => write!(f, "qhermite(q={})", v(q)),
            Family::Rogers { beta, q } => write!(f, "rogers(beta={},q={})", v(beta), v(q)),
            Family::Asc { y, rho, q } => write!(f, "asc(y={},rho={},q={})", v(y), v(rho), v(q)),
            Family::BigB { q } => write!(f, "bigb(q={})", v(q)),
            Family::ChebT => write!(f, "chebt"),
            Family::ChebU => write!(f, "chebu"),
            Family::ChebTHat { q } => write!(f, "chebt-hat(q={})", v(q)),
            Family::ChebUHat { q } => write!(f, "chebu-hat(q={})", v(q)),
            Family::ClassicalHermite => write!(f, "hermite"),
            Family::Kesten { y, rho } => write!(f, "kesten(y={},rho={})", v(y), v(rho)),
            Family::KestenHat { y, rho, q } => {
                write!(f, "kesten-hat(y={},rho={},q={})", v(y), v(rho), v(q))
            }
        }
    }
}

fn check_unit<T: Scalar>(name: &str, v: &T) -> Result<()> {
    let f = v.to_f64();
    if f.is_finite() && f.abs() < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("|{name}| < 1 required, got {f}")))
    }
}

fn check_q_closed<T: Scalar>(q: &T) -> Result<()> {
    let f = q.to_f64();
    if f.is_finite() && f > -1.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("-1 < q <= 1 required, got {f}")))
    }
}

fn check_q_open<T: Scalar>(q: &T) -> Result<()> {
    check_unit("q", q)
}

fn check_finite<T: Scalar>(name: &str, v: &T) -> Result<()> {
    if v.to_f64().is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

impl<T: Scalar> Family<T> {
    /// Parameter ranges: -1 < q <= 1 for the q-families (q = 1 is the classical
    /// case), |q| < 1 for the rescaled Chebyshev/Kesten forms, |beta|, |rho| < 1.
    pub fn validate(&self) -> Result<()> {
        match self {
            Family::QHermite { q } | Family::BigB { q } => check_q_closed(q),
            Family::Rogers { beta, q } => {
                check_q_closed(q)?;
                check_unit("beta", beta)
            }
            Family::Asc { y, rho, q } => {
                check_q_closed(q)?;
                check_unit("rho", rho)?;
                check_finite("y", y)
            }
            Family::ChebTHat { q } | Family::ChebUHat { q } => check_q_open(q),
            Family::Kesten { y, rho } => {
                check_unit("rho", rho)?;
                check_finite("y", y)
            }
            Family::KestenHat { y, rho, q } => {
                check_q_open(q)?;
                check_unit("rho", rho)?;
                check_finite("y", y)
            }
            Family::ChebT | Family::ChebU | Family::ClassicalHermite => Ok(()),
        }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Family<U> {
        match self {
            Family::QHermite { q } => Family::QHermite { q: f(q) },
            Family::Rogers { beta, q } => Family::Rogers { beta: f(beta), q: f(q) },
            Family::Asc { y, rho, q } => Family::Asc { y: f(y), rho: f(rho), q: f(q) },
            Family::BigB { q } => Family::BigB { q: f(q) },
            Family::ChebT => Family::ChebT,
            Family::ChebU => Family::ChebU,
            Family::ChebTHat { q } => Family::ChebTHat { q: f(q) },
            Family::ChebUHat { q } => Family::ChebUHat { q: f(q) },
            Family::ClassicalHermite => Family::ClassicalHermite,
            Family::Kesten { y, rho } => Family::Kesten { y: f(y), rho: f(rho) },
            Family::KestenHat { y, rho, q } => {
                Family::KestenHat { y: f(y), rho: f(rho), q: f(q) }
            }
        }
    }

    pub fn to_f64(&self) -> FamilyId {
        self.map(|v| v.to_f64())
    }

    /// Al-Salam-Chihara at q = 1 is handled by the Hermite closed form.
    fn is_classical_asc(&self) -> bool {
        matches!(self, Family::Asc { q, .. } if q.is_one())
    }

    /// Recurrence coefficients (a_n, b_n, c_n).
    pub fn recurrence(&self, n: usize) -> (T, T, T) {
        let one = T::one;
        let zero = T::zero;
        let int = |v: usize| T::from_i64(v as i64);
        match self {
            Family::QHermite { q } => (one(), zero(), q_bracket(n, q)),
            Family::Rogers { beta, q } => {
                let a = one() - beta.clone() * q.powi(n as i64);
                let c = if n == 0 {
                    zero()
                } else {
                    (one() - beta.clone() * beta.clone() * q.powi(n as i64 - 1)) * q_bracket(n, q)
                };
                (a, zero(), c)
            }
            Family::Asc { y, rho, q } => {
                let b = rho.clone() * y.clone() * q.powi(n as i64);
                let c = if n == 0 {
                    zero()
                } else {
                    (one() - rho.clone() * rho.clone() * q.powi(n as i64 - 1)) * q_bracket(n, q)
                };
                (one(), b, c)
            }
            Family::BigB { q } => {
                // B_{n+1} = -q^n y B_n + q^{n-1}[n] B_{n-1}
                let a = -q.powi(n as i64);
                let c = if n == 0 { zero() } else { -(q.powi(n as i64 - 1) * q_bracket(n, q)) };
                (a, zero(), c)
            }
            Family::ChebT => (if n == 0 { one() } else { int(2) }, zero(), one()),
            Family::ChebU => (int(2), zero(), one()),
            Family::ChebTHat { q } => {
                let a = if n == 0 { T::from_ratio(1, 2) } else { one() };
                (a, zero(), one() / (one() - q.clone()))
            }
            Family::ChebUHat { q } => (one(), zero(), one() / (one() - q.clone())),
            Family::ClassicalHermite => (one(), zero(), int(n)),
            Family::Kesten { y, rho } => {
                let b = if n == 0 { rho.clone() * y.clone() } else { zero() };
                let c = if n == 1 { one() - rho.clone() * rho.clone() } else { one() };
                (one(), b, c)
            }
            Family::KestenHat { y, rho, q } => {
                let b = if n == 0 { rho.clone() * y.clone() } else { zero() };
                let s2 = one() - q.clone();
                let c = if n == 1 { (one() - rho.clone() * rho.clone()) / s2 } else { one() / s2 };
                (one(), b, c)
            }
        }
    }

    /// Leading coefficient of the n-th polynomial (product of a_0..a_{n-1}).
    pub fn leading_coeff(&self, n: usize) -> T {
        (0..n).fold(T::one(), |acc, i| acc * self.recurrence(i).0)
    }

    /// Whether every polynomial of the family has leading coefficient one.
    pub fn is_monic(&self) -> bool {
        matches!(
            self,
            Family::QHermite { .. }
                | Family::Asc { .. }
                | Family::ChebUHat { .. }
                | Family::ClassicalHermite
                | Family::Kesten { .. }
                | Family::KestenHat { .. }
        )
    }

    /// Values F_0(x), ..., F_{n_max}(x) from one forward recurrence pass,
    /// ignoring the classical-limit branch.
    pub fn recurrence_values(&self, n_max: usize, x: &T) -> Vec<T> {
        let mut out = Vec::with_capacity(n_max + 1);
        let mut prev = T::zero();
        let mut cur = T::one();
        out.push(cur.clone());
        for n in 0..n_max {
            let (a, b, c) = self.recurrence(n);
            let next = (a * x.clone() - b) * cur.clone() - c * prev;
            prev = cur;
            cur = next;
            out.push(cur.clone());
        }
        out
    }

    /// Values of the first n_max+1 polynomials at x.
    pub fn eval_all(&self, n_max: usize, x: &T) -> Result<Vec<T>> {
        self.validate()?;
        if let Family::Asc { y, rho, .. } = self {
            if self.is_classical_asc() {
                return Ok((0..=n_max).map(|n| asc_classical_eval(n, x, y, rho)).collect());
            }
        }
        Ok(self.recurrence_values(n_max, x))
    }

    /// Value of the n-th polynomial at x.
    pub fn eval(&self, n: usize, x: &T) -> Result<T> {
        Ok(self.eval_all(n, x)?.pop().expect("nonempty"))
    }

    /// Coefficient vectors of F_0, ..., F_{n_max}.
    pub fn coeffs_all(&self, n_max: usize) -> Result<Vec<Poly<T>>> {
        self.validate()?;
        if let Family::Asc { y, rho, .. } = self {
            if self.is_classical_asc() {
                return Ok((0..=n_max).map(|n| asc_classical_coeffs(n, y, rho)).collect());
            }
        }
        let mut out = Vec::with_capacity(n_max + 1);
        let mut prev = Poly::zero();
        let mut cur = Poly::constant(T::one());
        out.push(cur.clone());
        for n in 0..n_max {
            let (a, b, c) = self.recurrence(n);
            let next = cur.mul_x().scale(&a).sub(&cur.scale(&b)).sub(&prev.scale(&c));
            prev = cur;
            cur = next;
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Coefficient vector of the n-th polynomial.
    pub fn coeffs(&self, n: usize) -> Result<Poly<T>> {
        Ok(self.coeffs_all(n)?.pop().expect("nonempty"))
    }

    /// Squared norm of the n-th polynomial under the family's orthogonality
    /// density: f_N for QHermite, f_CN for Asc, f_R for Rogers, f_U / f_T for
    /// the hat Chebyshev forms, f_K for the Kesten forms, the standard normal
    /// for ClassicalHermite, and the semicircle / arcsine laws on [-1, 1] for
    /// ChebU / ChebT.
    pub fn norm(&self, n: usize) -> Result<T> {
        self.validate()?;
        let one = T::one;
        let nn = n as i64;
        Ok(match self {
            Family::QHermite { q } => q_factorial(n, q),
            Family::Asc { rho, q, .. } => {
                q_pochhammer(&(rho.clone() * rho.clone()), q, n) * q_factorial(n, q)
            }
            Family::Rogers { beta, q } => {
                (one() - beta.clone())
                    * q_pochhammer(&(beta.clone() * beta.clone()), q, n)
                    * q_factorial(n, q)
                    / (one() - beta.clone() * q.powi(nn))
            }
            Family::ChebU => one(),
            Family::ChebT => if n == 0 { one() } else { T::from_ratio(1, 2) },
            Family::ChebUHat { q } => (one() - q.clone()).powi(-nn),
            Family::ChebTHat { q } => {
                if n == 0 {
                    one()
                } else {
                    T::from_ratio(1, 2) * (one() - q.clone()).powi(-nn)
                }
            }
            Family::ClassicalHermite => (1..=nn).fold(one(), |acc, i| acc * T::from_i64(i)),
            Family::Kesten { rho, .. } => {
                if n == 0 { one() } else { one() - rho.clone() * rho.clone() }
            }
            Family::KestenHat { rho, q, .. } => {
                if n == 0 {
                    one()
                } else {
                    (one() - rho.clone() * rho.clone()) * (one() - q.clone()).powi(-nn)
                }
            }
            Family::BigB { .. } => {
                return Err(Error::UnsupportedPair(format!("{self} has no orthogonality density")))
            }
        })
    }
}

/// (1-rho^2)^{n/2} He_n((x - rho y)/sqrt(1-rho^2)), written as
/// sum_j h_j (1-rho^2)^j (x - rho y)^{n-2j} with He_n(z) = sum_j h_j z^{n-2j}.
fn asc_classical_eval<T: Scalar>(n: usize, x: &T, y: &T, rho: &T) -> T {
    let r2 = T::one() - rho.clone() * rho.clone();
    if let (Some(r), false) = (r2.sqrt_opt(), T::is_exact()) {
        let z = (x.clone() - rho.clone() * y.clone()) / r.clone();
        let he = Family::<T>::ClassicalHermite.recurrence_values(n, &z);
        return r.powi(n as i64) * he[n].clone();
    }
    let u = x.clone() - rho.clone() * y.clone();
    hermite_coefficients::<T>(n)
        .into_iter()
        .enumerate()
        .fold(T::zero(), |acc, (j, h)| acc + h * r2.powi(j as i64) * u.powi((n - 2 * j) as i64))
}

fn asc_classical_coeffs<T: Scalar>(n: usize, y: &T, rho: &T) -> Poly<T> {
    let r2 = T::one() - rho.clone() * rho.clone();
    let shift = Poly::new(vec![-(rho.clone() * y.clone()), T::one()]);
    let mut acc = Poly::zero();
    for (j, h) in hermite_coefficients::<T>(n).into_iter().enumerate() {
        let term = shift.pow(n - 2 * j).scale(&(h * r2.powi(j as i64)));
        acc = acc.add(&term);
    }
    acc
}

/// h_j with He_n(z) = sum_j h_j z^{n-2j}: h_j = (-1)^j n! / (j! (n-2j)! 2^j).
fn hermite_coefficients<T: Scalar>(n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n / 2 + 1);
    let mut h = T::one();
    for j in 0..=n / 2 {
        out.push(h.clone());
        // ratio h_{j+1}/h_j = -(n-2j)(n-2j-1) / (2(j+1))
        let m = (n - 2 * j) as i64;
        if m >= 2 {
            h = -h * T::from_ratio(m * (m - 1), 2 * (j as i64 + 1));
        }
    }
    out
}

/// Dense polynomial, coefficient index = power of x.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

/// Exact polynomial over arbitrary-precision rationals.
pub type RationalPoly = Poly<Rational>;

impl<T: Scalar> Poly<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The monomial x^n.
    pub fn monomial(n: usize) -> Self {
        let mut c = vec![T::zero(); n + 1];
        c[n] = T::one();
        Self { coeffs: c }
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of x^i (zero past the degree).
    pub fn coeff(&self, i: usize) -> T {
        self.coeffs.get(i).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> T {
        self.coeffs.last().cloned().unwrap_or_else(T::zero)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.coeffs.iter().map(|v| v.clone() * c.clone()).collect())
    }

    pub fn mul_x(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(T::zero());
        c.extend(self.coeffs.iter().cloned());
        Self { coeffs: c }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut c = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] = c[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(c)
    }

    pub fn pow(&self, e: usize) -> Self {
        (0..e).fold(Self::constant(T::one()), |acc, _| acc.mul(self))
    }

    /// p(c x).
    pub fn rescale_arg(&self, c: &T) -> Self {
        let mut f = T::one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for v in &self.coeffs {
            out.push(v.clone() * f.clone());
            f = f * c.clone();
        }
        Self::new(out)
    }

    /// p(-x).
    pub fn reflect(&self) -> Self {
        self.rescale_arg(&-T::one())
    }
}

impl<T: Scalar> fmt::Display for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c:?}"),
                1 => format!("{c:?}*x"),
                _ => format!("{c:?}*x^{i}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Points covered by the special-value table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialPoint {
    Zero,
    One,
    Half,
    /// The right end 2/sqrt(1-q) of S(q).
    Boundary,
}

/// Closed-form value of the n-th polynomial at a special point.
///
/// Covered pairs: ChebU at 0, 1, -1 (as `One` with odd reflection handled by
/// the caller), 1/2; QHermite at 0 and at the boundary; Kesten at 0 and 1;
/// BigB at 0; Rogers at 0. The QHermite boundary value W_n(q)/(1-q)^{n/2} is
/// irrational for odd n unless 1-q is a square; the exact backend then
/// reports `IrrationalParameter`.
pub fn special_value<T: Scalar>(family: &Family<T>, point: SpecialPoint, n: usize) -> Result<T> {
    family.validate()?;
    let sign = |k: usize| if k.is_multiple_of(2) { T::one() } else { -T::one() };
    let unsupported = || Error::UnsupportedPair(format!("{family} at {point:?}"));
    match (family, point) {
        (Family::ChebU, SpecialPoint::Zero) => {
            Ok(if n % 2 == 1 { T::zero() } else { sign(n / 2) })
        }
        (Family::ChebU, SpecialPoint::One) => Ok(T::from_i64(n as i64 + 1)),
        (Family::ChebU, SpecialPoint::Half) => {
            let m = n.div_ceil(3);
            Ok(sign(3 * m) * T::from_i64(n as i64 + 1 - 3 * m as i64))
        }
        (Family::QHermite { q }, SpecialPoint::Zero) => Ok(if n % 2 == 1 {
            T::zero()
        } else {
            sign(n / 2) * q_double_factorial_odd(n / 2, q)
        }),
        (Family::QHermite { q }, SpecialPoint::Boundary) => {
            let s2 = T::one() - q.clone();
            if s2.is_zero() {
                return Err(invalid("boundary of S(q) is infinite at q = 1"));
            }
            let half = s2.powi((n / 2) as i64);
            let scale = if n.is_multiple_of(2) {
                half
            } else {
                let s = s2.sqrt_opt().ok_or_else(|| {
                    Error::IrrationalParameter("sqrt(1-q) is not rational".into())
                })?;
                half * s
            };
            Ok(w_sum(n, q) / scale)
        }
        (Family::Kesten { y, rho }, SpecialPoint::Zero) => {
            if n == 0 {
                return Ok(T::one());
            }
            let k = n.div_ceil(2);
            let r2 = rho.clone() * rho.clone();
            Ok(if n.is_multiple_of(2) {
                sign(k) * (T::one() - r2)
            } else {
                sign(k) * rho.clone() * y.clone()
            })
        }
        (Family::Kesten { y, rho }, SpecialPoint::One) => {
            if n == 0 {
                return Ok(T::one());
            }
            let k = n.div_ceil(3);
            let r2 = rho.clone() * rho.clone();
            let ry = rho.clone() * y.clone();
            Ok(match n % 3 {
                0 => sign(k) * (T::one() - r2),
                2 => sign(k - 1) * (r2 - ry),
                _ => sign(k - 1) * (T::one() - ry),
            })
        }
        (Family::BigB { q }, SpecialPoint::Zero) => Ok(if n % 2 == 1 {
            T::zero()
        } else {
            let k = (n / 2) as i64;
            q.powi(k * (k - 1)) * q_double_factorial_odd(n / 2, q)
        }),
        (Family::Rogers { beta, q }, SpecialPoint::Zero) => Ok(if n % 2 == 1 {
            T::zero()
        } else {
            let b2 = beta.clone() * beta.clone();
            let q2 = q.clone() * q.clone();
            sign(n / 2) * q_pochhammer(&b2, &q2, n / 2) * q_double_factorial_odd(n / 2, q)
        }),
        _ => Err(unsupported()),
    }
}

/// Upper bound on max_{x in S(q)} |F_n(x)|.
///
/// QHermite: W_n(q)/(1-q)^{n/2}; Rogers: V_n(q,beta)/((q)_n (1-q)^{n/2}).
/// The remaining families are bounded through their connection to those
/// two or through |U_n| <= n+1 and |T_n| <= 1 on [-1, 1].
pub fn max_bound(family: &FamilyId, n: usize) -> Result<f64> {
    Ok(max_bounds(family, n)?[n])
}

/// [`max_bound`] for degrees 0..=n_max in one pass.
pub fn max_bounds(family: &FamilyId, n_max: usize) -> Result<Vec<f64>> {
    family.validate()?;
    let degrees = 0..=n_max;
    let out = match family {
        Family::QHermite { q } => {
            crate::qcore::check_q_open(*q)?;
            let t = QBinomialTable::new(n_max, q);
            let s = (1.0 - q).sqrt();
            degrees.map(|n| t.row_sum(n) / s.powi(n as i32)).collect()
        }
        Family::Rogers { beta, q } => {
            crate::qcore::check_q_open(*q)?;
            let s = (1.0 - q).sqrt();
            // V_n(q,beta)/(q)_n = (q)_n sum_k r_k r_{n-k} with r_i = (beta)_i/(q)_i
            let r: Vec<f64> = (0..=n_max)
                .scan(1.0, |acc, i| {
                    let cur = *acc;
                    let qi = (*q).powi(i as i32);
                    *acc *= (1.0 - beta * qi) / (1.0 - q * qi);
                    Some(cur)
                })
                .collect();
            degrees
                .map(|n| {
                    let v: f64 = (0..=n).map(|i| r[i] * r[n - i]).sum();
                    v * q_pochhammer(q, q, n) / s.powi(n as i32)
                })
                .collect()
        }
        Family::Asc { y, rho, q } => {
            crate::qcore::check_q_open(*q)?;
            // P_n = sum_j [n j] rho^{n-j} B_{n-j}(y) H_j(x)
            let b = Family::BigB { q: *q }.recurrence_values(n_max, y);
            let t = QBinomialTable::new(n_max, q);
            let s = (1.0 - q).sqrt();
            let h: Vec<f64> = (0..=n_max).map(|j| t.row_sum(j) / s.powi(j as i32)).collect();
            degrees
                .map(|n| {
                    (0..=n)
                        .map(|j| {
                            t.get(n as i64, j as i64)
                                * rho.abs().powi((n - j) as i32)
                                * b[n - j].abs()
                                * h[j]
                        })
                        .sum()
                })
                .collect()
        }
        Family::ChebU => degrees.map(|n| n as f64 + 1.0).collect(),
        Family::ChebT => degrees.map(|_| 1.0).collect(),
        Family::ChebUHat { q } => {
            let s = (1.0 - q).sqrt();
            degrees.map(|n| (n as f64 + 1.0) / s.powi(n as i32)).collect()
        }
        Family::ChebTHat { q } => {
            let s = (1.0 - q).sqrt();
            degrees.map(|n| if n == 0 { 1.0 } else { 0.5 / s.powi(n as i32) }).collect()
        }
        Family::Kesten { y, rho } => {
            degrees.map(|n| kesten_bound(n, rho.abs() * y.abs(), rho * rho)).collect()
        }
        Family::KestenHat { y, rho, q } => {
            let s = (1.0 - q).sqrt();
            degrees
                .map(|n| kesten_bound(n, rho.abs() * y.abs() * s, rho * rho) / s.powi(n as i32))
                .collect()
        }
        Family::BigB { .. } | Family::ClassicalHermite => {
            return Err(Error::UnsupportedPair(format!(
                "{family} has no bound on a compact support"
            )))
        }
    };
    Ok(out)
}

/// k_n = U_n(x/2) - rho y U_{n-1}(x/2) + rho^2 U_{n-2}(x/2) on [-2, 2].
fn kesten_bound(n: usize, rho_y: f64, rho2: f64) -> f64 {
    let nn = n as f64;
    match n {
        0 => 1.0,
        _ => (nn + 1.0) + rho_y * nn + rho2 * (nn - 1.0).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn x_poly(c: &[i64]) -> RationalPoly {
        Poly::new(c.iter().map(|&v| rat_int(v)).collect())
    }

    #[test]
    fn qhermite_three() {
        let q = rat(1, 2);
        let h3 = Family::QHermite { q: q.clone() }.coeffs(3).unwrap();
        // x^3 - (2+q) x
        assert_eq!(h3, Poly::new(vec![rat_int(0), -(rat_int(2) + q), rat_int(0), rat_int(1)]));
        let v = Family::QHermite { q: 0.5 }.eval(3, &1.0).unwrap();
        assert!((v + 1.5).abs() < 1e-15);
    }

    #[test]
    fn small_closed_forms() {
        assert_eq!(Family::<Rational>::ChebT.coeffs(2).unwrap(), x_poly(&[-1, 0, 2]));
        let beta = rat(1, 3);
        let q = rat(2, 7);
        let r1 = Family::Rogers { beta: beta.clone(), q: q.clone() }.coeffs(1).unwrap();
        assert_eq!(r1, Poly::new(vec![rat_int(0), rat_int(1) - beta]));
        let b2 = Family::BigB { q: q.clone() }.coeffs(2).unwrap();
        assert_eq!(b2, Poly::new(vec![rat_int(1), rat_int(0), q.clone()]));
        let b1 = Family::BigB { q: q.clone() }.eval(1, &rat(3, 5)).unwrap();
        assert_eq!(b1, rat(-3, 5));
        let (y, rho) = (rat(3, 4), rat(1, 5));
        let k2 = Family::Kesten { y: y.clone(), rho: rho.clone() };
        let x = rat(7, 3);
        let expect = x.clone() * (x.clone() - rho.clone() * y.clone()) - (rat_int(1) - rho.clone() * rho.clone());
        assert_eq!(k2.eval(2, &x).unwrap(), expect);
        let p1 = Family::Asc { y: y.clone(), rho: rho.clone(), q }.eval_all(1, &x).unwrap();
        assert_eq!(p1, vec![rat_int(1), x - rho * y]);
    }

    #[test]
    fn eval_all_examples() {
        assert_eq!(Family::<f64>::ChebU.eval_all(2, &1.0).unwrap(), vec![1.0, 2.0, 3.0]);
        let h = Family::QHermite { q: 0.3 }.eval_all(2, &0.0).unwrap();
        assert_eq!(h, vec![1.0, 0.0, -1.0]);
    }

    #[test]
    fn qhermite_at_zero_is_chebyshev_u() {
        let u = Family::<f64>::ChebU;
        let h = Family::QHermite { q: 0.0 };
        for i in 0..=40 {
            let x = -2.0 + 0.1 * i as f64;
            let a = h.eval_all(30, &x).unwrap();
            let b = u.eval_all(30, &(x / 2.0)).unwrap();
            for (n, (p, r)) in a.iter().zip(&b).enumerate() {
                assert!((p - r).abs() <= 1e-9 * (1.0 + r.abs()), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn parameter_ranges_enforced() {
        assert!(Family::Rogers { beta: 1.0, q: 0.5 }.eval(2, &0.0).is_err());
        assert!(Family::Asc { y: 0.0, rho: -1.0, q: 0.5 }.eval(2, &0.0).is_err());
        assert!(Family::QHermite { q: 1.5 }.eval(2, &0.0).is_err());
        assert!(Family::ChebUHat { q: 1.0 }.eval(2, &0.0).is_err());
        assert!(Family::QHermite { q: 1.0 }.eval(2, &0.0).is_ok());
    }

    #[test]
    fn classical_asc_branch_matches_recurrence() {
        let (y, rho) = (rat(2, 3), rat(-1, 4));
        let f = Family::Asc { y, rho, q: rat_int(1) };
        let via_closed = f.coeffs_all(12).unwrap();
        let x = rat(5, 7);
        let rec = f.recurrence_values(12, &x);
        for n in 0..=12 {
            assert_eq!(via_closed[n].eval(&x), rec[n], "n = {n}");
        }
        let ff = f.to_f64();
        let v = ff.eval(6, &0.4).unwrap();
        let r = ff.recurrence_values(6, &0.4)[6];
        assert!((v - r).abs() < 1e-12);
    }

    #[test]
    fn special_value_examples() {
        assert_eq!(special_value(&Family::<Rational>::ChebU, SpecialPoint::Zero, 4).unwrap(), rat_int(1));
        let (y, rho) = (rat(1, 3), rat(2, 5));
        let k = Family::Kesten { y: y.clone(), rho: rho.clone() };
        let r2 = rho.clone() * rho.clone();
        assert_eq!(special_value(&k, SpecialPoint::One, 3).unwrap(), -(rat_int(1) - r2.clone()));
        assert_eq!(special_value(&k, SpecialPoint::Zero, 1).unwrap(), -(rho.clone() * y));
        let (b, q) = (rat(1, 2), rat(1, 3));
        let r = Family::Rogers { beta: b.clone(), q: q.clone() };
        let q2 = q.clone() * q.clone();
        let expect = q_pochhammer(&(b.clone() * b), &q2, 2) * q_bracket(3, &q);
        assert_eq!(special_value(&r, SpecialPoint::Zero, 4).unwrap(), expect);
        assert!(special_value(&Family::<Rational>::ChebT, SpecialPoint::Zero, 2).is_err());
    }

    #[test]
    fn bounds_small_cases() {
        let q = 0.3;
        assert_eq!(max_bound(&Family::QHermite { q }, 0).unwrap(), 1.0);
        assert!((max_bound(&Family::QHermite { q }, 2).unwrap() - (3.0 + q) / (1.0 - q)).abs() < 1e-14);
    }

    #[test]
    fn poly_algebra() {
        let p = x_poly(&[1, 2]);
        assert_eq!(p.pow(2), x_poly(&[1, 4, 4]));
        assert_eq!(p.reflect(), x_poly(&[1, -2]));
        assert_eq!(p.sub(&p), Poly::zero());
        assert_eq!(x_poly(&[0, 0, 3]).degree(), Some(2));
        assert_eq!(Poly::<Rational>::zero().degree(), None);
    }
}
