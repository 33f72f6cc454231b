//! Connection coefficients: a_n = sum_k gamma_{k,n} b_k.
//!
//! Closed forms are generic over [`Scalar`]; the oracle solves the triangular
//! system on exact coefficient vectors by back-substitution from the top
//! degree. Rows involving sqrt(1-q) are produced for the monic rescaled
//! families (`ChebUHat`, `KestenHat`) so that they stay rational; the
//! unscaled coefficients follow by multiplying with (1-q)^{n/2}.

use std::fmt::Write as _;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyfam::{Family, Poly, RationalPoly};
use crate::qcore::{q_binomial, q_double_factorial_odd, q_factorial, q_pochhammer};
use crate::scalar::{fmt_rational, Rational, Scalar};

/// Lower-triangular table of connection coefficients; `rows[n][k]` is
/// gamma_{k,n} for 0 <= k <= n.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrix<T> {
    pub source: String,
    pub target: String,
    pub rows: Vec<Vec<T>>,
}

impl<T: Scalar> ConnectionMatrix<T> {
    pub fn n_max(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn get(&self, k: usize, n: usize) -> T {
        self.rows.get(n).and_then(|r| r.get(k)).cloned().unwrap_or_else(T::zero)
    }

    /// Coefficients of the source in terms of `next`'s target, given that this
    /// matrix's target is `next`'s source.
    pub fn compose(&self, next: &ConnectionMatrix<T>) -> ConnectionMatrix<T> {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                (0..row.len())
                    .map(|i| {
                        (i..row.len()).fold(T::zero(), |acc, j| acc + row[j].clone() * next.get(i, j))
                    })
                    .collect()
            })
            .collect();
        ConnectionMatrix { source: self.source.clone(), target: next.target.clone(), rows }
    }

    pub fn is_identity(&self) -> bool {
        self.rows.iter().enumerate().all(|(n, row)| {
            row.iter().enumerate().all(|(k, v)| if k == n { v.is_one() } else { v.is_zero() })
        })
    }

    /// Smallest J with gamma_{k,n} = 0 whenever n - k > J.
    pub fn band(&self) -> usize {
        let mut band = 0;
        for (n, row) in self.rows.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    band = band.max(n - k);
                }
            }
        }
        band
    }
}

impl ConnectionMatrix<Rational> {
    /// CSV with columns n, k, numerator, denominator (nonzero entries only).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,k,numerator,denominator\n");
        for (n, row) in self.rows.iter().enumerate() {
            for (k, v) in row.iter().enumerate().rev() {
                if !v.is_zero() {
                    let _ = writeln!(out, "{n},{k},{},{}", v.numer(), v.denom());
                }
            }
        }
        out
    }

    /// Rows "n,k,p/q" (nonzero entries, descending k).
    pub fn to_rows(&self) -> Vec<(usize, usize, String)> {
        let mut out = Vec::new();
        for (n, row) in self.rows.iter().enumerate() {
            for (k, v) in row.iter().enumerate().rev() {
                if !v.is_zero() {
                    out.push((n, k, fmt_rational(v)));
                }
            }
        }
        out
    }
}

/// Express every polynomial of `source` in the basis `target` by triangular
/// back-substitution. `target[k]` must have degree exactly k.
pub fn connect_polys(
    source: &[RationalPoly],
    target: &[RationalPoly],
) -> Result<Vec<Vec<Rational>>> {
    for (k, b) in target.iter().enumerate() {
        if b.degree() != Some(k) {
            return Err(Error::InvalidPair(format!("target polynomial {k} has degree {:?}", b.degree())));
        }
    }
    let mut rows = Vec::with_capacity(source.len());
    for (n, a) in source.iter().enumerate() {
        let deg = a.degree().unwrap_or(0);
        if deg >= target.len() {
            return Err(Error::InvalidPair(format!("source degree {deg} exceeds target basis")));
        }
        let width = (n + 1).max(deg + 1);
        let mut row = vec![Rational::from_i64(0); width];
        let mut residual = a.clone();
        for k in (0..=deg).rev() {
            let c = residual.coeff(k);
            if c.is_zero() {
                continue;
            }
            let g = c / target[k].leading();
            residual = residual.sub(&target[k].scale(&g));
            row[k] = g;
        }
        debug_assert!(residual.is_zero());
        rows.push(row);
    }
    Ok(rows)
}

/// Exact connection matrix between two families for n <= n_max.
pub fn oracle_connection(
    source: &Family<Rational>,
    target: &Family<Rational>,
    n_max: usize,
) -> Result<ConnectionMatrix<Rational>> {
    let a = source.coeffs_all(n_max)?;
    let b = target.coeffs_all(n_max)?;
    Ok(ConnectionMatrix {
        source: source.to_string(),
        target: target.to_string(),
        rows: connect_polys(&a, &b)?,
    })
}

/// Width of the nonzero band of the connection between two families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BandReport {
    pub band: usize,
    /// Whether the band respects the degree bound N of a polynomial ratio.
    pub within_hint: Option<bool>,
}

pub fn band_structure(
    source: &Family<Rational>,
    target: &Family<Rational>,
    n_max: usize,
    n_hint: Option<usize>,
) -> Result<BandReport> {
    let band = oracle_connection(source, target, n_max)?.band();
    Ok(BandReport { band, within_hint: n_hint.map(|h| band <= h) })
}

/// Closed-form connection pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "pair", rename_all = "snake_case")]
pub enum Pair<T> {
    /// P_n(x|y,rho,q) = sum_j [n j] rho^{n-j} B_{n-j}(y|q) H_j(x|q).
    AscToHermite { y: T, rho: T, q: T },
    /// H_n(x|q) = sum_j [n j] rho^{n-j} H_{n-j}(y|q) P_j(x|y,rho,q).
    HermiteToAsc { y: T, rho: T, q: T },
    /// U_n(x s/2)/s^n in q-Hermite polynomials.
    ChebUHatToHermite { q: T },
    /// H_n(x|q) in the polynomials U_k(x s/2)/s^k.
    HermiteToChebUHat { q: T },
    /// R_n(x|gamma,q) in R_k(x|beta,q).
    RogersToRogers { gamma: T, beta: T, q: T },
    /// R_n(x|gamma,q) in H_k(x|q).
    RogersToHermite { gamma: T, q: T },
    /// H_n(x|q) in R_k(x|beta,q).
    HermiteToRogers { beta: T, q: T },
    /// U_n(x s/2)/s^n in P_k(x|y,rho,q).
    ChebUHatToAsc { y: T, rho: T, q: T },
    /// k_n(x s|y s,rho)/s^n in P_k(x|y,rho,q).
    KestenHatToAsc { y: T, rho: T, q: T },
    /// T_n in U_k.
    ChebTFromU,
    /// U_n in T_k.
    ChebUFromT,
    /// Classical He_n(x) in P_k(x|y,rho,1) = (1-rho^2)^{k/2} He_k((x-rho y)/sqrt(1-rho^2)).
    HermiteToClassicalAsc { y: T, rho: T },
}

impl<T> Pair<T> {
    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Pair<U> {
        match self {
            Pair::AscToHermite { y, rho, q } => Pair::AscToHermite { y: f(y), rho: f(rho), q: f(q) },
            Pair::HermiteToAsc { y, rho, q } => Pair::HermiteToAsc { y: f(y), rho: f(rho), q: f(q) },
            Pair::ChebUHatToHermite { q } => Pair::ChebUHatToHermite { q: f(q) },
            Pair::HermiteToChebUHat { q } => Pair::HermiteToChebUHat { q: f(q) },
            Pair::RogersToRogers { gamma, beta, q } => {
                Pair::RogersToRogers { gamma: f(gamma), beta: f(beta), q: f(q) }
            }
            Pair::RogersToHermite { gamma, q } => Pair::RogersToHermite { gamma: f(gamma), q: f(q) },
            Pair::HermiteToRogers { beta, q } => Pair::HermiteToRogers { beta: f(beta), q: f(q) },
            Pair::ChebUHatToAsc { y, rho, q } => Pair::ChebUHatToAsc { y: f(y), rho: f(rho), q: f(q) },
            Pair::KestenHatToAsc { y, rho, q } => Pair::KestenHatToAsc { y: f(y), rho: f(rho), q: f(q) },
            Pair::ChebTFromU => Pair::ChebTFromU,
            Pair::ChebUFromT => Pair::ChebUFromT,
            Pair::HermiteToClassicalAsc { y, rho } => Pair::HermiteToClassicalAsc { y: f(y), rho: f(rho) },
        }
    }
}

impl<T: Scalar> Pair<T> {
    pub fn source(&self) -> Family<T> {
        match self.clone() {
            Pair::AscToHermite { y, rho, q } => Family::Asc { y, rho, q },
            Pair::HermiteToAsc { q, .. }
            | Pair::HermiteToChebUHat { q }
            | Pair::HermiteToRogers { q, .. } => Family::QHermite { q },
            Pair::ChebUHatToHermite { q } | Pair::ChebUHatToAsc { q, .. } => Family::ChebUHat { q },
            Pair::RogersToRogers { gamma, q, .. } | Pair::RogersToHermite { gamma, q } => {
                Family::Rogers { beta: gamma, q }
            }
            Pair::KestenHatToAsc { y, rho, q } => Family::KestenHat { y, rho, q },
            Pair::ChebTFromU => Family::ChebT,
            Pair::ChebUFromT => Family::ChebU,
            Pair::HermiteToClassicalAsc { .. } => Family::ClassicalHermite,
        }
    }

    pub fn target(&self) -> Family<T> {
        match self.clone() {
            Pair::AscToHermite { q, .. }
            | Pair::ChebUHatToHermite { q }
            | Pair::RogersToHermite { q, .. } => Family::QHermite { q },
            Pair::HermiteToAsc { y, rho, q }
            | Pair::ChebUHatToAsc { y, rho, q }
            | Pair::KestenHatToAsc { y, rho, q } => Family::Asc { y, rho, q },
            Pair::HermiteToChebUHat { q } => Family::ChebUHat { q },
            Pair::RogersToRogers { beta, q, .. } | Pair::HermiteToRogers { beta, q } => {
                Family::Rogers { beta, q }
            }
            Pair::ChebTFromU => Family::ChebU,
            Pair::ChebUFromT => Family::ChebT,
            Pair::HermiteToClassicalAsc { y, rho } => Family::Asc { y, rho, q: T::one() },
        }
    }

    /// Row gamma_{0,n}, ..., gamma_{n,n}.
    pub fn row(&self, n: usize) -> Result<Vec<T>> {
        self.source().validate()?;
        self.target().validate()?;
        let mut row = vec![T::zero(); n + 1];
        let ni = n as i64;
        match self {
            Pair::AscToHermite { y, rho, q } => {
                let b = Family::BigB { q: q.clone() }.recurrence_values(n, y);
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot = q_binomial(ni, j as i64, q) * rho.powi((n - j) as i64) * b[n - j].clone();
                }
            }
            Pair::HermiteToAsc { y, rho, q } => {
                let h = Family::QHermite { q: q.clone() }.recurrence_values(n, y);
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot = q_binomial(ni, j as i64, q) * rho.powi((n - j) as i64) * h[n - j].clone();
                }
            }
            Pair::ChebUHatToHermite { q } => {
                let inv = T::one() / (T::one() - q.clone());
                for j in 0..=n / 2 {
                    let ji = j as i64;
                    let v = inv.powi(ji)
                        * q.powi(ji * (ji + 1) / 2)
                        * q_binomial(ni - ji, ji, q);
                    row[n - 2 * j] = if j % 2 == 0 { v } else { -v };
                }
            }
            Pair::HermiteToChebUHat { q } => {
                let inv = T::one() / (T::one() - q.clone());
                for k in 0..=n / 2 {
                    let ki = k as i64;
                    let bracket = q_binomial(ni, ki, q)
                        - q.powi(ni - 2 * ki + 1) * q_binomial(ni, ki - 1, q);
                    row[n - 2 * k] = inv.powi(ki) * q.powi(ki) * bracket;
                }
            }
            Pair::RogersToRogers { gamma, beta, q } => {
                // beta^k (gamma/beta)_k = prod_{i<k} (beta - gamma q^i)
                for k in 0..=n / 2 {
                    let lead = (0..k).fold(T::one(), |acc, i| {
                        acc * (beta.clone() - gamma.clone() * q.powi(i as i64))
                    });
                    let num = q_factorial(n, q)
                        * lead
                        * q_pochhammer(gamma, q, n - k)
                        * (T::one() - beta.clone() * q.powi((n - 2 * k) as i64));
                    let den = q_factorial(k, q)
                        * q_factorial(n - 2 * k, q)
                        * q_pochhammer(&(beta.clone() * q.clone()), q, n - k)
                        * (T::one() - beta.clone());
                    row[n - 2 * k] = num / den;
                }
            }
            Pair::RogersToHermite { gamma, q } => {
                for k in 0..=n / 2 {
                    let ki = k as i64;
                    let v = gamma.powi(ki)
                        * q.powi(ki * (ki - 1) / 2)
                        * q_factorial(n, q)
                        * q_pochhammer(gamma, q, n - k)
                        / (q_factorial(k, q) * q_factorial(n - 2 * k, q));
                    row[n - 2 * k] = if k % 2 == 0 { v } else { -v };
                }
            }
            Pair::HermiteToRogers { beta, q } => {
                for k in 0..=n / 2 {
                    let num = beta.powi(k as i64)
                        * q_factorial(n, q)
                        * (T::one() - beta.clone() * q.powi((n - 2 * k) as i64));
                    let den = (T::one() - beta.clone())
                        * q_factorial(k, q)
                        * q_factorial(n - 2 * k, q)
                        * q_pochhammer(&(beta.clone() * q.clone()), q, n - k);
                    row[n - 2 * k] = num / den;
                }
            }
            Pair::ChebUHatToAsc { y, rho, q } => {
                for (k, slot) in row.iter_mut().enumerate() {
                    *slot = d_hat(k, n, y, rho, q);
                }
            }
            Pair::KestenHatToAsc { y, rho, q } => {
                for (k, slot) in row.iter_mut().enumerate() {
                    *slot = c_hat(k, n, y, rho, q);
                }
            }
            Pair::ChebTFromU => {
                let half = T::from_ratio(1, 2);
                if n == 0 {
                    row[0] = T::one();
                } else {
                    row[n] = half.clone();
                    if n >= 2 {
                        row[n - 2] = -half;
                    }
                }
            }
            Pair::ChebUFromT => {
                for i in 0..=n / 2 {
                    row[n - 2 * i] = T::from_i64(2);
                }
                if n.is_multiple_of(2) {
                    row[0] = T::one();
                }
            }
            Pair::HermiteToClassicalAsc { y, rho } => {
                let he = Family::<T>::ClassicalHermite.recurrence_values(n, y);
                for (k, slot) in row.iter_mut().enumerate() {
                    *slot = binomial::<T>(n, k) * rho.powi((n - k) as i64) * he[n - k].clone();
                }
            }
        }
        Ok(row)
    }

    pub fn matrix(&self, n_max: usize) -> Result<ConnectionMatrix<T>> {
        let rows = (0..=n_max).map(|n| self.row(n)).collect::<Result<Vec<_>>>()?;
        Ok(ConnectionMatrix {
            source: self.source().to_string(),
            target: self.target().to_string(),
            rows,
        })
    }
}

fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    (0..k).fold(T::one(), |acc, i| {
        acc * T::from_i64((n - i) as i64) / T::from_i64(i as i64 + 1)
    })
}

/// D_{k,n}(y,rho,q)/(1-q)^{n/2}: coefficient of P_k in U_n(x s/2)/s^n.
pub fn d_hat<T: Scalar>(k: usize, n: usize, y: &T, rho: &T, q: &T) -> T {
    if k > n {
        return T::zero();
    }
    let m = n - k;
    let h = Family::QHermite { q: q.clone() }.recurrence_values(m, y);
    let inv = T::one() / (T::one() - q.clone());
    let (ni, mi) = (n as i64, m as i64);
    (0..=m / 2).fold(T::zero(), |acc, j| {
        let ji = j as i64;
        let v = inv.powi(ji)
            * q.powi(ji * (ji + 1) / 2)
            * q_binomial(ni - ji, mi - ji, q)
            * q_binomial(mi - ji, mi - 2 * ji, q)
            * rho.powi(mi - 2 * ji)
            * h[m - 2 * j].clone();
        if j % 2 == 0 {
            acc + v
        } else {
            acc - v
        }
    })
}

/// C_{k,n}(y,rho,q)/(1-q)^{n/2}: coefficient of P_k in k_n(x s|y s,rho)/s^n.
pub fn c_hat<T: Scalar>(k: usize, n: usize, y: &T, rho: &T, q: &T) -> T {
    if k > n {
        return T::zero();
    }
    if n == 0 {
        return T::one();
    }
    let m = n - k;
    let h = Family::QHermite { q: q.clone() }.recurrence_values(m, y);
    let inv = T::one() / (T::one() - q.clone());
    let rho2 = rho.clone() * rho.clone();
    let (ni, ki, mi) = (n as i64, k as i64, m as i64);
    (0..=m / 2).fold(T::zero(), |acc, j| {
        let ji = j as i64;
        let mix = q_binomial(ji + ki, ki, q) - rho2.clone() * q.powi(ki) * q_binomial(ji + ki - 1, ki, q);
        let v = inv.powi(ji)
            * q.powi(mi + ji * (ji - 3) / 2)
            * q_binomial(ni - 1 - ji, mi - 2 * ji, q)
            * mix
            * rho.powi(mi - 2 * ji)
            * h[m - 2 * j].clone();
        if j % 2 == 0 {
            acc + v
        } else {
            acc - v
        }
    })
}

/// D_{k,n}(y,rho,q) in the unscaled form U_n(x s/2) = sum_k D_{k,n} P_k.
pub fn d_coefficient(k: usize, n: usize, y: f64, rho: f64, q: f64) -> f64 {
    d_hat(k, n, &y, &rho, &q) * (1.0 - q).powf(n as f64 / 2.0)
}

/// C_{k,n}(y,rho,q) in the unscaled form k_n(x s|y s,rho) = sum_k C_{k,n} P_k.
pub fn c_coefficient(k: usize, n: usize, y: f64, rho: f64, q: f64) -> f64 {
    c_hat(k, n, &y, &rho, &q) * (1.0 - q).powf(n as f64 / 2.0)
}

/// Result of the ratio-driven connection algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioConnection {
    /// f_0 = 1 and sum_{i=0}^{n} f_{n-i} w_i = 0 for n >= 1.
    pub f: Vec<Rational>,
    /// phi_n = sum_i f_{n-i} a_i.
    pub phi: Vec<RationalPoly>,
}

/// Given W = B/A = 1 + sum_{i=1}^{N} w_i a_i/a-hat_i (w[0] = 1) and the monic
/// polynomials `a` orthogonal for A, build the sequence f and the polynomials
/// phi_n, which are orthogonal to constants under B for n >= 1.
pub fn ratio_connection(w: &[Rational], a: &[RationalPoly]) -> Result<RatioConnection> {
    if w.first().is_none_or(|w0| !w0.is_one()) {
        return Err(Error::NonunitW0);
    }
    for (i, p) in a.iter().enumerate() {
        if p.degree() != Some(i) || !p.leading().is_one() {
            return Err(Error::InvalidPair(format!("a_{i} must be monic of degree {i}")));
        }
    }
    let n_max = a.len().saturating_sub(1);
    let mut f: Vec<Rational> = Vec::with_capacity(n_max + 1);
    f.push(Rational::from_i64(1));
    for n in 1..=n_max {
        let s = (1..=n.min(w.len() - 1))
            .fold(Rational::from_i64(0), |acc, i| acc + f[n - i].clone() * w[i].clone());
        f.push(-s);
    }
    let phi = (0..=n_max)
        .map(|n| (0..=n).fold(Poly::zero(), |acc, i| acc.add(&a[i].scale(&f[n - i]))))
        .collect();
    Ok(RatioConnection { f, phi })
}

impl RatioConnection {
    /// Reconstruction a_n = sum_i w_i phi_{n-i}.
    pub fn reconstruct(&self, w: &[Rational], n: usize) -> RationalPoly {
        (0..=n.min(w.len() - 1)).fold(Poly::zero(), |acc, i| acc.add(&self.phi[n - i].scale(&w[i])))
    }
}

/// sum_j [n j]_q B_{n-j}(x|q) H_j(x|q) as an exact polynomial (zero for n >= 1).
pub fn bigb_hermite_sum(n: usize, q: &Rational) -> Result<RationalPoly> {
    let b = Family::BigB { q: q.clone() }.coeffs_all(n)?;
    let h = Family::QHermite { q: q.clone() }.coeffs_all(n)?;
    Ok((0..=n).fold(Poly::zero(), |acc, j| {
        acc.add(&b[n - j].mul(&h[j]).scale(&q_binomial(n as i64, j as i64, q)))
    }))
}

/// Right side of P_n(0|y,rho,q) = sum_j [n 2j]_q (-1)^j rho^{n-2j} B_{n-2j}(y|q) [2j-1]_q!!.
pub fn asc_at_zero<T: Scalar>(n: usize, y: &T, rho: &T, q: &T) -> T {
    let b = Family::BigB { q: q.clone() }.recurrence_values(n, y);
    (0..=n / 2).fold(T::zero(), |acc, j| {
        let v = q_binomial(n as i64, 2 * j as i64, q)
            * rho.powi((n - 2 * j) as i64)
            * b[n - 2 * j].clone()
            * q_double_factorial_odd(j, q);
        if j % 2 == 0 {
            acc + v
        } else {
            acc - v
        }
    })
}

/// Both sides of 1 - q^{n(n+1)/2} = sum_{j<n} (1-q)^{n-j} q^{j(j+1)/2} [2n-j choose j]_q [2n-2j-1]_q!!.
pub fn bracket_sum_identity<T: Scalar>(n: usize, q: &T) -> (T, T) {
    let ni = n as i64;
    let lhs = T::one() - q.powi(ni * (ni + 1) / 2);
    let rhs = (0..n).fold(T::zero(), |acc, j| {
        let ji = j as i64;
        acc + (T::one() - q.clone()).powi(ni - ji)
            * q.powi(ji * (ji + 1) / 2)
            * q_binomial(2 * ni - ji, ji, q)
            * q_double_factorial_odd(n - j, q)
    });
    (lhs, rhs)
}
