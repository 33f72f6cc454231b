//! q-calculus primitives: brackets, factorials, binomials, Pochhammer symbols
//! and truncated infinite products.
//!
//! The finite operations are generic over [`Scalar`] and exact on rationals.
//! Infinite products are float-only and carry an a-posteriori error bound.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Hard cap on the number of factors of any truncated infinite product.
pub const PRODUCT_CAP: usize = 1000;
/// Default relative truncation tolerance of infinite products.
pub const DEFAULT_TRUNC_EPS: f64 = 1e-14;

/// The interval S(q) = [-2/sqrt(1-q), 2/sqrt(1-q)].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SupportInterval {
    pub fn new(q: f64) -> Result<Self> {
        check_q_open(q)?;
        let hi = 2.0 / (1.0 - q).sqrt();
        Ok(Self { lo: -hi, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn contains_open(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn half_width(&self) -> f64 {
        self.hi
    }
}

/// Requires |q| < 1.
pub fn check_q_open(q: f64) -> Result<()> {
    if q.is_finite() && q.abs() < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("|q| < 1 required, got q = {q}")))
    }
}

/// Requires -1 < q <= 1 (q = 1 is the classical sentinel).
pub fn check_q_closed(q: f64) -> Result<()> {
    if q.is_finite() && q > -1.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("-1 < q <= 1 required, got q = {q}")))
    }
}

/// [n]_q = 1 + q + ... + q^{n-1}; zero for n = 0.
pub fn q_bracket<T: Scalar>(n: usize, q: &T) -> T {
    let mut acc = T::zero();
    let mut p = T::one();
    for _ in 0..n {
        acc = acc + p.clone();
        p = p * q.clone();
    }
    acc
}

/// [n]_q! = [1]_q [2]_q ... [n]_q.
pub fn q_factorial<T: Scalar>(n: usize, q: &T) -> T {
    let mut acc = T::one();
    let mut br = T::zero();
    let mut p = T::one();
    for _ in 1..=n {
        br = br + p.clone();
        p = p * q.clone();
        acc = acc * br.clone();
    }
    acc
}

/// Gaussian binomial [n choose k]_q, zero outside 0 <= k <= n.
///
/// Evaluated through the q-Pascal rule so that no division by a vanishing
/// bracket can occur (q = -1 included).
pub fn q_binomial<T: Scalar>(n: i64, k: i64, q: &T) -> T {
    if k < 0 || n < 0 || k > n {
        return T::zero();
    }
    let k = k.min(n - k) as usize;
    let n = n as usize;
    // row[j] = [m choose j]_q for the current m
    let mut row = vec![T::zero(); k + 1];
    row[0] = T::one();
    for m in 1..=n {
        let top = k.min(m);
        for j in (1..=top).rev() {
            // [m j] = [m-1 j-1] + q^j [m-1 j]
            let upper = if j < m { row[j].clone() } else { T::zero() };
            row[j] = row[j - 1].clone() + q.powi(j as i64) * upper;
        }
    }
    row[k].clone()
}

/// Rows 0..=n_max of the q-Pascal triangle, for loops that need many
/// Gaussian binomials at one q.
#[derive(Debug, Clone)]
pub struct QBinomialTable<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> QBinomialTable<T> {
    pub fn new(n_max: usize, q: &T) -> Self {
        let powers: Vec<T> = (0..=n_max).scan(T::one(), |p, _| {
            let cur = p.clone();
            *p = p.clone() * q.clone();
            Some(cur)
        })
        .collect();
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(n_max + 1);
        rows.push(vec![T::one()]);
        for m in 1..=n_max {
            let prev = &rows[m - 1];
            let row = (0..=m)
                .map(|j| {
                    let left = if j >= 1 { prev[j - 1].clone() } else { T::zero() };
                    let up = if j < m { powers[j].clone() * prev[j].clone() } else { T::zero() };
                    left + up
                })
                .collect();
            rows.push(row);
        }
        Self { rows }
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    /// [n choose k]_q, zero outside 0 <= k <= n. Panics past n_max.
    pub fn get(&self, n: i64, k: i64) -> T {
        if k < 0 || n < 0 || k > n {
            return T::zero();
        }
        self.rows[n as usize][k as usize].clone()
    }

    /// W_n(q), the sum of row n.
    pub fn row_sum(&self, n: usize) -> T {
        self.rows[n].iter().fold(T::zero(), |acc, v| acc + v.clone())
    }
}

/// Coefficients (in powers of q) of the Gaussian binomial polynomial.
pub fn q_binomial_poly(n: usize, k: usize) -> Vec<BigInt> {
    if k > n {
        return vec![BigInt::zero()];
    }
    // table[j] holds the polynomial [m choose j]_q
    let mut table: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
    for m in 1..=n {
        let mut next: Vec<Vec<BigInt>> = Vec::with_capacity(m + 1);
        for j in 0..=m {
            let mut p = vec![BigInt::zero(); j * (m - j) + 1];
            if j >= 1 {
                for (i, c) in table[j - 1].iter().enumerate() {
                    p[i] += c;
                }
            }
            if j < m {
                for (i, c) in table[j].iter().enumerate() {
                    p[i + j] += c;
                }
            }
            next.push(p);
        }
        table = next;
    }
    table.swap_remove(k)
}

/// [2k-1]_q!! = [1]_q [3]_q ... [2k-1]_q, equal to 1 for k = 0.
pub fn q_double_factorial_odd<T: Scalar>(k: usize, q: &T) -> T {
    (1..=k).fold(T::one(), |acc, i| acc * q_bracket(2 * i - 1, q))
}

/// Finite Pochhammer symbol (a;q)_n.
pub fn q_pochhammer<T: Scalar>(a: &T, q: &T, n: usize) -> T {
    let mut acc = T::one();
    let mut p = a.clone();
    for _ in 0..n {
        acc = acc * (T::one() - p.clone());
        p = p * q.clone();
    }
    acc
}

/// A truncated infinite product with its error bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductValue {
    pub value: f64,
    /// Bound on |log(true) - log(value)|.
    pub log_error: f64,
    /// Number of factors multiplied.
    pub terms: usize,
}

impl ProductValue {
    /// Bound on the absolute error of `value`.
    pub fn abs_error(&self) -> f64 {
        self.value.abs() * self.log_error.exp_m1()
    }

    pub fn one() -> Self {
        Self { value: 1.0, log_error: 0.0, terms: 0 }
    }

    /// Product of two independently truncated products.
    pub fn mul(self, other: Self) -> Self {
        Self {
            value: self.value * other.value,
            log_error: self.log_error + other.log_error,
            terms: self.terms + other.terms,
        }
    }

    pub fn recip(self) -> Self {
        Self { value: 1.0 / self.value, ..self }
    }
}

/// Product of `factor(k)` over k >= `start`, where |factor(k) - 1| <= amp |q|^k.
///
/// Accumulates logarithms, stops at the first K with amp |q|^K <= eps (1-|q|)/4
/// and reports the analytic tail bound 2 amp |q|^K / (1-|q|).
pub fn infinite_product(
    start: usize,
    amp: f64,
    q: f64,
    eps: f64,
    factor: impl Fn(usize) -> f64,
) -> Result<ProductValue> {
    check_q_open(q)?;
    if !(eps > 0.0) {
        return Err(invalid("truncation eps must be positive"));
    }
    let aq = q.abs();
    let stop = eps * (1.0 - aq) / 4.0;
    let mut log_sum = 0.0;
    let mut sign = 1.0;
    let mut k = start;
    let mut amp_k = amp * aq.powi(start as i32);
    loop {
        if amp_k <= stop && amp_k <= 0.5 {
            break;
        }
        if k - start >= PRODUCT_CAP {
            return Err(Error::ProductNonconvergence(PRODUCT_CAP));
        }
        let f = factor(k);
        if f == 0.0 {
            return Ok(ProductValue { value: 0.0, log_error: 0.0, terms: k - start + 1 });
        }
        if f < 0.0 {
            sign = -sign;
        }
        log_sum += f.abs().ln();
        k += 1;
        amp_k *= aq;
    }
    let tail = 2.0 * amp_k / (1.0 - aq);
    Ok(ProductValue { value: sign * log_sum.exp(), log_error: tail, terms: k - start })
}

/// (a;q)_inf truncated to relative tolerance `eps`.
pub fn q_pochhammer_inf(a: f64, q: f64, eps: f64) -> Result<ProductValue> {
    check_q_open(q)?;
    infinite_product(0, a.abs(), q, eps, |k| 1.0 - a * q.powi(k as i32))
}

/// W_n(q) = sum_i [n choose i]_q.
pub fn w_sum<T: Scalar>(n: usize, q: &T) -> T {
    (0..=n).fold(T::zero(), |acc, i| acc + q_binomial(n as i64, i as i64, q))
}

/// V_n(q, beta) = sum_i (beta;q)_i (beta;q)_{n-i} / ((q;q)_i (q;q)_{n-i}).
pub fn v_sum<T: Scalar>(n: usize, q: &T, beta: &T) -> T {
    (0..=n).fold(T::zero(), |acc, i| {
        acc + q_pochhammer(beta, q, i) * q_pochhammer(beta, q, n - i)
            / (q_pochhammer(q, q, i) * q_pochhammer(q, q, n - i))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int, Rational};

    #[test]
    fn bracket_base_cases() {
        assert_eq!(q_bracket(0, &rat(1, 3)), rat_int(0));
        assert_eq!(q_bracket(3, &rat_int(1)), rat_int(3));
        assert_eq!(q_bracket(3, &rat(1, 2)), rat(7, 4));
    }

    #[test]
    fn factorial_and_double_factorial() {
        let q = rat(2, 5);
        assert_eq!(q_factorial(2, &q), rat_int(1) + q.clone());
        assert_eq!(q_double_factorial_odd(0, &q), rat_int(1));
        assert_eq!(q_double_factorial_odd(2, &q), q_bracket(3, &q));
    }

    #[test]
    fn binomial_four_two_polynomial() {
        let c: Vec<i64> = q_binomial_poly(4, 2).iter().map(|b| b.try_into().unwrap()).collect();
        assert_eq!(c, vec![1, 1, 2, 1, 1]);
        let q = rat(3, 7);
        let expect = rat_int(1) + q.clone() + rat_int(2) * q.powi(2) + q.powi(3) + q.powi(4);
        assert_eq!(q_binomial(4, 2, &q), expect);
        assert_eq!(q_binomial(2, 3, &q), rat_int(0));
        assert_eq!(q_binomial(3, -1, &q), rat_int(0));
    }

    #[test]
    fn binomial_at_minus_one_is_finite() {
        // [4 choose 2]_{-1} = 1 - 1 + 2 - 1 + 1
        assert_eq!(q_binomial(4, 2, &rat_int(-1)), rat_int(2));
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(q_pochhammer(&rat(1, 2), &rat(1, 2), 3), rat(21, 64));
        assert_eq!(q_pochhammer(&rat(5, 3), &rat(1, 7), 0), rat_int(1));
    }

    #[test]
    fn q_q_pochhammer_is_scaled_factorial() {
        for q in [rat(1, 3), rat(-2, 5), rat(7, 9)] {
            for n in 0..=20 {
                let lhs = q_pochhammer(&q, &q, n);
                let rhs = (rat_int(1) - q.clone()).powi(n as i64) * q_factorial(n, &q);
                assert_eq!(lhs, rhs, "n = {n}");
            }
        }
    }

    #[test]
    fn double_factorial_is_odd_pochhammer() {
        for q in [rat(1, 3), rat(-3, 4)] {
            let q2 = q.clone() * q.clone();
            for k in 0..=15usize {
                let lhs = (rat_int(1) - q.clone()).powi(k as i64) * q_double_factorial_odd(k, &q);
                assert_eq!(lhs, q_pochhammer(&q, &q2, k), "k = {k}");
                if k >= 1 {
                    // the shifted index does not hold
                    assert_ne!(lhs, q_pochhammer(&q, &q2, k - 1), "k = {k}");
                }
            }
        }
    }

    #[test]
    fn infinite_pochhammer_matches_long_finite_product() {
        for (a, q) in [(0.5, 0.5), (-0.9, 0.9), (0.3, -0.7)] {
            let p = q_pochhammer_inf(a, q, 1e-14).unwrap();
            let direct: f64 = q_pochhammer(&a, &q, 5000);
            assert!((p.value - direct).abs() <= p.abs_error() + 1e-12 * direct.abs(), "{a} {q}");
        }
        assert!(q_pochhammer_inf(0.5, 1.0, 1e-14).is_err());
    }

    #[test]
    fn w_and_v_small_cases() {
        let q = rat(1, 3);
        assert_eq!(w_sum(0, &q), rat_int(1));
        assert_eq!(w_sum(2, &q), rat_int(3) + q.clone());
        let zero: Rational = rat_int(0);
        // V_n(q, 0) = W_n(q) / (q;q)_n
        for n in 0..8 {
            assert_eq!(v_sum(n, &q, &zero), w_sum(n, &q) / q_pochhammer(&q, &q, n));
        }
    }

    #[test]
    fn binomial_table_matches_pascal() {
        let q = rat(-2, 5);
        let t = QBinomialTable::new(12, &q);
        for n in 0..=12i64 {
            for k in -1..=n + 1 {
                assert_eq!(t.get(n, k), q_binomial(n, k, &q), "n={n} k={k}");
            }
            assert_eq!(t.row_sum(n as usize), w_sum(n as usize, &q));
        }
    }
}
