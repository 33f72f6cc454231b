//! Verification harness: orthogonality and norms, projections, kernel
//! composition, special values, degenerations and bounds, plus the aggregate
//! runner behind `qortho verify`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::connect::{d_coefficient, oracle_connection, Pair};
use crate::densities::DensityId;
use crate::error::{Error, Result};
use crate::expand::{identity_suite, IdentityConfig};
use crate::polyfam::{max_bound, special_value, Family, FamilyId, Poly, SpecialPoint};
use crate::qcore::{q_factorial, q_pochhammer};
use crate::quadrature::{integrate, integrate_many, integrate_with, QuadOptions};
use crate::scalar::{rat, rat_int, Rational, Scalar};

/// Default tolerance of single quadrature checks.
pub const QUAD_TOL: f64 = 1e-8;
/// Default tolerance of checks that integrate a product of two densities.
pub const KERNEL_TOL: f64 = 1e-6;

/// One check: residual against tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check_id: String,
    pub params: Value,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Residual is |lhs - rhs| / max(1, |rhs|) rather than |lhs - rhs|.
    pub relative: bool,
    /// Truncation or quadrature error bound used, when one applies.
    pub truncation: Option<f64>,
}

impl VerificationReport {
    pub fn new(check_id: impl Into<String>, params: Value, residual: f64, tolerance: f64) -> Self {
        Self {
            check_id: check_id.into(),
            params,
            residual,
            tolerance,
            pass: residual <= tolerance,
            relative: false,
            truncation: None,
        }
    }

    /// Compares two values; relative to |rhs| once it exceeds one.
    pub fn compare(check_id: impl Into<String>, params: Value, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let scale = rhs.abs().max(1.0);
        let mut r = Self::new(check_id, params, (lhs - rhs).abs() / scale, tolerance);
        r.relative = scale > 1.0;
        r
    }

    /// Absolute comparison.
    pub fn absolute(check_id: impl Into<String>, params: Value, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::new(check_id, params, (lhs - rhs).abs(), tolerance)
    }

    /// Exact check: passes iff `ok`.
    pub fn exact(check_id: impl Into<String>, params: Value, ok: bool) -> Self {
        Self::new(check_id, params, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    /// A check that could not be evaluated.
    pub fn failed(check_id: impl Into<String>, mut params: Value, err: &Error) -> Self {
        if let Value::Object(m) = &mut params {
            m.insert("error".into(), Value::String(err.to_string()));
        }
        Self::new(check_id, params, f64::INFINITY, 0.0)
    }

    pub fn with_truncation(mut self, bound: f64) -> Self {
        self.truncation = Some(bound);
        self
    }

    fn retolerate(&mut self, tol: f64) {
        self.tolerance = tol;
        self.pass = self.residual <= tol;
    }
}

/// CSV with columns check_id, params_json, residual, tolerance, pass.
pub fn reports_to_csv(reports: &[VerificationReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["check_id", "params_json", "residual", "tolerance", "pass"])
        .expect("in-memory write");
    for r in reports {
        w.write_record([
            r.check_id.clone(),
            r.params.to_string(),
            format!("{:e}", r.residual),
            format!("{:e}", r.tolerance),
            r.pass.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// The density under which a family is orthogonal, when it lives on S(q).
pub fn orthogonality_density(family: &FamilyId) -> Option<DensityId> {
    Some(match *family {
        Family::QHermite { q } if q < 1.0 => DensityId::n(q),
        Family::Asc { y, rho, q } if q < 1.0 => DensityId::cn(y, rho, q),
        Family::Rogers { beta, q } if q < 1.0 => DensityId::r(beta, q),
        Family::ChebUHat { q } => DensityId::u(q),
        Family::ChebTHat { q } => DensityId::t(q),
        Family::KestenHat { y, rho, q } => DensityId::k(y, rho, q),
        Family::Kesten { y, rho } => DensityId::k(y, rho, 0.0),
        _ => return None,
    })
}

fn params_of(family: &FamilyId, density: &DensityId) -> Value {
    json!({"family": family, "density": density.kind})
}

/// Gram matrix G[n][m] = integral of F_n F_m against the density, n, m <= n_max.
///
/// The quadrature runs on F_n / sqrt(norm_n) so that convergence is judged on
/// an O(1) scale even when the norms grow like (1-q)^{-n}; the returned
/// error estimate is on that scale.
pub fn gram_matrix(
    family: &FamilyId,
    density: &DensityId,
    n_max: usize,
    opts: QuadOptions,
) -> Result<(Vec<Vec<f64>>, f64)> {
    family.validate()?;
    let dim = n_max + 1;
    let scale = (0..dim)
        .map(|n| family.norm(n).map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }))
        .collect::<Result<Vec<f64>>>()?;
    let (flat, err) = integrate_many(density.q(), opts, dim * dim, |x, out| {
        let d = density.eval(x).unwrap_or(f64::NAN);
        let v = family.eval_all(n_max, &x).unwrap_or_else(|_| vec![f64::NAN; dim]);
        for i in 0..dim {
            for j in 0..dim {
                out[i * dim + j] = d * (v[i] / scale[i]) * (v[j] / scale[j]);
            }
        }
    })?;
    let g = (0..dim)
        .map(|i| (0..dim).map(|j| flat[i * dim + j] * scale[i] * scale[j]).collect())
        .collect();
    Ok((g, err))
}

/// Whether the norms grow like (1-q)^{-n}; such families are compared
/// relative to sqrt(norm_n norm_m).
fn hat_scaled(family: &FamilyId) -> bool {
    matches!(family, Family::ChebUHat { .. } | Family::ChebTHat { .. } | Family::KestenHat { .. })
}

fn gram_report(family: &FamilyId, density: &DensityId, g: &[Vec<f64>], n: usize, m: usize, tol: f64, err: f64) -> Result<VerificationReport> {
    let (nn, nm) = (family.norm(n)?, family.norm(m)?);
    let expect = if n == m { nn } else { 0.0 };
    let mut p = params_of(family, density);
    p["n"] = json!(n);
    p["m"] = json!(m);
    let mut r = if hat_scaled(family) {
        let scale = (nn * nm).sqrt().max(1.0);
        let mut r = VerificationReport::new("orthogonality", p, (g[n][m] - expect).abs() / scale, tol);
        r.relative = scale > 1.0;
        r
    } else {
        VerificationReport::absolute("orthogonality", p, g[n][m], expect, tol)
    };
    r.truncation = Some(err);
    Ok(r)
}

/// Integral of F_n F_m against the density against 0 (n != m) or the
/// closed-form norm (n = m), absolute residual.
pub fn check_orthogonality(
    family: &FamilyId,
    density: &DensityId,
    n: usize,
    m: usize,
    tol: f64,
) -> Result<VerificationReport> {
    if orthogonality_density(family).as_ref() != Some(density) {
        return Err(Error::InvalidPair(format!("{family} is not orthogonal under {:?}", density.kind)));
    }
    let (g, err) = gram_matrix(family, density, n.max(m), QuadOptions::default())?;
    gram_report(family, density, &g, n, m, tol, err)
}

/// All pairs n, m <= n_max in one quadrature pass.
pub fn orthogonality_grid(family: &FamilyId, n_max: usize, tol: f64) -> Result<Vec<VerificationReport>> {
    let density = orthogonality_density(family)
        .ok_or_else(|| Error::InvalidPair(format!("{family} has no density on S(q)")))?;
    let (g, err) = gram_matrix(family, &density, n_max, QuadOptions::default())?;
    let mut out = Vec::with_capacity((n_max + 1) * (n_max + 1));
    for n in 0..=n_max {
        for m in 0..=n_max {
            out.push(gram_report(family, &density, &g, n, m, tol, err)?);
        }
    }
    Ok(out)
}

/// Integral of H_n(x|q) f_CN(x|y,rho,q) dx against rho^n H_n(y|q).
pub fn check_projection(n: usize, y: f64, rho: f64, q: f64, tol: f64) -> Result<VerificationReport> {
    let d = DensityId::cn(y, rho, q);
    d.validate()?;
    let h = Family::QHermite { q };
    let r = integrate(q, QuadOptions::default(), |x| h.eval(n, &x).unwrap_or(f64::NAN) * d.eval(x).unwrap_or(f64::NAN))?;
    let rhs = rho.powi(n as i32) * h.eval(n, &y)?;
    let p = json!({"n": n, "y": y, "rho": rho, "q": q});
    Ok(VerificationReport::absolute("projection", p, r.value, rhs, tol).with_truncation(r.error))
}

/// Integral of f_CN(x|y,rho1,q) f_CN(y|z,rho2,q) dy against f_CN(x|z,rho1 rho2,q).
/// At q = 1 the Gaussian forms are integrated over rho2 z +- 12 sd.
pub fn check_chapman(x: f64, z: f64, rho1: f64, rho2: f64, q: f64, tol: f64) -> Result<VerificationReport> {
    let outer = DensityId::cn(z, rho1 * rho2, q);
    outer.validate()?;
    DensityId::cn(z, rho2, q).validate()?;
    let integrand = |y: f64| -> f64 {
        let a = DensityId::cn(y, rho1, q).eval(x).unwrap_or(f64::NAN);
        let b = DensityId::cn(z, rho2, q).eval(y).unwrap_or(f64::NAN);
        a * b
    };
    let opts = QuadOptions::with_tol(tol * 1e-2);
    let r = if q < 1.0 {
        integrate(q, opts, integrand)?
    } else {
        let c = rho2 * z;
        let half = 12.0 * (1.0 - rho2 * rho2).sqrt();
        integrate_with(opts, |rule| rule.integrate_theta(|t| integrand(c + half * t.cos()) * half * t.sin()))?
    };
    let rhs = outer.eval(x)?;
    let p = json!({"x": x, "z": z, "rho1": rho1, "rho2": rho2, "q": q});
    Ok(VerificationReport::absolute("chapman", p, r.value, rhs, tol).with_truncation(r.error))
}

/// Integral of U_n(x s/2) P_k(x|y,rho,q) f_CN(x|y,rho,q) dx against
/// D_{k,n} (rho^2)_k [k]!.
pub fn check_d_integral(k: usize, n: usize, y: f64, rho: f64, q: f64, tol: f64) -> Result<VerificationReport> {
    if k > n {
        return Err(crate::error::invalid("check_d_integral needs k <= n"));
    }
    let d = DensityId::cn(y, rho, q);
    d.validate()?;
    let s = (1.0 - q).sqrt();
    let p_fam = Family::Asc { y, rho, q };
    let r = integrate(q, QuadOptions::default(), |x| {
        let u = Family::<f64>::ChebU.eval(n, &(x * s / 2.0)).unwrap_or(f64::NAN);
        u * p_fam.eval(k, &x).unwrap_or(f64::NAN) * d.eval(x).unwrap_or(f64::NAN)
    })?;
    let rhs = d_coefficient(k, n, y, rho, q) * q_pochhammer(&(rho * rho), &q, k) * q_factorial(k, &q);
    let p = json!({"k": k, "n": n, "y": y, "rho": rho, "q": q});
    Ok(VerificationReport::absolute("d_integral", p, r.value, rhs, tol).with_truncation(r.error))
}

/// |integral of the density over S(q) - 1|.
pub fn check_normalization(d: &DensityId, tol: f64) -> VerificationReport {
    let p = json!({"density": d.kind});
    match d.normalize_check(QuadOptions::default()) {
        Ok(r) => VerificationReport::new("normalization", p, r, tol),
        Err(e) => VerificationReport::failed("normalization", p, &e),
    }
}

/// Quadrature weights w_i = integral of a_i against the density B, the input
/// of [`crate::connect::ratio_connection`] when B/A is not known in closed form.
pub fn ratio_weights(family: &FamilyId, b: &DensityId, n_max: usize) -> Result<Vec<f64>> {
    family.validate()?;
    let (w, _) = integrate_many(b.q(), QuadOptions::default(), n_max + 1, |x, out| {
        let d = b.eval(x).unwrap_or(f64::NAN);
        let v = family.eval_all(n_max, &x).unwrap_or_else(|_| vec![f64::NAN; n_max + 1]);
        for (o, p) in out.iter_mut().zip(v) {
            *o = d * p;
        }
    })?;
    Ok(w)
}

fn point_value(point: SpecialPoint, q: &Rational) -> Option<Rational> {
    Some(match point {
        SpecialPoint::Zero => rat_int(0),
        SpecialPoint::One => rat_int(1),
        SpecialPoint::Half => rat(1, 2),
        SpecialPoint::Boundary => rat_int(2) / (rat_int(1) - q.clone()).sqrt_opt()?,
    })
}

/// Every special-value table entry against recurrence evaluation, n <= n_max,
/// exact on rationals.
pub fn special_value_checks(n_max: usize, seed: u64) -> Vec<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_unit(&mut rng);
    // 1 - q a perfect square keeps the boundary rational
    let q_square = rat(5, 9);
    let (y, rho, beta) = (random_real(&mut rng), random_unit(&mut rng), random_unit(&mut rng));
    let cases: Vec<(Family<Rational>, SpecialPoint)> = vec![
        (Family::ChebU, SpecialPoint::Zero),
        (Family::ChebU, SpecialPoint::One),
        (Family::ChebU, SpecialPoint::Half),
        (Family::QHermite { q: q.clone() }, SpecialPoint::Zero),
        (Family::QHermite { q: q_square.clone() }, SpecialPoint::Boundary),
        (Family::Kesten { y: y.clone(), rho: rho.clone() }, SpecialPoint::Zero),
        (Family::Kesten { y: y.clone(), rho: rho.clone() }, SpecialPoint::One),
        (Family::BigB { q: q.clone() }, SpecialPoint::Zero),
        (Family::Rogers { beta, q: q.clone() }, SpecialPoint::Zero),
    ];
    cases
        .into_iter()
        .map(|(family, point)| {
            let p = json!({"family": family.to_f64(), "point": point, "n_max": n_max});
            let qf = match &family {
                Family::QHermite { q } => q.clone(),
                _ => rat_int(0),
            };
            let x = point_value(point, &qf).expect("rational special point");
            let run = || -> Result<bool> {
                let vals = family.eval_all(n_max, &x)?;
                for (n, v) in vals.iter().enumerate() {
                    if special_value(&family, point, n)? != *v {
                        return Ok(false);
                    }
                }
                Ok(true)
            };
            match run() {
                Ok(ok) => VerificationReport::exact("special_value", p, ok),
                Err(e) => VerificationReport::failed("special_value", p, &e),
            }
        })
        .collect()
}

/// Polynomial degenerations, exact on rationals for n <= n_max.
pub fn degeneration_checks(n_max: usize, seed: u64) -> Vec<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_unit(&mut rng);
    let (y, rho) = (random_real(&mut rng), random_unit(&mut rng));
    let zero = rat_int(0);
    let p = json!({"q": q.to_f64(), "y": y.to_f64(), "rho": rho.to_f64(), "n_max": n_max});
    let same = |a: &Family<Rational>, b: &Family<Rational>| -> Result<bool> {
        Ok(a.coeffs_all(n_max)? == b.coeffs_all(n_max)?)
    };
    let mut out = Vec::new();
    let mut push = |id: &str, r: Result<bool>| {
        out.push(match r {
            Ok(ok) => VerificationReport::exact(id, p.clone(), ok),
            Err(e) => VerificationReport::failed(id, p.clone(), &e),
        })
    };
    let hq = Family::QHermite { q: q.clone() };
    push("degeneration.rogers_beta0", same(&Family::Rogers { beta: zero.clone(), q: q.clone() }, &hq));
    push("degeneration.asc_rho0", same(&Family::Asc { y: y.clone(), rho: zero.clone(), q: q.clone() }, &hq));
    push(
        "degeneration.asc_q0",
        same(&Family::Asc { y: y.clone(), rho: rho.clone(), q: zero.clone() }, &Family::Kesten { y: y.clone(), rho: rho.clone() }),
    );
    push("degeneration.hermite_q1", same(&Family::QHermite { q: rat_int(1) }, &Family::ClassicalHermite));
    push(
        "degeneration.hermite_q0",
        (|| {
            let h = Family::QHermite { q: zero.clone() }.coeffs_all(n_max)?;
            let u = Family::<Rational>::ChebU.coeffs_all(n_max)?;
            Ok(h.iter().zip(&u).all(|(h, u)| *h == u.rescale_arg(&rat(1, 2))))
        })(),
    );
    push(
        "degeneration.asc_diagonal",
        (|| {
            let r = Family::Rogers { beta: rho.clone(), q: q.clone() };
            for _ in 0..10 {
                let x = random_real(&mut rng);
                let a = Family::Asc { y: x.clone(), rho: rho.clone(), q: q.clone() }.eval_all(n_max, &x)?;
                if a != r.eval_all(n_max, &x)? {
                    return Ok(false);
                }
            }
            Ok(true)
        })(),
    );
    push(
        "degeneration.asc_q1",
        (|| {
            let f = Family::Asc { y: y.clone(), rho: rho.clone(), q: rat_int(1) };
            let closed = f.coeffs_all(n_max)?;
            let x = Poly::monomial(1);
            // raw recurrence with a = 1, b = rho y, c_n = (1 - rho^2) n
            let mut prev: Poly<Rational> = Poly::zero();
            let mut cur = Poly::constant(rat_int(1));
            for (n, c) in closed.iter().enumerate() {
                if *c != cur {
                    return Ok(false);
                }
                let (a, b, cn) = f.recurrence(n);
                let next = cur.mul(&x).scale(&a).sub(&cur.scale(&b)).sub(&prev.scale(&cn));
                prev = cur;
                cur = next;
            }
            Ok(true)
        })(),
    );
    out
}

/// Density degenerations on a grid, compared in floats.
pub fn density_degeneration_checks(q_grid: &[f64], tol: f64) -> Vec<VerificationReport> {
    let mut out = Vec::new();
    let gauss = |x: f64, m: f64, v: f64| (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
    let mut worst = |id: &str, p: Value, pairs: Vec<Result<(f64, f64)>>, tol: f64| {
        let mut r = 0.0f64;
        for pr in pairs {
            match pr {
                Ok((a, b)) => r = r.max((a - b).abs() / b.abs().max(1.0)),
                Err(e) => {
                    out.push(VerificationReport::failed(id, p.clone(), &e));
                    return;
                }
            }
        }
        out.push(VerificationReport::new(id, p, r, tol));
    };
    let xs0: Vec<f64> = (1..40).map(|i| -2.0 + 0.1 * i as f64).collect();
    worst(
        "degeneration.fn_q0",
        json!({}),
        xs0.iter().map(|&x| Ok((DensityId::n(0.0).eval(x)?, (4.0 - x * x).sqrt() / (2.0 * PI)))).collect(),
        tol,
    );
    let xs1: Vec<f64> = (0..41).map(|i| -5.0 + 0.25 * i as f64).collect();
    worst(
        "degeneration.fn_q1",
        json!({}),
        xs1.iter().map(|&x| Ok((DensityId::n(1.0).eval(x)?, gauss(x, 0.0, 1.0)))).collect(),
        tol,
    );
    let (y, rho) = (0.7, 0.45);
    worst(
        "degeneration.fcn_q1",
        json!({"y": y, "rho": rho}),
        xs1.iter().map(|&x| Ok((DensityId::cn(y, rho, 1.0).eval(x)?, gauss(x, rho * y, 1.0 - rho * rho)))).collect(),
        tol,
    );
    for &q in q_grid {
        let a = 2.0 / (1.0 - q).sqrt();
        let xs: Vec<f64> = (1..40).map(|i| a * (i as f64 / 20.0 - 1.0)).collect();
        worst(
            "degeneration.fcn_rho0",
            json!({"q": q}),
            xs.iter().map(|&x| Ok((DensityId::cn(0.3, 0.0, q).eval(x)?, DensityId::n(q).eval(x)?))).collect(),
            tol,
        );
        worst(
            "degeneration.fr_beta0",
            json!({"q": q}),
            xs.iter().map(|&x| Ok((DensityId::r(0.0, q).eval(x)?, DensityId::n(q).eval(x)?))).collect(),
            tol,
        );
        // beta -> 1 from below: f_R -> f_T with error O(1 - beta)
        worst(
            "degeneration.fr_beta1",
            json!({"q": q, "beta": 1.0 - 1e-9}),
            xs.iter().map(|&x| Ok((DensityId::r(1.0 - 1e-9, q).eval(x)?, DensityId::t(q).eval(x)?))).collect(),
            1e-6,
        );
    }
    let xs: Vec<f64> = (1..40).map(|i| -2.0 + 0.1 * i as f64).collect();
    worst(
        "degeneration.fcn_q0",
        json!({"y": y, "rho": rho}),
        xs.iter().map(|&x| Ok((DensityId::cn(y, rho, 0.0).eval(x)?, DensityId::k(y, rho, 0.0).eval(x)?))).collect(),
        tol,
    );
    out
}

/// max over a grid of S(q) of |F_n| against the closed-form bound.
pub fn bound_checks(q_grid: &[f64], n_max: usize) -> Vec<VerificationReport> {
    let mut out = Vec::new();
    for &q in q_grid {
        let families = [Family::QHermite { q }, Family::Rogers { beta: 0.4, q }, Family::Rogers { beta: -0.7, q }];
        let a = 2.0 / (1.0 - q).sqrt();
        for f in families {
            let mut worst = 0.0f64;
            let res = (|| -> Result<()> {
                for i in 0..=2000 {
                    let x = a * (i as f64 / 1000.0 - 1.0);
                    for (n, v) in f.eval_all(n_max, &x)?.iter().enumerate() {
                        worst = worst.max(v.abs() / max_bound(&f, n)?);
                    }
                }
                Ok(())
            })();
            let p = json!({"family": f, "n_max": n_max});
            out.push(match res {
                // ratio <= 1 up to rounding
                Ok(()) => VerificationReport::new("max_bound", p, (worst - 1.0).max(0.0), 1e-12),
                Err(e) => VerificationReport::failed("max_bound", p, &e),
            });
        }
    }
    out
}

fn random_unit(rng: &mut ChaCha8Rng) -> Rational {
    let d: i64 = rng.gen_range(2..=9);
    rat(rng.gen_range(-(d - 1)..=(d - 1)), d)
}

fn random_real(rng: &mut ChaCha8Rng) -> Rational {
    let d: i64 = rng.gen_range(1..=7);
    rat(rng.gen_range(-3 * d..=3 * d), d)
}

/// One random draw of every closed-form connection pair.
pub fn random_pairs(rng: &mut ChaCha8Rng) -> Vec<Pair<Rational>> {
    let mut u = || random_unit(rng);
    let (q, rho, beta, gamma) = (u(), u(), u(), u());
    let y = random_real(rng);
    vec![
        Pair::AscToHermite { y: y.clone(), rho: rho.clone(), q: q.clone() },
        Pair::HermiteToAsc { y: y.clone(), rho: rho.clone(), q: q.clone() },
        Pair::ChebUHatToHermite { q: q.clone() },
        Pair::HermiteToChebUHat { q: q.clone() },
        Pair::RogersToRogers { gamma: gamma.clone(), beta: beta.clone(), q: q.clone() },
        Pair::RogersToHermite { gamma, q: q.clone() },
        Pair::HermiteToRogers { beta, q: q.clone() },
        Pair::ChebUHatToAsc { y: y.clone(), rho: rho.clone(), q: q.clone() },
        Pair::KestenHatToAsc { y: y.clone(), rho: rho.clone(), q },
        Pair::ChebTFromU,
        Pair::ChebUFromT,
        Pair::HermiteToClassicalAsc { y, rho },
    ]
}

fn pair_value(p: &Pair<Rational>) -> Value {
    serde_json::to_value(p.map(|v| v.to_f64())).unwrap_or(Value::Null)
}

fn pair_name(p: &Pair<Rational>) -> String {
    Some(pair_value(p))
        .and_then(|v| v.get("pair").and_then(|s| s.as_str()).map(str::to_owned))
        .unwrap_or_default()
}

/// Every closed-form connection row against the exact oracle for n <= n_max,
/// over `draws` random rational parameter sets.
pub fn connection_suite(draws: usize, n_max: usize, seed: u64) -> Vec<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<Pair<Rational>> = (0..draws).flat_map(|_| random_pairs(&mut rng)).collect();
    let mut out: Vec<VerificationReport> = all
        .par_iter()
        .map(|pair| {
            let p = json!({"pair": pair_value(pair), "n_max": n_max});
            let id = format!("connection.{}", pair_name(pair));
            let run = || -> Result<bool> {
                let closed = pair.matrix(n_max)?;
                let oracle = oracle_connection(&pair.source(), &pair.target(), n_max)?;
                Ok(closed.rows == oracle.rows)
            };
            match run() {
                Ok(ok) => VerificationReport::exact(id, p, ok),
                Err(e) => VerificationReport::failed(id, p, &e),
            }
        })
        .collect();
    out.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    out
}

/// Check groups selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    Orthogonality,
    Projection,
    Chapman,
    DIntegral,
    Normalization,
    SpecialValues,
    Degenerations,
    Bounds,
    Identities,
    Connections,
}

impl Suite {
    pub const NAMES: [&'static str; 11] = [
        "all",
        "orthogonality",
        "projection",
        "chapman",
        "d-integral",
        "normalization",
        "special-values",
        "degenerations",
        "bounds",
        "identities",
        "connections",
    ];

    pub fn parse(s: &str) -> Option<Self> {
        use Suite::*;
        let all = [
            All,
            Orthogonality,
            Projection,
            Chapman,
            DIntegral,
            Normalization,
            SpecialValues,
            Degenerations,
            Bounds,
            Identities,
            Connections,
        ];
        Self::NAMES.iter().position(|n| *n == s).map(|i| all[i])
    }
}

/// Configuration of [`run_all`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub suite: Suite,
    pub q_grid: Vec<f64>,
    /// Overrides the tolerance of every floating-point check.
    pub tol: Option<f64>,
    /// Keeps only reports whose check id starts with this prefix.
    pub check: Option<String>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { suite: Suite::All, q_grid: vec![-0.5, 0.0, 0.3, 0.7], tol: None, check: None, seed: 0x5eed }
    }
}

/// Runs the selected checks; reports sorted by check id.
pub fn run_all(cfg: &RunConfig) -> Vec<VerificationReport> {
    let want = |s: Suite| cfg.suite == Suite::All || cfg.suite == s;
    let mut out: Vec<VerificationReport> = Vec::new();
    let mut collect = |r: Result<Vec<VerificationReport>>, id: &str, p: Value| match r {
        Ok(v) => out.extend(v),
        Err(e) => out.push(VerificationReport::failed(id, p, &e)),
    };
    let qs = cfg.q_grid.clone();
    if want(Suite::Orthogonality) {
        let fams: Vec<FamilyId> = qs
            .iter()
            .flat_map(|&q| {
                vec![
                    Family::QHermite { q },
                    Family::Asc { y: 0.0, rho: 0.5, q },
                    Family::Asc { y: 1.0, rho: 0.3, q },
                    Family::Rogers { beta: 0.2, q },
                    Family::Rogers { beta: 0.6, q },
                    Family::ChebUHat { q },
                    Family::ChebTHat { q },
                    Family::KestenHat { y: 1.0, rho: 0.5, q },
                ]
            })
            .collect();
        let res: Vec<_> = fams.par_iter().map(|f| (f.clone(), orthogonality_grid(f, 10, QUAD_TOL))).collect();
        for (f, r) in res {
            collect(r, "orthogonality", json!({"family": f}));
        }
    }
    if want(Suite::Projection) {
        for &q in &qs {
            for n in 0..=6 {
                for (y, rho) in [(0.0, 0.5), (1.0, 0.3), (-0.8, 0.0)] {
                    collect(check_projection(n, y, rho, q, QUAD_TOL).map(|r| vec![r]), "projection", json!({"q": q, "n": n}));
                }
            }
        }
    }
    if want(Suite::Chapman) {
        let q: f64 = 0.3;
        let a = 2.0 / (1.0 - q).sqrt();
        let grid: Vec<f64> = (0..5).map(|i| a * (i as f64 / 2.5 - 0.8)).collect();
        let pts: Vec<(f64, f64)> = grid.iter().flat_map(|&x| grid.iter().map(move |&z| (x, z))).collect();
        let res: Vec<_> = pts.par_iter().map(|&(x, z)| check_chapman(x, z, 0.5, 0.4, q, KERNEL_TOL)).collect();
        for r in res {
            collect(r.map(|r| vec![r]), "chapman", json!({"q": q}));
        }
        collect(check_chapman(0.4, -1.1, 0.5, 0.4, 1.0, KERNEL_TOL).map(|r| vec![r]), "chapman", json!({"q": 1.0}));
    }
    if want(Suite::DIntegral) {
        for &q in &qs {
            for n in 0..=5 {
                for k in 0..=n {
                    collect(
                        check_d_integral(k, n, 0.6, 0.4, q, QUAD_TOL).map(|r| vec![r]),
                        "d_integral",
                        json!({"q": q, "k": k, "n": n}),
                    );
                }
            }
        }
    }
    if want(Suite::Normalization) {
        for &q in &qs {
            let mut ds = vec![DensityId::n(q), DensityId::u(q), DensityId::t(q)];
            for (y, rho) in [(0.0, 0.5), (1.0, 0.3)] {
                ds.push(DensityId::cn(y, rho, q));
                ds.push(DensityId::k(y, rho, q));
            }
            for beta in [0.2, 0.6] {
                ds.push(DensityId::r(beta, q));
            }
            out.extend(ds.par_iter().map(|d| check_normalization(d, QUAD_TOL)).collect::<Vec<_>>());
        }
    }
    if want(Suite::SpecialValues) {
        out.extend(special_value_checks(20, cfg.seed));
    }
    if want(Suite::Degenerations) {
        out.extend(degeneration_checks(20, cfg.seed));
        out.extend(density_degeneration_checks(&qs, 1e-12));
    }
    if want(Suite::Bounds) {
        let bq: Vec<f64> = qs.iter().copied().filter(|q| *q != 0.0).collect();
        out.extend(bound_checks(&bq, 12));
    }
    if want(Suite::Identities) {
        out.extend(identity_suite(&IdentityConfig::default()));
    }
    if want(Suite::Connections) {
        out.extend(connection_suite(20, 12, cfg.seed));
    }
    if let Some(prefix) = &cfg.check {
        out.retain(|r| r.check_id.starts_with(prefix.as_str()));
    }
    if let Some(tol) = cfg.tol {
        for r in out.iter_mut().filter(|r| r.tolerance > 0.0) {
            r.retolerate(tol);
        }
    }
    out.sort_by(|a, b| {
        a.check_id.cmp(&b.check_id).then_with(|| a.params.to_string().cmp(&b.params.to_string()))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_norm_at_half() {
        let r = check_orthogonality(&Family::QHermite { q: 0.5 }, &DensityId::n(0.5), 2, 2, 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
        let r = check_orthogonality(&Family::QHermite { q: 0.5 }, &DensityId::n(0.5), 3, 1, 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(check_orthogonality(&Family::QHermite { q: 0.5 }, &DensityId::n(0.3), 1, 1, 1e-9).is_err());
    }

    #[test]
    fn first_projection_is_conditional_mean() {
        let r = check_projection(1, 0.8, 0.4, 0.3, 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn csv_quotes_params() {
        let r = VerificationReport::new("x", json!({"a": 1, "b": 2}), 0.0, 1e-8);
        let csv = reports_to_csv(&[r]);
        assert!(csv.starts_with("check_id,params_json,residual,tolerance,pass\n"));
        assert!(csv.contains("\"{\"\"a\"\":1,\"\"b\"\":2}\""));
    }
}
