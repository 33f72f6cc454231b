//! Accept-reject sampling of f_N and f_CN with the semicircle f_U as proposal,
//! and Kolmogorov-Smirnov statistics against numeric CDFs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::densities::{density_ratio, DensityId, DensityKind};
use crate::error::{invalid, Error, Result};
use crate::expand::{ExpansionId, K_CAP};
use crate::quadrature::QuadratureRule;

/// Points of the envelope validity grid.
pub const ENVELOPE_GRID: usize = 10_000;
/// Points of the theta grid behind numeric CDFs.
pub const CDF_GRID: usize = 512;
/// Safety factor on a grid supremum when the series bound is not usable.
pub const GRID_SAFETY: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplerConfig {
    pub density: DensityId,
    /// Envelope constant; target <= m f_U on S(q).
    pub m: f64,
    pub seed: u64,
    /// Accepted draws per batch; batch i uses stream i of the seeded generator.
    pub batch: usize,
}

impl SamplerConfig {
    /// Config with the envelope from [`envelope_constant`].
    pub fn new(density: DensityId, seed: u64) -> Result<Self> {
        Ok(Self { density, m: envelope_constant(&density)?, seed, batch: 8192 })
    }

    fn validate(&self) -> Result<()> {
        match self.density.kind {
            DensityKind::N { .. } | DensityKind::CN { .. } => {}
            _ => return Err(invalid("sampler targets f_N or f_CN")),
        }
        self.density.validate()?;
        if self.density.q() >= 1.0 {
            return Err(invalid("sampler needs |q| < 1"));
        }
        if !(self.m >= 1.0 && self.m.is_finite()) {
            return Err(invalid("envelope constant must be finite and >= 1"));
        }
        if self.batch == 0 {
            return Err(invalid("batch size must be positive"));
        }
        Ok(())
    }

    fn proposal(&self) -> DensityId {
        DensityId::u(self.density.q())
    }
}

/// Series bound M on sup target/f_U, raised to the grid supremum if that is
/// larger. f_N: sum (2k+1) |q|^{k(k+1)/2}; f_CN: sum |gamma_k| (k+1) with
/// gamma_k the coefficients on U_k(x s/2), or grid sup times 1.05 when that
/// series has not settled by the expansion cap.
pub fn envelope_constant(d: &DensityId) -> Result<f64> {
    d.validate()?;
    let q = d.q();
    if !(q.abs() < 1.0) {
        return Err(invalid("envelope needs |q| < 1"));
    }
    let series = match d.kind {
        DensityKind::N { .. } => {
            let aq = q.abs();
            let mut m = 0.0;
            for k in 0.. {
                let t = (2 * k + 1) as f64 * aq.powf((k * (k + 1)) as f64 / 2.0);
                m += t;
                if t < 1e-16 || k > 10_000 {
                    break;
                }
            }
            Some(m)
        }
        DensityKind::CN { y, rho, q } => {
            let e = ExpansionId::CnOverU { y, rho, q };
            let hat = e.hat_coeffs(K_CAP)?;
            let terms: Vec<f64> =
                hat.iter().enumerate().map(|(k, c)| (c / e.paper_scale(k)).abs() * (k + 1) as f64).collect();
            let settled = terms[K_CAP - 2..].iter().all(|t| *t < 1e-14);
            settled.then(|| terms.iter().sum())
        }
        _ => return Err(invalid("envelope is defined for f_N and f_CN")),
    };
    let sup = ratio_sup(d, ENVELOPE_GRID)?;
    Ok(match series {
        Some(m) => m.max(sup),
        None => sup * GRID_SAFETY,
    })
}

fn grid(q: f64, n: usize) -> impl Iterator<Item = f64> {
    let a = 2.0 / (1.0 - q).sqrt();
    (0..n).map(move |i| a * (PI * (i as f64 + 0.5) / n as f64).cos())
}

fn ratio_sup(d: &DensityId, n: usize) -> Result<f64> {
    let u = DensityId::u(d.q());
    grid(d.q(), n).try_fold(0.0f64, |m, x| Ok(m.max(density_ratio(d, &u, x)?.value)))
}

/// target <= M f_U on the interior grid of `n` points; the first violation
/// otherwise.
pub fn check_envelope(d: &DensityId, m: f64, n: usize) -> Result<()> {
    let u = DensityId::u(d.q());
    for x in grid(d.q(), n) {
        let ratio = density_ratio(d, &u, x)?.value;
        if ratio > m {
            return Err(Error::EnvelopeViolation { x, ratio, m });
        }
    }
    Ok(())
}

/// Semicircle draw on S(q): x = a cos(theta) with (theta - sin theta cos theta)/pi = u.
pub fn semicircle_draw(q: f64, u: f64) -> f64 {
    let a = 2.0 / (1.0 - q).sqrt();
    let target = PI * u;
    let (mut lo, mut hi) = (0.0f64, PI);
    let mut t = PI * u;
    for _ in 0..100 {
        let g = t - t.sin() * t.cos() - target;
        if g.abs() <= 4.0 * f64::EPSILON || hi - lo <= f64::EPSILON {
            break;
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let next = t - g / (2.0 * t.sin().powi(2));
        t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    a * t.cos()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRun {
    pub samples: Vec<f64>,
    pub proposals: u64,
    pub m: f64,
}

impl SampleRun {
    pub fn acceptance_rate(&self) -> f64 {
        self.samples.len() as f64 / self.proposals as f64
    }

    /// |rate - 1/M| in binomial standard deviations.
    pub fn acceptance_sigma(&self) -> f64 {
        let p = 1.0 / self.m;
        let sd = (p * (1.0 - p) / self.proposals as f64).sqrt();
        if sd == 0.0 {
            if (self.acceptance_rate() - p).abs() < 1e-15 { 0.0 } else { f64::INFINITY }
        } else {
            (self.acceptance_rate() - p).abs() / sd
        }
    }
}

fn run_batch(cfg: &SamplerConfig, index: u64, want: usize) -> Result<(Vec<f64>, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let q = cfg.density.q();
    let u = cfg.proposal();
    let mut out = Vec::with_capacity(want);
    let mut tried = 0u64;
    while out.len() < want {
        let x = semicircle_draw(q, rng.gen::<f64>());
        let v: f64 = rng.gen();
        tried += 1;
        let ratio = density_ratio(&cfg.density, &u, x)?.value;
        if ratio > cfg.m {
            return Err(Error::EnvelopeViolation { x, ratio, m: cfg.m });
        }
        if v * cfg.m < ratio {
            out.push(x);
        }
    }
    Ok((out, tried))
}

/// `n` draws from the target, after checking the envelope on the grid.
/// Deterministic in the seed and batch size.
pub fn sample_run(cfg: &SamplerConfig, n: usize) -> Result<SampleRun> {
    cfg.validate()?;
    check_envelope(&cfg.density, cfg.m, ENVELOPE_GRID)?;
    let batches = n.div_ceil(cfg.batch);
    let parts = (0..batches)
        .into_par_iter()
        .map(|i| run_batch(cfg, i as u64, cfg.batch.min(n - i * cfg.batch)))
        .collect::<Result<Vec<_>>>()?;
    let proposals = parts.iter().map(|p| p.1).sum();
    let samples = parts.into_iter().flat_map(|p| p.0).collect();
    Ok(SampleRun { samples, proposals, m: cfg.m })
}

pub fn sample(cfg: &SamplerConfig, n: usize) -> Result<Vec<f64>> {
    Ok(sample_run(cfg, n)?.samples)
}

/// Numeric CDF of a density on S(q), tabulated on a theta grid.
#[derive(Debug, Clone)]
pub struct NumericCdf {
    a: f64,
    /// cdf[i] = P(X <= a cos(theta_i)), theta_i = pi (1 - i/len).
    cdf: Vec<f64>,
}

impl NumericCdf {
    pub fn new(d: &DensityId, points: usize) -> Result<Self> {
        d.validate()?;
        let q = d.q();
        if q >= 1.0 {
            return Err(invalid("numeric CDF needs a compact support"));
        }
        let a = 2.0 / (1.0 - q).sqrt();
        let rule = QuadratureRule::get(8);
        let h = PI / points as f64;
        let mut cdf = vec![0.0; points + 1];
        for i in 0..points {
            // theta runs from pi down to 0 as x runs from -a to a
            let hi = PI - i as f64 * h;
            let piece = rule.integrate_theta(|t| {
                let th = hi - h * t / PI;
                d.eval(a * th.cos()).unwrap_or(f64::NAN) * a * th.sin() * h / PI
            });
            cdf[i + 1] = cdf[i] + piece;
        }
        let total = cdf[points];
        if !(total.is_finite() && total > 0.0) {
            return Err(invalid("density does not integrate to a positive value"));
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(Self { a, cdf })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= -self.a {
            return 0.0;
        }
        if x >= self.a {
            return 1.0;
        }
        let n = self.cdf.len() - 1;
        let pos = (PI - (x / self.a).acos()) / PI * n as f64;
        let i = (pos.floor() as usize).min(n - 1);
        let f = pos - i as f64;
        self.cdf[i] * (1.0 - f) + self.cdf[i + 1] * f
    }
}

/// sup |F_n - F| of the samples against the density's numeric CDF.
pub fn ks_statistic(samples: &[f64], d: &DensityId) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let cdf = NumericCdf::new(d, CDF_GRID)?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(xs.iter().enumerate().fold(0.0f64, |m, (i, &x)| {
        let f = cdf.eval(x);
        m.max(((i + 1) as f64 / n - f).max(f - i as f64 / n))
    }))
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Kolmogorov critical value 1.36/sqrt(n) at the 5% level.
pub fn ks_critical(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

/// Critical value of the two-sample statistic at level 1%.
pub fn ks_two_sample_critical(n: usize, m: usize) -> f64 {
    1.63 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_values() {
        assert_eq!(envelope_constant(&DensityId::n(0.0)).unwrap(), 1.0);
        let m = envelope_constant(&DensityId::n(0.5)).unwrap();
        // 1 + 1.5 + 0.625 + 0.109375 + 9/1024 + ...
        let mut s = 0.0;
        for k in 0..40 {
            s += (2 * k + 1) as f64 * 0.5f64.powi(k * (k + 1) / 2);
        }
        assert!((m - s).abs() < 1e-12 && (m - 3.2435).abs() < 1e-4, "{m}");
        let q = 1e-3;
        assert!((envelope_constant(&DensityId::n(q)).unwrap() - (1.0 + 3.0 * q)).abs() < 1e-8);
    }

    #[test]
    fn semicircle_inverse_cdf() {
        assert!(semicircle_draw(0.0, 0.5).abs() < 1e-14);
        // x = 2 cos(theta) with theta the u-quantile of (2/pi) sin^2
        let x = 0.2f64;
        let th = (x / 2.0).acos();
        let u = (th - th.sin() * th.cos()) / PI;
        assert!((semicircle_draw(0.0, u) - x).abs() < 1e-12);
    }

    #[test]
    fn q_zero_accepts_everything() {
        let cfg = SamplerConfig::new(DensityId::n(0.0), 1).unwrap();
        let r = sample_run(&cfg, 10_000).unwrap();
        assert_eq!(r.acceptance_rate(), 1.0);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert_eq!(ks_statistic(&[], &DensityId::n(0.5)), Err(Error::EmptySample));
        assert_eq!(ks_two_sample(&[1.0], &[]), Err(Error::EmptySample));
    }

    #[test]
    fn cdf_endpoints() {
        let c = NumericCdf::new(&DensityId::n(0.3), CDF_GRID).unwrap();
        assert_eq!(c.eval(-10.0), 0.0);
        assert_eq!(c.eval(10.0), 1.0);
        assert!((c.eval(0.0) - 0.5).abs() < 1e-12);
    }
}
