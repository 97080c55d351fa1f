//! Seeded random streams and exact gamma, beta and Poisson variates.
//!
//! Gamma uses Marsaglia-Tsang squeeze/rejection, boosted by `U^{1/α}` for
//! shapes below one. All gamma work is done on the log scale so that beta
//! draws with tiny parameters (which occur once a path's shape statistic has
//! decayed) neither underflow to `0/0` nor lose the `η` vs `1 - η` split.
//!
//! Poisson uses sequential inversion for means below 10 and Hörmann's
//! transformed rejection with squeeze (PTRS) above, which is exact at any mean.

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{check_positive, PgssError, Result};

/// Largest Poisson mean accepted; counts above this lose integer exactness
/// when mixed with `f64` filter arithmetic.
pub const MAX_POISSON_MEAN: f64 = 1e15;

/// Deterministic random stream keyed by `(seed, stream_id)`.
///
/// Backed by ChaCha8 with `stream_id` selecting the ChaCha stream, so distinct
/// replicates never share a keystream and results do not depend on thread
/// scheduling.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[inline]
fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Standard normal by the Marsaglia polar method (one value kept per pair).
fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = 2.0 * open01(rng) - 1.0;
        let v = 2.0 * open01(rng) - 1.0;
        let s = u * u + v * v;
        if s < 1.0 && s > 0.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// `ln G` with `G ~ Gamma(shape, 1)`. `shape == 0` gives `-inf` (the point mass at 0).
pub(crate) fn ln_std_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if shape < 1.0 {
        // G(α) = G(α + 1) · U^{1/α}
        let boost = open01(rng).ln() / shape;
        return ln_std_gamma(shape + 1.0, rng) + boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = std_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v3 = v * v * v;
        let u = open01(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d.ln() + v3.ln();
        }
        let ln_v3 = v3.ln();
        if u.ln() < 0.5 * x2 + d * (1.0 - v3 + ln_v3) {
            return d.ln() + ln_v3;
        }
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `(ln η, ln(1 - η))` with `η ~ Beta(alpha, beta)`, as a ratio of gammas.
///
/// Zero parameters are allowed and give the limiting Bernoulli law
/// (`η ∈ {0, 1}` with probability proportional to the parameters).
pub(crate) fn ln_beta_pair<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> (f64, f64) {
    if alpha <= 0.0 || beta <= 0.0 {
        return bernoulli_pair(alpha.max(0.0), beta.max(0.0), rng);
    }
    let lx = ln_std_gamma(alpha, rng);
    let ly = ln_std_gamma(beta, rng);
    let diff = ly - lx;
    if diff.is_nan() {
        // Both gammas underflowed (ln = -inf), which needs subnormal-scale
        // parameters; the Bernoulli limit is exact to f64 resolution there.
        return bernoulli_pair(alpha, beta, rng);
    }
    (-softplus(diff), -softplus(-diff))
}

fn bernoulli_pair<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> (f64, f64) {
    let total = alpha + beta;
    let p_one = if total > 0.0 { alpha / total } else { 0.5 };
    if open01(rng) < p_one {
        (0.0, f64::NEG_INFINITY)
    } else {
        (f64::NEG_INFINITY, 0.0)
    }
}

pub fn draw_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    check_positive("shape", shape)?;
    check_positive("rate", rate)?;
    Ok((ln_std_gamma(shape, rng) - rate.ln()).exp())
}

pub fn draw_beta<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    let (ln_eta, ln_one_minus) = ln_beta_pair(alpha, beta, rng);
    // Evaluate from whichever side keeps relative precision.
    Ok(if ln_eta < ln_one_minus {
        ln_eta.exp()
    } else {
        -ln_one_minus.exp_m1()
    })
}

pub fn draw_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    check_positive("mean", mean)?;
    if mean > MAX_POISSON_MEAN {
        return Err(PgssError::InvalidParameter {
            name: "mean",
            value: mean,
            reason: "Poisson mean exceeds the exact integer range",
        });
    }
    Ok(if mean < 10.0 {
        poisson_inversion(mean, rng)
    } else {
        poisson_ptrs(mean, rng)
    })
}

/// Poisson draw with mean `exp(ln_mean)`.
///
/// Means below `e^{-700}` return 0 directly: the probability of any other
/// value is below `1e-304`.
pub(crate) fn poisson_from_ln_mean<R: Rng + ?Sized>(ln_mean: f64, rng: &mut R) -> Result<u64> {
    if ln_mean < -700.0 {
        return Ok(0);
    }
    draw_poisson(ln_mean.exp(), rng)
}

fn poisson_inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let u = open01(rng);
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        let next = cdf + p;
        if next == cdf {
            // Remaining mass is below rounding; u sits in the last ulp.
            break;
        }
        cdf = next;
    }
    k
}

/// Hörmann (1993), "The transformed rejection method for generating Poisson
/// random variables", algorithm PTRS.
fn poisson_ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let slam = mean.sqrt();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = open01(rng) - 0.5;
        let v = open01(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        if lhs <= ln_poisson_pmf(k, mean) {
            return k as u64;
        }
    }
}

/// `ln(e^{-λ} λ^k / k!)`, written around `k - λ` so large means do not cancel
/// two numbers of size `k ln k`.
pub fn ln_poisson_pmf(k: f64, mean: f64) -> f64 {
    if k < 16.0 {
        return -mean + k * mean.ln() - ln_gamma(k + 1.0);
    }
    let d = k - mean;
    -k * (d / mean).ln_1p() + d - 0.5 * (2.0 * std::f64::consts::PI * k).ln() - stirling_err(k)
}

/// `ln k! - [k ln k - k + ½ ln(2πk)]` for `k >= 16`.
fn stirling_err(k: f64) -> f64 {
    let inv = 1.0 / k;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(7, 0);
        let mut b = RngStream::new(7, 0);
        let mut c = RngStream::new(7, 1);
        let xa: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..16).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert_eq!((c.seed(), c.stream_id()), (7, 1));
    }

    #[test]
    fn gamma_mean_within_three_sigma() {
        let mut rng = RngStream::new(11, 0);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| draw_gamma(6.5, 1.2, &mut rng).unwrap())
            .collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - 6.5 / 1.2).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn small_shape_gamma_mean() {
        let mut rng = RngStream::new(12, 0);
        let xs: Vec<f64> = (0..400_000)
            .map(|_| draw_gamma(0.2, 2.0, &mut rng).unwrap())
            .collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - 0.1).abs() < 3.0 * se, "mean {m} se {se}");
        assert!(xs.iter().all(|x| *x >= 0.0 && x.is_finite()));
    }

    #[test]
    fn beta_mean_is_gamma() {
        let mut rng = RngStream::new(13, 0);
        let (g, a) = (0.75, 6.5);
        let xs: Vec<f64> = (0..200_000)
            .map(|_| draw_beta(g * a, (1.0 - g) * a, &mut rng).unwrap())
            .collect();
        assert!(xs.iter().all(|x| *x > 0.0 && *x < 1.0));
        let (m, se) = mean_and_se(&xs);
        assert!((m - g).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn beta_with_tiny_parameters_is_nearly_bernoulli() {
        let mut rng = RngStream::new(14, 0);
        let n = 100_000;
        let mut ones = 0usize;
        for _ in 0..n {
            let (le, l1) = ln_beta_pair(0.75e-20, 0.25e-20, &mut rng);
            assert!(!le.is_nan() && !l1.is_nan());
            if le > l1 {
                ones += 1;
            }
        }
        let p = ones as f64 / n as f64;
        let se = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!((p - 0.75).abs() < 4.0 * se, "p {p}");
    }

    #[test]
    fn poisson_zero_fraction() {
        let mut rng = RngStream::new(15, 0);
        let mean = 6.5 / 1.2;
        let n = 1_000_000;
        let zeros = (0..n)
            .filter(|_| draw_poisson(mean, &mut rng).unwrap() == 0)
            .count();
        let p0 = (-mean).exp();
        let se = (p0 * (1.0 - p0) / n as f64).sqrt();
        let rate = zeros as f64 / n as f64;
        assert!((rate - p0).abs() < 3.0 * se, "rate {rate} p0 {p0}");
    }

    #[test]
    fn poisson_large_mean_moments() {
        for (seed, mean) in [(16u64, 12.0), (17, 850.0), (18, 1e9)] {
            let mut rng = RngStream::new(seed, 0);
            let xs: Vec<f64> = (0..200_000)
                .map(|_| draw_poisson(mean, &mut rng).unwrap() as f64)
                .collect();
            let (m, se) = mean_and_se(&xs);
            assert!((m - mean).abs() < 3.5 * se, "mean {mean}: {m} ± {se}");
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0);
            assert!((var / mean - 1.0).abs() < 0.02, "var {var} for mean {mean}");
        }
    }

    #[test]
    fn ln_poisson_pmf_matches_direct_formula() {
        for (k, mean) in [(16.0, 12.0), (40.0, 35.5), (1000.0, 990.0), (300.0, 250.0)] {
            let direct: f64 = -mean + k * f64::ln(mean) - ln_gamma(k + 1.0);
            let got = ln_poisson_pmf(k, mean);
            assert!((got - direct).abs() < 1e-9, "k {k}: {got} vs {direct}");
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut rng = RngStream::new(1, 1);
        assert!(draw_gamma(0.0, 1.0, &mut rng).is_err());
        assert!(draw_gamma(1.0, f64::NAN, &mut rng).is_err());
        assert!(draw_beta(-1.0, 1.0, &mut rng).is_err());
        assert!(draw_poisson(0.0, &mut rng).is_err());
        assert!(draw_poisson(f64::INFINITY, &mut rng).is_err());
        assert!(draw_poisson(1e20, &mut rng).is_err());
    }
}
