//! Random streams, samplers and log-densities used by the sampler.
//!
//! Every distribution is parameterized the way the model writes it: normals
//! by mean and *precision*, gammas by shape and *rate*, Weibulls by scale
//! `lambda` and shape `nu`.

use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, Weibull};
use statrs::function::gamma::ln_gamma;

use crate::error::{require_positive, Error, Result};

/// A seeded random stream.
///
/// Backed by ChaCha8: the pair `(seed, stream)` fixes the sequence on every
/// platform, and streams sharing a seed but differing in id are independent
/// keystreams of the same key.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// A fresh stream with the same seed and a different id.
    pub fn fork(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
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

pub fn sample_normal<R: Rng + ?Sized>(mean: f64, precision: f64, rng: &mut R) -> Result<f64> {
    require_positive("normal precision", precision)?;
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + z / precision.sqrt())
}

pub fn normal_logpdf(x: f64, mean: f64, precision: f64) -> Result<f64> {
    require_positive("normal precision", precision)?;
    let d = x - mean;
    Ok(0.5 * precision.ln() - 0.5 * (2.0 * PI).ln() - 0.5 * precision * d * d)
}

/// Gamma draw with mean `shape / rate`.
///
/// Shapes below one go through the boosted Marsaglia-Tsang rejection sampler
/// (`G(a) = G(a + 1) * U^(1/a)`).
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    require_positive("gamma shape", shape)?;
    require_positive("gamma rate", rate)?;
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::InvalidParameter(format!("gamma({shape}, {rate}): {e}")))?;
    let draw: f64 = dist.sample(rng);
    // The sampler can underflow to exactly zero for tiny shapes.
    Ok(draw.max(f64::MIN_POSITIVE))
}

pub fn gamma_logpdf(x: f64, shape: f64, rate: f64) -> Result<f64> {
    require_positive("gamma shape", shape)?;
    require_positive("gamma rate", rate)?;
    require_positive("gamma argument", x)?;
    Ok(shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x)
}

pub fn weibull_logpdf(x: f64, scale: f64, shape: f64) -> Result<f64> {
    require_positive("weibull argument", x)?;
    require_positive("weibull scale", scale)?;
    require_positive("weibull shape", shape)?;
    let z = x / scale;
    Ok((shape / scale).ln() + (shape - 1.0) * z.ln() - z.powf(shape))
}

pub fn sample_weibull<R: Rng + ?Sized>(scale: f64, shape: f64, rng: &mut R) -> Result<f64> {
    require_positive("weibull scale", scale)?;
    require_positive("weibull shape", shape)?;
    let dist = Weibull::new(scale, shape)
        .map_err(|e| Error::InvalidParameter(format!("weibull({scale}, {shape}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Uniform draw in `[low, high)`.
pub fn sample_uniform<R: Rng + ?Sized>(low: f64, high: f64, rng: &mut R) -> Result<f64> {
    if !(low.is_finite() && high.is_finite() && low < high) {
        return Err(Error::InvalidParameter(format!(
            "uniform bounds must satisfy low < high, got [{low}, {high})"
        )));
    }
    let u: f64 = rng.random();
    // Rounding can land exactly on `high` for very wide intervals.
    Ok((low + (high - low) * u).min(high.next_down()))
}

/// Index drawn with probability proportional to `weights[i]`.
pub fn sample_multinomial_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameter(
            "multinomial weights must be finite and non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter(
            "multinomial weights must not all be zero".into(),
        ));
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

/// Uniform index in `0..len`; `len` must be non-zero.
pub(crate) fn uniform_index<R: Rng + ?Sized>(len: usize, rng: &mut R) -> usize {
    debug_assert!(len > 0);
    rng.random_range(0..len)
}
