//! Uniform mid-rise scalar quantizer for the I and Q branches of a received
//! subcarrier symbol, and a seeded Monte Carlo estimator of its noise power
//! and overflow rate.
//!
//! A branch sample `y` is normalized by the scale `eta = 3 sqrt(S/2)`,
//! clipped to `[-1, 1]`, mapped to level index `j = ceil(2^{D-1} y)` and
//! reconstructed as `eta (j / 2^{D-1} - 2^{-D})`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Samples drawn per Monte Carlo shard. Each shard owns its own RNG stream,
/// so results do not depend on the thread count.
pub const SHARD_SIZE: usize = 1 << 16;

/// Minimum sample count accepted by [`monte_carlo_noise_power`].
pub const MIN_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexSample {
    pub i_part: f64,
    pub q_part: f64,
}

impl ComplexSample {
    pub fn new(i_part: f64, q_part: f64) -> Self {
        Self { i_part, q_part }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantizerSpec {
    bits: u32,
    scale: f64,
}

impl QuantizerSpec {
    /// `bits` must lie in `1..=52` so that every level is exact in `f64`.
    pub fn new(bits: u32, scale: f64) -> Result<Self> {
        if !(1..=52).contains(&bits) {
            return Err(Error::Precondition(format!("quantizer bits must be in 1..=52, got {bits}")));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::Precondition(format!("quantizer scale must be finite and >= 0, got {scale}")));
        }
        Ok(Self { bits, scale })
    }

    /// Spec with the three-sigma scale for a signal of total power `S`.
    pub fn for_signal_power(bits: u32, signal_power: f64) -> Result<Self> {
        if signal_power < 0.0 {
            return Err(Error::NegativeInput {
                what: "signal power",
                value: signal_power,
            });
        }
        Self::new(bits, scale_factor(signal_power))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Normalized step `2^{1-D}`.
    pub fn step(&self) -> f64 {
        (1.0 - self.bits as f64).exp2()
    }

    pub fn num_levels(&self) -> u64 {
        1u64 << self.bits
    }

    /// Normalized reconstruction levels in increasing order.
    pub fn codebook(&self) -> Vec<f64> {
        let half = 1i64 << (self.bits - 1);
        (-half + 1..=half).map(|j| self.level(j)).collect()
    }

    fn level(&self, j: i64) -> f64 {
        let half = (self.bits as f64 - 1.0).exp2();
        j as f64 / half - (-(self.bits as f64)).exp2()
    }

    /// Quantizes a normalized branch value; `y` outside `[-1, 1]` is clipped.
    pub fn quantize_normalized(&self, y: f64) -> f64 {
        let half = 1i64 << (self.bits - 1);
        let clipped = y.clamp(-1.0, 1.0);
        let j = (clipped * half as f64).ceil() as i64;
        // ceil maps y = -1 one cell below the codebook.
        self.level(j.clamp(-half + 1, half))
    }

    /// Quantizes and reconstructs one branch amplitude.
    pub fn quantize_branch(&self, x: f64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.scale * self.quantize_normalized(x / self.scale)
    }

    pub fn overflows(&self, x: f64) -> bool {
        self.scale > 0.0 && x.abs() > self.scale
    }
}

/// Three-sigma scale `3 sqrt(S/2)` shared by both branches.
pub fn scale_factor(signal_power: f64) -> f64 {
    3.0 * (signal_power / 2.0).sqrt()
}

pub fn quantize_dequantize(sample: ComplexSample, spec: &QuantizerSpec) -> ComplexSample {
    ComplexSample {
        i_part: spec.quantize_branch(sample.i_part),
        q_part: spec.quantize_branch(sample.q_part),
    }
}

/// Noise power `3 S 2^{-2D}` predicted by the uniform-error model.
pub fn analytic_noise_power(signal_power: f64, bits: u32) -> f64 {
    3.0 * signal_power * (-2.0 * bits as f64).exp2()
}

/// Probability that one Gaussian branch exceeds three standard deviations,
/// `2 Q(3)`.
pub const THREE_SIGMA_OVERFLOW: f64 = 0.0027;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub signal_power: f64,
    pub bits: u32,
    pub num_samples: usize,
    pub seed: u64,
    pub analytic_q: f64,
    /// Mean squared complex error over samples whose branches stayed within
    /// the quantizer range: twice the mean in-range per-branch error.
    pub granular_q: f64,
    /// Mean squared complex error over all samples, clipping included.
    pub total_q: f64,
    /// Fraction of branch values that fell outside `[-eta, eta]`.
    pub overflow_rate: f64,
}

#[derive(Default, Clone, Copy)]
struct Accum {
    in_range_err: f64,
    in_range_count: u64,
    total_err: f64,
    overflow: u64,
    branches: u64,
}

impl Accum {
    fn merge(self, o: Accum) -> Accum {
        Accum {
            in_range_err: self.in_range_err + o.in_range_err,
            in_range_count: self.in_range_count + o.in_range_count,
            total_err: self.total_err + o.total_err,
            overflow: self.overflow + o.overflow,
            branches: self.branches + o.branches,
        }
    }
}

/// Draws `num_samples` circularly symmetric complex Gaussian samples of
/// power `S`, quantizes both branches with `D` bits and three-sigma scaling,
/// and measures the reconstruction error.
pub fn monte_carlo_noise_power(
    signal_power: f64,
    bits: u32,
    num_samples: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    if num_samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {num_samples}"
        )));
    }
    let spec = QuantizerSpec::for_signal_power(bits, signal_power)?;
    let sigma = (signal_power / 2.0).sqrt();
    let shards = num_samples.div_ceil(SHARD_SIZE);
    let acc = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let count = SHARD_SIZE.min(num_samples - shard * SHARD_SIZE);
            let mut a = Accum::default();
            for _ in 0..2 * count {
                let z: f64 = StandardNormal.sample(&mut rng);
                let y = sigma * z;
                let err = y - spec.quantize_branch(y);
                let e2 = err * err;
                a.total_err += e2;
                a.branches += 1;
                if spec.overflows(y) {
                    a.overflow += 1;
                } else {
                    a.in_range_err += e2;
                    a.in_range_count += 1;
                }
            }
            a
        })
        .reduce(Accum::default, Accum::merge);
    let granular_q = if acc.in_range_count == 0 {
        0.0
    } else {
        2.0 * acc.in_range_err / acc.in_range_count as f64
    };
    Ok(MonteCarloReport {
        signal_power,
        bits,
        num_samples,
        seed,
        analytic_q: analytic_noise_power(signal_power, bits),
        granular_q,
        total_q: acc.total_err / num_samples as f64,
        overflow_rate: acc.overflow as f64 / acc.branches as f64,
    })
}
