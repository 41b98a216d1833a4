//! Seeded random primitives.
//!
//! Every run derives its generators from a single `u64` seed. Each consumer
//! (dataset, minibatches, inner-loop lengths, sphere noise, initialization,
//! diagnostics) reads from its own ChaCha stream, so adding draws to one
//! consumer never shifts the sequence seen by another.

use std::collections::VecDeque;

use ndarray::{Array1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Named, mutually independent streams derived from one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Substream {
    Dataset,
    Minibatch,
    Geometric,
    Sphere,
    Init,
    Probe,
    Metadata,
}

impl Substream {
    fn id(self) -> u64 {
        match self {
            Substream::Dataset => 0,
            Substream::Minibatch => 1,
            Substream::Geometric => 2,
            Substream::Sphere => 3,
            Substream::Init => 4,
            Substream::Probe => 5,
            Substream::Metadata => 6,
        }
    }
}

pub type StreamRng = ChaCha8Rng;

/// Opens the named substream of `seed`.
pub fn substream(seed: u64, which: Substream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}

/// The generators an optimizer run consumes.
///
/// Inner-loop lengths can be pinned with [`RunStreams::with_forced_lengths`];
/// once the forced sequence is exhausted, lengths are sampled again.
#[derive(Clone, Debug)]
pub struct RunStreams {
    pub minibatch: StreamRng,
    pub geometric: StreamRng,
    pub sphere: StreamRng,
    pub init: StreamRng,
    forced_lengths: VecDeque<u64>,
}

impl RunStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            minibatch: substream(seed, Substream::Minibatch),
            geometric: substream(seed, Substream::Geometric),
            sphere: substream(seed, Substream::Sphere),
            init: substream(seed, Substream::Init),
            forced_lengths: VecDeque::new(),
        }
    }

    pub fn with_forced_lengths(seed: u64, lengths: impl IntoIterator<Item = u64>) -> Self {
        let mut streams = Self::new(seed);
        streams.forced_lengths = lengths.into_iter().collect();
        streams
    }

    /// Next inner-loop length, `N ~ Geom(gamma)` unless a forced value is queued.
    pub fn inner_loop_length(&mut self, gamma: f64) -> Result<u64> {
        check_gamma(gamma)?;
        match self.forced_lengths.pop_front() {
            Some(len) => Ok(len),
            None => sample_geometric(&mut self.geometric, gamma),
        }
    }
}

/// Uniform size-`b` subset of `0..n`, without replacement, sorted ascending.
pub fn sample_minibatch<R: Rng + ?Sized>(rng: &mut R, n: usize, b: usize) -> Result<Vec<usize>> {
    if b < 1 || b > n {
        return Err(Error::InvalidArgument(format!(
            "minibatch size b = {b} must satisfy 1 <= b <= n = {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    // partial Fisher-Yates
    for i in 0..b {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(b);
    idx.sort_unstable();
    Ok(idx)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "geometric parameter gamma = {gamma} must lie in (0, 1)"
        )))
    }
}

/// Draws `N` with `P(N = k) = (1 - gamma) * gamma^k`, `k = 0, 1, ...`.
///
/// Inverse CDF: `N = floor(ln U / ln gamma)` with `U` uniform on `(0, 1]`.
pub fn sample_geometric<R: Rng + ?Sized>(rng: &mut R, gamma: f64) -> Result<u64> {
    check_gamma(gamma)?;
    let u = 1.0 - rng.random::<f64>();
    Ok((u.ln() / gamma.ln()).floor() as u64)
}

/// Mean of `Geom(gamma)`.
pub fn geometric_mean(gamma: f64) -> f64 {
    gamma / (1.0 - gamma)
}

/// `P(N = k)` for the law sampled by [`sample_geometric`].
pub fn geometric_pmf(gamma: f64, k: u64) -> f64 {
    (1.0 - gamma) * gamma.powf(k as f64)
}

/// `E‖x̄_S - x̄‖²` for a uniform size-`m` subset `S` of the `M` rows of
/// `population`: `(M - m)/((M - 1) m) · (1/M) Σ‖x_j - x̄‖²`.
pub fn minibatch_mean_variance(population: ArrayView2<f64>, m: usize) -> Result<f64> {
    let big_m = population.nrows();
    if big_m < 2 || m < 1 || m > big_m {
        return Err(Error::InvalidArgument(format!(
            "need M >= 2 and 1 <= m <= M, got M = {big_m}, m = {m}"
        )));
    }
    let mean = population.mean_axis(Axis(0)).expect("M >= 2");
    let spread: f64 = population
        .axis_iter(Axis(0))
        .map(|row| {
            let c = &row - &mean;
            c.dot(&c)
        })
        .sum::<f64>()
        / big_m as f64;
    Ok((big_m - m) as f64 / ((big_m - 1) * m) as f64 * spread)
}

pub fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Array1<f64> {
    Array1::from_iter((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Uniform point on the sphere of the given radius in `R^d`.
pub fn sample_sphere<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Result<Array1<f64>> {
    if d < 1 {
        return Err(Error::Dimension("sphere dimension must be at least 1".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sphere radius must be positive and finite, got {radius}"
        )));
    }
    loop {
        let v = standard_normal_vec(rng, d);
        let norm = v.dot(&v).sqrt();
        if norm > 0.0 && norm.is_finite() {
            return Ok(v * (radius / norm));
        }
    }
}
