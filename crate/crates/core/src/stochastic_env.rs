//! Seeded sampling of the random flow `z`.
//!
//! The generator is ChaCha8 (`rand_chacha`), whose output stream is fixed by
//! the seed on every platform. Uniform variates take the top 53 bits of each
//! 64-bit word: `u = 2 * (w >> 11) * 2^-53 - 1`, so `u` lies in `[-1, 1)`.
//! Samples are drawn edge by edge in edge-list order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cost_model::{check_spread, NoiseMoments};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Single-owner pseudorandom stream.
#[derive(Debug, Clone)]
pub struct GeneratorState {
    seed: u64,
    rng: ChaCha8Rng,
}

impl GeneratorState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator for run `index` of a batch: seeded with
    /// `splitmix64(master ^ index)`.
    pub fn derived(master: u64, index: u64) -> Self {
        Self::new(derive_seed(master, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[-1, 1)`.
    pub fn uniform_pm1(&mut self) -> f64 {
        let unit = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * unit - 1.0
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// SplitMix64 finalizer applied to `master ^ index`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = (master ^ index).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Zero-mean distribution of an additive noise term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdditiveDist<T> {
    /// `U[-half_width, half_width]`.
    Uniform { half_width: T },
    /// `N(0, sd^2)`.
    Normal { sd: T },
}

impl<T: Scalar> AdditiveDist<T> {
    pub fn moments(&self) -> NoiseMoments<T> {
        match *self {
            AdditiveDist::Uniform { half_width } => NoiseMoments::uniform(half_width),
            AdditiveDist::Normal { sd } => NoiseMoments::normal(sd),
        }
    }

    fn scale(&self) -> T {
        match *self {
            AdditiveDist::Uniform { half_width } => half_width,
            AdditiveDist::Normal { sd } => sd,
        }
    }

    fn sample(&self, gen: &mut GeneratorState) -> T {
        match *self {
            AdditiveDist::Uniform { half_width } => half_width * T::lit(gen.uniform_pm1()),
            AdditiveDist::Normal { sd } => sd * T::lit(gen.standard_normal()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind<T> {
    /// `z_e = beta x_e u_e`, `u_e ~ U[-1, 1]`, so `|z_e| <= beta x_e`.
    MultiplicativeUniform { beta: T },
    /// `z_e` drawn from a per-edge distribution, independent of `x`.
    AdditiveIndependent(Vec<AdditiveDist<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel<T> {
    pub kind: NoiseKind<T>,
    pub seed: u64,
}

impl<T: Scalar> NoiseModel<T> {
    pub fn multiplicative(beta: T, seed: u64) -> Self {
        Self {
            kind: NoiseKind::MultiplicativeUniform { beta },
            seed,
        }
    }

    pub fn additive(dists: Vec<AdditiveDist<T>>, seed: u64) -> Self {
        Self {
            kind: NoiseKind::AdditiveIndependent(dists),
            seed,
        }
    }

    pub fn validate(&self, edge_count: usize) -> Result<()> {
        match &self.kind {
            NoiseKind::MultiplicativeUniform { beta } => check_spread(*beta),
            NoiseKind::AdditiveIndependent(dists) => {
                if dists.len() != edge_count {
                    return Err(Error::DimensionMismatch {
                        expected: edge_count,
                        found: dists.len(),
                    });
                }
                for (edge, d) in dists.iter().enumerate() {
                    let s = d.scale();
                    if !(s >= T::zero()) || !s.is_finite() {
                        return Err(Error::InvalidDistribution {
                            edge,
                            reason: format!("scale {s} must be finite and nonnegative"),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    /// Per-edge raw moments of `z` when they do not depend on `x`.
    pub fn additive_moments(&self) -> Option<Vec<NoiseMoments<T>>> {
        match &self.kind {
            NoiseKind::AdditiveIndependent(d) => {
                Some(d.iter().map(AdditiveDist::moments).collect())
            }
            NoiseKind::MultiplicativeUniform { .. } => None,
        }
    }

    pub fn generator(&self) -> GeneratorState {
        GeneratorState::new(self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSample<T> {
    pub z: Vec<T>,
    /// Uniform multipliers `u_e` (multiplicative model only).
    pub u: Option<Vec<T>>,
}

/// Draws one random-flow vector for the current deterministic flow `x`.
pub fn sample_noise<T: Scalar>(
    x: &[T],
    kind: &NoiseKind<T>,
    gen: &mut GeneratorState,
) -> Result<NoiseSample<T>> {
    match kind {
        NoiseKind::MultiplicativeUniform { beta } => {
            check_spread(*beta)?;
            let u: Vec<T> = x.iter().map(|_| T::lit(gen.uniform_pm1())).collect();
            let z = x.iter().zip(&u).map(|(&x, &u)| *beta * x * u).collect();
            Ok(NoiseSample { z, u: Some(u) })
        }
        NoiseKind::AdditiveIndependent(dists) => {
            if dists.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.len(),
                    found: dists.len(),
                });
            }
            let z = dists.iter().map(|d| d.sample(gen)).collect();
            Ok(NoiseSample { z, u: None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spread_gives_zero_noise() {
        let mut gen = GeneratorState::new(3);
        let s = sample_noise(
            &[0.5, 1.0],
            &NoiseKind::MultiplicativeUniform { beta: 0.0 },
            &mut gen,
        )
        .unwrap();
        assert!(s.z.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn empty_links_get_no_noise() {
        let mut gen = GeneratorState::new(3);
        for _ in 0..100 {
            let s = sample_noise(
                &[0.0, 1.0],
                &NoiseKind::MultiplicativeUniform { beta: 1.0 },
                &mut gen,
            )
            .unwrap();
            assert_eq!(s.z[0], 0.0);
        }
    }

    #[test]
    fn samples_respect_spread_bound() {
        let mut gen = GeneratorState::new(11);
        let x = [0.2f64, 0.7, 1.5];
        let kind = NoiseKind::MultiplicativeUniform { beta: 0.6 };
        for _ in 0..10_000 {
            let s = sample_noise(&x, &kind, &mut gen).unwrap();
            for (z, x) in s.z.iter().zip(&x) {
                assert!(z.abs() <= 0.6 * x);
            }
        }
    }

    #[test]
    fn equal_seeds_equal_streams() {
        let mut a = GeneratorState::new(42);
        let mut b = GeneratorState::new(42);
        let kind = NoiseKind::MultiplicativeUniform { beta: 1.0 };
        for _ in 0..50 {
            let sa = sample_noise(&[1.0, 2.0], &kind, &mut a).unwrap();
            let sb = sample_noise(&[1.0, 2.0], &kind, &mut b).unwrap();
            assert_eq!(sa, sb);
        }
        assert_eq!(a.word_position(), b.word_position());
        assert_ne!(
            GeneratorState::new(1).next_u64(),
            GeneratorState::new(2).next_u64()
        );
    }

    #[test]
    fn derived_seeds_differ_per_run() {
        let seeds: Vec<u64> = (0..8).map(|i| derive_seed(7, i)).collect();
        let mut dedup = seeds.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), seeds.len());
        assert_eq!(GeneratorState::derived(7, 3).seed(), derive_seed(7, 3));
    }

    #[test]
    fn uniform_variates_stay_in_range() {
        let mut g = GeneratorState::new(0);
        for _ in 0..100_000 {
            let u = g.uniform_pm1();
            assert!((-1.0..1.0).contains(&u));
        }
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(NoiseModel::multiplicative(1.2f64, 0).validate(2).is_err());
        assert!(NoiseModel::multiplicative(-0.1f64, 0).validate(2).is_err());
        let bad = NoiseModel::additive(vec![AdditiveDist::Normal { sd: -1.0f64 }], 0);
        assert!(matches!(
            bad.validate(1),
            Err(Error::InvalidDistribution { edge: 0, .. })
        ));
        let short = NoiseModel::additive(vec![AdditiveDist::Normal { sd: 1.0f64 }], 0);
        assert!(short.validate(2).is_err());
        let mut g = GeneratorState::new(0);
        assert!(sample_noise(
            &[1.0f64],
            &NoiseKind::MultiplicativeUniform { beta: 2.0 },
            &mut g
        )
        .is_err());
    }
}
