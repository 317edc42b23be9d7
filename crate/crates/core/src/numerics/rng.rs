//! Seeded deterministic random sampling.
//!
//! The generator is xoshiro256++ seeded through SplitMix64, so a given seed
//! produces the same stream on every platform and build. One state must not
//! be shared across threads; clone or derive child seeds instead.

use crate::error::{Error, Result};

/// Deterministic 64-bit generator (xoshiro256++ over a SplitMix64-expanded
/// seed).
#[derive(Debug, Clone)]
pub struct RngState {
    s: [u64; 4],
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        // SplitMix64 expansion of the seed into the four state words.
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = x;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            z ^ (z >> 31)
        };
        RngState {
            s: [next(), next(), next(), next()],
        }
    }

    /// Derives an independent child generator; useful for giving each of
    /// several concurrent runs its own stream.
    pub fn child(&mut self, tag: u64) -> RngState {
        RngState::new(self.next_u64() ^ tag.wrapping_mul(0x9E3779B97F4A7C15))
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[a, b]`; `a == b` always returns `a` exactly.
    pub fn uniform(&mut self, a: f64, b: f64) -> f64 {
        if a == b {
            return a;
        }
        a + (b - a) * self.next_f64()
    }

    /// Standard normal via the Marsaglia polar method (spare discarded so
    /// the stream has no hidden state).
    pub fn normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }

    /// Normal with standard deviation `std`, rejection-resampled until the
    /// draw lies within `cutoff * std` of zero.
    pub fn trunc_normal(&mut self, std: f64, cutoff: f64) -> f64 {
        loop {
            let v = std * self.normal();
            if v.abs() <= cutoff * std {
                return v;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            items.swap(i, j);
        }
    }
}

/// Sampling distributions exposed to callers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Uniform { a: f64, b: f64 },
    TruncNormal { std: f64, cutoff: f64 },
}

/// Draws one value from `dist`, validating its parameters.
pub fn sample(rng: &mut RngState, dist: Distribution) -> Result<f64> {
    match dist {
        Distribution::Uniform { a, b } => {
            if !(a <= b) {
                return Err(Error::invalid(format!("uniform range [{a}, {b}] is empty")));
            }
            Ok(rng.uniform(a, b))
        }
        Distribution::TruncNormal { std, cutoff } => {
            if !(std > 0.0) {
                return Err(Error::invalid(format!("trunc normal std {std} must be > 0")));
            }
            if !(cutoff > 0.0) {
                return Err(Error::invalid(format!("trunc normal cutoff {cutoff} must be > 0")));
            }
            Ok(rng.trunc_normal(std, cutoff))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seeds_give_identical_streams() {
        let mut a = RngState::new(42);
        let mut b = RngState::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn uniform_zero_width_is_exact() {
        let mut rng = RngState::new(1);
        for _ in 0..10 {
            assert_eq!(sample(&mut rng, Distribution::Uniform { a: 0.0, b: 0.0 }).unwrap(), 0.0);
        }
    }

    #[test]
    fn uniform_statistics_and_range() {
        let mut rng = RngState::new(7);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let v = sample(&mut rng, Distribution::Uniform { a: -1.0, b: 1.0 }).unwrap();
            assert!((-1.0..=1.0).contains(&v));
            sum += v;
        }
        assert!((sum / n as f64).abs() < 0.02);
    }

    #[test]
    fn trunc_normal_respects_hard_bound() {
        let mut rng = RngState::new(99);
        for _ in 0..100_000 {
            let v = sample(
                &mut rng,
                Distribution::TruncNormal { std: 0.1, cutoff: 2.0 },
            )
            .unwrap();
            assert!(v.abs() <= 0.2);
        }
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        let mut rng = RngState::new(0);
        assert!(sample(&mut rng, Distribution::Uniform { a: 1.0, b: 0.0 }).is_err());
        assert!(sample(&mut rng, Distribution::TruncNormal { std: 0.0, cutoff: 2.0 }).is_err());
    }
}
