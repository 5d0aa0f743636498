//! Counter-based random streams.
//!
//! Every replication draws from its own ChaCha8 stream keyed by the master
//! seed and a domain tag, with the replication index as the stream id. The
//! numbers a replication sees therefore depend only on `(seed, tag, index)`
//! and never on how replications are scheduled across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use rayon::prelude::*;

/// Derives independent [`RandomStream`]s from a master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamFactory {
    seed: u64,
    domain: u64,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed, domain: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A factory for a named sub-experiment. Streams of different children never
    /// coincide with each other or with the parent.
    pub fn child(&self, tag: &str) -> Self {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in tag.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        Self {
            seed: self.seed,
            domain: splitmix64(self.domain ^ h),
        }
    }

    /// The stream for replication `index`.
    pub fn stream(&self, index: u64) -> RandomStream {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.domain.to_le_bytes());
        key[16..24].copy_from_slice(&splitmix64(self.seed ^ self.domain).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        RandomStream(rng)
    }

    /// Runs `f` once per replication, in parallel, and returns the results in
    /// replication order.
    pub fn replicate<T, F>(&self, replications: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &mut RandomStream) -> T + Sync + Send,
    {
        (0..replications)
            .into_par_iter()
            .map(|r| {
                let mut s = self.stream(r as u64);
                f(r, &mut s)
            })
            .collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible random stream.
#[derive(Clone, Debug)]
pub struct RandomStream(ChaCha8Rng);

impl RandomStream {
    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    pub fn exponential(&mut self, rate: f64) -> f64 {
        Exp::new(rate).expect("positive rate").sample(&mut self.0)
    }

    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        let x: f64 = Poisson::new(mean).expect("finite positive mean").sample(&mut self.0);
        x as u64
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
