//! Counter-based random streams.
//!
//! Every random quantity in a simulation is addressed by a path of integers
//! (master seed, stream tag, replicate, step, ...). The address is hashed into
//! a 64-bit key, and draws at that address are `splitmix64(key + k·γ)` for
//! k = 0, 1, 2, .... No generator state is shared between addresses, so the
//! values seen by replicate `r` do not depend on which thread produced them
//! or in what order.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Address of a random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(master_seed: u64) -> Self {
        StreamKey(mix64(master_seed ^ 0x5eed_5eed_5eed_5eed))
    }

    /// Derive the key of child `index` under this key.
    #[inline]
    pub fn child(self, index: u64) -> Self {
        StreamKey(mix64(self.0.wrapping_add(mix64(index.wrapping_add(GOLDEN_GAMMA)))))
    }

    /// Generator producing the draws at this address.
    #[inline]
    pub fn rng(self) -> CounterRng {
        CounterRng {
            key: self.0,
            counter: 0,
        }
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

/// Named top-level streams, so that unrelated random inputs of one
/// experiment never share an address.
pub mod tags {
    pub const PATH: u64 = 1;
    pub const PILOT: u64 = 2;
    pub const BOUND_SAMPLE: u64 = 3;
    pub const REGRESSOR: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const TSP_POINTS: u64 = 6;
    pub const TSP_INNER: u64 = 7;
    pub const TSP_MEAN: u64 = 8;
    pub const GAUSS_SAMPLE: u64 = 9;
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn open_unit(rng: &mut CounterRng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_address_same_draws() {
        let k = StreamKey::new(7).child(3).child(11);
        let a: Vec<u64> = (0..4).map({
            let mut r = k.rng();
            move |_| r.next_u64()
        }).collect();
        let mut r = k.rng();
        let b: Vec<u64> = (0..4).map(|_| r.next_u64()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn sibling_addresses_differ() {
        let root = StreamKey::new(1);
        let mut seen = std::collections::HashSet::new();
        for i in 0..10_000u64 {
            assert!(seen.insert(root.child(i).rng().next_u64()));
        }
        assert_ne!(root.child(1).child(2), root.child(2).child(1));
    }

    #[test]
    fn open_unit_mean_and_range() {
        let mut r = StreamKey::new(42).rng();
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = open_unit(&mut r);
            assert!(u > 0.0 && u < 1.0);
            sum += u;
        }
        let mean = sum / n as f64;
        // sd of the mean is 1/sqrt(12 n) ~ 6.5e-4
        assert!((mean - 0.5).abs() < 5.0 * 6.5e-4, "mean {mean}");
    }
}
