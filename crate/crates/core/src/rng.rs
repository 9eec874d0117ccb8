//! Counter-based pseudo-randomness.
//!
//! Every Monte-Carlo draw in the crate is a pure function of
//! `(seed, stream, counter)`, so ensembles can be evaluated in parallel in
//! any order and still reproduce bit-identical results. The mixer is the
//! SplitMix64 finalizer applied to the combined words.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateless splittable generator.
#[derive(Clone, Copy, Debug)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    /// Raw 64 random bits for `(stream, counter)`.
    #[inline]
    pub fn bits(&self, stream: u64, counter: u64) -> u64 {
        let a = mix(self.seed.wrapping_add(GOLDEN).wrapping_add(stream.wrapping_mul(GOLDEN)));
        mix(a ^ counter.wrapping_mul(0xd605_bbb5_8c8a_bc2d).wrapping_add(GOLDEN))
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn uniform(&self, stream: u64, counter: u64) -> f64 {
        (self.bits(stream, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&self, stream: u64, counter: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform(stream, counter)
    }
}
