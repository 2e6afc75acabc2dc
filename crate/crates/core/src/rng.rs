//! Deterministic random number generation.
//!
//! Every stochastic step in the pipeline (consensus sampling, pose jitter,
//! scene synthesis) draws from this one generator so that a seed fully
//! determines the output, bit for bit, across platforms. The core is
//! SplitMix64 (Steele, Lea, Flood 2014): a 64-bit counter stirred by a
//! fixed finalizer. It is not cryptographic; it is small, fast, and has
//! no bad seeds, which is all the pipeline needs.

/// SplitMix64 stream with helpers for the distributions used here.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Next raw 64-bit draw.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, n). `n` must be positive; the tiny modulo bias
    /// (< 2^-40 for n below a trillion) is irrelevant at pipeline scales.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via the Box-Muller transform. Consumes exactly
    /// two raw draws per call and discards the paired variate, keeping the
    /// draw count (and so the stream) independent of call interleaving.
    pub fn next_gaussian(&mut self) -> f64 {
        // u1 in (0, 1] so the logarithm is finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
