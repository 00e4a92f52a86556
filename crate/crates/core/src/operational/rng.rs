/// A counter-based random stream: draw `k` of stream `seed` is a pure
/// function of `(seed, k)`, so any run's randomness can be reproduced
/// without replaying the runs before it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub counter: u64,
}

/// Draws reserved per run; run `i` starts at counter `i << RUN_SPACING_BITS`.
pub const RUN_SPACING_BITS: u32 = 40;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, counter: u64) -> RngStream {
        RngStream { seed, counter }
    }

    /// The stream owned by run `index` of an estimate.
    pub fn for_run(seed: u64, index: u64) -> RngStream {
        RngStream::new(seed, index << RUN_SPACING_BITS)
    }

    /// The raw 64-bit word at the current counter, without advancing.
    pub fn peek_u64(&self) -> u64 {
        let key = mix64(self.seed ^ GOLDEN);
        mix64(key ^ mix64(self.counter.wrapping_mul(GOLDEN).wrapping_add(key)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let z = self.peek_u64();
        self.counter = self.counter.wrapping_add(1);
        z
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_in_seed_and_counter() {
        let a = RngStream::new(7, 123).uniform();
        let b = RngStream::new(7, 123).uniform();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, RngStream::new(8, 123).uniform());
        assert_ne!(a, RngStream::new(7, 124).uniform());
    }

    #[test]
    fn unit_interval_and_roughly_uniform() {
        let mut r = RngStream::new(1, 0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut below_quarter = 0;
        for _ in 0..n {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
            below_quarter += (u < 0.25) as usize;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.01);
        assert!((below_quarter as f64 / n as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn run_streams_are_spaced() {
        assert_eq!(RngStream::for_run(3, 2).counter, 2 << 40);
    }
}
