//! Counter-based pseudo-random number generation.
//!
//! Everything stochastic in this crate (synthetic data, weight init,
//! dropout masks) draws from SplitMix64 streams so that runs are
//! bit-reproducible across platforms. Streams are derived from a base
//! seed and a purpose tag, so consumers of one stream cannot perturb
//! another.

/// SplitMix64: state advances by a fixed odd constant, output is a
/// finalizer mix of the state. Reference: Steele, Lea & Flood (2014).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output finalizer, usable on its own as a 64-bit mixer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Purpose tags for deriving independent streams from one base seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Data,
    Init,
    Dropout,
    Shuffle,
    Test,
}

impl Stream {
    fn salt(self) -> u64 {
        match self {
            Stream::Data => 0x9068_4361_9F1F_0C6B,
            Stream::Init => 0x52B4_91A2_7D53_C1E5,
            Stream::Dropout => 0xD0C3_27F5_A8E4_9B17,
            Stream::Shuffle => 0x3C79_AC49_2C1B_3C57,
            Stream::Test => 0xE7F0_6A5B_89D2_4F0D,
        }
    }
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derive the stream for `purpose` from a base seed. An extra `index`
    /// separates per-record or per-epoch substreams.
    pub fn stream(seed: u64, purpose: Stream, index: u64) -> Self {
        let s = mix64(seed ^ purpose.salt()) ^ mix64(index.wrapping_mul(GOLDEN_GAMMA) ^ purpose.salt());
        Self::new(s)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn next_bool(&mut self, p_true: f64) -> bool {
        self.next_f64() < p_true
    }

    /// Uniform integer in [0, n). Rejection-free modulo is fine here:
    /// n is always tiny compared to 2^64, so the bias is negligible for
    /// data synthesis, but we still use Lemire-style rejection to keep
    /// draws exact.
    pub fn next_usize(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return (r % n) as usize;
            }
        }
    }

    /// Standard normal via Box-Muller. Two uniforms per draw; the spare
    /// sine branch is discarded so the draw count stays predictable.
    pub fn next_normal(&mut self) -> f64 {
        let mut u1 = self.next_f64();
        if u1 == 0.0 {
            u1 = f64::MIN_POSITIVE;
        }
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_usize(i + 1);
            items.swap(i, j);
        }
    }
}
